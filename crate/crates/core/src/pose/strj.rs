//! STRJ trajectory files.
//!
//! ```text
//! magic "STR1" | count u32 LE | count x (timestamp f64, tx ty tz f32, qw qx qy qz f32), all LE
//! ```

use glam::{DQuat, DVec3};

use super::{PoseError, RigidPose, Trajectory};

pub const STRJ_MAGIC: [u8; 4] = *b"STR1";
const HEADER_LEN: usize = 8;
const SAMPLE_LEN: usize = 8 + 3 * 4 + 4 * 4;

pub fn encode_strj(trajectory: &Trajectory) -> Vec<u8> {
    let samples = trajectory.samples();
    let mut out = Vec::with_capacity(HEADER_LEN + SAMPLE_LEN * samples.len());
    out.extend_from_slice(&STRJ_MAGIC);
    out.extend_from_slice(&(samples.len() as u32).to_le_bytes());
    for (t, pose) in samples {
        out.extend_from_slice(&t.to_le_bytes());
        let tr = pose.translation();
        let q = pose.rotation();
        for v in [tr.x, tr.y, tr.z, q.w, q.x, q.y, q.z] {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    out
}

pub fn decode_strj(bytes: &[u8]) -> Result<Trajectory, PoseError> {
    if bytes.len() < 4 || bytes[..4] != STRJ_MAGIC {
        return Err(PoseError::BadMagic { found: bytes[..bytes.len().min(4)].to_vec() });
    }
    if bytes.len() < HEADER_LEN {
        return Err(PoseError::Truncated { expected: HEADER_LEN, actual: bytes.len() });
    }
    let n = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let expected = HEADER_LEN + SAMPLE_LEN * n;
    if bytes.len() < expected {
        return Err(PoseError::Truncated { expected, actual: bytes.len() });
    }
    if bytes.len() > expected {
        return Err(PoseError::TrailingBytes { expected, actual: bytes.len() });
    }

    let samples = bytes[HEADER_LEN..]
        .chunks_exact(SAMPLE_LEN)
        .map(|s| {
            let t = f64::from_le_bytes(s[..8].try_into().unwrap());
            let f = |i: usize| f32::from_le_bytes(s[8 + 4 * i..12 + 4 * i].try_into().unwrap()) as f64;
            let pose = RigidPose::new(DVec3::new(f(0), f(1), f(2)), DQuat::from_xyzw(f(4), f(5), f(6), f(3)))?;
            Ok((t, pose))
        })
        .collect::<Result<Vec<_>, PoseError>>()?;
    Trajectory::new(samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_identity_sample_is_44_bytes() {
        let t = Trajectory::new(vec![(0.0, RigidPose::IDENTITY)]).unwrap();
        let bytes = encode_strj(&t);
        assert_eq!(bytes.len(), 44);
        assert_eq!(&bytes[..4], b"STR1");
        assert_eq!(decode_strj(&bytes).unwrap(), t);
    }

    #[test]
    fn repeated_timestamps_are_rejected() {
        let mut bytes = encode_strj(&Trajectory::new(vec![(0.0, RigidPose::IDENTITY)]).unwrap());
        bytes[4] = 2;
        let sample = bytes[8..44].to_vec();
        bytes.extend_from_slice(&sample);
        let err = decode_strj(&bytes).unwrap_err();
        assert!(err.to_string().starts_with("timestamps must be strictly increasing"), "{err}");
    }

    #[test]
    fn corrupted_inputs() {
        let bytes = encode_strj(&Trajectory::new(vec![(0.0, RigidPose::IDENTITY)]).unwrap());
        let mut bad = bytes.clone();
        bad[1] = b'X';
        assert!(matches!(decode_strj(&bad), Err(PoseError::BadMagic { .. })));
        assert_eq!(decode_strj(&bytes[..43]).unwrap_err(), PoseError::Truncated { expected: 44, actual: 43 });
        assert_eq!(decode_strj(&bytes[..6]).unwrap_err(), PoseError::Truncated { expected: 8, actual: 6 });
    }

    #[test]
    fn random_trajectory_reencodes_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut t = 0.0;
        let samples = (0..50)
            .map(|_| {
                t += rng.random_range(0.001..0.1);
                let q = DQuat::from_xyzw(rng.random(), rng.random(), rng.random(), rng.random_range(0.1..1.0));
                let tr = DVec3::new(rng.random(), rng.random(), rng.random());
                (t, RigidPose::new(tr, q).unwrap())
            })
            .collect();
        let bytes = encode_strj(&Trajectory::new(samples).unwrap());
        let decoded = decode_strj(&bytes).unwrap();
        assert_eq!(encode_strj(&decoded), bytes);
    }
}
