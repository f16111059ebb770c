use glam::DQuat;

use super::{PoseError, RigidPose};

/// Timestamped instrument poses with strictly increasing timestamps.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    samples: Vec<(f64, RigidPose)>,
}

impl Trajectory {
    pub fn new(samples: Vec<(f64, RigidPose)>) -> Result<Self, PoseError> {
        if samples.is_empty() {
            return Err(PoseError::EmptyTrajectory);
        }
        for (index, pair) in samples.windows(2).enumerate() {
            let (previous, current) = (pair[0].0, pair[1].0);
            // written as a negation so NaN timestamps are rejected too
            if current.partial_cmp(&previous) != Some(std::cmp::Ordering::Greater) {
                return Err(PoseError::NonMonotonicTimestamps { index: index + 1, previous, current });
            }
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[(f64, RigidPose)] {
        &self.samples
    }

    pub fn start_time(&self) -> f64 {
        self.samples[0].0
    }

    pub fn end_time(&self) -> f64 {
        self.samples[self.samples.len() - 1].0
    }

    /// Pose at `time`. Outside the sampled range the nearest endpoint pose is
    /// returned; between samples the translation is interpolated linearly and
    /// the rotation along the shortest arc.
    pub fn sample_pose(&self, time: f64) -> RigidPose {
        let after = self.samples.partition_point(|(t, _)| *t <= time);
        if after == 0 {
            return self.samples[0].1;
        }
        let (t0, p0) = self.samples[after - 1];
        if after == self.samples.len() || t0 == time {
            return p0;
        }
        let (t1, p1) = self.samples[after];
        let u = (time - t0) / (t1 - t0);
        RigidPose { translation: p0.translation.lerp(p1.translation, u), rotation: slerp_shortest(p0.rotation, p1.rotation, u) }
    }
}

/// Spherical interpolation along the shorter of the two arcs between `a`
/// and `b` (antipodal representations are reconciled by flipping `b`).
pub(crate) fn slerp_shortest(a: DQuat, b: DQuat, u: f64) -> DQuat {
    let mut dot = a.dot(b);
    let b = if dot < 0.0 {
        dot = -dot;
        -b
    } else {
        b
    };
    if dot > 0.9995 {
        return a.lerp(b, u).normalize();
    }
    let theta = dot.min(1.0).acos();
    let sin_theta = theta.sin();
    let wa = ((1.0 - u) * theta).sin() / sin_theta;
    let wb = (u * theta).sin() / sin_theta;
    (a * wa + b * wb).normalize()
}

#[cfg(test)]
mod tests {
    use super::*;
    use glam::DVec3;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn quarter_turn_pair() -> Trajectory {
        Trajectory::new(vec![(0.0, RigidPose::IDENTITY), (1.0, RigidPose::from_axis_angle(DVec3::new(1.0, 2.0, 0.0), DVec3::Z, FRAC_PI_2))])
            .unwrap()
    }

    fn angle_about_z(p: &RigidPose) -> f64 {
        let x = p.transform_vector(DVec3::X);
        x.y.atan2(x.x).to_degrees()
    }

    #[test]
    fn midpoint_is_half_rotation() {
        let p = quarter_turn_pair().sample_pose(0.5);
        assert!((angle_about_z(&p) - 45.0).abs() < 1e-9);
        assert!(p.translation().abs_diff_eq(DVec3::new(0.5, 1.0, 0.0), 1e-12));
    }

    #[test]
    fn clamps_outside_range() {
        let t = quarter_turn_pair();
        assert_eq!(t.sample_pose(-5.0), t.samples()[0].1);
        assert_eq!(t.sample_pose(7.0), t.samples()[1].1);
    }

    #[test]
    fn quarter_point_matches_dense_oracle() {
        // Oracle: compose 1000 equal sub-rotations of 90°/1000 about Z and
        // read off the accumulated rotation after 250 of them.
        let step = DQuat::from_rotation_z(FRAC_PI_2 / 1000.0);
        let oracle = (0..250).fold(DQuat::IDENTITY, |q, _| step * q);
        let p = quarter_turn_pair().sample_pose(0.25);
        assert!(p.rotation().dot(oracle).abs() > 1.0 - 1e-12);
        assert!((angle_about_z(&p) - 22.5).abs() < 1e-9);
    }

    #[test]
    fn antipodal_sample_takes_short_arc() {
        let far = DQuat::from_rotation_z(FRAC_PI_2);
        let t = Trajectory::new(vec![(0.0, RigidPose::IDENTITY), (1.0, RigidPose::new(DVec3::ZERO, -far).unwrap())]).unwrap();
        assert!((angle_about_z(&t.sample_pose(0.5)) - 45.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_repeated_timestamps() {
        let err = Trajectory::new(vec![(0.0, RigidPose::IDENTITY), (0.0, RigidPose::IDENTITY)]).unwrap_err();
        assert!(err.to_string().contains("timestamps must be strictly increasing"));
        assert_eq!(Trajectory::new(vec![]).unwrap_err(), PoseError::EmptyTrajectory);
    }

    fn random_trajectory() -> impl Strategy<Value = Trajectory> {
        prop::collection::vec((0.01f64..1.0, prop::array::uniform3(-1.0f64..1.0), prop::array::uniform4(-1.0f64..1.0)), 2..12)
            .prop_filter_map("degenerate quaternion", |raw| {
                let mut t = 0.0;
                let mut samples = Vec::new();
                for (dt, tr, q) in raw {
                    t += dt;
                    let pose = RigidPose::new(DVec3::from(tr), DQuat::from_array(q)).ok()?;
                    if DQuat::from_array(q).length() < 0.1 {
                        return None;
                    }
                    samples.push((t, pose));
                }
                Trajectory::new(samples).ok()
            })
    }

    proptest! {
        #[test]
        fn continuous_at_sample_boundaries(t in random_trajectory(), x in prop::array::uniform3(-1.0f64..1.0)) {
            let x = DVec3::from(x);
            for (ts, _) in t.samples() {
                let a = t.sample_pose(*ts - 1e-6).transform_point(x);
                let b = t.sample_pose(*ts + 1e-6).transform_point(x);
                // bounded by the angular/linear velocity of the segments
                prop_assert!(a.distance(b) < 1e-3, "jump {} at t={}", a.distance(b), ts);
            }
        }

        #[test]
        fn quaternion_sign_does_not_change_action(t in random_trajectory(), flip in 0usize..12, q in 0.0f64..1.0, x in prop::array::uniform3(-1.0f64..1.0)) {
            let flip = flip % t.samples().len();
            let mut flipped = t.samples().to_vec();
            let (ts, p) = flipped[flip];
            flipped[flip] = (ts, RigidPose::new(p.translation(), -p.rotation()).unwrap());
            let flipped = Trajectory::new(flipped).unwrap();
            let time = t.start_time() + q * (t.end_time() - t.start_time());
            let x = DVec3::from(x);
            let a = t.sample_pose(time).transform_point(x);
            let b = flipped.sample_pose(time).transform_point(x);
            prop_assert!(a.abs_diff_eq(b, 1e-9));
        }

        #[test]
        fn half_turn_interpolates_without_nan(angle in 0.0f64..PI) {
            let t = Trajectory::new(vec![
                (0.0, RigidPose::IDENTITY),
                (1.0, RigidPose::from_axis_angle(DVec3::ZERO, DVec3::X, angle)),
            ]).unwrap();
            prop_assert!(t.sample_pose(0.5).rotation().is_finite());
        }
    }
}
