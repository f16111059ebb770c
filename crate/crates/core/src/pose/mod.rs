//! Rigid instrument poses, timed trajectories and the expert-vs-user pose
//! comparison.
//!
//! Conventions: meters, right-handed frames, quaternions stored `(w, x, y, z)`
//! on disk. The tool axis is the pose's local +Z; the tip sits `tip_length`
//! along it from the pose origin.

mod strj;
mod trajectory;

use glam::{DQuat, DVec3};
use thiserror::Error;

pub use strj::{decode_strj, encode_strj, STRJ_MAGIC};
pub use trajectory::Trajectory;

#[derive(Debug, Error, PartialEq)]
pub enum PoseError {
    #[error("rotation quaternion is not finite or has zero norm: {0:?}")]
    DegenerateRotation(DQuat),
    #[error("translation is not finite: {0:?}")]
    NonFiniteTranslation(DVec3),
    #[error("trajectory needs at least one sample")]
    EmptyTrajectory,
    #[error("timestamps must be strictly increasing (sample {index}: {previous} then {current})")]
    NonMonotonicTimestamps { index: usize, previous: f64, current: f64 },
    #[error("bad magic: expected \"STR1\", found {found:02x?}")]
    BadMagic { found: Vec<u8> },
    #[error("truncated STRJ payload: expected {expected} bytes, got {actual}")]
    Truncated { expected: usize, actual: usize },
    #[error("trailing data after STRJ payload: expected {expected} bytes, got {actual}")]
    TrailingBytes { expected: usize, actual: usize },
    #[error("malformed pose string {input:?}: expected \"tx ty tz qw qx qy qz\"")]
    MalformedPose { input: String },
}

const UNIT_TOLERANCE: f64 = 1e-6;

/// Rotation followed by translation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidPose {
    translation: DVec3,
    rotation: DQuat,
}

impl RigidPose {
    pub const IDENTITY: Self = Self { translation: DVec3::ZERO, rotation: DQuat::IDENTITY };

    /// Quaternions already within 1e-6 of unit length are kept bit-for-bit
    /// so that decoded poses re-encode identically; others are normalized.
    pub fn new(translation: DVec3, rotation: DQuat) -> Result<Self, PoseError> {
        if !translation.is_finite() {
            return Err(PoseError::NonFiniteTranslation(translation));
        }
        let norm = rotation.length();
        if !norm.is_finite() || norm == 0.0 {
            return Err(PoseError::DegenerateRotation(rotation));
        }
        let rotation = if (norm - 1.0).abs() <= UNIT_TOLERANCE { rotation } else { rotation / norm };
        Ok(Self { translation, rotation })
    }

    pub fn from_translation(translation: DVec3) -> Self {
        Self { translation, rotation: DQuat::IDENTITY }
    }

    pub fn from_axis_angle(translation: DVec3, axis: DVec3, angle_rad: f64) -> Self {
        Self { translation, rotation: DQuat::from_axis_angle(axis.normalize(), angle_rad) }
    }

    pub fn translation(&self) -> DVec3 {
        self.translation
    }

    pub fn rotation(&self) -> DQuat {
        self.rotation
    }

    pub fn transform_point(&self, p: DVec3) -> DVec3 {
        self.rotation * p + self.translation
    }

    pub fn transform_vector(&self, v: DVec3) -> DVec3 {
        self.rotation * v
    }

    pub fn inverse(&self) -> Self {
        let rotation = self.rotation.conjugate();
        Self { translation: -(rotation * self.translation), rotation }
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &RigidPose) -> Self {
        Self { translation: self.transform_point(other.translation), rotation: (self.rotation * other.rotation).normalize() }
    }

    /// Local +Z in world coordinates.
    pub fn tool_axis(&self) -> DVec3 {
        self.rotation * DVec3::Z
    }

    pub fn tool_tip(&self, tip_length: f64) -> DVec3 {
        self.translation + tip_length * self.tool_axis()
    }

    /// Parses `"tx ty tz qw qx qy qz"` (whitespace or comma separated).
    pub fn parse(input: &str) -> Result<Self, PoseError> {
        let malformed = || PoseError::MalformedPose { input: input.to_string() };
        let values: Vec<f64> = input
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|_| malformed())?;
        let [tx, ty, tz, qw, qx, qy, qz] = values[..] else {
            return Err(malformed());
        };
        Self::new(DVec3::new(tx, ty, tz), DQuat::from_xyzw(qx, qy, qz, qw)).map_err(|_| malformed())
    }
}

/// Deviation of a user-placed instrument from the expert pose.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct PoseDelta {
    /// Distance between the two tool tips, millimeters.
    pub tip_distance_mm: f64,
    /// Angle between the two tool axes, degrees in [0, 180]. Roll about the
    /// axis does not contribute.
    pub axis_angle_deg: f64,
}

pub fn compare_poses(expert: &RigidPose, user: &RigidPose, tip_length: f64) -> PoseDelta {
    let tip_distance_mm = expert.tool_tip(tip_length).distance(user.tool_tip(tip_length)) * 1000.0;
    let (a, b) = (expert.tool_axis(), user.tool_axis());
    // atan2 form of arccos(a·b): exact zero for parallel axes, well
    // conditioned near 0° and 180°.
    let axis_angle_deg = a.cross(b).length().atan2(a.dot(b).clamp(-1.0, 1.0)).to_degrees();
    PoseDelta { tip_distance_mm, axis_angle_deg }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn identical_poses_have_zero_delta() {
        let p = RigidPose::from_axis_angle(DVec3::new(0.3, -0.2, 1.0), DVec3::new(1.0, 2.0, 3.0), 0.7);
        assert_eq!(compare_poses(&p, &p, 0.15), PoseDelta { tip_distance_mm: 0.0, axis_angle_deg: 0.0 });
    }

    #[test]
    fn quarter_turn_about_x() {
        let expert = RigidPose::IDENTITY;
        let user = RigidPose::from_axis_angle(DVec3::ZERO, DVec3::X, FRAC_PI_2);
        let d = compare_poses(&expert, &user, 0.1);
        // Independent vector oracle: tips at (0,0,0.1) and (0,-0.1,0).
        let oracle = (DVec3::new(0.0, 0.0, 0.1) - DVec3::new(0.0, -0.1, 0.0)).length() * 1000.0;
        assert!((d.tip_distance_mm - oracle).abs() < 1e-9);
        assert!((d.tip_distance_mm - 141.421).abs() < 1e-3);
        assert!((d.axis_angle_deg - 90.0).abs() < 1e-9);
    }

    #[test]
    fn pure_translation() {
        let user = RigidPose::from_translation(DVec3::new(0.005, 0.0, 0.0));
        let d = compare_poses(&RigidPose::IDENTITY, &user, 0.1);
        assert!((d.tip_distance_mm - 5.0).abs() < 1e-9);
        assert_eq!(d.axis_angle_deg, 0.0);
    }

    #[test]
    fn opposite_axes_give_180_degrees() {
        let user = RigidPose::from_axis_angle(DVec3::ZERO, DVec3::Y, PI);
        assert!((compare_poses(&RigidPose::IDENTITY, &user, 0.1).axis_angle_deg - 180.0).abs() < 1e-9);
    }

    #[test]
    fn transform_point_examples() {
        assert_eq!(RigidPose::IDENTITY.transform_point(DVec3::new(1.0, 2.0, 3.0)), DVec3::new(1.0, 2.0, 3.0));
        let rz = RigidPose::from_axis_angle(DVec3::ZERO, DVec3::Z, FRAC_PI_2);
        assert!(rz.transform_point(DVec3::X).abs_diff_eq(DVec3::Y, 1e-12));
    }

    #[test]
    fn new_normalizes_far_from_unit() {
        let p = RigidPose::new(DVec3::ZERO, DQuat::from_xyzw(0.0, 0.0, 0.0, 2.0)).unwrap();
        assert_eq!(p.rotation(), DQuat::IDENTITY);
        assert!(RigidPose::new(DVec3::ZERO, DQuat::from_xyzw(0.0, 0.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn parse_pose_string() {
        let p = RigidPose::parse("0.1 0.2 0.3 1 0 0 0").unwrap();
        assert_eq!(p.translation(), DVec3::new(0.1, 0.2, 0.3));
        assert_eq!(p.rotation(), DQuat::IDENTITY);
        assert!(RigidPose::parse("1 2 3").is_err());
        assert!(RigidPose::parse("a b c d e f g").is_err());
        assert!(RigidPose::parse("0 0 0 0 0 0 0").is_err());
    }

    fn pose() -> impl Strategy<Value = RigidPose> {
        (prop::array::uniform3(-2.0f64..2.0), prop::array::uniform3(-1.0f64..1.0), -PI..PI).prop_map(|(t, axis, angle)| {
            let axis = DVec3::from(axis);
            let axis = if axis.length() < 1e-3 { DVec3::Z } else { axis };
            RigidPose::from_axis_angle(DVec3::from(t), axis, angle)
        })
    }

    proptest! {
        #[test]
        fn inverse_undoes_transform(p in pose(), x in prop::array::uniform3(-5.0f64..5.0)) {
            let x = DVec3::from(x);
            let back = p.inverse().transform_point(p.transform_point(x));
            prop_assert!(back.abs_diff_eq(x, 1e-6));
        }

        #[test]
        fn compare_is_symmetric_and_isometry_invariant(a in pose(), b in pose(), g in pose(), tip in 0.01f64..0.5) {
            let d = compare_poses(&a, &b, tip);
            let r = compare_poses(&b, &a, tip);
            prop_assert!((d.tip_distance_mm - r.tip_distance_mm).abs() < 1e-9);
            prop_assert!((d.axis_angle_deg - r.axis_angle_deg).abs() < 1e-9);
            let moved = compare_poses(&g.compose(&a), &g.compose(&b), tip);
            prop_assert!((d.tip_distance_mm - moved.tip_distance_mm).abs() < 1e-6);
            prop_assert!((d.axis_angle_deg - moved.axis_angle_deg).abs() < 1e-5);
        }

        #[test]
        fn roll_about_tool_axis_does_not_change_axis_angle(a in pose(), b in pose(), roll in -PI..PI) {
            let rolled = RigidPose::new(b.translation(), b.rotation() * DQuat::from_rotation_z(roll)).unwrap();
            let d0 = compare_poses(&a, &b, 0.1);
            let d1 = compare_poses(&a, &rolled, 0.1);
            prop_assert!((d0.axis_angle_deg - d1.axis_angle_deg).abs() < 1e-6);
            prop_assert!((d0.tip_distance_mm - d1.tip_distance_mm).abs() < 1e-6);
        }
    }
}
