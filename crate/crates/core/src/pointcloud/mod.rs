//! Point-cloud frames: ingestion, working-volume cropping, voxel-grid
//! downsampling and the SPCF storage format.

mod filter;
mod ply;
mod spcf;

use glam::Vec3;
use thiserror::Error;

pub use filter::{crop_aabb, voxel_downsample, VoxelGridParams};
pub use ply::import_ply;
pub use spcf::{decode_spcf, encode_spcf, SPCF_HEADER_LEN, SPCF_MAGIC};

#[derive(Debug, Error, PartialEq)]
pub enum PointCloudError {
    #[error("unsupported encoding: {0}")]
    UnsupportedEncoding(String),
    #[error("malformed PLY: {0}")]
    MalformedPly(String),
    #[error("missing required property `{0}` on element `vertex`")]
    MissingProperty(&'static str),
    #[error("bad magic: expected \"SPC1\", found {found:02x?}")]
    BadMagic { found: Vec<u8> },
    #[error("truncated SPCF payload: expected {expected} bytes, got {actual}")]
    Truncated { expected: usize, actual: usize },
    #[error("trailing data after SPCF payload: expected {expected} bytes, got {actual}")]
    TrailingBytes { expected: usize, actual: usize },
    #[error("invalid bounding box: min {min:?} exceeds max {max:?}")]
    InvalidBounds { min: Vec3, max: Vec3 },
    #[error("{positions} positions but {colors} colors")]
    LengthMismatch { positions: usize, colors: usize },
    #[error("point {index} at {position:?} lies outside the frame bounds")]
    PointOutsideBounds { index: usize, position: Vec3 },
}

/// Axis-aligned box, closed on every face.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn new(min: Vec3, max: Vec3) -> Result<Self, PointCloudError> {
        if min.cmple(max).all() {
            Ok(Self { min, max })
        } else {
            Err(PointCloudError::InvalidBounds { min, max })
        }
    }

    /// Degenerate box at a single point.
    pub fn point(p: Vec3) -> Self {
        Self { min: p, max: p }
    }

    /// Tight bounds of `points`; the degenerate box at the origin when empty.
    pub fn enclosing(points: &[Vec3]) -> Self {
        let Some(first) = points.first() else {
            return Self::point(Vec3::ZERO);
        };
        points.iter().fold(Self::point(*first), |b, p| Self { min: b.min.min(*p), max: b.max.max(*p) })
    }

    pub fn contains(&self, p: Vec3) -> bool {
        p.cmpge(self.min).all() && p.cmple(self.max).all()
    }

    pub fn extent(&self) -> Vec3 {
        self.max - self.min
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    pub fn union(&self, other: &Aabb) -> Aabb {
        Aabb { min: self.min.min(other.min), max: self.max.max(other.max) }
    }
}

/// One animation frame of the dynamic entity.
///
/// Positions and colors are parallel arrays; every position lies inside
/// `bbox`. Colors carry one byte per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloudFrame {
    bbox: Aabb,
    positions: Vec<Vec3>,
    colors: Vec<[u8; 3]>,
}

impl PointCloudFrame {
    pub fn new(bbox: Aabb, positions: Vec<Vec3>, colors: Vec<[u8; 3]>) -> Result<Self, PointCloudError> {
        if positions.len() != colors.len() {
            return Err(PointCloudError::LengthMismatch { positions: positions.len(), colors: colors.len() });
        }
        if let Some((index, &position)) = positions.iter().enumerate().find(|(_, p)| !bbox.contains(**p)) {
            return Err(PointCloudError::PointOutsideBounds { index, position });
        }
        Ok(Self { bbox, positions, colors })
    }

    /// Frame whose bbox is the tight bounds of its points.
    pub fn from_points(positions: Vec<Vec3>, colors: Vec<[u8; 3]>) -> Result<Self, PointCloudError> {
        let bbox = Aabb::enclosing(&positions);
        Self::new(bbox, positions, colors)
    }

    pub fn empty() -> Self {
        Self { bbox: Aabb::point(Vec3::ZERO), positions: Vec::new(), colors: Vec::new() }
    }

    pub(crate) fn from_parts_unchecked(bbox: Aabb, positions: Vec<Vec3>, colors: Vec<[u8; 3]>) -> Self {
        debug_assert_eq!(positions.len(), colors.len());
        Self { bbox, positions, colors }
    }

    pub fn bbox(&self) -> &Aabb {
        &self.bbox
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }

    pub fn colors(&self) -> &[[u8; 3]] {
        &self.colors
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn points(&self) -> impl Iterator<Item = (Vec3, [u8; 3])> + '_ {
        self.positions.iter().copied().zip(self.colors.iter().copied())
    }
}
