use std::collections::BTreeMap;

use glam::{DVec3, Vec3};

use super::{Aabb, PointCloudFrame};

/// Regular voxel grid anchored at `origin`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoxelGridParams {
    pub origin: Vec3,
    pub voxel_size: f32,
}

impl VoxelGridParams {
    /// Returns `None` unless `voxel_size` is positive and finite.
    pub fn new(origin: Vec3, voxel_size: f32) -> Option<Self> {
        (voxel_size > 0.0 && voxel_size.is_finite()).then_some(Self { origin, voxel_size })
    }

    /// Voxel coordinates of `p`, `floor((p - origin) / voxel_size)` per axis.
    pub fn voxel_of(&self, p: Vec3) -> [i64; 3] {
        let rel = (p.as_dvec3() - self.origin.as_dvec3()) / self.voxel_size as f64;
        [rel.x.floor() as i64, rel.y.floor() as i64, rel.z.floor() as i64]
    }
}

/// Keeps exactly the points inside `bbox` (closed on every face). The
/// output frame's bbox is `bbox` itself.
pub fn crop_aabb(frame: &PointCloudFrame, bbox: &Aabb) -> PointCloudFrame {
    let (positions, colors) = frame.points().filter(|(p, _)| bbox.contains(*p)).unzip();
    PointCloudFrame::from_parts_unchecked(*bbox, positions, colors)
}

#[derive(Default)]
struct VoxelAccumulator {
    count: u64,
    sum: DVec3,
    lo: Vec3,
    hi: Vec3,
    color_sum: [u64; 3],
}

impl VoxelAccumulator {
    fn add(&mut self, p: Vec3, c: [u8; 3]) {
        if self.count == 0 {
            self.lo = p;
            self.hi = p;
        } else {
            self.lo = self.lo.min(p);
            self.hi = self.hi.max(p);
        }
        self.count += 1;
        self.sum += p.as_dvec3();
        for (s, v) in self.color_sum.iter_mut().zip(c) {
            *s += v as u64;
        }
    }

    fn centroid(&self) -> Vec3 {
        // Clamping to the members' range keeps the rounded centroid in the
        // same voxel, which makes a second pass over the output an identity.
        (self.sum / self.count as f64).as_vec3().clamp(self.lo, self.hi)
    }

    fn mean_color(&self) -> [u8; 3] {
        // floor(sum / n + 1/2), i.e. the mean rounded half-up.
        let n = self.count;
        self.color_sum.map(|s| ((2 * s + n) / (2 * n)) as u8)
    }
}

/// Replaces the points of every occupied voxel by their centroid, colored
/// with the per-channel mean (rounded half-up).
///
/// Output is ordered by ascending voxel index with z the most significant
/// axis, then y, then x. The bbox of the input frame is kept.
pub fn voxel_downsample(frame: &PointCloudFrame, params: &VoxelGridParams) -> PointCloudFrame {
    let mut voxels: BTreeMap<[i64; 3], VoxelAccumulator> = BTreeMap::new();
    for (p, c) in frame.points() {
        let [x, y, z] = params.voxel_of(p);
        voxels.entry([z, y, x]).or_default().add(p, c);
    }
    let (positions, colors) = voxels.values().map(|v| (v.centroid(), v.mean_color())).unzip();
    PointCloudFrame::from_parts_unchecked(*frame.bbox(), positions, colors)
}
