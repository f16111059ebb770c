//! Packed 32-bit depth/color point splatting.
//!
//! Every pixel holds one `u32`: the 8-bit linear depth in the most
//! significant byte and RGB in the three bytes below it. Because depth is the
//! leading byte, the integer minimum of two packed values is the nearer
//! point, and equal depths fall back to a fixed order on the color bits. The
//! reduction is order independent, so points may be splatted from any number
//! of threads with `fetch_min` and the buffer ends up bit-identical.

use std::sync::atomic::{AtomicU32, Ordering};

use glam::Vec3;

use super::camera::{quantize_depth, PinholeCamera};
use crate::pointcloud::PointCloudFrame;

/// Value of a cell no point has reached. Unreachable by `pack` since depth
/// bytes stop at 254.
pub const EMPTY_CELL: u32 = 0xFFFF_FFFF;

pub fn pack(depth: u8, [r, g, b]: [u8; 3]) -> u32 {
    (depth as u32) << 24 | (r as u32) << 16 | (g as u32) << 8 | b as u32
}

pub fn unpack(cell: u32) -> (u8, [u8; 3]) {
    ((cell >> 24) as u8, [(cell >> 16) as u8, (cell >> 8) as u8, cell as u8])
}

/// Packed value of one point as seen by `camera`: its pixel index and the
/// packed cell, or `None` if it is clipped.
pub fn packed_sample(camera: &PinholeCamera, position: Vec3, color: [u8; 3]) -> Option<(usize, u32)> {
    let p = camera.project(position.as_dvec3())?;
    let depth = quantize_depth(p.z_view, camera.near(), camera.far())?;
    Some((p.y as usize * camera.width() as usize + p.x as usize, pack(depth, color)))
}

/// One eye's point buffer, initialized to [`EMPTY_CELL`].
pub struct PackedFramebuffer {
    width: u32,
    height: u32,
    cells: Vec<AtomicU32>,
}

impl PackedFramebuffer {
    pub fn new(width: u32, height: u32) -> Self {
        let cells = (0..width as usize * height as usize).map(|_| AtomicU32::new(EMPTY_CELL)).collect();
        Self { width, height, cells }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn clear(&mut self) {
        for c in &mut self.cells {
            *c.get_mut() = EMPTY_CELL;
        }
    }

    pub fn get(&self, x: u32, y: u32) -> u32 {
        self.cells[y as usize * self.width as usize + x as usize].load(Ordering::Relaxed)
    }

    /// Snapshot of all cells, row-major.
    pub fn to_vec(&self) -> Vec<u32> {
        self.cells.iter().map(|c| c.load(Ordering::Relaxed)).collect()
    }

    /// Atomic minimum merge of one point; callable concurrently.
    pub fn splat(&self, camera: &PinholeCamera, position: Vec3, color: [u8; 3]) {
        if let Some((index, value)) = packed_sample(camera, position, color) {
            self.cells[index].fetch_min(value, Ordering::Relaxed);
        }
    }

    fn check_camera(&self, camera: &PinholeCamera) {
        assert_eq!((self.width, self.height), (camera.width(), camera.height()), "framebuffer and camera dimensions differ");
    }
}

/// Splats every point of `frame` into `fb` on the calling thread.
pub fn splat_points(fb: &mut PackedFramebuffer, camera: &PinholeCamera, frame: &PointCloudFrame) {
    fb.check_camera(camera);
    for (p, c) in frame.points() {
        if let Some((index, value)) = packed_sample(camera, p, c) {
            let cell = fb.cells[index].get_mut();
            *cell = (*cell).min(value);
        }
    }
}

/// Splats `frame` with `workers` threads, each taking a contiguous chunk of
/// points. The result is identical to [`splat_points`] for any worker count.
pub fn splat_points_parallel(fb: &PackedFramebuffer, camera: &PinholeCamera, frame: &PointCloudFrame, workers: usize) {
    fb.check_camera(camera);
    let workers = workers.max(1);
    let positions = frame.positions();
    let colors = frame.colors();
    let chunk = positions.len().div_ceil(workers).max(1);
    std::thread::scope(|s| {
        for (ps, cs) in positions.chunks(chunk).zip(colors.chunks(chunk)) {
            s.spawn(move || {
                for (p, c) in ps.iter().zip(cs) {
                    fb.splat(camera, *p, *c);
                }
            });
        }
    });
}
