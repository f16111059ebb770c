//! Deterministic CPU renderer.
//!
//! Per eye: rasterize the rigid geometry into [`GeometryBuffers`], splat the
//! point cloud into a [`PackedFramebuffer`] by integer minimum, then
//! [`resolve`] the points over the geometry. Stereo output places the left
//! eye in the left half of a side-by-side image.

mod camera;
mod mesh;
mod packed;
mod raster;

use std::io::Write;

use thiserror::Error;

pub use camera::{quantize_depth, PinholeCamera, Projection};
pub use mesh::{instrument_mesh, TriangleMesh};
pub use packed::{pack, packed_sample, splat_points, splat_points_parallel, unpack, PackedFramebuffer, EMPTY_CELL};
pub use raster::{headlight_shade, rasterize_mesh, shade_color, GeometryBuffers, AMBIENT_FLOOR};

use crate::pointcloud::PointCloudFrame;

#[derive(Debug, Error, PartialEq)]
pub enum RenderError {
    #[error("invalid camera: {0}")]
    Camera(String),
    #[error("invalid mesh: {0}")]
    Mesh(String),
}

/// Clear color of the geometry pass.
pub const BACKGROUND: [u8; 3] = [18, 18, 22];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    pub width: u32,
    pub height: u32,
    /// Row-major, top row first.
    pub pixels: Vec<[u8; 3]>,
}

impl RgbImage {
    pub fn new(width: u32, height: u32, fill: [u8; 3]) -> Self {
        Self { width, height, pixels: vec![fill; width as usize * height as usize] }
    }

    pub fn get(&self, x: u32, y: u32) -> [u8; 3] {
        self.pixels[y as usize * self.width as usize + x as usize]
    }

    /// Left and right images side by side.
    pub fn side_by_side(left: &RgbImage, right: &RgbImage) -> RgbImage {
        assert_eq!(left.height, right.height);
        let width = left.width + right.width;
        let mut pixels = Vec::with_capacity(width as usize * left.height as usize);
        for (l, r) in left.pixels.chunks(left.width as usize).zip(right.pixels.chunks(right.width as usize)) {
            pixels.extend_from_slice(l);
            pixels.extend_from_slice(r);
        }
        RgbImage { width, height: left.height, pixels }
    }

    /// Crops the column range `[x0, x0 + width)`.
    pub fn columns(&self, x0: u32, width: u32) -> RgbImage {
        let pixels = self.pixels.chunks(self.width as usize).flat_map(|row| &row[x0 as usize..(x0 + width) as usize]).copied().collect();
        RgbImage { width, height: self.height, pixels }
    }
}

/// Binary PPM (P6, maxval 255).
pub fn write_ppm(image: &RgbImage) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", image.width, image.height).into_bytes();
    out.reserve(image.pixels.len() * 3);
    for p in &image.pixels {
        out.extend_from_slice(p);
    }
    out
}

pub fn write_ppm_to(image: &RgbImage, mut w: impl Write) -> std::io::Result<()> {
    w.write_all(&write_ppm(image))
}

/// Composites splatted points over the geometry: a point shows where its
/// depth `D / 255` is strictly less than the geometry depth.
pub fn resolve(fb: &PackedFramebuffer, gb: &GeometryBuffers) -> RgbImage {
    assert_eq!((fb.width(), fb.height()), (gb.width, gb.height), "buffer dimensions differ");
    let pixels = fb
        .to_vec()
        .into_iter()
        .zip(gb.color.iter().zip(&gb.depth))
        .map(|(cell, (&color, &depth))| {
            if cell == EMPTY_CELL {
                return color;
            }
            let (d, point_color) = unpack(cell);
            if (d as f32 / 255.0) < depth {
                point_color
            } else {
                color
            }
        })
        .collect();
    RgbImage { width: gb.width, height: gb.height, pixels }
}

/// What to draw in one frame: the visible point cloud (if any) and the
/// visible meshes already placed in world space.
#[derive(Debug, Clone, Copy, Default)]
pub struct FrameContent<'a> {
    pub points: Option<&'a PointCloudFrame>,
    pub meshes: &'a [TriangleMesh],
}

/// Worker threads used for splatting; the output does not depend on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RenderOptions {
    pub splat_workers: usize,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self { splat_workers: 1 }
    }
}

pub fn render_view(camera: &PinholeCamera, content: &FrameContent<'_>, options: &RenderOptions) -> RgbImage {
    let (w, h) = (camera.width(), camera.height());
    let mut gb = GeometryBuffers::new(w, h, BACKGROUND);
    for mesh in content.meshes {
        rasterize_mesh(&mut gb, camera, mesh);
    }
    let mut fb = PackedFramebuffer::new(w, h);
    if let Some(points) = content.points {
        if options.splat_workers > 1 {
            splat_points_parallel(&fb, camera, points, options.splat_workers);
        } else {
            splat_points(&mut fb, camera, points);
        }
    }
    resolve(&fb, &gb)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Eye {
    Mono,
    Left,
    Right,
    Stereo,
}

impl std::str::FromStr for Eye {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mono" => Ok(Self::Mono),
            "left" => Ok(Self::Left),
            "right" => Ok(Self::Right),
            "stereo" => Ok(Self::Stereo),
            other => Err(format!("unknown eye {other:?} (expected mono, left, right or stereo)")),
        }
    }
}

/// Eye camera displaced by half the eye separation along the right axis.
pub fn eye_camera(center: &PinholeCamera, ipd: f64, eye: Eye) -> PinholeCamera {
    match eye {
        Eye::Left => center.shifted_right(-ipd / 2.0),
        Eye::Right => center.shifted_right(ipd / 2.0),
        Eye::Mono | Eye::Stereo => *center,
    }
}

/// Two full passes from the left and right eyes, side by side
/// (`2 * width` by `height`, left eye on the left).
pub fn render_stereo(center: &PinholeCamera, ipd: f64, content: &FrameContent<'_>, options: &RenderOptions) -> RgbImage {
    let left = render_view(&eye_camera(center, ipd, Eye::Left), content, options);
    let right = render_view(&eye_camera(center, ipd, Eye::Right), content, options);
    RgbImage::side_by_side(&left, &right)
}

pub fn render_eye(center: &PinholeCamera, ipd: f64, eye: Eye, content: &FrameContent<'_>, options: &RenderOptions) -> RgbImage {
    match eye {
        Eye::Stereo => render_stereo(center, ipd, content, options),
        _ => render_view(&eye_camera(center, ipd, eye), content, options),
    }
}
