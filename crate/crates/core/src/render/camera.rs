use glam::DVec3;

use super::RenderError;

/// Pinhole camera looking along its `forward` axis.
///
/// The view transform is right-handed with the camera looking down −Z and
/// +Y up; `z_view` below is the distance along `forward` (positive in front
/// of the camera). Pixel (0, 0) is the top-left corner of the image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PinholeCamera {
    eye: DVec3,
    right: DVec3,
    up: DVec3,
    forward: DVec3,
    vertical_fov_deg: f64,
    width: u32,
    height: u32,
    near: f64,
    far: f64,
    focal_px: f64,
}

/// A point that lands on the image inside the clip range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub x: u32,
    pub y: u32,
    pub z_view: f64,
}

impl PinholeCamera {
    #[allow(clippy::too_many_arguments)]
    pub fn look_at(
        eye: DVec3,
        target: DVec3,
        up: DVec3,
        vertical_fov_deg: f64,
        width: u32,
        height: u32,
        near: f64,
        far: f64,
    ) -> Result<Self, RenderError> {
        if !(near > 0.0 && far > near) {
            return Err(RenderError::Camera(format!("clip range must satisfy 0 < near < far, got {near}..{far}")));
        }
        if !(vertical_fov_deg > 0.0 && vertical_fov_deg < 180.0) {
            return Err(RenderError::Camera(format!("vertical fov {vertical_fov_deg} outside (0, 180)")));
        }
        if width == 0 || height == 0 {
            return Err(RenderError::Camera("image dimensions must be positive".into()));
        }
        let forward = (target - eye).normalize_or_zero();
        let right = forward.cross(up).normalize_or_zero();
        if forward == DVec3::ZERO || right == DVec3::ZERO {
            return Err(RenderError::Camera("degenerate view: target equals eye or up is parallel to view".into()));
        }
        let up = right.cross(forward);
        let focal_px = (height as f64 / 2.0) / (vertical_fov_deg.to_radians() / 2.0).tan();
        Ok(Self { eye, right, up, forward, vertical_fov_deg, width, height, near, far, focal_px })
    }

    pub fn from_config(config: &crate::scene::CameraConfig, near: f64, far: f64) -> Result<Self, RenderError> {
        Self::look_at(config.position, config.look_at, config.up, config.vertical_fov, config.image_width, config.image_height, near, far)
    }

    /// Same orientation, eye moved by `offset` meters along the right axis.
    pub fn shifted_right(&self, offset: f64) -> Self {
        Self { eye: self.eye + self.right * offset, ..*self }
    }

    pub fn with_resolution(&self, width: u32, height: u32) -> Self {
        let focal_px = (height as f64 / 2.0) / (self.vertical_fov_deg.to_radians() / 2.0).tan();
        Self { width, height, focal_px, ..*self }
    }

    pub fn eye(&self) -> DVec3 {
        self.eye
    }
    pub fn forward(&self) -> DVec3 {
        self.forward
    }
    pub fn right(&self) -> DVec3 {
        self.right
    }
    pub fn up(&self) -> DVec3 {
        self.up
    }
    pub fn width(&self) -> u32 {
        self.width
    }
    pub fn height(&self) -> u32 {
        self.height
    }
    pub fn near(&self) -> f64 {
        self.near
    }
    pub fn far(&self) -> f64 {
        self.far
    }

    /// `(height / 2) / tan(fov / 2)`.
    pub fn focal_px(&self) -> f64 {
        self.focal_px
    }

    /// Camera-space coordinates `(x right, y up, z_view forward)`.
    pub fn to_view(&self, p: DVec3) -> DVec3 {
        let d = p - self.eye;
        DVec3::new(d.dot(self.right), d.dot(self.up), d.dot(self.forward))
    }

    /// Continuous image coordinates of a camera-space point with `z_view > 0`.
    pub fn view_to_image(&self, v: DVec3) -> (f64, f64) {
        let u = self.focal_px * (v.x / v.z) + self.width as f64 / 2.0;
        let w = -self.focal_px * (v.y / v.z) + self.height as f64 / 2.0;
        (u, w)
    }

    /// Pixel and view depth of `p`, or `None` when it falls outside
    /// `[near, far)` or off the image.
    pub fn project(&self, p: DVec3) -> Option<Projection> {
        let v = self.to_view(p);
        if !(v.z >= self.near && v.z < self.far) {
            return None;
        }
        let (u, w) = self.view_to_image(v);
        let (x, y) = (u.floor(), w.floor());
        if x >= 0.0 && y >= 0.0 && x < self.width as f64 && y < self.height as f64 {
            Some(Projection { x: x as u32, y: y as u32, z_view: v.z })
        } else {
            None
        }
    }
}

/// Linear 8-bit depth: `floor((z - near) / (far - near) * 255)` for depths in
/// `[near, far)`, `None` outside. The result never exceeds 254.
pub fn quantize_depth(z_view: f64, near: f64, far: f64) -> Option<u8> {
    let d01 = (z_view - near) / (far - near);
    if !(0.0..1.0).contains(&d01) {
        return None;
    }
    // d01 < 1 can still round up to 255.0 after the multiply
    Some((d01 * 255.0).floor().min(254.0) as u8)
}
