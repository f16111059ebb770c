//! Geometry pass: flat-shaded triangle rasterization into a color buffer and
//! a linear depth buffer.
//!
//! Vertices are snapped to 24.8 fixed point so edge functions are exact
//! integers; together with the top-left fill rule this gives watertight
//! coverage: pixels on an edge shared by two triangles belong to exactly one
//! of them. Depth is interpolated perspective-correctly (through 1/z) and
//! stored linearly as `(z - near) / (far - near)`.

use glam::DVec3;

use super::camera::PinholeCamera;
use super::mesh::TriangleMesh;

const SUBPIXEL_BITS: u32 = 8;
const SUBPIXEL: f64 = (1 << SUBPIXEL_BITS) as f64;
const HALF_PIXEL: i64 = 1 << (SUBPIXEL_BITS - 1);
// Keeps every edge-function product inside i64.
const MAX_COORD: f64 = (1i64 << 30) as f64;

/// Lower bound of the headlight shading factor.
pub const AMBIENT_FLOOR: f64 = 0.2;

/// Rasterized room geometry for one eye. Depth is linear in `[0, 1]`,
/// `1.0` where nothing was drawn.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometryBuffers {
    pub width: u32,
    pub height: u32,
    pub color: Vec<[u8; 3]>,
    pub depth: Vec<f32>,
}

impl GeometryBuffers {
    pub fn new(width: u32, height: u32, clear_color: [u8; 3]) -> Self {
        let n = width as usize * height as usize;
        Self { width, height, color: vec![clear_color; n], depth: vec![1.0; n] }
    }
}

#[derive(Debug, Clone, Copy)]
struct ScreenVertex {
    x: i64,
    y: i64,
    inv_z: f64,
}

fn edge(a: &ScreenVertex, b: &ScreenVertex, px: i64, py: i64) -> i64 {
    (b.x - a.x) * (py - a.y) - (b.y - a.y) * (px - a.x)
}

/// Top or left edge for triangles with positive `edge(v0, v1, v2)` in
/// y-down screen space.
fn is_top_left(a: &ScreenVertex, b: &ScreenVertex) -> bool {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    (dy == 0 && dx > 0) || dy < 0
}

/// Headlight Lambert factor: the light shines along the viewing direction.
/// Two-sided, clamped to `[AMBIENT_FLOOR, 1]`.
pub fn headlight_shade(normal: DVec3, view_dir: DVec3) -> f64 {
    normal.normalize_or_zero().dot(view_dir).abs().clamp(AMBIENT_FLOOR, 1.0)
}

pub fn shade_color(base: [u8; 3], shade: f64) -> [u8; 3] {
    base.map(|c| (c as f64 * shade).round().clamp(0.0, 255.0) as u8)
}

/// Clips a camera-space polygon against `z_view >= near`.
fn clip_near(poly: &[DVec3], near: f64) -> Vec<DVec3> {
    let mut out = Vec::with_capacity(poly.len() + 1);
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        let (ina, inb) = (a.z >= near, b.z >= near);
        if ina {
            out.push(a);
        }
        if ina != inb {
            let t = (near - a.z) / (b.z - a.z);
            let mut p = a.lerp(b, t);
            p.z = near;
            out.push(p);
        }
    }
    out
}

pub fn rasterize_mesh(gb: &mut GeometryBuffers, camera: &PinholeCamera, mesh: &TriangleMesh) {
    assert_eq!((gb.width, gb.height), (camera.width(), camera.height()), "buffer and camera dimensions differ");
    let near = camera.near();
    for tri in &mesh.triangles {
        let [a, b, c] = tri.map(|i| mesh.vertices[i as usize]);
        let normal = (b - a).cross(c - a);
        if normal.length_squared() == 0.0 {
            continue;
        }
        let color = shade_color(mesh.base_color, headlight_shade(normal, camera.forward()));

        let view = [camera.to_view(a), camera.to_view(b), camera.to_view(c)];
        if view.iter().all(|v| v.z >= camera.far()) {
            continue;
        }
        let clipped = clip_near(&view, near);
        if clipped.len() < 3 {
            continue;
        }
        let mut screen = Vec::with_capacity(clipped.len());
        for v in &clipped {
            let (u, w) = camera.view_to_image(*v);
            let (x, y) = ((u * SUBPIXEL).round(), (w * SUBPIXEL).round());
            if !(x.abs() < MAX_COORD && y.abs() < MAX_COORD) {
                screen.clear();
                break;
            }
            screen.push(ScreenVertex { x: x as i64, y: y as i64, inv_z: 1.0 / v.z });
        }
        for k in 1..screen.len().saturating_sub(1) {
            fill_triangle(gb, camera, [screen[0], screen[k], screen[k + 1]], color);
        }
    }
}

fn fill_triangle(gb: &mut GeometryBuffers, camera: &PinholeCamera, v: [ScreenVertex; 3], color: [u8; 3]) {
    let [v0, mut v1, mut v2] = v;
    let mut area = edge(&v0, &v1, v2.x, v2.y);
    if area == 0 {
        return;
    }
    if area < 0 {
        std::mem::swap(&mut v1, &mut v2);
        area = -area;
    }

    let (w, h) = (gb.width as i64, gb.height as i64);
    let min_x = v0.x.min(v1.x).min(v2.x);
    let max_x = v0.x.max(v1.x).max(v2.x);
    let min_y = v0.y.min(v1.y).min(v2.y);
    let max_y = v0.y.max(v1.y).max(v2.y);
    // pixel px covers centers at px * 256 + 128
    let px0 = ((min_x - HALF_PIXEL) >> SUBPIXEL_BITS).max(0);
    let px1 = ((max_x - HALF_PIXEL) >> SUBPIXEL_BITS).min(w - 1);
    let py0 = ((min_y - HALF_PIXEL) >> SUBPIXEL_BITS).max(0);
    let py1 = ((max_y - HALF_PIXEL) >> SUBPIXEL_BITS).min(h - 1);
    if px0 > px1 || py0 > py1 {
        return;
    }

    // Fill-rule bias: a sample exactly on an edge belongs to the triangle
    // only for top or left edges.
    let bias = [is_top_left(&v1, &v2), is_top_left(&v2, &v0), is_top_left(&v0, &v1)].map(|tl| tl as i64);
    let inv_area = 1.0 / area as f64;
    let (near, far) = (camera.near(), camera.far());

    for py in py0..=py1 {
        let sy = (py << SUBPIXEL_BITS) + HALF_PIXEL;
        let row = py as usize * gb.width as usize;
        for px in px0..=px1 {
            let sx = (px << SUBPIXEL_BITS) + HALF_PIXEL;
            let e0 = edge(&v1, &v2, sx, sy);
            let e1 = edge(&v2, &v0, sx, sy);
            let e2 = edge(&v0, &v1, sx, sy);
            if e0 + bias[0] <= 0 || e1 + bias[1] <= 0 || e2 + bias[2] <= 0 {
                continue;
            }
            let inv_z = (e0 as f64 * v0.inv_z + e1 as f64 * v1.inv_z + e2 as f64 * v2.inv_z) * inv_area;
            let z = 1.0 / inv_z;
            let d01 = ((z - near) / (far - near)).max(0.0);
            if d01.is_nan() || d01 >= 1.0 {
                continue;
            }
            let depth = d01 as f32;
            let i = row + px as usize;
            if depth < gb.depth[i] {
                gb.depth[i] = depth;
                gb.color[i] = color;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn camera(w: u32, h: u32) -> PinholeCamera {
        PinholeCamera::look_at(DVec3::ZERO, -DVec3::Z, DVec3::Y, 90.0, w, h, 0.1, 10.1).unwrap()
    }

    /// Quad at depth `z` covering `[-s, s]^2` in view space, split along a
    /// diagonal.
    fn quad(z: f64, s: f64, color: [u8; 3]) -> TriangleMesh {
        TriangleMesh::new(
            vec![DVec3::new(-s, -s, -z), DVec3::new(s, -s, -z), DVec3::new(s, s, -z), DVec3::new(-s, s, -z)],
            vec![[0, 1, 2], [0, 2, 3]],
            color,
        )
        .unwrap()
    }

    #[test]
    fn constant_depth_full_screen_triangle() {
        let cam = camera(32, 32);
        let mut gb = GeometryBuffers::new(32, 32, [0; 3]);
        let mesh = TriangleMesh::new(
            vec![DVec3::new(-10.0, -10.0, -2.0), DVec3::new(30.0, -10.0, -2.0), DVec3::new(-10.0, 30.0, -2.0)],
            vec![[0, 1, 2]],
            [200, 100, 50],
        )
        .unwrap();
        rasterize_mesh(&mut gb, &cam, &mesh);
        let expected = ((2.0 - 0.1) / 10.0) as f32;
        for (d, c) in gb.depth.iter().zip(&gb.color) {
            assert!((d - expected).abs() < 1e-6, "{d}");
            // facing the camera: shade 1
            assert_eq!(*c, [200, 100, 50]);
        }
    }

    #[test]
    fn nearer_triangle_wins_regardless_of_order() {
        let cam = camera(16, 16);
        for flip in [false, true] {
            let mut gb = GeometryBuffers::new(16, 16, [0; 3]);
            let (a, b) = (quad(1.0, 0.5, [255, 0, 0]), quad(2.0, 5.0, [0, 255, 0]));
            if flip {
                rasterize_mesh(&mut gb, &cam, &a);
                rasterize_mesh(&mut gb, &cam, &b);
            } else {
                rasterize_mesh(&mut gb, &cam, &b);
                rasterize_mesh(&mut gb, &cam, &a);
            }
            assert_eq!(gb.color[8 * 16 + 8], [255, 0, 0]);
            assert_eq!(gb.color[0], [0, 255, 0]);
        }
    }

    #[test]
    fn shared_diagonal_is_covered_exactly_once() {
        // Coverage-count oracle: rasterize each triangle of the quad into its
        // own buffer and count how many of them cover each pixel.
        let cam = camera(64, 48);
        let q = quad(1.0, 5.0, [90, 90, 90]);
        let mut counts = vec![0u32; 64 * 48];
        for t in &q.triangles {
            let single = TriangleMesh::new(q.vertices.clone(), vec![*t], q.base_color).unwrap();
            let mut gb = GeometryBuffers::new(64, 48, [0; 3]);
            rasterize_mesh(&mut gb, &cam, &single);
            for (n, d) in counts.iter_mut().zip(&gb.depth) {
                *n += (*d < 1.0) as u32;
            }
        }
        assert!(counts.iter().all(|&n| n == 1), "{counts:?}");
    }

    #[test]
    fn shade_floor_for_grazing_faces() {
        assert_eq!(headlight_shade(DVec3::X, -DVec3::Z), AMBIENT_FLOOR);
        assert_eq!(headlight_shade(DVec3::Z, -DVec3::Z), 1.0);
        assert_eq!(shade_color([100, 200, 255], 0.2), [20, 40, 51]);
    }

    #[test]
    fn triangle_crossing_near_plane_is_clipped() {
        let cam = camera(16, 16);
        let mut gb = GeometryBuffers::new(16, 16, [0; 3]);
        // floor plane running from behind the camera to far in front
        let mesh = TriangleMesh::new(
            vec![DVec3::new(-5.0, -1.0, 5.0), DVec3::new(5.0, -1.0, 5.0), DVec3::new(0.0, -1.0, -9.0)],
            vec![[0, 1, 2]],
            [255; 3],
        )
        .unwrap();
        rasterize_mesh(&mut gb, &cam, &mesh);
        assert!(gb.depth[15 * 16 + 8] < 1.0, "bottom row sees the floor");
        assert_eq!(gb.depth[0], 1.0, "top row sees nothing");
    }
}
