use std::collections::HashMap;

use glam::{DVec3, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use twin_core::render::{
    pack, rasterize_mesh, render_stereo, render_view, splat_points, splat_points_parallel, FrameContent, GeometryBuffers,
    PackedFramebuffer, PinholeCamera, RenderOptions, RgbImage, TriangleMesh, BACKGROUND, EMPTY_CELL,
};
use twin_core::PointCloudFrame;

fn random_camera(rng: &mut ChaCha8Rng, w: u32, h: u32) -> PinholeCamera {
    loop {
        let eye = DVec3::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        let target = DVec3::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5));
        let fov = rng.random_range(30.0..100.0);
        let near = rng.random_range(0.05..0.5);
        let far = near + rng.random_range(1.0..8.0);
        if let Ok(c) = PinholeCamera::look_at(eye, target, DVec3::Y, fov, w, h, near, far) {
            return c;
        }
    }
}

fn random_cloud(rng: &mut ChaCha8Rng, n: usize) -> PointCloudFrame {
    // a coarse lattice forces many points onto shared pixels and depth bytes
    let positions = (0..n)
        .map(|_| {
            Vec3::new(
                rng.random_range(-40..40) as f32 / 40.0,
                rng.random_range(-40..40) as f32 / 40.0,
                rng.random_range(-40..40) as f32 / 40.0,
            )
        })
        .collect();
    let colors = (0..n).map(|_| [rng.random_range(0..4) * 80, rng.random(), rng.random()]).collect();
    PointCloudFrame::from_points(positions, colors).unwrap()
}

/// Per-pixel brute force: bucket every visible point by pixel, keep the
/// lexicographically smallest (depth, r, g, b), then composite over `gb`.
fn oracle_image(cam: &PinholeCamera, cloud: &PointCloudFrame, gb: &GeometryBuffers) -> RgbImage {
    let (w, h) = (cam.width() as usize, cam.height() as usize);
    let mut buckets: HashMap<usize, Vec<(u8, [u8; 3])>> = HashMap::new();
    for (p, c) in cloud.points() {
        let d = p.as_dvec3() - cam.eye();
        let (x, y, z) = (d.dot(cam.right()), d.dot(cam.up()), d.dot(cam.forward()));
        let d01 = (z - cam.near()) / (cam.far() - cam.near());
        if !(0.0..1.0).contains(&d01) {
            continue;
        }
        let u = (cam.focal_px() * (x / z) + w as f64 / 2.0).floor();
        let v = (-cam.focal_px() * (y / z) + h as f64 / 2.0).floor();
        if u < 0.0 || v < 0.0 || u >= w as f64 || v >= h as f64 {
            continue;
        }
        let depth = ((d01 * 255.0).floor() as u32).min(254) as u8;
        buckets.entry(v as usize * w + u as usize).or_default().push((depth, c));
    }
    let mut img = RgbImage { width: w as u32, height: h as u32, pixels: gb.color.clone() };
    for (i, list) in buckets {
        let &(depth, color) = list.iter().min().unwrap();
        if (depth as f32) / 255.0 < gb.depth[i] {
            img.pixels[i] = color;
        }
    }
    img
}

#[test]
fn pipeline_matches_brute_force_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..15 {
        let cam = random_camera(&mut rng, 96, 72);
        let n = rng.random_range(0..8000);
        let cloud = random_cloud(&mut rng, n);
        let wall = TriangleMesh::cuboid(DVec3::new(-0.6, -0.6, -0.2), DVec3::new(0.3, 0.4, 0.1), [90, 140, 60]);
        let meshes = [wall];
        let mut gb = GeometryBuffers::new(96, 72, BACKGROUND);
        rasterize_mesh(&mut gb, &cam, &meshes[0]);
        let content = FrameContent { points: Some(&cloud), meshes: &meshes };
        let expected = oracle_image(&cam, &cloud, &gb);
        for workers in [1, 3] {
            assert_eq!(render_view(&cam, &content, &RenderOptions { splat_workers: workers }), expected);
        }
    }
}

#[test]
fn worker_count_and_point_order_do_not_matter() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..5 {
        let cam = random_camera(&mut rng, 64, 64);
        let cloud = random_cloud(&mut rng, 20_000);
        let mut reference = PackedFramebuffer::new(64, 64);
        splat_points(&mut reference, &cam, &cloud);
        let reference = reference.to_vec();
        for workers in [1, 2, 8] {
            let fb = PackedFramebuffer::new(64, 64);
            splat_points_parallel(&fb, &cam, &cloud, workers);
            assert_eq!(fb.to_vec(), reference);
        }
        let mut pairs: Vec<_> = cloud.points().collect();
        pairs.reverse();
        let (p, c) = pairs.into_iter().unzip();
        let reversed = PointCloudFrame::from_points(p, c).unwrap();
        let mut fb = PackedFramebuffer::new(64, 64);
        splat_points(&mut fb, &cam, &reversed);
        assert_eq!(fb.to_vec(), reference);
    }
}

#[test]
fn packing_order_laws() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for d1 in 0..=254u8 {
        for d2 in 0..=254u8 {
            let (c1, c2): ([u8; 3], [u8; 3]) = (rng.random(), rng.random());
            let (a, b) = (pack(d1, c1), pack(d2, c2));
            assert_ne!(a, EMPTY_CELL);
            if d1 < d2 {
                assert!(a < b);
            }
            if d1 == d2 {
                assert_eq!(a.min(b), pack(d1, c1.min(c2)));
            }
        }
    }
}

fn single_point_scene(depth: f64) -> PointCloudFrame {
    PointCloudFrame::from_points(vec![Vec3::new(0.0, 0.0, -depth as f32)], vec![[255, 255, 255]]).unwrap()
}

fn lit_column(img: &RgbImage) -> f64 {
    let xs: Vec<u32> = (0..img.width).filter(|&x| (0..img.height).any(|y| img.get(x, y) == [255, 255, 255])).collect();
    assert_eq!(xs.len(), 1, "expected exactly one lit column");
    xs[0] as f64 + 0.5
}

#[test]
fn stereo_disparity_follows_focal_times_baseline_over_depth() {
    let cam = PinholeCamera::look_at(DVec3::ZERO, -DVec3::Z, DVec3::Y, 60.0, 512, 512, 0.1, 10.0).unwrap();
    let ipd = 0.064;
    let mut last = f64::INFINITY;
    for depth in [1.0, 2.0, 4.0] {
        let cloud = single_point_scene(depth);
        let img = render_stereo(&cam, ipd, &FrameContent { points: Some(&cloud), meshes: &[] }, &RenderOptions::default());
        let xl = lit_column(&img.columns(0, 512));
        let xr = lit_column(&img.columns(512, 512));
        let disparity = xl - xr;
        assert!((disparity - cam.focal_px() * ipd / depth).abs() <= 1.0, "depth {depth}: {disparity}");
        assert!(disparity < last);
        last = disparity;
    }
}

#[test]
fn zero_ipd_gives_identical_halves() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let cam = random_camera(&mut rng, 80, 60);
    let cloud = random_cloud(&mut rng, 3000);
    let meshes = [TriangleMesh::cuboid(DVec3::splat(-0.3), DVec3::splat(0.3), [200, 30, 30])];
    let img = render_stereo(&cam, 0.0, &FrameContent { points: Some(&cloud), meshes: &meshes }, &RenderOptions::default());
    assert_eq!(img.columns(0, 80), img.columns(80, 80));
}
