use std::io::Write;
use std::path::Path;
use std::time::Duration;

use anyhow::{bail, ensure, Context};
use glam::{DVec3, Vec3};
use serde::Serialize;
use twin_core::playback::{
    measure_wall_clock, simulate_sequential_playback, DirStore, LoadMode, LoaderBenchParams, LoaderReport, PlaybackState,
};
use twin_core::pointcloud::{crop_aabb, encode_spcf, import_ply, voxel_downsample, Aabb, PointCloudFrame, VoxelGridParams};
use twin_core::pose::{compare_poses, PoseDelta, RigidPose};
use twin_core::render::{write_ppm, PinholeCamera, RenderOptions, RgbImage};
use twin_core::replay::{LoadedScene, MANIFEST_FILE};
use twin_core::scene::{expand_frame_pattern, CameraConfig, EntityDescriptor, EntityKind, SceneManifest, FRAME_INDEX_TOKEN};
use twin_core::synthetic::{generate, SyntheticSceneSpec};

use crate::cli::{BenchArgs, ConvertArgs, OutputFormat, PoseCompareArgs, RenderArgs, SyntheticArgs};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvertSummary {
    pub frames: u32,
    pub points_in: Vec<usize>,
    pub points_out: Vec<usize>,
}

pub fn convert(args: &ConvertArgs) -> anyhow::Result<ConvertSummary> {
    ensure!(args.fps > 0.0, "--fps must be positive");
    let crop =
        args.crop.map(|c| Aabb::new(Vec3::new(c.0[0], c.0[1], c.0[2]), Vec3::new(c.0[3], c.0[4], c.0[5]))).transpose().context("--crop")?;

    let mut frames = Vec::with_capacity(args.inputs.len());
    for path in &args.inputs {
        let bytes = std::fs::read(path).with_context(|| format!("{}", path.display()))?;
        let frame = import_ply(&bytes).with_context(|| format!("{}", path.display()))?;
        frames.push(frame);
    }
    let points_in = frames.iter().map(PointCloudFrame::len).collect();
    if let Some(bbox) = &crop {
        frames = frames.iter().map(|f| crop_aabb(f, bbox)).collect();
    }
    let bounds = crop.or_else(|| frames.iter().filter(|f| !f.is_empty()).map(|f| *f.bbox()).reduce(|a, b| a.union(&b)));
    let bounds = bounds.unwrap_or(Aabb { min: Vec3::splat(-0.5), max: Vec3::splat(0.5) });
    if let Some(size) = args.voxel_size {
        // one grid for the whole sequence so voxels line up across frames
        let grid = VoxelGridParams::new(bounds.min, size).context("--voxel-size must be positive and finite")?;
        frames = frames.iter().map(|f| voxel_downsample(f, &grid)).collect();
    }

    let pattern = format!("frames/{FRAME_INDEX_TOKEN}.spcf");
    for (i, frame) in frames.iter().enumerate() {
        let path = args.out.join(expand_frame_pattern(&pattern, i as u32));
        std::fs::create_dir_all(path.parent().expect("frame path has a parent"))?;
        std::fs::write(&path, encode_spcf(frame)).with_context(|| format!("{}", path.display()))?;
    }
    let manifest = skeleton_manifest(&args.name, args.fps, frames.len() as u32, pattern, &bounds);
    std::fs::write(args.out.join(MANIFEST_FILE), manifest.to_json())?;
    Ok(ConvertSummary { frames: frames.len() as u32, points_in, points_out: frames.iter().map(PointCloudFrame::len).collect() })
}

/// Manifest with only the frame sequence and a camera framing `bounds` from +Z.
fn skeleton_manifest(name: &str, fps: f64, frame_count: u32, pattern: String, bounds: &Aabb) -> SceneManifest {
    let center = bounds.center().as_dvec3();
    let radius = (bounds.extent().as_dvec3().length() / 2.0).max(0.1);
    let distance = 2.5 * radius;
    SceneManifest {
        name: name.to_string(),
        anim_fps: fps,
        frame_count,
        near_clip: (0.05 * radius).max(0.01),
        far_clip: distance + 2.0 * radius,
        entities: vec![EntityDescriptor {
            id: "capture".into(),
            kind: EntityKind::PointcloudSequence,
            uri: None,
            uri_pattern: Some(pattern),
            base_color: None,
            tip_length: None,
            initially_visible: true,
        }],
        default_camera: CameraConfig::new(center + DVec3::Z * distance, center),
    }
}

/// Renders the image described by `args` (everything except `--out`).
pub fn render_image(scene: &LoadedScene, args: &RenderArgs) -> anyhow::Result<RgbImage> {
    let manifest = &scene.manifest;
    for id in &args.hide {
        ensure!(manifest.entity(id).is_some(), "--hide {id:?}: no such entity");
    }
    let mut state = PlaybackState::new(manifest);
    match (args.frame, args.time) {
        (Some(frame), _) => {
            ensure!(frame < manifest.frame_count, "--frame {frame} out of range (frame_count {})", manifest.frame_count);
            state.seek(frame as f64 / manifest.anim_fps);
        }
        (None, Some(t)) => {
            ensure!(t.is_finite(), "--time must be finite");
            state.seek(t);
        }
        (None, None) => {}
    }
    for id in &args.hide {
        state.set_visibility(id, false)?;
    }

    let mut config = manifest.default_camera.clone();
    config.image_width = args.width.unwrap_or(config.image_width);
    config.image_height = args.height.unwrap_or(config.image_height);
    config.vertical_fov = args.fov.unwrap_or(config.vertical_fov);
    let ipd = args.ipd.unwrap_or(config.ipd);
    ensure!(ipd.is_finite() && ipd >= 0.0, "--ipd must be a non-negative number");
    let camera = PinholeCamera::from_config(&config, args.near.unwrap_or(manifest.near_clip), args.far.unwrap_or(manifest.far_clip))?;

    let frame = if state.is_visible(scene.point_cloud_id()) { Some(scene.load_frame(state.frame_index())?) } else { None };
    let options = RenderOptions { splat_workers: args.workers.max(1) };
    Ok(scene.render(frame.as_ref(), state.media_time(), |id| state.is_visible(id), &camera, ipd, args.eye, &options))
}

pub fn render(args: &RenderArgs) -> anyhow::Result<RgbImage> {
    let scene = LoadedScene::open(&args.scene.scene)?;
    let image = render_image(&scene, args)?;
    std::fs::write(&args.out, write_ppm(&image)).with_context(|| format!("{}", args.out.display()))?;
    Ok(image)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    /// `virtual` for the discrete-event run, `wall` for real threads.
    pub clock: &'static str,
    #[serde(flatten)]
    pub run: LoaderReport,
    pub sync_baseline: LoaderReport,
    /// Sync blocked time over this run's blocked time; absent when this run
    /// never blocked.
    pub speedup: Option<f64>,
}

fn millis(value: f64, flag: &str) -> anyhow::Result<Duration> {
    ensure!(value.is_finite() && value >= 0.0, "{flag} must be a non-negative number of milliseconds");
    Ok(Duration::from_secs_f64(value / 1e3))
}

pub fn bench_loader(args: &BenchArgs) -> anyhow::Result<BenchReport> {
    let root = &args.scene.scene;
    let scene = LoadedScene::open(root)?;
    let params = LoaderBenchParams {
        frames: scene.frame_count(),
        latency: millis(args.latency, "--latency")?,
        frame_period: millis(args.period, "--period")?,
        mode: args.mode,
    };
    let run_once = |mode: LoadMode| {
        let store = DirStore::new(root.clone(), scene.manifest.clone());
        let p = LoaderBenchParams { mode, ..params };
        if args.real_time {
            measure_wall_clock(store, &p)
        } else {
            simulate_sequential_playback(store, &p)
        }
    };
    let run = run_once(args.mode)?;
    let sync_baseline = if args.mode == LoadMode::Sync { run.clone() } else { run_once(LoadMode::Sync)? };
    let speedup = (run.blocked_ms > 0.0).then(|| sync_baseline.blocked_ms / run.blocked_ms);
    Ok(BenchReport { clock: if args.real_time { "wall" } else { "virtual" }, run, sync_baseline, speedup })
}

pub fn print_bench(report: &BenchReport, format: OutputFormat, out: &mut dyn Write) -> anyhow::Result<()> {
    match format {
        OutputFormat::Json => writeln!(out, "{}", serde_json::to_string_pretty(report)?)?,
        OutputFormat::Text => {
            let r = &report.run;
            let mode = match r.mode {
                LoadMode::Sync => "sync",
                LoadMode::Async => "async",
            };
            writeln!(out, "mode: {mode} ({} clock)", report.clock)?;
            writeln!(out, "frames: {}  latency: {:.3} ms  period: {:.3} ms", r.frames, r.latency_ms, r.frame_period_ms)?;
            writeln!(out, "stalls: {}", r.stalls)?;
            writeln!(out, "blocked: {:.3} ms", r.blocked_ms)?;
            writeln!(out, "elapsed: {:.3} ms", r.elapsed_ms)?;
            writeln!(out, "sync baseline: {} stalls, {:.3} ms blocked", report.sync_baseline.stalls, report.sync_baseline.blocked_ms)?;
            match report.speedup {
                Some(s) => writeln!(out, "speedup vs sync: {s:.2}x")?,
                None => writeln!(out, "speedup vs sync: n/a (never blocked)")?,
            }
        }
    }
    Ok(())
}

pub fn synthetic_spec(args: &SyntheticArgs) -> SyntheticSceneSpec {
    SyntheticSceneSpec {
        frame_count: args.frames,
        anim_fps: args.fps,
        points_per_frame: args.points,
        image_width: args.width,
        image_height: args.height,
        seed: args.seed,
        ..Default::default()
    }
}

pub fn gen_synthetic(args: &SyntheticArgs) -> anyhow::Result<SceneManifest> {
    ensure!(args.frames >= 1, "--frames must be at least 1");
    ensure!(args.fps > 0.0 && args.fps.is_finite(), "--fps must be positive");
    ensure!(args.width >= 1 && args.height >= 1, "image size must be positive");
    let scene = generate(&synthetic_spec(args));
    scene.write_to(&args.out).with_context(|| format!("writing {}", args.out.display()))?;
    Ok(scene.manifest)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoseReport {
    pub entity: String,
    pub time: f64,
    #[serde(flatten)]
    pub delta: PoseDelta,
}

pub fn pose_compare(args: &PoseCompareArgs) -> anyhow::Result<PoseReport> {
    ensure!(args.time.is_finite(), "--time must be finite");
    let user = RigidPose::parse(&args.user_pose).context("--user-pose")?;
    let scene = LoadedScene::open(&args.scene.scene)?;
    let Some(track) = &scene.instrument else { bail!("scene has no instrument entity") };
    let delta = compare_poses(&track.pose_at(args.time), &user, track.tip_length);
    Ok(PoseReport { entity: track.id.clone(), time: args.time, delta })
}

pub fn print_pose(report: &PoseReport, format: OutputFormat, out: &mut dyn Write) -> anyhow::Result<()> {
    match format {
        OutputFormat::Json => writeln!(out, "{}", serde_json::to_string(report)?)?,
        OutputFormat::Text => {
            writeln!(out, "tip_distance_mm: {:.3}", report.delta.tip_distance_mm)?;
            writeln!(out, "axis_angle_deg: {:.3}", report.delta.axis_angle_deg)?;
        }
    }
    Ok(())
}

pub fn scene_summary(root: &Path, manifest: &SceneManifest) -> String {
    format!("{}: {} frames at {} fps, {} entities", root.display(), manifest.frame_count, manifest.anim_fps, manifest.entities.len())
}
