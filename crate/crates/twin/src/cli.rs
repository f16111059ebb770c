//! Command-line surface of the `twin` binary.

use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use twin_core::playback::LoadMode;
use twin_core::render::Eye;

#[derive(Debug, Parser)]
#[command(name = "twin", version, about = "Replay, render and serve 4D surgical twin scenes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Import PLY captures into an SPCF frame sequence with a manifest skeleton.
    Convert(ConvertArgs),
    /// Render one frame of a scene to a PPM image.
    Render(RenderArgs),
    /// Play a scene once against a simulated-latency store and report stalls.
    BenchLoader(BenchArgs),
    /// Write a seeded synthetic scene.
    GenSynthetic(SyntheticArgs),
    /// Compare a user instrument pose with the recorded one.
    PoseCompare(PoseCompareArgs),
    /// Serve a scene over HTTP.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Text,
    Json,
}

/// Axis-aligned box given as `minx,miny,minz,maxx,maxy,maxz`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CropBox(pub [f32; 6]);

impl FromStr for CropBox {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let v: Vec<f32> = s.split(',').map(|p| p.trim().parse::<f32>().map_err(|e| format!("{p:?}: {e}"))).collect::<Result<_, _>>()?;
        let arr: [f32; 6] = v.try_into().map_err(|_| "expected six comma-separated numbers".to_string())?;
        Ok(Self(arr))
    }
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    /// Input PLY files, one per frame, in playback order.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Output scene directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_name = "MINX,MINY,MINZ,MAXX,MAXY,MAXZ")]
    pub crop: Option<CropBox>,
    /// Voxel edge length in meters.
    #[arg(long)]
    pub voxel_size: Option<f32>,
    #[arg(long, default_value_t = 30.0)]
    pub fps: f64,
    #[arg(long, default_value = "converted")]
    pub name: String,
}

#[derive(Debug, Args)]
pub struct SceneArg {
    /// Scene directory containing scene.json.
    #[arg(env = "TWIN_SCENE_ROOT")]
    pub scene: PathBuf,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[command(flatten)]
    pub scene: SceneArg,
    /// Media time in seconds (clamped to the sequence).
    #[arg(long, conflicts_with = "frame")]
    pub time: Option<f64>,
    /// Frame index; the instrument is sampled at `frame / anim_fps`.
    #[arg(long)]
    pub frame: Option<u32>,
    #[arg(long, default_value = "mono", value_parser = Eye::from_str)]
    pub eye: Eye,
    #[arg(long)]
    pub out: PathBuf,
    /// Entity ids to leave out; repeatable.
    #[arg(long = "hide", value_name = "ID")]
    pub hide: Vec<String>,
    #[arg(long)]
    pub width: Option<u32>,
    #[arg(long)]
    pub height: Option<u32>,
    /// Vertical field of view in degrees.
    #[arg(long)]
    pub fov: Option<f64>,
    /// Eye separation in meters.
    #[arg(long)]
    pub ipd: Option<f64>,
    #[arg(long)]
    pub near: Option<f64>,
    #[arg(long)]
    pub far: Option<f64>,
    /// Splatting threads; the image does not depend on it.
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub scene: SceneArg,
    /// Simulated load latency per frame, milliseconds.
    #[arg(long, default_value_t = 20.0)]
    pub latency: f64,
    #[arg(long, default_value = "async", value_parser = LoadMode::from_str)]
    pub mode: LoadMode,
    /// Display period, milliseconds.
    #[arg(long, default_value_t = 33.333)]
    pub period: f64,
    /// Run on real threads against the wall clock instead of virtual time.
    #[arg(long)]
    pub real_time: bool,
    #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
    pub format: OutputFormat,
}

#[derive(Debug, Args)]
pub struct SyntheticArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 30)]
    pub frames: u32,
    #[arg(long, default_value_t = 30.0)]
    pub fps: f64,
    #[arg(long, default_value_t = 20_000)]
    pub points: u32,
    #[arg(long, default_value_t = 1024)]
    pub width: u32,
    #[arg(long, default_value_t = 1024)]
    pub height: u32,
}

#[derive(Debug, Args)]
pub struct PoseCompareArgs {
    #[command(flatten)]
    pub scene: SceneArg,
    #[arg(long)]
    pub time: f64,
    /// `"tx ty tz qw qx qy qz"`, meters and a unit quaternion.
    #[arg(long, allow_hyphen_values = true)]
    pub user_pose: String,
    #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
    pub format: OutputFormat,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[command(flatten)]
    pub scene: SceneArg,
    #[arg(long, default_value = "127.0.0.1")]
    pub bind: String,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    /// Allow cross-origin requests.
    #[arg(long)]
    pub cors: bool,
    /// Built viewer assets to serve under `/`.
    #[arg(long)]
    pub viewer_dir: Option<PathBuf>,
}
