//! A scene directory opened for replay: the manifest, its meshes and the
//! instrument trajectory held in memory, frames read on demand.

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::pointcloud::{decode_spcf, PointCloudError, PointCloudFrame};
use crate::pose::{decode_strj, PoseError, RigidPose, Trajectory};
use crate::render::{instrument_mesh, render_eye, Eye, FrameContent, PinholeCamera, RenderError, RenderOptions, RgbImage, TriangleMesh};
use crate::scene::{file_resolver, parse_manifest, resolve_uri, validate_scene, Diagnostic, ManifestError, SceneManifest};

pub const MANIFEST_FILE: &str = "scene.json";

/// Instrument color when the manifest gives none.
const DEFAULT_INSTRUMENT_COLOR: [u8; 3] = [220, 220, 230];

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Manifest(#[from] ManifestError),
    #[error("scene is incomplete: {}", join(.0))]
    Incomplete(Vec<Diagnostic>),
    #[error("{uri}: {source}")]
    PointCloud { uri: String, source: PointCloudError },
    #[error("{uri}: {source}")]
    Trajectory { uri: String, source: PoseError },
    #[error("{uri}: {source}")]
    Mesh { uri: String, source: RenderError },
    #[error("frame {index} out of range (frame_count {frame_count})")]
    FrameOutOfRange { index: u32, frame_count: u32 },
}

fn join(diags: &[Diagnostic]) -> String {
    diags.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Clone)]
pub struct SceneMesh {
    pub id: String,
    pub visible_by_default: bool,
    pub obj: String,
    pub mesh: TriangleMesh,
}

#[derive(Debug, Clone)]
pub struct InstrumentTrack {
    pub id: String,
    pub tip_length: f64,
    pub color: [u8; 3],
    pub strj: Vec<u8>,
    pub trajectory: Trajectory,
}

impl InstrumentTrack {
    pub fn pose_at(&self, time: f64) -> RigidPose {
        self.trajectory.sample_pose(time)
    }
}

#[derive(Debug, Clone)]
pub struct LoadedScene {
    pub root: PathBuf,
    pub manifest: SceneManifest,
    /// `scene.json` exactly as read.
    pub manifest_bytes: Vec<u8>,
    pub meshes: Vec<SceneMesh>,
    pub instrument: Option<InstrumentTrack>,
}

fn read(path: PathBuf) -> Result<Vec<u8>, SceneError> {
    std::fs::read(&path).map_err(|source| SceneError::Io { path, source })
}

impl LoadedScene {
    /// Reads `root/scene.json`, checks that every referenced file exists, and
    /// loads the meshes and the trajectory.
    pub fn open(root: impl AsRef<Path>) -> Result<Self, SceneError> {
        let root = root.as_ref().to_path_buf();
        let manifest_bytes = read(root.join(MANIFEST_FILE))?;
        let manifest = parse_manifest(&manifest_bytes)?;
        let diagnostics = validate_scene(&manifest, file_resolver(&root));
        if !diagnostics.is_empty() {
            return Err(SceneError::Incomplete(diagnostics));
        }

        let mut meshes = Vec::new();
        for e in manifest.meshes() {
            let uri = e.uri.clone().expect("validated mesh has a uri");
            let bytes = read(resolve_uri(&root, &uri))?;
            let obj = String::from_utf8(bytes)
                .map_err(|_| SceneError::Mesh { uri: uri.clone(), source: RenderError::Mesh("not UTF-8".into()) })?;
            let mesh = TriangleMesh::parse_obj(&obj, e.base_color.expect("validated mesh has a color"))
                .map_err(|source| SceneError::Mesh { uri, source })?;
            meshes.push(SceneMesh { id: e.id.clone(), visible_by_default: e.initially_visible, obj, mesh });
        }

        let instrument = match manifest.instrument() {
            Some(e) => {
                let uri = e.uri.clone().expect("validated instrument has a uri");
                let strj = read(resolve_uri(&root, &uri))?;
                let trajectory = decode_strj(&strj).map_err(|source| SceneError::Trajectory { uri, source })?;
                Some(InstrumentTrack {
                    id: e.id.clone(),
                    tip_length: e.tip_length.expect("validated instrument has a tip length"),
                    color: e.base_color.unwrap_or(DEFAULT_INSTRUMENT_COLOR),
                    strj,
                    trajectory,
                })
            }
            None => None,
        };

        Ok(Self { root, manifest, manifest_bytes, meshes, instrument })
    }

    pub fn frame_count(&self) -> u32 {
        self.manifest.frame_count
    }

    pub fn read_frame(&self, index: u32) -> Result<Vec<u8>, SceneError> {
        if index >= self.manifest.frame_count {
            return Err(SceneError::FrameOutOfRange { index, frame_count: self.manifest.frame_count });
        }
        read(resolve_uri(&self.root, &self.manifest.frame_uri(index)))
    }

    pub fn load_frame(&self, index: u32) -> Result<PointCloudFrame, SceneError> {
        let bytes = self.read_frame(index)?;
        decode_spcf(&bytes).map_err(|source| SceneError::PointCloud { uri: self.manifest.frame_uri(index), source })
    }

    pub fn point_cloud_id(&self) -> &str {
        &self.manifest.point_cloud_entity().id
    }

    /// Camera of the manifest's `default_camera` with the scene clip range.
    pub fn default_camera(&self) -> Result<PinholeCamera, RenderError> {
        PinholeCamera::from_config(&self.manifest.default_camera, self.manifest.near_clip, self.manifest.far_clip)
    }

    /// World-space meshes visible at `time`, including the posed instrument.
    pub fn visible_meshes(&self, time: f64, visible: impl Fn(&str) -> bool) -> Vec<TriangleMesh> {
        let mut out: Vec<TriangleMesh> = self.meshes.iter().filter(|m| visible(&m.id)).map(|m| m.mesh.clone()).collect();
        if let Some(track) = self.instrument.as_ref().filter(|t| visible(&t.id)) {
            out.push(instrument_mesh(track.tip_length, track.color).transformed(&track.pose_at(time)));
        }
        out
    }

    /// Renders one eye (or the side-by-side pair) with `frame` as the point
    /// cloud shown at `time`.
    #[allow(clippy::too_many_arguments)]
    pub fn render(
        &self,
        frame: Option<&PointCloudFrame>,
        time: f64,
        visible: impl Fn(&str) -> bool,
        camera: &PinholeCamera,
        ipd: f64,
        eye: Eye,
        options: &RenderOptions,
    ) -> RgbImage {
        let meshes = self.visible_meshes(time, &visible);
        let points = frame.filter(|_| visible(self.point_cloud_id()));
        render_eye(camera, ipd, eye, &FrameContent { points, meshes: &meshes }, options)
    }
}
