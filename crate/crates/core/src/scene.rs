//! Scene manifests (`scene.json`).
//!
//! A manifest names the frame sequence, the rigid meshes and the tracked
//! instrument, the animation rate, the clip range and the default camera.
//! All resource URIs are relative to the manifest's directory.

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};

use glam::DVec3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Placeholder in `uri_pattern` replaced by the 6-digit zero-padded frame index.
pub const FRAME_INDEX_TOKEN: &str = "{index:06}";

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("malformed manifest JSON at `{path}`: {message}")]
    Json { path: String, message: String },
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
}

impl ManifestError {
    fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Invalid { field: field.into(), message: message.into() }
    }

    /// Dotted path of the offending field.
    pub fn field(&self) -> &str {
        match self {
            Self::Json { path, .. } => path,
            Self::Invalid { field, .. } => field,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntityKind {
    PointcloudSequence,
    Mesh,
    Instrument,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntityDescriptor {
    pub id: String,
    pub kind: EntityKind,
    /// Mesh OBJ file or instrument STRJ trajectory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uri: Option<String>,
    /// Frame file pattern of a point-cloud sequence, containing `{index:06}`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uri_pattern: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_color: Option<[u8; 3]>,
    /// Distance from the instrument origin to its tip along local +Z, meters.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tip_length: Option<f64>,
    #[serde(default = "default_true")]
    pub initially_visible: bool,
}

impl EntityDescriptor {
    /// Frame URI of a point-cloud sequence entity.
    pub fn frame_uri(&self, index: u32) -> Option<String> {
        self.uri_pattern.as_ref().map(|p| expand_frame_pattern(p, index))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraConfig {
    pub position: DVec3,
    pub look_at: DVec3,
    #[serde(default = "default_up")]
    pub up: DVec3,
    /// Vertical field of view, degrees.
    #[serde(default = "default_fov")]
    pub vertical_fov: f64,
    /// Stereo eye separation, meters.
    #[serde(default = "default_ipd")]
    pub ipd: f64,
    #[serde(default = "default_resolution")]
    pub image_width: u32,
    #[serde(default = "default_resolution")]
    pub image_height: u32,
}

impl CameraConfig {
    pub fn new(position: DVec3, look_at: DVec3) -> Self {
        Self {
            position,
            look_at,
            up: default_up(),
            vertical_fov: default_fov(),
            ipd: default_ipd(),
            image_width: default_resolution(),
            image_height: default_resolution(),
        }
    }

    fn validate(&self, field: &str) -> Result<(), ManifestError> {
        let f = |name: &str| format!("{field}.{name}");
        for (name, v) in [("position", self.position), ("look_at", self.look_at), ("up", self.up)] {
            if !v.is_finite() {
                return Err(ManifestError::invalid(f(name), "must be finite"));
            }
        }
        let forward = self.look_at - self.position;
        if forward.length_squared() == 0.0 {
            return Err(ManifestError::invalid(f("look_at"), "must differ from position"));
        }
        if self.up.length_squared() == 0.0 || forward.normalize().cross(self.up.normalize()).length() < 1e-9 {
            return Err(ManifestError::invalid(f("up"), "must not be parallel to the viewing direction"));
        }
        if !(self.vertical_fov > 0.0 && self.vertical_fov < 180.0) {
            return Err(ManifestError::invalid(f("vertical_fov"), "vertical_fov must lie strictly between 0 and 180 degrees"));
        }
        if !(self.ipd >= 0.0 && self.ipd.is_finite()) {
            return Err(ManifestError::invalid(f("ipd"), "ipd must be non-negative"));
        }
        if self.image_width == 0 || self.image_height == 0 {
            return Err(ManifestError::invalid(f("image_width"), "image dimensions must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneManifest {
    pub name: String,
    #[serde(default = "default_fps")]
    pub anim_fps: f64,
    pub frame_count: u32,
    pub near_clip: f64,
    pub far_clip: f64,
    pub entities: Vec<EntityDescriptor>,
    pub default_camera: CameraConfig,
}

fn default_true() -> bool {
    true
}
fn default_up() -> DVec3 {
    DVec3::Y
}
fn default_fov() -> f64 {
    60.0
}
fn default_ipd() -> f64 {
    0.064
}
fn default_resolution() -> u32 {
    1024
}
fn default_fps() -> f64 {
    30.0
}

pub fn expand_frame_pattern(pattern: &str, index: u32) -> String {
    pattern.replace(FRAME_INDEX_TOKEN, &format!("{index:06}"))
}

fn validate_uri(field: &str, uri: &str) -> Result<(), ManifestError> {
    let path = Path::new(uri);
    let escapes = uri.is_empty()
        || uri.contains("://")
        || uri.contains('\\')
        || path.is_absolute()
        || uri.starts_with('/')
        || path.components().any(|c| !matches!(c, std::path::Component::Normal(_) | std::path::Component::CurDir));
    if escapes {
        return Err(ManifestError::invalid(field, format!("uri {uri:?} must be a relative path inside the scene directory")));
    }
    Ok(())
}

impl SceneManifest {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    /// Checks every invariant; errors name the offending field.
    pub fn validate(&self) -> Result<(), ManifestError> {
        if !(self.anim_fps > 0.0 && self.anim_fps.is_finite()) {
            return Err(ManifestError::invalid("anim_fps", "anim_fps must be positive"));
        }
        if self.frame_count == 0 {
            return Err(ManifestError::invalid("frame_count", "frame_count must be at least 1"));
        }
        if !(self.near_clip > 0.0 && self.near_clip.is_finite()) {
            return Err(ManifestError::invalid("near_clip", "near_clip must be positive"));
        }
        if !(self.far_clip > self.near_clip && self.far_clip.is_finite()) {
            return Err(ManifestError::invalid("far_clip", "far_clip must exceed near_clip"));
        }
        self.default_camera.validate("default_camera")?;

        let mut ids = HashSet::new();
        let mut sequences = 0;
        let mut instruments = 0;
        for (i, e) in self.entities.iter().enumerate() {
            let field = |name: &str| format!("entities[{i}].{name}");
            if e.id.is_empty() {
                return Err(ManifestError::invalid(field("id"), "id must not be empty"));
            }
            if !ids.insert(e.id.as_str()) {
                return Err(ManifestError::invalid(field("id"), format!("duplicate entity id {:?}", e.id)));
            }
            match e.kind {
                EntityKind::PointcloudSequence => {
                    sequences += 1;
                    let pattern = e
                        .uri_pattern
                        .as_deref()
                        .ok_or_else(|| ManifestError::invalid(field("uri_pattern"), "pointcloud_sequence requires uri_pattern"))?;
                    if !pattern.contains(FRAME_INDEX_TOKEN) {
                        return Err(ManifestError::invalid(field("uri_pattern"), format!("uri_pattern must contain {FRAME_INDEX_TOKEN}")));
                    }
                    validate_uri(&field("uri_pattern"), &expand_frame_pattern(pattern, 0))?;
                }
                EntityKind::Mesh => {
                    let uri = e.uri.as_deref().ok_or_else(|| ManifestError::invalid(field("uri"), "mesh requires uri"))?;
                    validate_uri(&field("uri"), uri)?;
                    if e.base_color.is_none() {
                        return Err(ManifestError::invalid(field("base_color"), "mesh requires base_color"));
                    }
                }
                EntityKind::Instrument => {
                    instruments += 1;
                    match e.tip_length {
                        Some(l) if l > 0.0 && l.is_finite() => {}
                        Some(_) => return Err(ManifestError::invalid(field("tip_length"), "tip_length must be positive")),
                        None => return Err(ManifestError::invalid(field("tip_length"), "instrument requires tip_length")),
                    }
                    // A missing trajectory uri is reported by validate_scene.
                    if let Some(uri) = e.uri.as_deref() {
                        validate_uri(&field("uri"), uri)?;
                    }
                }
            }
        }
        if sequences != 1 {
            return Err(ManifestError::invalid("entities", format!("exactly one pointcloud_sequence entity required, found {sequences}")));
        }
        if instruments > 1 {
            return Err(ManifestError::invalid("entities", format!("at most one instrument entity allowed, found {instruments}")));
        }
        Ok(())
    }

    pub fn entity(&self, id: &str) -> Option<&EntityDescriptor> {
        self.entities.iter().find(|e| e.id == id)
    }

    pub fn point_cloud_entity(&self) -> &EntityDescriptor {
        self.entities.iter().find(|e| e.kind == EntityKind::PointcloudSequence).expect("validated manifest has a pointcloud_sequence")
    }

    pub fn instrument(&self) -> Option<&EntityDescriptor> {
        self.entities.iter().find(|e| e.kind == EntityKind::Instrument)
    }

    pub fn meshes(&self) -> impl Iterator<Item = &EntityDescriptor> {
        self.entities.iter().filter(|e| e.kind == EntityKind::Mesh)
    }

    pub fn frame_uri(&self, index: u32) -> String {
        self.point_cloud_entity().frame_uri(index).expect("validated sequence has a pattern")
    }

    /// Seconds covered by the sequence: `frame_count / anim_fps`.
    pub fn duration(&self) -> f64 {
        self.frame_count as f64 / self.anim_fps
    }
}

/// Parses and validates a manifest from UTF-8 JSON.
pub fn parse_manifest(bytes: &[u8]) -> Result<SceneManifest, ManifestError> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    let manifest: SceneManifest = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        ManifestError::Json { path, message: e.into_inner().to_string() }
    })?;
    manifest.validate()?;
    Ok(manifest)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub entity: Option<String>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.entity {
            Some(id) => write!(f, "{id}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

/// Reports every referenced resource that `exists` does not confirm, every
/// frame of the sequence, and instruments without a trajectory.
pub fn validate_scene(manifest: &SceneManifest, exists: impl Fn(&str) -> bool) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for e in &manifest.entities {
        let diag = |message: String| Diagnostic { entity: Some(e.id.clone()), message };
        match e.kind {
            EntityKind::PointcloudSequence => {
                for index in 0..manifest.frame_count {
                    if let Some(uri) = e.frame_uri(index) {
                        if !exists(&uri) {
                            out.push(diag(format!("missing {uri:?}")));
                        }
                    }
                }
            }
            EntityKind::Mesh | EntityKind::Instrument => match &e.uri {
                Some(uri) if !exists(uri) => out.push(diag(format!("missing {uri:?}"))),
                Some(_) => {}
                None if e.kind == EntityKind::Instrument => {
                    out.push(diag("instrument has no trajectory uri".to_string()));
                }
                None => out.push(diag("mesh has no uri".to_string())),
            },
        }
    }
    out
}

/// Resolver for `validate_scene` that checks files under `root`.
pub fn file_resolver(root: &Path) -> impl Fn(&str) -> bool + '_ {
    move |uri| resolve_uri(root, uri).is_file()
}

pub fn resolve_uri(root: &Path, uri: &str) -> PathBuf {
    root.join(uri)
}
