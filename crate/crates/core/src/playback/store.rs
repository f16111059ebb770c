use std::path::PathBuf;
use std::time::Duration;

use thiserror::Error;

use crate::scene::{resolve_uri, SceneManifest};

#[derive(Debug, Error, Clone, PartialEq)]
#[error("{0}")]
pub struct StoreError(pub String);

/// Source of encoded frame bytes. The same index must always yield the same
/// bytes.
pub trait FrameStore {
    fn frame_count(&self) -> u32;
    fn load(&self, index: u32) -> Result<Vec<u8>, StoreError>;
}

impl<S: FrameStore + ?Sized> FrameStore for std::sync::Arc<S> {
    fn frame_count(&self) -> u32 {
        (**self).frame_count()
    }
    fn load(&self, index: u32) -> Result<Vec<u8>, StoreError> {
        (**self).load(index)
    }
}

/// Frames held in memory.
#[derive(Debug, Clone, Default)]
pub struct MemoryStore {
    frames: Vec<Vec<u8>>,
}

impl MemoryStore {
    pub fn new(frames: Vec<Vec<u8>>) -> Self {
        Self { frames }
    }
}

impl FrameStore for MemoryStore {
    fn frame_count(&self) -> u32 {
        self.frames.len() as u32
    }

    fn load(&self, index: u32) -> Result<Vec<u8>, StoreError> {
        self.frames.get(index as usize).cloned().ok_or_else(|| StoreError(format!("no frame {index}")))
    }
}

/// Frame files of a scene directory, named by the manifest's `uri_pattern`.
#[derive(Debug, Clone)]
pub struct DirStore {
    root: PathBuf,
    manifest: SceneManifest,
}

impl DirStore {
    pub fn new(root: impl Into<PathBuf>, manifest: SceneManifest) -> Self {
        Self { root: root.into(), manifest }
    }
}

impl FrameStore for DirStore {
    fn frame_count(&self) -> u32 {
        self.manifest.frame_count
    }

    fn load(&self, index: u32) -> Result<Vec<u8>, StoreError> {
        let path = resolve_uri(&self.root, &self.manifest.frame_uri(index));
        std::fs::read(&path).map_err(|e| StoreError(format!("{}: {e}", path.display())))
    }
}

/// Wraps a store and sleeps for a fixed latency before every load.
#[derive(Debug, Clone)]
pub struct LatencyStore<S> {
    inner: S,
    latency: Duration,
}

impl<S> LatencyStore<S> {
    pub fn new(inner: S, latency: Duration) -> Self {
        Self { inner, latency }
    }
}

impl<S: FrameStore> FrameStore for LatencyStore<S> {
    fn frame_count(&self) -> u32 {
        self.inner.frame_count()
    }

    fn load(&self, index: u32) -> Result<Vec<u8>, StoreError> {
        if !self.latency.is_zero() {
            std::thread::sleep(self.latency);
        }
        self.inner.load(index)
    }
}
