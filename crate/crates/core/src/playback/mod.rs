//! Replay control: the media clock, frame selection, entity visibility and
//! the two-slot prefetching frame loader.
//!
//! The animation advances at `anim_fps` regardless of how often the caller
//! renders; rendering faster than the animation rate simply shows the same
//! frame index several times.

mod prefetch;
mod sim;
mod store;

use std::collections::BTreeMap;

use thiserror::Error;

pub use prefetch::{LoadMode, Loader, PrefetchBuffer, PrefetchStats, SimClock, SimLoader, ThreadLoader};
pub use sim::{measure_wall_clock, simulate_sequential_playback, LoaderBenchParams, LoaderReport};
pub use store::{DirStore, FrameStore, LatencyStore, MemoryStore, StoreError};

use crate::scene::SceneManifest;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlaybackError {
    #[error("unknown entity id {0:?}")]
    UnknownEntity(String),
    #[error("frame index {index} out of range (frame_count {frame_count})")]
    IndexOutOfRange { index: u32, frame_count: u32 },
    #[error("loading frame {index} failed: {message}")]
    Load { index: u32, message: String },
}

/// Absorbs rounding in `media_time * anim_fps` (e.g. `(3.0 / 90.0) * 30.0`
/// landing just below 1) so times on a frame boundary select that frame.
const FRAME_SNAP: f64 = 1e-9;

/// Frame shown at `media_time`: `floor(media_time * anim_fps)`, wrapped
/// modulo `frame_count` when looping, else clamped to the last frame.
pub fn frame_index_at(media_time: f64, anim_fps: f64, frame_count: u32, loop_mode: bool) -> u32 {
    debug_assert!(anim_fps > 0.0 && frame_count >= 1);
    let raw = (media_time.max(0.0) * anim_fps + FRAME_SNAP).floor();
    if loop_mode {
        (raw % frame_count as f64) as u32
    } else {
        raw.min((frame_count - 1) as f64) as u32
    }
}

/// Playback clock, transport flags and per-entity visibility.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaybackState {
    pub playing: bool,
    pub loop_mode: bool,
    media_time: f64,
    anim_fps: f64,
    frame_count: u32,
    visibility: BTreeMap<String, bool>,
}

impl PlaybackState {
    /// Paused at time zero, looping off, visibility from each entity's
    /// `initially_visible`.
    pub fn new(manifest: &SceneManifest) -> Self {
        Self {
            playing: false,
            loop_mode: false,
            media_time: 0.0,
            anim_fps: manifest.anim_fps,
            frame_count: manifest.frame_count,
            visibility: manifest.entities.iter().map(|e| (e.id.clone(), e.initially_visible)).collect(),
        }
    }

    pub fn media_time(&self) -> f64 {
        self.media_time
    }

    /// Last time at which a non-looping replay can stand.
    pub fn end_time(&self) -> f64 {
        (self.frame_count - 1) as f64 / self.anim_fps
    }

    fn duration(&self) -> f64 {
        self.frame_count as f64 / self.anim_fps
    }

    fn normalize(&self, t: f64) -> f64 {
        let t = t.max(0.0);
        if self.loop_mode {
            t.rem_euclid(self.duration())
        } else {
            t.min(self.end_time())
        }
    }

    pub fn play(&mut self) {
        self.playing = true;
    }

    pub fn pause(&mut self) {
        self.playing = false;
    }

    pub fn seek(&mut self, media_time: f64) {
        self.media_time = self.normalize(media_time);
    }

    /// Adds `wall_dt` seconds to the media clock while playing.
    pub fn advance(&mut self, wall_dt: f64) {
        debug_assert!(wall_dt >= 0.0);
        if self.playing {
            self.media_time = self.normalize(self.media_time + wall_dt.max(0.0));
        }
    }

    pub fn frame_index(&self) -> u32 {
        frame_index_at(self.media_time, self.anim_fps, self.frame_count, self.loop_mode)
    }

    pub fn set_visibility(&mut self, entity: &str, visible: bool) -> Result<(), PlaybackError> {
        let slot = self.visibility.get_mut(entity).ok_or_else(|| PlaybackError::UnknownEntity(entity.to_string()))?;
        *slot = visible;
        Ok(())
    }

    pub fn is_visible(&self, entity: &str) -> bool {
        self.visibility.get(entity).copied().unwrap_or(false)
    }

    pub fn visibility(&self) -> &BTreeMap<String, bool> {
        &self.visibility
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::parse_manifest;

    fn manifest(frame_count: u32) -> SceneManifest {
        parse_manifest(
            format!(
                r#"{{"name": "t", "anim_fps": 30, "frame_count": {frame_count}, "near_clip": 0.1, "far_clip": 5,
                "entities": [{{"id": "surgeon", "kind": "pointcloud_sequence", "uri_pattern": "f/{{index:06}}.spcf"}},
                             {{"id": "drill", "kind": "instrument", "uri": "d.strj", "tip_length": 0.1}}],
                "default_camera": {{"position": [0, 0, 1], "look_at": [0, 0, 0]}}}}"#
            )
            .as_bytes(),
        )
        .unwrap()
    }

    #[test]
    fn frame_index_examples() {
        assert_eq!(frame_index_at(0.0, 30.0, 100, false), 0);
        assert_eq!(frame_index_at(1.0, 30.0, 100, false), 30);
        assert_eq!(frame_index_at(5.0, 30.0, 100, false), 99);
        assert_eq!(frame_index_at(5.0, 30.0, 100, true), 50);
        assert_eq!(frame_index_at(3.0 / 90.0, 30.0, 100, false), 1);
    }

    #[test]
    fn paused_clock_does_not_move() {
        let mut s = PlaybackState::new(&manifest(30));
        s.advance(1.0);
        assert_eq!(s.media_time(), 0.0);
        s.play();
        s.advance(0.1);
        assert_eq!(s.media_time(), 0.1);
    }

    #[test]
    fn clamps_at_end_without_loop() {
        let mut s = PlaybackState::new(&manifest(30));
        s.play();
        s.seek(100.0);
        assert_eq!(s.media_time(), 29.0 / 30.0);
        s.advance(1.0);
        assert_eq!(s.media_time(), 29.0 / 30.0);
        assert_eq!(s.frame_index(), 29);
    }

    #[test]
    fn wraps_with_loop() {
        let mut s = PlaybackState::new(&manifest(30));
        s.loop_mode = true;
        s.play();
        s.seek(0.9);
        s.advance(0.2);
        assert!((s.media_time() - 0.1).abs() < 1e-12);
        assert_eq!(s.frame_index(), 3);
    }

    #[test]
    fn visibility_toggles() {
        let mut s = PlaybackState::new(&manifest(3));
        assert!(s.is_visible("surgeon"));
        s.set_visibility("surgeon", false).unwrap();
        assert!(!s.is_visible("surgeon"));
        s.set_visibility("surgeon", false).unwrap();
        assert!(!s.is_visible("surgeon"));
        s.set_visibility("surgeon", true).unwrap();
        assert_eq!(s, PlaybackState::new(&manifest(3)));
        assert_eq!(s.set_visibility("nurse", false), Err(PlaybackError::UnknownEntity("nurse".into())));
    }

    #[test]
    fn visibility_does_not_touch_clock() {
        let mut s = PlaybackState::new(&manifest(30));
        s.seek(0.5);
        s.set_visibility("drill", false).unwrap();
        assert_eq!(s.media_time(), 0.5);
    }
}
