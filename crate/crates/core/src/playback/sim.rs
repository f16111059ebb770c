//! Sequential-playback loader benchmarks.
//!
//! The consumer wants frame `i` one frame period after frame `i - 1` was
//! shown. A stall freezes playback, so the schedule continues from the moment
//! the stalled frame arrived: `due[i + 1] = served[i] + period`.

use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::Serialize;

use super::prefetch::{LoadMode, PrefetchBuffer, SimClock, SimLoader, ThreadLoader};
use super::store::{FrameStore, LatencyStore};
use super::PlaybackError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoaderBenchParams {
    pub frames: u32,
    pub latency: Duration,
    pub frame_period: Duration,
    pub mode: LoadMode,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoaderReport {
    pub mode: LoadMode,
    pub frames: u32,
    pub latency_ms: f64,
    pub frame_period_ms: f64,
    pub stalls: u32,
    pub loads_issued: u32,
    pub blocked_ms: f64,
    /// Time from the first request until the last frame was served.
    pub elapsed_ms: f64,
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

/// Discrete-event run on virtual time: deterministic, no sleeping.
pub fn simulate_sequential_playback<S: FrameStore>(store: S, params: &LoaderBenchParams) -> Result<LoaderReport, PlaybackError> {
    let clock = SimClock::new();
    let frames = params.frames.min(store.frame_count());
    let loader = SimLoader::new(store, clock.clone(), params.latency);
    let mut buffer = PrefetchBuffer::new(loader, params.mode, frames, false);
    let mut due = Duration::ZERO;
    for index in 0..frames {
        clock.advance_to(due);
        buffer.request_frame(index)?;
        due = clock.now() + params.frame_period;
    }
    let stats = buffer.stats();
    Ok(LoaderReport {
        mode: params.mode,
        frames,
        latency_ms: ms(params.latency),
        frame_period_ms: ms(params.frame_period),
        stalls: stats.stall_count,
        loads_issued: stats.loads_issued,
        blocked_ms: ms(stats.blocked),
        elapsed_ms: ms(clock.now()),
    })
}

/// Same schedule on real threads and the wall clock; every load sleeps for
/// `latency`.
pub fn measure_wall_clock<S>(store: S, params: &LoaderBenchParams) -> Result<LoaderReport, PlaybackError>
where
    S: FrameStore + Send + Sync + 'static,
{
    let frames = params.frames.min(store.frame_count());
    let store = Arc::new(LatencyStore::new(store, params.latency));
    let mut buffer = PrefetchBuffer::new(ThreadLoader::new(store), params.mode, frames, false);
    let start = Instant::now();
    let mut due = start;
    for index in 0..frames {
        let now = Instant::now();
        if due > now {
            std::thread::sleep(due - now);
        }
        buffer.request_frame(index)?;
        due = Instant::now() + params.frame_period;
    }
    let stats = buffer.stats();
    Ok(LoaderReport {
        mode: params.mode,
        frames,
        latency_ms: ms(params.latency),
        frame_period_ms: ms(params.frame_period),
        stalls: stats.stall_count,
        loads_issued: stats.loads_issued,
        blocked_ms: ms(stats.blocked),
        elapsed_ms: ms(start.elapsed()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::playback::MemoryStore;
    use crate::pointcloud::{encode_spcf, PointCloudFrame};

    fn store(n: u32) -> MemoryStore {
        MemoryStore::new((0..n).map(|_| encode_spcf(&PointCloudFrame::empty())).collect())
    }

    fn params(mode: LoadMode, latency_ms: u64) -> LoaderBenchParams {
        LoaderBenchParams { frames: 30, latency: Duration::from_millis(latency_ms), frame_period: Duration::from_micros(33_333), mode }
    }

    /// Independent event-by-event model of the same schedule: returns
    /// (stalls, blocked) computed from the closed-form timeline.
    fn oracle(mode: LoadMode, n: u32, latency: f64, period: f64) -> (u32, f64) {
        let (mut stalls, mut blocked) = (0, 0.0);
        let mut t = 0.0;
        // completion time of the prefetched successor, if any
        let mut ready: Option<f64> = None;
        for _ in 0..n {
            match (mode, ready) {
                (LoadMode::Async, Some(r)) if r <= t => {}
                (LoadMode::Async, Some(r)) => {
                    stalls += 1;
                    blocked += r - t;
                    t = r;
                }
                _ => {
                    stalls += 1;
                    blocked += latency;
                    t += latency;
                }
            }
            ready = (mode == LoadMode::Async).then_some(t + latency);
            t += period;
        }
        (stalls, blocked)
    }

    #[test]
    fn sync_stalls_every_frame() {
        let r = simulate_sequential_playback(store(30), &params(LoadMode::Sync, 20)).unwrap();
        assert_eq!(r.stalls, 30);
        assert!((r.blocked_ms - 600.0).abs() < 1e-6);
        let (stalls, blocked) = oracle(LoadMode::Sync, 30, 20.0, 33.333);
        assert_eq!(r.stalls, stalls);
        assert!((r.blocked_ms - blocked).abs() < 1e-6);
    }

    #[test]
    fn async_stalls_once() {
        let r = simulate_sequential_playback(store(30), &params(LoadMode::Async, 20)).unwrap();
        assert_eq!(r.stalls, 1);
        assert!((r.blocked_ms - 20.0).abs() < 1e-6);
        assert_eq!(oracle(LoadMode::Async, 30, 20.0, 33.333).0, 1);
    }

    #[test]
    fn slow_loads_stall_async_too() {
        // latency above the frame period: every prefetch arrives late
        let r = simulate_sequential_playback(store(10), &LoaderBenchParams { frames: 10, ..params(LoadMode::Async, 50) }).unwrap();
        let (stalls, blocked) = oracle(LoadMode::Async, 10, 50.0, 33.333);
        assert_eq!(r.stalls, stalls);
        assert!((r.blocked_ms - blocked).abs() < 1e-6, "{} vs {blocked}", r.blocked_ms);
    }

    #[test]
    fn zero_latency_blocks_nothing() {
        for mode in [LoadMode::Sync, LoadMode::Async] {
            assert_eq!(simulate_sequential_playback(store(30), &params(mode, 0)).unwrap().blocked_ms, 0.0);
        }
    }
}
