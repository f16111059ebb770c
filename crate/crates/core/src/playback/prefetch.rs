//! Two-slot frame prefetching.
//!
//! The buffer keeps the frame being shown (`current`) and its successor
//! (`next`). After a frame is served, the successor is loaded and decoded in
//! a background context; the consumer only ever sees a slot that is empty
//! or holds a fully decoded frame, because completed loads are handed over
//! whole through [`Loader::poll`]. A request that neither slot can serve is
//! a stall: the frame is loaded synchronously (or the matching in-flight
//! load is awaited) and the blocked time is accounted.

use std::cell::Cell;
use std::collections::VecDeque;
use std::rc::Rc;
use std::sync::mpsc::{self, Receiver, Sender};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use super::store::FrameStore;
use super::PlaybackError;
use crate::pointcloud::{decode_spcf, PointCloudFrame};

pub type LoadResult = (u32, Result<PointCloudFrame, PlaybackError>);

fn load_and_decode<S: FrameStore + ?Sized>(store: &S, index: u32) -> Result<PointCloudFrame, PlaybackError> {
    let bytes = store.load(index).map_err(|e| PlaybackError::Load { index, message: e.0 })?;
    decode_spcf(&bytes).map_err(|e| PlaybackError::Load { index, message: e.to_string() })
}

/// Background loading context plus its time source.
pub trait Loader {
    /// Queues a background load.
    fn schedule(&mut self, index: u32);
    /// Loads that have completed, without blocking.
    fn poll(&mut self) -> Vec<LoadResult>;
    fn is_pending(&self, index: u32) -> bool;
    /// Blocks until the pending load of `index` completes. Other loads that
    /// complete meanwhile are discarded.
    fn wait(&mut self, index: u32) -> Result<PointCloudFrame, PlaybackError>;
    /// Loads `index` in the calling context.
    fn load_now(&mut self, index: u32) -> Result<PointCloudFrame, PlaybackError>;
    /// Monotonic time used for blocked-time accounting.
    fn now(&self) -> Duration;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LoadMode {
    /// Every new frame is loaded on demand.
    Sync,
    /// The successor of each served frame is prefetched.
    Async,
}

impl std::str::FromStr for LoadMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sync" => Ok(Self::Sync),
            "async" => Ok(Self::Async),
            other => Err(format!("unknown load mode {other:?} (expected sync or async)")),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PrefetchStats {
    pub stall_count: u32,
    pub hits: u32,
    pub loads_issued: u32,
    pub blocked: Duration,
}

struct Slot {
    index: u32,
    frame: Arc<PointCloudFrame>,
}

pub struct PrefetchBuffer<L: Loader> {
    loader: L,
    mode: LoadMode,
    frame_count: u32,
    loop_mode: bool,
    current: Option<Slot>,
    next: Option<Slot>,
    stats: PrefetchStats,
}

impl<L: Loader> PrefetchBuffer<L> {
    pub fn new(loader: L, mode: LoadMode, frame_count: u32, loop_mode: bool) -> Self {
        Self { loader, mode, frame_count, loop_mode, current: None, next: None, stats: PrefetchStats::default() }
    }

    pub fn stats(&self) -> PrefetchStats {
        self.stats
    }

    pub fn loader(&self) -> &L {
        &self.loader
    }

    pub fn loader_mut(&mut self) -> &mut L {
        &mut self.loader
    }

    pub fn current_index(&self) -> Option<u32> {
        self.current.as_ref().map(|s| s.index)
    }

    pub fn next_index(&self) -> Option<u32> {
        self.next.as_ref().map(|s| s.index)
    }

    fn successor(&self, index: u32) -> Option<u32> {
        if index + 1 < self.frame_count {
            Some(index + 1)
        } else if self.loop_mode && self.frame_count > 1 {
            Some(0)
        } else {
            None
        }
    }

    /// Moves completed background loads into the `next` slot when they are
    /// the successor of `current`; anything else is stale and dropped.
    fn collect_completed(&mut self) {
        for (index, result) in self.loader.poll() {
            let wanted = self.current.as_ref().and_then(|c| self.successor(c.index));
            if let (Some(w), Ok(frame)) = (wanted, result) {
                if w == index {
                    self.next = Some(Slot { index, frame: Arc::new(frame) });
                }
            }
        }
    }

    /// Returns frame `index`, loading it synchronously on a miss, then
    /// schedules the successor in async mode.
    pub fn request_frame(&mut self, index: u32) -> Result<Arc<PointCloudFrame>, PlaybackError> {
        if index >= self.frame_count {
            return Err(PlaybackError::IndexOutOfRange { index, frame_count: self.frame_count });
        }
        self.collect_completed();

        let frame = if let Some(slot) = self.current.as_ref().filter(|s| s.index == index) {
            self.stats.hits += 1;
            slot.frame.clone()
        } else if self.next.as_ref().is_some_and(|s| s.index == index) {
            self.stats.hits += 1;
            self.current = self.next.take();
            self.current.as_ref().unwrap().frame.clone()
        } else {
            // Miss, including seeks: both slots are invalidated.
            self.current = None;
            self.next = None;
            self.stats.stall_count += 1;
            let start = self.loader.now();
            let loaded = if self.loader.is_pending(index) {
                self.loader.wait(index)
            } else {
                self.stats.loads_issued += 1;
                self.loader.load_now(index)
            };
            self.stats.blocked += self.loader.now().saturating_sub(start);
            let frame = Arc::new(loaded?);
            self.current = Some(Slot { index, frame: frame.clone() });
            frame
        };

        if self.mode == LoadMode::Async {
            if let Some(succ) = self.successor(index) {
                let resident = self.next.as_ref().is_some_and(|s| s.index == succ);
                if !resident && !self.loader.is_pending(succ) {
                    self.stats.loads_issued += 1;
                    self.loader.schedule(succ);
                }
            }
        }
        Ok(frame)
    }
}

/// Virtual time shared between a [`SimLoader`] and the code driving it.
#[derive(Debug, Clone, Default)]
pub struct SimClock(Rc<Cell<Duration>>);

impl SimClock {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn now(&self) -> Duration {
        self.0.get()
    }

    /// Moves time forward to `t`; never backwards.
    pub fn advance_to(&self, t: Duration) {
        if t > self.0.get() {
            self.0.set(t);
        }
    }

    pub fn advance(&self, dt: Duration) {
        self.0.set(self.0.get() + dt);
    }
}

/// Single-context loader on virtual time.
///
/// Every load takes `latency` of virtual time. Background loads run one after
/// another in their own (simulated) context; they complete once the clock
/// reaches their ready time. With zero latency, background loads complete
/// on the next poll, which makes this the manual "complete pending loads"
/// loader for tests.
pub struct SimLoader<S: FrameStore> {
    store: S,
    clock: SimClock,
    latency: Duration,
    pending: VecDeque<(u32, Duration)>,
}

impl<S: FrameStore> SimLoader<S> {
    pub fn new(store: S, clock: SimClock, latency: Duration) -> Self {
        Self { store, clock, latency, pending: VecDeque::new() }
    }

    pub fn clock(&self) -> &SimClock {
        &self.clock
    }

    /// Completes every pending load, advancing the clock as needed.
    pub fn complete_pending(&mut self) {
        if let Some(&(_, ready)) = self.pending.back() {
            self.clock.advance_to(ready);
        }
    }
}

impl<S: FrameStore> Loader for SimLoader<S> {
    fn schedule(&mut self, index: u32) {
        let start = self.pending.back().map_or(self.clock.now(), |&(_, ready)| ready.max(self.clock.now()));
        self.pending.push_back((index, start + self.latency));
    }

    fn poll(&mut self) -> Vec<LoadResult> {
        let now = self.clock.now();
        let mut done = Vec::new();
        while let Some(&(index, ready)) = self.pending.front() {
            if ready > now {
                break;
            }
            self.pending.pop_front();
            done.push((index, load_and_decode(&self.store, index)));
        }
        done
    }

    fn is_pending(&self, index: u32) -> bool {
        self.pending.iter().any(|&(i, _)| i == index)
    }

    fn wait(&mut self, index: u32) -> Result<PointCloudFrame, PlaybackError> {
        while let Some((i, ready)) = self.pending.pop_front() {
            self.clock.advance_to(ready);
            if i == index {
                return load_and_decode(&self.store, index);
            }
        }
        self.load_now(index)
    }

    fn load_now(&mut self, index: u32) -> Result<PointCloudFrame, PlaybackError> {
        self.clock.advance(self.latency);
        load_and_decode(&self.store, index)
    }

    fn now(&self) -> Duration {
        self.clock.now()
    }
}

/// Loader backed by one background thread.
pub struct ThreadLoader<S: FrameStore + Send + Sync + 'static> {
    store: Arc<S>,
    requests: Option<Sender<u32>>,
    results: Receiver<LoadResult>,
    pending: Vec<u32>,
    worker: Option<JoinHandle<()>>,
    epoch: Instant,
}

impl<S: FrameStore + Send + Sync + 'static> ThreadLoader<S> {
    pub fn new(store: Arc<S>) -> Self {
        let (req_tx, req_rx) = mpsc::channel::<u32>();
        let (res_tx, res_rx) = mpsc::channel::<LoadResult>();
        let worker_store = store.clone();
        let worker = std::thread::Builder::new()
            .name("frame-prefetch".into())
            .spawn(move || {
                for index in req_rx {
                    let result = load_and_decode(&*worker_store, index);
                    if res_tx.send((index, result)).is_err() {
                        break;
                    }
                }
            })
            .expect("spawn prefetch thread");
        Self { store, requests: Some(req_tx), results: res_rx, pending: Vec::new(), worker: Some(worker), epoch: Instant::now() }
    }

    fn complete(&mut self, index: u32) {
        if let Some(pos) = self.pending.iter().position(|&i| i == index) {
            self.pending.remove(pos);
        }
    }
}

impl<S: FrameStore + Send + Sync + 'static> Loader for ThreadLoader<S> {
    fn schedule(&mut self, index: u32) {
        if let Some(tx) = &self.requests {
            if tx.send(index).is_ok() {
                self.pending.push(index);
            }
        }
    }

    fn poll(&mut self) -> Vec<LoadResult> {
        let done: Vec<_> = self.results.try_iter().collect();
        for (index, _) in &done {
            self.complete(*index);
        }
        done
    }

    fn is_pending(&self, index: u32) -> bool {
        self.pending.contains(&index)
    }

    fn wait(&mut self, index: u32) -> Result<PointCloudFrame, PlaybackError> {
        while self.is_pending(index) {
            let Ok((i, result)) = self.results.recv() else { break };
            self.complete(i);
            if i == index {
                return result;
            }
        }
        self.load_now(index)
    }

    fn load_now(&mut self, index: u32) -> Result<PointCloudFrame, PlaybackError> {
        load_and_decode(&*self.store, index)
    }

    fn now(&self) -> Duration {
        self.epoch.elapsed()
    }
}

impl<S: FrameStore + Send + Sync + 'static> Drop for ThreadLoader<S> {
    fn drop(&mut self) {
        self.requests.take();
        if let Some(worker) = self.worker.take() {
            let _ = worker.join();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::playback::MemoryStore;
    use crate::pointcloud::encode_spcf;
    use glam::Vec3;

    fn store(n: u32) -> MemoryStore {
        MemoryStore::new(
            (0..n)
                .map(|i| {
                    let f = PointCloudFrame::from_points(vec![Vec3::splat(i as f32)], vec![[i as u8, 0, 0]]).unwrap();
                    encode_spcf(&f)
                })
                .collect(),
        )
    }

    fn manual(n: u32, mode: LoadMode) -> PrefetchBuffer<SimLoader<MemoryStore>> {
        PrefetchBuffer::new(SimLoader::new(store(n), SimClock::new(), Duration::ZERO), mode, n, false)
    }

    #[test]
    fn cold_start_then_prefetch_hit() {
        let mut buf = manual(5, LoadMode::Async);
        let f0 = buf.request_frame(0).unwrap();
        assert_eq!(f0.colors()[0], [0, 0, 0]);
        assert_eq!(buf.stats().stall_count, 1);
        buf.loader_mut().complete_pending();
        let f1 = buf.request_frame(1).unwrap();
        assert_eq!(f1.colors()[0], [1, 0, 0]);
        assert_eq!(buf.stats().stall_count, 1);
        assert_eq!(buf.current_index(), Some(1));
    }

    #[test]
    fn repeated_request_is_a_hit() {
        let mut buf = manual(5, LoadMode::Sync);
        buf.request_frame(2).unwrap();
        buf.request_frame(2).unwrap();
        assert_eq!(buf.stats().stall_count, 1);
        assert_eq!(buf.stats().hits, 1);
    }

    #[test]
    fn seek_invalidates_both_slots() {
        let mut buf = manual(30, LoadMode::Async);
        buf.request_frame(0).unwrap();
        buf.loader_mut().complete_pending();
        buf.request_frame(1).unwrap();
        buf.loader_mut().complete_pending();
        let stalls = buf.stats().stall_count;
        buf.request_frame(17).unwrap();
        assert_eq!(buf.stats().stall_count, stalls + 1);
        assert_eq!(buf.current_index(), Some(17));
        assert_eq!(buf.next_index(), None);
        assert!(buf.loader().is_pending(18));
        buf.loader_mut().complete_pending();
        buf.request_frame(18).unwrap();
        assert_eq!(buf.stats().stall_count, stalls + 1);
    }

    #[test]
    fn stale_prefetch_is_dropped() {
        let mut buf = manual(30, LoadMode::Async);
        buf.request_frame(0).unwrap();
        buf.request_frame(10).unwrap();
        buf.loader_mut().complete_pending();
        buf.request_frame(10).unwrap();
        assert_eq!(buf.next_index(), Some(11));
    }

    #[test]
    fn sync_mode_never_prefetches() {
        let mut buf = manual(5, LoadMode::Sync);
        for i in 0..5 {
            buf.request_frame(i).unwrap();
            buf.loader_mut().complete_pending();
        }
        assert_eq!(buf.stats().stall_count, 5);
        assert_eq!(buf.next_index(), None);
    }

    #[test]
    fn loop_prefetches_frame_zero_after_last() {
        let mut buf = PrefetchBuffer::new(SimLoader::new(store(3), SimClock::new(), Duration::ZERO), LoadMode::Async, 3, true);
        buf.request_frame(2).unwrap();
        assert!(buf.loader().is_pending(0));
        let mut no_loop = manual(3, LoadMode::Async);
        no_loop.request_frame(2).unwrap();
        assert!(!no_loop.loader().is_pending(0));
    }

    #[test]
    fn errors_carry_the_index() {
        let mut buf = manual(3, LoadMode::Async);
        assert_eq!(buf.request_frame(3).unwrap_err(), PlaybackError::IndexOutOfRange { index: 3, frame_count: 3 });

        let broken = MemoryStore::new(vec![b"nope".to_vec()]);
        let mut buf = PrefetchBuffer::new(SimLoader::new(broken, SimClock::new(), Duration::ZERO), LoadMode::Async, 1, false);
        match buf.request_frame(0) {
            Err(PlaybackError::Load { index: 0, message }) => assert!(message.contains("bad magic")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn waits_on_matching_in_flight_load() {
        let clock = SimClock::new();
        let loader = SimLoader::new(store(4), clock.clone(), Duration::from_millis(20));
        let mut buf = PrefetchBuffer::new(loader, LoadMode::Async, 4, false);
        buf.request_frame(0).unwrap();
        assert_eq!(clock.now(), Duration::from_millis(20));
        // successor scheduled at t=20, ready at t=40; request it at t=25
        clock.advance_to(Duration::from_millis(25));
        buf.request_frame(1).unwrap();
        assert_eq!(clock.now(), Duration::from_millis(40));
        assert_eq!(buf.stats().stall_count, 2);
        assert_eq!(buf.stats().blocked, Duration::from_millis(35));
        assert_eq!(buf.stats().loads_issued, 3);
    }

    #[test]
    fn thread_loader_serves_sequence() {
        let mut buf = PrefetchBuffer::new(ThreadLoader::new(Arc::new(store(10))), LoadMode::Async, 10, false);
        for i in 0..10 {
            let f = buf.request_frame(i).unwrap();
            assert_eq!(f.colors()[0], [i as u8, 0, 0]);
            // give the background thread time to finish the successor
            std::thread::sleep(Duration::from_millis(20));
        }
        assert_eq!(buf.stats().stall_count, 1);
    }
}
