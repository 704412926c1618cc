use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant};

use log::{debug, warn};

use super::{acquire_prompt, segment, MaskBackend, PromptBackend, PromptState, TaskContext};
use crate::error::{Error, Result};
use crate::fusion::SegMask;
use crate::raster::RgbImage;

/// A prompt and the mask computed for it, published together.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskSnapshot {
    pub prompt: PromptState,
    pub mask: SegMask,
}

/// What the frame loop sees: the mask to use for this frame.
pub trait MaskFeed {
    fn mask_for_frame(
        &mut self,
        rgb: &RgbImage,
        frame_idx: u64,
        now: Duration,
    ) -> Result<Arc<MaskSnapshot>>;
}

/// One refresh attempt: new prompt from `rgb`, then its mask.
fn refresh_once(
    ctx: &TaskContext,
    current: &PromptState,
    rgb: &RgbImage,
    frame_idx: u64,
    now: Duration,
    prompts: &dyn PromptBackend,
    masks: &dyn MaskBackend,
) -> Result<MaskSnapshot> {
    let text = prompts.generate(ctx, rgb)?;
    if text.trim().is_empty() {
        return Err(Error::Protocol {
            backend: prompts.name(),
            message: "empty prompt".into(),
        });
    }
    let prompt = PromptState {
        prompt: text,
        generation: current.generation + 1,
        last_refreshed: now,
    };
    let mask = segment(&prompt, rgb, masks, frame_idx, now)?;
    Ok(MaskSnapshot { prompt, mask })
}

/// Blocking provider for offline runs. Everything happens on the caller's
/// thread against the caller's clock, so results are reproducible.
pub struct SyncMaskProvider {
    ctx: TaskContext,
    prompts: Arc<dyn PromptBackend>,
    masks: Arc<dyn MaskBackend>,
    refresh_period: Option<Duration>,
    per_frame: bool,
    timeout: Duration,
    state: Option<Arc<MaskSnapshot>>,
    last_request: Duration,
}

impl SyncMaskProvider {
    pub fn new(
        ctx: TaskContext,
        prompts: Arc<dyn PromptBackend>,
        masks: Arc<dyn MaskBackend>,
    ) -> Self {
        SyncMaskProvider {
            ctx,
            prompts,
            masks,
            refresh_period: None,
            per_frame: false,
            timeout: super::DEFAULT_BACKEND_TIMEOUT,
            state: None,
            last_request: Duration::ZERO,
        }
    }

    /// `None` keeps the first prompt for the whole run.
    pub fn with_refresh_period(mut self, period: Option<Duration>) -> Self {
        self.refresh_period = period;
        self
    }

    /// Re-segment every frame with the current prompt.
    pub fn with_per_frame_masks(mut self, on: bool) -> Self {
        self.per_frame = on;
        self
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn current(&self) -> Option<Arc<MaskSnapshot>> {
        self.state.clone()
    }
}

impl MaskFeed for SyncMaskProvider {
    fn mask_for_frame(
        &mut self,
        rgb: &RgbImage,
        frame_idx: u64,
        now: Duration,
    ) -> Result<Arc<MaskSnapshot>> {
        let Some(cur) = self.state.clone() else {
            let prompt = acquire_prompt(&self.ctx, rgb, self.prompts.clone(), self.timeout, now)?;
            let mask = segment(&prompt, rgb, self.masks.as_ref(), frame_idx, now)?;
            let snap = Arc::new(MaskSnapshot { prompt, mask });
            self.state = Some(snap.clone());
            self.last_request = now;
            return Ok(snap);
        };

        let due = self
            .refresh_period
            .is_some_and(|p| now.saturating_sub(self.last_request) >= p);
        if due {
            self.last_request = now;
            match refresh_once(
                &self.ctx,
                &cur.prompt,
                rgb,
                frame_idx,
                now,
                self.prompts.as_ref(),
                self.masks.as_ref(),
            ) {
                Ok(snap) => {
                    let snap = Arc::new(snap);
                    self.state = Some(snap.clone());
                    return Ok(snap);
                }
                Err(e) => warn!("prompt refresh failed, keeping generation {}: {e}", cur.prompt.generation),
            }
        }

        if self.per_frame {
            match segment(&cur.prompt, rgb, self.masks.as_ref(), frame_idx, now) {
                Ok(mask) => {
                    let snap = Arc::new(MaskSnapshot {
                        prompt: cur.prompt.clone(),
                        mask,
                    });
                    self.state = Some(snap.clone());
                    return Ok(snap);
                }
                Err(e) => warn!("segmentation failed on frame {frame_idx}, reusing previous mask: {e}"),
            }
        }
        Ok(cur)
    }
}

struct Request {
    rgb: RgbImage,
    frame_idx: u64,
    at: Duration,
}

struct Shared {
    latest: Mutex<Arc<MaskSnapshot>>,
    published: Condvar,
    pending: Mutex<Option<Request>>,
    wake: Condvar,
    in_flight: AtomicBool,
    shutdown: AtomicBool,
}

/// Live provider. Refreshes run on a worker thread and are published as a
/// whole (prompt, mask) pair, so readers never see a prompt without its mask.
/// At most one refresh is outstanding; a failed refresh keeps the previous
/// pair.
pub struct AsyncMaskProvider {
    shared: Arc<Shared>,
    refresh_period: Duration,
    last_request: Duration,
    worker: Option<std::thread::JoinHandle<()>>,
}

impl AsyncMaskProvider {
    /// Acquires the first prompt and mask (blocking) and starts the worker.
    pub fn start(
        ctx: TaskContext,
        first_rgb: &RgbImage,
        prompts: Arc<dyn PromptBackend>,
        masks: Arc<dyn MaskBackend>,
        refresh_period: Duration,
        timeout: Duration,
        now: Duration,
    ) -> Result<Self> {
        let prompt = acquire_prompt(&ctx, first_rgb, prompts.clone(), timeout, now)?;
        let mask = segment(&prompt, first_rgb, masks.as_ref(), 0, now)?;
        let shared = Arc::new(Shared {
            latest: Mutex::new(Arc::new(MaskSnapshot { prompt, mask })),
            published: Condvar::new(),
            pending: Mutex::new(None),
            wake: Condvar::new(),
            in_flight: AtomicBool::new(false),
            shutdown: AtomicBool::new(false),
        });
        let worker_shared = shared.clone();
        let worker = std::thread::Builder::new()
            .name("prompt-refresh".into())
            .spawn(move || worker_loop(worker_shared, ctx, prompts, masks))
            .map_err(|e| Error::Startup {
                backend: "prompt-refresh".into(),
                message: e.to_string(),
            })?;
        Ok(AsyncMaskProvider {
            shared,
            refresh_period,
            last_request: now,
            worker: Some(worker),
        })
    }

    /// Latest published pair. Never blocks on a backend.
    pub fn current(&self) -> Arc<MaskSnapshot> {
        self.shared.latest.lock().unwrap().clone()
    }

    pub fn in_flight(&self) -> bool {
        self.shared.in_flight.load(Ordering::Acquire)
    }

    /// Queues a refresh from `rgb`. Returns false if one is already running.
    pub fn refresh_prompt_async(&mut self, rgb: &RgbImage, frame_idx: u64, now: Duration) -> bool {
        if self
            .shared
            .in_flight
            .compare_exchange(false, true, Ordering::AcqRel, Ordering::Acquire)
            .is_err()
        {
            return false;
        }
        self.last_request = now;
        *self.shared.pending.lock().unwrap() = Some(Request {
            rgb: rgb.clone(),
            frame_idx,
            at: now,
        });
        self.shared.wake.notify_one();
        true
    }

    /// Blocks until a generation of at least `generation` is published.
    pub fn wait_for_generation(&self, generation: u64, timeout: Duration) -> Option<Arc<MaskSnapshot>> {
        let deadline = Instant::now() + timeout;
        let mut latest = self.shared.latest.lock().unwrap();
        while latest.prompt.generation < generation {
            let left = deadline.checked_duration_since(Instant::now())?;
            latest = self.shared.published.wait_timeout(latest, left).unwrap().0;
        }
        Some(latest.clone())
    }

    /// Blocks until no refresh is outstanding.
    pub fn wait_idle(&self, timeout: Duration) -> bool {
        let deadline = Instant::now() + timeout;
        let mut latest = self.shared.latest.lock().unwrap();
        while self.in_flight() {
            let Some(left) = deadline.checked_duration_since(Instant::now()) else {
                return false;
            };
            latest = self.shared.published.wait_timeout(latest, left).unwrap().0;
        }
        true
    }
}

impl MaskFeed for AsyncMaskProvider {
    fn mask_for_frame(
        &mut self,
        rgb: &RgbImage,
        frame_idx: u64,
        now: Duration,
    ) -> Result<Arc<MaskSnapshot>> {
        if now.saturating_sub(self.last_request) >= self.refresh_period {
            self.refresh_prompt_async(rgb, frame_idx, now);
        }
        Ok(self.current())
    }
}

impl Drop for AsyncMaskProvider {
    fn drop(&mut self) {
        self.shared.shutdown.store(true, Ordering::Release);
        self.shared.wake.notify_all();
        // A stalled backend call cannot be interrupted; only join an idle worker.
        if let Some(w) = self.worker.take() {
            if !self.in_flight() {
                let _ = w.join();
            }
        }
    }
}

fn worker_loop(
    shared: Arc<Shared>,
    ctx: TaskContext,
    prompts: Arc<dyn PromptBackend>,
    masks: Arc<dyn MaskBackend>,
) {
    loop {
        let req = {
            let mut pending = shared.pending.lock().unwrap();
            loop {
                if shared.shutdown.load(Ordering::Acquire) {
                    return;
                }
                if let Some(r) = pending.take() {
                    break r;
                }
                pending = shared.wake.wait(pending).unwrap();
            }
        };
        let current = shared.latest.lock().unwrap().prompt.clone();
        let result = refresh_once(
            &ctx,
            &current,
            &req.rgb,
            req.frame_idx,
            req.at,
            prompts.as_ref(),
            masks.as_ref(),
        );
        {
            let mut latest = shared.latest.lock().unwrap();
            match result {
                Ok(snap) => {
                    debug!(
                        "prompt generation {} published: {:?}",
                        snap.prompt.generation, snap.prompt.prompt
                    );
                    *latest = Arc::new(snap);
                }
                Err(e) => warn!(
                    "prompt refresh failed, keeping generation {}: {e}",
                    current.generation
                ),
            }
            shared.in_flight.store(false, Ordering::Release);
        }
        shared.published.notify_all();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mask_provider::{FixedPrompt, FnMaskBackend, ScriptedPrompt};
    use crate::raster::BinaryMask;

    fn rect_masks() -> Arc<FnMaskBackend> {
        Arc::new(FnMaskBackend::new("rect", |p: &str, rgb: &RgbImage, _| {
            let w = p.len() as i64;
            Ok(BinaryMask::rectangle(rgb.width(), rgb.height(), [0, 0, w, 2]))
        }))
    }

    fn ctx() -> TaskContext {
        TaskContext::new("find the boxes", "t").unwrap()
    }

    #[test]
    fn sync_refresh_bumps_generation_even_for_same_text() {
        let rgb = RgbImage::filled(10, 4, [0, 0, 0]);
        let mut p = SyncMaskProvider::new(ctx(), Arc::new(FixedPrompt::new("box")), rect_masks())
            .with_refresh_period(Some(Duration::from_millis(100)));
        let g: Vec<u64> = (0..10u64)
            .map(|i| {
                let now = Duration::from_millis(50 * i);
                p.mask_for_frame(&rgb, i, now).unwrap().prompt.generation
            })
            .collect();
        assert_eq!(g, [1, 1, 2, 2, 3, 3, 4, 4, 5, 5]);
    }

    #[test]
    fn sync_failure_keeps_previous() {
        let rgb = RgbImage::filled(10, 4, [0, 0, 0]);
        let prompts = ScriptedPrompt::from_results([
            Ok("first".to_string()),
            Err("offline".to_string()),
            Ok("third".to_string()),
        ]);
        let mut p = SyncMaskProvider::new(ctx(), Arc::new(prompts), rect_masks())
            .with_refresh_period(Some(Duration::from_secs(1)));
        let a = p.mask_for_frame(&rgb, 0, Duration::ZERO).unwrap();
        let b = p.mask_for_frame(&rgb, 1, Duration::from_secs(1)).unwrap();
        assert_eq!(a, b);
        let c = p.mask_for_frame(&rgb, 2, Duration::from_secs(2)).unwrap();
        assert_eq!(c.prompt.generation, 2);
        assert_eq!(c.prompt.prompt, "third");
        assert_eq!(c.mask.mask.count_ones(), 2 * 5);
    }

    #[test]
    fn async_publishes_prompt_and_mask_together() {
        let rgb = RgbImage::filled(10, 4, [0, 0, 0]);
        let prompts = ScriptedPrompt::new(["ab", "abcd", "abcdef"]);
        let mut p = AsyncMaskProvider::start(
            ctx(),
            &rgb,
            Arc::new(prompts),
            rect_masks(),
            Duration::from_secs(2),
            Duration::from_secs(5),
            Duration::ZERO,
        )
        .unwrap();
        assert_eq!(p.current().prompt.generation, 1);
        for g in 2..=3u64 {
            assert!(p.refresh_prompt_async(&rgb, g, Duration::from_secs(g)));
            let s = p.wait_for_generation(g, Duration::from_secs(5)).unwrap();
            assert_eq!(s.prompt.generation, g);
            assert_eq!(s.mask.generation, g);
            assert_eq!(s.mask.prompt_text, s.prompt.prompt);
            assert_eq!(s.mask.mask.count_ones(), s.prompt.prompt.len() * 2);
            assert_eq!(s.mask.created_at, Duration::from_secs(g));
        }
    }

    #[test]
    fn async_stalled_backend_does_not_block_reads() {
        let rgb = RgbImage::filled(10, 4, [0, 0, 0]);
        // Startup is immediate; every later call stalls.
        let prompts = Arc::new(ScriptedPrompt::new(["a", "b"]).with_latency(Duration::from_secs(600)));
        let mut p = AsyncMaskProvider::start(
            ctx(),
            &rgb,
            prompts,
            rect_masks(),
            Duration::from_millis(1),
            Duration::from_secs(5),
            Duration::ZERO,
        )
        .unwrap();
        assert!(p.refresh_prompt_async(&rgb, 1, Duration::from_millis(5)));
        assert!(!p.refresh_prompt_async(&rgb, 2, Duration::from_millis(10)));
        let t = Instant::now();
        for i in 0..100 {
            let s = p.mask_for_frame(&rgb, i, Duration::from_millis(20 + i)).unwrap();
            assert_eq!(s.prompt.generation, 1);
        }
        assert!(t.elapsed() < Duration::from_millis(500));
    }
}
