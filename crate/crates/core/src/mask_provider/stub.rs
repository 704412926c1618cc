use std::collections::VecDeque;
use std::path::PathBuf;
use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

use super::{MaskBackend, PromptBackend, TaskContext};
use crate::error::{Error, Result};
use crate::fusion::MaskSource;
use crate::raster::{BinaryMask, RgbImage};

/// Blocks backend calls until opened. Used to simulate a stalled service.
#[derive(Debug, Clone, Default)]
pub struct Gate(Arc<(Mutex<bool>, Condvar)>);

impl Gate {
    pub fn closed() -> Self {
        Gate::default()
    }

    pub fn open(&self) {
        let (lock, cv) = &*self.0;
        *lock.lock().unwrap() = true;
        cv.notify_all();
    }

    pub fn wait(&self) {
        let (lock, cv) = &*self.0;
        let mut open = lock.lock().unwrap();
        while !*open {
            open = cv.wait(open).unwrap();
        }
    }
}

/// Always answers with the same prompt.
#[derive(Debug, Clone)]
pub struct FixedPrompt {
    prompt: String,
}

impl FixedPrompt {
    pub fn new(prompt: impl Into<String>) -> Self {
        FixedPrompt {
            prompt: prompt.into(),
        }
    }
}

impl PromptBackend for FixedPrompt {
    fn name(&self) -> String {
        "fixed-prompt".into()
    }

    fn generate(&self, _task: &TaskContext, _rgb: &RgbImage) -> Result<String> {
        Ok(self.prompt.clone())
    }
}

/// Replays a list of responses; the last one repeats once the list runs out.
/// `Err` entries surface as backend failures.
#[derive(Debug)]
pub struct ScriptedPrompt {
    responses: Mutex<VecDeque<std::result::Result<String, String>>>,
    last: Mutex<std::result::Result<String, String>>,
    first_latency: Duration,
    latency: Duration,
    calls: Mutex<u64>,
    gate: Option<Gate>,
}

impl ScriptedPrompt {
    pub fn new<I, S>(prompts: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::from_results(prompts.into_iter().map(|p| Ok(p.into())))
    }

    pub fn from_results(
        responses: impl IntoIterator<Item = std::result::Result<String, String>>,
    ) -> Self {
        let responses: VecDeque<_> = responses.into_iter().collect();
        let last = responses
            .back()
            .cloned()
            .unwrap_or_else(|| Err("empty script".into()));
        ScriptedPrompt {
            responses: Mutex::new(responses),
            last: Mutex::new(last),
            first_latency: Duration::ZERO,
            latency: Duration::ZERO,
            calls: Mutex::new(0),
            gate: None,
        }
    }

    /// Delay applied to every call after the first.
    pub fn with_latency(mut self, latency: Duration) -> Self {
        self.latency = latency;
        self
    }

    pub fn with_first_latency(mut self, latency: Duration) -> Self {
        self.first_latency = latency;
        self
    }

    pub fn with_gate(mut self, gate: Gate) -> Self {
        self.gate = Some(gate);
        self
    }

    pub fn calls(&self) -> u64 {
        *self.calls.lock().unwrap()
    }
}

impl PromptBackend for ScriptedPrompt {
    fn name(&self) -> String {
        "scripted-prompt".into()
    }

    fn generate(&self, _task: &TaskContext, _rgb: &RgbImage) -> Result<String> {
        let n = {
            let mut c = self.calls.lock().unwrap();
            *c += 1;
            *c
        };
        if let Some(g) = &self.gate {
            g.wait();
        }
        let delay = if n == 1 { self.first_latency } else { self.latency };
        if !delay.is_zero() {
            std::thread::sleep(delay);
        }
        let next = self.responses.lock().unwrap().pop_front();
        let response = match next {
            Some(r) => {
                *self.last.lock().unwrap() = r.clone();
                r
            }
            None => self.last.lock().unwrap().clone(),
        };
        response.map_err(|message| Error::Backend {
            backend: self.name(),
            status: None,
            message,
        })
    }
}

type MaskFn = dyn Fn(&str, &RgbImage, u64) -> Result<BinaryMask> + Send + Sync;

/// Mask backend from a closure, with optional latency.
pub struct FnMaskBackend {
    name: String,
    f: Box<MaskFn>,
    first_latency: Duration,
    latency: Duration,
    calls: Mutex<u64>,
}

impl FnMaskBackend {
    pub fn new(
        name: impl Into<String>,
        f: impl Fn(&str, &RgbImage, u64) -> Result<BinaryMask> + Send + Sync + 'static,
    ) -> Self {
        FnMaskBackend {
            name: name.into(),
            f: Box::new(f),
            first_latency: Duration::ZERO,
            latency: Duration::ZERO,
            calls: Mutex::new(0),
        }
    }

    /// Delay applied to every call after the first.
    pub fn with_latency(mut self, latency: Duration) -> Self {
        self.latency = latency;
        self
    }

    pub fn with_first_latency(mut self, latency: Duration) -> Self {
        self.first_latency = latency;
        self
    }

    pub fn calls(&self) -> u64 {
        *self.calls.lock().unwrap()
    }
}

impl std::fmt::Debug for FnMaskBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FnMaskBackend").field("name", &self.name).finish()
    }
}

impl MaskBackend for FnMaskBackend {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn source(&self) -> MaskSource {
        MaskSource::Service
    }

    fn segment(&self, prompt: &str, rgb: &RgbImage, frame_idx: u64) -> Result<BinaryMask> {
        let n = {
            let mut c = self.calls.lock().unwrap();
            *c += 1;
            *c
        };
        let delay = if n == 1 { self.first_latency } else { self.latency };
        if !delay.is_zero() {
            std::thread::sleep(delay);
        }
        (self.f)(prompt, rgb, frame_idx)
    }
}

/// Precomputed masks stored as `{frame_idx}.png`. The nearest earlier file is
/// used when a frame has none of its own.
#[derive(Debug, Clone)]
pub struct FileMaskBackend {
    dir: PathBuf,
}

impl FileMaskBackend {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        FileMaskBackend { dir: dir.into() }
    }

    pub fn path_for(&self, frame_idx: u64) -> PathBuf {
        self.dir.join(format!("{frame_idx}.png"))
    }
}

impl MaskBackend for FileMaskBackend {
    fn name(&self) -> String {
        format!("mask-files:{}", self.dir.display())
    }

    fn source(&self) -> MaskSource {
        MaskSource::File
    }

    fn segment(&self, _prompt: &str, _rgb: &RgbImage, frame_idx: u64) -> Result<BinaryMask> {
        for idx in (0..=frame_idx).rev() {
            let path = self.path_for(idx);
            if path.is_file() {
                return BinaryMask::load_png(&path);
            }
        }
        Err(Error::Backend {
            backend: self.name(),
            status: None,
            message: format!("no mask file at or before frame {frame_idx}"),
        })
    }
}
