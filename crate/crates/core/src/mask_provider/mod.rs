//! Prompt generation and segmentation behind pluggable backends, plus the
//! prompt/mask refresh lifecycle.
//!
//! The prompt is acquired once, blocking, when a task starts. After that the
//! frame loop only reads the latest completed (prompt, mask) pair; refreshes
//! run on a background worker so backend latency never reaches frame time.

mod http;
mod refresh;
mod stub;

use std::sync::mpsc;
use std::sync::Arc;
use std::time::{Duration, SystemTime};

pub use http::{HttpMaskBackend, HttpPromptBackend};
pub use refresh::{AsyncMaskProvider, MaskFeed, MaskSnapshot, SyncMaskProvider};
pub use stub::{FileMaskBackend, FixedPrompt, FnMaskBackend, Gate, ScriptedPrompt};

use crate::error::{Error, Result};
use crate::fusion::{MaskSource, SegMask};
use crate::raster::{BinaryMask, RgbImage};

pub const DEFAULT_BACKEND_TIMEOUT: Duration = Duration::from_secs(30);
pub const DEFAULT_REFRESH_PERIOD: Duration = Duration::from_secs(2);

#[derive(Debug, Clone, PartialEq)]
pub struct TaskContext {
    pub task_text: String,
    pub task_id: String,
    pub started_at: SystemTime,
}

impl TaskContext {
    pub fn new(task_text: impl Into<String>, task_id: impl Into<String>) -> Result<Self> {
        let task_text = task_text.into();
        if task_text.trim().is_empty() {
            return Err(Error::input("task text must not be empty"));
        }
        Ok(TaskContext {
            task_text,
            task_id: task_id.into(),
            started_at: SystemTime::now(),
        })
    }
}

/// Current segmentation prompt. `generation` starts at 1 and grows by one
/// per accepted refresh.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptState {
    pub prompt: String,
    pub generation: u64,
    /// Pipeline-clock time of the frame the prompt was generated from.
    pub last_refreshed: Duration,
}

/// Text endpoint turning (task, frame) into a segmentation prompt.
pub trait PromptBackend: Send + Sync {
    fn name(&self) -> String;
    fn generate(&self, task: &TaskContext, rgb: &RgbImage) -> Result<String>;
}

/// Produces a 0/1 mask for a prompt on one frame.
pub trait MaskBackend: Send + Sync {
    fn name(&self) -> String;
    fn source(&self) -> MaskSource;
    fn segment(&self, prompt: &str, rgb: &RgbImage, frame_idx: u64) -> Result<BinaryMask>;
}

/// Blocking first prompt of a task. Failure here means the task cannot start.
pub fn acquire_prompt(
    ctx: &TaskContext,
    first_rgb: &RgbImage,
    backend: Arc<dyn PromptBackend>,
    timeout: Duration,
    now: Duration,
) -> Result<PromptState> {
    let name = backend.name();
    let (tx, rx) = mpsc::channel();
    let (ctx2, rgb2) = (ctx.clone(), first_rgb.clone());
    std::thread::Builder::new()
        .name("prompt-acquire".into())
        .spawn(move || {
            let _ = tx.send(backend.generate(&ctx2, &rgb2));
        })
        .map_err(|e| Error::Startup {
            backend: name.clone(),
            message: format!("cannot spawn request thread: {e}"),
        })?;

    let prompt = match rx.recv_timeout(timeout) {
        Ok(Ok(p)) => p,
        Ok(Err(e @ Error::Protocol { .. })) => return Err(e),
        Ok(Err(e)) => {
            return Err(Error::Startup {
                backend: name,
                message: e.to_string(),
            })
        }
        Err(_) => {
            return Err(Error::Startup {
                backend: name,
                message: format!("no prompt within {timeout:?}"),
            })
        }
    };
    if prompt.trim().is_empty() {
        return Err(Error::Protocol {
            backend: name,
            message: "empty prompt".into(),
        });
    }
    Ok(PromptState {
        prompt,
        generation: 1,
        last_refreshed: now,
    })
}

/// Runs one segmentation and validates the result against the frame.
pub fn segment(
    prompt: &PromptState,
    rgb: &RgbImage,
    backend: &dyn MaskBackend,
    frame_idx: u64,
    now: Duration,
) -> Result<SegMask> {
    if prompt.prompt.trim().is_empty() {
        return Err(Error::input("segmentation prompt must not be empty"));
    }
    let mask = backend.segment(&prompt.prompt, rgb, frame_idx)?;
    if mask.dims() != rgb.dims() {
        return Err(Error::Protocol {
            backend: backend.name(),
            message: format!(
                "mask is {:?} but the frame is {:?}",
                mask.dims(),
                rgb.dims()
            ),
        });
    }
    Ok(SegMask {
        mask,
        prompt_text: prompt.prompt.clone(),
        source: backend.source(),
        generation: prompt.generation,
        created_at: now,
    })
}
