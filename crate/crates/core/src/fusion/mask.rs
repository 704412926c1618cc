use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::raster::BinaryMask;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskSource {
    File,
    Service,
}

/// Segmentation mask in RGB pixel coordinates, 1 on task-relevant objects.
#[derive(Debug, Clone, PartialEq)]
pub struct SegMask {
    pub mask: BinaryMask,
    pub prompt_text: String,
    pub source: MaskSource,
    /// Prompt generation the mask was computed for.
    pub generation: u64,
    /// Pipeline-clock time of the RGB frame the mask was computed from.
    pub created_at: Duration,
}

impl SegMask {
    pub fn dims(&self) -> (usize, usize) {
        self.mask.dims()
    }

    /// Age relative to `now` on the same pipeline clock, in milliseconds.
    pub fn age_ms(&self, now: Duration) -> u64 {
        now.saturating_sub(self.created_at).as_millis() as u64
    }
}
