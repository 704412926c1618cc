use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Distribution of one stage's per-frame wall time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageSummary {
    pub count: usize,
    pub fps: f64,
    pub mean_ms: f64,
    pub p50_ms: f64,
    pub p90_ms: f64,
    pub p99_ms: f64,
    pub max_ms: f64,
}

/// Nearest-rank percentile of sorted samples.
fn percentile(sorted: &[f64], p: f64) -> f64 {
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

impl StageSummary {
    /// `None` for no samples. Input in seconds.
    pub fn from_seconds(samples: &[f64]) -> Option<Self> {
        if samples.is_empty() {
            return None;
        }
        let mut ms: Vec<f64> = samples.iter().map(|s| s * 1e3).collect();
        ms.sort_by(f64::total_cmp);
        let mean = ms.iter().sum::<f64>() / ms.len() as f64;
        Some(StageSummary {
            count: ms.len(),
            fps: if mean > 0.0 { 1e3 / mean } else { f64::INFINITY },
            mean_ms: mean,
            p50_ms: percentile(&ms, 50.0),
            p90_ms: percentile(&ms, 90.0),
            p99_ms: percentile(&ms, 99.0),
            max_ms: *ms.last().unwrap(),
        })
    }
}

/// Per-stage timing samples, in seconds, keyed by stage name.
#[derive(Debug, Clone, Default)]
pub struct Timings(BTreeMap<&'static str, Vec<f64>>);

impl Timings {
    pub fn record(&mut self, stage: &'static str, seconds: f64) {
        self.0.entry(stage).or_default().push(seconds);
    }

    pub fn samples(&self, stage: &str) -> &[f64] {
        self.0.get(stage).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn summarize(&self) -> BTreeMap<String, StageSummary> {
        self.0
            .iter()
            .filter_map(|(k, v)| StageSummary::from_seconds(v).map(|s| (k.to_string(), s)))
            .collect()
    }
}

/// What one frame of a run observed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub frame_idx: u64,
    /// Pipeline-clock time the frame started, ms.
    pub start_ms: f64,
    /// Processing time excluding file I/O, ms.
    pub frame_ms: f64,
    pub mask_generation: u64,
    pub mask_age_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub mode: String,
    pub frames_total: usize,
    pub frames: usize,
    pub frames_skipped: usize,
    pub skipped_frames: Vec<u64>,
    pub outputs_written: usize,
    pub timing: BTreeMap<String, StageSummary>,
    pub per_frame: Vec<FrameRecord>,
    /// Effective configuration, defaults included.
    pub config: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub frames: usize,
    pub warmup: usize,
    pub resolution: [usize; 2],
    pub sensors: Vec<String>,
    pub stages: BTreeMap<String, StageSummary>,
    pub end_to_end_fps: Option<f64>,
    /// Uncached over cached beamform time, per array sensor.
    pub beamform_cache_speedup: BTreeMap<String, f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_rank() {
        let v: Vec<f64> = (1..=100).map(|i| i as f64 / 1e3).collect();
        let s = StageSummary::from_seconds(&v).unwrap();
        assert_eq!(s.p50_ms, 50.0);
        assert_eq!(s.p90_ms, 90.0);
        assert_eq!(s.p99_ms, 99.0);
        assert_eq!(s.max_ms, 100.0);
        assert!((s.mean_ms - 50.5).abs() < 1e-9);
        assert!(StageSummary::from_seconds(&[]).is_none());
    }
}
