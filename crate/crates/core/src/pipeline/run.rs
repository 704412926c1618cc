use std::path::{Path, PathBuf};
use std::sync::{mpsc, Arc};
use std::time::{Duration, Instant};

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{HeatmapFormat, Mode, ResolvedSensor, RunConfig};
use super::dataset::{Dataset, FrameBundle};
use super::report::{FrameRecord, RunReport, Timings};
use super::sensor::{SensorFrame, SensorProcessor};
use super::synth::{make_synthetic_dataset, SceneScript};
use crate::error::{Error, Result};
use crate::fusion::{blend, SegMask, SensorMaskedImage};
use crate::mask_provider::{AsyncMaskProvider, MaskBackend, MaskFeed, PromptBackend, SyncMaskProvider, TaskContext};

pub const REPORT_FILE: &str = "report.json";

/// Largest share of unreadable frames a batch run tolerates.
pub const MAX_SKIPPED_FRACTION: f64 = 0.01;

/// All sensors of a run, ready to process frames of one RGB size.
#[derive(Debug)]
pub struct Engine {
    processors: Vec<SensorProcessor>,
    rgb_dims: (usize, usize),
}

/// Latest processed sample per sensor, in engine sensor order.
#[derive(Debug, Clone)]
pub struct HeldSamples(Vec<Arc<SensorFrame>>);

impl Engine {
    pub fn new(sensors: Vec<ResolvedSensor>, rgb_dims: (usize, usize)) -> Result<Self> {
        let processors = sensors
            .into_iter()
            .map(|s| SensorProcessor::new(s, rgb_dims))
            .collect::<Result<_>>()?;
        Ok(Engine { processors, rgb_dims })
    }

    pub fn processors(&self) -> &[SensorProcessor] {
        &self.processors
    }

    pub fn rgb_dims(&self) -> (usize, usize) {
        self.rgb_dims
    }

    pub fn sensor_ids(&self) -> Vec<&str> {
        self.processors.iter().map(|p| p.id()).collect()
    }

    /// Nothing received yet: every sensor leaves the RGB frame untouched.
    pub fn initial_samples(&self) -> HeldSamples {
        HeldSamples(self.processors.iter().map(|p| Arc::new(p.empty())).collect())
    }

    /// Samples that arrived with `bundle` and carry a beamformer heatmap.
    pub fn fresh_heatmaps(&self, bundle: &FrameBundle, held: &HeldSamples) -> Vec<(String, Arc<SensorFrame>)> {
        self.processors
            .iter()
            .zip(&held.0)
            .filter(|(p, s)| bundle.payloads.contains_key(p.id()) && s.heatmap.is_some())
            .map(|(p, s)| (p.id().to_string(), s.clone()))
            .collect()
    }

    /// Processes the payloads present in `bundle`, holds the latest sample of
    /// the others, and blends every sensor under `mask`. Sensors run in
    /// parallel; the result is in sensor order.
    pub fn process_frame(
        &self,
        bundle: &FrameBundle,
        held: &mut HeldSamples,
        mask: &SegMask,
        now: Duration,
        timings: &mut Timings,
    ) -> Result<Vec<SensorMaskedImage>> {
        if bundle.rgb.dims() != self.rgb_dims {
            return Err(Error::input(format!(
                "frame {} is {:?}, pipeline expects {:?}",
                bundle.frame_idx,
                bundle.rgb.dims(),
                self.rgb_dims
            )));
        }
        let results: Vec<_> = self
            .processors
            .par_iter()
            .zip(held.0.par_iter_mut())
            .map(|(p, slot)| {
                let mut stages = [0.0; 4];
                if let Some(payload) = bundle.payloads.get(p.id()) {
                    let (frame, t) = p.process(payload)?;
                    *slot = Arc::new(frame);
                    stages[..3].copy_from_slice(&[t.preprocess, t.colorize, t.calibrate]);
                }
                let t0 = Instant::now();
                let cal = &slot.calibrated;
                let image = blend(&bundle.rgb, &cal.image, &cal.validity, &mask.mask, p.alpha())?;
                stages[3] = t0.elapsed().as_secs_f64();
                Ok((SensorMaskedImage::new(image, p.alpha(), p.id(), mask, now), stages))
            })
            .collect::<Result<_>>()?;
        let mut sums = [0.0; 4];
        let mut out = Vec::with_capacity(results.len());
        for (img, stages) in results {
            for (s, v) in sums.iter_mut().zip(stages) {
                *s += v;
            }
            out.push(img);
        }
        for (name, v) in ["preprocess", "colorize", "calibrate", "blend"].into_iter().zip(sums) {
            timings.record(name, v);
        }
        Ok(out)
    }
}

/// JSON written next to each output PNG.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub frame_idx: u64,
    pub sensor_id: String,
    pub alpha: f64,
    pub mask_prompt: String,
    pub mask_generation: u64,
    pub mask_age_ms: u64,
    pub frame_timestamp_ns: u64,
}

pub fn output_stem(frame_idx: u64, sensor_id: &str) -> String {
    format!("{frame_idx}_{sensor_id}")
}

/// Writes `{frame_idx}_{sensor_id}.png` and `.json` for each image.
pub fn write_outputs(dir: &Path, frame_idx: u64, images: &[SensorMaskedImage]) -> Result<usize> {
    for img in images {
        let stem = output_stem(frame_idx, &img.sensor_id);
        img.image.save_png(&dir.join(format!("{stem}.png")))?;
        let sidecar = Sidecar {
            frame_idx,
            sensor_id: img.sensor_id.clone(),
            alpha: img.alpha,
            mask_prompt: img.mask_prompt.clone(),
            mask_generation: img.mask_generation,
            mask_age_ms: img.mask_age_ms,
            frame_timestamp_ns: img.frame_timestamp.as_nanos() as u64,
        };
        let path = dir.join(format!("{stem}.json"));
        let text = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
        std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
    }
    Ok(images.len())
}

/// Writes `{frame_idx}_{sensor_id}_heatmap.pfm` (dB) or `.png` (normalized).
pub fn write_heatmaps(
    dir: &Path,
    frame_idx: u64,
    samples: &[(String, Arc<SensorFrame>)],
    format: HeatmapFormat,
) -> Result<()> {
    for (id, sample) in samples {
        let path = dir.join(format!("{}_heatmap.{}", output_stem(frame_idx, id), format.extension()));
        match (format, &sample.heatmap) {
            (HeatmapFormat::Pfm, Some(h)) => h.save_pfm(&path)?,
            (HeatmapFormat::Png, Some(_)) => {
                std::fs::write(&path, sample.field.encode_png16()?).map_err(|e| Error::io(&path, e))?
            }
            (_, None) => {}
        }
    }
    Ok(())
}

fn write_report(dir: &Path, report: &RunReport) -> Result<()> {
    let path = dir.join(REPORT_FILE);
    let text = serde_json::to_string_pretty(report).expect("report serializes");
    std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
}

fn mode_name(mode: Mode) -> String {
    serde_json::to_value(mode)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

/// The dataset a config points at. A scene script is synthesized first into
/// `<output>/input` with the config seed.
pub fn prepare_input(cfg: &RunConfig) -> Result<PathBuf> {
    let input = cfg.input_path();
    if input.is_file() {
        let script = SceneScript::load(&input)?;
        let dir = cfg.output_path().join("input");
        make_synthetic_dataset(&script, &dir, cfg.seed)?;
        Ok(dir)
    } else {
        Ok(input)
    }
}

struct Prepared {
    engine: Engine,
    dataset: Dataset,
    out_dir: PathBuf,
}

fn prepare(cfg: &RunConfig) -> Result<Prepared> {
    cfg.validate()?;
    let sensors = cfg.resolve_sensors()?;
    let dataset = Dataset::open(&prepare_input(cfg)?)?;
    let engine = Engine::new(sensors, dataset.manifest().rgb_dims())?;
    let out_dir = cfg.output_path();
    std::fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;
    Ok(Prepared {
        engine,
        dataset,
        out_dir,
    })
}

fn task_context(cfg: &RunConfig) -> Result<TaskContext> {
    TaskContext::new(cfg.task.clone(), format!("task-{}", cfg.seed))
        .map_err(|e| Error::Config(e.to_string()))
}

fn empty_report(mode: Mode, frames_total: usize, config: serde_json::Value) -> RunReport {
    RunReport {
        mode: mode_name(mode),
        frames_total,
        frames: 0,
        frames_skipped: 0,
        skipped_frames: Vec::new(),
        outputs_written: 0,
        timing: Default::default(),
        per_frame: Vec::new(),
        config,
    }
}

fn check_skipped(report: &RunReport) -> Result<()> {
    if report.frames_skipped as f64 > MAX_SKIPPED_FRACTION * report.frames_total as f64 {
        return Err(Error::Format(format!(
            "{} of {} frames unreadable (frames {:?})",
            report.frames_skipped, report.frames_total, report.skipped_frames
        )));
    }
    Ok(())
}

/// Offline run over a dataset. Time comes from frame timestamps and backends
/// are called synchronously, so reruns with stub backends are bit-identical.
pub fn run_batch(cfg: &RunConfig) -> Result<RunReport> {
    let (prompts, masks) = cfg.backends()?;
    run_batch_with(cfg, prompts, masks)
}

pub fn run_batch_with(
    cfg: &RunConfig,
    prompts: Arc<dyn PromptBackend>,
    masks: Arc<dyn MaskBackend>,
) -> Result<RunReport> {
    let Prepared {
        engine,
        dataset,
        out_dir,
    } = prepare(cfg)?;
    let mut report = empty_report(Mode::Batch, dataset.len(), cfg.echo());
    if dataset.is_empty() {
        write_report(&out_dir, &report)?;
        return Ok(report);
    }

    let mut feed = SyncMaskProvider::new(task_context(cfg)?, prompts, masks)
        .with_refresh_period(Some(cfg.mask_provider.refresh_period()))
        .with_per_frame_masks(cfg.mask_provider.per_frame())
        .with_timeout(cfg.mask_provider.timeout());
    let ids = engine.sensor_ids();
    let mut held = engine.initial_samples();
    let mut timings = Timings::default();
    let t0_ns = dataset.manifest().frames[0].timestamp_ns;

    for i in 0..dataset.len() {
        let entry_idx = dataset.manifest().frames[i].frame_idx;
        let start = Instant::now();
        let bundle = match dataset.load(i, &ids) {
            Ok(b) => b,
            Err(e) => {
                warn!("skipping frame {entry_idx}: {e}");
                report.skipped_frames.push(entry_idx);
                continue;
            }
        };
        timings.record("load", start.elapsed().as_secs_f64());
        let now = Duration::from_nanos((bundle.timestamp_ns - t0_ns).max(0) as u64);

        let t_proc = Instant::now();
        let snap = feed.mask_for_frame(&bundle.rgb, bundle.frame_idx, now)?;
        timings.record("mask", t_proc.elapsed().as_secs_f64());
        let images = match engine.process_frame(&bundle, &mut held, &snap.mask, now, &mut timings) {
            Ok(v) => v,
            Err(e) => {
                warn!("skipping frame {}: {e}", bundle.frame_idx);
                report.skipped_frames.push(bundle.frame_idx);
                continue;
            }
        };
        let frame_s = t_proc.elapsed().as_secs_f64();
        timings.record("frame", frame_s);

        let t_write = Instant::now();
        report.outputs_written += write_outputs(&out_dir, bundle.frame_idx, &images)?;
        if let Some(format) = cfg.heatmaps {
            write_heatmaps(&out_dir, bundle.frame_idx, &engine.fresh_heatmaps(&bundle, &held), format)?;
        }
        timings.record("write", t_write.elapsed().as_secs_f64());
        timings.record("end_to_end", start.elapsed().as_secs_f64());

        report.frames += 1;
        report.per_frame.push(FrameRecord {
            frame_idx: bundle.frame_idx,
            start_ms: now.as_secs_f64() * 1e3,
            frame_ms: frame_s * 1e3,
            mask_generation: snap.mask.generation,
            mask_age_ms: snap.mask.age_ms(now),
        });
    }

    report.frames_skipped = report.skipped_frames.len();
    report.timing = timings.summarize();
    write_report(&out_dir, &report)?;
    info!(
        "batch: {} frames, {} skipped, {} outputs in {}",
        report.frames,
        report.frames_skipped,
        report.outputs_written,
        out_dir.display()
    );
    check_skipped(&report)?;
    Ok(report)
}

#[derive(Debug, Clone)]
pub struct StreamOptions {
    pub refresh_period: Duration,
    pub backend_timeout: Duration,
    /// Where to write outputs; `None` discards them.
    pub output_dir: Option<PathBuf>,
    /// Replay at the frames' own timestamps instead of as fast as possible.
    pub realtime: bool,
    /// Also write beamformer heatmaps; needs `output_dir`.
    pub heatmaps: Option<HeatmapFormat>,
    pub config: serde_json::Value,
}

/// Live run. The pipeline clock is wall time since the first frame, mask
/// refreshes run in the background, and outputs go to a writer thread in
/// frame order. Frame time covers mask lookup, sensor processing and blending.
pub fn run_stream_with<I>(
    engine: &Engine,
    ctx: TaskContext,
    prompts: Arc<dyn PromptBackend>,
    masks: Arc<dyn MaskBackend>,
    frames: I,
    opts: &StreamOptions,
) -> Result<RunReport>
where
    I: IntoIterator<Item = (u64, Result<FrameBundle>)>,
{
    let mut report = empty_report(Mode::Stream, 0, opts.config.clone());
    let mut timings = Timings::default();
    let mut held = engine.initial_samples();
    let mut provider: Option<AsyncMaskProvider> = None;
    let mut clock: Option<(Instant, i64)> = None;

    type Outputs = (u64, Vec<SensorMaskedImage>, Vec<(String, Arc<SensorFrame>)>);
    let (tx, rx) = mpsc::sync_channel::<Outputs>(4);
    let heatmaps = opts.heatmaps;
    let writer = opts.output_dir.clone().map(|dir| {
        std::thread::spawn(move || -> Result<usize> {
            let mut n = 0;
            for (idx, images, samples) in rx {
                n += write_outputs(&dir, idx, &images)?;
                if let Some(format) = heatmaps {
                    write_heatmaps(&dir, idx, &samples, format)?;
                }
            }
            Ok(n)
        })
    });

    for (idx, bundle) in frames {
        report.frames_total += 1;
        let bundle = match bundle {
            Ok(b) => b,
            Err(e) => {
                warn!("skipping frame {idx}: {e}");
                report.skipped_frames.push(idx);
                continue;
            }
        };
        let (start, t0_ns) = *clock.get_or_insert_with(|| (Instant::now(), bundle.timestamp_ns));
        if opts.realtime {
            let due = start + Duration::from_nanos((bundle.timestamp_ns - t0_ns).max(0) as u64);
            if let Some(wait) = due.checked_duration_since(Instant::now()) {
                std::thread::sleep(wait);
            }
        }
        let frame_start = Instant::now();
        let now = frame_start - start;

        let provider = match &mut provider {
            Some(p) => p,
            None => provider.insert(AsyncMaskProvider::start(
                ctx.clone(),
                &bundle.rgb,
                prompts.clone(),
                masks.clone(),
                opts.refresh_period,
                opts.backend_timeout,
                now,
            )?),
        };
        // Startup is not frame time.
        let frame_start = if report.frames == 0 { Instant::now() } else { frame_start };

        let snap = provider.mask_for_frame(&bundle.rgb, bundle.frame_idx, now)?;
        let images = match engine.process_frame(&bundle, &mut held, &snap.mask, now, &mut timings) {
            Ok(v) => v,
            Err(e) => {
                warn!("skipping frame {}: {e}", bundle.frame_idx);
                report.skipped_frames.push(bundle.frame_idx);
                continue;
            }
        };
        let frame_s = frame_start.elapsed().as_secs_f64();
        timings.record("frame", frame_s);
        report.frames += 1;
        report.per_frame.push(FrameRecord {
            frame_idx: bundle.frame_idx,
            start_ms: now.as_secs_f64() * 1e3,
            frame_ms: frame_s * 1e3,
            mask_generation: snap.mask.generation,
            mask_age_ms: snap.mask.age_ms(now),
        });
        let samples = match heatmaps {
            Some(_) => engine.fresh_heatmaps(&bundle, &held),
            None => Vec::new(),
        };
        if writer.is_some() && tx.send((bundle.frame_idx, images, samples)).is_err() {
            break;
        }
    }
    drop(tx);
    if let Some(w) = writer {
        report.outputs_written = w.join().expect("writer thread panicked")?;
    }
    report.frames_skipped = report.skipped_frames.len();
    report.timing = timings.summarize();
    Ok(report)
}

pub fn run_stream(cfg: &RunConfig) -> Result<RunReport> {
    let (prompts, masks) = cfg.backends()?;
    let Prepared {
        engine,
        dataset,
        out_dir,
    } = prepare(cfg)?;
    let ids: Vec<String> = engine.sensor_ids().iter().map(|s| s.to_string()).collect();
    let ids: Vec<&str> = ids.iter().map(String::as_str).collect();
    let frames = (0..dataset.len()).map(|i| (dataset.manifest().frames[i].frame_idx, dataset.load(i, &ids)));
    let opts = StreamOptions {
        refresh_period: cfg.mask_provider.refresh_period(),
        backend_timeout: cfg.mask_provider.timeout(),
        output_dir: Some(out_dir.clone()),
        realtime: true,
        heatmaps: cfg.heatmaps,
        config: cfg.echo(),
    };
    let report = run_stream_with(&engine, task_context(cfg)?, prompts, masks, frames, &opts)?;
    write_report(&out_dir, &report)?;
    check_skipped(&report)?;
    Ok(report)
}
