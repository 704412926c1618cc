use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::config::{BenchConfig, ResolvedSensor, SensorType};
use super::dataset::{AudioPayload, FrameBundle, SensorPayload};
use super::report::{BenchReport, Timings};
use super::run::Engine;
use crate::beamformer::{beamform, AudioBlock, SteeringCache};
use crate::error::Result;
use crate::fusion::{MaskSource, SegMask};
use crate::raster::{BinaryMask, RgbImage};
use crate::sensor_model::{noise_std_for_snr, simulate_snapshot, ArrayGeometry, PointSource, ThermalFrame};

const POOL: usize = 8;
const BENCH_SNR_DB: f64 = 20.0;
const AUDIO_BLOCK: usize = 1024;
const AUDIO_RATE: f64 = 48_000.0;
const AUDIO_BIN: usize = 85;
const SPEEDUP_REPS: usize = 10;
const SPEEDUP_BATCHES: usize = 8;

fn random_source(rng: &mut ChaCha8Rng, sensor: &ResolvedSensor) -> PointSource {
    let g = &sensor.config.grid;
    let (a0, a1) = g.az_range();
    let (e0, e1) = g.el_range();
    PointSource {
        azimuth_deg: rng.gen_range(a0..a1),
        elevation_deg: rng.gen_range(e0..e1),
        amplitude: 1.0,
        phase_offset_rad: rng.gen_range(0.0..2.0 * PI),
    }
}

fn payload(sensor: &ResolvedSensor, rng: &mut ChaCha8Rng) -> Result<SensorPayload> {
    let noise = noise_std_for_snr(1.0, BENCH_SNR_DB);
    Ok(match sensor.config.kind {
        SensorType::Thermal => {
            let (w, h) = sensor.source_dims();
            let (hx, hy) = (rng.gen_range(0..w), rng.gen_range(0..h));
            let values = (0..w * h)
                .map(|i| {
                    let (x, y) = ((i % w) as f64 - hx as f64, (i / w) as f64 - hy as f64);
                    22.0 + 15.0 * (-(x * x + y * y) / 50.0).exp() + rng.gen_range(-0.2..0.2)
                })
                .collect();
            SensorPayload::Thermal(ThermalFrame::new(w, h, values, 0)?)
        }
        SensorType::MmwaveRadar => {
            let g = sensor.geometry.as_ref().expect("array sensor has geometry");
            let src = random_source(rng, sensor);
            SensorPayload::Array(simulate_snapshot(g, &[src], noise, rng.gen())?)
        }
        SensorType::MicrophoneArray => {
            let f = AUDIO_BIN as f64 * AUDIO_RATE / AUDIO_BLOCK as f64;
            let g = sensor
                .geometry
                .as_ref()
                .expect("array sensor has geometry")
                .with_wavelength(sensor.config.speed_of_sound / f)?;
            let src = random_source(rng, sensor);
            let clean = simulate_snapshot(&g, &[src], 0.0, 0)?;
            let n = Normal::new(0.0, noise * (AUDIO_BLOCK as f64).sqrt() / 2.0).expect("valid std");
            let w = 2.0 * PI * AUDIO_BIN as f64 / AUDIO_BLOCK as f64;
            let channels = clean
                .samples()
                .iter()
                .map(|p| {
                    (0..AUDIO_BLOCK)
                        .map(|i| (p * Complex64::from_polar(1.0, w * i as f64)).re + n.sample(rng))
                        .collect()
                })
                .collect();
            SensorPayload::Audio(AudioPayload {
                block: AudioBlock::new(channels, 0)?,
                sample_rate: AUDIO_RATE,
            })
        }
    })
}

/// Uncached over cached beamform time for one geometry.
fn cache_speedup(geometry: &ArrayGeometry, sensor: &ResolvedSensor, rng: &mut ChaCha8Rng) -> Result<f64> {
    let grid = &sensor.config.grid;
    let floor = sensor.config.floor_db;
    let snap = simulate_snapshot(geometry, &[random_source(rng, sensor)], 0.01, rng.gen())?;
    let cache = SteeringCache::new(geometry, grid);
    cache.beamform(&snap, floor)?;
    // Best of several batches, so a preempted batch does not skew the ratio.
    let best = |f: &dyn Fn() -> Result<()>| -> Result<f64> {
        let mut best = f64::INFINITY;
        for _ in 0..SPEEDUP_BATCHES {
            let t = Instant::now();
            for _ in 0..SPEEDUP_REPS {
                f()?;
            }
            best = best.min(t.elapsed().as_secs_f64());
        }
        Ok(best)
    };
    let cached = best(&|| cache.beamform(&snap, floor).map(|h| drop(std::hint::black_box(h))))?;
    let uncached = best(&|| beamform(&snap, geometry, grid, floor).map(|h| drop(std::hint::black_box(h))))?;
    Ok(uncached / cached.max(1e-12))
}

/// Preprocessing throughput on in-memory synthetic payloads: every sensor
/// gets a fresh sample every frame. Warmup frames are not measured.
pub fn run_bench(sensors: Vec<ResolvedSensor>, opts: &BenchConfig, seed: u64) -> Result<BenchReport> {
    let [w, h] = opts.resolution;
    let mut report = BenchReport {
        frames: opts.frames,
        warmup: opts.warmup,
        resolution: opts.resolution,
        sensors: sensors.iter().map(|s| s.id().to_string()).collect(),
        stages: BTreeMap::new(),
        end_to_end_fps: None,
        beamform_cache_speedup: BTreeMap::new(),
    };
    if opts.frames == 0 {
        return Ok(report);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let engine = Engine::new(sensors.clone(), (w, h))?;
    let rgbs: Vec<RgbImage> = (0..4)
        .map(|_| {
            let mut img = RgbImage::filled(w, h, [0, 0, 0]);
            rng.fill(img.pixels_mut());
            img
        })
        .collect();
    let pools = sensors
        .iter()
        .map(|s| (0..POOL).map(|_| payload(s, &mut rng)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let mask = SegMask {
        mask: BinaryMask::rectangle(w, h, [(w / 4) as i64, (h / 4) as i64, (w / 2) as i64, (h / 2) as i64]),
        prompt_text: "bench".into(),
        source: MaskSource::File,
        generation: 1,
        created_at: Duration::ZERO,
    };

    let mut held = engine.initial_samples();
    let mut warm = Timings::default();
    let mut timings = Timings::default();
    let mut measured = Duration::ZERO;
    for i in 0..opts.warmup + opts.frames {
        let bundle = FrameBundle {
            frame_idx: i as u64,
            timestamp_ns: 0,
            rgb: rgbs[i % rgbs.len()].clone(),
            payloads: sensors
                .iter()
                .zip(&pools)
                .map(|(s, pool)| (s.id().to_string(), pool[i % POOL].clone()))
                .collect(),
        };
        let sink = if i < opts.warmup { &mut warm } else { &mut timings };
        let t = Instant::now();
        std::hint::black_box(engine.process_frame(&bundle, &mut held, &mask, Duration::ZERO, sink)?);
        let dt = t.elapsed();
        if i >= opts.warmup {
            timings.record("end_to_end", dt.as_secs_f64());
            measured += dt;
        }
    }
    report.stages = timings.summarize();
    report.end_to_end_fps = Some(opts.frames as f64 / measured.as_secs_f64().max(1e-12));

    for s in &sensors {
        if let Some(g) = &s.geometry {
            let g = match s.config.kind {
                SensorType::MicrophoneArray => g.with_wavelength(
                    s.config.speed_of_sound * AUDIO_BLOCK as f64 / (AUDIO_BIN as f64 * AUDIO_RATE),
                )?,
                _ => g.clone(),
            };
            report
                .beamform_cache_speedup
                .insert(s.id().to_string(), cache_speedup(&g, s, &mut rng)?);
        }
    }
    Ok(report)
}
