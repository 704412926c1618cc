use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use super::config::{ResolvedSensor, SensorType};
use super::dataset::SensorPayload;
use crate::beamformer::{dominant_bin, normalize, AngleGrid, Heatmap, SteeringCache};
use crate::error::{Error, Result};
use crate::imaging::{colorize, normalize_thermal, normalize_thermal_auto, Calibrated, CalibrationMap, Colormap};
use crate::raster::{BinaryMask, RgbImage, UnitMatrix};
use crate::sensor_model::ArrayGeometry;

/// One sensor sample taken through preprocessing and calibration.
#[derive(Debug, Clone)]
pub struct SensorFrame {
    /// Normalized values in the sensor's own image plane.
    pub field: UnitMatrix,
    /// Beamformed dB map the field was normalized from; array sensors only.
    pub heatmap: Option<Heatmap>,
    /// Colorized and resampled onto the RGB frame.
    pub calibrated: Calibrated,
}

/// Wall-clock split of one `process` call, in seconds.
#[derive(Debug, Clone, Copy, Default)]
pub struct StageTimes {
    pub preprocess: f64,
    pub colorize: f64,
    pub calibrate: f64,
}

/// Everything needed to turn a sensor's raw payload into a calibrated image.
/// Steering phases and resampling taps are built once.
pub struct SensorProcessor {
    sensor: ResolvedSensor,
    colormap: Colormap,
    map: CalibrationMap,
    steering: Option<SteeringCache>,
    /// Microphone arrays: one cache per dominant FFT bin seen.
    by_bin: Mutex<HashMap<(usize, u64), Arc<SteeringCache>>>,
}

impl std::fmt::Debug for SensorProcessor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SensorProcessor")
            .field("sensor_id", &self.sensor.id())
            .finish()
    }
}

impl SensorProcessor {
    pub fn new(sensor: ResolvedSensor, rgb_dims: (usize, usize)) -> Result<Self> {
        let [tw, th] = sensor.calibration.transform.target();
        if (tw, th) != rgb_dims {
            return Err(Error::Config(format!(
                "sensor {:?}: calibration targets {tw}x{th} but RGB frames are {}x{}",
                sensor.id(),
                rgb_dims.0,
                rgb_dims.1
            )));
        }
        let map = CalibrationMap::new(&sensor.calibration.transform, sensor.source_dims())?;
        let steering = match (sensor.config.kind, &sensor.geometry) {
            (SensorType::MmwaveRadar, Some(g)) => Some(SteeringCache::new(g, &sensor.config.grid)),
            _ => None,
        };
        Ok(SensorProcessor {
            colormap: Colormap::new(sensor.config.colormap),
            map,
            steering,
            by_bin: Mutex::new(HashMap::new()),
            sensor,
        })
    }

    pub fn sensor(&self) -> &ResolvedSensor {
        &self.sensor
    }

    pub fn id(&self) -> &str {
        self.sensor.id()
    }

    pub fn alpha(&self) -> f64 {
        self.sensor.config.alpha
    }

    pub fn grid(&self) -> &AngleGrid {
        &self.sensor.config.grid
    }

    pub fn calibration_map(&self) -> &CalibrationMap {
        &self.map
    }

    /// Calibrated image used before the sensor's first sample: no valid pixels.
    pub fn empty(&self) -> SensorFrame {
        let (tw, th) = self.map.target_dims();
        let (sw, sh) = self.map.source_dims();
        SensorFrame {
            field: UnitMatrix::new(sw, sh, vec![0.0; sw * sh]).expect("zeros are in range"),
            heatmap: None,
            calibrated: Calibrated {
                image: RgbImage::filled(tw, th, [0, 0, 0]),
                validity: BinaryMask::zeros(tw, th),
            },
        }
    }

    fn mic_cache(&self, geometry: &ArrayGeometry, bin: usize, wavelength: f64) -> Result<Arc<SteeringCache>> {
        let key = (bin, wavelength.to_bits());
        let mut caches = self.by_bin.lock().unwrap();
        if let Some(c) = caches.get(&key) {
            return Ok(c.clone());
        }
        let g = geometry.with_wavelength(wavelength)?;
        let c = Arc::new(SteeringCache::new(&g, &self.sensor.config.grid));
        caches.insert(key, c.clone());
        Ok(c)
    }

    /// Payload to normalized sensor-plane field.
    pub fn preprocess(&self, payload: &SensorPayload) -> Result<UnitMatrix> {
        Ok(self.preprocess_full(payload)?.0)
    }

    fn preprocess_full(&self, payload: &SensorPayload) -> Result<(UnitMatrix, Option<Heatmap>)> {
        let cfg = &self.sensor.config;
        match (cfg.kind, payload) {
            (SensorType::Thermal, SensorPayload::Thermal(frame)) => {
                if (frame.width(), frame.height()) != self.map.source_dims() {
                    return Err(Error::input(format!(
                        "sensor {:?}: thermal frame is {}x{}, config says {:?}",
                        cfg.sensor_id,
                        frame.width(),
                        frame.height(),
                        self.map.source_dims()
                    )));
                }
                let field = match cfg.t_range {
                    Some([lo, hi]) => normalize_thermal(frame, lo, hi)?,
                    None => normalize_thermal_auto(frame),
                };
                Ok((field, None))
            }
            (SensorType::MmwaveRadar, SensorPayload::Array(snap)) => {
                let cache = self.steering.as_ref().expect("array sensor has steering");
                let heatmap = cache.beamform(snap, cfg.floor_db)?;
                Ok((normalize(&heatmap, cfg.dynamic_range_db)?, Some(heatmap)))
            }
            (SensorType::MicrophoneArray, SensorPayload::Audio(audio)) => {
                let geometry = self.sensor.geometry.as_ref().expect("array sensor has geometry");
                let dom = dominant_bin(&audio.block, audio.sample_rate)?;
                let cache = self.mic_cache(geometry, dom.bin, dom.wavelength(cfg.speed_of_sound))?;
                let heatmap = cache.beamform(&dom.snapshot(audio.block.timestamp_ns)?, cfg.floor_db)?;
                Ok((normalize(&heatmap, cfg.dynamic_range_db)?, Some(heatmap)))
            }
            _ => Err(Error::input(format!(
                "sensor {:?} ({:?}) got a payload of the wrong kind",
                cfg.sensor_id, cfg.kind
            ))),
        }
    }

    pub fn process(&self, payload: &SensorPayload) -> Result<(SensorFrame, StageTimes)> {
        let t0 = std::time::Instant::now();
        let (field, heatmap) = self.preprocess_full(payload)?;
        let t1 = std::time::Instant::now();
        let colored = colorize(&field, &self.colormap);
        let t2 = std::time::Instant::now();
        let calibrated = self.map.apply(&colored, None)?;
        let t3 = std::time::Instant::now();
        Ok((
            SensorFrame {
                field,
                heatmap,
                calibrated,
            },
            StageTimes {
                preprocess: (t1 - t0).as_secs_f64(),
                colorize: (t2 - t1).as_secs_f64(),
                calibrate: (t3 - t2).as_secs_f64(),
            },
        ))
    }

    /// RGB pixel holding the largest calibrated sensor value, among valid
    /// pixels. `None` when nothing is valid.
    pub fn peak_pixel(&self, field: &UnitMatrix) -> Result<Option<[usize; 2]>> {
        let values = self.map.apply_scalar(field)?;
        let valid = self.map.validity().bits();
        let (tw, _) = self.map.target_dims();
        let mut best: Option<(usize, f64)> = None;
        for (i, (&v, &ok)) in values.iter().zip(valid).enumerate() {
            if ok == 1 && best.is_none_or(|(_, b)| v > b) {
                best = Some((i, v));
            }
        }
        Ok(best.map(|(i, _)| [i % tw, i / tw]))
    }
}
