use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::beamformer::{AngleGrid, DEFAULT_DYNAMIC_RANGE_DB, DEFAULT_FLOOR_DB};
use crate::error::{Error, Result};
use crate::fusion::DEFAULT_ALPHA;
use crate::imaging::{ColormapName, SensorCalibration};
use crate::mask_provider::{
    FileMaskBackend, FixedPrompt, HttpMaskBackend, HttpPromptBackend, MaskBackend, PromptBackend,
    DEFAULT_BACKEND_TIMEOUT, DEFAULT_REFRESH_PERIOD,
};
use crate::sensor_model::ArrayGeometry;

pub const DEFAULT_SPEED_OF_SOUND: f64 = 343.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Batch,
    Stream,
    Bench,
}

/// Optional dump of each array sensor's beamformer output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeatmapFormat {
    /// Raw dB values as a portable float map.
    Pfm,
    /// Normalized values as 16-bit grayscale.
    Png,
}

impl HeatmapFormat {
    pub fn extension(self) -> &'static str {
        match self {
            HeatmapFormat::Pfm => "pfm",
            HeatmapFormat::Png => "png",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensorType {
    Thermal,
    MmwaveRadar,
    MicrophoneArray,
}

impl SensorType {
    pub fn is_array(self) -> bool {
        !matches!(self, SensorType::Thermal)
    }

    /// File extension of this sensor's per-frame payload in a dataset.
    pub fn extension(self) -> &'static str {
        match self {
            SensorType::Thermal => "csv",
            SensorType::MmwaveRadar => "bin",
            SensorType::MicrophoneArray => "wav",
        }
    }
}

fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}
fn default_floor() -> f64 {
    DEFAULT_FLOOR_DB
}
fn default_range() -> f64 {
    DEFAULT_DYNAMIC_RANGE_DB
}
fn default_sound() -> f64 {
    DEFAULT_SPEED_OF_SOUND
}
fn default_refresh() -> f64 {
    DEFAULT_REFRESH_PERIOD.as_secs_f64()
}
fn default_timeout() -> f64 {
    DEFAULT_BACKEND_TIMEOUT.as_secs_f64()
}

/// One sensor as written in the config file. Kind-specific fields are
/// optional here and checked on resolve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorConfig {
    pub sensor_id: String,
    pub kind: SensorType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<PathBuf>,
    #[serde(default)]
    pub colormap: ColormapName,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Array sensors: geometry file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<PathBuf>,
    #[serde(default)]
    pub grid: AngleGrid,
    #[serde(default = "default_floor")]
    pub floor_db: f64,
    #[serde(default = "default_range")]
    pub dynamic_range_db: f64,
    /// Microphone arrays: propagation speed used to turn frequency into wavelength.
    #[serde(default = "default_sound")]
    pub speed_of_sound: f64,
    /// Thermal: frame size in pixels.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub height: Option<usize>,
    /// Thermal: fixed normalization bounds. Per-frame min/max when absent,
    /// which flickers on video.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_range: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MaskProviderConfig {
    /// Fixed prompt and per-frame mask files.
    Stub {
        prompt: String,
        mask_dir: PathBuf,
        #[serde(default = "default_refresh")]
        refresh_period_s: f64,
        #[serde(default)]
        per_frame: bool,
    },
    Http {
        prompt_endpoint: String,
        mask_endpoint: String,
        #[serde(default = "default_refresh")]
        refresh_period_s: f64,
        #[serde(default = "default_timeout")]
        timeout_s: f64,
        #[serde(default)]
        per_frame: bool,
    },
}

impl MaskProviderConfig {
    pub fn refresh_period(&self) -> Duration {
        let s = match self {
            MaskProviderConfig::Stub { refresh_period_s, .. }
            | MaskProviderConfig::Http { refresh_period_s, .. } => *refresh_period_s,
        };
        Duration::from_secs_f64(s)
    }

    pub fn timeout(&self) -> Duration {
        match self {
            MaskProviderConfig::Stub { .. } => DEFAULT_BACKEND_TIMEOUT,
            MaskProviderConfig::Http { timeout_s, .. } => Duration::from_secs_f64(*timeout_s),
        }
    }

    pub fn per_frame(&self) -> bool {
        match self {
            MaskProviderConfig::Stub { per_frame, .. } | MaskProviderConfig::Http { per_frame, .. } => {
                *per_frame
            }
        }
    }
}

fn default_bench_frames() -> usize {
    200
}
fn default_warmup() -> usize {
    10
}
fn default_bench_dims() -> [usize; 2] {
    [640, 480]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    #[serde(default = "default_bench_frames")]
    pub frames: usize,
    #[serde(default = "default_warmup")]
    pub warmup: usize,
    #[serde(default = "default_bench_dims")]
    pub resolution: [usize; 2],
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            frames: default_bench_frames(),
            warmup: default_warmup(),
            resolution: default_bench_dims(),
        }
    }
}

/// The run config file. Relative paths resolve against the file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub task: String,
    pub sensors: Vec<SensorConfig>,
    pub mask_provider: MaskProviderConfig,
    /// Dataset directory, or a scene script to synthesize first.
    pub input: PathBuf,
    pub output: PathBuf,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub bench: BenchConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heatmaps: Option<HeatmapFormat>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: RunConfig = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            message: e.to_string(),
        })?;
        cfg.base_dir = path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_default();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("config serializes");
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn resolve_path(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn input_path(&self) -> PathBuf {
        self.resolve_path(&self.input)
    }

    pub fn output_path(&self) -> PathBuf {
        self.resolve_path(&self.output)
    }

    /// Structural checks that need no file access.
    pub fn validate(&self) -> Result<()> {
        if self.task.trim().is_empty() {
            return Err(Error::Config("task must not be empty".into()));
        }
        if self.sensors.is_empty() {
            return Err(Error::Config("at least one sensor is required".into()));
        }
        let mut seen = HashSet::new();
        for s in &self.sensors {
            if s.sensor_id.is_empty()
                || !s
                    .sensor_id
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
            {
                return Err(Error::Config(format!(
                    "sensor_id {:?} must be non-empty [A-Za-z0-9_-]",
                    s.sensor_id
                )));
            }
            if !seen.insert(s.sensor_id.as_str()) {
                return Err(Error::Config(format!("duplicate sensor_id {:?}", s.sensor_id)));
            }
            if s.calibration.is_none() {
                return Err(Error::Config(format!(
                    "sensor {:?} has no calibration file",
                    s.sensor_id
                )));
            }
            if !(0.0..=1.0).contains(&s.alpha) {
                return Err(Error::Config(format!(
                    "sensor {:?}: alpha {} outside [0, 1]",
                    s.sensor_id, s.alpha
                )));
            }
            if !(s.dynamic_range_db.is_finite() && s.dynamic_range_db > 0.0) {
                return Err(Error::Config(format!(
                    "sensor {:?}: dynamic_range_db must be positive",
                    s.sensor_id
                )));
            }
            match s.kind {
                SensorType::Thermal => {
                    if s.width.unwrap_or(0) == 0 || s.height.unwrap_or(0) == 0 {
                        return Err(Error::Config(format!(
                            "thermal sensor {:?} needs width and height",
                            s.sensor_id
                        )));
                    }
                    if let Some([lo, hi]) = s.t_range {
                        if lo.is_nan() || hi.is_nan() || lo >= hi {
                            return Err(Error::Config(format!(
                                "sensor {:?}: t_range needs lo < hi",
                                s.sensor_id
                            )));
                        }
                    }
                }
                _ => {
                    if s.geometry.is_none() {
                        return Err(Error::Config(format!(
                            "array sensor {:?} needs a geometry file",
                            s.sensor_id
                        )));
                    }
                }
            }
        }
        let period = match &self.mask_provider {
            MaskProviderConfig::Stub { prompt, refresh_period_s, .. } => {
                if prompt.trim().is_empty() {
                    return Err(Error::Config("stub prompt must not be empty".into()));
                }
                *refresh_period_s
            }
            MaskProviderConfig::Http { refresh_period_s, timeout_s, .. } => {
                if !(timeout_s.is_finite() && *timeout_s > 0.0) {
                    return Err(Error::Config("timeout_s must be positive".into()));
                }
                *refresh_period_s
            }
        };
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::Config("refresh_period_s must be positive".into()));
        }
        Ok(())
    }

    /// Loads geometry and calibration files. Fails naming the first sensor
    /// whose calibration is missing or unreadable.
    pub fn resolve_sensors(&self) -> Result<Vec<ResolvedSensor>> {
        self.sensors
            .iter()
            .map(|s| {
                let calib_path = self.resolve_path(s.calibration.as_deref().expect("validated"));
                if !calib_path.is_file() {
                    return Err(Error::Config(format!(
                        "sensor {:?}: calibration file {} not found",
                        s.sensor_id,
                        calib_path.display()
                    )));
                }
                let calibration = SensorCalibration::load(&calib_path).map_err(|e| {
                    Error::Config(format!("sensor {:?}: {e}", s.sensor_id))
                })?;
                if calibration.sensor_id != s.sensor_id {
                    return Err(Error::Config(format!(
                        "calibration {} is for sensor {:?}, not {:?}",
                        calib_path.display(),
                        calibration.sensor_id,
                        s.sensor_id
                    )));
                }
                let geometry = match &s.geometry {
                    Some(g) if s.kind.is_array() => {
                        let path = self.resolve_path(g);
                        Some(ArrayGeometry::load(&path).map_err(|e| {
                            Error::Config(format!("sensor {:?}: {e}", s.sensor_id))
                        })?)
                    }
                    _ => None,
                };
                Ok(ResolvedSensor {
                    config: s.clone(),
                    calibration,
                    geometry,
                })
            })
            .collect()
    }

    pub fn backends(&self) -> Result<(Arc<dyn PromptBackend>, Arc<dyn MaskBackend>)> {
        Ok(match &self.mask_provider {
            MaskProviderConfig::Stub { prompt, mask_dir, .. } => (
                Arc::new(FixedPrompt::new(prompt.clone())),
                Arc::new(FileMaskBackend::new(self.resolve_path(mask_dir))),
            ),
            MaskProviderConfig::Http {
                prompt_endpoint,
                mask_endpoint,
                timeout_s,
                ..
            } => {
                let t = Duration::from_secs_f64(*timeout_s);
                (
                    Arc::new(HttpPromptBackend::with_timeout(prompt_endpoint.clone(), t)?),
                    Arc::new(HttpMaskBackend::with_timeout(mask_endpoint.clone(), t)?),
                )
            }
        })
    }

    /// Effective settings, echoed into run reports.
    pub fn echo(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("config serializes");
        v["base_dir"] = serde_json::Value::String(self.base_dir.display().to_string());
        v
    }
}

/// A sensor with its files loaded.
#[derive(Debug, Clone)]
pub struct ResolvedSensor {
    pub config: SensorConfig,
    pub calibration: SensorCalibration,
    pub geometry: Option<ArrayGeometry>,
}

impl ResolvedSensor {
    pub fn id(&self) -> &str {
        &self.config.sensor_id
    }

    /// Size of the sensor-plane image the calibration maps from.
    pub fn source_dims(&self) -> (usize, usize) {
        match self.config.kind {
            SensorType::Thermal => (
                self.config.width.expect("validated"),
                self.config.height.expect("validated"),
            ),
            _ => (self.config.grid.az_steps(), self.config.grid.el_steps()),
        }
    }
}
