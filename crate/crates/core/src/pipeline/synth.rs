//! Synthetic scenes with known ground truth.
//!
//! The synthetic RGB camera is equiangular: a direction (az, el) lands on
//! pixel `(W/2 + k az, H/2 - k el)` with `k = W / hfov` pixels per degree.
//! Sensor calibrations are written to agree with that model exactly.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::config::{MaskProviderConfig, Mode, RunConfig, SensorConfig, SensorType};
use super::dataset::{write_wav, AudioPayload, Manifest, ManifestEntry, StreamInfo};
use crate::beamformer::{AngleGrid, AudioBlock};
use crate::error::{Error, Result};
use crate::imaging::{save_thermal_csv, CalibrationTransform, ColormapName, SensorCalibration};
use crate::raster::{BinaryMask, RgbImage};
use crate::sensor_model::{
    circular_array, noise_std_for_snr, simulate_snapshot, ArrayGeometry, PointSource, SensorKind,
    ThermalFrame,
};

pub const GROUND_TRUTH_FILE: &str = "ground_truth.json";
pub const CONFIG_FILE: &str = "config.json";

fn d_width() -> usize {
    640
}
fn d_height() -> usize {
    480
}
fn d_hfov() -> f64 {
    90.0
}
fn d_fps() -> f64 {
    15.0
}
fn d_task() -> String {
    "pick up the object".into()
}
fn d_prompt() -> String {
    "object".into()
}
fn d_one() -> usize {
    1
}
fn d_elements() -> usize {
    6
}
fn d_snr() -> f64 {
    20.0
}
fn d_thermal_w() -> usize {
    160
}
fn d_thermal_h() -> usize {
    120
}
fn d_thermal_fov() -> f64 {
    60.0
}
fn d_ambient() -> f64 {
    22.0
}
fn d_thermal_noise() -> f64 {
    0.2
}
fn d_rate() -> f64 {
    48_000.0
}
fn d_block() -> usize {
    1024
}
fn d_tone_bin() -> usize {
    85
}
fn d_size() -> [f64; 2] {
    [8.0, 6.0]
}
fn d_amp() -> f64 {
    1.0
}
fn d_true() -> bool {
    true
}
fn d_color() -> [u8; 3] {
    [40, 40, 40]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraModel {
    #[serde(default = "d_width")]
    pub width: usize,
    #[serde(default = "d_height")]
    pub height: usize,
    #[serde(default = "d_hfov")]
    pub hfov_deg: f64,
}

impl Default for CameraModel {
    fn default() -> Self {
        CameraModel {
            width: d_width(),
            height: d_height(),
            hfov_deg: d_hfov(),
        }
    }
}

impl CameraModel {
    pub fn px_per_deg(&self) -> f64 {
        self.width as f64 / self.hfov_deg
    }

    /// Continuous pixel position of a direction.
    pub fn project(&self, azimuth_deg: f64, elevation_deg: f64) -> [f64; 2] {
        let k = self.px_per_deg();
        [
            self.width as f64 / 2.0 + k * azimuth_deg,
            self.height as f64 / 2.0 - k * elevation_deg,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSensor {
    pub sensor_id: String,
    pub kind: SensorType,
    /// Sample on every n-th RGB frame.
    #[serde(default = "d_one")]
    pub every: usize,
    #[serde(default)]
    pub colormap: ColormapName,
    // Thermal.
    #[serde(default = "d_thermal_w")]
    pub width: usize,
    #[serde(default = "d_thermal_h")]
    pub height: usize,
    #[serde(default = "d_thermal_fov")]
    pub hfov_deg: f64,
    #[serde(default = "d_ambient")]
    pub ambient_c: f64,
    #[serde(default = "d_thermal_noise")]
    pub noise_c: f64,
    // Arrays.
    #[serde(default = "d_elements")]
    pub elements: usize,
    /// Circular array radius; defaults to 0.05 m for microphones and the same
    /// radius-to-wavelength ratio for radar.
    #[serde(default)]
    pub radius_m: Option<f64>,
    /// Radar carrier wavelength; microphones derive theirs from the tone.
    #[serde(default)]
    pub wavelength_m: Option<f64>,
    #[serde(default = "d_snr")]
    pub snr_db: f64,
    #[serde(default)]
    pub grid: AngleGrid,
    #[serde(default = "d_rate")]
    pub sample_rate_hz: f64,
    #[serde(default = "d_block")]
    pub block: usize,
    #[serde(default = "d_tone_bin")]
    pub tone_bin: usize,
}

const MIC_RADIUS: f64 = 0.05;
const RADAR_WAVELENGTH: f64 = 0.0039;
const SPEED_OF_SOUND: f64 = 343.0;

impl SceneSensor {
    fn tone_hz(&self) -> f64 {
        self.tone_bin as f64 * self.sample_rate_hz / self.block as f64
    }

    fn geometry(&self) -> Result<ArrayGeometry> {
        let (kind, wavelength) = match self.kind {
            SensorType::MicrophoneArray => (SensorKind::MicrophoneArray, SPEED_OF_SOUND / self.tone_hz()),
            _ => (SensorKind::MmwaveRadar, self.wavelength_m.unwrap_or(RADAR_WAVELENGTH)),
        };
        let radius = self.radius_m.unwrap_or(match self.kind {
            SensorType::MicrophoneArray => MIC_RADIUS,
            _ => MIC_RADIUS * wavelength * self.tone_hz() / SPEED_OF_SOUND,
        });
        let ring = circular_array(self.elements, radius, wavelength)?;
        ArrayGeometry::new(ring.elements().to_vec(), wavelength, kind)
    }

    /// Transform from this sensor's image plane to the camera frame.
    fn calibration(&self, camera: &CameraModel) -> Result<CalibrationTransform> {
        let k = camera.px_per_deg();
        let (scale, translate) = match self.kind {
            SensorType::Thermal => {
                let s = k * self.hfov_deg / self.width as f64;
                ([s, s], [0.0, 0.0])
            }
            _ => {
                let g = &self.grid;
                let (a0, a1) = g.az_range();
                let (e0, e1) = g.el_range();
                (
                    [k * g.az_step_deg(), k * g.el_step_deg()],
                    [k * (a0 + a1) / 2.0, -k * (e0 + e1) / 2.0],
                )
            }
        };
        CalibrationTransform::new(
            0.0,
            scale,
            translate,
            [0, 0, camera.width, camera.height],
            [camera.width, camera.height],
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneObject {
    pub name: String,
    pub azimuth_deg: f64,
    pub elevation_deg: f64,
    /// Angular width and height.
    #[serde(default = "d_size")]
    pub size_deg: [f64; 2],
    /// Drift per second.
    #[serde(default)]
    pub velocity_deg_s: [f64; 2],
    /// Hot in thermal frames when set.
    #[serde(default)]
    pub temperature_c: Option<f64>,
    /// Point source for the array sensors.
    #[serde(default)]
    pub emitter: bool,
    #[serde(default = "d_amp")]
    pub amplitude: f64,
    /// Part of the segmentation target.
    #[serde(default = "d_true")]
    pub masked: bool,
    /// Fixed mask rectangle `[x, y, w, h]` in RGB pixels instead of the
    /// object's own box (for example a towel over a phone).
    #[serde(default)]
    pub mask_rect: Option<[i64; 4]>,
    #[serde(default = "d_color")]
    pub color: [u8; 3],
}

impl SceneObject {
    fn direction_at(&self, t: f64) -> (f64, f64) {
        (
            self.azimuth_deg + self.velocity_deg_s[0] * t,
            self.elevation_deg + self.velocity_deg_s[1] * t,
        )
    }

    fn contains(&self, t: f64, az: f64, el: f64) -> bool {
        let (a, e) = self.direction_at(t);
        (az - a).abs() <= self.size_deg[0] / 2.0 && (el - e).abs() <= self.size_deg[1] / 2.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneScript {
    #[serde(default)]
    pub frames: usize,
    #[serde(default = "d_fps")]
    pub fps: f64,
    #[serde(default)]
    pub camera: CameraModel,
    #[serde(default = "d_task")]
    pub task: String,
    #[serde(default = "d_prompt")]
    pub prompt: String,
    #[serde(default)]
    pub sensors: Vec<SceneSensor>,
    #[serde(default)]
    pub objects: Vec<SceneObject>,
}

impl Default for SceneScript {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields default")
    }
}

impl SceneScript {
    /// Parses a script. Blank text is the empty scene.
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let script: SceneScript = if text.trim().is_empty() {
            SceneScript::default()
        } else {
            serde_json::from_str(text).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: e.line(),
                message: e.to_string(),
            })?
        };
        script.validate(path)?;
        Ok(script)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    fn validate(&self, path: &Path) -> Result<()> {
        let bad = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            message,
        };
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return Err(bad(format!("fps must be positive, got {}", self.fps)));
        }
        if self.camera.width == 0 || self.camera.height == 0 || !(self.camera.hfov_deg > 0.0 && self.camera.hfov_deg < 180.0) {
            return Err(bad("camera needs non-empty size and 0 < hfov_deg < 180".into()));
        }
        let mut ids = std::collections::HashSet::new();
        for s in &self.sensors {
            if !ids.insert(&s.sensor_id) {
                return Err(bad(format!("duplicate sensor_id {:?}", s.sensor_id)));
            }
            if s.every == 0 {
                return Err(bad(format!("sensor {:?}: every must be >= 1", s.sensor_id)));
            }
            match s.kind {
                SensorType::Thermal => {
                    if s.width == 0 || s.height == 0 || !(s.hfov_deg > 0.0 && s.hfov_deg < 180.0) {
                        return Err(bad(format!("sensor {:?}: bad thermal size or fov", s.sensor_id)));
                    }
                }
                _ => {
                    s.geometry()
                        .map_err(|e| bad(format!("sensor {:?}: {e}", s.sensor_id)))?;
                    if s.kind == SensorType::MicrophoneArray && !(s.tone_bin >= 1 && s.tone_bin < s.block / 2) {
                        return Err(bad(format!("sensor {:?}: tone_bin outside (0, block/2)", s.sensor_id)));
                    }
                }
            }
        }
        for o in &self.objects {
            let duration = self.frames as f64 / self.fps;
            for t in [0.0, duration] {
                let (a, e) = o.direction_at(t);
                if !(a.abs() < 90.0 && e.abs() < 90.0) {
                    return Err(bad(format!("object {:?} leaves the (-90, 90) look range", o.name)));
                }
            }
            if o.emitter && !(o.amplitude.is_finite() && o.amplitude > 0.0) {
                return Err(bad(format!("object {:?}: amplitude must be positive", o.name)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectTruth {
    pub name: String,
    pub azimuth_deg: f64,
    pub elevation_deg: f64,
    pub center_px: [f64; 2],
    /// `[x, y, w, h]` in RGB pixels.
    pub bbox_px: [i64; 4],
    pub mask_rect: Option<[i64; 4]>,
    pub emitter: bool,
    pub hot: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameTruth {
    pub frame_idx: u64,
    pub timestamp_ns: i64,
    pub objects: Vec<ObjectTruth>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub camera: CameraModel,
    pub seed: u64,
    pub frames: Vec<FrameTruth>,
}

impl GroundTruth {
    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(GROUND_TRUTH_FILE);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            path,
            line: e.line(),
            message: e.to_string(),
        })
    }
}

/// Paths of what `make_synthetic_dataset` wrote.
#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub dir: PathBuf,
    pub config: PathBuf,
    pub manifest: Manifest,
    pub truth: GroundTruth,
}

fn rng_for(seed: u64, frame: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(frame.wrapping_mul(1 << 16).wrapping_add(stream));
    rng
}

fn bbox(camera: &CameraModel, az: f64, el: f64, size: [f64; 2]) -> [i64; 4] {
    let k = camera.px_per_deg();
    let [cx, cy] = camera.project(az, el);
    let (hw, hh) = (k * size[0] / 2.0, k * size[1] / 2.0);
    let x0 = (cx - hw).round() as i64;
    let y0 = (cy - hh).round() as i64;
    [x0, y0, (cx + hw).round() as i64 - x0, (cy + hh).round() as i64 - y0]
}

fn render_rgb(script: &SceneScript, truth: &FrameTruth, seed: u64) -> RgbImage {
    let cam = &script.camera;
    let mut rng = rng_for(seed, truth.frame_idx, 0);
    let mut img = RgbImage::from_fn(cam.width, cam.height, |x, y| {
        let gx = (x * 120 / cam.width.max(1)) as u8;
        let gy = (y * 80 / cam.height.max(1)) as u8;
        [90 + gx / 2, 110 + gy / 2, 130 + (gx / 4 + gy / 4)]
    });
    for px in img.pixels_mut() {
        let n: i16 = rng.gen_range(-6..=6);
        *px = (*px as i16 + n).clamp(0, 255) as u8;
    }
    for (o, t) in script.objects.iter().zip(&truth.objects) {
        let [x, y, w, h] = t.bbox_px;
        for yy in y.max(0)..(y + h).min(cam.height as i64) {
            for xx in x.max(0)..(x + w).min(cam.width as i64) {
                img.put(xx as usize, yy as usize, o.color);
            }
        }
    }
    img
}

fn render_thermal(
    script: &SceneScript,
    s: &SceneSensor,
    t: f64,
    frame: u64,
    stream: u64,
    seed: u64,
    timestamp_ns: i64,
) -> Result<ThermalFrame> {
    let mut rng = rng_for(seed, frame, stream);
    let noise = Normal::new(0.0, s.noise_c.max(0.0)).map_err(|e| Error::input(e.to_string()))?;
    let deg = s.hfov_deg / s.width as f64;
    let mut values = Vec::with_capacity(s.width * s.height);
    for v in 0..s.height {
        for u in 0..s.width {
            let az = (u as f64 + 0.5 - s.width as f64 / 2.0) * deg;
            let el = (s.height as f64 / 2.0 - (v as f64 + 0.5)) * deg;
            let base = script
                .objects
                .iter()
                .filter(|o| o.temperature_c.is_some() && o.contains(t, az, el))
                .map(|o| o.temperature_c.unwrap())
                .fold(s.ambient_c, f64::max);
            values.push(base + noise.sample(&mut rng));
        }
    }
    ThermalFrame::new(s.width, s.height, values, timestamp_ns)
}

fn emitters(script: &SceneScript, t: f64, rng: &mut ChaCha8Rng) -> Vec<PointSource> {
    script
        .objects
        .iter()
        .filter(|o| o.emitter)
        .map(|o| {
            let (az, el) = o.direction_at(t);
            PointSource {
                azimuth_deg: az,
                elevation_deg: el,
                amplitude: o.amplitude,
                phase_offset_rad: rng.gen_range(0.0..2.0 * PI),
            }
        })
        .collect()
}

fn strongest(sources: &[PointSource]) -> f64 {
    sources.iter().map(|s| s.amplitude).fold(1.0, f64::max)
}

/// Audio block whose FFT at `tone_bin` (scaled by 2/N) reproduces the
/// narrowband snapshot of the sources, plus white noise at the same
/// per-element SNR in that bin.
fn render_audio(
    s: &SceneSensor,
    geometry: &ArrayGeometry,
    sources: &[PointSource],
    rng: &mut ChaCha8Rng,
    timestamp_ns: i64,
) -> Result<AudioPayload> {
    let n = s.block;
    let clean = simulate_snapshot(geometry, sources, 0.0, 0)?;
    let bin_std = noise_std_for_snr(strongest(sources), s.snr_db);
    let sample_std = bin_std * (n as f64).sqrt() / 2.0;
    let noise = Normal::new(0.0, sample_std).map_err(|e| Error::input(e.to_string()))?;
    let w = 2.0 * PI * s.tone_bin as f64 / n as f64;
    let channels = clean
        .samples()
        .iter()
        .map(|p| {
            (0..n)
                .map(|i| {
                    let v = (p * Complex64::from_polar(1.0, w * i as f64)).re + noise.sample(rng);
                    v as f32 as f64
                })
                .collect()
        })
        .collect();
    Ok(AudioPayload {
        block: AudioBlock::new(channels, timestamp_ns)?,
        sample_rate: s.sample_rate_hz,
    })
}

/// Writes a dataset, its ground truth, sensor geometry and calibration files,
/// per-frame mask PNGs and a ready-to-run `config.json` into `out_dir`.
pub fn make_synthetic_dataset(script: &SceneScript, out_dir: &Path, seed: u64) -> Result<SyntheticDataset> {
    let mkdir = |p: &Path| std::fs::create_dir_all(p).map_err(|e| Error::io(p, e));
    mkdir(out_dir)?;
    for sub in ["calib", "geometry", "masks"] {
        mkdir(&out_dir.join(sub))?;
    }
    let cam = &script.camera;

    let mut sensor_cfgs = Vec::new();
    let mut geometries = BTreeMap::new();
    for s in &script.sensors {
        let calib = SensorCalibration {
            sensor_id: s.sensor_id.clone(),
            transform: s.calibration(cam)?,
        };
        let calib_rel = PathBuf::from("calib").join(format!("{}.json", s.sensor_id));
        calib.save(&out_dir.join(&calib_rel))?;
        let mut cfg = SensorConfig {
            sensor_id: s.sensor_id.clone(),
            kind: s.kind,
            calibration: Some(calib_rel),
            colormap: s.colormap,
            alpha: crate::fusion::DEFAULT_ALPHA,
            geometry: None,
            grid: s.grid,
            floor_db: crate::beamformer::DEFAULT_FLOOR_DB,
            dynamic_range_db: crate::beamformer::DEFAULT_DYNAMIC_RANGE_DB,
            speed_of_sound: SPEED_OF_SOUND,
            width: None,
            height: None,
            t_range: None,
        };
        if s.kind == SensorType::Thermal {
            let hottest = script
                .objects
                .iter()
                .filter_map(|o| o.temperature_c)
                .fold(s.ambient_c, f64::max);
            cfg.width = Some(s.width);
            cfg.height = Some(s.height);
            cfg.t_range = Some([s.ambient_c - 3.0, hottest.max(s.ambient_c + 1.0) + 3.0]);
        } else {
            let g = s.geometry()?;
            let rel = PathBuf::from("geometry").join(format!("{}.json", s.sensor_id));
            g.save(&out_dir.join(&rel))?;
            cfg.geometry = Some(rel);
            geometries.insert(s.sensor_id.clone(), g);
        }
        sensor_cfgs.push(cfg);
    }

    let frame_ns = 1e9 / script.fps;
    let mut manifest = Manifest {
        rgb_width: cam.width,
        rgb_height: cam.height,
        rgb_rate_hz: script.fps,
        streams: script
            .sensors
            .iter()
            .map(|s| StreamInfo {
                sensor_id: s.sensor_id.clone(),
                kind: s.kind,
                rate_hz: script.fps / s.every as f64,
                offset_ns: 0,
            })
            .collect(),
        frames: Vec::new(),
    };
    let mut truth = GroundTruth {
        camera: cam.clone(),
        seed,
        frames: Vec::new(),
    };

    for f in 0..script.frames as u64 {
        let t = f as f64 / script.fps;
        let timestamp_ns = (f as f64 * frame_ns).round() as i64;
        let objects: Vec<ObjectTruth> = script
            .objects
            .iter()
            .map(|o| {
                let (az, el) = o.direction_at(t);
                let bbox_px = bbox(cam, az, el, o.size_deg);
                ObjectTruth {
                    name: o.name.clone(),
                    azimuth_deg: az,
                    elevation_deg: el,
                    center_px: cam.project(az, el),
                    bbox_px,
                    mask_rect: o.masked.then(|| o.mask_rect.unwrap_or(bbox_px)),
                    emitter: o.emitter,
                    hot: o.temperature_c.is_some(),
                }
            })
            .collect();
        let ft = FrameTruth {
            frame_idx: f,
            timestamp_ns,
            objects,
        };

        let rgb_name = format!("{f}_rgb.png");
        render_rgb(script, &ft, seed).save_png(&out_dir.join(&rgb_name))?;

        let mut mask = BinaryMask::zeros(cam.width, cam.height);
        for r in ft.objects.iter().filter_map(|o| o.mask_rect) {
            mask = mask.or(&BinaryMask::rectangle(cam.width, cam.height, r))?;
        }
        mask.save_png(&out_dir.join("masks").join(format!("{f}.png")))?;

        let mut files = BTreeMap::new();
        for (si, s) in script.sensors.iter().enumerate() {
            if f % s.every as u64 != 0 {
                continue;
            }
            let stream = si as u64 + 1;
            let name = format!("{f}_{}.{}", s.sensor_id, s.kind.extension());
            let path = out_dir.join(&name);
            match s.kind {
                SensorType::Thermal => {
                    let frame = render_thermal(script, s, t, f, stream, seed, timestamp_ns)?;
                    save_thermal_csv(&frame, &path)?;
                }
                SensorType::MmwaveRadar => {
                    let mut rng = rng_for(seed, f, stream);
                    let sources = emitters(script, t, &mut rng);
                    let noise = noise_std_for_snr(strongest(&sources), s.snr_db);
                    let mut snap = simulate_snapshot(&geometries[&s.sensor_id], &sources, noise, rng.gen())?
                        .with_geometry_id(s.sensor_id.clone());
                    snap.timestamp_ns = timestamp_ns;
                    let file = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
                    snap.write_to(std::io::BufWriter::new(file))
                        .map_err(|e| Error::io(&path, e))?;
                }
                SensorType::MicrophoneArray => {
                    let mut rng = rng_for(seed, f, stream);
                    let sources = emitters(script, t, &mut rng);
                    let audio = render_audio(s, &geometries[&s.sensor_id], &sources, &mut rng, timestamp_ns)?;
                    write_wav(&path, &audio)?;
                }
            }
            files.insert(s.sensor_id.clone(), name);
        }
        manifest.frames.push(ManifestEntry {
            frame_idx: f,
            timestamp_ns,
            rgb: rgb_name,
            sensors: files,
        });
        truth.frames.push(ft);
    }

    manifest.save(out_dir)?;
    let gt_path = out_dir.join(GROUND_TRUTH_FILE);
    std::fs::write(&gt_path, serde_json::to_string_pretty(&truth).expect("serializes") + "\n")
        .map_err(|e| Error::io(&gt_path, e))?;

    let config_path = out_dir.join(CONFIG_FILE);
    if !sensor_cfgs.is_empty() {
        let cfg = RunConfig {
            task: script.task.clone(),
            sensors: sensor_cfgs,
            mask_provider: MaskProviderConfig::Stub {
                prompt: script.prompt.clone(),
                mask_dir: PathBuf::from("masks"),
                refresh_period_s: crate::mask_provider::DEFAULT_REFRESH_PERIOD.as_secs_f64(),
                per_frame: false,
            },
            input: PathBuf::from("."),
            output: PathBuf::from("out"),
            mode: Mode::Batch,
            seed,
            bench: Default::default(),
            heatmaps: None,
            base_dir: out_dir.to_path_buf(),
        };
        cfg.save(&config_path)?;
    }

    Ok(SyntheticDataset {
        dir: out_dir.to_path_buf(),
        config: config_path,
        manifest,
        truth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blank_script_is_empty_dataset() {
        let dir = tempfile::tempdir().unwrap();
        let s = SceneScript::parse("  \n", Path::new("s.json")).unwrap();
        let d = make_synthetic_dataset(&s, dir.path(), 1).unwrap();
        assert!(d.manifest.frames.is_empty());
        assert!(d.truth.frames.is_empty());
    }

    #[test]
    fn parse_error_reports_line() {
        let text = "{\n  \"frames\": 3,\n  \"fps\": \"fast\"\n}";
        match SceneScript::parse(text, Path::new("s.json")).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn unknown_field_rejected() {
        assert!(SceneScript::parse("{\"frame\": 3}", Path::new("s.json")).is_err());
    }

    #[test]
    fn camera_projection() {
        let c = CameraModel::default();
        assert_eq!(c.project(0.0, 0.0), [320.0, 240.0]);
        let [x, y] = c.project(45.0, 10.0);
        assert!((x - 640.0).abs() < 1e-12);
        assert!((y - (240.0 - 640.0 / 9.0)).abs() < 1e-12);
    }

    #[test]
    fn array_calibration_puts_cells_at_their_directions() {
        let cam = CameraModel::default();
        let s: SceneSensor = serde_json::from_value(serde_json::json!({
            "sensor_id": "m", "kind": "mmwave_radar"
        }))
        .unwrap();
        let t = s.calibration(&cam).unwrap();
        let g = s.grid;
        for (row, col) in [(0, 0), (30, 45), (10, 70), (60, 90)] {
            let p = [col as f64 + 0.5, row as f64 + 0.5];
            let q = t.forward_point(p, (g.az_steps(), g.el_steps()));
            let want = cam.project(g.azimuth_deg(col), g.elevation_deg(row));
            assert!((q[0] - want[0]).abs() < 1e-9 && (q[1] - want[1]).abs() < 1e-9, "{q:?} {want:?}");
        }
    }

    #[test]
    fn thermal_calibration_matches_camera() {
        let cam = CameraModel::default();
        let s: SceneSensor = serde_json::from_value(serde_json::json!({
            "sensor_id": "t", "kind": "thermal"
        }))
        .unwrap();
        let t = s.calibration(&cam).unwrap();
        let deg = s.hfov_deg / s.width as f64;
        for (u, v) in [(0usize, 0usize), (80, 60), (159, 119)] {
            let az = (u as f64 + 0.5 - 80.0) * deg;
            let el = (60.0 - (v as f64 + 0.5)) * deg;
            let q = t.forward_point([u as f64 + 0.5, v as f64 + 0.5], (160, 120));
            let want = cam.project(az, el);
            assert!((q[0] - want[0]).abs() < 1e-9 && (q[1] - want[1]).abs() < 1e-9);
        }
    }

    #[test]
    fn audio_bin_reproduces_snapshot() {
        let s: SceneSensor = serde_json::from_value(serde_json::json!({
            "sensor_id": "mic", "kind": "microphone_array", "snr_db": 300.0
        }))
        .unwrap();
        let g = s.geometry().unwrap();
        let src = [PointSource::new(12.0, -4.0, 1.0)];
        let mut rng = rng_for(1, 0, 0);
        let a = render_audio(&s, &g, &src, &mut rng, 0).unwrap();
        let dom = crate::beamformer::dominant_bin(&a.block, a.sample_rate).unwrap();
        assert_eq!(dom.bin, 85);
        let want = simulate_snapshot(&g, &src, 0.0, 0).unwrap();
        for (p, w) in dom.phasors.iter().zip(want.samples()) {
            assert!((p - w).norm() < 1e-5, "{p} vs {w}");
        }
    }
}
