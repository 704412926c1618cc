//! On-disk dataset layout: `manifest.json`, `{idx}_rgb.png`, and one payload
//! file per sensor sample, `{idx}_{sensor}.csv|.bin|.wav`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::SensorType;
use crate::beamformer::AudioBlock;
use crate::error::{Error, Result};
use crate::imaging::load_thermal;
use crate::raster::RgbImage;
use crate::sensor_model::{ArraySnapshot, ThermalFrame};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamInfo {
    pub sensor_id: String,
    pub kind: SensorType,
    pub rate_hz: f64,
    #[serde(default)]
    pub offset_ns: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub frame_idx: u64,
    pub timestamp_ns: i64,
    pub rgb: String,
    /// Sensor id to payload file, for sensors that sampled this frame.
    #[serde(default)]
    pub sensors: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub rgb_width: usize,
    pub rgb_height: usize,
    pub rgb_rate_hz: f64,
    #[serde(default)]
    pub streams: Vec<StreamInfo>,
    #[serde(default)]
    pub frames: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            path,
            line: e.line(),
            message: e.to_string(),
        })
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        let path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
    }

    pub fn rgb_dims(&self) -> (usize, usize) {
        (self.rgb_width, self.rgb_height)
    }
}

/// A microphone block with its sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioPayload {
    pub block: AudioBlock,
    pub sample_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SensorPayload {
    Thermal(ThermalFrame),
    Array(ArraySnapshot),
    Audio(AudioPayload),
}

/// One RGB frame and whichever sensor samples arrived with it.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameBundle {
    pub frame_idx: u64,
    pub timestamp_ns: i64,
    pub rgb: RgbImage,
    pub payloads: BTreeMap<String, SensorPayload>,
}

pub fn load_payload(kind: SensorType, path: &Path) -> Result<SensorPayload> {
    Ok(match kind {
        SensorType::Thermal => SensorPayload::Thermal(load_thermal(path)?),
        SensorType::MmwaveRadar => {
            let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
            SensorPayload::Array(ArraySnapshot::decode(&bytes)?)
        }
        SensorType::MicrophoneArray => SensorPayload::Audio(read_wav(path)?),
    })
}

/// Reads every frame of a dataset lazily, in manifest order.
#[derive(Debug, Clone)]
pub struct Dataset {
    dir: PathBuf,
    manifest: Manifest,
}

impl Dataset {
    pub fn open(dir: &Path) -> Result<Self> {
        Ok(Dataset {
            dir: dir.to_path_buf(),
            manifest: Manifest::load(dir)?,
        })
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn len(&self) -> usize {
        self.manifest.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.manifest.frames.is_empty()
    }

    fn kind_of(&self, sensor_id: &str) -> Result<SensorType> {
        self.manifest
            .streams
            .iter()
            .find(|s| s.sensor_id == sensor_id)
            .map(|s| s.kind)
            .ok_or_else(|| Error::Format(format!("manifest has no stream {sensor_id:?}")))
    }

    /// Loads entry `i`. Only sensors in `wanted` are read.
    pub fn load(&self, i: usize, wanted: &[&str]) -> Result<FrameBundle> {
        let e = &self.manifest.frames[i];
        let rgb = RgbImage::load_png(&self.dir.join(&e.rgb))?;
        if rgb.dims() != self.manifest.rgb_dims() {
            return Err(Error::Format(format!(
                "frame {}: rgb is {:?}, manifest says {:?}",
                e.frame_idx,
                rgb.dims(),
                self.manifest.rgb_dims()
            )));
        }
        let mut payloads = BTreeMap::new();
        for (id, file) in &e.sensors {
            if !wanted.contains(&id.as_str()) {
                continue;
            }
            let p = load_payload(self.kind_of(id)?, &self.dir.join(file))?;
            payloads.insert(id.clone(), p);
        }
        Ok(FrameBundle {
            frame_idx: e.frame_idx,
            timestamp_ns: e.timestamp_ns,
            rgb,
            payloads,
        })
    }
}

/// Writes a block as 32-bit float WAV, one channel per array element.
pub fn write_wav(path: &Path, audio: &AudioPayload) -> Result<()> {
    let spec = hound::WavSpec {
        channels: audio.block.num_channels() as u16,
        sample_rate: audio.sample_rate.round() as u32,
        bits_per_sample: 32,
        sample_format: hound::SampleFormat::Float,
    };
    let wav_err = |e: hound::Error| Error::Format(format!("{}: {e}", path.display()));
    let mut w = hound::WavWriter::create(path, spec).map_err(wav_err)?;
    let ch = audio.block.channels();
    for n in 0..audio.block.len() {
        for c in ch {
            w.write_sample(c[n] as f32).map_err(wav_err)?;
        }
    }
    w.finalize().map_err(wav_err)
}

pub fn read_wav(path: &Path) -> Result<AudioPayload> {
    let wav_err = |e: hound::Error| Error::Format(format!("{}: {e}", path.display()));
    let mut r = hound::WavReader::open(path).map_err(wav_err)?;
    let spec = r.spec();
    let nch = spec.channels as usize;
    let interleaved: Vec<f64> = match spec.sample_format {
        hound::SampleFormat::Float => r
            .samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<_, _>>()
            .map_err(wav_err)?,
        hound::SampleFormat::Int => {
            let full = (1i64 << (spec.bits_per_sample - 1)) as f64;
            r.samples::<i32>()
                .map(|s| s.map(|v| v as f64 / full))
                .collect::<std::result::Result<_, _>>()
                .map_err(wav_err)?
        }
    };
    let mut channels = vec![Vec::with_capacity(interleaved.len() / nch.max(1)); nch];
    for (i, v) in interleaved.into_iter().enumerate() {
        channels[i % nch].push(v);
    }
    Ok(AudioPayload {
        block: AudioBlock::new(channels, 0)?,
        sample_rate: spec.sample_rate as f64,
    })
}
