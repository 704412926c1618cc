use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::sensor_model::ArraySnapshot;

const MIN_SAMPLES: usize = 64;

/// One block of multichannel PCM, one `Vec` per microphone, equal lengths.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBlock {
    channels: Vec<Vec<f64>>,
    pub timestamp_ns: i64,
}

impl AudioBlock {
    pub fn new(channels: Vec<Vec<f64>>, timestamp_ns: i64) -> Result<Self> {
        let n = channels.first().map(Vec::len).unwrap_or(0);
        if channels.is_empty() {
            return Err(Error::input("audio block has no channels"));
        }
        if channels.iter().any(|c| c.len() != n) {
            return Err(Error::input("audio channels differ in length"));
        }
        if n < MIN_SAMPLES {
            return Err(Error::input(format!(
                "audio block needs at least {MIN_SAMPLES} samples per channel, got {n}"
            )));
        }
        if channels.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::input("audio block contains non-finite samples"));
        }
        Ok(AudioBlock {
            channels,
            timestamp_ns,
        })
    }

    pub fn channels(&self) -> &[Vec<f64>] {
        &self.channels
    }

    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// The strongest non-DC spectral bin of an audio block and each channel's
/// phasor there, scaled so a unit-amplitude cosine gives magnitude 1.
#[derive(Debug, Clone, PartialEq)]
pub struct DominantBin {
    pub bin: usize,
    pub frequency_hz: f64,
    pub phasors: Vec<Complex64>,
}

impl DominantBin {
    pub fn wavelength(&self, speed_of_sound: f64) -> f64 {
        speed_of_sound / self.frequency_hz
    }

    /// Narrowband snapshot for delay-and-sum at this bin.
    pub fn snapshot(&self, timestamp_ns: i64) -> Result<ArraySnapshot> {
        ArraySnapshot::new(self.phasors.clone(), timestamp_ns)
    }
}

/// Picks the bin in `1..=N/2` with the largest magnitude summed over channels.
pub fn dominant_bin(audio: &AudioBlock, sample_rate: f64) -> Result<DominantBin> {
    if !(sample_rate.is_finite() && sample_rate > 0.0) {
        return Err(Error::input(format!("sample rate must be positive, got {sample_rate}")));
    }
    let n = audio.len();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    let spectra: Vec<Vec<Complex64>> = audio
        .channels()
        .iter()
        .map(|ch| {
            let mut buf: Vec<Complex64> = ch.iter().map(|&v| Complex64::new(v, 0.0)).collect();
            fft.process(&mut buf);
            buf
        })
        .collect();

    let mut best = (0usize, 0.0f64);
    for bin in 1..=n / 2 {
        let mag: f64 = spectra.iter().map(|s| s[bin].norm()).sum();
        if mag > best.1 {
            best = (bin, mag);
        }
    }
    // Anything at rounding-noise level relative to the block is silence.
    let energy: f64 = audio.channels().iter().flatten().map(|v| v.abs()).sum();
    if best.1 <= 1e-12 * energy.max(f64::MIN_POSITIVE) || best.1 == 0.0 {
        return Err(Error::NoDominantFrequency);
    }

    let bin = best.0;
    let scale = if 2 * bin == n { 1.0 / n as f64 } else { 2.0 / n as f64 };
    Ok(DominantBin {
        bin,
        frequency_hz: bin as f64 * sample_rate / n as f64,
        phasors: spectra.iter().map(|s| s[bin] * scale).collect(),
    })
}

/// Wavelength `c / f*` at the dominant bin `f*`.
pub fn dominant_bin_wavelength(audio: &AudioBlock, sample_rate: f64, speed_of_sound: f64) -> Result<f64> {
    if !(speed_of_sound.is_finite() && speed_of_sound > 0.0) {
        return Err(Error::input(format!(
            "speed of sound must be positive, got {speed_of_sound}"
        )));
    }
    Ok(dominant_bin(audio, sample_rate)?.wavelength(speed_of_sound))
}
