use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{check_look_angle, ArrayGeometry, ArraySnapshot};
use crate::error::{Error, Result};

/// A far-field narrowband emitter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointSource {
    pub azimuth_deg: f64,
    pub elevation_deg: f64,
    pub amplitude: f64,
    #[serde(default)]
    pub phase_offset_rad: f64,
}

impl PointSource {
    pub fn new(azimuth_deg: f64, elevation_deg: f64, amplitude: f64) -> Self {
        PointSource {
            azimuth_deg,
            elevation_deg,
            amplitude,
            phase_offset_rad: 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        check_look_angle("source azimuth", self.azimuth_deg)?;
        check_look_angle("source elevation", self.elevation_deg)?;
        if !(self.amplitude.is_finite() && self.amplitude >= 0.0) {
            return Err(Error::input(format!(
                "source amplitude must be finite and >= 0, got {}",
                self.amplitude
            )));
        }
        if !self.phase_offset_rad.is_finite() {
            return Err(Error::input("source phase offset is not finite"));
        }
        Ok(())
    }
}

/// Noise standard deviation giving `snr_db` per element for a source of
/// `amplitude`, with `E|n|^2 = noise_std^2`.
pub fn noise_std_for_snr(amplitude: f64, snr_db: f64) -> f64 {
    amplitude * 10f64.powf(-snr_db / 20.0)
}

/// Synthesizes one snapshot:
/// `sample_k = sum_s a_s exp(j (phi_k(az_s, el_s) + offset_s)) + n_k`, with
/// `n_k` circularly symmetric complex Gaussian, `E|n_k|^2 = noise_std^2`.
pub fn simulate_snapshot(
    geometry: &ArrayGeometry,
    sources: &[PointSource],
    noise_std: f64,
    seed: u64,
) -> Result<ArraySnapshot> {
    for s in sources {
        s.validate()?;
    }
    if !(noise_std.is_finite() && noise_std >= 0.0) {
        return Err(Error::input(format!("noise_std must be >= 0, got {noise_std}")));
    }

    let mut samples = vec![Complex64::new(0.0, 0.0); geometry.len()];
    for s in sources {
        let (az, el) = (s.azimuth_deg.to_radians(), s.elevation_deg.to_radians());
        for (k, out) in samples.iter_mut().enumerate() {
            let phase = geometry.phase_rad(k, az, el) + s.phase_offset_rad;
            *out += Complex64::from_polar(s.amplitude, phase);
        }
    }

    if noise_std > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, noise_std / std::f64::consts::SQRT_2).expect("valid std");
        for out in &mut samples {
            *out += Complex64::new(normal.sample(&mut rng), normal.sample(&mut rng));
        }
    }

    ArraySnapshot::new(samples, 0)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::sensor_model::{circular_array, steering_phase, SensorKind};

    fn wrap(a: f64) -> f64 {
        let w = a.rem_euclid(2.0 * PI);
        if w > PI {
            w - 2.0 * PI
        } else {
            w
        }
    }

    #[test]
    fn boresight_source_gives_unit_samples() {
        let g = circular_array(6, 0.05, 0.0857).unwrap();
        let s = simulate_snapshot(&g, &[PointSource::new(0.0, 0.0, 1.0)], 0.0, 0).unwrap();
        for x in s.samples() {
            assert!((x - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn origin_element_carries_source_phase() {
        let g = ArrayGeometry::new(
            vec![[0.0, 0.0], [0.03, 0.01]],
            0.1,
            SensorKind::MmwaveRadar,
        )
        .unwrap();
        for &(az, el) in &[(10.0, 20.0), (-70.0, 5.0), (33.0, -41.0)] {
            let mut src = PointSource::new(az, el, 1.0);
            src.phase_offset_rad = 0.7;
            let s = simulate_snapshot(&g, &[src], 0.0, 0).unwrap();
            assert!((s.samples()[0].arg() - 0.7).abs() < 1e-12);
        }
    }

    #[test]
    fn half_wavelength_pair_at_endfire_is_pi_apart() {
        // 90 deg is outside the open look interval; approach it from below.
        let lambda = 0.1;
        let g = ArrayGeometry::new(
            vec![[0.0, 0.0], [lambda / 2.0, 0.0]],
            lambda,
            SensorKind::MmwaveRadar,
        )
        .unwrap();
        let s = simulate_snapshot(&g, &[PointSource::new(89.999_999, 0.0, 1.0)], 0.0, 0).unwrap();
        let d = wrap(s.samples()[1].arg() - s.samples()[0].arg()).abs();
        assert!((d - PI).abs() < 1e-6, "{d}");
    }

    #[test]
    fn sample_phase_matches_steering_phase() {
        let g = circular_array(8, 0.03, 0.05).unwrap();
        let mut src = PointSource::new(-27.0, 14.0, 2.5);
        src.phase_offset_rad = -1.1;
        let s = simulate_snapshot(&g, &[src], 0.0, 0).unwrap();
        for k in 0..g.len() {
            let want = steering_phase(&g, k, -27.0, 14.0).unwrap() - 1.1;
            assert!(wrap(s.samples()[k].arg() - want).abs() < 1e-9);
            assert!((s.samples()[k].norm() - 2.5).abs() < 1e-12);
        }
    }

    #[test]
    fn linear_in_amplitude_and_deterministic() {
        let g = circular_array(6, 0.05, 0.0857).unwrap();
        let a = simulate_snapshot(&g, &[PointSource::new(12.0, -3.0, 1.0)], 0.0, 0).unwrap();
        let b = simulate_snapshot(&g, &[PointSource::new(12.0, -3.0, 2.0)], 0.0, 9).unwrap();
        for (x, y) in a.samples().iter().zip(b.samples()) {
            assert!((y.norm() - 2.0 * x.norm()).abs() < 1e-12);
        }
        let n1 = simulate_snapshot(&g, &[], 0.3, 42).unwrap();
        let n2 = simulate_snapshot(&g, &[], 0.3, 42).unwrap();
        let n3 = simulate_snapshot(&g, &[], 0.3, 43).unwrap();
        assert_eq!(n1, n2);
        assert_ne!(n1, n3);
    }

    #[test]
    fn noise_power_matches_std() {
        let elements = (0..4000).map(|k| [k as f64 * 1e-3, 0.0]).collect();
        let g = ArrayGeometry::new(elements, 0.1, SensorKind::MmwaveRadar).unwrap();
        let s = simulate_snapshot(&g, &[], 0.5, 1).unwrap();
        let p = s.samples().iter().map(|x| x.norm_sqr()).sum::<f64>() / 4000.0;
        assert!((p - 0.25).abs() < 0.02, "{p}");
        assert!((noise_std_for_snr(1.0, 20.0) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_sources() {
        let g = circular_array(4, 0.05, 0.1).unwrap();
        assert!(simulate_snapshot(&g, &[PointSource::new(f64::NAN, 0.0, 1.0)], 0.0, 0).is_err());
        assert!(simulate_snapshot(&g, &[PointSource::new(0.0, 95.0, 1.0)], 0.0, 0).is_err());
        assert!(simulate_snapshot(&g, &[PointSource::new(0.0, 0.0, -1.0)], 0.0, 0).is_err());
        assert!(simulate_snapshot(&g, &[], -0.1, 0).is_err());
    }
}
