use num_complex::Complex64;

use super::{AngleGrid, Heatmap};
use crate::error::{Error, Result};
use crate::sensor_model::{ArrayGeometry, ArraySnapshot};

/// Conjugate steering weights `exp(-j phi_k)` for every (cell, element) of
/// one geometry/grid pair. Immutable once built; beamforming a frame is then
/// one complex multiply-accumulate per cell and element.
#[derive(Debug, Clone)]
pub struct SteeringCache {
    grid: AngleGrid,
    elements: usize,
    // cell-major: weights[cell * elements + k]
    weights: Vec<Complex64>,
}

impl SteeringCache {
    pub fn new(geometry: &ArrayGeometry, grid: &AngleGrid) -> Self {
        let k_count = geometry.len();
        let mut weights = Vec::with_capacity(grid.cells() * k_count);
        for row in 0..grid.el_steps() {
            let el = grid.elevation_deg(row).to_radians();
            for col in 0..grid.az_steps() {
                let az = grid.azimuth_deg(col).to_radians();
                weights.extend((0..k_count).map(|k| conj_weight(geometry, k, az, el)));
            }
        }
        SteeringCache {
            grid: *grid,
            elements: k_count,
            weights,
        }
    }

    pub fn grid(&self) -> &AngleGrid {
        &self.grid
    }

    pub fn elements(&self) -> usize {
        self.elements
    }

    pub fn beamform(&self, snapshot: &ArraySnapshot, floor_db: f64) -> Result<Heatmap> {
        check_inputs(snapshot, self.elements, floor_db)?;
        let x = snapshot.samples();
        let values = self
            .weights
            .chunks_exact(self.elements)
            .map(|w| {
                let sum: Complex64 = w.iter().zip(x).map(|(w, x)| w * x).sum();
                to_db(sum, floor_db)
            })
            .collect();
        Ok(Heatmap::from_parts(self.grid, values, floor_db))
    }
}

#[inline]
fn conj_weight(geometry: &ArrayGeometry, k: usize, az: f64, el: f64) -> Complex64 {
    Complex64::from_polar(1.0, -geometry.phase_rad(k, az, el))
}

#[inline]
fn to_db(sum: Complex64, floor_db: f64) -> f64 {
    // 10 log10 |s|^2 avoids the hypot behind `norm`.
    let power = sum.norm_sqr();
    if power > 0.0 {
        (10.0 * power.log10()).max(floor_db)
    } else {
        floor_db
    }
}

fn check_inputs(snapshot: &ArraySnapshot, elements: usize, floor_db: f64) -> Result<()> {
    if snapshot.len() != elements {
        return Err(Error::input(format!(
            "snapshot has {} samples but the geometry has {elements} elements",
            snapshot.len()
        )));
    }
    if !floor_db.is_finite() {
        return Err(Error::input(format!("floor_db must be finite, got {floor_db}")));
    }
    Ok(())
}

/// Uncached delay-and-sum: recomputes every steering phase. Equivalent to
/// `SteeringCache::new(geometry, grid).beamform(snapshot, floor_db)`.
pub fn beamform(
    snapshot: &ArraySnapshot,
    geometry: &ArrayGeometry,
    grid: &AngleGrid,
    floor_db: f64,
) -> Result<Heatmap> {
    check_inputs(snapshot, geometry.len(), floor_db)?;
    let x = snapshot.samples();
    let mut values = Vec::with_capacity(grid.cells());
    for row in 0..grid.el_steps() {
        let el = grid.elevation_deg(row).to_radians();
        for col in 0..grid.az_steps() {
            let az = grid.azimuth_deg(col).to_radians();
            let sum: Complex64 = x
                .iter()
                .enumerate()
                .map(|(k, x)| conj_weight(geometry, k, az, el) * x)
                .sum();
            values.push(to_db(sum, floor_db));
        }
    }
    Ok(Heatmap::from_parts(*grid, values, floor_db))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beamformer::DEFAULT_FLOOR_DB;
    use crate::sensor_model::{circular_array, simulate_snapshot, PointSource};
    use proptest::prelude::*;

    fn unit_snapshot(k: usize) -> ArraySnapshot {
        ArraySnapshot::new(vec![Complex64::new(1.0, 0.0); k], 0).unwrap()
    }

    /// Direct evaluation of the delay-and-sum power at one direction with
    /// plain trigonometry, independent of the cache and `phase_rad`.
    fn oracle_db(geometry: &ArrayGeometry, x: &[Complex64], az_deg: f64, el_deg: f64) -> f64 {
        let (az, el) = (az_deg.to_radians(), el_deg.to_radians());
        let (mut re, mut im) = (0.0, 0.0);
        for (p, s) in geometry.elements().iter().zip(x) {
            let phi = 2.0 * std::f64::consts::PI / geometry.wavelength()
                * (p[0] * el.cos() * az.sin() + p[1] * el.sin());
            re += s.re * phi.cos() + s.im * phi.sin();
            im += s.im * phi.cos() - s.re * phi.sin();
        }
        20.0 * re.hypot(im).log10()
    }

    #[test]
    fn six_unit_phasors_at_boresight() {
        let g = circular_array(6, 0.05, 0.0857).unwrap();
        let grid = AngleGrid::default();
        let h = beamform(&unit_snapshot(6), &g, &grid, DEFAULT_FLOOR_DB).unwrap();
        let (r, c) = grid.nearest_cell(0.0, 0.0).unwrap();
        assert!((h.value(r, c) - 15.563_025_007_672_874).abs() < 1e-9);
        assert!((h.value(r, c) - 20.0 * 6f64.log10()).abs() < 1e-12);
    }

    #[test]
    fn zero_snapshot_is_floored() {
        let g = circular_array(6, 0.05, 0.0857).unwrap();
        let s = ArraySnapshot::new(vec![Complex64::new(0.0, 0.0); 6], 0).unwrap();
        let h = beamform(&s, &g, &AngleGrid::default(), -120.0).unwrap();
        assert!(h.values_db().iter().all(|&v| v == -120.0));
    }

    #[test]
    fn errors() {
        let g = circular_array(6, 0.05, 0.0857).unwrap();
        let grid = AngleGrid::default();
        assert!(beamform(&unit_snapshot(5), &g, &grid, -120.0).is_err());
        assert!(beamform(&unit_snapshot(6), &g, &grid, f64::NAN).is_err());
        let cache = SteeringCache::new(&g, &grid);
        assert!(cache.beamform(&unit_snapshot(7), -120.0).is_err());
        assert!(cache.beamform(&unit_snapshot(6), f64::NEG_INFINITY).is_err());
    }

    #[test]
    fn localizes_simulated_source() {
        let g = circular_array(6, 0.05, 0.0857).unwrap();
        let grid = AngleGrid::default();
        let s = simulate_snapshot(&g, &[PointSource::new(20.0, 10.0, 1.0)], 0.0, 0).unwrap();
        let h = SteeringCache::new(&g, &grid).beamform(&s, -120.0).unwrap();
        let (r, c) = h.argmax();
        assert!((grid.azimuth_deg(c) - 20.0).abs() <= grid.az_step_deg());
        assert!((grid.elevation_deg(r) - 10.0).abs() <= grid.el_step_deg());

        // Exhaustive oracle over the grid agrees on the argmax cell.
        let mut best = (f64::NEG_INFINITY, 0, 0);
        for row in 0..grid.el_steps() {
            for col in 0..grid.az_steps() {
                let v = oracle_db(&g, s.samples(), grid.azimuth_deg(col), grid.elevation_deg(row));
                assert!((v - h.value(row, col)).abs() < 1e-9);
                if v > best.0 {
                    best = (v, row, col);
                }
            }
        }
        assert_eq!((best.1, best.2), (r, c));
        assert!((h.value(r, c) - 20.0 * 6f64.log10()).abs() < 1e-6);
    }

    #[test]
    fn cached_and_uncached_agree() {
        let g = circular_array(8, 0.04, 0.05).unwrap();
        let grid = AngleGrid::new((-30.0, 30.0, 13), (-20.0, 20.0, 9)).unwrap();
        let s = simulate_snapshot(&g, &[PointSource::new(7.0, -3.0, 1.3)], 0.2, 5).unwrap();
        let a = beamform(&s, &g, &grid, -120.0).unwrap();
        let b = SteeringCache::new(&g, &grid).beamform(&s, -120.0).unwrap();
        for (x, y) in a.values_db().iter().zip(b.values_db()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn global_phase_invariance(gamma in -10.0f64..10.0, seed in 0u64..1000) {
            let g = circular_array(6, 0.05, 0.0857).unwrap();
            let grid = AngleGrid::new((-45.0, 45.0, 19), (-30.0, 30.0, 13)).unwrap();
            let s = simulate_snapshot(&g, &[PointSource::new(11.0, 4.0, 1.0)], 0.3, seed).unwrap();
            let rot = Complex64::from_polar(1.0, gamma);
            let s2 = ArraySnapshot::new(s.samples().iter().map(|x| x * rot).collect(), 0).unwrap();
            let cache = SteeringCache::new(&g, &grid);
            let a = cache.beamform(&s, -120.0).unwrap();
            let b = cache.beamform(&s2, -120.0).unwrap();
            for (x, y) in a.values_db().iter().zip(b.values_db()) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }

        #[test]
        fn amplitude_scaling_shifts_db(c in 0.01f64..100.0, seed in 0u64..1000) {
            let g = circular_array(6, 0.05, 0.0857).unwrap();
            let grid = AngleGrid::new((-45.0, 45.0, 19), (-30.0, 30.0, 13)).unwrap();
            let s = simulate_snapshot(&g, &[PointSource::new(-21.0, 9.0, 1.0)], 0.3, seed).unwrap();
            let s2 = ArraySnapshot::new(s.samples().iter().map(|x| x * c).collect(), 0).unwrap();
            let cache = SteeringCache::new(&g, &grid);
            let a = cache.beamform(&s, -120.0).unwrap();
            let b = cache.beamform(&s2, -120.0).unwrap();
            let shift = 20.0 * c.log10();
            for (x, y) in a.values_db().iter().zip(b.values_db()) {
                if *x > -120.0 && *y > -120.0 {
                    prop_assert!((y - x - shift).abs() < 1e-9);
                }
            }
            prop_assert_eq!(a.argmax(), b.argmax());
        }
    }
}
