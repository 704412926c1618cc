use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::dataset::Manifest;
use crate::error::Result;
use crate::imaging::CalibrationMap;

/// Largest forward-then-inverse point error accepted, in pixels.
pub const ROUND_TRIP_TOLERANCE_PX: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationCheck {
    pub sensor_id: String,
    pub source_dims: [usize; 2],
    pub target_dims: [usize; 2],
    pub max_round_trip_px: f64,
    /// Share of target pixels covered by sensor data.
    pub coverage: f64,
    /// RGB size from the dataset manifest, when one is readable.
    pub rgb_dims: Option<[usize; 2]>,
    pub ok: bool,
}

/// Loads every sensor's calibration and checks that it inverts cleanly, covers
/// part of the frame, and targets the dataset's RGB size.
pub fn check_calibrations(cfg: &RunConfig) -> Result<Vec<CalibrationCheck>> {
    let sensors = cfg.resolve_sensors()?;
    let rgb = Manifest::load(&cfg.input_path())
        .ok()
        .map(|m| [m.rgb_width, m.rgb_height]);
    sensors
        .iter()
        .map(|s| {
            let t = &s.calibration.transform;
            let src = s.source_dims();
            let target = t.target();
            let inv = t.invert(src)?;
            let mut max_err: f64 = 0.0;
            for i in 0..=10 {
                for j in 0..=10 {
                    let p = [src.0 as f64 * i as f64 / 10.0, src.1 as f64 * j as f64 / 10.0];
                    let back = inv.forward_point(t.forward_point(p, src), (target[0], target[1]));
                    max_err = max_err.max((back[0] - p[0]).abs()).max((back[1] - p[1]).abs());
                }
            }
            let coverage = CalibrationMap::new(t, src)?.validity().fraction();
            let ok = max_err <= ROUND_TRIP_TOLERANCE_PX
                && coverage > 0.0
                && rgb.is_none_or(|r| r == target);
            Ok(CalibrationCheck {
                sensor_id: s.id().to_string(),
                source_dims: [src.0, src.1],
                target_dims: target,
                max_round_trip_px: max_err,
                coverage,
                rgb_dims: rgb,
                ok,
            })
        })
        .collect()
}
