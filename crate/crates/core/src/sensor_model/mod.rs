//! Array geometry, frame types and the far-field scene simulator.
//!
//! Angles are degrees at every public boundary. Arrays are planar (z = 0)
//! and narrowband: one wavelength per geometry.

mod geometry;
mod simulate;
mod snapshot;
mod thermal;

pub use geometry::{circular_array, steering_phase, ArrayGeometry, SensorKind};
pub use simulate::{noise_std_for_snr, simulate_snapshot, PointSource};
pub use snapshot::ArraySnapshot;
pub use thermal::ThermalFrame;

use crate::error::{Error, Result};

/// Far-field front hemisphere: both look angles strictly inside (-90, 90).
pub(crate) fn check_look_angle(name: &str, deg: f64) -> Result<()> {
    if !deg.is_finite() || deg <= -90.0 || deg >= 90.0 {
        return Err(Error::input(format!(
            "{name} {deg} deg outside the open interval (-90, 90)"
        )));
    }
    Ok(())
}
