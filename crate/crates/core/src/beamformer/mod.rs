//! Delay-and-sum beamforming into azimuth-elevation dB heatmaps.
//!
//! For every look direction `(az, el)` the heatmap holds
//! `20 log10 |sum_k x_k exp(-j phi_k(az, el))|`, floored at `floor_db`.

mod grid;
mod heatmap;
mod spectrum;
mod steering;

pub use grid::AngleGrid;
pub use heatmap::{normalize, Heatmap};
pub use spectrum::{dominant_bin, dominant_bin_wavelength, AudioBlock, DominantBin};
pub use steering::{beamform, SteeringCache};

pub const DEFAULT_FLOOR_DB: f64 = -120.0;
pub const DEFAULT_DYNAMIC_RANGE_DB: f64 = 30.0;
