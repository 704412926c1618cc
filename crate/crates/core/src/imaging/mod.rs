//! Sensor-plane rasters to RGB-frame-aligned color images.

mod calibration;
mod colormap;
mod thermal;

pub use calibration::{
    calibrate, CalibrationMap, CalibrationTransform, Calibrated, SensorCalibration, TransformOrder,
};
pub use colormap::{colorize, Colormap, ColormapName};
pub use thermal::{load_thermal, normalize_thermal, normalize_thermal_auto, save_thermal_csv};

pub use crate::raster::{BinaryMask, RgbImage, UnitMatrix};
