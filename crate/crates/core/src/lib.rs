//! Sensor-masked image generation.
//!
//! Raw sensor data (thermal rasters, mmWave antenna snapshots, microphone
//! array audio) is turned into images spatially aligned with an RGB camera:
//! array sensors are beamformed into azimuth-elevation heatmaps, every
//! sensor image is colorized and calibrated onto the camera frame, and the
//! result is alpha-blended into the RGB frame inside a segmentation mask.
//!
//! Module map:
//!
//! * [`sensor_model`]: geometry, frame types, far-field simulator
//! * [`beamformer`]: delay-and-sum heatmaps and normalization
//! * [`imaging`]: colormaps, thermal scaling, calibration resampling
//! * [`fusion`]: mask-gated blending and RGB statistics
//! * [`mask_provider`]: prompt/mask backends and the async refresh worker
//! * [`pipeline`]: run configuration, datasets, batch/stream/bench runners

pub mod beamformer;
pub mod error;
pub mod fusion;
pub mod imaging;
pub mod mask_provider;
pub mod pipeline;
pub mod raster;
pub mod sensor_model;

pub use error::{Error, Result};
pub use raster::{BinaryMask, RgbImage, UnitMatrix};
