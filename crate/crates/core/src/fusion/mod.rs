//! Mask-gated alpha blending into sensor-masked images, and the RGB
//! statistics comparator.

mod blend;
mod mask;
mod stats;

pub use blend::{blend, composite, BlendLayer, SensorMaskedImage, DEFAULT_ALPHA};
pub use mask::{MaskSource, SegMask};
pub use stats::{rgb_statistics_distance, StatsReport, HISTOGRAM_BINS};
