use std::time::Duration;

use super::SegMask;
use crate::error::{Error, Result};
use crate::raster::{BinaryMask, RgbImage};

/// Full replacement inside the mask.
pub const DEFAULT_ALPHA: f64 = 1.0;

/// RGB frame with one sensor's calibrated image painted inside the mask.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorMaskedImage {
    pub image: RgbImage,
    pub alpha: f64,
    pub sensor_id: String,
    pub mask_prompt: String,
    pub mask_generation: u64,
    pub mask_age_ms: u64,
    pub frame_timestamp: Duration,
}

impl SensorMaskedImage {
    pub fn new(
        image: RgbImage,
        alpha: f64,
        sensor_id: impl Into<String>,
        mask: &SegMask,
        frame_timestamp: Duration,
    ) -> Self {
        SensorMaskedImage {
            image,
            alpha,
            sensor_id: sensor_id.into(),
            mask_prompt: mask.prompt_text.clone(),
            mask_generation: mask.generation,
            mask_age_ms: mask.age_ms(frame_timestamp),
            frame_timestamp,
        }
    }
}

/// Per pixel and channel:
///
/// * mask 1, validity 1: `floor(alpha * sensor + (1 - alpha) * rgb + 0.5)`
/// * mask 1, validity 0: `rgb` (no sensor coverage to paint)
/// * mask 0: `rgb`, bit-exact
pub fn blend(
    rgb: &RgbImage,
    sensor: &RgbImage,
    validity: &BinaryMask,
    mask: &BinaryMask,
    alpha: f64,
) -> Result<RgbImage> {
    let mut out = rgb.clone();
    blend_into(&mut out, sensor, validity, mask, alpha)?;
    Ok(out)
}

fn blend_into(
    out: &mut RgbImage,
    sensor: &RgbImage,
    validity: &BinaryMask,
    mask: &BinaryMask,
    alpha: f64,
) -> Result<()> {
    let dims = out.dims();
    if sensor.dims() != dims || validity.dims() != dims || mask.dims() != dims {
        return Err(Error::input(format!(
            "blend inputs differ in size: rgb {dims:?}, sensor {:?}, validity {:?}, mask {:?}",
            sensor.dims(),
            validity.dims(),
            mask.dims()
        )));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::input(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    let beta = 1.0 - alpha;
    let s = sensor.pixels();
    let px = out.pixels_mut();
    for (i, (&m, &v)) in mask.bits().iter().zip(validity.bits()).enumerate() {
        if m & v == 1 {
            for c in 3 * i..3 * i + 3 {
                px[c] = (alpha * s[c] as f64 + beta * px[c] as f64 + 0.5).floor() as u8;
            }
        }
    }
    Ok(())
}

/// One sensor's contribution to a composite.
#[derive(Debug, Clone, Copy)]
pub struct BlendLayer<'a> {
    pub sensor: &'a RgbImage,
    pub validity: &'a BinaryMask,
    pub mask: &'a BinaryMask,
    pub alpha: f64,
}

/// Applies several layers in order onto one image. Not the default output
/// path (that is one image per sensor); layers with disjoint masks commute.
pub fn composite(rgb: &RgbImage, layers: &[BlendLayer<'_>]) -> Result<RgbImage> {
    let mut out = rgb.clone();
    for l in layers {
        blend_into(&mut out, l.sensor, l.validity, l.mask, l.alpha)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_alpha_single_pixel() {
        let rgb = RgbImage::filled(2, 1, [100, 100, 100]);
        let sensor = RgbImage::filled(2, 1, [200, 0, 0]);
        let mask = BinaryMask::new(2, 1, vec![1, 0]).unwrap();
        let out = blend(&rgb, &sensor, &BinaryMask::ones(2, 1), &mask, 0.5).unwrap();
        assert_eq!(out.get(0, 0), [150, 50, 50]);
        assert_eq!(out.get(1, 0), [100, 100, 100]);
    }

    #[test]
    fn rounds_half_up() {
        let rgb = RgbImage::filled(1, 1, [100, 0, 254]);
        let sensor = RgbImage::filled(1, 1, [101, 1, 255]);
        let out = blend(&rgb, &sensor, &BinaryMask::ones(1, 1), &BinaryMask::ones(1, 1), 0.5).unwrap();
        assert_eq!(out.get(0, 0), [101, 1, 255]);
    }

    #[test]
    fn alpha_one_replaces_inside_mask() {
        let rgb = RgbImage::from_fn(4, 3, |x, y| [x as u8, y as u8, 9]);
        let sensor = RgbImage::from_fn(4, 3, |x, y| [200, (x * y) as u8, 1]);
        let out = blend(&rgb, &sensor, &BinaryMask::ones(4, 3), &BinaryMask::ones(4, 3), 1.0).unwrap();
        assert_eq!(out, sensor);
    }

    #[test]
    fn invalid_coverage_keeps_rgb() {
        let rgb = RgbImage::filled(2, 1, [10, 20, 30]);
        let sensor = RgbImage::filled(2, 1, [0, 0, 0]);
        let validity = BinaryMask::new(2, 1, vec![0, 1]).unwrap();
        let out = blend(&rgb, &sensor, &validity, &BinaryMask::ones(2, 1), 1.0).unwrap();
        assert_eq!(out.get(0, 0), [10, 20, 30]);
        assert_eq!(out.get(1, 0), [0, 0, 0]);
    }

    #[test]
    fn errors() {
        let a = RgbImage::filled(2, 2, [0; 3]);
        let b = RgbImage::filled(2, 1, [0; 3]);
        let m = BinaryMask::ones(2, 2);
        assert!(blend(&a, &b, &m, &m, 0.5).is_err());
        assert!(blend(&a, &a, &m, &BinaryMask::ones(1, 2), 0.5).is_err());
        assert!(blend(&a, &a, &m, &m, 1.5).is_err());
        assert!(blend(&a, &a, &m, &m, -0.1).is_err());
        assert!(blend(&a, &a, &m, &m, f64::NAN).is_err());
    }
}
