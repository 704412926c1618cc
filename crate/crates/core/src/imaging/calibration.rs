//! One-time sensor-to-camera alignment: rotate, scale, translate, clip.
//!
//! A transform maps continuous source coordinates `p` (pixel `(i, j)` has
//! its center at `(i + 0.5, j + 0.5)`) onto the target frame:
//!
//! ```text
//! q = M (p - c_src) + c_tgt + t
//! ```
//!
//! where `c_src`/`c_tgt` are the image centers and `M` is `S R` (rotate then
//! scale) or `R S` (scale then rotate). The inverse of an anisotropic
//! rotate-then-scale is a scale-then-rotate, so both orders are needed to
//! keep the family closed under [`CalibrationTransform::invert`].
//!
//! Target pixels outside the crop rectangle, or whose preimage falls outside
//! the source pixel-center hull, are marked invalid and filled black.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{BinaryMask, RgbImage, UnitMatrix};

const EDGE_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformOrder {
    #[default]
    RotateScale,
    ScaleRotate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TransformSpec", into = "TransformSpec")]
pub struct CalibrationTransform {
    rotation_deg: f64,
    scale: [f64; 2],
    translate: [f64; 2],
    crop: [usize; 4],
    target: [usize; 2],
    order: TransformOrder,
}

#[derive(Serialize, Deserialize)]
struct TransformSpec {
    rotation_deg: f64,
    scale: [f64; 2],
    translate_px: [f64; 2],
    crop: [usize; 4],
    target: [usize; 2],
    #[serde(default, skip_serializing_if = "is_default_order")]
    order: TransformOrder,
}

fn is_default_order(o: &TransformOrder) -> bool {
    *o == TransformOrder::RotateScale
}

impl TryFrom<TransformSpec> for CalibrationTransform {
    type Error = Error;
    fn try_from(s: TransformSpec) -> Result<Self> {
        CalibrationTransform::new(s.rotation_deg, s.scale, s.translate_px, s.crop, s.target)
            .map(|t| t.with_order(s.order))
    }
}

impl From<CalibrationTransform> for TransformSpec {
    fn from(t: CalibrationTransform) -> Self {
        TransformSpec {
            rotation_deg: t.rotation_deg,
            scale: t.scale,
            translate_px: t.translate,
            crop: t.crop,
            target: t.target,
            order: t.order,
        }
    }
}

/// Persisted per-sensor calibration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorCalibration {
    pub sensor_id: String,
    #[serde(flatten)]
    pub transform: CalibrationTransform,
}

impl SensorCalibration {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_owned(),
            line: e.line(),
            message: e.to_string(),
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("calibration serializes");
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

/// `(sin, cos)` with exact values on multiples of 90 degrees.
fn sin_cos_deg(deg: f64) -> (f64, f64) {
    let quarter = deg / 90.0;
    if quarter == quarter.round() && quarter.abs() < 1e9 {
        match (quarter as i64).rem_euclid(4) {
            0 => (0.0, 1.0),
            1 => (1.0, 0.0),
            2 => (0.0, -1.0),
            _ => (-1.0, 0.0),
        }
    } else {
        deg.to_radians().sin_cos()
    }
}

type Mat2 = [[f64; 2]; 2];

fn mul(m: &Mat2, v: [f64; 2]) -> [f64; 2] {
    [
        m[0][0] * v[0] + m[0][1] * v[1],
        m[1][0] * v[0] + m[1][1] * v[1],
    ]
}

impl CalibrationTransform {
    pub fn new(
        rotation_deg: f64,
        scale: [f64; 2],
        translate: [f64; 2],
        crop: [usize; 4],
        target: [usize; 2],
    ) -> Result<Self> {
        if !rotation_deg.is_finite() {
            return Err(Error::input("rotation must be finite"));
        }
        if scale.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::input(format!("scales must be positive, got {scale:?}")));
        }
        if translate.iter().any(|t| !t.is_finite()) {
            return Err(Error::input("translation must be finite"));
        }
        if target[0] == 0 || target[1] == 0 {
            return Err(Error::input(format!("target {target:?} is empty")));
        }
        let [cx, cy, cw, ch] = crop;
        if cw == 0 || ch == 0 {
            return Err(Error::input(format!("degenerate crop {crop:?}")));
        }
        if cx + cw > target[0] || cy + ch > target[1] {
            return Err(Error::input(format!(
                "crop {crop:?} extends outside target {target:?}"
            )));
        }
        Ok(CalibrationTransform {
            rotation_deg,
            scale,
            translate,
            crop,
            target,
            order: TransformOrder::RotateScale,
        })
    }

    /// Same-size passthrough.
    pub fn identity(width: usize, height: usize) -> Self {
        Self::new(0.0, [1.0, 1.0], [0.0, 0.0], [0, 0, width, height], [width, height])
            .expect("identity is valid for non-empty dims")
    }

    pub fn with_order(mut self, order: TransformOrder) -> Self {
        self.order = order;
        self
    }

    pub fn rotation_deg(&self) -> f64 {
        self.rotation_deg
    }

    pub fn scale(&self) -> [f64; 2] {
        self.scale
    }

    pub fn translate(&self) -> [f64; 2] {
        self.translate
    }

    pub fn crop(&self) -> [usize; 4] {
        self.crop
    }

    pub fn target(&self) -> [usize; 2] {
        self.target
    }

    pub fn order(&self) -> TransformOrder {
        self.order
    }

    /// Copy with rotation and translation offsets added; used to model
    /// calibration error.
    pub fn perturbed(&self, d_rotation_deg: f64, d_translate: [f64; 2]) -> Self {
        let mut t = *self;
        t.rotation_deg += d_rotation_deg;
        t.translate = [t.translate[0] + d_translate[0], t.translate[1] + d_translate[1]];
        t
    }

    fn linear(&self) -> Mat2 {
        let (s, c) = sin_cos_deg(self.rotation_deg);
        let [sx, sy] = self.scale;
        match self.order {
            TransformOrder::RotateScale => [[sx * c, -sx * s], [sy * s, sy * c]],
            TransformOrder::ScaleRotate => [[c * sx, -s * sy], [s * sx, c * sy]],
        }
    }

    fn linear_inverse(&self) -> Mat2 {
        let (s, c) = sin_cos_deg(self.rotation_deg);
        let [sx, sy] = self.scale;
        match self.order {
            TransformOrder::RotateScale => [[c / sx, s / sy], [-s / sx, c / sy]],
            TransformOrder::ScaleRotate => [[c / sx, s / sx], [-s / sy, c / sy]],
        }
    }

    fn target_center(&self) -> [f64; 2] {
        [self.target[0] as f64 / 2.0, self.target[1] as f64 / 2.0]
    }

    /// Source point to target point, for a source of `source_dims`.
    pub fn forward_point(&self, p: [f64; 2], source_dims: (usize, usize)) -> [f64; 2] {
        let cs = [source_dims.0 as f64 / 2.0, source_dims.1 as f64 / 2.0];
        let ct = self.target_center();
        let q = mul(&self.linear(), [p[0] - cs[0], p[1] - cs[1]]);
        [
            q[0] + ct[0] + self.translate[0],
            q[1] + ct[1] + self.translate[1],
        ]
    }

    /// Target point back to the source plane.
    pub fn inverse_point(&self, q: [f64; 2], source_dims: (usize, usize)) -> [f64; 2] {
        let cs = [source_dims.0 as f64 / 2.0, source_dims.1 as f64 / 2.0];
        let ct = self.target_center();
        let p = mul(
            &self.linear_inverse(),
            [
                q[0] - ct[0] - self.translate[0],
                q[1] - ct[1] - self.translate[1],
            ],
        );
        [p[0] + cs[0], p[1] + cs[1]]
    }

    /// The transform taking this transform's target frame back onto a source
    /// of `source_dims`. Its crop is the whole source.
    pub fn invert(&self, source_dims: (usize, usize)) -> Result<Self> {
        let m_inv = self.linear_inverse();
        let t = mul(&m_inv, self.translate);
        let order = match self.order {
            TransformOrder::RotateScale => TransformOrder::ScaleRotate,
            TransformOrder::ScaleRotate => TransformOrder::RotateScale,
        };
        Ok(CalibrationTransform::new(
            -self.rotation_deg,
            [1.0 / self.scale[0], 1.0 / self.scale[1]],
            [-t[0], -t[1]],
            [0, 0, source_dims.0, source_dims.1],
            [source_dims.0, source_dims.1],
        )?
        .with_order(order))
    }

    fn in_crop(&self, x: usize, y: usize) -> bool {
        let [cx, cy, cw, ch] = self.crop;
        x >= cx && x < cx + cw && y >= cy && y < cy + ch
    }
}

/// A calibrated sensor image and where it carries real data.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibrated {
    pub image: RgbImage,
    pub validity: BinaryMask,
}

#[derive(Debug, Clone, Copy)]
struct Tap {
    idx: [u32; 4],
    w: [f32; 4],
}

/// Precomputed bilinear resampling for one (transform, source size) pair.
#[derive(Debug, Clone)]
pub struct CalibrationMap {
    source_dims: (usize, usize),
    target_dims: (usize, usize),
    taps: Vec<Option<Tap>>,
    validity: BinaryMask,
}

impl CalibrationMap {
    pub fn new(transform: &CalibrationTransform, source_dims: (usize, usize)) -> Result<Self> {
        let (sw, sh) = source_dims;
        if sw == 0 || sh == 0 {
            return Err(Error::input("source image is empty"));
        }
        let [tw, th] = transform.target;
        let mut taps = Vec::with_capacity(tw * th);
        let mut bits = Vec::with_capacity(tw * th);
        for y in 0..th {
            for x in 0..tw {
                let tap = if transform.in_crop(x, y) {
                    let p = transform.inverse_point([x as f64 + 0.5, y as f64 + 0.5], source_dims);
                    bilinear_tap(p[0] - 0.5, p[1] - 0.5, sw, sh)
                } else {
                    None
                };
                bits.push(tap.is_some() as u8);
                taps.push(tap);
            }
        }
        Ok(CalibrationMap {
            source_dims,
            target_dims: (tw, th),
            taps,
            validity: BinaryMask::new(tw, th, bits).expect("sizes match"),
        })
    }

    pub fn source_dims(&self) -> (usize, usize) {
        self.source_dims
    }

    pub fn target_dims(&self) -> (usize, usize) {
        self.target_dims
    }

    pub fn validity(&self) -> &BinaryMask {
        &self.validity
    }

    fn check_source(&self, dims: (usize, usize)) -> Result<()> {
        if dims != self.source_dims {
            return Err(Error::input(format!(
                "calibration map built for {:?} source, got {:?}",
                self.source_dims, dims
            )));
        }
        Ok(())
    }

    /// Resamples `image`. When `source_validity` is given, a target pixel is
    /// valid only if every tap with non-zero weight lands on valid source.
    pub fn apply(&self, image: &RgbImage, source_validity: Option<&BinaryMask>) -> Result<Calibrated> {
        self.check_source(image.dims())?;
        if let Some(v) = source_validity {
            self.check_source(v.dims())?;
        }
        let src = image.pixels();
        let (tw, th) = self.target_dims;
        let mut out = vec![0u8; 3 * tw * th];
        let mut bits = self.validity.bits().to_vec();
        for (i, tap) in self.taps.iter().enumerate() {
            let Some(tap) = tap else { continue };
            if let Some(v) = source_validity {
                let ok = tap
                    .idx
                    .iter()
                    .zip(tap.w)
                    .all(|(&j, w)| w == 0.0 || v.bits()[j as usize] == 1);
                if !ok {
                    bits[i] = 0;
                    continue;
                }
            }
            for c in 0..3 {
                let mut acc = 0.0f64;
                for (&j, &w) in tap.idx.iter().zip(&tap.w) {
                    acc += w as f64 * src[3 * j as usize + c] as f64;
                }
                out[3 * i + c] = (acc + 0.5).floor().clamp(0.0, 255.0) as u8;
            }
        }
        Ok(Calibrated {
            image: RgbImage::new(tw, th, out).expect("sizes match"),
            validity: BinaryMask::new(tw, th, bits).expect("sizes match"),
        })
    }

    /// Resamples a scalar field; invalid pixels hold 0.
    pub fn apply_scalar(&self, values: &UnitMatrix) -> Result<Vec<f64>> {
        self.check_source((values.width(), values.height()))?;
        let src = values.values();
        Ok(self
            .taps
            .iter()
            .map(|tap| match tap {
                Some(t) => t
                    .idx
                    .iter()
                    .zip(&t.w)
                    .map(|(&j, &w)| w as f64 * src[j as usize])
                    .sum(),
                None => 0.0,
            })
            .collect())
    }
}

/// Bilinear taps at pixel-index coordinates `(x, y)`; `None` outside the
/// pixel-center hull.
fn bilinear_tap(x: f64, y: f64, w: usize, h: usize) -> Option<Tap> {
    let (wmax, hmax) = ((w - 1) as f64, (h - 1) as f64);
    if !(x >= -EDGE_EPS && x <= wmax + EDGE_EPS && y >= -EDGE_EPS && y <= hmax + EDGE_EPS) {
        return None;
    }
    let (x, y) = (x.clamp(0.0, wmax), y.clamp(0.0, hmax));
    let (x0, y0) = (x.floor() as usize, y.floor() as usize);
    let (x1, y1) = ((x0 + 1).min(w - 1), (y0 + 1).min(h - 1));
    let (fx, fy) = (x - x0 as f64, y - y0 as f64);
    let at = |xx: usize, yy: usize| (yy * w + xx) as u32;
    Some(Tap {
        idx: [at(x0, y0), at(x1, y0), at(x0, y1), at(x1, y1)],
        w: [
            ((1.0 - fx) * (1.0 - fy)) as f32,
            (fx * (1.0 - fy)) as f32,
            ((1.0 - fx) * fy) as f32,
            (fx * fy) as f32,
        ],
    })
}

/// Resamples a sensor-plane image onto the camera frame.
pub fn calibrate(sensor_image: &RgbImage, transform: &CalibrationTransform) -> Result<Calibrated> {
    CalibrationMap::new(transform, sensor_image.dims())?.apply(sensor_image, None)
}
