use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::check_look_angle;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensorKind {
    MmwaveRadar,
    MicrophoneArray,
}

/// Element positions (meters, array plane) and operating wavelength.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GeometryFile", into = "GeometryFile")]
pub struct ArrayGeometry {
    elements: Vec<[f64; 2]>,
    wavelength: f64,
    kind: SensorKind,
}

/// On-disk layout: `{sensor_kind, wavelength_m, elements: [[x, y], ...]}`.
#[derive(Serialize, Deserialize)]
struct GeometryFile {
    sensor_kind: SensorKind,
    wavelength_m: f64,
    elements: Vec<[f64; 2]>,
}

impl TryFrom<GeometryFile> for ArrayGeometry {
    type Error = Error;

    fn try_from(f: GeometryFile) -> Result<Self> {
        ArrayGeometry::new(f.elements, f.wavelength_m, f.sensor_kind)
    }
}

impl From<ArrayGeometry> for GeometryFile {
    fn from(g: ArrayGeometry) -> Self {
        GeometryFile {
            sensor_kind: g.kind,
            wavelength_m: g.wavelength,
            elements: g.elements,
        }
    }
}

impl ArrayGeometry {
    pub fn new(elements: Vec<[f64; 2]>, wavelength: f64, kind: SensorKind) -> Result<Self> {
        if elements.len() < 2 {
            return Err(Error::Geometry(format!(
                "need at least 2 elements, got {}",
                elements.len()
            )));
        }
        if !(wavelength.is_finite() && wavelength > 0.0) {
            return Err(Error::Geometry(format!(
                "wavelength must be positive, got {wavelength}"
            )));
        }
        for (k, p) in elements.iter().enumerate() {
            if !(p[0].is_finite() && p[1].is_finite()) {
                return Err(Error::Geometry(format!("element {k} has non-finite position")));
            }
        }
        for i in 0..elements.len() {
            for j in i + 1..elements.len() {
                if elements[i] == elements[j] {
                    return Err(Error::Geometry(format!(
                        "elements {i} and {j} share position {:?}",
                        elements[i]
                    )));
                }
            }
        }
        Ok(ArrayGeometry {
            elements,
            wavelength,
            kind,
        })
    }

    pub fn elements(&self) -> &[[f64; 2]] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn kind(&self) -> SensorKind {
        self.kind
    }

    /// Same element layout at another wavelength. Used for wideband audio,
    /// where the wavelength is picked per block.
    pub fn with_wavelength(&self, wavelength: f64) -> Result<Self> {
        ArrayGeometry::new(self.elements.clone(), wavelength, self.kind)
    }

    /// Largest distance between any two elements.
    pub fn aperture(&self) -> f64 {
        let mut max = 0.0f64;
        for (i, a) in self.elements.iter().enumerate() {
            for b in &self.elements[i + 1..] {
                max = max.max((a[0] - b[0]).hypot(a[1] - b[1]));
            }
        }
        max
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_owned(),
            line: e.line(),
            message: e.to_string(),
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("geometry serializes");
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    /// Phase with the look angles already in radians and validated.
    #[inline]
    pub(crate) fn phase_rad(&self, k: usize, az: f64, el: f64) -> f64 {
        let [x, y] = self.elements[k];
        2.0 * PI / self.wavelength * (x * el.cos() * az.sin() + y * el.sin())
    }
}

/// Far-field steering phase of one element:
/// `(2 pi / lambda) (x cos(el) sin(az) + y sin(el))`, in radians.
pub fn steering_phase(
    geometry: &ArrayGeometry,
    element_index: usize,
    azimuth_deg: f64,
    elevation_deg: f64,
) -> Result<f64> {
    if element_index >= geometry.len() {
        return Err(Error::input(format!(
            "element index {element_index} out of range for {} elements",
            geometry.len()
        )));
    }
    check_look_angle("azimuth", azimuth_deg)?;
    check_look_angle("elevation", elevation_deg)?;
    Ok(geometry.phase_rad(
        element_index,
        azimuth_deg.to_radians(),
        elevation_deg.to_radians(),
    ))
}

/// Uniform circular array, element 0 at `(radius, 0)`, counter-clockwise.
pub fn circular_array(num_elements: usize, radius: f64, wavelength: f64) -> Result<ArrayGeometry> {
    if num_elements < 2 {
        return Err(Error::input(format!(
            "circular array needs at least 2 elements, got {num_elements}"
        )));
    }
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::input(format!("radius must be positive, got {radius}")));
    }
    let elements = (0..num_elements)
        .map(|k| {
            let a = 2.0 * PI * k as f64 / num_elements as f64;
            [radius * a.cos(), radius * a.sin()]
        })
        .collect();
    ArrayGeometry::new(elements, wavelength, SensorKind::MicrophoneArray)
}
