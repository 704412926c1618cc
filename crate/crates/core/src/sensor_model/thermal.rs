use crate::error::{Error, Result};

/// Row-major infrared intensities in arbitrary linear units.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalFrame {
    width: usize,
    height: usize,
    values: Vec<f64>,
    pub timestamp_ns: i64,
}

impl ThermalFrame {
    pub fn new(width: usize, height: usize, values: Vec<f64>, timestamp_ns: i64) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::input("thermal frame must be non-empty"));
        }
        if values.len() != width * height {
            return Err(Error::input(format!(
                "thermal frame {width}x{height} needs {} values, got {}",
                width * height,
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::input(format!("thermal value {i} is not finite")));
        }
        Ok(ThermalFrame {
            width,
            height,
            values,
            timestamp_ns,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    /// (min, max) over the frame.
    pub fn range(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn invariants() {
        assert!(ThermalFrame::new(2, 2, vec![0.0; 3], 0).is_err());
        assert!(ThermalFrame::new(1, 1, vec![f64::NAN], 0).is_err());
        let f = ThermalFrame::new(2, 1, vec![3.0, -1.0], 0).unwrap();
        assert_eq!(f.range(), (-1.0, 3.0));
        assert_eq!(f.get(1, 0), -1.0);
    }
}
