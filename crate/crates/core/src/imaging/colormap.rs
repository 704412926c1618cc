use serde::{Deserialize, Serialize};

use crate::raster::{RgbImage, UnitMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColormapName {
    #[default]
    ThermalIron,
    SpectralJet,
    Grayscale,
}

/// 256-entry RGB lookup table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Colormap {
    name: ColormapName,
    lut: [[u8; 3]; 256],
}

// Ironbow-style ramp: black, violet, magenta, orange, yellow, white.
const IRON: &[(f64, [f64; 3])] = &[
    (0.0, [0.0, 0.0, 0.0]),
    (0.15, [40.0, 0.0, 120.0]),
    (0.35, [160.0, 0.0, 150.0]),
    (0.55, [230.0, 60.0, 20.0]),
    (0.75, [255.0, 160.0, 0.0]),
    (0.9, [255.0, 230.0, 80.0]),
    (1.0, [255.0, 255.0, 255.0]),
];

impl Colormap {
    pub fn new(name: ColormapName) -> Self {
        let mut lut = [[0u8; 3]; 256];
        for (i, entry) in lut.iter_mut().enumerate() {
            let t = i as f64 / 255.0;
            let rgb = match name {
                ColormapName::Grayscale => [t * 255.0; 3],
                ColormapName::SpectralJet => {
                    let ch = |c: f64| (1.5 - (4.0 * t - c).abs()).clamp(0.0, 1.0) * 255.0;
                    [ch(3.0), ch(2.0), ch(1.0)]
                }
                ColormapName::ThermalIron => piecewise(IRON, t),
            };
            *entry = rgb.map(|c| c.round() as u8);
        }
        Colormap { name, lut }
    }

    pub fn name(&self) -> ColormapName {
        self.name
    }

    pub fn lookup(&self, index: u8) -> [u8; 3] {
        self.lut[index as usize]
    }

    /// Table index for a value in `[0, 1]`: `round(v * 255)`.
    pub fn index_of(v: f64) -> u8 {
        (v * 255.0).round() as u8
    }
}

impl From<ColormapName> for Colormap {
    fn from(name: ColormapName) -> Self {
        Colormap::new(name)
    }
}

fn piecewise(stops: &[(f64, [f64; 3])], t: f64) -> [f64; 3] {
    let i = stops.iter().rposition(|(s, _)| *s <= t).unwrap_or(0).min(stops.len() - 2);
    let (t0, a) = stops[i];
    let (t1, b) = stops[i + 1];
    let f = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
    [0, 1, 2].map(|c| a[c] + f * (b[c] - a[c]))
}

/// Maps every value through the colormap; output has the matrix dimensions.
pub fn colorize(values: &UnitMatrix, colormap: &Colormap) -> RgbImage {
    let mut pixels = Vec::with_capacity(3 * values.values().len());
    for &v in values.values() {
        pixels.extend_from_slice(&colormap.lookup(Colormap::index_of(v)));
    }
    RgbImage::new(values.width(), values.height(), pixels).expect("dimensions carried over")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const ALL: [ColormapName; 3] = [
        ColormapName::ThermalIron,
        ColormapName::SpectralJet,
        ColormapName::Grayscale,
    ];

    #[test]
    fn endpoints_are_distinct() {
        for name in ALL {
            let c = Colormap::new(name);
            assert_ne!(c.lookup(0), c.lookup(255), "{name:?}");
        }
    }

    #[test]
    fn uniform_inputs() {
        for name in ALL {
            let c = Colormap::new(name);
            let zeros = colorize(&UnitMatrix::new(3, 2, vec![0.0; 6]).unwrap(), &c);
            assert!(zeros.pixels().chunks(3).all(|p| p == c.lookup(0)));
            let ones = colorize(&UnitMatrix::new(3, 2, vec![1.0; 6]).unwrap(), &c);
            assert!(ones.pixels().chunks(3).all(|p| p == c.lookup(255)));
            assert_eq!(ones.dims(), (3, 2));
        }
    }

    #[test]
    fn grayscale_endpoints() {
        let img = colorize(
            &UnitMatrix::new(2, 1, vec![0.0, 1.0]).unwrap(),
            &Colormap::new(ColormapName::Grayscale),
        );
        assert_eq!(img.pixels(), &[0, 0, 0, 255, 255, 255]);
    }

    #[test]
    fn out_of_range_values_rejected() {
        assert!(UnitMatrix::new(2, 1, vec![0.0, 1.5]).is_err());
        assert!(UnitMatrix::new(2, 1, vec![-0.1, 1.0]).is_err());
    }

    #[test]
    fn config_names() {
        let n: ColormapName = serde_json::from_str("\"spectral_jet\"").unwrap();
        assert_eq!(n, ColormapName::SpectralJet);
    }

    proptest! {
        #[test]
        fn index_is_monotone(a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(Colormap::index_of(lo) <= Colormap::index_of(hi));
        }
    }
}
