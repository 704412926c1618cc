use serde::Serialize;

use crate::error::{Error, Result};
use crate::raster::RgbImage;

pub const HISTOGRAM_BINS: usize = 64;

/// Per-channel (R, G, B) comparison of two images.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StatsReport {
    /// `|mean(a) - mean(b)|` in 8-bit levels.
    pub mean_delta: [f64; 3],
    /// `sum_bins min(h_a, h_b)` over normalized 64-bin histograms.
    pub histogram_intersection: [f64; 3],
}

impl StatsReport {
    pub fn min_intersection(&self) -> f64 {
        self.histogram_intersection.iter().copied().fold(1.0, f64::min)
    }
}

fn histograms(img: &RgbImage) -> ([[u64; HISTOGRAM_BINS]; 3], [u64; 3]) {
    let mut h = [[0u64; HISTOGRAM_BINS]; 3];
    let mut sums = [0u64; 3];
    for p in img.pixels().chunks_exact(3) {
        for c in 0..3 {
            h[c][p[c] as usize * HISTOGRAM_BINS / 256] += 1;
            sums[c] += p[c] as u64;
        }
    }
    (h, sums)
}

pub fn rgb_statistics_distance(a: &RgbImage, b: &RgbImage) -> Result<StatsReport> {
    if a.dims() != b.dims() {
        return Err(Error::input(format!(
            "image sizes differ: {:?} vs {:?}",
            a.dims(),
            b.dims()
        )));
    }
    let n = (a.width() * a.height()) as f64;
    if n == 0.0 {
        return Ok(StatsReport {
            mean_delta: [0.0; 3],
            histogram_intersection: [1.0; 3],
        });
    }
    let (ha, sa) = histograms(a);
    let (hb, sb) = histograms(b);
    let mut report = StatsReport {
        mean_delta: [0.0; 3],
        histogram_intersection: [0.0; 3],
    };
    for c in 0..3 {
        report.mean_delta[c] = (sa[c] as f64 - sb[c] as f64).abs() / n;
        let common: u64 = ha[c].iter().zip(&hb[c]).map(|(x, y)| *x.min(y)).sum();
        report.histogram_intersection[c] = common as f64 / n;
    }
    Ok(report)
}
