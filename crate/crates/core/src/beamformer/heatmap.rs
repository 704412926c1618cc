use std::io::Write;
use std::path::Path;

use super::AngleGrid;
use crate::error::{Error, Result};
use crate::raster::UnitMatrix;

/// Azimuth-elevation power map in dB, `el_steps` rows by `az_steps` columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    grid: AngleGrid,
    values_db: Vec<f64>,
    floor_db: f64,
}

impl Heatmap {
    pub(crate) fn from_parts(grid: AngleGrid, values_db: Vec<f64>, floor_db: f64) -> Self {
        debug_assert_eq!(values_db.len(), grid.cells());
        Heatmap {
            grid,
            values_db,
            floor_db,
        }
    }

    /// Builds a heatmap from raw values, clamping them at `floor_db`.
    pub fn new(grid: AngleGrid, values_db: Vec<f64>, floor_db: f64) -> Result<Self> {
        if values_db.len() != grid.cells() {
            return Err(Error::input(format!(
                "heatmap needs {} values, got {}",
                grid.cells(),
                values_db.len()
            )));
        }
        if !floor_db.is_finite() || values_db.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("heatmap values and floor must be finite"));
        }
        let values_db = values_db.into_iter().map(|v| v.max(floor_db)).collect();
        Ok(Self::from_parts(grid, values_db, floor_db))
    }

    pub fn grid(&self) -> &AngleGrid {
        &self.grid
    }

    pub fn values_db(&self) -> &[f64] {
        &self.values_db
    }

    pub fn floor_db(&self) -> f64 {
        self.floor_db
    }

    pub fn width(&self) -> usize {
        self.grid.az_steps()
    }

    pub fn height(&self) -> usize {
        self.grid.el_steps()
    }

    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.values_db[row * self.width() + col]
    }

    pub fn max_db(&self) -> f64 {
        self.values_db.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// (row, col) of the strongest cell; the first one wins ties.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = 0;
        for (i, &v) in self.values_db.iter().enumerate() {
            if v > self.values_db[best] {
                best = i;
            }
        }
        (best / self.width(), best % self.width())
    }

    /// Look direction (azimuth, elevation) of the strongest cell.
    pub fn peak_direction(&self) -> (f64, f64) {
        let (r, c) = self.argmax();
        (self.grid.azimuth_deg(c), self.grid.elevation_deg(r))
    }

    /// Portable float map: `Pf` header, little-endian f32, rows bottom-up.
    pub fn write_pfm<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "Pf\n{} {}\n-1.0\n", self.width(), self.height())?;
        let mut buf = Vec::with_capacity(4 * self.values_db.len());
        for row in self.values_db.chunks_exact(self.width()).rev() {
            for v in row {
                buf.extend_from_slice(&(*v as f32).to_le_bytes());
            }
        }
        w.write_all(&buf)
    }

    pub fn save_pfm(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        self.write_pfm(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }
}

/// Maps the top `dynamic_range_db` below the peak onto `[0, 1]`:
/// `clamp((v - (max - range)) / range, 0, 1)`. A heatmap sitting entirely on
/// its floor carries no signal and normalizes to all zeros.
pub fn normalize(heatmap: &Heatmap, dynamic_range_db: f64) -> Result<UnitMatrix> {
    if !(dynamic_range_db.is_finite() && dynamic_range_db > 0.0) {
        return Err(Error::input(format!(
            "dynamic range must be positive, got {dynamic_range_db}"
        )));
    }
    let max = heatmap.max_db();
    let values = if max <= heatmap.floor_db {
        vec![0.0; heatmap.values_db.len()]
    } else {
        let base = max - dynamic_range_db;
        heatmap
            .values_db
            .iter()
            .map(|v| ((v - base) / dynamic_range_db).clamp(0.0, 1.0))
            .collect()
    };
    UnitMatrix::new(heatmap.width(), heatmap.height(), values)
}
