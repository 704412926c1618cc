use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Look-direction grid. Row 0 is the highest elevation and column 0 the
/// lowest azimuth, so a heatmap over the grid reads like a camera image.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridSpec", into = "GridSpec")]
pub struct AngleGrid {
    az_min_deg: f64,
    az_max_deg: f64,
    az_steps: usize,
    el_min_deg: f64,
    el_max_deg: f64,
    el_steps: usize,
}

#[derive(Serialize, Deserialize)]
struct GridSpec {
    az_min_deg: f64,
    az_max_deg: f64,
    az_steps: usize,
    el_min_deg: f64,
    el_max_deg: f64,
    el_steps: usize,
}

impl TryFrom<GridSpec> for AngleGrid {
    type Error = Error;
    fn try_from(s: GridSpec) -> Result<Self> {
        AngleGrid::new(
            (s.az_min_deg, s.az_max_deg, s.az_steps),
            (s.el_min_deg, s.el_max_deg, s.el_steps),
        )
    }
}

impl From<AngleGrid> for GridSpec {
    fn from(g: AngleGrid) -> Self {
        GridSpec {
            az_min_deg: g.az_min_deg,
            az_max_deg: g.az_max_deg,
            az_steps: g.az_steps,
            el_min_deg: g.el_min_deg,
            el_max_deg: g.el_max_deg,
            el_steps: g.el_steps,
        }
    }
}

impl Default for AngleGrid {
    /// Azimuth +-45 deg, elevation +-30 deg, 1 deg steps (91 x 61).
    fn default() -> Self {
        AngleGrid::new((-45.0, 45.0, 91), (-30.0, 30.0, 61)).expect("default grid is valid")
    }
}

impl AngleGrid {
    pub fn new(az: (f64, f64, usize), el: (f64, f64, usize)) -> Result<Self> {
        for (name, (lo, hi, steps)) in [("azimuth", az), ("elevation", el)] {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::input(format!("{name} bounds need min < max, got [{lo}, {hi}]")));
            }
            if lo <= -90.0 || hi >= 90.0 {
                return Err(Error::input(format!(
                    "{name} bounds [{lo}, {hi}] must lie inside (-90, 90)"
                )));
            }
            if steps < 2 {
                return Err(Error::input(format!("{name} needs at least 2 steps, got {steps}")));
            }
        }
        Ok(AngleGrid {
            az_min_deg: az.0,
            az_max_deg: az.1,
            az_steps: az.2,
            el_min_deg: el.0,
            el_max_deg: el.1,
            el_steps: el.2,
        })
    }

    pub fn az_steps(&self) -> usize {
        self.az_steps
    }

    pub fn el_steps(&self) -> usize {
        self.el_steps
    }

    pub fn cells(&self) -> usize {
        self.az_steps * self.el_steps
    }

    pub fn az_step_deg(&self) -> f64 {
        (self.az_max_deg - self.az_min_deg) / (self.az_steps - 1) as f64
    }

    pub fn el_step_deg(&self) -> f64 {
        (self.el_max_deg - self.el_min_deg) / (self.el_steps - 1) as f64
    }

    pub fn az_range(&self) -> (f64, f64) {
        (self.az_min_deg, self.az_max_deg)
    }

    pub fn el_range(&self) -> (f64, f64) {
        (self.el_min_deg, self.el_max_deg)
    }

    pub fn azimuth_deg(&self, col: usize) -> f64 {
        if col + 1 == self.az_steps {
            self.az_max_deg
        } else {
            self.az_min_deg + col as f64 * self.az_step_deg()
        }
    }

    pub fn elevation_deg(&self, row: usize) -> f64 {
        if row + 1 == self.el_steps {
            self.el_min_deg
        } else {
            self.el_max_deg - row as f64 * self.el_step_deg()
        }
    }

    /// Continuous (column, row) position of a look direction, in cell units.
    pub fn position_of(&self, azimuth_deg: f64, elevation_deg: f64) -> (f64, f64) {
        (
            (azimuth_deg - self.az_min_deg) / self.az_step_deg(),
            (self.el_max_deg - elevation_deg) / self.el_step_deg(),
        )
    }

    /// Nearest (row, col) cell, or `None` outside the grid.
    pub fn nearest_cell(&self, azimuth_deg: f64, elevation_deg: f64) -> Option<(usize, usize)> {
        let (c, r) = self.position_of(azimuth_deg, elevation_deg);
        let (c, r) = (c.round(), r.round());
        if c < 0.0 || r < 0.0 || c >= self.az_steps as f64 || r >= self.el_steps as f64 {
            None
        } else {
            Some((r as usize, c as usize))
        }
    }
}
