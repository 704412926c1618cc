use std::path::Path;

use crate::error::{Error, Result};
use crate::raster::UnitMatrix;
use crate::sensor_model::ThermalFrame;

/// `clamp((v - t_lo) / (t_hi - t_lo), 0, 1)` per pixel.
pub fn normalize_thermal(frame: &ThermalFrame, t_lo: f64, t_hi: f64) -> Result<UnitMatrix> {
    if !(t_lo.is_finite() && t_hi.is_finite() && t_lo < t_hi) {
        return Err(Error::input(format!(
            "thermal bounds need t_lo < t_hi, got [{t_lo}, {t_hi}]"
        )));
    }
    let span = t_hi - t_lo;
    let values = frame
        .values()
        .iter()
        .map(|v| ((v - t_lo) / span).clamp(0.0, 1.0))
        .collect();
    UnitMatrix::new(frame.width(), frame.height(), values)
}

/// Normalizes with the frame's own min/max. Not temporally stable across a
/// video; configure fixed bounds for that. A constant frame maps to zeros.
pub fn normalize_thermal_auto(frame: &ThermalFrame) -> UnitMatrix {
    let (lo, hi) = frame.range();
    if lo < hi {
        normalize_thermal(frame, lo, hi).expect("finite bounds with lo < hi")
    } else {
        UnitMatrix::new(frame.width(), frame.height(), vec![0.0; frame.values().len()])
            .expect("zeros are in range")
    }
}

/// Loads a thermal frame from CSV (one image row per line) or 16-bit PGM.
pub fn load_thermal(path: &Path) -> Result<ThermalFrame> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => load_csv(path),
        Some("pgm") => load_pgm(path),
        _ => Err(Error::Format(format!(
            "{}: thermal frames must be .csv or .pgm",
            path.display()
        ))),
    }
}

fn load_csv(path: &Path) -> Result<ThermalFrame> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    let mut values = Vec::new();
    let mut width = None;
    let mut height = 0;
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
        if *width.get_or_insert(record.len()) != record.len() {
            return Err(Error::Format(format!(
                "{}: row {} has {} values, expected {}",
                path.display(),
                line + 1,
                record.len(),
                width.unwrap()
            )));
        }
        for field in &record {
            values.push(field.parse::<f64>().map_err(|e| {
                Error::Format(format!("{}: row {}: {e}", path.display(), line + 1))
            })?);
        }
        height += 1;
    }
    ThermalFrame::new(width.unwrap_or(0), height, values, 0)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

fn load_pgm(path: &Path) -> Result<ThermalFrame> {
    let img = image::open(path)?;
    let gray = img.to_luma16();
    let (w, h) = gray.dimensions();
    let values = gray.into_raw().into_iter().map(f64::from).collect();
    ThermalFrame::new(w as usize, h as usize, values, 0)
}

pub fn save_thermal_csv(frame: &ThermalFrame, path: &Path) -> Result<()> {
    let mut writer = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    for row in frame.values().chunks(frame.width()) {
        writer
            .write_record(row.iter().map(|v| v.to_string()))
            .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}
