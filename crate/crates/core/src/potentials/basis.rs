//! Per-segment unit-voltage potential shapes.

use std::io::Read;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use super::spline::CubicSpline;
use super::{PotentialError, TrapGeometry};

/// Shape functions `φ_i(z)`: the electrostatic potential (in volts per volt)
/// seen on axis when segment `i` is at 1 V and all others are grounded.
#[derive(Debug, Clone, PartialEq)]
pub enum SegmentBasis {
    /// Smoothed box centred on each segment; see [`analytic_shape`].
    Analytic,
    /// Externally computed shapes ingested from a table.
    Tabulated(Arc<BasisTable>),
}

impl SegmentBasis {
    pub fn segment_count(&self) -> Option<usize> {
        match self {
            SegmentBasis::Analytic => None,
            SegmentBasis::Tabulated(t) => Some(t.segment_count()),
        }
    }
}

/// `φ(z) = ½[tanh((u + k/2)/w) − tanh((u − k/2)/w)]` with `u = z − z_i`,
/// `k` the segment length and `w = (s + g)/4`. Returns the value or its first
/// or second derivative with respect to `z`.
pub fn analytic_shape(geometry: &TrapGeometry, segment: usize, z: f64, order: u8) -> f64 {
    let w = geometry.smoothing_width();
    let half = 0.5 * geometry.segment_length;
    let u = z - geometry.segment_center(segment);
    let step = |x: f64| -> f64 {
        let t = x.tanh();
        let sech2 = 1.0 - t * t;
        match order {
            0 => t,
            1 => sech2 / w,
            _ => -2.0 * t * sech2 / (w * w),
        }
    };
    0.5 * (step((u + half) / w) - step((u - half) / w))
}

/// Tabulated unit-voltage potentials on a common, strictly increasing grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisTable {
    z: Vec<f64>,
    columns: Vec<CubicSpline>,
    source: Option<PathBuf>,
}

impl BasisTable {
    /// Builds a table from a grid and one column per segment.
    pub fn from_columns(z: Vec<f64>, columns: Vec<Vec<f64>>) -> Result<Self, PotentialError> {
        if z.len() < 2 {
            return Err(PotentialError::Format("basis grid needs at least two rows".into()));
        }
        if columns.is_empty() {
            return Err(PotentialError::Format("basis table has no segment columns".into()));
        }
        if z.iter().any(|v| !v.is_finite()) || z.windows(2).any(|w| w[1] <= w[0]) {
            return Err(PotentialError::Format(
                "z grid must be finite and strictly increasing".into(),
            ));
        }
        for (i, c) in columns.iter().enumerate() {
            if c.len() != z.len() {
                return Err(PotentialError::Format(format!(
                    "segment column {} has {} rows, grid has {}",
                    i + 1,
                    c.len(),
                    z.len()
                )));
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(PotentialError::Format(format!(
                    "segment column {} contains a non-finite value",
                    i + 1
                )));
            }
        }
        let splines = columns
            .into_iter()
            .map(|c| CubicSpline::new(z.clone(), c))
            .collect();
        Ok(Self { z, columns: splines, source: None })
    }

    /// Parses a CSV table: header `z_m,seg_1_V,…,seg_K_V`, one row per grid
    /// point.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self, PotentialError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| PotentialError::Format(format!("basis header: {e}")))?
            .clone();
        if headers.get(0) != Some("z_m") {
            return Err(PotentialError::Format("first basis column must be `z_m`".into()));
        }
        let mut order = Vec::with_capacity(headers.len().saturating_sub(1));
        for (col, name) in headers.iter().enumerate().skip(1) {
            let index = name
                .strip_prefix("seg_")
                .and_then(|s| s.strip_suffix("_V"))
                .and_then(|s| s.parse::<usize>().ok())
                .ok_or_else(|| {
                    PotentialError::Format(format!("unexpected basis column `{name}`"))
                })?;
            order.push((index, col));
        }
        order.sort();
        for (expected, (index, _)) in order.iter().enumerate() {
            if *index != expected + 1 {
                return Err(PotentialError::Format(
                    "segment columns must be numbered seg_1_V … seg_K_V without gaps".into(),
                ));
            }
        }
        let mut z = Vec::new();
        let mut columns = vec![Vec::new(); order.len()];
        for (row, record) in rdr.records().enumerate() {
            let record = record.map_err(|e| PotentialError::Format(format!("basis row: {e}")))?;
            let parse = |col: usize| -> Result<f64, PotentialError> {
                let raw = record.get(col).unwrap_or("");
                raw.parse::<f64>().map_err(|_| {
                    PotentialError::Format(format!(
                        "row {}, column {}: `{raw}` is not a number",
                        row + 2,
                        col + 1
                    ))
                })
            };
            z.push(parse(0)?);
            for (slot, (_, col)) in columns.iter_mut().zip(&order) {
                slot.push(parse(*col)?);
            }
        }
        Self::from_columns(z, columns)
    }

    pub fn segment_count(&self) -> usize {
        self.columns.len()
    }

    pub fn grid(&self) -> &[f64] {
        &self.z
    }

    pub fn range(&self) -> (f64, f64) {
        (self.z[0], self.z[self.z.len() - 1])
    }

    pub fn source(&self) -> Option<&Path> {
        self.source.as_deref()
    }

    /// Shape of `segment` (0-based) at `z`; errors outside the grid.
    pub fn shape(&self, segment: usize, z: f64, order: u8) -> Result<f64, PotentialError> {
        let (lo, hi) = self.range();
        if !(lo..=hi).contains(&z) {
            return Err(PotentialError::OutOfRange { z, min: lo, max: hi });
        }
        Ok(self.columns[segment].eval(z, order))
    }
}

/// Reads a basis table from a CSV file.
pub fn load_basis_functions(path: &Path) -> Result<BasisTable, PotentialError> {
    let file = std::fs::File::open(path)
        .map_err(|e| PotentialError::Format(format!("{}: {e}", path.display())))?;
    let mut table = BasisTable::from_csv_reader(file)?;
    table.source = Some(path.to_path_buf());
    Ok(table)
}
