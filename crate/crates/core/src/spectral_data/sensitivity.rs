use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::WavelengthAxis;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SensitivityKind {
    /// Colour matching functions x̄ ȳ z̄.
    CmfXyz,
    /// Camera channel sensitivities (R, G, B).
    CameraRgb,
}

/// Three per-wavelength weight curves aligned with a [`WavelengthAxis`].
#[derive(Clone, Debug, PartialEq)]
pub struct SensitivitySet {
    axis: WavelengthAxis,
    rows: [Vec<f64>; 3],
    kind: SensitivityKind,
}

impl SensitivitySet {
    pub fn new(axis: WavelengthAxis, rows: [Vec<f64>; 3], kind: SensitivityKind) -> Result<Self> {
        for (c, row) in rows.iter().enumerate() {
            if row.len() != axis.count() {
                return Err(Error::AxisMismatch(format!(
                    "channel {c} has {} entries for {} bands",
                    row.len(),
                    axis.count()
                )));
            }
            if let Some(v) = row.iter().find(|v| !v.is_finite()) {
                return Err(Error::InvariantViolation(format!(
                    "channel {c} contains non-finite weight {v}"
                )));
            }
            if kind == SensitivityKind::CmfXyz && row.iter().any(|&v| v < 0.0) {
                return Err(Error::InvariantViolation(format!(
                    "colour matching function {c} has a negative entry"
                )));
            }
        }
        Ok(Self { axis, rows, kind })
    }

    pub fn axis(&self) -> &WavelengthAxis {
        &self.axis
    }

    pub fn kind(&self) -> SensitivityKind {
        self.kind
    }

    pub fn rows(&self) -> &[Vec<f64>; 3] {
        &self.rows
    }

    pub fn row(&self, channel: usize) -> &[f64] {
        &self.rows[channel]
    }

    pub fn ensure_kind(&self, kind: SensitivityKind) -> Result<()> {
        if self.kind != kind {
            return Err(Error::InvariantViolation(format!(
                "expected {kind:?} sensitivities, got {:?}",
                self.kind
            )));
        }
        Ok(())
    }

    /// Keeps the bands at `indices`, mirroring [`super::SpectralImage::subsample_bands`].
    pub fn select(&self, indices: &[usize]) -> SensitivitySet {
        let pick = |row: &Vec<f64>| indices.iter().map(|&i| row[i]).collect::<Vec<_>>();
        SensitivitySet {
            axis: self.axis.select(indices),
            rows: [pick(&self.rows[0]), pick(&self.rows[1]), pick(&self.rows[2])],
            kind: self.kind,
        }
    }
}

/// Reads a `wavelength,<col>...` table. Returns rows keyed by wavelength.
fn parse_table(text: &str, header: &[&str]) -> Result<BTreeMap<u32, Vec<f64>>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, head) = lines
        .next()
        .ok_or_else(|| Error::InvariantViolation("empty table".into()))?;
    let cols: Vec<&str> = head.split(',').map(str::trim).collect();
    if cols != header {
        return Err(Error::InvariantViolation(format!(
            "expected header {:?}, found {:?}",
            header.join(","),
            head.trim()
        )));
    }
    let mut table = BTreeMap::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != header.len() {
            return Err(Error::InvariantViolation(format!(
                "line {line_no}: expected {} cells, found {}",
                header.len(),
                cells.len()
            )));
        }
        let wl: u32 = cells[0].parse().map_err(|_| Error::NonNumericCell {
            line: line_no,
            cell: cells[0].to_string(),
        })?;
        let values = cells[1..]
            .iter()
            .map(|c| {
                c.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::NonNumericCell {
                        line: line_no,
                        cell: c.to_string(),
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        if table.insert(wl, values).is_some() {
            return Err(Error::InvariantViolation(format!(
                "line {line_no}: wavelength {wl} listed twice"
            )));
        }
    }
    Ok(table)
}

fn align(table: &BTreeMap<u32, Vec<f64>>, axis: &WavelengthAxis) -> Result<Vec<Vec<f64>>> {
    axis.wavelengths()
        .into_iter()
        .map(|wl| {
            table
                .get(&wl)
                .cloned()
                .ok_or_else(|| Error::AxisMismatch(format!("no row for wavelength {wl} nm")))
        })
        .collect()
}

/// Parses a `wavelength,c1,c2,c3` table. Rows for wavelengths not on `axis`
/// are ignored; a wavelength on `axis` without a row is an error.
pub fn parse_sensitivities(
    text: &str,
    axis: &WavelengthAxis,
    kind: SensitivityKind,
) -> Result<SensitivitySet> {
    let table = parse_table(text, &["wavelength", "c1", "c2", "c3"])?;
    let aligned = align(&table, axis)?;
    let col = |c: usize| aligned.iter().map(|r| r[c]).collect::<Vec<_>>();
    SensitivitySet::new(axis.clone(), [col(0), col(1), col(2)], kind)
}

pub fn load_sensitivities(
    path: impl AsRef<Path>,
    axis: &WavelengthAxis,
    kind: SensitivityKind,
) -> Result<SensitivitySet> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_sensitivities(&text, axis, kind)
}

/// Parses a single-curve `wavelength,<column>` table (white spectra, WRMS
/// weights) aligned to `axis`.
pub fn parse_spectrum_csv(text: &str, column: &str, axis: &WavelengthAxis) -> Result<Vec<f64>> {
    let table = parse_table(text, &["wavelength", column])?;
    Ok(align(&table, axis)?.into_iter().map(|r| r[0]).collect())
}

pub fn load_spectrum_csv(
    path: impl AsRef<Path>,
    column: &str,
    axis: &WavelengthAxis,
) -> Result<Vec<f64>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_spectrum_csv(&text, column, axis)
}

/// Tristimulus coordinates of the white that L*a*b* is normalised against.
#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceWhite {
    pub xn: f64,
    pub yn: f64,
    pub zn: f64,
    source_spectrum: Option<Vec<f64>>,
}

impl ReferenceWhite {
    pub fn new(xn: f64, yn: f64, zn: f64) -> Result<Self> {
        for (name, v) in [("Xn", xn), ("Yn", yn), ("Zn", zn)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::DegenerateWhite(format!("{name} = {v}")));
            }
        }
        Ok(Self {
            xn,
            yn,
            zn,
            source_spectrum: None,
        })
    }

    /// White measured as a spectrum: its XYZ projection with Y scaled to 100.
    pub fn from_spectrum(cmf: &SensitivitySet, spectrum: &[f64]) -> Result<Self> {
        cmf.ensure_kind(SensitivityKind::CmfXyz)?;
        if spectrum.len() != cmf.axis().count() {
            return Err(Error::AxisMismatch(format!(
                "white spectrum has {} samples for {} bands",
                spectrum.len(),
                cmf.axis().count()
            )));
        }
        if spectrum.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::DegenerateWhite(
                "white spectrum must be finite and nonnegative".into(),
            ));
        }
        let norm = crate::projection::XyzNormalization::from_white(cmf, Some(spectrum))?;
        let raw: Vec<f64> = (0..3)
            .map(|c| cmf.row(c).iter().zip(spectrum).map(|(w, s)| w * s).sum::<f64>())
            .collect();
        let mut white = Self::new(norm.k * raw[0], 100.0, norm.k * raw[2])?;
        white.source_spectrum = Some(spectrum.to_vec());
        Ok(white)
    }

    /// Flat white at the maximal 8-bit level.
    pub fn flat(cmf: &SensitivitySet) -> Result<Self> {
        Self::from_spectrum(cmf, &vec![255.0; cmf.axis().count()])
    }

    pub fn source_spectrum(&self) -> Option<&[f64]> {
        self.source_spectrum.as_deref()
    }

    /// White for a band subset. Spectral whites are re-projected through the
    /// subsetted colour matching functions; fixed XYZ whites are kept.
    pub fn select(&self, cmf_subset: &SensitivitySet, indices: &[usize]) -> Result<Self> {
        match &self.source_spectrum {
            Some(s) => {
                let sub: Vec<f64> = indices.iter().map(|&i| s[i]).collect();
                Self::from_spectrum(cmf_subset, &sub)
            }
            None => Ok(self.clone()),
        }
    }
}
