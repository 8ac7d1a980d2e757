use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{self, SampleSet};

/// Per-value LMMSE estimator of `X` from `Y` for one symbol of `Z`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalCell {
    pub z: Vec<f64>,
    pub gain: DMatrix<f64>,
    pub offset: DVector<f64>,
    pub count: usize,
}

/// `X̂ = A(Z) Y + b(Z)` for a finite alphabet of `Z`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalLinearEstimator {
    cells: Vec<ConditionalCell>,
}

impl ConditionalLinearEstimator {
    pub fn cells(&self) -> &[ConditionalCell] {
        &self.cells
    }

    pub fn cell(&self, z: &[f64]) -> Option<&ConditionalCell> {
        self.cells.iter().find(|c| c.z == z)
    }

    pub fn estimate(&self, y: &DVector<f64>, z: &[f64]) -> Result<DVector<f64>> {
        let cell = self
            .cell(z)
            .ok_or_else(|| Error::invalid(format!("z = {z:?} is not in the alphabet")))?;
        Ok(&cell.gain * y + &cell.offset)
    }
}

/// Conditional partially linear estimator for finite-alphabet `Z`: the LMMSE
/// estimator of `X` from `Y` fitted separately within each alphabet cell,
/// `Γ_{XY|z} Γ_{YY|z}^† (Y − E[Y|z]) + E[X|z]`.
pub fn conditional_plmmse_discrete(
    x: &SampleSet,
    y: &SampleSet,
    z: &SampleSet,
    z_alphabet: &[Vec<f64>],
) -> Result<ConditionalLinearEstimator> {
    if x.count() != y.count() || x.count() != z.count() {
        return Err(Error::invalid("x, y and z must have equal sample counts"));
    }
    if z_alphabet.is_empty() {
        return Err(Error::invalid("alphabet must not be empty"));
    }
    if z_alphabet.iter().any(|a| a.len() != z.dim()) {
        return Err(Error::invalid("alphabet symbols must match dim(Z)"));
    }
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); z_alphabet.len()];
    for (i, zr) in z.rows().enumerate() {
        let cell = z_alphabet
            .iter()
            .position(|a| a.as_slice() == zr)
            .ok_or_else(|| Error::invalid(format!("sample {i} has z = {zr:?} outside the alphabet")))?;
        members[cell].push(i);
    }
    let mut cells = Vec::with_capacity(z_alphabet.len());
    for (symbol, idx) in z_alphabet.iter().zip(&members) {
        if idx.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "alphabet cell z = {symbol:?} has {} sample(s); at least 2 are required",
                idx.len()
            )));
        }
        let xs = subset(x, idx)?;
        let ys = subset(y, idx)?;
        let m = linalg::empirical_moments(&xs, &ys)?;
        let gain = &m.cov_xy * linalg::pseudo_inverse(&m.cov_yy, 0.0)?;
        let offset = &m.mean_x - &gain * &m.mean_y;
        cells.push(ConditionalCell {
            z: symbol.clone(),
            gain,
            offset,
            count: idx.len(),
        });
    }
    Ok(ConditionalLinearEstimator { cells })
}

fn subset(s: &SampleSet, idx: &[usize]) -> Result<SampleSet> {
    let mut values = Vec::with_capacity(idx.len() * s.dim());
    for &i in idx {
        values.extend_from_slice(s.row(i));
    }
    SampleSet::new(s.dim(), values)
}
