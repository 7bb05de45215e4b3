//! Fixed-effects design matrix: intervention columns, one indicator per
//! centre, and indicators for stages 2..K. No global intercept.

use nalgebra::{DMatrix, DVector};

use crate::data::{TrialDataset, TrialRecord};
use crate::error::{LagoError, Result};

/// Column layout for given P, J, K.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub p: usize,
    pub j: usize,
    pub k: usize,
}

impl Layout {
    pub fn of(ds: &TrialDataset) -> Self {
        Self {
            p: ds.components(),
            j: ds.centres(),
            k: ds.stages(),
        }
    }

    pub fn ncols(&self) -> usize {
        self.p + self.j + self.k - 1
    }

    pub fn centre_offset(&self) -> usize {
        self.p
    }

    pub fn stage_offset(&self) -> usize {
        self.p + self.j
    }

    /// Human-readable column names in design order.
    pub fn names(&self) -> Vec<String> {
        let mut names: Vec<String> = (1..=self.p).map(|i| format!("a{i}")).collect();
        names.extend((1..=self.j).map(|j| format!("centre{j}")));
        names.extend((2..=self.k).map(|k| format!("stage{k}")));
        names
    }

    /// Writes the regressors of one record into `row`.
    pub fn fill_row(&self, r: &TrialRecord, row: &mut [f64]) {
        row.fill(0.0);
        row[..self.p].copy_from_slice(&r.actual);
        row[self.centre_offset() + r.centre - 1] = 1.0;
        if r.stage >= 2 {
            row[self.stage_offset() + r.stage - 2] = 1.0;
        }
    }
}

/// Builds the design matrix and response vector, one row per record.
pub fn build_design(ds: &TrialDataset) -> Result<(DMatrix<f64>, DVector<f64>)> {
    if ds.is_empty() {
        return Err(LagoError::EmptyDataset);
    }
    check_contiguous(ds)?;
    let layout = Layout::of(ds);
    let n = ds.n();
    let mut x = DMatrix::zeros(n, layout.ncols());
    let mut y = DVector::zeros(n);
    let mut row = vec![0.0; layout.ncols()];
    for (i, r) in ds.records().iter().enumerate() {
        layout.fill_row(r, &mut row);
        for (c, &v) in row.iter().enumerate() {
            x[(i, c)] = v;
        }
        y[i] = r.outcome;
    }
    Ok((x, y))
}

pub(crate) fn check_contiguous(ds: &TrialDataset) -> Result<()> {
    let mut seen = vec![false; ds.centres()];
    for r in ds.records() {
        seen[r.centre - 1] = true;
    }
    match seen.iter().position(|s| !s) {
        Some(i) => Err(LagoError::NonContiguousCentres {
            expected: ds.centres(),
            missing: i + 1,
        }),
        None => Ok(()),
    }
}
