//! Participant-level trial records and intervention packages.

use serde::{Deserialize, Serialize};

use crate::error::{LagoError, Result};

/// A vector of component intensities together with its box bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterventionPackage {
    pub components: Vec<f64>,
    pub bounds: Vec<(f64, f64)>,
}

impl InterventionPackage {
    pub fn new(components: Vec<f64>, bounds: Vec<(f64, f64)>) -> Result<Self> {
        if components.is_empty() {
            return Err(LagoError::config("components", "at least one component is required"));
        }
        check_bounds(&bounds, components.len())?;
        Ok(Self { components, bounds })
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    /// Projects every component into its interval.
    pub fn clamp(&mut self) {
        for (c, &(lo, hi)) in self.components.iter_mut().zip(&self.bounds) {
            *c = c.clamp(lo, hi);
        }
    }

    pub fn within_bounds(&self, tol: f64) -> bool {
        self.components
            .iter()
            .zip(&self.bounds)
            .all(|(&c, &(lo, hi))| c >= lo - tol && c <= hi + tol)
    }
}

pub(crate) fn check_bounds(bounds: &[(f64, f64)], p: usize) -> Result<()> {
    if bounds.len() != p {
        return Err(LagoError::DimensionMismatch {
            what: "bounds".into(),
            expected: p,
            got: bounds.len(),
        });
    }
    for (i, &(lo, hi)) in bounds.iter().enumerate() {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(LagoError::config(
                "bounds",
                format!("component {} has invalid interval [{lo}, {hi}]", i + 1),
            ));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arm {
    Intervention,
    Control,
}

impl Arm {
    pub fn code(self) -> u8 {
        match self {
            Arm::Intervention => 1,
            Arm::Control => 0,
        }
    }
}

/// One participant. `stage` and `centre` are 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub stage: usize,
    pub centre: usize,
    pub arm: Arm,
    pub actual: Vec<f64>,
    pub outcome: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialDataset {
    records: Vec<TrialRecord>,
    k: usize,
    j: usize,
    p: usize,
}

impl TrialDataset {
    /// Validates the records against the declared dimensions.
    ///
    /// Control rows must carry an all-zero intervention vector.
    pub fn new(records: Vec<TrialRecord>, k: usize, j: usize, p: usize) -> Result<Self> {
        if k == 0 || j == 0 || p == 0 {
            return Err(LagoError::config("dimensions", "K, J and P must all be at least 1"));
        }
        let mut problems = Vec::new();
        for (i, r) in records.iter().enumerate() {
            if r.stage == 0 || r.stage > k {
                problems.push(format!("record {}: stage {} outside 1..={k}", i + 1, r.stage));
            }
            if r.centre == 0 || r.centre > j {
                problems.push(format!("record {}: centre {} outside 1..={j}", i + 1, r.centre));
            }
            if r.actual.len() != p {
                problems.push(format!(
                    "record {}: {} intervention values, expected {p}",
                    i + 1,
                    r.actual.len()
                ));
            }
            if r.arm == Arm::Control && r.actual.iter().any(|&a| a != 0.0) {
                problems.push(format!("record {}: control row with nonzero intervention", i + 1));
            }
            if !r.outcome.is_finite() || r.actual.iter().any(|a| !a.is_finite()) {
                problems.push(format!("record {}: non-finite value", i + 1));
            }
        }
        if !problems.is_empty() {
            return Err(LagoError::Schema(problems));
        }
        Ok(Self { records, k, j, p })
    }

    /// Builds a dataset whose dimensions are the largest stage, centre and
    /// component count present.
    pub fn from_records(records: Vec<TrialRecord>) -> Result<Self> {
        let first = records.first().ok_or(LagoError::EmptyDataset)?;
        let p = first.actual.len();
        let k = records.iter().map(|r| r.stage).max().unwrap_or(0);
        let j = records.iter().map(|r| r.centre).max().unwrap_or(0);
        Self::new(records, k, j, p)
    }

    pub fn records(&self) -> &[TrialRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<TrialRecord> {
        self.records
    }

    pub fn n(&self) -> usize {
        self.records.len()
    }

    pub fn stages(&self) -> usize {
        self.k
    }

    pub fn centres(&self) -> usize {
        self.j
    }

    pub fn components(&self) -> usize {
        self.p
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Record counts as a J×K table, `[centre-1][stage-1]`.
    pub fn n_by_centre_stage(&self) -> Vec<Vec<usize>> {
        let mut counts = vec![vec![0usize; self.k]; self.j];
        for r in &self.records {
            counts[r.centre - 1][r.stage - 1] += 1;
        }
        counts
    }

    /// True when some centre with records contributes to only one stage.
    ///
    /// Such data can still be fitted when control rows identify the centre
    /// effect; a genuinely unidentified design is caught by the rank check.
    pub fn single_stage_per_centre(&self) -> bool {
        self.n_by_centre_stage()
            .iter()
            .any(|row| row.iter().filter(|&&c| c > 0).count() == 1)
    }

    pub fn has_both_arms(&self) -> bool {
        let treated = self.records.iter().any(|r| r.arm == Arm::Intervention);
        let control = self.records.iter().any(|r| r.arm == Arm::Control);
        treated && control
    }

    /// Records from stages `1..=last` only, with the stage count reduced.
    pub fn through_stage(&self, last: usize) -> Result<Self> {
        let last = last.min(self.k);
        let records = self
            .records
            .iter()
            .filter(|r| r.stage <= last)
            .cloned()
            .collect();
        Self::new(records, last, self.j, self.p)
    }

    /// Appends another dataset with the same J and P; K becomes the larger.
    pub fn extend(&mut self, other: TrialDataset) -> Result<()> {
        if other.j != self.j || other.p != self.p {
            return Err(LagoError::DimensionMismatch {
                what: "dataset extension (centres, components)".into(),
                expected: self.j * 1000 + self.p,
                got: other.j * 1000 + other.p,
            });
        }
        self.k = self.k.max(other.k);
        self.records.extend(other.records);
        Ok(())
    }
}
