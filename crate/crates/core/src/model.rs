//! Least-squares fit of the fixed-centre-effects model
//! `y = a·β_A + γ_centre + η_stage + ε` and mean-outcome prediction.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::data::TrialDataset;
use crate::design::{build_design, Layout};
use crate::error::{LagoError, Result};
use crate::inference::{sandwich_from_design, VarianceKind};

/// Largest accepted condition number of XᵀX.
pub const MAX_CONDITION: f64 = 1e10;
/// Relative residual allowed in the normal equations.
pub const SOLVE_TOL: f64 = 1e-10;

/// Which linear functional of the coefficients a mean-outcome statement refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimand {
    /// Weighted mean outcome: `xᵀβ_A + Σ w_j γ_j` plus the stage term when requested.
    #[default]
    MeanOutcome,
    /// Intervention effect alone: `xᵀβ_A`.
    TreatmentEffect,
}

#[derive(Debug, Clone)]
pub struct ModelFit {
    pub layout: Layout,
    pub beta_a: DVector<f64>,
    pub gamma: DVector<f64>,
    pub eta: DVector<f64>,
    /// Full coefficient vector in design order.
    pub coefficients: DVector<f64>,
    /// Robust covariance of `coefficients`.
    pub covariance: DMatrix<f64>,
    pub residuals: DVector<f64>,
    pub condition_number: f64,
    pub n_by_centre_stage: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct FitOptions {
    pub variance: VarianceKind,
}

/// Fits with the default per-observation (HC0) sandwich covariance.
pub fn fit(ds: &TrialDataset) -> Result<ModelFit> {
    fit_with(ds, FitOptions::default())
}

pub fn fit_with(ds: &TrialDataset, opts: FitOptions) -> Result<ModelFit> {
    let (x, y) = build_design(ds)?;
    let layout = Layout::of(ds);
    let xtx = x.tr_mul(&x);
    let xty = x.tr_mul(&y);

    let condition_number = check_rank(&xtx, &layout)?;
    let chol = xtx
        .clone()
        .cholesky()
        .ok_or_else(|| rank_error(&xtx, &layout, condition_number))?;
    let mut coef = chol.solve(&xty);
    let scale = xty.norm().max(f64::MIN_POSITIVE);
    let mut resid_ne = &xtx * &coef - &xty;
    if resid_ne.norm() / scale > SOLVE_TOL {
        // one step of iterative refinement
        coef -= chol.solve(&resid_ne);
        resid_ne = &xtx * &coef - &xty;
        if resid_ne.norm() / scale > SOLVE_TOL {
            return Err(LagoError::Numerical(format!(
                "normal equations solved to relative residual {:.3e}",
                resid_ne.norm() / scale
            )));
        }
    }

    let residuals = &y - &x * &coef;
    let xtx_inv = chol.inverse();
    let centre_of_row: Vec<usize> = ds.records().iter().map(|r| r.centre - 1).collect();
    let cov = sandwich_from_design(&x, &residuals, &xtx_inv, opts.variance, &centre_of_row, layout.j).cov_beta;

    Ok(ModelFit::from_parts(layout, coef, cov, residuals, condition_number, ds.n_by_centre_stage()))
}

fn check_rank(xtx: &DMatrix<f64>, layout: &Layout) -> Result<f64> {
    let eig = SymmetricEigen::new(xtx.clone());
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    let cond = if min > 0.0 { max / min } else { f64::INFINITY };
    if max <= 0.0 || !(cond <= MAX_CONDITION) {
        return Err(collinear_columns(&eig, layout, cond));
    }
    Ok(cond)
}

fn rank_error(xtx: &DMatrix<f64>, layout: &Layout, cond: f64) -> LagoError {
    collinear_columns(&SymmetricEigen::new(xtx.clone()), layout, cond)
}

// Columns with a visible loading on any near-null eigenvector.
fn collinear_columns(eig: &SymmetricEigen<f64, nalgebra::Dyn>, layout: &Layout, cond: f64) -> LagoError {
    let names = layout.names();
    let max = eig.eigenvalues.max().max(f64::MIN_POSITIVE);
    let mut flagged = vec![false; names.len()];
    for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda <= max / MAX_CONDITION {
            for (c, v) in eig.eigenvectors.column(i).iter().enumerate() {
                if v.abs() > 0.1 {
                    flagged[c] = true;
                }
            }
        }
    }
    LagoError::RankDeficient {
        condition_number: cond,
        columns: names
            .into_iter()
            .zip(flagged)
            .filter_map(|(n, f)| f.then_some(n))
            .collect(),
    }
}

impl ModelFit {
    /// Assembles a fit from a coefficient vector and covariance, e.g. when
    /// reloading a saved report.
    pub fn from_parts(
        layout: Layout,
        coefficients: DVector<f64>,
        covariance: DMatrix<f64>,
        residuals: DVector<f64>,
        condition_number: f64,
        n_by_centre_stage: Vec<Vec<usize>>,
    ) -> Self {
        let beta_a = coefficients.rows(0, layout.p).into_owned();
        let gamma = coefficients.rows(layout.centre_offset(), layout.j).into_owned();
        let eta = coefficients.rows(layout.stage_offset(), layout.k - 1).into_owned();
        Self {
            layout,
            beta_a,
            gamma,
            eta,
            coefficients,
            covariance,
            residuals,
            condition_number,
            n_by_centre_stage,
        }
    }

    pub fn n(&self) -> usize {
        self.n_by_centre_stage.iter().flatten().sum()
    }

    /// Robust standard errors in design order.
    pub fn standard_errors(&self) -> DVector<f64> {
        self.covariance.diagonal().map(|v| v.max(0.0).sqrt())
    }

    /// `w_j = n_j / n` from the observed centre totals.
    pub fn sample_size_weights(&self) -> Vec<f64> {
        let n = self.n() as f64;
        self.n_by_centre_stage
            .iter()
            .map(|row| row.iter().sum::<usize>() as f64 / n)
            .collect()
    }

    /// Contrast vector `c` with `cᵀβ` the requested linear functional.
    ///
    /// For the mean outcome the stage entries place weight one on the final
    /// stage's indicator when `include_eta` is set.
    pub fn contrast(&self, x: &[f64], weights: &[f64], include_eta: bool, estimand: Estimand) -> Result<DVector<f64>> {
        contrast(&self.layout, x, weights, include_eta, estimand)
    }
}

pub fn contrast(
    layout: &Layout,
    x: &[f64],
    weights: &[f64],
    include_eta: bool,
    estimand: Estimand,
) -> Result<DVector<f64>> {
    if x.len() != layout.p {
        return Err(LagoError::DimensionMismatch {
            what: "intervention package".into(),
            expected: layout.p,
            got: x.len(),
        });
    }
    let mut c = DVector::zeros(layout.ncols());
    c.rows_mut(0, layout.p).copy_from_slice(x);
    if estimand == Estimand::MeanOutcome {
        if weights.len() != layout.j {
            return Err(LagoError::WeightDimensionMismatch {
                expected: layout.j,
                got: weights.len(),
            });
        }
        c.rows_mut(layout.centre_offset(), layout.j).copy_from_slice(weights);
        if include_eta && layout.k > 1 {
            c[layout.ncols() - 1] = 1.0;
        }
    }
    Ok(c)
}

/// Weighted mean outcome `β̂_Aᵀx + Σ w_j γ̂_j`, plus the final-stage η̂ when
/// `include_eta` is set.
pub fn predict_mean(fit: &ModelFit, x: &[f64], weights: &[f64], include_eta: bool) -> Result<f64> {
    let c = fit.contrast(x, weights, include_eta, Estimand::MeanOutcome)?;
    Ok(c.dot(&fit.coefficients))
}

pub fn equal_weights(j: usize) -> Vec<f64> {
    vec![1.0 / j as f64; j]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Arm, TrialRecord};

    // Deterministic noiseless data from known coefficients.
    pub(crate) fn noiseless(beta: &[f64], gamma: &[f64], eta: f64) -> TrialDataset {
        let mut recs = Vec::new();
        for (j, &g) in gamma.iter().enumerate() {
            for k in 1..=2 {
                for i in 0..6 {
                    let treated = i % 2 == 0;
                    let a: Vec<f64> = if treated {
                        (0..beta.len())
                            .map(|p| 1.0 + 0.37 * ((i + 3 * j + 5 * k + 7 * p) % 5) as f64)
                            .collect()
                    } else {
                        vec![0.0; beta.len()]
                    };
                    let y = a.iter().zip(beta).map(|(a, b)| a * b).sum::<f64>()
                        + g
                        + if k == 2 { eta } else { 0.0 };
                    recs.push(TrialRecord {
                        stage: k,
                        centre: j + 1,
                        arm: if treated { Arm::Intervention } else { Arm::Control },
                        actual: a,
                        outcome: y,
                    });
                }
            }
        }
        TrialDataset::new(recs, 2, gamma.len(), beta.len()).unwrap()
    }

    #[test]
    fn recovers_noiseless_coefficients() {
        let ds = noiseless(&[-1.70, -0.70], &[1.0, 2.0, 3.0], 0.5);
        let f = fit(&ds).unwrap();
        let expect = [-1.70, -0.70, 1.0, 2.0, 3.0, 0.5];
        for (got, want) in f.coefficients.iter().zip(expect) {
            assert!((got - want).abs() < 1e-8, "{got} vs {want}");
        }
        assert!(f.covariance.iter().all(|v| v.abs() < 1e-20));
    }

    #[test]
    fn zero_intervention_is_rank_deficient() {
        let recs: Vec<TrialRecord> = (0..8)
            .map(|i| TrialRecord {
                stage: 1 + i % 2,
                centre: 1 + (i / 2) % 2,
                arm: Arm::Control,
                actual: vec![0.0, 0.0],
                outcome: 7.0,
            })
            .collect();
        let ds = TrialDataset::new(recs, 2, 2, 2).unwrap();
        match fit(&ds) {
            Err(LagoError::RankDeficient { columns, .. }) => {
                assert!(columns.contains(&"a1".to_string()));
                assert!(columns.contains(&"a2".to_string()));
            }
            other => panic!("expected rank deficiency, got {other:?}"),
        }
    }

    #[test]
    fn centre_residuals_sum_to_zero() {
        let mut ds = noiseless(&[-1.0, 0.5], &[0.0, 1.0], 0.2);
        let mut recs = ds.clone().into_records();
        for (i, r) in recs.iter_mut().enumerate() {
            r.outcome += ((i * 7919) % 13) as f64 / 13.0 - 0.5;
        }
        ds = TrialDataset::new(recs, 2, 2, 2).unwrap();
        let f = fit(&ds).unwrap();
        for j in 1..=2 {
            let s: f64 = ds
                .records()
                .iter()
                .zip(f.residuals.iter())
                .filter(|(r, _)| r.centre == j)
                .map(|(_, e)| e)
                .sum();
            assert!(s.abs() < 1e-10);
        }
    }

    #[test]
    fn predict_mean_examples() {
        let layout = Layout { p: 2, j: 3, k: 2 };
        let coef = DVector::from_vec(vec![-1.70, -0.70, 0.0, 0.0, 0.0, 0.3]);
        let f = ModelFit::from_parts(layout, coef, DMatrix::zeros(6, 6), DVector::zeros(0), 1.0, vec![vec![1, 1]; 3]);
        let w = equal_weights(3);
        assert!((predict_mean(&f, &[2.94, 0.0], &w, false).unwrap() - (-4.998)).abs() < 1e-12);
        assert!((predict_mean(&f, &[2.94, 0.0], &w, true).unwrap() - (-4.698)).abs() < 1e-12);

        let coef = DVector::from_vec(vec![-1.70, -0.70, 0.4, 1.1, -2.0, 0.0]);
        let f = ModelFit::from_parts(layout, coef, DMatrix::zeros(6, 6), DVector::zeros(0), 1.0, vec![vec![1, 1]; 3]);
        let w = [0.2, 0.5, 0.3];
        let at_zero = predict_mean(&f, &[0.0, 0.0], &w, false).unwrap();
        assert_eq!(at_zero, 0.2 * 0.4 + 0.5 * 1.1 + 0.3 * -2.0);
        assert!(matches!(
            predict_mean(&f, &[0.0, 0.0], &[1.0], false),
            Err(LagoError::WeightDimensionMismatch { expected: 3, got: 1 })
        ));
    }

    #[test]
    fn equal_gamma_weight_identity() {
        let layout = Layout { p: 2, j: 3, k: 2 };
        let coef = DVector::from_vec(vec![0.3, -0.2, 1.5, 1.5, 1.5, 0.0]);
        let f = ModelFit::from_parts(layout, coef, DMatrix::zeros(6, 6), DVector::zeros(0), 1.0, vec![vec![1, 1]; 3]);
        let v = predict_mean(&f, &[1.0, 2.0], &[0.1, 0.6, 0.3], false).unwrap();
        assert!((v - (0.3 - 0.4 + 1.5)).abs() < 1e-12);
    }

    #[test]
    fn record_order_does_not_change_fit() {
        let ds = noiseless(&[-1.0, 0.5], &[0.0, 1.0, 2.0], 0.2);
        let mut recs = ds.clone().into_records();
        for (i, r) in recs.iter_mut().enumerate() {
            r.outcome += ((i * 31) % 11) as f64 / 11.0 - 0.5;
        }
        let a = fit(&TrialDataset::new(recs.clone(), 2, 3, 2).unwrap()).unwrap();
        recs.reverse();
        let b = fit(&TrialDataset::new(recs, 2, 3, 2).unwrap()).unwrap();
        for (x, y) in a.coefficients.iter().zip(b.coefficients.iter()) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}
