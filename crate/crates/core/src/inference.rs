//! Sandwich covariance, Wald tests, and confidence intervals, sets and
//! bands for the weighted mean outcome.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Arm, TrialDataset, TrialRecord};
use crate::design::build_design;
use crate::error::{LagoError, Result};
use crate::model::{self, Estimand, ModelFit};
use crate::optimizer::OptimizationProblem;
use crate::stats;

pub const DEFAULT_LEVEL: f64 = 0.95;
pub const DEFAULT_GRID_RESOLUTION: f64 = 0.05;

/// How the middle ("meat") matrix of the sandwich is estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceKind {
    /// Per-observation squared residuals.
    #[default]
    Hc0,
    /// Squared residuals replaced by their centre mean.
    CentrePooled,
}

#[derive(Debug, Clone)]
pub struct SandwichCovariance {
    /// `(1/n) XᵀX`
    pub j_star_hat: DMatrix<f64>,
    /// `(1/n) Σ x xᵀ ε̂²`
    pub v_hat: DMatrix<f64>,
    /// `n⁻¹ Ĵ⁻¹ V̂ Ĵ⁻ᵀ`
    pub cov_beta: DMatrix<f64>,
}

/// HC0 sandwich for a fit produced from `ds`.
pub fn sandwich(fit: &ModelFit, ds: &TrialDataset) -> Result<SandwichCovariance> {
    sandwich_with(fit, ds, VarianceKind::Hc0)
}

pub fn sandwich_with(fit: &ModelFit, ds: &TrialDataset, kind: VarianceKind) -> Result<SandwichCovariance> {
    let (x, y) = build_design(ds)?;
    if x.ncols() != fit.coefficients.len() {
        return Err(LagoError::DimensionMismatch {
            what: "fit coefficients vs design columns".into(),
            expected: x.ncols(),
            got: fit.coefficients.len(),
        });
    }
    let residuals = &y - &x * &fit.coefficients;
    let xtx_inv = x.tr_mul(&x).cholesky().ok_or(LagoError::SingularJ)?.inverse();
    let centre_of_row: Vec<usize> = ds.records().iter().map(|r| r.centre - 1).collect();
    Ok(sandwich_from_design(&x, &residuals, &xtx_inv, kind, &centre_of_row, ds.centres()))
}

pub(crate) fn sandwich_from_design(
    x: &DMatrix<f64>,
    residuals: &DVector<f64>,
    xtx_inv: &DMatrix<f64>,
    kind: VarianceKind,
    centre_of_row: &[usize],
    centres: usize,
) -> SandwichCovariance {
    let n = x.nrows() as f64;
    let sq: Vec<f64> = match kind {
        VarianceKind::Hc0 => residuals.iter().map(|e| e * e).collect(),
        VarianceKind::CentrePooled => {
            let mut sum = vec![0.0; centres];
            let mut cnt = vec![0usize; centres];
            for (&c, e) in centre_of_row.iter().zip(residuals.iter()) {
                sum[c] += e * e;
                cnt[c] += 1;
            }
            centre_of_row.iter().map(|&c| sum[c] / cnt[c] as f64).collect()
        }
    };
    let mut scaled = x.clone();
    for (i, mut row) in scaled.row_iter_mut().enumerate() {
        row *= sq[i].sqrt();
    }
    let meat = scaled.tr_mul(&scaled);
    let mut cov = xtx_inv * &meat * xtx_inv;
    symmetrize(&mut cov);
    SandwichCovariance {
        j_star_hat: x.tr_mul(x) / n,
        v_hat: meat / n,
        cov_beta: cov,
    }
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let t = m.transpose();
    *m += t;
    *m *= 0.5;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    WaldIndividual,
    WaldJoint,
    DeltaRandomized,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    pub kind: TestKind,
}

impl TestResult {
    pub fn rejects(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }
}

/// Two-sided z test of `β_p = 0`; `component` is 1-based.
pub fn wald_individual(fit: &ModelFit, cov: &DMatrix<f64>, component: usize) -> Result<TestResult> {
    let p = fit.layout.p;
    if component == 0 || component > p {
        return Err(LagoError::IndexOutOfRange { index: component, max: p });
    }
    let i = component - 1;
    let z = z_ratio(fit.coefficients[i], cov[(i, i)]);
    Ok(TestResult {
        statistic: z,
        df: 1,
        p_value: (2.0 * stats::normal_sf(z.abs())).min(1.0),
        kind: TestKind::WaldIndividual,
    })
}

fn z_ratio(estimate: f64, variance: f64) -> f64 {
    if estimate == 0.0 {
        0.0
    } else if variance <= 0.0 {
        estimate.signum() * f64::INFINITY
    } else {
        estimate / variance.sqrt()
    }
}

/// Joint χ² test of `β_A = 0` with P degrees of freedom.
pub fn wald_joint(fit: &ModelFit, cov: &DMatrix<f64>) -> Result<TestResult> {
    let p = fit.layout.p;
    let b = fit.coefficients.rows(0, p).into_owned();
    let stat = if b.iter().all(|&v| v == 0.0) {
        0.0
    } else {
        let block = cov.view((0, 0), (p, p)).into_owned();
        let chol = block.cholesky().ok_or(LagoError::SingularBlock)?;
        b.dot(&chol.solve(&b))
    };
    Ok(TestResult {
        statistic: stat,
        df: p,
        p_value: stats::chi2_sf(stat, p as f64).clamp(0.0, 1.0),
        kind: TestKind::WaldJoint,
    })
}

/// Test of `δ = 0` in `y = δ·R + γ_centre + η_stage + ε`, where `R` is the
/// randomized arm indicator.
pub fn delta_test(ds: &TrialDataset) -> Result<TestResult> {
    if !ds.has_both_arms() {
        return Err(LagoError::SingleArm);
    }
    let recs: Vec<TrialRecord> = ds
        .records()
        .iter()
        .map(|r| TrialRecord {
            stage: r.stage,
            centre: r.centre,
            arm: r.arm,
            actual: vec![if r.arm == Arm::Intervention { 1.0 } else { 0.0 }],
            outcome: r.outcome,
        })
        .collect();
    let arm_ds = TrialDataset::new(recs, ds.stages(), ds.centres(), 1)?;
    let f = model::fit(&arm_ds)?;
    let mut t = wald_individual(&f, &f.covariance, 1)?;
    t.kind = TestKind::DeltaRandomized;
    Ok(t)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
}

impl Interval {
    pub fn contains(&self, v: f64) -> bool {
        self.lower <= v && v <= self.upper
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.upper - self.lower)
    }
}

/// Interval for the weighted mean outcome at `x`, with weight one on the
/// final stage indicator.
pub fn ci_mean(fit: &ModelFit, cov: &DMatrix<f64>, x: &[f64], weights: &[f64], level: f64) -> Result<Interval> {
    let c = fit.contrast(x, weights, true, Estimand::MeanOutcome)?;
    Ok(ci_contrast(&fit.coefficients, cov, &c, level))
}

pub fn ci_contrast(coef: &DVector<f64>, cov: &DMatrix<f64>, c: &DVector<f64>, level: f64) -> Interval {
    let est = c.dot(coef);
    let var = (c.transpose() * cov * c)[(0, 0)].max(0.0);
    let h = stats::normal_quantile(0.5 + 0.5 * level) * var.sqrt();
    Interval {
        estimate: est,
        lower: est - h,
        upper: est + h,
        level,
    }
}

/// The family `x ↦ cᵀβ̂` with `c = (x, u)` for a fixed tail `u`, reduced to
/// P-dimensional quadratics so grids are cheap to sweep.
#[derive(Debug, Clone)]
pub struct ContrastFamily {
    beta_a: DVector<f64>,
    offset: f64,
    sigma_aa: DMatrix<f64>,
    cross: DVector<f64>,
    tail_var: f64,
}

impl ContrastFamily {
    pub fn new(fit: &ModelFit, cov: &DMatrix<f64>, weights: &[f64], estimand: Estimand) -> Result<Self> {
        let layout = fit.layout;
        let p = layout.p;
        let mut c = model::contrast(&layout, &vec![0.0; p], weights, true, estimand)?;
        c.rows_mut(0, p).fill(0.0);
        let sigma_c = cov * &c;
        Ok(Self {
            beta_a: fit.coefficients.rows(0, p).into_owned(),
            offset: c.dot(&fit.coefficients),
            sigma_aa: cov.view((0, 0), (p, p)).into_owned(),
            cross: sigma_c.rows(0, p).into_owned(),
            tail_var: c.dot(&sigma_c),
        })
    }

    pub fn estimate(&self, x: &[f64]) -> f64 {
        self.offset + x.iter().zip(self.beta_a.iter()).map(|(a, b)| a * b).sum::<f64>()
    }

    pub fn variance(&self, x: &[f64]) -> f64 {
        let xv = DVector::from_column_slice(x);
        let v = (xv.transpose() * &self.sigma_aa * &xv)[(0, 0)] + 2.0 * xv.dot(&self.cross) + self.tail_var;
        v.max(0.0)
    }
}

/// Regular grid over a box, first component varying slowest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub axes: Vec<Vec<f64>>,
}

impl Grid {
    pub fn over_box(bounds: &[(f64, f64)], resolution: f64) -> Result<Self> {
        if !(resolution > 0.0) {
            return Err(LagoError::config("grid_resolution", "must be positive"));
        }
        let axes = bounds
            .iter()
            .map(|&(lo, hi)| {
                let steps = ((hi - lo) / resolution + 1e-9).floor() as usize;
                (0..=steps).map(|i| lo + i as f64 * resolution).collect()
            })
            .collect();
        Ok(Self { axes })
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(Vec::len).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, mut index: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.axes.len()];
        for (d, axis) in self.axes.iter().enumerate().rev() {
            x[d] = axis[index % axis.len()];
            index /= axis.len();
        }
        x
    }

    pub fn points(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.len()).map(move |i| self.point(i))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConfidenceSet {
    pub grid: Grid,
    pub mask: Vec<bool>,
    pub level: f64,
    /// Percentage of grid points in the set.
    pub set_perc: f64,
}

/// Packages whose interval for the problem's estimand contains the goal.
pub fn confidence_set(
    fit: &ModelFit,
    cov: &DMatrix<f64>,
    problem: &OptimizationProblem,
    grid_resolution: f64,
    level: f64,
) -> Result<ConfidenceSet> {
    let grid = Grid::over_box(&problem.bounds, grid_resolution)?;
    let family = ContrastFamily::new(fit, cov, &problem.weights, problem.estimand)?;
    let z = stats::normal_quantile(0.5 + 0.5 * level);
    let mask: Vec<bool> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let x = grid.point(i);
            (family.estimate(&x) - problem.goal).abs() <= z * family.variance(&x).sqrt()
        })
        .collect();
    let inside = mask.iter().filter(|&&m| m).count();
    Ok(ConfidenceSet {
        set_perc: 100.0 * inside as f64 / grid.len() as f64,
        grid,
        mask,
        level,
    })
}

/// Whether the interval at `x` contains the goal, i.e. `x` belongs to the
/// confidence set evaluated off-grid.
pub fn in_confidence_set(
    fit: &ModelFit,
    cov: &DMatrix<f64>,
    problem: &OptimizationProblem,
    x: &[f64],
    level: f64,
) -> Result<bool> {
    let family = ContrastFamily::new(fit, cov, &problem.weights, problem.estimand)?;
    let z = stats::normal_quantile(0.5 + 0.5 * level);
    Ok((family.estimate(x) - problem.goal).abs() <= z * family.variance(x).sqrt())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConfidenceBand {
    pub grid: Grid,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub level: f64,
    pub df: usize,
}

impl ConfidenceBand {
    pub fn half_widths(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(l, u)| 0.5 * (u - l)).collect()
    }
}

/// Simultaneous band using the χ² quantile with as many degrees of freedom
/// as there are model coefficients.
pub fn confidence_band(
    fit: &ModelFit,
    cov: &DMatrix<f64>,
    weights: &[f64],
    grid: &Grid,
    level: f64,
    estimand: Estimand,
) -> Result<ConfidenceBand> {
    let df = fit.layout.ncols();
    let crit = stats::chi2_quantile(level, df as f64).sqrt();
    let family = ContrastFamily::new(fit, cov, weights, estimand)?;
    let (lower, upper): (Vec<f64>, Vec<f64>) = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let x = grid.point(i);
            let m = family.estimate(&x);
            let h = crit * family.variance(&x).sqrt();
            (m - h, m + h)
        })
        .unzip();
    Ok(ConfidenceBand {
        grid: grid.clone(),
        lower,
        upper,
        level,
        df,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::Layout;
    use crate::model::equal_weights;
    use crate::optimizer::{CostFunction, Direction, LowerBoundPolicy};
    use proptest::prelude::*;

    fn toy_fit(coef: Vec<f64>, cov: DMatrix<f64>, layout: Layout) -> ModelFit {
        let n = vec![vec![10; layout.k]; layout.j];
        ModelFit::from_parts(layout, DVector::from_vec(coef), cov, DVector::zeros(0), 1.0, n)
    }

    #[test]
    fn two_observation_sandwich_by_hand() {
        // X = [[1, 1], [2, 1]] (a, centre), residuals (0.5, -0.25).
        // XᵀX = [[5, 3], [3, 2]], inverse [[2, -3], [-3, 5]].
        // meat = Σ e² x xᵀ = 0.25·[[1,1],[1,1]] + 0.0625·[[4,2],[2,1]]
        //      = [[0.5, 0.375], [0.375, 0.3125]].
        // inv·meat = [[-0.125, -0.1875], [0.375, 0.4375]];
        // (inv·meat)·inv = [[0.3125, -0.5625], [-0.5625, 1.0625]].
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 2.0, 1.0]);
        let e = DVector::from_vec(vec![0.5, -0.25]);
        let inv = DMatrix::from_row_slice(2, 2, &[2.0, -3.0, -3.0, 5.0]);
        let s = sandwich_from_design(&x, &e, &inv, VarianceKind::Hc0, &[0, 0], 1);
        let want = DMatrix::from_row_slice(2, 2, &[0.3125, -0.5625, -0.5625, 1.0625]);
        assert!((s.cov_beta - want).abs().max() < 1e-12);
        let want_j = DMatrix::from_row_slice(2, 2, &[2.5, 1.5, 1.5, 1.0]);
        assert!((s.j_star_hat - want_j).abs().max() < 1e-15);
    }

    #[test]
    fn centre_pooled_uses_mean_square() {
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 2.0, 1.0]);
        let e = DVector::from_vec(vec![0.5, -0.25]);
        let inv = DMatrix::from_row_slice(2, 2, &[2.0, -3.0, -3.0, 5.0]);
        let s = sandwich_from_design(&x, &e, &inv, VarianceKind::CentrePooled, &[0, 0], 1);
        // pooled e² = 0.15625 for both rows → cov = 0.15625·(XᵀX)⁻¹
        let want = inv * 0.15625;
        assert!((s.cov_beta - want).abs().max() < 1e-12);
    }

    #[test]
    fn individual_test_examples() {
        let layout = Layout { p: 1, j: 1, k: 1 };
        let f = toy_fit(vec![0.0, 2.0], DMatrix::identity(2, 2), layout);
        let t = wald_individual(&f, &f.covariance, 1).unwrap();
        assert_eq!(t.p_value, 1.0);
        let f = toy_fit(vec![1.96, 0.0], DMatrix::identity(2, 2), layout);
        let t = wald_individual(&f, &f.covariance, 1).unwrap();
        assert!((t.p_value - 0.05).abs() < 1e-3);
        assert!(matches!(
            wald_individual(&f, &f.covariance, 2),
            Err(LagoError::IndexOutOfRange { index: 2, max: 1 })
        ));
    }

    #[test]
    fn joint_reduces_to_squared_z_for_one_component() {
        let layout = Layout { p: 1, j: 2, k: 1 };
        let cov = DMatrix::from_row_slice(3, 3, &[0.3, 0.1, 0.0, 0.1, 0.5, 0.0, 0.0, 0.0, 0.2]);
        let f = toy_fit(vec![0.9, 1.0, 2.0], cov, layout);
        let z = wald_individual(&f, &f.covariance, 1).unwrap();
        let j = wald_joint(&f, &f.covariance).unwrap();
        assert!((j.statistic - z.statistic * z.statistic).abs() < 1e-12);
        assert!((j.p_value - z.p_value).abs() < 1e-10);
    }

    #[test]
    fn joint_zero_and_singular() {
        let layout = Layout { p: 2, j: 1, k: 1 };
        let f = toy_fit(vec![0.0, 0.0, 1.0], DMatrix::zeros(3, 3), layout);
        let t = wald_joint(&f, &f.covariance).unwrap();
        assert_eq!((t.statistic, t.p_value), (0.0, 1.0));
        let f = toy_fit(vec![1.0, 0.0, 1.0], DMatrix::zeros(3, 3), layout);
        assert!(matches!(wald_joint(&f, &f.covariance), Err(LagoError::SingularBlock)));
    }

    #[test]
    fn delta_test_single_arm_and_strong_signal() {
        let mut recs = Vec::new();
        for j in 1..=2 {
            for k in 1..=2 {
                for i in 0..4 {
                    let treated = i < 2;
                    recs.push(TrialRecord {
                        stage: k,
                        centre: j,
                        arm: if treated { Arm::Intervention } else { Arm::Control },
                        actual: vec![if treated { 1.0 + i as f64 } else { 0.0 }],
                        outcome: j as f64 + if treated { -10.0 } else { 0.0 } + 0.01 * (i as f64 - 1.5).powi(3),
                    });
                }
            }
        }
        let ds = TrialDataset::new(recs.clone(), 2, 2, 1).unwrap();
        let t = delta_test(&ds).unwrap();
        assert!(t.p_value < 1e-12);
        assert_eq!(t.kind, TestKind::DeltaRandomized);
        let controls: Vec<_> = recs.into_iter().filter(|r| r.arm == Arm::Control).collect();
        let ds = TrialDataset::new(controls, 2, 2, 1).unwrap();
        assert!(matches!(delta_test(&ds), Err(LagoError::SingleArm)));
    }

    fn problem(goal: f64) -> OptimizationProblem {
        OptimizationProblem {
            cost: CostFunction::Linear {
                coefficients: vec![1.0, 0.5],
            },
            goal,
            direction: Direction::AtMost,
            bounds: vec![(0.0, 4.0), (0.0, 3.0)],
            weights: equal_weights(2),
            beta_a: vec![-1.7, -0.7],
            gamma: vec![0.0, 0.0],
            eta: vec![0.0],
            include_eta: false,
            estimand: Estimand::MeanOutcome,
            lower_bound_policy: LowerBoundPolicy::None,
        }
    }

    #[test]
    fn zero_covariance_interval_and_set() {
        let layout = Layout { p: 2, j: 2, k: 2 };
        let f = toy_fit(vec![-1.7, -0.7, 0.0, 0.0, 0.0], DMatrix::zeros(5, 5), layout);
        let ci = ci_mean(&f, &f.covariance, &[1.0, 1.0], &[0.5, 0.5], 0.95).unwrap();
        assert_eq!(ci.lower, ci.upper);
        assert_eq!(ci.estimate, -2.4);
        // On a 0.5 grid the degenerate set holds exactly the points on the
        // goal contour: 1.7·x1 + 0.7·x2 = 3.4 → (2, 0) only.
        let s = confidence_set(&f, &f.covariance, &problem(-3.4), 0.5, 0.95).unwrap();
        let pts: Vec<Vec<f64>> = s.grid.points().zip(&s.mask).filter(|(_, &m)| m).map(|(p, _)| p).collect();
        assert_eq!(pts, vec![vec![2.0, 0.0]]);
    }

    #[test]
    fn interval_midpoint_is_prediction_with_stage_term() {
        let layout = Layout { p: 2, j: 2, k: 2 };
        let cov = DMatrix::from_fn(5, 5, |i, j| if i == j { 0.1 + 0.01 * i as f64 } else { 0.01 });
        let f = toy_fit(vec![-1.7, -0.7, 0.3, -0.1, 0.25], cov, layout);
        let w = [0.4, 0.6];
        let ci = ci_mean(&f, &f.covariance, &[1.5, 0.5], &w, 0.95).unwrap();
        let pm = model::predict_mean(&f, &[1.5, 0.5], &w, true).unwrap();
        assert!((0.5 * (ci.lower + ci.upper) - pm).abs() < 1e-12);
    }

    #[test]
    fn grid_layout() {
        let g = Grid::over_box(&[(0.0, 4.0), (0.0, 3.0)], 0.05).unwrap();
        assert_eq!(g.axes[0].len(), 81);
        assert_eq!(g.axes[1].len(), 61);
        assert_eq!(g.point(62), vec![0.05, 0.05]);
    }

    fn random_cov(seed: &[f64]) -> DMatrix<f64> {
        let a = DMatrix::from_fn(5, 5, |i, j| seed[(i * 5 + j) % seed.len()]);
        a.transpose() * a + DMatrix::identity(5, 5) * 1e-3
    }

    proptest! {
        #[test]
        fn band_dominates_interval_and_level_nests_set(
            seed in prop::collection::vec(-1.0f64..1.0, 25),
            coef in prop::collection::vec(-2.0f64..2.0, 5),
            goal in -6.0f64..0.0,
        ) {
            let layout = Layout { p: 2, j: 2, k: 2 };
            let f = toy_fit(coef, random_cov(&seed), layout);
            let w = [0.5, 0.5];
            let grid = Grid::over_box(&[(0.0, 4.0), (0.0, 3.0)], 0.5).unwrap();
            let band = confidence_band(&f, &f.covariance, &w, &grid, 0.95, Estimand::MeanOutcome).unwrap();
            for (x, hw) in grid.points().zip(band.half_widths()) {
                let ci = ci_mean(&f, &f.covariance, &x, &w, 0.95).unwrap();
                prop_assert!(hw >= ci.half_width() - 1e-12);
            }
            let mut pr = problem(goal);
            pr.weights = w.to_vec();
            let narrow = confidence_set(&f, &f.covariance, &pr, 0.25, 0.95).unwrap();
            let wide = confidence_set(&f, &f.covariance, &pr, 0.25, 0.999).unwrap();
            for (a, b) in narrow.mask.iter().zip(&wide.mask) {
                prop_assert!(!a || *b);
            }
        }

        #[test]
        fn p_value_decreases_with_statistic(a in 0.0f64..6.0, b in 0.0f64..6.0) {
            let layout = Layout { p: 1, j: 1, k: 1 };
            let fa = toy_fit(vec![a, 0.0], DMatrix::identity(2, 2), layout);
            let fb = toy_fit(vec![b, 0.0], DMatrix::identity(2, 2), layout);
            let ta = wald_individual(&fa, &fa.covariance, 1).unwrap();
            let tb = wald_individual(&fb, &fb.covariance, 1).unwrap();
            if a <= b { prop_assert!(ta.p_value >= tb.p_value); }
            let ja = wald_joint(&fa, &fa.covariance).unwrap();
            let jb = wald_joint(&fb, &fb.covariance).unwrap();
            if a <= b { prop_assert!(ja.p_value >= jb.p_value); }
        }
    }
}
