//! Cost functions and the cost-minimizing package search under a
//! mean-outcome goal.

use std::cmp::Ordering;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{check_bounds, InterventionPackage};
use crate::error::{LagoError, Result};
use crate::model::{Estimand, ModelFit};

/// Tolerance on the goal constraint.
pub const CONSTRAINT_TOL: f64 = 1e-9;
/// Seeding grid spacing for non-linear costs.
pub const SEED_RESOLUTION: f64 = 0.01;
/// Refinement stops once the step falls below this.
pub const REFINE_TOL: f64 = 1e-4;
const COST_TIE: f64 = 1e-9;
const MAX_SEED_POINTS: usize = 400_000;
const N_STARTS: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CostFunction {
    /// `Σ c_p x_p` with nonnegative coefficients.
    Linear { coefficients: Vec<f64> },
    /// `Σ_p Σ_t c_{p,t} x_p^{k_{p,t}}`, terms given as `(power, coefficient)`.
    Polynomial { terms: Vec<Vec<(u32, f64)>> },
}

impl CostFunction {
    pub fn dim(&self) -> usize {
        match self {
            CostFunction::Linear { coefficients } => coefficients.len(),
            CostFunction::Polynomial { terms } => terms.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            CostFunction::Linear { coefficients } => {
                if coefficients.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
                    return Err(LagoError::config("cost.coefficients", "must be finite and nonnegative"));
                }
            }
            CostFunction::Polynomial { terms } => {
                if terms.iter().flatten().any(|&(k, c)| k == 0 || !c.is_finite()) {
                    return Err(LagoError::config("cost.terms", "powers must be at least 1 and coefficients finite"));
                }
            }
        }
        Ok(())
    }

    /// Cost of a single component at intensity `v`.
    fn component(&self, p: usize, v: f64) -> f64 {
        match self {
            CostFunction::Linear { coefficients } => coefficients[p] * v,
            CostFunction::Polynomial { terms } => terms[p].iter().map(|&(k, c)| c * v.powi(k as i32)).sum(),
        }
    }
}

/// Exact cost of a package.
pub fn evaluate_cost(cost: &CostFunction, x: &[f64]) -> f64 {
    x.iter().enumerate().map(|(p, &v)| cost.component(p, v)).sum()
}

/// The C₁ cost `x₁ + 0.5 x₂`.
pub fn linear_reference_cost() -> CostFunction {
    CostFunction::Linear {
        coefficients: vec![1.0, 0.5],
    }
}

/// The quartic-polynomial cost with economies of scale at low intensity.
pub fn cubic_reference_cost() -> CostFunction {
    CostFunction::Polynomial {
        terms: vec![
            vec![(1, 1.25), (3, -0.04), (4, 0.0055)],
            vec![(1, 0.63), (3, -0.09), (4, 0.026)],
        ],
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Mean outcome must be at most the goal (reductions).
    AtMost,
    AtLeast,
}

impl FromStr for Direction {
    type Err = LagoError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "at_most" => Ok(Direction::AtMost),
            "at_least" => Ok(Direction::AtLeast),
            other => Err(LagoError::InvalidDirection(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LowerBoundPolicy {
    #[default]
    None,
    /// Raise each lower bound to the previous stage's recommendation.
    PreviousRecommendation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationProblem {
    pub cost: CostFunction,
    pub goal: f64,
    pub direction: Direction,
    pub bounds: Vec<(f64, f64)>,
    pub weights: Vec<f64>,
    pub beta_a: Vec<f64>,
    pub gamma: Vec<f64>,
    pub eta: Vec<f64>,
    pub include_eta: bool,
    pub estimand: Estimand,
    pub lower_bound_policy: LowerBoundPolicy,
}

impl OptimizationProblem {
    /// Constant part of the constrained mean.
    pub fn offset(&self) -> f64 {
        match self.estimand {
            Estimand::TreatmentEffect => 0.0,
            Estimand::MeanOutcome => {
                let g: f64 = self.weights.iter().zip(&self.gamma).map(|(w, g)| w * g).sum();
                let e = if self.include_eta { self.eta.last().copied().unwrap_or(0.0) } else { 0.0 };
                g + e
            }
        }
    }

    pub fn mean(&self, x: &[f64]) -> f64 {
        self.offset() + x.iter().zip(&self.beta_a).map(|(a, b)| a * b).sum::<f64>()
    }

    pub fn satisfied(&self, x: &[f64]) -> bool {
        let m = self.mean(x);
        match self.direction {
            Direction::AtMost => m <= self.goal + CONSTRAINT_TOL,
            Direction::AtLeast => m >= self.goal - CONSTRAINT_TOL,
        }
    }

    /// Replaces the constraint coefficients with a fit's estimates.
    pub fn with_fit(&self, fit: &ModelFit) -> Self {
        Self {
            beta_a: fit.beta_a.iter().copied().collect(),
            gamma: fit.gamma.iter().copied().collect(),
            eta: fit.eta.iter().copied().collect(),
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.beta_a.len();
        if p == 0 {
            return Err(LagoError::config("beta", "at least one component is required"));
        }
        check_bounds(&self.bounds, p)?;
        self.cost.validate()?;
        if self.cost.dim() != p {
            return Err(LagoError::DimensionMismatch {
                what: "cost function components".into(),
                expected: p,
                got: self.cost.dim(),
            });
        }
        if self.estimand == Estimand::MeanOutcome && self.weights.len() != self.gamma.len() {
            return Err(LagoError::WeightDimensionMismatch {
                expected: self.gamma.len(),
                got: self.weights.len(),
            });
        }
        if !self.goal.is_finite() {
            return Err(LagoError::config("goal", "must be finite"));
        }
        Ok(())
    }

    // Constraint rewritten as d·x ≥ r.
    fn oriented(&self) -> (Vec<f64>, f64) {
        let s = match self.direction {
            Direction::AtMost => -1.0,
            Direction::AtLeast => 1.0,
        };
        (self.beta_a.iter().map(|b| s * b).collect(), s * (self.goal - self.offset()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub x: InterventionPackage,
    pub feasible: bool,
    pub cost: f64,
    pub achieved_mean: f64,
    pub shrunk_to_previous: bool,
}

impl Recommendation {
    fn at(problem: &OptimizationProblem, x: Vec<f64>, feasible: bool, shrunk: bool) -> Self {
        Self {
            cost: evaluate_cost(&problem.cost, &x),
            achieved_mean: problem.mean(&x),
            x: InterventionPackage {
                components: x,
                bounds: problem.bounds.clone(),
            },
            feasible,
            shrunk_to_previous: shrunk,
        }
    }

    /// A fixed, investigator-supplied package (e.g. the first stage's).
    pub fn fixed(problem: &OptimizationProblem, x: Vec<f64>) -> Self {
        let ok = problem.satisfied(&x);
        Self::at(problem, x, ok, false)
    }
}

/// Cost-minimizing package on the box that meets the goal.
pub fn optimize(problem: &OptimizationProblem) -> Result<Recommendation> {
    problem.validate()?;
    let (d, r) = problem.oriented();
    let lo: Vec<f64> = problem.bounds.iter().map(|b| b.0).collect();
    let best_effect: f64 = problem
        .bounds
        .iter()
        .zip(&d)
        .map(|(&(l, u), &dp)| if dp > 0.0 { dp * u } else { dp * l })
        .sum();
    if best_effect < r - CONSTRAINT_TOL {
        return Err(LagoError::Infeasible { goal: problem.goal });
    }
    if dot(&d, &lo) >= r {
        return Ok(Recommendation::at(problem, lo, true, false));
    }
    let x = match &problem.cost {
        CostFunction::Linear { coefficients } => greedy(coefficients, &d, r, &problem.bounds),
        CostFunction::Polynomial { .. } => search(problem, &d, r),
    };
    let rec = Recommendation::at(problem, x, true, false);
    if !problem.satisfied(&rec.x.components) {
        return Err(LagoError::Numerical(format!(
            "optimizer returned a package with mean {} that misses the goal {}",
            rec.achieved_mean, problem.goal
        )));
    }
    Ok(rec)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

// Fill components in increasing cost per unit effect until the goal binds.
// On equal ratios the later component is used first, which leaves the
// lexicographically smallest package among equal-cost solutions.
fn greedy(c: &[f64], d: &[f64], r: f64, bounds: &[(f64, f64)]) -> Vec<f64> {
    let mut x: Vec<f64> = bounds.iter().map(|b| b.0).collect();
    let mut order: Vec<usize> = (0..d.len()).filter(|&p| d[p] > 0.0).collect();
    order.sort_by(|&a, &b| {
        (c[a] / d[a])
            .partial_cmp(&(c[b] / d[b]))
            .unwrap_or(Ordering::Equal)
            .then(b.cmp(&a))
    });
    let mut gap = r - dot(d, &x);
    for p in order {
        if gap <= 0.0 {
            break;
        }
        let room = bounds[p].1 - bounds[p].0;
        let step = (gap / d[p]).min(room);
        x[p] = if step == room { bounds[p].1 } else { bounds[p].0 + step };
        gap -= step * d[p];
    }
    x
}

fn better(a: (f64, &[f64]), b: (f64, &[f64])) -> bool {
    if (a.0 - b.0).abs() <= COST_TIE {
        a.1.iter().zip(b.1).find(|(u, v)| u != v).is_some_and(|(u, v)| u < v)
    } else {
        a.0 < b.0
    }
}

// Grid-seeded multi-start coordinate search for non-linear costs.
fn search(problem: &OptimizationProblem, d: &[f64], r: f64) -> Vec<f64> {
    let p = d.len();
    let bounds = &problem.bounds;
    let cost = &problem.cost;

    let mut res = SEED_RESOLUTION;
    let axis_len = |res: f64| -> Vec<usize> {
        bounds
            .iter()
            .map(|&(l, u)| ((u - l) / res + 1e-9).floor() as usize + 1)
            .collect()
    };
    while axis_len(res).iter().product::<usize>() > MAX_SEED_POINTS {
        res *= 2.0;
    }
    let lens = axis_len(res);
    let axes: Vec<Vec<f64>> = bounds
        .iter()
        .zip(&lens)
        .map(|(&(l, _), &n)| (0..n).map(|i| l + i as f64 * res).collect())
        .collect();
    // separable: per-axis cost and effect tables
    let axis_cost: Vec<Vec<f64>> = axes
        .iter()
        .enumerate()
        .map(|(q, a)| a.iter().map(|&v| cost.component(q, v)).collect())
        .collect();
    let axis_eff: Vec<Vec<f64>> = axes.iter().zip(d).map(|(a, &dq)| a.iter().map(|&v| dq * v).collect()).collect();

    let mut starts: Vec<(f64, Vec<f64>)> = Vec::with_capacity(N_STARTS + 1);
    let mut idx = vec![0usize; p];
    let total: usize = lens.iter().product();
    for _ in 0..total {
        let eff: f64 = (0..p).map(|q| axis_eff[q][idx[q]]).sum();
        if eff >= r {
            let c: f64 = (0..p).map(|q| axis_cost[q][idx[q]]).sum();
            if starts.len() < N_STARTS || c < starts[starts.len() - 1].0 {
                let x: Vec<f64> = (0..p).map(|q| axes[q][idx[q]]).collect();
                let pos = starts.partition_point(|s| !better((c, &x), (s.0, &s.1)));
                starts.insert(pos, (c, x));
                starts.truncate(N_STARTS);
            }
        }
        // odometer increment, last axis fastest
        for q in (0..p).rev() {
            idx[q] += 1;
            if idx[q] < lens[q] {
                break;
            }
            idx[q] = 0;
        }
    }
    if starts.is_empty() {
        let corner: Vec<f64> = bounds.iter().zip(d).map(|(&(l, u), &dq)| if dq > 0.0 { u } else { l }).collect();
        starts.push((evaluate_cost(cost, &corner), corner));
    }

    let mut best: Option<(f64, Vec<f64>)> = None;
    for (_, x0) in starts {
        let x = refine(cost, d, r, bounds, x0, res);
        let c = evaluate_cost(cost, &x);
        if best.as_ref().is_none_or(|b| better((c, &x), (b.0, &b.1))) {
            best = Some((c, x));
        }
    }
    best.map(|b| b.1).unwrap_or_default()
}

fn refine(cost: &CostFunction, d: &[f64], r: f64, bounds: &[(f64, f64)], mut x: Vec<f64>, start_step: f64) -> Vec<f64> {
    let p = x.len();
    let feasible = |y: &[f64]| dot(d, y) >= r;
    let clamp = |q: usize, v: f64| v.clamp(bounds[q].0, bounds[q].1);
    let mut fx = evaluate_cost(cost, &x);
    let mut h = start_step;
    while h >= REFINE_TOL {
        let mut improved = false;
        for q in 0..p {
            for s in [-1.0, 1.0] {
                let mut y = x.clone();
                y[q] = clamp(q, y[q] + s * h);
                if y[q] != x[q] && feasible(&y) {
                    let fy = evaluate_cost(cost, &y);
                    if fy < fx - 1e-15 {
                        (x, fx, improved) = (y, fy, true);
                    }
                }
            }
        }
        // exchange along the constraint level set
        for q in 0..p {
            for t in 0..p {
                if q == t || d[t] == 0.0 {
                    continue;
                }
                for s in [-1.0, 1.0] {
                    let mut y = x.clone();
                    let nq = clamp(q, y[q] + s * h);
                    let moved = nq - y[q];
                    if moved == 0.0 {
                        continue;
                    }
                    y[q] = nq;
                    y[t] = clamp(t, y[t] - moved * d[q] / d[t]);
                    if feasible(&y) {
                        let fy = evaluate_cost(cost, &y);
                        if fy < fx - 1e-15 {
                            (x, fx, improved) = (y, fy, true);
                        }
                    }
                }
            }
        }
        if !improved {
            h *= 0.5;
        }
    }
    tighten(cost, d, r, bounds, x)
}

// Spend any remaining slack by lowering whichever component saves most.
fn tighten(cost: &CostFunction, d: &[f64], r: f64, bounds: &[(f64, f64)], mut x: Vec<f64>) -> Vec<f64> {
    loop {
        let slack = dot(d, &x) - r;
        if slack <= 0.0 {
            return x;
        }
        let fx = evaluate_cost(cost, &x);
        let mut best: Option<(f64, Vec<f64>)> = None;
        for q in 0..x.len() {
            if d[q] <= 0.0 {
                continue;
            }
            let mut y = x.clone();
            y[q] = (y[q] - slack / d[q]).max(bounds[q].0);
            let fy = evaluate_cost(cost, &y);
            if fy < fx - 1e-15 && best.as_ref().is_none_or(|b| fy < b.0) {
                best = Some((fy, y));
            }
        }
        match best {
            Some((_, y)) if dot(d, &y) >= r - CONSTRAINT_TOL * 0.1 => x = y,
            _ => return x,
        }
    }
}

/// Next stage's package from the current fit, without the stage term.
///
/// The problem's lower-bound policy may raise the bounds to `previous`. If
/// the goal is out of reach the previous package is kept and flagged.
pub fn recommend_next_stage(fit: &ModelFit, problem: &OptimizationProblem, previous: &Recommendation) -> Result<Recommendation> {
    let mut pr = problem.with_fit(fit);
    pr.include_eta = false;
    if pr.lower_bound_policy == LowerBoundPolicy::PreviousRecommendation {
        apply_lower_bounds(&mut pr.bounds, &previous.x.components)?;
    }
    match optimize(&pr) {
        Ok(rec) => Ok(rec),
        Err(LagoError::Infeasible { .. }) => {
            let mut rec = Recommendation::at(&pr, previous.x.components.clone(), false, true);
            rec.x.bounds = previous.x.bounds.clone();
            Ok(rec)
        }
        Err(e) => Err(e),
    }
}

pub(crate) fn apply_lower_bounds(bounds: &mut [(f64, f64)], previous: &[f64]) -> Result<()> {
    if bounds.len() != previous.len() {
        return Err(LagoError::DimensionMismatch {
            what: "previous recommendation".into(),
            expected: bounds.len(),
            got: previous.len(),
        });
    }
    for (b, &x) in bounds.iter_mut().zip(previous) {
        b.0 = b.0.max(x).min(b.1);
    }
    Ok(())
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) fn reference_problem(cost: CostFunction) -> OptimizationProblem {
        OptimizationProblem {
            cost,
            goal: -5.0,
            direction: Direction::AtMost,
            bounds: vec![(0.0, 4.0), (0.0, 3.0)],
            weights: vec![1.0],
            beta_a: vec![-1.70, -0.70],
            gamma: vec![0.0],
            eta: vec![],
            include_eta: false,
            estimand: Estimand::MeanOutcome,
            lower_bound_policy: LowerBoundPolicy::None,
        }
    }

    /// Exhaustive search over a regular grid (independent of the optimizer).
    pub(crate) fn grid_oracle(pr: &OptimizationProblem, res: f64) -> Option<(f64, Vec<f64>)> {
        let (l0, u0) = pr.bounds[0];
        let (l1, u1) = pr.bounds[1];
        let n0 = ((u0 - l0) / res + 1e-9).floor() as usize;
        let n1 = ((u1 - l1) / res + 1e-9).floor() as usize;
        let mut best: Option<(f64, Vec<f64>)> = None;
        for i in 0..=n0 {
            for j in 0..=n1 {
                let x = vec![l0 + i as f64 * res, l1 + j as f64 * res];
                if pr.satisfied(&x) {
                    let c = evaluate_cost(&pr.cost, &x);
                    if best.as_ref().is_none_or(|b| c < b.0) {
                        best = Some((c, x));
                    }
                }
            }
        }
        best
    }

    #[test]
    fn cost_examples() {
        assert_eq!(evaluate_cost(&linear_reference_cost(), &[2.94, 0.0]), 2.94);
        assert_eq!(evaluate_cost(&cubic_reference_cost(), &[0.0, 0.0]), 0.0);
        assert!((evaluate_cost(&cubic_reference_cost(), &[1.0, 1.0]) - 1.7815).abs() < 1e-12);
    }

    #[test]
    fn linear_reference_optimum() {
        let rec = optimize(&reference_problem(linear_reference_cost())).unwrap();
        assert!((rec.x.components[0] - 5.0 / 1.7).abs() < 1e-12);
        assert_eq!(rec.x.components[1], 0.0);
        assert!((rec.cost - 2.941).abs() < 1e-3);
    }

    #[test]
    fn cubic_reference_optimum() {
        let pr = reference_problem(cubic_reference_cost());
        let rec = optimize(&pr).unwrap();
        assert!((rec.x.components[0] - 2.94).abs() < 0.02);
        assert!((rec.x.components[1] - 0.01).abs() < 0.02);
        let (oc, _) = grid_oracle(&pr, 0.005).unwrap();
        assert!(rec.cost <= oc + 1e-3);
    }

    #[test]
    fn null_goal_costs_nothing() {
        let mut pr = reference_problem(linear_reference_cost());
        pr.goal = 0.0;
        let rec = optimize(&pr).unwrap();
        assert_eq!(rec.x.components, vec![0.0, 0.0]);
        assert_eq!(rec.cost, 0.0);
    }

    #[test]
    fn goal_nine_wider_box() {
        let mut pr = reference_problem(linear_reference_cost());
        pr.beta_a = vec![-1.59, -0.59];
        pr.gamma = vec![-2.63, 0.58, 2.11];
        pr.weights = vec![1.0 / 3.0; 3];
        pr.goal = -9.0;
        pr.bounds = vec![(0.0, 6.5), (0.0, 3.0)];
        let rec = optimize(&pr).unwrap();
        assert!((rec.x.components[0] - 5.67).abs() < 0.005);
        assert_eq!(rec.x.components[1], 0.0);
    }

    #[test]
    fn unreachable_goal() {
        let mut pr = reference_problem(linear_reference_cost());
        pr.goal = -100.0;
        assert!(matches!(optimize(&pr), Err(LagoError::Infeasible { .. })));
        assert!(matches!("sideways".parse::<Direction>(), Err(LagoError::InvalidDirection(_))));
    }

    #[test]
    fn equal_ratio_prefers_small_first_component() {
        let mut pr = reference_problem(CostFunction::Linear {
            coefficients: vec![1.0, 1.0],
        });
        pr.beta_a = vec![-1.0, -1.0];
        pr.goal = -2.0;
        let rec = optimize(&pr).unwrap();
        assert_eq!(rec.x.components, vec![0.0, 2.0]);
    }

    #[test]
    fn at_least_orientation() {
        let mut pr = reference_problem(linear_reference_cost());
        pr.direction = Direction::AtLeast;
        pr.beta_a = vec![1.70, 0.70];
        pr.goal = 5.0;
        let rec = optimize(&pr).unwrap();
        assert!((rec.x.components[0] - 5.0 / 1.7).abs() < 1e-12);
    }

    fn random_problem(c: (f64, f64), b: (f64, f64), u: (f64, f64), frac: f64, cubic: bool) -> OptimizationProblem {
        let cost = if cubic {
            CostFunction::Polynomial {
                terms: vec![vec![(1, c.0), (3, -0.02), (4, 0.004)], vec![(1, c.1), (2, 0.05), (3, -0.03)]],
            }
        } else {
            CostFunction::Linear {
                coefficients: vec![c.0, c.1],
            }
        };
        let mut pr = reference_problem(cost);
        pr.beta_a = vec![-b.0, -b.1];
        pr.bounds = vec![(0.0, u.0), (0.0, u.1)];
        pr.goal = -frac * (b.0 * u.0 + b.1 * u.1);
        pr
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn matches_grid_oracle(
            c in (0.1f64..3.0, 0.1f64..3.0),
            b in (0.1f64..2.0, 0.1f64..2.0),
            u in (1.0f64..4.0, 1.0f64..4.0),
            frac in 0.05f64..0.95,
            cubic in any::<bool>(),
        ) {
            let pr = random_problem(c, b, u, frac, cubic);
            let rec = optimize(&pr).unwrap();
            prop_assert!(pr.satisfied(&rec.x.components));
            prop_assert!(rec.x.within_bounds(0.0));
            if let Some((oc, _)) = grid_oracle(&pr, 0.005) {
                prop_assert!(rec.cost <= oc + 1e-3, "{} vs oracle {}", rec.cost, oc);
            }
        }

        #[test]
        fn scaling_linear_cost_keeps_argmin(
            c in (0.1f64..3.0, 0.1f64..3.0),
            b in (0.1f64..2.0, 0.1f64..2.0),
            frac in 0.05f64..0.95,
            k in 0.01f64..100.0,
        ) {
            let pr = random_problem(c, b, (4.0, 3.0), frac, false);
            let mut scaled = pr.clone();
            scaled.cost = CostFunction::Linear { coefficients: vec![k * c.0, k * c.1] };
            let a = optimize(&pr).unwrap();
            let s = optimize(&scaled).unwrap();
            prop_assert_eq!(a.x.components, s.x.components);
        }

        #[test]
        fn minimal_cost_monotone(
            c in (0.1f64..3.0, 0.1f64..3.0),
            b in (0.1f64..2.0, 0.1f64..2.0),
            frac in 0.05f64..0.9,
            relax in 0.0f64..1.0,
            lift in (0.0f64..1.0, 0.0f64..1.0),
            cubic in any::<bool>(),
        ) {
            let pr = random_problem(c, b, (4.0, 3.0), frac, cubic);
            let base = optimize(&pr).unwrap().cost;
            let mut easier = pr.clone();
            easier.goal = pr.goal * relax;
            prop_assert!(optimize(&easier).unwrap().cost <= base + 1e-6);
            let mut tight = pr.clone();
            tight.bounds = vec![(lift.0, 4.0), (lift.1, 3.0)];
            if let Ok(t) = optimize(&tight) {
                prop_assert!(t.cost >= base - 1e-6);
            }
        }
    }
}
