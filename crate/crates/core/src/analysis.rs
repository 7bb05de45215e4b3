//! Single-dataset analysis: fit, tests, interval, optimum, set and band,
//! driven by a flat TOML configuration.

use serde::{Deserialize, Serialize};

use crate::data::TrialDataset;
use crate::error::{LagoError, Result};
use crate::inference::{
    ci_mean, confidence_band, confidence_set, delta_test, wald_individual, wald_joint, ConfidenceBand,
    ConfidenceSet, Grid, VarianceKind, DEFAULT_GRID_RESOLUTION, DEFAULT_LEVEL,
};
use crate::io::{matrix_rows, AnalysisReport, CiBlock, TestsBlock};
use crate::model::{equal_weights, fit_with, Estimand, FitOptions, ModelFit};
use crate::optimizer::{
    optimize, recommend_next_stage, CostFunction, Direction, LowerBoundPolicy, OptimizationProblem, Recommendation,
};
use crate::sim::config::{parse_error, WeightScheme};

pub const SET_FILE: &str = "set.csv";
pub const BAND_FILE: &str = "band.csv";

fn at_most() -> Direction {
    Direction::AtMost
}
fn default_level() -> f64 {
    DEFAULT_LEVEL
}
fn default_resolution() -> f64 {
    DEFAULT_GRID_RESOLUTION
}

/// Problem and inference settings for `fit`, `optimize` and `recommend`.
///
/// `beta`, `gamma` and `eta` are only read by `optimize`, which has no data;
/// the other commands take them from the fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    #[serde(default)]
    pub beta: Option<Vec<f64>>,
    #[serde(default)]
    pub gamma: Option<Vec<f64>>,
    #[serde(default)]
    pub eta: Option<Vec<f64>>,
    #[serde(default)]
    pub cost: Option<CostFunction>,
    #[serde(default)]
    pub goal: Option<f64>,
    #[serde(default = "at_most")]
    pub direction: Direction,
    #[serde(default)]
    pub bounds: Option<Vec<(f64, f64)>>,
    #[serde(default)]
    pub weights: WeightScheme,
    /// Explicit centre weights, overriding `weights`.
    #[serde(default)]
    pub weight_values: Option<Vec<f64>>,
    #[serde(default)]
    pub estimand: Estimand,
    #[serde(default)]
    pub include_eta: bool,
    #[serde(default)]
    pub lower_bound_policy: LowerBoundPolicy,
    #[serde(default = "default_level")]
    pub level: f64,
    #[serde(default = "default_resolution")]
    pub grid_resolution: f64,
    /// Package for the reported mean-outcome interval; the optimum if absent.
    #[serde(default)]
    pub ci_x: Option<Vec<f64>>,
    #[serde(default)]
    pub variance: VarianceKind,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        toml::from_str("").expect("all fields have defaults")
    }
}

/// Cost, goal and bounds.
type ProblemParts = (CostFunction, f64, Vec<(f64, f64)>);

impl AnalysisConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let doc: toml::Table = text.parse().map_err(|e: toml::de::Error| parse_error(text, e))?;
        let cfg: Self = toml::Value::Table(doc)
            .try_into()
            .map_err(|e: toml::de::Error| LagoError::config("config", e.message()))?;
        if !(cfg.level > 0.0 && cfg.level < 1.0) {
            return Err(LagoError::config("level", "must lie strictly between 0 and 1"));
        }
        if !(cfg.grid_resolution > 0.0 && cfg.grid_resolution.is_finite()) {
            return Err(LagoError::config("grid_resolution", "must be positive"));
        }
        Ok(cfg)
    }

    fn weights(&self, j: usize, from_data: impl FnOnce() -> Option<Vec<f64>>) -> Result<Vec<f64>> {
        if let Some(w) = &self.weight_values {
            if w.len() != j {
                return Err(LagoError::WeightDimensionMismatch {
                    expected: j,
                    got: w.len(),
                });
            }
            return Ok(w.clone());
        }
        match self.weights {
            WeightScheme::Equal => Ok(equal_weights(j)),
            WeightScheme::FromData => from_data()
                .or_else(|| (j == 1).then(|| vec![1.0]))
                .ok_or_else(|| LagoError::config("weights", "from_data needs a dataset; use equal or weight_values")),
        }
    }

    /// `None` when no optimization problem is configured at all.
    fn problem_parts(&self) -> Result<Option<ProblemParts>> {
        match (&self.cost, self.goal, &self.bounds) {
            (None, None, None) => Ok(None),
            (Some(c), Some(g), Some(b)) => Ok(Some((c.clone(), g, b.clone()))),
            _ => {
                let missing = [("cost", self.cost.is_none()), ("goal", self.goal.is_none()), ("bounds", self.bounds.is_none())]
                    .iter()
                    .find(|m| m.1)
                    .map(|m| m.0)
                    .unwrap_or("cost");
                Err(LagoError::config(missing, "cost, goal and bounds must be given together"))
            }
        }
    }

    /// The configured problem with coefficients from `fit`.
    pub fn problem_for_fit(&self, fit: &ModelFit) -> Result<Option<OptimizationProblem>> {
        let Some((cost, goal, bounds)) = self.problem_parts()? else {
            return Ok(None);
        };
        let weights = self.weights(fit.layout.j, || Some(fit.sample_size_weights()))?;
        let base = OptimizationProblem {
            cost,
            goal,
            direction: self.direction,
            bounds,
            weights,
            beta_a: vec![],
            gamma: vec![],
            eta: vec![],
            include_eta: self.include_eta,
            estimand: self.estimand,
            lower_bound_policy: self.lower_bound_policy,
        };
        let pr = base.with_fit(fit);
        pr.validate()?;
        Ok(Some(pr))
    }

    /// The configured problem with coefficients given in the file itself.
    pub fn standalone_problem(&self) -> Result<OptimizationProblem> {
        let (cost, goal, bounds) = self
            .problem_parts()?
            .ok_or_else(|| LagoError::config("cost", "optimize needs cost, goal and bounds"))?;
        let beta_a = self
            .beta
            .clone()
            .ok_or_else(|| LagoError::config("beta", "optimize needs the component effects"))?;
        let gamma = self.gamma.clone().unwrap_or_else(|| vec![0.0]);
        let weights = self.weights(gamma.len(), || None)?;
        let pr = OptimizationProblem {
            cost,
            goal,
            direction: self.direction,
            bounds,
            weights,
            beta_a,
            gamma,
            eta: self.eta.clone().unwrap_or_default(),
            include_eta: self.include_eta,
            estimand: self.estimand,
            lower_bound_policy: self.lower_bound_policy,
        };
        pr.validate()?;
        Ok(pr)
    }
}

pub struct Analysis {
    pub fit: ModelFit,
    pub report: AnalysisReport,
    pub set: Option<ConfidenceSet>,
    pub band: Option<ConfidenceBand>,
}

fn optional_optimum(pr: &OptimizationProblem) -> Result<Option<Recommendation>> {
    match optimize(pr) {
        Ok(r) => Ok(Some(r)),
        Err(LagoError::Infeasible { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Runs the full analysis of one dataset.
pub fn analyze(ds: &TrialDataset, cfg: &AnalysisConfig) -> Result<Analysis> {
    let fit = fit_with(ds, FitOptions { variance: cfg.variance })?;
    let cov = &fit.covariance;
    let p = fit.layout.p;
    let individual = (1..=p).map(|q| wald_individual(&fit, cov, q)).collect::<Result<Vec<_>>>()?;
    let joint = wald_joint(&fit, cov)?;
    let delta = match delta_test(ds) {
        Ok(t) => Some(t),
        Err(LagoError::SingleArm) => None,
        Err(e) => return Err(e),
    };

    let problem = cfg.problem_for_fit(&fit)?;
    let optimum = problem.as_ref().map(optional_optimum).transpose()?.flatten();
    let weights = match &problem {
        Some(pr) => pr.weights.clone(),
        None => cfg.weights(fit.layout.j, || Some(fit.sample_size_weights()))?,
    };

    let ci_x = cfg.ci_x.clone().or_else(|| optimum.as_ref().map(|r| r.x.components.clone()));
    let ci = ci_x
        .map(|x| -> Result<CiBlock> {
            Ok(CiBlock {
                interval: ci_mean(&fit, cov, &x, &weights, cfg.level)?,
                x,
                weights: weights.clone(),
            })
        })
        .transpose()?;

    let set = problem
        .as_ref()
        .map(|pr| confidence_set(&fit, cov, pr, cfg.grid_resolution, cfg.level))
        .transpose()?;
    let band = match &cfg.bounds {
        Some(b) => {
            let grid = Grid::over_box(b, cfg.grid_resolution)?;
            Some(confidence_band(&fit, cov, &weights, &grid, cfg.level, cfg.estimand)?)
        }
        None => None,
    };

    let report = AnalysisReport {
        beta: fit.coefficients.iter().copied().collect(),
        se: fit.standard_errors().iter().copied().collect(),
        cov: matrix_rows(cov),
        tests: TestsBlock { individual, joint, delta },
        ci_mean: ci,
        set_mask_file: set.as_ref().map(|_| SET_FILE.to_string()),
        band_file: band.as_ref().map(|_| BAND_FILE.to_string()),
        names: fit.layout.names(),
        p,
        j: fit.layout.j,
        k: fit.layout.k,
        n_by_centre_stage: fit.n_by_centre_stage.clone(),
        condition_number: fit.condition_number,
        set_perc: set.as_ref().map(|s| s.set_perc),
        optimum,
    };
    Ok(Analysis { fit, report, set, band })
}

/// Next-stage package from a saved report.
pub fn recommend_from_report(report: &AnalysisReport, cfg: &AnalysisConfig, previous: Vec<f64>) -> Result<Recommendation> {
    let fit = report.to_fit()?;
    let pr = cfg
        .problem_for_fit(&fit)?
        .ok_or_else(|| LagoError::config("cost", "recommend needs cost, goal and bounds"))?;
    if previous.len() != fit.layout.p {
        return Err(LagoError::DimensionMismatch {
            what: "previous package".into(),
            expected: fit.layout.p,
            got: previous.len(),
        });
    }
    recommend_next_stage(&fit, &pr, &Recommendation::fixed(&pr, previous))
}

/// Accepts `[x1, ..]`, `{"components": [..]}`, `{"x": [..]}` or a saved
/// recommendation (`{"x": {"components": [..]}}`).
pub fn parse_package_json(text: &str) -> Result<Vec<f64>> {
    let v: serde_json::Value = serde_json::from_str(text)?;
    fn numbers(v: &serde_json::Value) -> Option<Vec<f64>> {
        v.as_array()?.iter().map(|x| x.as_f64()).collect()
    }
    let found = numbers(&v)
        .or_else(|| v.get("components").and_then(numbers))
        .or_else(|| v.get("x").and_then(numbers))
        .or_else(|| v.get("x").and_then(|x| x.get("components")).and_then(numbers));
    found.ok_or_else(|| LagoError::config("previous", "expected an array of numbers or an object holding one"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Arm, TrialRecord};

    fn dataset() -> TrialDataset {
        // two centres, two stages, deterministic pseudo-noise
        let mut recs = vec![];
        let mut s = 0.37f64;
        for stage in 1..=2 {
            for centre in 1..=2 {
                for i in 0..20 {
                    s = (s * 97.13).fract();
                    let t = (s * 31.7).fract();
                    let int = i % 2 == 0;
                    let a = if int { vec![1.0 + 2.0 * s, 0.5 + t] } else { vec![0.0, 0.0] };
                    let y = -1.7 * a[0] - 0.7 * a[1] + centre as f64 + 0.3 * (s - 0.5);
                    recs.push(TrialRecord {
                        stage,
                        centre,
                        arm: if int { Arm::Intervention } else { Arm::Control },
                        actual: a,
                        outcome: y,
                    });
                }
            }
        }
        TrialDataset::from_records(recs).unwrap()
    }

    const CFG: &str = r#"
cost = { kind = "linear", coefficients = [1.0, 0.5] }
goal = -3.0
bounds = [[0.0, 4.0], [0.0, 3.0]]
estimand = "treatment_effect"
grid_resolution = 0.5
"#;

    #[test]
    fn full_analysis() {
        let cfg = AnalysisConfig::from_toml(CFG).unwrap();
        let a = analyze(&dataset(), &cfg).unwrap();
        let r = &a.report;
        assert_eq!(r.beta.len(), 2 + 2 + 1);
        assert_eq!(r.names, ["a1", "a2", "centre1", "centre2", "stage2"]);
        assert!(r.tests.delta.is_some());
        let opt = r.optimum.as_ref().unwrap();
        assert!(opt.feasible);
        let ci = r.ci_mean.as_ref().unwrap();
        assert_eq!(ci.x, opt.x.components);
        assert!(ci.interval.lower < ci.interval.upper);
        assert_eq!(a.set.as_ref().unwrap().mask.len(), 9 * 7);
        assert_eq!(a.band.as_ref().unwrap().lower.len(), 9 * 7);
        // the report alone is enough to rebuild the fit
        let back = r.to_fit().unwrap();
        assert_eq!(back.coefficients, a.fit.coefficients);
        let prev = recommend_from_report(r, &cfg, vec![0.0, 0.0]).unwrap();
        assert_eq!(prev.x.components, opt.x.components);
    }

    #[test]
    fn partial_problem_names_missing_key() {
        let cfg = AnalysisConfig::from_toml("goal = -3.0").unwrap();
        match analyze(&dataset(), &cfg) {
            Err(LagoError::InvalidConfig { key, .. }) => assert_eq!(key, "cost"),
            other => panic!("{:?}", other.map(|a| a.report)),
        }
        assert!(matches!(
            AnalysisConfig::from_toml("level = 1.5"),
            Err(LagoError::InvalidConfig { key, .. }) if key == "level"
        ));
        assert!(matches!(AnalysisConfig::from_toml("goal = \n"), Err(LagoError::Parse { line: 1, .. })));
    }

    #[test]
    fn standalone_optimize() {
        let text = format!("beta = [-1.7, -0.7]\n{CFG}");
        let pr = AnalysisConfig::from_toml(&text).unwrap().standalone_problem().unwrap();
        let r = optimize(&pr).unwrap();
        assert!((r.x.components[0] - 3.0 / 1.7).abs() < 1e-9);
    }

    #[test]
    fn package_json_forms() {
        for t in ["[1.5, 0.25]", r#"{"components":[1.5,0.25]}"#, r#"{"x":[1.5,0.25]}"#, r#"{"x":{"components":[1.5,0.25],"bounds":[]}}"#] {
            assert_eq!(parse_package_json(t).unwrap(), vec![1.5, 0.25], "{t}");
        }
        assert!(parse_package_json(r#"{"y": 1}"#).is_err());
    }
}
