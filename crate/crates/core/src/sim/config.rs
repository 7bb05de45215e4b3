//! Scenario specification, read from flat TOML documents (dotted keys).

use serde::{Deserialize, Serialize};

use crate::data::check_bounds;
use crate::error::{LagoError, Result};
use crate::inference::{VarianceKind, DEFAULT_GRID_RESOLUTION, DEFAULT_LEVEL};
use crate::model::Estimand;
use crate::optimizer::{CostFunction, Direction, LowerBoundPolicy, OptimizationProblem};
use crate::sim::engine::eta_from_rho;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CentreZMode {
    /// Centre characteristics drawn once and kept for every replicate.
    FixedList,
    #[default]
    RedrawEachReplicate,
}

/// How centres are weighted in the mean-outcome constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightScheme {
    /// Proportional to (planned) centre sample sizes.
    #[default]
    FromData,
    Equal,
}

fn one() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}
fn default_resolution() -> f64 {
    DEFAULT_GRID_RESOLUTION
}
fn default_level() -> f64 {
    DEFAULT_LEVEL
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: String,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "J")]
    pub j: usize,
    #[serde(rename = "P")]
    pub p: usize,
    /// J×K participant counts; a single row applies to every centre.
    pub n_by_centre_stage: Vec<Vec<usize>>,
    pub beta_true: Vec<f64>,
    #[serde(default)]
    pub beta_z: f64,
    /// Centre effects apart from the `beta_z·Z_j` part (default zero).
    #[serde(default)]
    pub gamma_true: Option<Vec<f64>>,
    #[serde(default)]
    pub rho_targets: Option<Vec<f64>>,
    /// Direct per-component `η`, overriding `rho_targets`.
    #[serde(default)]
    pub eta: Option<Vec<f64>>,
    /// J×P centre offsets added to the recommended package, replacing `η·Z_j`.
    #[serde(default)]
    pub eta_by_centre: Option<Vec<Vec<f64>>>,
    /// Standard deviation of the participant-level deviation `ξ` (default 1).
    #[serde(default)]
    pub xi_sd: Option<Vec<f64>>,
    #[serde(rename = "centre_Z_mode", default)]
    pub centre_z_mode: CentreZMode,
    #[serde(rename = "Z_values", default)]
    pub z_values: Option<Vec<f64>>,
    pub x_stage1: Vec<f64>,
    pub cost: CostFunction,
    pub goal: f64,
    pub direction: Direction,
    pub bounds: Vec<(f64, f64)>,
    #[serde(default)]
    pub lower_bound_policy: LowerBoundPolicy,
    #[serde(default = "one")]
    pub noise_sd: f64,
    /// Intervention:control allocation ratio.
    #[serde(default = "one")]
    pub arm_ratio: f64,
    pub replicates: usize,
    pub seed: u64,
    #[serde(default = "yes")]
    pub use_lago: bool,
    #[serde(default)]
    pub weights: WeightScheme,
    #[serde(default)]
    pub estimand: Estimand,
    #[serde(default = "default_resolution")]
    pub grid_resolution: f64,
    #[serde(default = "default_level")]
    pub level: f64,
    /// Whether the final optimization includes the last stage's effect.
    #[serde(default)]
    pub final_include_eta: bool,
    #[serde(default)]
    pub variance: VarianceKind,
}

impl ScenarioConfig {
    /// Parses a TOML document and applies `key=value` overrides, where the
    /// value is any TOML literal and the key may be dotted.
    pub fn from_toml_with(text: &str, overrides: &[(String, String)]) -> Result<Self> {
        let mut doc: toml::Table = text.parse().map_err(|e: toml::de::Error| parse_error(text, e))?;
        for (key, raw) in overrides {
            let value = parse_value(key, raw)?;
            set_dotted(&mut doc, key, value)?;
        }
        let mut cfg: ScenarioConfig =
            toml::Value::Table(doc)
                .try_into()
                .map_err(|e: toml::de::Error| LagoError::InvalidConfig {
                    key: "scenario".into(),
                    reason: e.message().to_string(),
                })?;
        cfg.normalize();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        Self::from_toml_with(text, &[])
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario config serializes")
    }

    fn normalize(&mut self) {
        if self.n_by_centre_stage.len() == 1 && self.j > 1 {
            self.n_by_centre_stage = vec![self.n_by_centre_stage[0].clone(); self.j];
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, reason: String| Err(LagoError::config(key, reason));
        if self.k < 1 {
            return bad("K", "at least one stage is required".into());
        }
        if self.j < 1 {
            return bad("J", "at least one centre is required".into());
        }
        if self.p < 1 {
            return bad("P", "at least one component is required".into());
        }
        if self.replicates < 1 {
            return bad("replicates", "must be at least 1".into());
        }
        if self.n_by_centre_stage.len() != self.j || self.n_by_centre_stage.iter().any(|r| r.len() != self.k) {
            return bad("n_by_centre_stage", format!("expected {} rows of {} counts", self.j, self.k));
        }
        let len_check = |key: &str, v: &[f64], n: usize| -> Result<()> {
            if v.len() != n {
                return Err(LagoError::config(key, format!("expected {n} values, got {}", v.len())));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(LagoError::config(key, "values must be finite"));
            }
            Ok(())
        };
        len_check("beta_true", &self.beta_true, self.p)?;
        len_check("x_stage1", &self.x_stage1, self.p)?;
        if let Some(rho) = &self.rho_targets {
            len_check("rho_targets", rho, self.p)?;
            for &r in rho {
                eta_from_rho(r).map_err(|e| LagoError::config("rho_targets", e.to_string()))?;
            }
        }
        if let Some(eta) = &self.eta {
            len_check("eta", eta, self.p)?;
        }
        if let Some(g) = &self.gamma_true {
            len_check("gamma_true", g, self.j)?;
        }
        if let Some(xi) = &self.xi_sd {
            len_check("xi_sd", xi, self.p)?;
            if xi.iter().any(|&s| s < 0.0) {
                return bad("xi_sd", "must be nonnegative".into());
            }
        }
        if let Some(m) = &self.eta_by_centre {
            if m.len() != self.j {
                return bad("eta_by_centre", format!("expected {} rows", self.j));
            }
            for row in m {
                len_check("eta_by_centre", row, self.p)?;
            }
        }
        if let Some(z) = &self.z_values {
            len_check("Z_values", z, self.j)?;
        }
        check_bounds(&self.bounds, self.p).map_err(|e| LagoError::config("bounds", e.to_string()))?;
        if self
            .x_stage1
            .iter()
            .zip(&self.bounds)
            .any(|(&x, &(l, u))| x < l || x > u)
        {
            return bad("x_stage1", "must lie within bounds".into());
        }
        self.cost.validate()?;
        if self.cost.dim() != self.p {
            return bad("cost", format!("expected {} components", self.p));
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return bad("noise_sd", "must be nonnegative".into());
        }
        if !(self.arm_ratio > 0.0 && self.arm_ratio.is_finite()) {
            return bad("arm_ratio", "must be positive".into());
        }
        if !(self.grid_resolution > 0.0) {
            return bad("grid_resolution", "must be positive".into());
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return bad("level", "must lie in (0, 1)".into());
        }
        if !self.goal.is_finite() {
            return bad("goal", "must be finite".into());
        }
        Ok(())
    }

    /// Per-component `η` used with `Z_j` when no per-centre offsets are given.
    pub fn eta_vector(&self) -> Vec<f64> {
        if let Some(eta) = &self.eta {
            return eta.clone();
        }
        match &self.rho_targets {
            Some(rho) => rho.iter().map(|&r| eta_from_rho(r).expect("validated")).collect(),
            None => vec![0.0; self.p],
        }
    }

    pub fn xi_sd_vector(&self) -> Vec<f64> {
        self.xi_sd.clone().unwrap_or_else(|| vec![1.0; self.p])
    }

    /// Centre weights from planned sample sizes or equal.
    pub fn centre_weights(&self) -> Vec<f64> {
        match self.weights {
            WeightScheme::Equal => vec![1.0 / self.j as f64; self.j],
            WeightScheme::FromData => {
                let totals: Vec<f64> = self
                    .n_by_centre_stage
                    .iter()
                    .map(|r| r.iter().sum::<usize>() as f64)
                    .collect();
                let n: f64 = totals.iter().sum();
                totals.iter().map(|t| t / n).collect()
            }
        }
    }

    /// The optimization problem with the true coefficients for given centre
    /// effects and no stage effect.
    pub fn problem(&self, gamma: Vec<f64>) -> OptimizationProblem {
        OptimizationProblem {
            cost: self.cost.clone(),
            goal: self.goal,
            direction: self.direction,
            bounds: self.bounds.clone(),
            weights: self.centre_weights(),
            beta_a: self.beta_true.clone(),
            gamma,
            eta: vec![0.0; self.k - 1],
            include_eta: false,
            estimand: self.estimand,
            lower_bound_policy: self.lower_bound_policy,
        }
    }
}

pub(crate) fn parse_error(text: &str, e: toml::de::Error) -> LagoError {
    let line = e
        .span()
        .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
        .unwrap_or(0);
    LagoError::Parse {
        line,
        message: e.message().to_string(),
    }
}

fn parse_value(key: &str, raw: &str) -> Result<toml::Value> {
    let doc: toml::Table = format!("v = {raw}")
        .parse()
        .or_else(|_| format!("v = {}", toml::Value::String(raw.to_string())).parse())
        .map_err(|e: toml::de::Error| LagoError::config(key, e.message().to_string()))?;
    Ok(doc["v"].clone())
}

fn set_dotted(doc: &mut toml::Table, key: &str, value: toml::Value) -> Result<()> {
    let mut parts = key.split('.').peekable();
    let mut table = doc;
    while let Some(part) = parts.next() {
        if parts.peek().is_none() {
            table.insert(part.to_string(), value);
            return Ok(());
        }
        table = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| LagoError::config(key, "not a section"))?;
    }
    Err(LagoError::config(key, "empty key"))
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
K = 2
J = 2
P = 2
n_by_centre_stage = [[10, 20]]
beta_true = [-1.7, -0.7]
beta_z = 2.42
rho_targets = [0.05, 0.07]
x_stage1 = [2.0, 1.5]
goal = -5.0
direction = "at_most"
bounds = [[0.0, 4.0], [0.0, 3.0]]
replicates = 3
seed = 1
cost.kind = "linear"
cost.coefficients = [1.0, 0.5]
"#;

    #[test]
    fn parses_with_defaults_and_broadcast() {
        let cfg = ScenarioConfig::from_toml(BASE).unwrap();
        assert_eq!(cfg.n_by_centre_stage, vec![vec![10, 20], vec![10, 20]]);
        assert_eq!(cfg.noise_sd, 1.0);
        assert!(cfg.use_lago);
        assert_eq!(cfg.centre_z_mode, CentreZMode::RedrawEachReplicate);
        assert!((cfg.eta_vector()[0] - 0.0501).abs() < 5e-5);
        let back = ScenarioConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn overrides_and_named_errors() {
        let cfg = ScenarioConfig::from_toml_with(
            BASE,
            &[("goal".into(), "-9".into()), ("cost.coefficients".into(), "[2.0, 1.0]".into())],
        )
        .unwrap();
        assert_eq!(cfg.goal, -9.0);
        assert_eq!(cfg.cost, CostFunction::Linear { coefficients: vec![2.0, 1.0] });

        let err = ScenarioConfig::from_toml_with(BASE, &[("rho_targets".into(), "[1.2, 0.0]".into())]).unwrap_err();
        assert!(matches!(err, LagoError::InvalidConfig { ref key, .. } if key == "rho_targets"));

        let err = ScenarioConfig::from_toml_with(BASE, &[("centre_Z_mode".into(), "fixed_list".into())]);
        assert!(err.is_ok());

        let err = ScenarioConfig::from_toml("K = 2\nJ = \n").unwrap_err();
        assert!(matches!(err, LagoError::Parse { line: 2, .. }));
    }
}
