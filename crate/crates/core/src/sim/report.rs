//! Running many replicates and reducing them to table metrics.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::sim::config::ScenarioConfig;
use crate::sim::engine::{run_replicate, ReplicateMetrics};
use crate::stats::quantile_type7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSummary {
    pub component: usize,
    pub true_value: f64,
    pub mean_estimate: f64,
    pub bias: f64,
    /// `100·bias/β*`; absent when the true value is zero.
    pub rel_bias_pct: Option<f64>,
    pub bias_x1000: f64,
    pub mean_se: f64,
    pub emp_sd: f64,
    pub se_over_emp_sd_x100: f64,
    /// Percent of intervals covering the true value.
    pub cp95: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimumSummary {
    pub stage: usize,
    /// Mean of `x̂ − x*` per component.
    pub bias: Vec<f64>,
    /// `sqrt(mean ‖x̂ − x*‖²)`
    pub rmse: f64,
    /// Percent of replicates where the search fell back to the previous package.
    pub shrunk_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageSummary {
    pub stage: usize,
    pub mean_cost_act: f64,
    pub mean_cost_rec: f64,
    pub expected_out_act_int: f64,
    pub expected_out_rec_int: f64,
    pub avg_obs_out: f64,
    /// Mean and (2.5%, 97.5%) quantiles of the true mean under this stage's
    /// estimated optimum.
    pub mean_opt: (f64, f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageSummary {
    /// Quantiles (2.5%, 97.5%) of the true mean under the last recommended package.
    pub true_opt1: (f64, f64),
    /// Same under the final estimated optimum.
    pub true_opt2: (f64, f64),
    pub set_cp95: f64,
    pub set_perc: f64,
    pub bands_cp95: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestSummary {
    pub alpha_individual: Vec<f64>,
    pub alpha_joint: f64,
    pub alpha_delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedReplicate {
    pub replicate: u64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub name: String,
    pub replicates: usize,
    pub completed: usize,
    pub failed: usize,
    pub failures: Vec<FailedReplicate>,
    pub true_xopt: Option<Vec<f64>>,
    pub coefficients: Vec<CoefficientSummary>,
    pub optimum: Vec<OptimumSummary>,
    pub coverage: CoverageSummary,
    pub tests: TestSummary,
    pub stages: Vec<StageSummary>,
    pub expected_out_est_opt_int: f64,
}

pub struct ScenarioOutcome {
    pub report: ScenarioReport,
    pub metrics: Vec<ReplicateMetrics>,
}

/// Runs every replicate (in parallel) and aggregates in index order.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioOutcome> {
    cfg.validate()?;
    let results: Vec<(u64, Result<ReplicateMetrics>)> = (0..cfg.replicates as u64)
        .into_par_iter()
        .map(|i| (i, run_replicate(cfg, i)))
        .collect();
    let mut metrics = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (i, r) in results {
        match r {
            Ok(m) => metrics.push(m),
            Err(e) => failures.push(FailedReplicate {
                replicate: i,
                error: e.to_string(),
            }),
        }
    }
    let report = aggregate(cfg, &metrics, failures);
    Ok(ScenarioOutcome { report, metrics })
}

fn mean(v: impl IntoIterator<Item = f64>) -> f64 {
    let (s, n) = v.into_iter().fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

fn sd(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return f64::NAN;
    }
    let m = mean(v.iter().copied());
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

fn pct(flags: impl IntoIterator<Item = bool>) -> f64 {
    100.0 * mean(flags.into_iter().map(|b| if b { 1.0 } else { 0.0 }))
}

fn rate(flags: impl IntoIterator<Item = bool>) -> f64 {
    pct(flags) / 100.0
}

pub fn aggregate(cfg: &ScenarioConfig, m: &[ReplicateMetrics], failures: Vec<FailedReplicate>) -> ScenarioReport {
    let coefficients = (0..cfg.p)
        .map(|p| {
            let est: Vec<f64> = m.iter().map(|r| r.beta_hat[p]).collect();
            let truth = cfg.beta_true[p];
            let mean_est = mean(est.iter().copied());
            let bias = mean_est - truth;
            let mean_se = mean(m.iter().map(|r| r.se[p]));
            let emp_sd = sd(&est);
            CoefficientSummary {
                component: p + 1,
                true_value: truth,
                mean_estimate: mean_est,
                bias,
                rel_bias_pct: (truth != 0.0).then(|| 100.0 * bias / truth),
                bias_x1000: 1000.0 * bias,
                mean_se,
                emp_sd,
                se_over_emp_sd_x100: 100.0 * mean_se / emp_sd,
                cp95: pct(m.iter().map(|r| r.covered[p])),
            }
        })
        .collect();

    // optimum error against each replicate's own truth
    let with_truth: Vec<&ReplicateMetrics> = m.iter().filter(|r| r.true_xopt.is_some()).collect();
    let optimum = (0..cfg.k)
        .map(|k| {
            let diffs: Vec<Vec<f64>> = with_truth
                .iter()
                .map(|r| {
                    let t = r.true_xopt.as_ref().expect("filtered");
                    r.xopt_by_stage[k].iter().zip(t).map(|(a, b)| a - b).collect()
                })
                .collect();
            OptimumSummary {
                stage: k + 1,
                bias: (0..cfg.p).map(|p| mean(diffs.iter().map(|d| d[p]))).collect(),
                rmse: mean(diffs.iter().map(|d| d.iter().map(|v| v * v).sum::<f64>())).sqrt(),
                shrunk_pct: pct(m.iter().map(|r| r.shrunk_by_stage[k])),
            }
        })
        .collect();

    let rec: Vec<f64> = m.iter().map(|r| r.true_mean_at_recommended).collect();
    let fin: Vec<f64> = m.iter().map(|r| r.true_mean_at_final).collect();
    let coverage = CoverageSummary {
        true_opt1: (quantile_type7(&rec, 0.025), quantile_type7(&rec, 0.975)),
        true_opt2: (quantile_type7(&fin, 0.025), quantile_type7(&fin, 0.975)),
        set_cp95: pct(m.iter().filter_map(|r| r.set_covers_true)),
        set_perc: 100.0 * mean(m.iter().map(|r| r.set_fraction)),
        bands_cp95: pct(m.iter().map(|r| r.band_covers_all)),
    };

    let tests = TestSummary {
        alpha_individual: (0..cfg.p).map(|p| rate(m.iter().map(|r| r.reject_individual[p]))).collect(),
        alpha_joint: rate(m.iter().map(|r| r.reject_joint)),
        alpha_delta: rate(m.iter().map(|r| r.reject_delta)),
    };

    let stages = (0..cfg.k)
        .map(|k| {
            let opt: Vec<f64> = m.iter().map(|r| r.mean_opt_by_stage[k]).collect();
            StageSummary {
                stage: k + 1,
                mean_cost_act: mean(m.iter().map(|r| r.cost_actual[k])),
                mean_cost_rec: mean(m.iter().map(|r| r.cost_recommended[k])),
                expected_out_act_int: mean(m.iter().map(|r| r.expected_out_act[k])),
                expected_out_rec_int: mean(m.iter().map(|r| r.expected_out_rec[k])),
                avg_obs_out: mean(m.iter().map(|r| r.avg_obs_out[k])),
                mean_opt: (
                    mean(opt.iter().copied()),
                    quantile_type7(&opt, 0.025),
                    quantile_type7(&opt, 0.975),
                ),
            }
        })
        .collect();

    // with fixed centre characteristics every replicate shares one optimum
    let true_xopt = match m.first().and_then(|r| r.true_xopt.clone()) {
        Some(x) if m.iter().all(|r| r.true_xopt.as_ref() == Some(&x)) => Some(x),
        _ => None,
    };

    ScenarioReport {
        name: cfg.name.clone(),
        replicates: cfg.replicates,
        completed: m.len(),
        failed: failures.len(),
        failures,
        true_xopt,
        coefficients,
        optimum,
        coverage,
        tests,
        stages,
        expected_out_est_opt_int: mean(m.iter().map(|r| r.expected_out_est_opt)),
    }
}
