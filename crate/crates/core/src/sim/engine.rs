//! Data generation and the multi-stage loop for one replicate.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::{Arm, TrialDataset, TrialRecord};
use crate::error::{LagoError, Result};
use crate::inference::{self, Grid};
use crate::model::{self, Estimand, FitOptions};
use crate::optimizer::{self, apply_lower_bounds, evaluate_cost, LowerBoundPolicy, OptimizationProblem, Recommendation};
use crate::sim::config::{CentreZMode, ScenarioConfig};
use crate::sim::rng::{stream, Purpose, SHARED};

/// Deviation scale that gives correlation `rho` between an actual component
/// and a standard-normal centre characteristic: `ρ / √(1 − ρ²)`.
pub fn eta_from_rho(rho: f64) -> Result<f64> {
    if !(rho.abs() < 1.0) {
        return Err(LagoError::RhoOutOfRange(rho));
    }
    Ok(rho / (1.0 - rho * rho).sqrt())
}

/// Centre characteristics `Z_j` for a replicate.
pub fn centre_characteristics(cfg: &ScenarioConfig, replicate: u64) -> Vec<f64> {
    match (cfg.centre_z_mode, &cfg.z_values) {
        (CentreZMode::FixedList, Some(z)) => z.clone(),
        (CentreZMode::FixedList, None) => draw_normals(&mut stream(cfg.seed, SHARED, 0, Purpose::CentreZ), cfg.j),
        (CentreZMode::RedrawEachReplicate, _) => draw_normals(&mut stream(cfg.seed, replicate, 0, Purpose::CentreZ), cfg.j),
    }
}

fn draw_normals(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// True centre effects: `gamma_true_j + β_z Z_j`.
pub fn true_centre_effects(cfg: &ScenarioConfig, z: &[f64]) -> Vec<f64> {
    let base = cfg.gamma_true.clone().unwrap_or_else(|| vec![0.0; cfg.j]);
    base.iter().zip(z).map(|(g, zj)| g + cfg.beta_z * zj).collect()
}

/// Random streams for one stage of one replicate.
pub struct StageStreams {
    xi: ChaCha8Rng,
    eps: ChaCha8Rng,
}

impl StageStreams {
    pub fn new(seed: u64, replicate: u64, stage: usize) -> Self {
        let stage = u8::try_from(stage).expect("stage index fits in a byte");
        Self {
            xi: stream(seed, replicate, stage, Purpose::Xi),
            eps: stream(seed, replicate, stage, Purpose::Epsilon),
        }
    }
}

/// Generates stage `stage` with recommended package `x`.
///
/// Each centre enrols its planned number of participants, split between
/// arms as exactly as the allocation ratio allows. Intervention participants
/// receive `x + offset_j + ξ`, which is not clamped to the box; controls
/// receive nothing.
pub fn simulate_stage(
    cfg: &ScenarioConfig,
    stage: usize,
    x: &[f64],
    z: &[f64],
    streams: &mut StageStreams,
) -> Result<TrialDataset> {
    if z.len() != cfg.j {
        return Err(LagoError::DimensionMismatch {
            what: "centre characteristics".into(),
            expected: cfg.j,
            got: z.len(),
        });
    }
    let eta = cfg.eta_vector();
    let xi_sd = cfg.xi_sd_vector();
    let gamma = true_centre_effects(cfg, z);
    let ratio = cfg.arm_ratio / (1.0 + cfg.arm_ratio);
    let mut recs = Vec::new();
    for j in 0..cfg.j {
        let offset: Vec<f64> = match &cfg.eta_by_centre {
            Some(m) => m[j].clone(),
            None => eta.iter().map(|e| e * z[j]).collect(),
        };
        let n = cfg.n_by_centre_stage[j][stage - 1];
        let n_int = (n as f64 * ratio).round() as usize;
        for i in 0..n {
            let arm = if i < n_int { Arm::Intervention } else { Arm::Control };
            let actual: Vec<f64> = match arm {
                Arm::Intervention => (0..cfg.p)
                    .map(|p| {
                        let xi: f64 = streams.xi.sample(StandardNormal);
                        x[p] + offset[p] + xi_sd[p] * xi
                    })
                    .collect(),
                Arm::Control => vec![0.0; cfg.p],
            };
            let eps: f64 = streams.eps.sample(StandardNormal);
            let effect: f64 = actual.iter().zip(&cfg.beta_true).map(|(a, b)| a * b).sum();
            recs.push(TrialRecord {
                stage,
                centre: j + 1,
                arm,
                actual,
                outcome: effect + gamma[j] + cfg.noise_sd * eps,
            });
        }
    }
    TrialDataset::new(recs, stage, cfg.j, cfg.p)
}

/// Everything recorded about one simulated trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateMetrics {
    pub replicate: u64,
    pub beta_hat: Vec<f64>,
    pub se: Vec<f64>,
    pub covered: Vec<bool>,
    pub reject_individual: Vec<bool>,
    pub reject_joint: bool,
    pub reject_delta: bool,
    /// Packages delivered in each stage (as recommended).
    pub x_recommended: Vec<Vec<f64>>,
    /// Estimated optimum after each stage; the last uses all data.
    pub xopt_by_stage: Vec<Vec<f64>>,
    pub shrunk_by_stage: Vec<bool>,
    pub true_xopt: Option<Vec<f64>>,
    /// Undefined when the true problem has no solution.
    pub set_covers_true: Option<bool>,
    pub set_fraction: f64,
    pub band_covers_all: bool,
    /// True mean under the final stage's recommended package.
    pub true_mean_at_recommended: f64,
    /// True mean under the final estimated optimum.
    pub true_mean_at_final: f64,
    /// True mean under each stage's estimated optimum.
    pub mean_opt_by_stage: Vec<f64>,
    pub cost_actual: Vec<f64>,
    pub cost_recommended: Vec<f64>,
    pub expected_out_act: Vec<f64>,
    pub expected_out_rec: Vec<f64>,
    pub expected_out_est_opt: f64,
    pub avg_obs_out: Vec<f64>,
    pub condition_number: f64,
}

/// Truth-side quantities of a replicate.
struct Truth {
    problem: OptimizationProblem,
    gamma: Vec<f64>,
    xopt: Option<Vec<f64>>,
}

impl Truth {
    // Equal-centre-weight expected outcome of a package.
    fn expected(&self, x: &[f64]) -> f64 {
        let effect: f64 = x.iter().zip(&self.problem.beta_a).map(|(a, b)| a * b).sum();
        match self.problem.estimand {
            Estimand::TreatmentEffect => effect,
            Estimand::MeanOutcome => effect + self.gamma.iter().sum::<f64>() / self.gamma.len() as f64,
        }
    }
}

/// Runs all stages of replicate `index` and evaluates it against the truth.
pub fn run_replicate(cfg: &ScenarioConfig, index: u64) -> Result<ReplicateMetrics> {
    let z = centre_characteristics(cfg, index);
    let gamma = true_centre_effects(cfg, &z);
    let truth_problem = cfg.problem(gamma.clone());
    let truth = Truth {
        xopt: optimizer::optimize(&truth_problem).ok().map(|r| r.x.components),
        problem: truth_problem,
        gamma,
    };
    let fit_opts = FitOptions { variance: cfg.variance };
    let base = cfg.problem(vec![0.0; cfg.j]);

    let mut x_rec = vec![cfg.x_stage1.clone()];
    let mut previous = Recommendation::fixed(&base, cfg.x_stage1.clone());
    let mut xopt_by_stage = Vec::with_capacity(cfg.k);
    let mut shrunk_by_stage = Vec::with_capacity(cfg.k);
    let mut data: Option<TrialDataset> = None;
    for stage in 1..=cfg.k {
        let mut streams = StageStreams::new(cfg.seed, index, stage);
        let frag = simulate_stage(cfg, stage, &x_rec[stage - 1], &z, &mut streams)?;
        match data.as_mut() {
            Some(d) => d.extend(frag)?,
            None => data = Some(frag),
        }
        if stage < cfg.k {
            let f = model::fit_with(data.as_ref().expect("data present"), fit_opts)?;
            let rec = optimizer::recommend_next_stage(&f, &base, &previous)?;
            xopt_by_stage.push(rec.x.components.clone());
            shrunk_by_stage.push(rec.shrunk_to_previous);
            if cfg.use_lago {
                x_rec.push(rec.x.components.clone());
                previous = rec;
            } else {
                x_rec.push(cfg.x_stage1.clone());
                previous = Recommendation::fixed(&base, cfg.x_stage1.clone());
            }
        }
    }
    let data = data.expect("at least one stage");
    let fit = model::fit_with(&data, fit_opts)?;
    let cov = &fit.covariance;
    let last = x_rec.last().expect("nonempty").clone();

    // final optimization, same policy as between stages
    let mut fin = base.with_fit(&fit);
    fin.include_eta = cfg.final_include_eta;
    if cfg.lower_bound_policy == LowerBoundPolicy::PreviousRecommendation {
        apply_lower_bounds(&mut fin.bounds, &last)?;
    }
    let (x_final, shrunk_final) = match optimizer::optimize(&fin) {
        Ok(r) => (r.x.components, false),
        Err(LagoError::Infeasible { .. }) => (last.clone(), true),
        Err(e) => return Err(e),
    };
    xopt_by_stage.push(x_final.clone());
    shrunk_by_stage.push(shrunk_final);

    // coefficient inference
    let z975 = crate::stats::normal_quantile(0.5 + 0.5 * cfg.level);
    let se: Vec<f64> = (0..cfg.p).map(|p| cov[(p, p)].max(0.0).sqrt()).collect();
    let beta_hat: Vec<f64> = fit.beta_a.iter().copied().collect();
    let covered = (0..cfg.p)
        .map(|p| (beta_hat[p] - cfg.beta_true[p]).abs() <= z975 * se[p])
        .collect();
    let alpha = 1.0 - cfg.level;
    let reject_individual = (1..=cfg.p)
        .map(|p| inference::wald_individual(&fit, cov, p).map(|t| t.rejects(alpha)))
        .collect::<Result<Vec<_>>>()?;
    let reject_joint = inference::wald_joint(&fit, cov)?.rejects(alpha);
    let reject_delta = inference::delta_test(&data)?.rejects(alpha);

    // confidence set and band on the full box
    let set_problem = base.with_fit(&fit);
    let set = inference::confidence_set(&fit, cov, &set_problem, cfg.grid_resolution, cfg.level)?;
    let set_covers_true = match &truth.xopt {
        Some(x) => Some(inference::in_confidence_set(&fit, cov, &set_problem, x, cfg.level)?),
        None => None,
    };
    let grid = Grid::over_box(&cfg.bounds, cfg.grid_resolution)?;
    let band = inference::confidence_band(&fit, cov, &base.weights, &grid, cfg.level, cfg.estimand)?;
    let mut band_truth = truth.problem.clone();
    band_truth.include_eta = true;
    let band_covers_all = grid
        .points()
        .zip(band.lower.iter().zip(&band.upper))
        .all(|(x, (&lo, &hi))| {
            let m = band_truth.mean(&x);
            lo <= m && m <= hi
        });

    // per-stage delivery summaries
    let mut cost_actual = vec![0.0; cfg.k];
    let mut avg_obs_out = vec![0.0; cfg.k];
    let mut effect_sum = vec![vec![0.0; cfg.j]; cfg.k];
    let mut treated = vec![vec![0usize; cfg.j]; cfg.k];
    for r in data.records().iter().filter(|r| r.arm == Arm::Intervention) {
        let (k, j) = (r.stage - 1, r.centre - 1);
        cost_actual[k] += evaluate_cost(&cfg.cost, &r.actual);
        avg_obs_out[k] += r.outcome;
        effect_sum[k][j] += r.actual.iter().zip(&cfg.beta_true).map(|(a, b)| a * b).sum::<f64>();
        treated[k][j] += 1;
    }
    let mut expected_out_act = vec![0.0; cfg.k];
    for k in 0..cfg.k {
        let n: usize = treated[k].iter().sum();
        cost_actual[k] /= n as f64;
        avg_obs_out[k] /= n as f64;
        let centre_means: f64 = (0..cfg.j).map(|j| effect_sum[k][j] / treated[k][j] as f64).sum();
        expected_out_act[k] = truth.expected(&vec![0.0; cfg.p]) + centre_means / cfg.j as f64;
    }

    Ok(ReplicateMetrics {
        replicate: index,
        beta_hat,
        se,
        covered,
        reject_individual,
        reject_joint,
        reject_delta,
        cost_recommended: x_rec.iter().map(|x| evaluate_cost(&cfg.cost, x)).collect(),
        expected_out_rec: x_rec.iter().map(|x| truth.expected(x)).collect(),
        true_mean_at_recommended: truth.problem.mean(&last),
        true_mean_at_final: truth.problem.mean(&x_final),
        mean_opt_by_stage: xopt_by_stage.iter().map(|x| truth.problem.mean(x)).collect(),
        expected_out_est_opt: truth.expected(&x_final),
        x_recommended: x_rec,
        xopt_by_stage,
        shrunk_by_stage,
        true_xopt: truth.xopt,
        set_covers_true,
        set_fraction: set.set_perc / 100.0,
        band_covers_all,
        cost_actual,
        expected_out_act,
        avg_obs_out,
        condition_number: fit.condition_number,
    })
}
