//! Published-table comparisons: each row pairs a reported value with the
//! value achieved by the bundled scenario and a pass rule.

use lago::sim::{run_scenario, scenarios, ScenarioReport};
use lago::{LagoError, Result};

pub struct Row {
    pub label: String,
    pub published: String,
    pub achieved: String,
    pub rule: String,
    pub pass: bool,
}

fn range(label: impl Into<String>, published: f64, got: f64, lo: f64, hi: f64) -> Row {
    Row {
        label: label.into(),
        published: format!("{published:.3}"),
        achieved: format!("{got:.3}"),
        rule: format!("in [{lo}, {hi}]"),
        pass: got >= lo && got <= hi,
    }
}

fn near(label: impl Into<String>, published: f64, got: f64, tol: f64) -> Row {
    Row {
        label: label.into(),
        published: format!("{published:.3}"),
        achieved: format!("{got:.3}"),
        rule: format!("within {tol} of published"),
        pass: (got - published).abs() <= tol,
    }
}

fn abs_at_most(label: impl Into<String>, published: f64, got: f64, lim: f64) -> Row {
    Row {
        label: label.into(),
        published: format!("{published:.3}"),
        achieved: format!("{got:.3}"),
        rule: format!("|x| <= {lim}"),
        pass: got.abs() <= lim,
    }
}

fn relation(label: impl Into<String>, published: String, achieved: String, rule: &str, pass: bool) -> Row {
    Row {
        label: label.into(),
        published,
        achieved,
        rule: rule.into(),
        pass,
    }
}

fn load(name: &str, replicates: Option<usize>, lago: Option<bool>) -> Result<ScenarioReport> {
    let mut cfg = scenarios::load(name)?;
    if let Some(r) = replicates {
        cfg.replicates = r;
    }
    if let Some(l) = lago {
        cfg.use_lago = l;
    }
    Ok(run_scenario(&cfg)?.report)
}

fn failures(rows: &mut Vec<Row>, reports: &[&ScenarioReport]) {
    for r in reports {
        rows.push(relation(
            format!("{} failed replicates", r.name),
            "0".into(),
            r.failed.to_string(),
            "= 0",
            r.failed == 0,
        ));
    }
}

/// Coefficient rows for one scenario: (%RelBias, SE/EMP.SD, CP95) per component.
fn coefficient_rows(rows: &mut Vec<Row>, tag: &str, r: &ScenarioReport, published: [[f64; 3]; 2]) {
    for (c, p) in r.coefficients.iter().zip(published) {
        let b = c.component;
        rows.push(abs_at_most(format!("{tag} beta{b} %RelBias"), p[0], c.rel_bias_pct.unwrap_or(f64::NAN), 1.0));
        rows.push(range(format!("{tag} beta{b} SE/EMP.SD x100"), p[1], c.se_over_emp_sd_x100, 88.0, 112.0));
        rows.push(range(format!("{tag} beta{b} CP95"), p[2], c.cp95, 93.0, 97.0));
    }
}

fn coverage_rows(rows: &mut Vec<Row>, tag: &str, r: &ScenarioReport, published: [f64; 3]) {
    let c = &r.coverage;
    rows.push(range(format!("{tag} SetCP95"), published[0], c.set_cp95, 92.0, 98.0));
    rows.push(range(format!("{tag} SetPerc"), published[1], c.set_perc, 2.0, 6.0));
    rows.push(range(format!("{tag} BandsCP95"), published[2], c.bands_cp95, 94.0, 99.0));
}

fn rmse_order(rows: &mut Vec<Row>, tag: &str, r: &ScenarioReport, published: (f64, f64)) {
    let (a, b) = (r.optimum[0].rmse, r.optimum[r.optimum.len() - 1].rmse);
    rows.push(relation(
        format!("{tag} rMSE stage 1 -> final"),
        format!("{:.3} -> {:.3}", published.0, published.1),
        format!("{a:.3} -> {b:.3}"),
        "final <= stage 1",
        b <= a,
    ));
}

fn scenario1(name: &str, replicates: Option<usize>, rows: &mut Vec<Row>, coef: [[f64; 3]; 2]) -> Result<ScenarioReport> {
    let r = load(name, replicates.or(Some(500)), None)?;
    failures(rows, &[&r]);
    coefficient_rows(rows, name, &r, coef);
    Ok(r)
}

/// Paired LAGO and fixed-package runs of one calibrated scenario.
struct Pair {
    lago: ScenarioReport,
    fixed: ScenarioReport,
}

fn pair(name: &str, replicates: Option<usize>, rows: &mut Vec<Row>) -> Result<Pair> {
    let n = replicates.or(Some(500));
    let p = Pair {
        lago: load(name, n, Some(true))?,
        fixed: load(name, n, Some(false))?,
    };
    failures(rows, &[&p.lago, &p.fixed]);
    Ok(p)
}

fn final_rmse(r: &ScenarioReport) -> f64 {
    r.optimum.last().map(|o| o.rmse).unwrap_or(f64::NAN)
}

fn calibrated_rows(rows: &mut Vec<Row>, p: &Pair, published: &Calibrated) {
    let (l, f) = (&p.lago, &p.fixed);
    rows.push(near("stage 1 ExpectedOutRecInt", -5.69, l.stages[0].expected_out_rec_int, 0.6));
    for (tag, r, cp) in [("LAGO", l, published.cp95.0), ("fixed", f, published.cp95.1)] {
        for c in &r.coefficients {
            rows.push(range(format!("{tag} beta{} CP95", c.component), cp[c.component - 1], c.cp95, 93.0, 97.0));
        }
    }
    rows.push(near("LAGO final rMSE", published.rmse.0, final_rmse(l), 0.6));
    rows.push(near("fixed final rMSE", published.rmse.1, final_rmse(f), 0.6));
    rows.push(near("LAGO stage 2 ExpectedOutActInt", published.act.0, l.stages[1].expected_out_act_int, 0.6));
    rows.push(near("fixed stage 2 ExpectedOutActInt", published.act.1, f.stages[1].expected_out_act_int, 0.6));
    rows.push(range("LAGO SetCP95", published.set_cp95.0, l.coverage.set_cp95, 92.0, 98.0));
    rows.push(range("fixed SetCP95", published.set_cp95.1, f.coverage.set_cp95, 92.0, 98.0));
}

struct Calibrated {
    cp95: ([f64; 2], [f64; 2]),
    rmse: (f64, f64),
    act: (f64, f64),
    set_cp95: (f64, f64),
}

pub fn run(table: &str, replicates: Option<usize>) -> Result<Vec<Row>> {
    let mut rows = Vec::new();
    match table {
        "table1" => {
            let j6 = scenario1("table1_J6", replicates, &mut rows, [[0.018, 95.00, 94.80], [0.233, 101.34, 95.20]])?;
            rmse_order(&mut rows, "J=6", &j6, (0.603, 0.484));
            coverage_rows(&mut rows, "J=6", &j6, [95.30, 4.07, 96.25]);
            scenario1("table1_J10", replicates, &mut rows, [[-0.014, 96.72, 94.85], [0.238, 100.58, 94.80]])?;
            scenario1("table1_J20", replicates, &mut rows, [[0.012, 98.45, 95.35], [0.024, 99.18, 94.55]])?;
        }
        "null_tables" => {
            let r = load("null", replicates.or(Some(2000)), None)?;
            failures(&mut rows, &[&r]);
            let t = &r.tests;
            rows.push(range("alpha1", 0.049, t.alpha_individual[0], 0.04, 0.065));
            rows.push(range("alpha2", 0.059, t.alpha_individual[1], 0.04, 0.065));
            rows.push(range("alpha combined", 0.049, t.alpha_joint, 0.04, 0.065));
            for (c, published) in r.coefficients.iter().zip([98.62, 98.62]) {
                rows.push(range(format!("beta{} SE/EMP.SD x100", c.component), published, c.se_over_emp_sd_x100, 88.0, 112.0));
            }
        }
        "table3" => {
            let p = pair("extracvd_goal5", replicates, &mut rows)?;
            calibrated_rows(
                &mut rows,
                &p,
                &Calibrated {
                    cp95: ([94.5, 94.4], [95.2, 95.3]),
                    rmse: (2.44, 2.61),
                    act: (-3.37, -5.71),
                    set_cp95: (94.9, 95.4),
                },
            );
        }
        "table4" => {
            let p = pair("extracvd_goal5_lb", replicates, &mut rows)?;
            calibrated_rows(
                &mut rows,
                &p,
                &Calibrated {
                    cp95: ([94.3, 94.4], [95.2, 95.3]),
                    rmse: (1.73, 1.74),
                    act: (-6.07, -5.71),
                    set_cp95: (94.7, 95.4),
                },
            );
        }
        "table5" => {
            let p = pair("extracvd_goal9", replicates, &mut rows)?;
            calibrated_rows(
                &mut rows,
                &p,
                &Calibrated {
                    cp95: ([94.9, 95.7], [95.2, 95.3]),
                    rmse: (2.62, 3.18),
                    act: (-5.93, -5.71),
                    set_cp95: (95.2, 95.4),
                },
            );
            let (l, f) = (final_rmse(&p.lago), final_rmse(&p.fixed));
            rows.push(relation(
                "final rMSE LAGO vs fixed",
                "2.620 < 3.180".into(),
                format!("{l:.3} vs {f:.3}"),
                "LAGO < fixed",
                l < f,
            ));
            let bias = &p.lago.optimum.last().expect("stages").bias;
            rows.push(relation(
                "LAGO final x_opt bias signs",
                "-1.28, +1.25".into(),
                format!("{:+.3}, {:+.3}", bias[0], bias[1]),
                "negative, positive",
                bias[0] < 0.0 && bias[1] > 0.0,
            ));
        }
        "table6" => {
            let p = pair("extracvd_goal9_lb", replicates, &mut rows)?;
            calibrated_rows(
                &mut rows,
                &p,
                &Calibrated {
                    cp95: ([94.7, 94.2], [95.2, 95.3]),
                    rmse: (2.66, 2.77),
                    act: (-7.62, -5.71),
                    set_cp95: (94.7, 95.4),
                },
            );
            let o = p.lago.stages[1].expected_out_act_int;
            rows.push(relation("LAGO stage 2 ExpectedOutActInt", "-7.620".into(), format!("{o:.3}"), "<= -7", o <= -7.0));
        }
        "cubic_appendix" => {
            let r = load("cubic", replicates.or(Some(500)), None)?;
            failures(&mut rows, &[&r]);
            match &r.true_xopt {
                Some(x) => {
                    rows.push(near("x_opt component 1", 2.94, x[0], 0.02));
                    rows.push(near("x_opt component 2", 0.01, x[1], 0.02));
                }
                None => rows.push(relation("x_opt", "(2.94, 0.01)".into(), "varies".into(), "fixed", false)),
            }
            coefficient_rows(&mut rows, "J=6", &r, [[-0.025, 96.01, 94.95], [0.304, 100.78, 95.35]]);
            rmse_order(&mut rows, "J=6", &r, (0.616, 0.529));
            coverage_rows(&mut rows, "J=6", &r, [95.35, 4.08, 96.15]);
        }
        other => return Err(LagoError::UnknownTable(other.to_string())),
    }
    Ok(rows)
}

/// Prints the comparison; true when every row passes.
pub fn print(table: &str, rows: &[Row]) -> bool {
    println!("{table}");
    println!("{:<36} {:>16} {:>16}  {:<22} result", "metric", "published", "achieved", "rule");
    for r in rows {
        println!(
            "{:<36} {:>16} {:>16}  {:<22} {}",
            r.label,
            r.published,
            r.achieved,
            r.rule,
            if r.pass { "PASS" } else { "FAIL" }
        );
    }
    let passed = rows.iter().filter(|r| r.pass).count();
    println!("{passed} of {} checks passed", rows.len());
    passed == rows.len()
}
