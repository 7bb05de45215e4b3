//! File formats: participant CSV, analysis report JSON, grid CSVs and the
//! per-replicate table.
//!
//! Floats are written in their shortest round-trip decimal form, which never
//! needs more than 17 significant digits and reads back bit-identically.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::{Arm, TrialDataset, TrialRecord};
use crate::design::Layout;
use crate::error::{LagoError, Result};
use crate::inference::{ConfidenceBand, ConfidenceSet, Interval, TestResult};
use crate::model::ModelFit;
use crate::sim::ReplicateMetrics;

/// Reads `stage,centre,arm,a1..aP,y`. Line numbers in errors count the
/// header as line 1.
pub fn read_dataset<R: Read>(reader: R) -> Result<TrialDataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| LagoError::Parse { line: 1, message: e.to_string() })?
        .clone();
    let p = check_header(&header)?;
    let mut records = Vec::new();
    let mut problems = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| LagoError::Parse { line, message: e.to_string() })?;
        if row.len() != p + 4 {
            return Err(LagoError::Parse {
                line,
                message: format!("expected {} fields, found {}", p + 4, row.len()),
            });
        }
        let int = |idx: usize, what: &str| -> Result<usize> {
            row[idx].parse::<usize>().map_err(|_| LagoError::Parse {
                line,
                message: format!("{what} '{}' is not a positive integer", &row[idx]),
            })
        };
        let float = |idx: usize| -> Result<f64> {
            row[idx]
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| LagoError::Parse {
                    line,
                    message: format!("'{}' in column {} is not a finite number", &row[idx], &header[idx]),
                })
        };
        let stage = int(0, "stage")?;
        let centre = int(1, "centre")?;
        let arm = match &row[2] {
            "1" => Arm::Intervention,
            "0" => Arm::Control,
            other => {
                return Err(LagoError::Parse {
                    line,
                    message: format!("arm '{other}' must be 1 (intervention) or 0 (control)"),
                })
            }
        };
        let actual = (0..p).map(|q| float(3 + q)).collect::<Result<Vec<_>>>()?;
        let outcome = float(3 + p)?;
        if stage == 0 {
            problems.push(format!("line {line}: stage must be at least 1"));
        }
        if centre == 0 {
            problems.push(format!("line {line}: centre must be at least 1"));
        }
        if arm == Arm::Control && actual.iter().any(|&a| a != 0.0) {
            problems.push(format!("line {line}: control row has nonzero intervention values"));
        }
        records.push(TrialRecord {
            stage,
            centre,
            arm,
            actual,
            outcome,
        });
    }
    if !problems.is_empty() {
        return Err(LagoError::Schema(problems));
    }
    if records.is_empty() {
        return Err(LagoError::EmptyDataset);
    }
    TrialDataset::from_records(records)
}

fn check_header(h: &csv::StringRecord) -> Result<usize> {
    let cols: Vec<&str> = h.iter().collect();
    let bad = |msg: String| Err(LagoError::Parse { line: 1, message: msg });
    if cols.len() < 5 {
        return bad(format!("header needs stage,centre,arm,a1..aP,y; found {}", cols.join(",")));
    }
    let p = cols.len() - 4;
    let mut expected = vec!["stage".to_string(), "centre".into(), "arm".into()];
    expected.extend((1..=p).map(|i| format!("a{i}")));
    expected.push("y".into());
    if cols.iter().zip(&expected).any(|(a, b)| a != b) {
        return bad(format!("header must be {}; found {}", expected.join(","), cols.join(",")));
    }
    Ok(p)
}

pub fn read_dataset_file(path: &Path) -> Result<TrialDataset> {
    read_dataset(std::fs::File::open(path)?)
}

pub fn write_dataset<W: Write>(ds: &TrialDataset, mut w: W) -> Result<()> {
    let mut header = vec!["stage".to_string(), "centre".into(), "arm".into()];
    header.extend((1..=ds.components()).map(|i| format!("a{i}")));
    header.push("y".into());
    writeln!(w, "{}", header.join(","))?;
    for r in ds.records() {
        let mut line = format!("{},{},{}", r.stage, r.centre, r.arm.code());
        for a in &r.actual {
            line.push_str(&format!(",{a}"));
        }
        line.push_str(&format!(",{}", r.outcome));
        writeln!(w, "{line}")?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestsBlock {
    pub individual: Vec<TestResult>,
    pub joint: TestResult,
    /// Absent when only one arm is present.
    pub delta: Option<TestResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CiBlock {
    pub x: Vec<f64>,
    pub weights: Vec<f64>,
    #[serde(flatten)]
    pub interval: Interval,
}

/// JSON analysis report for one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    /// Coefficients in design order (components, centres, stages 2..K).
    pub beta: Vec<f64>,
    pub se: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
    pub tests: TestsBlock,
    pub ci_mean: Option<CiBlock>,
    pub set_mask_file: Option<String>,
    pub band_file: Option<String>,
    pub names: Vec<String>,
    #[serde(rename = "P")]
    pub p: usize,
    #[serde(rename = "J")]
    pub j: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub n_by_centre_stage: Vec<Vec<usize>>,
    pub condition_number: f64,
    pub optimum: Option<crate::optimizer::Recommendation>,
    pub set_perc: Option<f64>,
}

impl AnalysisReport {
    /// Rebuilds the fitted model (without residuals).
    pub fn to_fit(&self) -> Result<ModelFit> {
        let layout = Layout {
            p: self.p,
            j: self.j,
            k: self.k,
        };
        let d = layout.ncols();
        if self.beta.len() != d || self.cov.len() != d || self.cov.iter().any(|r| r.len() != d) {
            return Err(LagoError::DimensionMismatch {
                what: "report coefficients".into(),
                expected: d,
                got: self.beta.len(),
            });
        }
        let cov = DMatrix::from_fn(d, d, |i, j| self.cov[i][j]);
        Ok(ModelFit::from_parts(
            layout,
            DVector::from_vec(self.beta.clone()),
            cov,
            DVector::zeros(0),
            self.condition_number,
            self.n_by_centre_stage.clone(),
        ))
    }
}

pub fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub fn write_set_csv<W: Write>(set: &ConfidenceSet, mut w: W) -> Result<()> {
    let p = set.grid.axes.len();
    let mut header: Vec<String> = (1..=p).map(|i| format!("x{i}")).collect();
    header.push("in_set".into());
    writeln!(w, "{}", header.join(","))?;
    for (x, &m) in set.grid.points().zip(&set.mask) {
        writeln!(w, "{},{}", join(&x), u8::from(m))?;
    }
    Ok(())
}

pub fn write_band_csv<W: Write>(band: &ConfidenceBand, mut w: W) -> Result<()> {
    let p = band.grid.axes.len();
    let mut header: Vec<String> = (1..=p).map(|i| format!("x{i}")).collect();
    header.extend(["lower".to_string(), "upper".to_string()]);
    writeln!(w, "{}", header.join(","))?;
    for (i, x) in band.grid.points().enumerate() {
        writeln!(w, "{},{},{}", join(&x), band.lower[i], band.upper[i])?;
    }
    Ok(())
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One row per replicate, vectors spread over numbered columns.
pub fn write_replicates_csv<W: Write>(rows: &[ReplicateMetrics], p: usize, k: usize, mut w: W) -> Result<()> {
    let mut h = vec!["replicate".to_string()];
    for q in 1..=p {
        h.extend([format!("beta_hat{q}"), format!("se{q}"), format!("covered{q}"), format!("reject{q}")]);
    }
    h.extend(["reject_joint".into(), "reject_delta".into()]);
    for s in 1..=k {
        for q in 1..=p {
            h.push(format!("x_rec_s{s}_{q}"));
        }
        for q in 1..=p {
            h.push(format!("xopt_s{s}_{q}"));
        }
        h.extend([
            format!("shrunk_s{s}"),
            format!("mean_opt_s{s}"),
            format!("cost_act_s{s}"),
            format!("cost_rec_s{s}"),
            format!("exp_out_act_s{s}"),
            format!("exp_out_rec_s{s}"),
            format!("avg_obs_out_s{s}"),
        ]);
    }
    for q in 1..=p {
        h.push(format!("true_xopt{q}"));
    }
    h.extend(
        [
            "set_covers_true",
            "set_fraction",
            "band_covers_all",
            "true_mean_at_recommended",
            "true_mean_at_final",
            "expected_out_est_opt",
            "condition_number",
        ]
        .map(String::from),
    );
    writeln!(w, "{}", h.join(","))?;

    for r in rows {
        let mut f = vec![r.replicate.to_string()];
        for q in 0..p {
            f.extend([
                r.beta_hat[q].to_string(),
                r.se[q].to_string(),
                u8::from(r.covered[q]).to_string(),
                u8::from(r.reject_individual[q]).to_string(),
            ]);
        }
        f.extend([u8::from(r.reject_joint).to_string(), u8::from(r.reject_delta).to_string()]);
        for s in 0..k {
            f.extend(r.x_recommended[s].iter().map(|v| v.to_string()));
            f.extend(r.xopt_by_stage[s].iter().map(|v| v.to_string()));
            f.extend([
                u8::from(r.shrunk_by_stage[s]).to_string(),
                r.mean_opt_by_stage[s].to_string(),
                r.cost_actual[s].to_string(),
                r.cost_recommended[s].to_string(),
                r.expected_out_act[s].to_string(),
                r.expected_out_rec[s].to_string(),
                r.avg_obs_out[s].to_string(),
            ]);
        }
        for q in 0..p {
            f.push(opt(r.true_xopt.as_ref().map(|x| x[q])));
        }
        f.extend([
            r.set_covers_true.map(|b| u8::from(b).to_string()).unwrap_or_default(),
            r.set_fraction.to_string(),
            u8::from(r.band_covers_all).to_string(),
            r.true_mean_at_recommended.to_string(),
            r.true_mean_at_final.to_string(),
            r.expected_out_est_opt.to_string(),
            r.condition_number.to_string(),
        ]);
        writeln!(w, "{}", f.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_valid_csv() {
        let text = "stage,centre,arm,a1,a2,y\n1,1,1,2.5,1,-3.2\n1,1,0,0,0,0.4\n2,2,1,1,0.5,-1\n";
        let ds = read_dataset(text.as_bytes()).unwrap();
        assert_eq!((ds.n(), ds.stages(), ds.centres(), ds.components()), (3, 2, 2, 2));
        assert_eq!(ds.records()[0].actual, vec![2.5, 1.0]);
    }

    #[test]
    fn reports_line_numbers_and_schema() {
        let err = read_dataset("stage,centre,arm,a1,y\n1,1,1,2,0\n1,x,0,0,0\n".as_bytes()).unwrap_err();
        assert!(matches!(err, LagoError::Parse { line: 3, .. }), "{err}");
        let err = read_dataset("stage,centre,arm,a1,y\n1,1,0,0.5,0\n1,1,0,0,0\n2,1,0,1,0\n".as_bytes()).unwrap_err();
        match err {
            LagoError::Schema(v) => {
                assert_eq!(v.len(), 2);
                assert!(v[0].starts_with("line 2"));
                assert!(v[1].starts_with("line 4"));
            }
            other => panic!("{other}"),
        }
        let err = read_dataset("stage,centre,treat,a1,y\n".as_bytes()).unwrap_err();
        assert!(matches!(err, LagoError::Parse { line: 1, .. }));
        let err = read_dataset("stage,centre,arm,a1,y\n1,1,2,0,0\n".as_bytes()).unwrap_err();
        assert!(matches!(err, LagoError::Parse { line: 2, .. }));
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let text = "stage,centre,arm,a1,y\n1,1,1,0.1,-0.30000000000000004\n2,1,0,0,1e-300\n";
        let ds = read_dataset(text.as_bytes()).unwrap();
        let mut out = Vec::new();
        write_dataset(&ds, &mut out).unwrap();
        let back = read_dataset(out.as_slice()).unwrap();
        assert_eq!(back, ds);
    }
}
