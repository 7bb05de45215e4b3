use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use lago::analysis::{analyze, parse_package_json, recommend_from_report, AnalysisConfig, BAND_FILE, SET_FILE};
use lago::io::{read_dataset_file, write_band_csv, write_replicates_csv, write_set_csv, AnalysisReport};
use lago::sim::{run_scenario, scenarios, ScenarioConfig};
use lago::{optimize, LagoError};

mod reproduce;

#[derive(Parser)]
#[command(name = "lago", version, about = "Learn-As-you-GO trial analysis, optimization and simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a participant-level dataset and write the analysis report.
    Fit {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the Wald and arm-difference tests for a dataset.
    Test {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Cost-minimizing package for coefficients given in the config.
    Optimize {
        #[arg(long)]
        config: PathBuf,
    },
    /// Next-stage package from a saved report and the previous package.
    Recommend {
        #[arg(long)]
        fit: PathBuf,
        #[arg(long)]
        previous: PathBuf,
        #[arg(long)]
        config: PathBuf,
    },
    /// Run a simulation scenario (a TOML file or a bundled scenario name).
    Simulate {
        #[arg(long)]
        scenario: String,
        #[arg(long)]
        replicates: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Override a config key, e.g. `--set goal=-9` (repeatable).
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Rerun a published table with the bundled scenarios and compare.
    Reproduce {
        #[arg(long)]
        table: String,
        #[arg(long)]
        replicates: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 3 } else { 2 })
        }
    }
}

fn run(cmd: Command) -> lago::Result<ExitCode> {
    match cmd {
        Command::Fit { data, config, out } => cmd_fit(&data, config.as_deref(), &out),
        Command::Test { data, config } => cmd_test(&data, config.as_deref()),
        Command::Optimize { config } => {
            let pr = load_config(Some(&config))?.standalone_problem()?;
            let rec = optimize(&pr)?;
            println!("{}", serde_json::to_string_pretty(&rec)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Recommend { fit, previous, config } => {
            let report: AnalysisReport = serde_json::from_str(&fs::read_to_string(fit)?)?;
            let prev = parse_package_json(&fs::read_to_string(previous)?)?;
            let rec = recommend_from_report(&report, &load_config(Some(&config))?, prev)?;
            println!("{}", serde_json::to_string_pretty(&rec)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Simulate {
            scenario,
            replicates,
            seed,
            out,
            overrides,
        } => cmd_simulate(&scenario, replicates, seed, &out, &overrides),
        Command::Reproduce { table, replicates } => {
            let rows = reproduce::run(&table, replicates)?;
            let ok = reproduce::print(&table, &rows);
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
    }
}

fn load_config(path: Option<&Path>) -> lago::Result<AnalysisConfig> {
    match path {
        Some(p) => AnalysisConfig::from_toml(&fs::read_to_string(p)?),
        None => Ok(AnalysisConfig::default()),
    }
}

fn write_metadata(out: &Path, command: &str, inputs: serde_json::Value) -> lago::Result<()> {
    let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let meta = serde_json::json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "created_unix_seconds": secs,
        "inputs": inputs,
    });
    fs::write(out.join("metadata.json"), serde_json::to_string_pretty(&meta)? + "\n")?;
    Ok(())
}

fn cmd_fit(data: &Path, config: Option<&Path>, out: &Path) -> lago::Result<ExitCode> {
    let ds = read_dataset_file(data)?;
    let cfg = load_config(config)?;
    let a = analyze(&ds, &cfg)?;
    fs::create_dir_all(out)?;
    fs::write(out.join("report.json"), serde_json::to_string_pretty(&a.report)? + "\n")?;
    if let Some(set) = &a.set {
        write_set_csv(set, BufWriter::new(fs::File::create(out.join(SET_FILE))?))?;
    }
    if let Some(band) = &a.band {
        write_band_csv(band, BufWriter::new(fs::File::create(out.join(BAND_FILE))?))?;
    }
    write_metadata(
        out,
        "fit",
        serde_json::json!({ "data": data, "config": config }),
    )?;

    let r = &a.report;
    println!("n = {}, centres = {}, stages = {}", a.fit.n(), r.j, r.k);
    println!("{:<10} {:>12} {:>12} {:>9}", "term", "estimate", "se", "z");
    for (i, name) in r.names.iter().enumerate() {
        println!("{:<10} {:>12.4} {:>12.4} {:>9.3}", name, r.beta[i], r.se[i], r.beta[i] / r.se[i]);
    }
    if let Some(opt) = &r.optimum {
        println!("optimum: {:.4?} (cost {:.4})", opt.x.components, opt.cost);
    }
    if let Some(ci) = &r.ci_mean {
        println!(
            "mean outcome at {:.4?}: {:.4} ({:.4}, {:.4})",
            ci.x, ci.interval.estimate, ci.interval.lower, ci.interval.upper
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_test(data: &Path, config: Option<&Path>) -> lago::Result<ExitCode> {
    let ds = read_dataset_file(data)?;
    let cfg = load_config(config)?;
    let a = analyze(&ds, &cfg)?;
    let t = &a.report.tests;
    println!("{:<16} {:>10} {:>4} {:>10}", "hypothesis", "statistic", "df", "p");
    for (i, r) in t.individual.iter().enumerate() {
        println!("{:<16} {:>10.4} {:>4} {:>10.4}", format!("beta{} = 0", i + 1), r.statistic, r.df, r.p_value);
    }
    println!("{:<16} {:>10.4} {:>4} {:>10.4}", "all beta = 0", t.joint.statistic, t.joint.df, t.joint.p_value);
    match &t.delta {
        Some(d) => println!("{:<16} {:>10.4} {:>4} {:>10.4}", "no arm difference", d.statistic, d.df, d.p_value),
        None => println!("no arm difference: not testable (one arm only)"),
    }
    Ok(ExitCode::SUCCESS)
}

fn scenario_source(spec: &str) -> lago::Result<String> {
    let path = Path::new(spec);
    if path.exists() {
        return Ok(fs::read_to_string(path)?);
    }
    scenarios::source(spec).map(str::to_string).ok_or_else(|| LagoError::InvalidConfig {
        key: "scenario".into(),
        reason: format!(
            "'{spec}' is neither a file nor a bundled scenario ({})",
            scenarios::names().collect::<Vec<_>>().join(", ")
        ),
    })
}

fn cmd_simulate(
    scenario: &str,
    replicates: Option<usize>,
    seed: Option<u64>,
    out: &Path,
    overrides: &[String],
) -> lago::Result<ExitCode> {
    let mut pairs = overrides
        .iter()
        .map(|o| {
            o.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| LagoError::InvalidConfig {
                    key: o.clone(),
                    reason: "overrides are written KEY=VALUE".into(),
                })
        })
        .collect::<lago::Result<Vec<_>>>()?;
    if let Some(r) = replicates {
        pairs.push(("replicates".into(), r.to_string()));
    }
    if let Some(s) = seed {
        pairs.push(("seed".into(), s.to_string()));
    }
    let cfg = ScenarioConfig::from_toml_with(&scenario_source(scenario)?, &pairs)?;
    let outcome = run_scenario(&cfg)?;
    fs::create_dir_all(out)?;
    fs::write(out.join("report.json"), serde_json::to_string_pretty(&outcome.report)? + "\n")?;
    write_replicates_csv(
        &outcome.metrics,
        cfg.p,
        cfg.k,
        BufWriter::new(fs::File::create(out.join("replicates.csv"))?),
    )?;
    write_metadata(out, "simulate", serde_json::json!({ "scenario": scenario, "overrides": overrides }))?;

    let r = &outcome.report;
    println!("{}: {} of {} replicates completed", r.name, r.completed, r.replicates);
    for c in &r.coefficients {
        println!(
            "beta{}: mean {:.4}, CP95 {:.1}%, SE/EMP.SD x100 {:.1}",
            c.component, c.mean_estimate, c.cp95, c.se_over_emp_sd_x100
        );
    }
    for f in &r.failures {
        eprintln!("replicate {} failed: {}", f.replicate, f.error);
    }
    Ok(if r.failed == 0 { ExitCode::SUCCESS } else { ExitCode::from(3) })
}
