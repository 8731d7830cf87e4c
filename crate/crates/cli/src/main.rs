use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use promowall::analysis::{self, CheckStatus};
use promowall::calibration::calibrate;
use promowall::config::{apply_overrides, parse_override, Experiment};
use promowall::engine::run_experiment;
use promowall::output::{self, AGENT_OUTCOMES_FILE, CONFIG_FILE, CURVES_FILE, SUMMARY_FILE, SWEEP_FILE};
use promowall::sweep::{run_sweep, write_sweep, SweepAxis, FIDELITY_LABEL};
use promowall::{Error, ScenarioKind};

const EXIT_INVALID: u8 = 1;
const EXIT_AUDIT_FAILED: u8 = 2;

#[derive(Parser)]
#[command(name = "promowall", version, about = "Progression-regime dropout simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (JSON). Defaults to the built-in config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Config override, `dotted.key=value`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run every configured scenario and write the run directory.
    Simulate {
        #[command(flatten)]
        run: RunArgs,
        /// Run replications one after another instead of in parallel.
        #[arg(long)]
        sequential: bool,
    },
    /// Fit the hazard and stress parameters to the empirical curve.
    Calibrate {
        #[command(flatten)]
        run: RunArgs,
        /// Acceptance threshold on RMSE.
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Check a run directory for internal consistency.
    Audit { dir: PathBuf },
    /// Recompute summary and curves from the agent outcomes file.
    Report {
        dir: PathBuf,
        /// Also write SVG figures.
        #[arg(long)]
        svg: bool,
    },
    /// Re-run reduced-replication experiments over a parameter grid.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// `dotted.key=v1,v2,...`. Repeat for a cartesian product.
        #[arg(long = "param", value_name = "KEY=V1,V2", required = true)]
        params: Vec<String>,
    },
}

fn load_experiment(run: &RunArgs) -> Result<Experiment, Error> {
    let base = match &run.config {
        Some(p) => Experiment::from_path(p)?,
        None => Experiment::builtin_default(),
    };
    let mut overrides = run
        .overrides
        .iter()
        .map(|s| parse_override(s))
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(seed) = run.seed {
        overrides.push(("master_seed".into(), Value::from(seed)));
    }
    if overrides.is_empty() {
        return Ok(base);
    }
    base.with_config(apply_overrides(&base.config, &overrides)?)
}

fn print_summary(rows: &[analysis::ScenarioSummary]) {
    println!(
        "{:<22} {:>8} {:>8} {:>8} {:>8} {:>8}",
        "scenario", "dropout", "grad", "gap", "debt", "remedial"
    );
    for s in rows {
        println!(
            "{:<22} {:>8.3} {:>8.3} {:>8.3} {:>8.2} {:>8.2}",
            s.scenario.label(),
            s.overall_dropout_rate,
            s.overall_graduation_rate,
            s.equity_gap_low_vs_high_resilience,
            s.mean_final_debt,
            s.mean_remedial_acceptances
        );
    }
}

fn simulate(run: &RunArgs, sequential: bool) -> Result<ExitCode, Error> {
    let exp = load_experiment(run)?;
    let start = Instant::now();
    let result = run_experiment(&exp, !sequential)?;
    let files = output::write_run(&run.out, &exp, &result, None)?;
    let summary = output::read_summary(output::open_file(&files.summary)?)?;
    print_summary(&summary);
    eprintln!(
        "{} agent records written to {} in {:.1}s",
        result.agent_count(),
        run.out.display(),
        start.elapsed().as_secs_f64()
    );
    Ok(ExitCode::SUCCESS)
}

fn run_calibration(run: &RunArgs, tolerance: Option<f64>) -> Result<ExitCode, Error> {
    let exp = load_experiment(run)?;
    let mut settings = exp.config.calibration.clone();
    if let Some(t) = tolerance {
        settings.tolerance = t;
    }
    let start = Instant::now();
    let result = calibrate(&exp, &settings)?;
    output::write_calibration(&run.out, &exp, &result)?;
    let b = &result.best;
    println!(
        "best: alpha0={} alpha1={} alpha2={} reg_success_scale={} stress_fail_gain={} debt_stress_per_item={}",
        b.alpha0, b.alpha1, b.alpha2, b.reg_success_scale, b.stress_fail_gain, b.debt_stress_per_item
    );
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(" ");
    println!("simulated: {}", fmt(&result.curve));
    println!("target:    {}", fmt(&result.target));
    println!(
        "rmse {:.4} (tolerance {}), {} candidates, {} pruned, {:.1}s",
        result.achieved_rmse,
        result.tolerance,
        result.grid_size,
        result.pruned_count,
        start.elapsed().as_secs_f64()
    );
    if result.accepted {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("calibration did not reach the tolerance");
        Ok(ExitCode::from(EXIT_INVALID))
    }
}

fn run_audit(dir: &Path) -> Result<ExitCode, Error> {
    let report = analysis::audit(dir)?;
    analysis::write_audit_report(dir, &report)?;
    for c in &report.checks {
        let tag = match c.status {
            CheckStatus::Pass => "PASS",
            CheckStatus::Fail => "FAIL",
            CheckStatus::Skipped => "SKIP",
        };
        println!("{tag} {:<32} {}", c.name, c.detail);
    }
    Ok(if report.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_AUDIT_FAILED)
    })
}

fn report(dir: &Path, svg: bool) -> Result<ExitCode, Error> {
    let records = output::read_agent_outcomes(output::open_file(&dir.join(AGENT_OUTCOMES_FILE))?)?;
    let config_path = dir.join(CONFIG_FILE);
    let config: Value = serde_json::from_str(
        &std::fs::read_to_string(&config_path).map_err(|e| Error::io(&config_path, e))?,
    )?;
    let horizon = config["horizon_semesters"]
        .as_u64()
        .ok_or_else(|| Error::Parse(format!("{CONFIG_FILE}: missing horizon_semesters")))? as u32;
    let curves_path = dir.join(CURVES_FILE);
    let previous = if curves_path.exists() {
        output::read_curves(output::open_file(&curves_path)?)?
    } else {
        Vec::new()
    };
    let summary = analysis::summarize_by_scenario(&records)?;
    let curves = analysis::curve_rows_from_records(&records, horizon, &previous)?;
    output::write_summary(output::create_file(&dir.join(SUMMARY_FILE))?, &summary)?;
    output::write_curves(output::create_file(&curves_path)?, &curves)?;
    print_summary(&summary);
    if svg {
        for p in analysis::write_figures(dir, &records, &summary, &curves)? {
            eprintln!("wrote {}", p.display());
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn sweep(run: &RunArgs, params: &[String]) -> Result<ExitCode, Error> {
    let exp = load_experiment(run)?;
    let axes = params.iter().map(|p| SweepAxis::parse(p)).collect::<Result<Vec<_>, _>>()?;
    let points = run_sweep(&exp, &axes)?;
    std::fs::create_dir_all(&run.out).map_err(|e| Error::io(&run.out, e))?;
    let path = run.out.join(SWEEP_FILE);
    write_sweep(output::create_file(&path)?, &points)?;
    for p in &points {
        let label: Vec<String> = p.assignments.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let rates: Vec<String> = ScenarioKind::ALL
            .iter()
            .filter_map(|&k| p.scenario(k))
            .map(|s| format!("{}={:.3}", s.scenario.key(), s.summary.overall_dropout_rate))
            .collect();
        println!("{}  dropout {}", label.join(" "), rates.join(" "));
    }
    eprintln!(
        "{} points, {} replications each ({FIDELITY_LABEL} fidelity), written to {}",
        points.len(),
        points.first().map_or(0, |p| p.replications),
        path.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_INVALID)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let outcome = match &cli.command {
        Command::Simulate { run, sequential } => simulate(run, *sequential),
        Command::Calibrate { run, tolerance } => run_calibration(run, *tolerance),
        Command::Audit { dir } => run_audit(dir),
        Command::Report { dir, svg } => report(dir, *svg),
        Command::Sweep { run, params } => sweep(run, params),
    };
    outcome.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::from(EXIT_INVALID)
    })
}
