//! Command-line front end: `validate`, `attack`, `sweep` and `baseline`.
//!
//! Exit codes: 0 success, 1 domain failure (rejected model, failed
//! certificate, failed `--check`), 2 usage or parse failure.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::csv_io::{baseline_table, sweep_table, trajectory_table};
use crate::error::{Error, Result};
use crate::harness::{alarm_report, baseline_run, monte_carlo_costs, run_paired, AlarmReport, EmpiricalCosts, Estimate, LoopDesign};
use crate::model_file::{model_hash, write_matrices};
use crate::performance::{alpha_sweep, asymptotic_policy, check_sweep, evaluate_costs, CostReport};
use crate::synthesis::{optimal_cost, steady_prior, synthesize, AttackPolicy, Weighting};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Tolerance on `‖ν − ν⁰‖_∞` and the reconstruction error under `--check`.
pub const IDENTITY_TOLERANCE: f64 = 1e-8;
/// Largest Monte Carlo z-score accepted under `--check`.
pub const MAX_Z_SCORE: f64 = 4.0;
/// Relative slack of the sweep monotonicity checks.
pub const SWEEP_SLACK: f64 = 1e-9;

#[derive(Debug, Parser)]
#[command(name = "cps-attack", version, about = "Optimal integrity attacks on an LQG loop with a chi-squared detector")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the model assumptions and print the designed loop.
    Validate(CommonArgs),
    /// Synthesize the policy at one alpha, simulate it and write the artifacts.
    Attack(CommonArgs),
    /// Evaluate the optimal costs over an alpha grid plus both limits.
    Sweep(CommonArgs),
    /// Run the loop without attack and calibrate the detector.
    Baseline(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Experiment config (TOML).
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    /// Master seed, overriding the config.
    #[arg(long, value_name = "U64")]
    pub seed: Option<u64>,
    /// Run the built-in property assertions and fail with exit 1 if any is violated.
    #[arg(long)]
    pub check: bool,
    /// Output directory, overriding the config.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

/// Parse `args` (including the program name), run, and return the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code;
        }
    };
    let (name, result) = match &cli.command {
        Command::Validate(a) => ("validate", with_config(a).and_then(|c| cmd_validate(&c, out))),
        Command::Attack(a) => ("attack", with_config(a).and_then(|c| cmd_attack(&c, a.check, out))),
        Command::Sweep(a) => ("sweep", with_config(a).and_then(|c| cmd_sweep(&c, a.check, out))),
        Command::Baseline(a) => ("baseline", with_config(a).and_then(|c| cmd_baseline(&c, a.check, out))),
    };
    match result {
        Ok(violations) if violations.is_empty() => EXIT_OK,
        Ok(violations) => {
            for v in violations {
                let _ = writeln!(err, "{name}: check failed: {v}");
            }
            EXIT_DOMAIN
        }
        Err(e) => {
            let _ = writeln!(err, "{name}: error: {e}");
            if e.is_input_error() {
                EXIT_USAGE
            } else {
                EXIT_DOMAIN
            }
        }
    }
}

fn with_config(args: &CommonArgs) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.simulation.master_seed = seed;
    }
    if let Some(dir) = &args.out {
        cfg.output_dir = dir.clone();
    }
    Ok(cfg)
}

fn prepare_output(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("summary serializes");
    s.push('\n');
    s
}

/// Prints the validation report; a violated model assumption is a domain failure.
pub fn cmd_validate(cfg: &ExperimentConfig, out: &mut dyn Write) -> Result<Vec<String>> {
    let model = cfg.load_model()?;
    let report = model.validate();
    let _ = writeln!(out, "{report}");
    if !report.accepted() {
        return Err(Error::InvalidModel(report.messages));
    }
    let design = cfg.design(model)?;
    let detector = cfg.detector_config(design.model.p())?;
    let rho = crate::numerics::spectral_radius(&design.ctrl.closed_loop(&design.model));
    let _ = writeln!(out, "model_sha256     {}", model_hash(&design.model));
    let _ = writeln!(out, "dimensions       n={} m={} p={} s={}", design.model.n(), design.model.m(), design.model.p(), design.model.s());
    let _ = writeln!(out, "rho(A+BL)        {rho:.6}");
    let _ = writeln!(out, "threshold        {:.6} (q = {})", detector.threshold, detector.false_alarm_prob);
    Ok(Vec::new())
}

#[derive(Debug, Serialize)]
struct AnalyticCosts {
    j_d: f64,
    j_c: f64,
    j_star: Option<f64>,
}

#[derive(Debug, Serialize)]
struct TrajectorySummary {
    rows: usize,
    max_nu_err: f64,
    max_reconstruction_err: f64,
    attacked_alarm_rate: f64,
    nominal_alarm_rate: f64,
    attacked_mean_g: f64,
    nominal_mean_g: f64,
}

#[derive(Debug, Serialize)]
struct AttackSummary {
    model_sha256: String,
    horizon: usize,
    weighting: Weighting,
    burn_in: usize,
    runs: usize,
    master_seed: u64,
    false_alarm_prob: f64,
    threshold: f64,
    analytic: AnalyticCosts,
    empirical: Option<EmpiricalCosts>,
    trajectory: TrajectorySummary,
}

/// The policy at the configured weighting with its analytic cost report.
pub fn policy_and_costs(cfg: &ExperimentConfig, design: &LoopDesign) -> Result<(AttackPolicy, CostReport)> {
    let weighting = cfg.weighting();
    let obj = cfg.objective(design)?;
    let prior = steady_prior(&design.model, &design.gains, &design.ctrl, obj.x_star())?;
    match weighting {
        Weighting::Finite(_) => {
            let (policy, certs) = synthesize(&design.aug, &obj)?;
            let (mut report, _) = evaluate_costs(&design.aug, &obj, &policy, &prior, &design.gains)?;
            report.j_star = Some(optimal_cost(&design.aug, &obj, &prior, &design.gains, &certs)?);
            Ok((policy, report))
        }
        mode => {
            let (policy, _) = asymptotic_policy(&design.aug, &obj, mode)?;
            let (report, _) = evaluate_costs(&design.aug, &obj, &policy, &prior, &design.gains)?;
            Ok((policy, report))
        }
    }
}

/// Writes `policy.json`, `trajectory.csv`, `summary.json` and `design.toml`.
pub fn cmd_attack(cfg: &ExperimentConfig, check: bool, out: &mut dyn Write) -> Result<Vec<String>> {
    let design = cfg.design(cfg.load_model()?)?;
    let detector = cfg.detector_config(design.model.p())?;
    let sim = cfg.simulation_config();
    let (policy, analytic) = policy_and_costs(cfg, &design)?;
    let obj = cfg.objective(&design)?;
    let hash = model_hash(&design.model);

    let traj = run_paired(&design, &policy, &sim, 0)?;
    let alarms: AlarmReport = alarm_report(&traj, &detector);
    let empirical = if sim.runs >= 2 {
        Some(monte_carlo_costs(&design, &policy, &obj, &sim)?)
    } else {
        None
    };

    let summary = AttackSummary {
        model_sha256: hash.clone(),
        horizon: sim.horizon,
        weighting: policy.mode,
        burn_in: sim.burn_in,
        runs: sim.runs,
        master_seed: sim.master_seed,
        false_alarm_prob: detector.false_alarm_prob,
        threshold: detector.threshold,
        analytic: AnalyticCosts {
            j_d: analytic.j_d,
            j_c: analytic.j_c,
            j_star: analytic.j_star,
        },
        empirical,
        trajectory: TrajectorySummary {
            rows: traj.records.len(),
            max_nu_err: traj.max_nu_error(),
            max_reconstruction_err: traj.max_reconstruction_error(),
            attacked_alarm_rate: alarms.attacked_rate,
            nominal_alarm_rate: alarms.nominal_rate,
            attacked_mean_g: alarms.attacked_mean_g,
            nominal_mean_g: alarms.nominal_mean_g,
        },
    };

    let dir = &cfg.output_dir;
    prepare_output(dir)?;
    write_file(&dir.join("policy.json"), &(policy.to_document(&hash).to_json() + "\n"))?;
    trajectory_table(&traj, &detector).write(&dir.join("trajectory.csv"))?;
    write_file(&dir.join("summary.json"), &to_json(&summary))?;
    let gains = write_matrices(&[
        ("K", &design.gains.k),
        ("L", &design.ctrl.l),
        ("P", &design.gains.p),
        ("Sigma_nu", design.gains.sigma_nu.as_matrix()),
    ]);
    write_file(&dir.join("design.toml"), &(gains + &design.aug.dump()))?;

    let _ = writeln!(out, "weighting        {:?}", policy.mode);
    let _ = writeln!(out, "analytic J_d     {:.6e}", analytic.j_d);
    let _ = writeln!(out, "analytic J_c     {:.6e}", analytic.j_c);
    if let Some(j) = analytic.j_star {
        let _ = writeln!(out, "analytic J*      {j:.6e}");
    }
    if let Some(e) = &empirical {
        let _ = writeln!(out, "empirical J_d    {:.6e} ± {:.2e} ({} runs)", e.j_d.mean, e.j_d.stderr, e.runs);
        let _ = writeln!(out, "empirical J_c    {:.6e} ± {:.2e}", e.j_c.mean, e.j_c.stderr);
    }
    let _ = writeln!(out, "max nu_err       {:.3e}", summary.trajectory.max_nu_err);
    let _ = writeln!(out, "alarm rate       attacked {:.4}, nominal {:.4}", alarms.attacked_rate, alarms.nominal_rate);
    let _ = writeln!(out, "wrote            {}", dir.display());

    let mut violations = Vec::new();
    if check {
        let t = &summary.trajectory;
        if t.max_nu_err.is_nan() || t.max_nu_err > IDENTITY_TOLERANCE {
            violations.push(format!("innovation identity: max |nu - nu0| = {:e}", t.max_nu_err));
        }
        if t.max_reconstruction_err.is_nan() || t.max_reconstruction_err > IDENTITY_TOLERANCE {
            violations.push(format!("nominal reconstruction error {:e}", t.max_reconstruction_err));
        }
        if let Some(j) = analytic.j_star {
            let alpha = cfg.weighting().value();
            let combined = alpha * analytic.j_c + analytic.j_d;
            if (combined - j).abs() > 1e-8 * (1.0 + j.abs()) {
                violations.push(format!("J* = {j:e} but alpha J_c + J_d = {combined:e}"));
            }
        }
        if let Some(e) = &empirical {
            for (name, est, target) in [("J_d", e.j_d, analytic.j_d), ("J_c", e.j_c, analytic.j_c)] {
                if est.z_score(target) > MAX_Z_SCORE {
                    violations.push(format!("empirical {name} {:e} is {:.1} stderr from {target:e}", est.mean, est.z_score(target)));
                }
            }
        }
    }
    Ok(violations)
}

/// Writes `sweep.csv`; failed points are marked `converged = false`.
pub fn cmd_sweep(cfg: &ExperimentConfig, check: bool, out: &mut dyn Write) -> Result<Vec<String>> {
    let design = cfg.design(cfg.load_model()?)?;
    let grid = cfg.sweep_grid()?;
    let obj = cfg.objective_at(&design, Weighting::Finite(1.0))?;
    let prior = steady_prior(&design.model, &design.gains, &design.ctrl, obj.x_star())?;
    let entries = alpha_sweep(&design.aug, &obj, &grid, &prior, &design.gains)
        .map_err(|e| Error::parse("objective.sweep", e.to_string()))?;
    let dir = &cfg.output_dir;
    prepare_output(dir)?;
    sweep_table(&entries).write(&dir.join("sweep.csv"))?;
    let _ = writeln!(out, "{:>12} {:>14} {:>14}", "alpha", "J_d", "J_c");
    for e in &entries {
        match &e.outcome {
            Ok(r) => {
                let _ = writeln!(out, "{:>12.4e} {:>14.6e} {:>14.6e}", e.alpha.value(), r.j_d, r.j_c);
            }
            Err(msg) => {
                let _ = writeln!(out, "{:>12.4e} failed: {msg}", e.alpha.value());
            }
        }
    }
    let _ = writeln!(out, "wrote            {}", dir.join("sweep.csv").display());
    Ok(if check { check_sweep(&entries, SWEEP_SLACK) } else { Vec::new() })
}

#[derive(Debug, Serialize)]
struct BaselineSummary {
    model_sha256: String,
    steps: usize,
    burn_in: usize,
    master_seed: u64,
    dof: usize,
    mean_g: Estimate,
    false_alarm_prob: f64,
    threshold: f64,
    alarm_rate: f64,
    alarm_band: f64,
}

/// Writes `baseline.csv` and `baseline_summary.json`.
pub fn cmd_baseline(cfg: &ExperimentConfig, check: bool, out: &mut dyn Write) -> Result<Vec<String>> {
    let design = cfg.design(cfg.load_model()?)?;
    let detector = cfg.detector_config(design.model.p())?;
    let report = baseline_run(&design, &detector, cfg.baseline.steps, cfg.simulation.burn_in, cfg.simulation.master_seed)?;
    let summary = BaselineSummary {
        model_sha256: model_hash(&design.model),
        steps: report.steps,
        burn_in: cfg.simulation.burn_in,
        master_seed: cfg.simulation.master_seed,
        dof: report.dof,
        mean_g: report.g,
        false_alarm_prob: report.false_alarm_prob,
        threshold: report.threshold,
        alarm_rate: report.alarm_rate,
        alarm_band: report.alarm_band,
    };
    let dir = &cfg.output_dir;
    prepare_output(dir)?;
    baseline_table(&report).write(&dir.join("baseline.csv"))?;
    write_file(&dir.join("baseline_summary.json"), &to_json(&summary))?;
    let _ = writeln!(out, "mean g           {:.6} ± {:.2e} (dof {})", report.g.mean, report.g.stderr, report.dof);
    let _ = writeln!(out, "threshold        {:.6} (q = {})", report.threshold, report.false_alarm_prob);
    let _ = writeln!(out, "alarm rate       {:.5} (band ± {:.5})", report.alarm_rate, report.alarm_band);
    let _ = writeln!(out, "wrote            {}", dir.display());
    let mut violations = Vec::new();
    if check {
        if !report.mean_within_3_stderr() {
            violations.push(format!("mean g {} is {:.1} stderr from {}", report.g.mean, report.g.z_score(report.dof as f64), report.dof));
        }
        if !report.alarm_rate_in_band() {
            violations.push(format!("alarm rate {} outside {} ± {}", report.alarm_rate, report.false_alarm_prob, report.alarm_band));
        }
    }
    Ok(violations)
}
