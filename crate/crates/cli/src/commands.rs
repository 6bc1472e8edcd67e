//! Subcommand definitions and their implementations.

use std::path::{Path, PathBuf};

use brusselator_net::dynamics::mass_law_residual;
use brusselator_net::equilibrium::{self, zeroth_order};
use brusselator_net::hopf::{self, asymptotic_special, default_range};
use brusselator_net::spectrum::{self, simplicity};
use brusselator_net::{
    classify_attractor, find_hopf, hopf_curve, integrate, AttractorOptions, HopfOptions, IntegrateOptions,
    PatchNetwork, PerronPair,
};
use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{self, ScenarioConfig};
use crate::error::CliError;
use crate::report::{self, RunReport, Tolerances};

const DEFAULT_T_END: f64 = 2000.0;
const DEFAULT_REL_TOL: f64 = 1e-9;
const DEFAULT_ABS_TOL: f64 = 1e-12;
const SPLIT_OFFSET: f64 = 0.01;

#[derive(Debug, Parser)]
#[command(name = "brusselator-net", version, about = "Analyse coupled Brusselator patch networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check both coupling matrices; exits 1 when an invariant is violated.
    Validate {
        /// Scenario file or built-in name.
        config: String,
    },
    /// Perron vectors of P and Q.
    Perron {
        config: String,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Positive equilibrium at one beta.
    Equilibrium {
        config: String,
        #[arg(long, allow_negative_numbers = true)]
        beta: Option<f64>,
    },
    /// Eigenvalues of the linearization and the stability verdict.
    Spectrum {
        config: String,
        #[arg(long, allow_negative_numbers = true)]
        beta: Option<f64>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Locate the Hopf value of beta, or print its small-lambda limit.
    Hopf {
        config: String,
        #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true)]
        beta_range: Option<Vec<f64>>,
        #[arg(long)]
        asymptotic: bool,
    },
    /// Hopf values along a lambda grid.
    HopfCurve {
        config: String,
        /// Comma- or space-separated increasing lambda values.
        #[arg(long, value_delimiter = ',', num_args = 1.., allow_negative_numbers = true)]
        lambda_grid: Option<Vec<f64>>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Integrate in time and classify the long-run behaviour.
    Simulate {
        config: String,
        #[arg(long, allow_negative_numbers = true)]
        beta: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        t_end: Option<f64>,
        #[arg(long)]
        rel_tol: Option<f64>,
        #[arg(long)]
        abs_tol: Option<f64>,
        #[arg(long)]
        sample_dt: Option<f64>,
        /// Fraction of the run discarded before classification.
        #[arg(long, default_value_t = 0.5)]
        transient: f64,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Run the full pipeline for a built-in scenario and write a report directory.
    Reproduce {
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Report and the exit status it should produce.
#[derive(Debug)]
pub struct Outcome {
    pub report: RunReport,
    pub exit_code: i32,
}

fn ok(report: RunReport) -> Result<Outcome, CliError> {
    Ok(Outcome { report, exit_code: 0 })
}

fn tolerances(cfg: &ScenarioConfig, rel: Option<f64>, abs: Option<f64>) -> Tolerances {
    Tolerances {
        newton: 1e-12,
        eigenvector_residual: 1e-8,
        marginal: 1e-9,
        hopf_bracket: HopfOptions::default().bracket_tol,
        hopf_epsilon: hopf_options(cfg).epsilon,
        rel_tol: rel.or(cfg.run.rel_tol).unwrap_or(DEFAULT_REL_TOL),
        abs_tol: abs.or(cfg.run.abs_tol).unwrap_or(DEFAULT_ABS_TOL),
    }
}

fn hopf_options(cfg: &ScenarioConfig) -> HopfOptions {
    let mut o = HopfOptions::default();
    if let Some(e) = cfg.run.epsilon {
        o.epsilon = e;
    }
    o
}

fn to_value<T: serde::Serialize>(v: &T) -> Result<Value, CliError> {
    Ok(serde_json::to_value(v)?)
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents)?;
    Ok(())
}

pub fn execute(cli: Cli) -> Result<Outcome, CliError> {
    match cli.command {
        Command::Validate { config } => validate(&config),
        Command::Perron { config, csv } => perron(&config, csv.as_deref()),
        Command::Equilibrium { config, beta } => equilibrium_cmd(&config, beta),
        Command::Spectrum { config, beta, csv } => spectrum_cmd(&config, beta, csv.as_deref()),
        Command::Hopf { config, beta_range, asymptotic } => hopf_cmd(&config, beta_range, asymptotic),
        Command::HopfCurve { config, lambda_grid, csv } => hopf_curve_cmd(&config, lambda_grid, csv.as_deref()),
        Command::Simulate { config, beta, t_end, rel_tol, abs_tol, sample_dt, transient, csv } => {
            let cfg = config::load(&config)?;
            let sim = SimulateArgs { beta, t_end, rel_tol, abs_tol, sample_dt, transient };
            simulate(&cfg, &sim, csv.as_deref())
        }
        Command::Reproduce { name, out } => reproduce(&name, out),
    }
}

fn validate(source: &str) -> Result<Outcome, CliError> {
    let cfg = config::load(source)?;
    let (p, q) = cfg.validation()?;
    let code = if p.ok && q.ok { 0 } else { 1 };
    let results = json!({ "ok": p.ok && q.ok, "P": to_value(&p)?, "Q": to_value(&q)? });
    Ok(Outcome { report: RunReport::new("validate", &cfg, tolerances(&cfg, None, None), results), exit_code: code })
}

fn perron(source: &str, csv: Option<&Path>) -> Result<Outcome, CliError> {
    let cfg = config::load(source)?;
    let model = cfg.network(cfg.nominal_beta())?;
    let pp = PerronPair::of(&model)?;
    let results = json!({
        "xi": pp.xi,
        "eta": pp.eta,
        "residual_p": model.p.null_residual(&pp.xi),
        "residual_q": model.q.null_residual(&pp.eta),
        "line_sum_symmetric_p": model.p.is_line_sum_symmetric(),
        "line_sum_symmetric_q": model.q.is_line_sum_symmetric(),
    });
    if let Some(path) = csv {
        write_file(path, &report::perron_csv(&pp.xi, &pp.eta))?;
    }
    ok(RunReport::new("perron", &cfg, tolerances(&cfg, None, None), results))
}

fn equilibrium_value(model: &PatchNetwork, pp: &PerronPair) -> Result<Value, CliError> {
    let eq = equilibrium::solve(model, pp, None)?;
    let sum_x: f64 = eq.x.iter().sum();
    let sum_a: f64 = model.a.iter().sum();
    Ok(json!({
        "beta": model.beta,
        "equilibrium": to_value(&eq)?,
        "zeroth_order": to_value(&zeroth_order(model, pp))?,
        "conservation": { "sum_x": sum_x, "sum_a": sum_a, "error": (sum_x - sum_a).abs() },
    }))
}

fn equilibrium_cmd(source: &str, beta: Option<f64>) -> Result<Outcome, CliError> {
    let cfg = config::load(source)?;
    let model = cfg.network(cfg.beta(beta)?)?;
    let pp = PerronPair::of(&model)?;
    let results = equilibrium_value(&model, &pp)?;
    ok(RunReport::new("equilibrium", &cfg, tolerances(&cfg, None, None), results))
}

fn spectrum_value(model: &PatchNetwork, pp: &PerronPair) -> Result<(Value, Vec<num_complex::Complex64>), CliError> {
    let rep = spectrum::classify(model, pp)?;
    let mult = simplicity(&rep.spectrum.eigenvalues, rep.spectrum.matrix_norm_inf, rep.spectrum.rightmost);
    let v = json!({
        "beta": model.beta,
        "verdict": to_value(&rep.verdict)?,
        "spectral_abscissa": rep.spectral_abscissa,
        "marginal_tol": rep.marginal_tol,
        "rightmost": to_value(&rep.spectrum.rightmost)?,
        "rightmost_multiplicity": to_value(&mult)?,
        "eigenvalues": to_value(&rep.spectrum.eigenvalues)?,
        "right_eigenvector": to_value(&rep.spectrum.right_eigenvector)?,
        "left_eigenvector": to_value(&rep.spectrum.left_eigenvector)?,
        "matrix_norm_inf": rep.spectrum.matrix_norm_inf,
    });
    Ok((v, rep.spectrum.eigenvalues))
}

fn spectrum_cmd(source: &str, beta: Option<f64>, csv: Option<&Path>) -> Result<Outcome, CliError> {
    let cfg = config::load(source)?;
    let model = cfg.network(cfg.beta(beta)?)?;
    let pp = PerronPair::of(&model)?;
    let (results, ev) = spectrum_value(&model, &pp)?;
    if let Some(path) = csv {
        write_file(path, &report::eigenvalues_csv(&ev))?;
    }
    ok(RunReport::new("spectrum", &cfg, tolerances(&cfg, None, None), results))
}

fn asymptotic_value(cfg: &ScenarioConfig, model: &PatchNetwork, pp: &PerronPair) -> Result<Value, CliError> {
    let asym = hopf::asymptotic(model, pp);
    let special = cfg.identical_boxes().map(|a| asymptotic_special(a, model.n(), &pp.xi));
    Ok(json!({ "asymptotic": to_value(&asym)?, "beta0_identical_boxes": special }))
}

/// Hopf point plus the verdicts just below and above it.
fn hopf_value(cfg: &ScenarioConfig, model: &PatchNetwork, pp: &PerronPair, range: Option<(f64, f64)>) -> Result<Value, CliError> {
    let opts = hopf_options(cfg);
    let range = range.or(cfg.beta_range).unwrap_or_else(|| default_range(model, pp, &opts));
    let point = find_hopf(model, pp, Some(range), &opts)?;
    let below = spectrum::classify(&model.with_beta(point.beta_hopf - SPLIT_OFFSET), pp)?;
    let above = spectrum::classify(&model.with_beta(point.beta_hopf + SPLIT_OFFSET), pp)?;
    let mut v = asymptotic_value(cfg, model, pp)?;
    v["range"] = json!([range.0, range.1]);
    v["hopf_point"] = to_value(&point)?;
    v["stability_split"] = json!({
        "offset": SPLIT_OFFSET,
        "below": to_value(&below.verdict)?,
        "above": to_value(&above.verdict)?,
    });
    Ok(v)
}

fn hopf_cmd(source: &str, beta_range: Option<Vec<f64>>, asymptotic: bool) -> Result<Outcome, CliError> {
    let cfg = config::load(source)?;
    let model = cfg.network(cfg.nominal_beta())?;
    let pp = PerronPair::of(&model)?;
    let results = if asymptotic {
        asymptotic_value(&cfg, &model, &pp)?
    } else {
        let range = beta_range.map(|r| (r[0], r[1]));
        hopf_value(&cfg, &model, &pp, range)?
    };
    ok(RunReport::new("hopf", &cfg, tolerances(&cfg, None, None), results))
}

fn hopf_curve_cmd(source: &str, grid: Option<Vec<f64>>, csv: Option<&Path>) -> Result<Outcome, CliError> {
    let cfg = config::load(source)?;
    let grid = grid
        .or_else(|| cfg.run.lambda_grid.clone())
        .ok_or_else(|| CliError::Usage("hopf-curve needs --lambda-grid or run.lambda_grid".into()))?;
    let model = cfg.network(cfg.nominal_beta())?;
    let pp = PerronPair::of(&model)?;
    let points = hopf_curve(&model, &pp, &grid, &hopf_options(&cfg))?;
    if let Some(path) = csv {
        write_file(path, &report::hopf_curve_csv(&points))?;
    }
    let results = json!({ "lambda_grid": grid, "points": to_value(&points)? });
    ok(RunReport::new("hopf-curve", &cfg, tolerances(&cfg, None, None), results))
}

#[derive(Debug, Clone, Copy)]
pub struct SimulateArgs {
    pub beta: Option<f64>,
    pub t_end: Option<f64>,
    pub rel_tol: Option<f64>,
    pub abs_tol: Option<f64>,
    pub sample_dt: Option<f64>,
    pub transient: f64,
}

struct Simulation {
    summary: Value,
    csv: String,
}

fn run_simulation(cfg: &ScenarioConfig, args: &SimulateArgs) -> Result<Simulation, CliError> {
    let beta = cfg.beta(args.beta)?;
    let model = cfg.network(beta)?;
    let pp = PerronPair::of(&model)?;
    let tol = tolerances(cfg, args.rel_tol, args.abs_tol);
    let t_end = args.t_end.or(cfg.run.t_end).unwrap_or(DEFAULT_T_END);
    let opts = IntegrateOptions {
        rel_tol: tol.rel_tol,
        abs_tol: tol.abs_tol,
        sample_dt: args.sample_dt.or(cfg.run.sample_dt),
        fixed_step: None,
    };
    if !(0.0..1.0).contains(&args.transient) {
        return Err(CliError::Usage(format!("transient fraction {} must lie in [0, 1)", args.transient)));
    }
    let traj = integrate(&model, &cfg.initial_state(), t_end, &opts)?;
    let stability = spectrum::classify(&model, &pp)?;
    let attractor_opts = AttractorOptions { transient_fraction: args.transient, ..Default::default() };
    let verdict = classify_attractor(&traj, &stability.equilibrium, &attractor_opts);
    let summary = json!({
        "beta": beta,
        "t_end": t_end,
        "attractor": to_value(&verdict)?,
        "stability": to_value(&stability.verdict)?,
        "spectral_abscissa": stability.spectral_abscissa,
        "samples": traj.times.len(),
        "accepted_steps": traj.accepted,
        "rejected_steps": traj.rejected,
        "max_mass_residual": traj.max_mass_residual,
        "sampled_mass_residual": mass_law_residual(&model, &traj),
        "max_state_norm": traj.max_state_norm,
        "final_state": traj.final_state(),
    });
    Ok(Simulation { summary, csv: report::trajectory_csv(&traj) })
}

fn simulate(cfg: &ScenarioConfig, args: &SimulateArgs, csv: Option<&Path>) -> Result<Outcome, CliError> {
    let sim = run_simulation(cfg, args)?;
    if let Some(path) = csv {
        write_file(path, &sim.csv)?;
    }
    ok(RunReport::new("simulate", cfg, tolerances(cfg, args.rel_tol, args.abs_tol), sim.summary))
}

fn reproduce(name: &str, out: Option<PathBuf>) -> Result<Outcome, CliError> {
    let cfg = config::builtin(name).ok_or_else(|| config::unknown_scenario(name))?;
    let dir = out.unwrap_or_else(|| PathBuf::from(format!("reproduce-{name}")));
    std::fs::create_dir_all(&dir)?;
    let betas = cfg.run.simulate_betas.clone().unwrap_or_else(|| vec![cfg.nominal_beta()]);
    let model = cfg.network(betas[0])?;
    let pp = PerronPair::of(&model)?;
    let tol = tolerances(&cfg, None, None);

    write_file(&dir.join("perron.csv"), &report::perron_csv(&pp.xi, &pp.eta))?;

    let mut equilibria = Vec::new();
    let mut stability = Vec::new();
    for (k, &beta) in betas.iter().enumerate() {
        let at = model.with_beta(beta);
        equilibria.push(equilibrium_value(&at, &pp)?);
        let (summary, ev) = spectrum_value(&at, &pp)?;
        let table = report::eigenvalues_csv(&ev);
        if k == 0 {
            write_file(&dir.join("spectrum.csv"), &table)?;
        }
        write_file(&dir.join(format!("spectrum_beta{beta}.csv")), &table)?;
        stability.push(summary);
    }
    report::write_json(&dir.join("equilibrium.json"), &equilibria)?;

    let hopf = hopf_value(&cfg, &model, &pp, None)?;
    report::write_json(&dir.join("hopf.json"), &hopf)?;

    let sims: Vec<Result<Simulation, CliError>> = betas
        .par_iter()
        .map(|&beta| {
            let args = SimulateArgs {
                beta: Some(beta),
                t_end: None,
                rel_tol: None,
                abs_tol: None,
                sample_dt: None,
                transient: AttractorOptions::default().transient_fraction,
            };
            run_simulation(&cfg, &args)
        })
        .collect();
    let mut runs = Vec::new();
    for (beta, sim) in betas.iter().zip(sims) {
        let sim = sim?;
        write_file(&dir.join(format!("trajectory_beta{beta}.csv")), &sim.csv)?;
        runs.push(sim.summary);
    }

    let verdicts = json!({
        "scenario": name,
        "lambda": model.lambda,
        "beta_hopf": hopf["hopf_point"]["beta_hopf"],
        "runs": runs.iter().map(|r| json!({
            "beta": r["beta"],
            "stability": r["stability"],
            "spectral_abscissa": r["spectral_abscissa"],
            "attractor": r["attractor"],
        })).collect::<Vec<_>>(),
    });
    report::write_json(&dir.join("verdicts.json"), &verdicts)?;

    let results = json!({
        "out_dir": dir.to_string_lossy(),
        "verdicts": verdicts,
        "stability": stability,
    });
    ok(RunReport::new("reproduce", &cfg, tol, results))
}
