//! `sombrero`: simulate and analyse stochastic resonance in the planar
//! double-well potential with two transition pathways.
//!
//! Exit codes: 0 success, 2 configuration error, 3 partial cell failure.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};

use sombrero::chain::{
    discrete_fourier, discrete_invariant, discrete_state_prob, ChainMode, DiscreteSpec, StateProb,
};
use sombrero::integrator::{simulate, SimConfig};
use sombrero::kramers::adiabatic_rates;
use sombrero::planner::{plan_parameters, PlanTuning};
use sombrero::potential::{
    critical_forces, critical_points, critical_table, Forcing, ModelParams, WellTable,
};
use sombrero::reduction::{extract_transitions, reduce_to_chain, Side};
use sombrero::stats::{conditional_ks, ks_decision, Confidence};

use sombrero_cli::config::{ExperimentConfig, Planned};
use sombrero_cli::formats;
use sombrero_cli::grid::{cell_spec, run_cell, run_grid, write_grid_bundle};
use sombrero_cli::report::render_report;

#[derive(Parser)]
#[command(name = "sombrero", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Configuration file (key = value with [sections]).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Output path (file or directory depending on the subcommand).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Critical points of the (possibly forced) potential at one instant,
    /// or the full phase table.
    CriticalPoints {
        #[command(flatten)]
        common: Common,
        /// Instant to evaluate at (drive time units).
        #[arg(long, default_value_t = 0.0)]
        t: f64,
        /// Angle override in degrees.
        #[arg(long)]
        phi: Option<f64>,
        /// Emit the whole phase table as CSV instead of one instant.
        #[arg(long)]
        table: bool,
    },
    /// Numerical-precision plan (time-step and radius bounds) as JSON.
    Plan {
        #[command(flatten)]
        common: Common,
        /// Noise level (defaults to the largest configured).
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        phi: Option<f64>,
    },
    /// One stochastic trajectory -> CSV (t,x,y) or binary.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        phi: Option<f64>,
        /// Length in periods.
        #[arg(long)]
        periods: Option<f64>,
        /// Write the compact binary form instead of CSV.
        #[arg(long)]
        binary: bool,
    },
    /// Reduce a stored trajectory to well transitions -> CSV.
    Reduce {
        #[command(flatten)]
        common: Common,
        /// Trajectory file (CSV or binary).
        #[arg(long)]
        trajectory: PathBuf,
        #[arg(long)]
        phi: Option<f64>,
        /// Initial chain state (-1 or 1).
        #[arg(long, default_value_t = -1)]
        initial_state: i8,
    },
    /// Run one (eps, phi) cell and emit measures, histogram and KS CSVs.
    Measures {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        phi: Option<f64>,
    },
    /// Conditional KS test of stored transitions against the adiabatic
    /// escape-time law.
    Ks {
        #[command(flatten)]
        common: Common,
        /// Transitions CSV produced by `reduce` or `grid`.
        #[arg(long)]
        transitions: PathBuf,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        phi: Option<f64>,
    },
    /// Closed-form two-state chain quantities (invariant profile, state
    /// probabilities, Fourier transform).
    ChainTheory {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        q: f64,
        /// Block length m.
        #[arg(long)]
        m: u32,
        /// alternating | synchronized
        #[arg(long, default_value = "alternating")]
        mode: String,
        /// Also evaluate the state probability at this time.
        #[arg(long)]
        t: Option<u64>,
    },
    /// The full eps x phi experiment grid.
    Grid {
        #[command(flatten)]
        common: Common,
    },
    /// Human-readable summary of a grid bundle.
    Report {
        #[command(flatten)]
        common: Common,
        /// Bundle directory (defaults to the configured output dir).
        #[arg(long)]
        bundle: Option<PathBuf>,
    },
}

fn load_config(common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.out_dir = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn forcing_of(cfg: &ExperimentConfig, phi: Option<f64>) -> Forcing {
    let model = ModelParams::new(cfg.a, cfg.b);
    let fc = critical_forces(model);
    let phi = phi.unwrap_or_else(|| cfg.phi_deg.first().copied().unwrap_or(0.0));
    Forcing::new(cfg.f_factor * fc.f_crit, phi, cfg.omega)
}

fn eps_of(cfg: &ExperimentConfig, eps: Option<f64>) -> f64 {
    eps.unwrap_or_else(|| cfg.eps.iter().copied().fold(f64::MIN, f64::max))
}

fn resolved_steps(cfg: &ExperimentConfig, forcing: &Forcing, eps: f64) -> Result<(f64, f64)> {
    match (cfg.t_step, cfg.radius) {
        (Planned::Explicit(t), Planned::Explicit(r)) => Ok((t, r)),
        _ => {
            let model = ModelParams::new(cfg.a, cfg.b);
            let plan = plan_parameters(model, forcing, eps, PlanTuning::default())
                .map_err(|e| anyhow!("{e}"))?;
            Ok((
                cfg.t_step.resolve(plan.recommended_t_step),
                cfg.radius.resolve(plan.recommended_r),
            ))
        }
    }
}

fn kind_label(kind: sombrero::potential::PointKind) -> &'static str {
    use sombrero::potential::PointKind::*;
    match kind {
        Well => "well",
        Hill => "hill",
        Saddle => "saddle",
        Unidentified => "unidentified",
    }
}

fn cmd_critical_points(common: Common, t: f64, phi: Option<f64>, table: bool) -> Result<()> {
    let cfg = load_config(&common)?;
    let model = ModelParams::new(cfg.a, cfg.b);
    let forcing = forcing_of(&cfg, phi);
    if table {
        let tab = critical_table(model, &forcing, 0.001).map_err(|e| anyhow!("{e}"))?;
        let mut out = String::from("u,x,y,kind\n");
        for (i, entry) in tab.entries.iter().enumerate() {
            let u = i as f64 * tab.u_step;
            for p in entry {
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    u,
                    p.position.x,
                    p.position.y,
                    kind_label(p.kind)
                ));
            }
        }
        emit(&common, &cfg, "critical_table.csv", &out)
    } else {
        let pts = critical_points(model, &forcing, t).map_err(|e| anyhow!("{e}"))?;
        let mut out = String::from("x,y,kind\n");
        for p in &pts {
            out.push_str(&format!("{},{},{}\n", p.position.x, p.position.y, kind_label(p.kind)));
        }
        emit(&common, &cfg, "critical_points.csv", &out)
    }
}

// Write to --out if given, else print to stdout.
fn emit(common: &Common, _cfg: &ExperimentConfig, default_name: &str, body: &str) -> Result<()> {
    match &common.out {
        Some(path) => {
            let target = if path.extension().is_some() {
                path.clone()
            } else {
                std::fs::create_dir_all(path)?;
                path.join(default_name)
            };
            std::fs::write(&target, body).with_context(|| format!("writing {}", target.display()))?;
            Ok(())
        }
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn cmd_plan(common: Common, eps: Option<f64>, phi: Option<f64>) -> Result<()> {
    let cfg = load_config(&common)?;
    let model = ModelParams::new(cfg.a, cfg.b);
    let forcing = forcing_of(&cfg, phi);
    let eps = eps_of(&cfg, eps);
    let plan =
        plan_parameters(model, &forcing, eps, PlanTuning::default()).map_err(|e| anyhow!("{e}"))?;
    match &common.out {
        Some(path) => {
            let target = if path.extension().is_some() {
                path.clone()
            } else {
                std::fs::create_dir_all(path)?;
                path.join("plan.json")
            };
            formats::write_plan_json(&target, &plan)
        }
        None => {
            let json = serde_json::to_string_pretty(&formats::PlanJson::from(&plan))?;
            println!("{json}");
            Ok(())
        }
    }
}

fn cmd_simulate(
    common: Common,
    eps: Option<f64>,
    phi: Option<f64>,
    periods: Option<f64>,
    binary: bool,
) -> Result<()> {
    let cfg = load_config(&common)?;
    let model = ModelParams::new(cfg.a, cfg.b);
    let forcing = forcing_of(&cfg, phi);
    let eps = eps_of(&cfg, eps);
    let (t_step, _r) = resolved_steps(&cfg, &forcing, eps)?;
    let periods = periods.unwrap_or(cfg.periods);
    let table = critical_table(model, &forcing, 0.001).map_err(|e| anyhow!("{e}"))?;
    let wells = WellTable::from_table(&table, forcing.omega).map_err(|e| anyhow!("{e}"))?;
    let sim = SimConfig::new(0.0, t_step, periods * forcing.period(), wells.left_at(0.0), cfg.seed)
        .with_stride(10);
    let traj = simulate(model, &forcing, eps, &sim).map_err(|e| anyhow!("{e}"))?;
    let out = common
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(if binary { "trajectory.strj" } else { "trajectory.csv" }));
    if binary {
        formats::write_trajectory_bin(&out, &traj)
    } else {
        formats::write_trajectory_csv(&out, &traj)
    }
}

fn cmd_reduce(
    common: Common,
    trajectory: PathBuf,
    phi: Option<f64>,
    initial_state: i8,
) -> Result<()> {
    let cfg = load_config(&common)?;
    let model = ModelParams::new(cfg.a, cfg.b);
    let forcing = forcing_of(&cfg, phi);
    let eps = eps_of(&cfg, None);
    let (_t, radius) = resolved_steps(&cfg, &forcing, eps)?;
    let traj = if trajectory.extension().map(|e| e == "strj").unwrap_or(false) {
        formats::read_trajectory_bin(&trajectory)?
    } else {
        formats::read_trajectory_csv(&trajectory)?
    };
    let table = critical_table(model, &forcing, 0.001).map_err(|e| anyhow!("{e}"))?;
    let wells = WellTable::from_table(&table, forcing.omega).map_err(|e| anyhow!("{e}"))?;
    let chain = reduce_to_chain(&traj, &wells, radius, initial_state).map_err(|e| anyhow!("{e}"))?;
    let records = extract_transitions(&chain);
    let out = common.out.clone().unwrap_or_else(|| PathBuf::from("transitions.csv"));
    formats::write_transitions_csv(&out, &records, forcing.period())
}

fn cmd_measures(common: Common, eps: Option<f64>, phi: Option<f64>) -> Result<()> {
    let cfg = load_config(&common)?;
    let eps = eps_of(&cfg, eps);
    let phi = phi.unwrap_or_else(|| cfg.phi_deg.first().copied().unwrap_or(0.0));
    let spec = cell_spec(&cfg, phi, eps)?;
    let u_step = 2.0 * std::f64::consts::PI / sombrero::kramers::RATE_TABLE_LEN as f64;
    let table = critical_table(spec.model, &spec.forcing, u_step).map_err(|e| anyhow!("{e}"))?;
    let cell = run_cell(&spec, &table)?;
    let dir = common.out.clone().unwrap_or_else(|| cfg.out_dir.clone());
    std::fs::create_dir_all(&dir)?;
    formats::write_measures_csv(&dir.join("measures.csv"), &[cell.diffusion, cell.chain])?;
    if let Some(h) = &cell.histogram {
        formats::write_histogram_csv(&dir.join("histogram.csv"), h)?;
    }
    formats::write_transitions_csv(
        &dir.join("transitions.csv"),
        &cell.transitions,
        spec.forcing.period(),
    )?;
    let ks: Vec<_> = [cell.ks_left, cell.ks_right].into_iter().flatten().collect();
    if !ks.is_empty() {
        formats::write_ks_csv(&dir.join("ks.csv"), &ks)?;
    }
    if let Some((sig, ratio)) = cell.signature {
        println!("signature: {sig} (ratio {ratio:.4})");
    }
    println!("transitions: {}", cell.transitions.len());
    Ok(())
}

fn cmd_ks(common: Common, transitions: PathBuf, eps: Option<f64>, phi: Option<f64>) -> Result<()> {
    let cfg = load_config(&common)?;
    let model = ModelParams::new(cfg.a, cfg.b);
    let forcing = forcing_of(&cfg, phi);
    let eps = eps_of(&cfg, eps);
    let records = formats::read_transitions_csv(&transitions)?;
    let (lr, rl) = adiabatic_rates(model, &forcing, eps).map_err(|e| anyhow!("{e}"))?;
    let mut results = Vec::new();
    for (side, rate) in [(Side::Left, &lr), (Side::Right, &rl)] {
        let pairs: Vec<(f64, f64)> = records
            .iter()
            .filter(|r| r.side == side)
            .map(|r| (r.enter, r.exit))
            .collect();
        if pairs.is_empty() {
            continue;
        }
        let family = |u: f64, t: f64| 1.0 - (-rate.integral(u, t)).exp();
        let s = conditional_ks(&pairs, family).map_err(|e| anyhow!("{e}"))?;
        results.push(ks_decision(s, pairs.len(), Confidence::P99));
    }
    match &common.out {
        Some(path) => formats::write_ks_csv(path, &results),
        None => {
            println!("{}", formats::ks_csv_header());
            for r in &results {
                println!("{}", formats::ks_csv_row(r));
            }
            Ok(())
        }
    }
}

fn cmd_chain_theory(common: Common, p: f64, q: f64, m: u32, mode: String, t: Option<u64>) -> Result<()> {
    let mode = match mode.as_str() {
        "alternating" => ChainMode::Alternating,
        "synchronized" | "synchronised" => ChainMode::Synchronized,
        other => anyhow::bail!("unknown mode {other:?}"),
    };
    let spec = DiscreteSpec { p, q, m, mode };
    let mut out = String::from("n,nu_minus,nu_plus\n");
    for n in 0..spec.period() {
        let inv = discrete_invariant(&spec, n);
        out.push_str(&format!("{},{},{}\n", n, inv.nu_minus, inv.nu_plus));
    }
    if let Some(t) = t {
        let nu = discrete_state_prob(&spec, StateProb::HALF, t);
        out.push_str(&format!("# state probability at t={t}: {},{}\n", nu.nu_minus, nu.nu_plus));
    }
    let f1 = discrete_fourier(&spec, 1);
    out.push_str(&format!("# fourier omega=1: {},{}\n", f1.re, f1.im));
    match &common.out {
        Some(path) => {
            std::fs::write(path, out)?;
            Ok(())
        }
        None => {
            print!("{out}");
            Ok(())
        }
    }
}

fn cmd_grid(common: Common) -> Result<usize> {
    let cfg = load_config(&common)?;
    let outcomes = run_grid(&cfg)?;
    let failures = write_grid_bundle(&cfg.out_dir, &cfg, &outcomes)?;
    println!(
        "grid complete: {} cells, {} failed, bundle at {}",
        outcomes.len(),
        failures,
        cfg.out_dir.display()
    );
    Ok(failures)
}

fn cmd_report(common: Common, bundle: Option<PathBuf>) -> Result<()> {
    let cfg = load_config(&common)?;
    let dir = bundle.unwrap_or_else(|| cfg.out_dir.clone());
    let text = render_report(&dir)?;
    match &common.out {
        Some(path) => {
            std::fs::write(path, text)?;
            Ok(())
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result: Result<usize> = match cli.command {
        Command::CriticalPoints { common, t, phi, table } => {
            cmd_critical_points(common, t, phi, table).map(|_| 0)
        }
        Command::Plan { common, eps, phi } => cmd_plan(common, eps, phi).map(|_| 0),
        Command::Simulate { common, eps, phi, periods, binary } => {
            cmd_simulate(common, eps, phi, periods, binary).map(|_| 0)
        }
        Command::Reduce { common, trajectory, phi, initial_state } => {
            cmd_reduce(common, trajectory, phi, initial_state).map(|_| 0)
        }
        Command::Measures { common, eps, phi } => cmd_measures(common, eps, phi).map(|_| 0),
        Command::Ks { common, transitions, eps, phi } => {
            cmd_ks(common, transitions, eps, phi).map(|_| 0)
        }
        Command::ChainTheory { common, p, q, m, mode, t } => {
            cmd_chain_theory(common, p, q, m, mode, t).map(|_| 0)
        }
        Command::Grid { common } => cmd_grid(common),
        Command::Report { common, bundle } => cmd_report(common, bundle).map(|_| 0),
    };
    match result {
        Ok(0) => ExitCode::SUCCESS,
        Ok(_failures) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
