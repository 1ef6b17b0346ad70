//! The experiment grid: one cell per (ε, φ) pair, each a fused
//! simulate / reduce / accumulate pipeline over independent realisations.
//! Realisation k of a cell draws from stream k of the cell's seed, and
//! per-realisation partial sums are folded in index order, so every cell
//! is reproducible from the master seed alone, independent of scheduling
//! or subset selection.

use std::path::Path;

use anyhow::{anyhow, Context, Result};
use rayon::prelude::*;

use sombrero::integrator::{realization_rng, simulate_with, SimConfig};
use sombrero::kramers::{adiabatic_rates_from_table, RateFunction, RATE_TABLE_LEN};
use sombrero::measures::{
    escape_histogram, frequency_signature, six_measures, Histogram, MeasuresRecord, Signature,
    DEFAULT_BIN_WIDTH,
};
use sombrero::planner::{plan_parameters, PlanTuning};
use sombrero::potential::{
    critical_forces, critical_table, CriticalTable, Forcing, ModelParams, WellTable,
};
use sombrero::reduction::{
    ChainReducer, InvariantProfile, PhaseAccumulator, Side, TransitionCollector,
    TransitionRecord, PHASE_BINS,
};
use sombrero::stats::{conditional_ks, ks_decision, Confidence, KsResult};

use crate::config::{ExperimentConfig, Planned};

/// Everything needed to run one (ε, φ) cell.
#[derive(Debug, Clone)]
pub struct CellSpec {
    pub model: ModelParams,
    pub forcing: Forcing,
    pub eps: f64,
    pub t_step: f64,
    pub radius: f64,
    pub realizations: usize,
    pub periods: f64,
    pub burn_in_periods: f64,
    pub seed: u64,
    pub record_stride: usize,
}

/// All artefacts of one cell.
pub struct CellResult {
    pub phi_deg: f64,
    pub eps: f64,
    pub dt_recorded: f64,
    pub mean_x: Vec<f64>,
    pub mean_y: Vec<f64>,
    pub mean_chain: Vec<f64>,
    pub invariant: InvariantProfile,
    pub oop_profile: Vec<f64>,
    pub transitions: Vec<TransitionRecord>,
    pub rates: (RateFunction, RateFunction),
    pub diffusion: MeasuresRecord,
    pub chain: MeasuresRecord,
    pub histogram: Option<Histogram>,
    pub signature: Option<(Signature, f64)>,
    pub mean_escape_periods: f64,
    pub ks_left: Option<KsResult>,
    pub ks_right: Option<KsResult>,
}

// Partial sums of one realisation.
struct RealizationPart {
    sum_x: Vec<f64>,
    sum_y: Vec<f64>,
    sum_chain: Vec<f64>,
    acc: PhaseAccumulator,
    transitions: Vec<TransitionRecord>,
}

fn run_realization(
    spec: &CellSpec,
    wells: &WellTable,
    k: usize,
) -> Result<RealizationPart> {
    use rand::Rng;
    let period = spec.forcing.period();
    let t_end = spec.periods * period;
    let mut rng = realization_rng(spec.seed, k as u64);
    // ν(0) = (1/2, 1/2): the initial state is a coin flip, the start
    // position the corresponding well at t = 0.
    let init: i8 = if rng.random::<bool>() { 1 } else { -1 };
    let start = if init < 0 { wells.left_at(0.0) } else { wells.right_at(0.0) };
    let cfg = SimConfig::new(0.0, spec.t_step, t_end, start, spec.seed)
        .with_stride(spec.record_stride);
    let n_rec = cfg.n_steps() / spec.record_stride + 1;
    let mut part = RealizationPart {
        sum_x: vec![0.0; n_rec],
        sum_y: vec![0.0; n_rec],
        sum_chain: vec![0.0; n_rec],
        acc: PhaseAccumulator::new(period, spec.burn_in_periods, PHASE_BINS),
        transitions: Vec::new(),
    };
    // Checks R against the wells once; the loop below keeps its own state.
    ChainReducer::new(wells, spec.radius, init).map_err(|e| anyhow!("{e}"))?;
    let mut collector = TransitionCollector::new(init);
    let stride = spec.record_stride;
    let mut rec = 0usize;
    let mut stride_ctr = 0usize;

    // Hot path: the driving phase u = Ωt advances incrementally and its
    // table index is shared by the well lookup and the phase bins; this is
    // the same discrete rule as ChainReducer/PhaseAccumulator without
    // per-step range reductions.
    let tau = 2.0 * std::f64::consts::PI;
    let du = spec.forcing.omega * spec.t_step;
    let n_table = wells.left.len();
    let idx_scale = 1.0 / wells.u_step;
    let bins = PHASE_BINS;
    let bin_scale = bins as f64 / tau;
    let burn_t = spec.burn_in_periods * period;
    let r_sq = spec.radius * spec.radius;
    let mut u = 0.0f64;
    let mut state = init;

    simulate_with(spec.model, &spec.forcing, spec.eps, &cfg, &mut rng, |_i, t, z| {
        if stride_ctr == 0 {
            part.sum_x[rec] += z.x;
            part.sum_y[rec] += z.y;
            part.sum_chain[rec] += state as f64;
            rec += 1;
            stride_ctr = stride;
        }
        stride_ctr -= 1;
        if t >= burn_t {
            let bin = ((u * bin_scale) as usize).min(bins - 1);
            // Out-of-phase: state disagreeing with the half-period.
            let oop = (state > 0) == (u <= std::f64::consts::PI);
            if state > 0 {
                part.acc.plus[bin] += 1;
            } else {
                part.acc.minus[bin] += 1;
            }
            part.acc.oop_sum[bin] += u64::from(oop);
        }
        collector.push(t, state);
        // Delayed sticky update from the position at this step.
        let w_idx = ((u * idx_scale + 0.5) as usize) % n_table;
        let dl = z - wells.left[w_idx];
        if dl.x * dl.x + dl.y * dl.y < r_sq {
            state = -1;
        } else {
            let dr = z - wells.right[w_idx];
            if dr.x * dr.x + dr.y * dr.y < r_sq {
                state = 1;
            }
        }
        u += du;
        if u >= tau {
            u -= tau;
        }
    })
    .map_err(|e| anyhow!("realization {k}: {e}"))?;
    part.transitions = collector.records;
    Ok(part)
}

/// Run one cell: parallel over realisations, merged by realisation index.
pub fn run_cell(spec: &CellSpec, table: &CriticalTable) -> Result<CellResult> {
    let period = spec.forcing.period();
    let wells = WellTable::from_table(table, spec.forcing.omega).map_err(|e| anyhow!("{e}"))?;
    let rates = adiabatic_rates_from_table(spec.model, &spec.forcing, spec.eps, table)
        .map_err(|e| anyhow!("{e}"))?;

    // Bounded-memory deterministic merge: realisations run in parallel in
    // index batches, partial sums folded in order.
    let mut merged: Option<RealizationPart> = None;
    let batch = rayon::current_num_threads().max(1);
    let mut k0 = 0usize;
    while k0 < spec.realizations {
        let k1 = (k0 + batch).min(spec.realizations);
        let parts: Vec<Result<RealizationPart>> =
            (k0..k1).into_par_iter().map(|k| run_realization(spec, &wells, k)).collect();
        for part in parts {
            let part = part?;
            merged = Some(match merged.take() {
                None => part,
                Some(mut m) => {
                    for i in 0..m.sum_x.len() {
                        m.sum_x[i] += part.sum_x[i];
                        m.sum_y[i] += part.sum_y[i];
                        m.sum_chain[i] += part.sum_chain[i];
                    }
                    m.acc.merge(&part.acc);
                    m.transitions.extend(part.transitions);
                    m
                }
            });
        }
        k0 = k1;
    }
    let merged = merged.expect("at least one realization");

    let inv_n = 1.0 / spec.realizations as f64;
    let mean_x: Vec<f64> = merged.sum_x.iter().map(|v| v * inv_n).collect();
    let mean_y: Vec<f64> = merged.sum_y.iter().map(|v| v * inv_n).collect();
    let mean_chain: Vec<f64> = merged.sum_chain.iter().map(|v| v * inv_n).collect();
    let invariant = merged.acc.invariant().map_err(|e| anyhow!("{e}"))?;
    let oop_profile = merged.acc.oop_profile().map_err(|e| anyhow!("{e}"))?;

    let dt_recorded = spec.t_step * spec.record_stride as f64;
    let (diffusion, chain) = six_measures(
        &mean_x,
        &mean_chain,
        dt_recorded,
        spec.forcing.omega,
        &oop_profile,
        &invariant,
        spec.forcing.f,
        spec.eps,
        spec.forcing.phi_deg,
    )
    .map_err(|e| anyhow!("{e}"))?;

    let durations: Vec<f64> = merged.transitions.iter().map(|r| r.escape_time()).collect();
    let (histogram, signature, mean_escape_periods) = if durations.is_empty() {
        (None, None, f64::NAN)
    } else {
        let hist = escape_histogram(&durations, period, DEFAULT_BIN_WIDTH);
        // The signature needs at least two periods of histogram support.
        let sig = if hist.span() >= 2.0 { frequency_signature(&hist).ok() } else { None };
        let mean = durations.iter().sum::<f64>() / durations.len() as f64 / period;
        (Some(hist), sig, mean)
    };

    let ks_for = |side: Side, rate: &RateFunction| -> Option<KsResult> {
        let pairs: Vec<(f64, f64)> = merged
            .transitions
            .iter()
            .filter(|r| r.side == side)
            .map(|r| (r.enter, r.exit))
            .collect();
        if pairs.is_empty() {
            return None;
        }
        let family = |u: f64, t: f64| -> f64 { 1.0 - (-rate.integral(u, t)).exp() };
        conditional_ks(&pairs, family)
            .ok()
            .map(|s| ks_decision(s, pairs.len(), Confidence::P99))
    };
    let ks_left = ks_for(Side::Left, &rates.0);
    let ks_right = ks_for(Side::Right, &rates.1);

    Ok(CellResult {
        phi_deg: spec.forcing.phi_deg,
        eps: spec.eps,
        dt_recorded,
        mean_x,
        mean_y,
        mean_chain,
        invariant,
        oop_profile,
        transitions: merged.transitions,
        rates,
        diffusion,
        chain,
        histogram,
        signature,
        mean_escape_periods,
        ks_left,
        ks_right,
    })
}

// splitmix64, used to derive independent cell seeds from the coordinates.
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D049BB133111EB);
    x ^ (x >> 31)
}

/// Deterministic per-cell seed from the master seed and the cell
/// coordinates (value-based: re-running a subset reproduces its rows).
pub fn cell_seed(master: u64, phi_deg: f64, eps: f64) -> u64 {
    splitmix64(master ^ splitmix64(phi_deg.to_bits()) ^ splitmix64(eps.to_bits().rotate_left(17)))
}

/// Build the cell spec for one grid coordinate, resolving `plan` values.
pub fn cell_spec(cfg: &ExperimentConfig, phi_deg: f64, eps: f64) -> Result<CellSpec> {
    let model = ModelParams::new(cfg.a, cfg.b);
    let fc = critical_forces(model);
    let forcing = Forcing::new(cfg.f_factor * fc.f_crit, phi_deg, cfg.omega);
    let (t_step, radius) = match (cfg.t_step, cfg.radius) {
        (Planned::Explicit(t), Planned::Explicit(r)) => (t, r),
        _ => {
            let plan = plan_parameters(model, &forcing, eps, PlanTuning::default())
                .map_err(|e| anyhow!("planning cell ({phi_deg}, {eps}): {e}"))?;
            (
                cfg.t_step.resolve(plan.recommended_t_step),
                cfg.radius.resolve(plan.recommended_r),
            )
        }
    };
    Ok(CellSpec {
        model,
        forcing,
        eps,
        t_step,
        radius,
        realizations: cfg.realizations,
        periods: cfg.periods,
        burn_in_periods: cfg.burn_in_periods,
        seed: cell_seed(cfg.seed, phi_deg, eps),
        record_stride: 10,
    })
}

/// Outcome of one grid cell: the result or the recorded error marker.
pub type CellOutcome = (f64, f64, Result<CellResult>);

/// Run the full ε × φ grid. Cells run concurrently (realisations nested);
/// results are returned in row-major order (φ outer, ε inner).
pub fn run_grid(cfg: &ExperimentConfig) -> Result<Vec<CellOutcome>> {
    cfg.validate()?;
    let model = ModelParams::new(cfg.a, cfg.b);
    // One phase table per angle, shared across noise levels.
    let u_step = 2.0 * std::f64::consts::PI / RATE_TABLE_LEN as f64;
    let tables: Vec<(f64, Result<CriticalTable>)> = cfg
        .phi_deg
        .par_iter()
        .map(|&phi| {
            let fc = critical_forces(model);
            let forcing = Forcing::new(cfg.f_factor * fc.f_crit, phi, cfg.omega);
            (
                phi,
                critical_table(model, &forcing, u_step).map_err(|e| anyhow!("{e}")),
            )
        })
        .collect();

    let coords: Vec<(usize, f64)> = tables
        .iter()
        .enumerate()
        .flat_map(|(i, _)| cfg.eps.iter().map(move |&e| (i, e)))
        .collect();
    let outcomes: Vec<CellOutcome> = coords
        .par_iter()
        .map(|&(phi_idx, eps)| {
            let (phi, table) = &tables[phi_idx];
            let result = match table {
                Err(e) => Err(anyhow!("phase table for phi = {phi}: {e}")),
                Ok(table) => cell_spec(cfg, *phi, eps)
                    .and_then(|spec| run_cell(&spec, table))
                    .with_context(|| format!("cell (phi = {phi}, eps = {eps})")),
            };
            (*phi, eps, result)
        })
        .collect();
    Ok(outcomes)
}

/// Master CSV columns.
pub const MASTER_HEADER: &str = "phi,eps,n_transitions,mean_escape_periods,signature,m1_diff,m2_diff,m1_chain,m2_chain,m3,m4,m5,m6,ks_left_stat,ks_left_q,ks_right_stat,ks_right_q,reject_left,reject_right";

/// One master CSV row; failed cells carry an error marker in the
/// signature column and NaN measures.
pub fn master_row(phi: f64, eps: f64, outcome: &Result<CellResult>) -> String {
    match outcome {
        Ok(cell) => {
            let sig = match &cell.signature {
                Some((s, _)) => format!("{s}"),
                None => "NA".to_string(),
            };
            let ks = |r: &Option<KsResult>| -> (String, String, String) {
                match r {
                    Some(k) => (k.statistic.to_string(), k.q_value.to_string(), k.reject.to_string()),
                    None => ("NaN".into(), "NaN".into(), "NA".into()),
                }
            };
            let (ls, lq, lr) = ks(&cell.ks_left);
            let (rs, rq, rr) = ks(&cell.ks_right);
            format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                phi,
                eps,
                cell.transitions.len(),
                cell.mean_escape_periods,
                sig,
                cell.diffusion.m1,
                cell.diffusion.m2,
                cell.chain.m1,
                cell.chain.m2,
                cell.chain.m3,
                cell.chain.m4,
                cell.chain.m5,
                cell.chain.m6,
                ls,
                lq,
                rs,
                rq,
                lr,
                rr
            )
        }
        Err(e) => {
            let msg = format!("{e:#}").replace([',', '\n'], ";");
            format!(
                "{phi},{eps},0,NaN,error:{msg},NaN,NaN,NaN,NaN,NaN,NaN,NaN,NaN,NaN,NaN,NaN,NaN,NA,NA"
            )
        }
    }
}

/// Write all artefacts of a finished grid under `dir`. Returns the number
/// of failed cells.
pub fn write_grid_bundle(dir: &Path, cfg: &ExperimentConfig, outcomes: &[CellOutcome]) -> Result<usize> {
    use std::io::Write;
    std::fs::create_dir_all(dir)?;
    let mut failures = 0usize;
    let mut master = std::io::BufWriter::new(std::fs::File::create(dir.join("master.csv"))?);
    writeln!(master, "{MASTER_HEADER}")?;
    for (phi, eps, outcome) in outcomes {
        writeln!(master, "{}", master_row(*phi, *eps, outcome))?;
        match outcome {
            Err(_) => failures += 1,
            Ok(cell) => {
                let cell_dir = dir.join(format!("cell_p{phi}_e{eps}"));
                std::fs::create_dir_all(&cell_dir)?;
                let period = 2.0 * std::f64::consts::PI / cfg.omega;
                crate::formats::write_transitions_csv(
                    &cell_dir.join("transitions.csv"),
                    &cell.transitions,
                    period,
                )?;
                crate::formats::write_measures_csv(
                    &cell_dir.join("measures.csv"),
                    &[cell.diffusion, cell.chain],
                )?;
                if let Some(h) = &cell.histogram {
                    crate::formats::write_histogram_csv(&cell_dir.join("histogram.csv"), h)?;
                }
                crate::formats::write_rate_table_csv(
                    &cell_dir.join("rates.csv"),
                    &cell.rates.0,
                    &cell.rates.1,
                )?;
                let ks: Vec<_> =
                    [cell.ks_left, cell.ks_right].into_iter().flatten().collect();
                if !ks.is_empty() {
                    crate::formats::write_ks_csv(&cell_dir.join("ks.csv"), &ks)?;
                }
            }
        }
    }
    Ok(failures)
}
