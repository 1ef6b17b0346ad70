//! Acceptance suite: one test per criterion, each printing a PASS line
//! (visible with `--nocapture`; the per-test ok/FAILED lines of the
//! harness carry the same verdicts). Two sub-clauses are implemented
//! exactly as stated although they are unattainable with correct
//! mathematics; they fail with a full explanation in the assertion
//! message and are deliberately left red rather than weakened. Each is
//! paired with a passing test that pins the underlying machinery to an
//! exact independent reference.

use rand::Rng;

use sombrero::chain::{
    continuous_invariant, continuous_state_prob, discrete_fourier, discrete_invariant,
    discrete_state_prob, ContinuousSpec, DiscreteSpec, StateProb,
};
use sombrero::integrator::realization_rng;
use sombrero::kramers::{
    adiabatic_rates, benzi_mean_escape, resonance_window, static_rate_1d, BenziBranch,
    RateFunction,
};
use sombrero::planner::{plan_parameters, PlanTuning, CHI_VARIANCE_R2};
use sombrero::potential::{
    critical_forces, critical_points_static, static_field, Forcing, ModelParams, PointKind,
};
use sombrero::stats::{
    conditional_ks, kolmogorov_cdf, ks_decision, ks_finite_cdf, ks_statistic, Confidence,
};

use sombrero_cli::config::ExperimentConfig;
use sombrero_cli::grid::{cell_spec, run_cell, run_grid, write_grid_bundle, CellResult};

const PAPER_A: f64 = 0.15;
const PAPER_B: f64 = 0.1;
const PAPER_OMEGA: f64 = 0.001;
const PAPER_F_FACTOR: f64 = 0.7;

fn paper_model() -> ModelParams {
    ModelParams::new(PAPER_A, PAPER_B)
}

fn paper_forcing(phi_deg: f64) -> Forcing {
    let fc = critical_forces(paper_model());
    Forcing::new(PAPER_F_FACTOR * fc.f_crit, phi_deg, PAPER_OMEGA)
}

fn grad_residual(m: ModelParams, fx: f64, fy: f64, p: sombrero::Vec2) -> f64 {
    let g = static_field(m, fx, fy, p).grad;
    g.x.abs().max(g.y.abs())
}

fn hessian_consistent(m: ModelParams, p: &sombrero::potential::CriticalPoint) -> bool {
    let h = static_field(m, 0.0, 0.0, p.position).hessian;
    match p.kind {
        PointKind::Saddle => h.det() < 0.0,
        PointKind::Well => h.det() > 0.0 && h.xx > 0.0,
        PointKind::Hill => h.det() > 0.0 && h.xx < 0.0,
        PointKind::Unidentified => h.det().abs() < 1e-10,
    }
}

// Run one experiment cell with the paper geometry at reduced statistics.
fn run_paper_cell(
    phi_deg: f64,
    eps: f64,
    realizations: usize,
    periods: f64,
    seed: u64,
) -> CellResult {
    let mut cfg = ExperimentConfig::default();
    cfg.eps = vec![eps];
    cfg.phi_deg = vec![phi_deg];
    cfg.realizations = realizations;
    cfg.periods = periods;
    cfg.burn_in_periods = 2.0;
    cfg.seed = seed;
    let spec = cell_spec(&cfg, phi_deg, eps).unwrap();
    let u_step = 2.0 * std::f64::consts::PI / sombrero::kramers::RATE_TABLE_LEN as f64;
    let table =
        sombrero::potential::critical_table(spec.model, &spec.forcing, u_step).unwrap();
    run_cell(&spec, &table).unwrap()
}

/// AC-1: random below-threshold forcings have fully polished, correctly
/// classified critical points; the axis cases reproduce the nature tables
/// across every forcing regime including the collision counts.
#[test]
fn ac1_critical_point_theory() {
    let t0 = std::time::Instant::now();
    let mut rng = realization_rng(101, 0);
    for trial in 0..10_000 {
        let a = 1e-3 + 0.998 * rng.random::<f64>();
        let b = 1e-3 + 0.998 * rng.random::<f64>();
        let m = ModelParams::new(a, b);
        let fc = critical_forces(m);
        let f = 0.95 * rng.random::<f64>() * fc.f_crit;
        let phi = 2.0 * std::f64::consts::PI * rng.random::<f64>();
        let (fx, fy) = (f * phi.cos(), f * phi.sin());
        let pts = critical_points_static(m, fx, fy)
            .unwrap_or_else(|e| panic!("trial {trial} (a={a},b={b},f={f},phi={phi}): {e}"));
        assert!(!pts.is_empty());
        for p in &pts {
            let r = grad_residual(m, fx, fy, p.position);
            assert!(r <= 1e-9, "trial {trial}: residual {r} at {:?}", p.position);
            assert!(hessian_consistent(m, p), "trial {trial}: {:?}", p);
        }
    }

    // Nature tables. x-forcing, b < 1/2, sqrt(1-2b) in the upper range:
    // a = 0.15, b = 0.1.
    let m = paper_model();
    let fc = critical_forces(m);
    let kinds = |pts: &[sombrero::potential::CriticalPoint], k: PointKind| {
        pts.iter().filter(|p| p.kind == k).count()
    };
    // 0 < F < F_sad: 5 points (2 wells, 1 hill, 2 saddles).
    let pts = critical_points_static(m, 0.5 * fc.fx_sad, 0.0).unwrap();
    assert_eq!(pts.len(), 5);
    assert_eq!(kinds(&pts, PointKind::Well), 2);
    assert_eq!(kinds(&pts, PointKind::Hill), 1);
    assert_eq!(kinds(&pts, PointKind::Saddle), 2);
    // F = F_sad: the saddle pair collides onto the axis: 3 distinct points.
    let pts = critical_points_static(m, fc.fx_sad, 0.0).unwrap();
    assert_eq!(pts.len(), 3);
    assert_eq!(kinds(&pts, PointKind::Unidentified), 1);
    // F_sad < F < F_crit with sqrt(1-2b) in R1: x1 saddle, x2 hill.
    let pts = critical_points_static(m, 0.5 * (fc.fx_sad + fc.fx_crit), 0.0).unwrap();
    assert_eq!(pts.len(), 3);
    assert_eq!(kinds(&pts, PointKind::Well), 1);
    assert_eq!(kinds(&pts, PointKind::Saddle), 1);
    assert_eq!(kinds(&pts, PointKind::Hill), 1);
    let saddle = pts.iter().find(|p| p.kind == PointKind::Saddle).unwrap();
    let hill = pts.iter().find(|p| p.kind == PointKind::Hill).unwrap();
    assert!(saddle.position.x > hill.position.x, "x1 (outer) is the saddle in R1");
    // F = F_crit: x1 = x2 merge: 2 distinct points.
    let pts = critical_points_static(m, fc.fx_crit, 0.0).unwrap();
    assert_eq!(pts.len(), 2);
    assert_eq!(kinds(&pts, PointKind::Unidentified), 1);
    assert_eq!(kinds(&pts, PointKind::Well), 1);
    // F > F_crit: a single well beyond -2/sqrt(3) sqrt(1+2a).
    let pts = critical_points_static(m, 1.1 * fc.fx_crit, 0.0).unwrap();
    assert_eq!(pts.len(), 1);
    assert_eq!(pts[0].kind, PointKind::Well);
    assert!(pts[0].position.x < -2.0 / 3.0f64.sqrt() * (1.0 + 2.0 * PAPER_A).sqrt());

    // sqrt(1-2b) in the lower range R2 (a = 0.3, b = 0.45): between the
    // thresholds x1 stays a well and x2 becomes the saddle.
    let m2 = ModelParams::new(0.3, 0.45);
    let fc2 = critical_forces(m2);
    assert!(fc2.fx_sad < fc2.fx_crit);
    let pts = critical_points_static(m2, 0.5 * (fc2.fx_sad + fc2.fx_crit), 0.0).unwrap();
    assert_eq!(pts.len(), 3);
    assert_eq!(kinds(&pts, PointKind::Well), 2);
    assert_eq!(kinds(&pts, PointKind::Saddle), 1);
    let saddle = pts.iter().find(|p| p.kind == PointKind::Saddle).unwrap();
    assert!(
        pts.iter().filter(|p| p.kind == PointKind::Well).any(|w| w.position.x > saddle.position.x),
        "x2 (inner) is the saddle in R2"
    );

    // x-forcing with b >= 1/2 (no off-axis saddles at all).
    let m3 = ModelParams::new(0.15, 0.6);
    let fc3 = critical_forces(m3);
    let pts = critical_points_static(m3, 0.5 * fc3.fx_crit, 0.0).unwrap();
    assert_eq!(pts.len(), 3);
    assert_eq!(kinds(&pts, PointKind::Well), 2);
    assert_eq!(kinds(&pts, PointKind::Saddle), 1);
    let pts = critical_points_static(m3, fc3.fx_crit, 0.0).unwrap();
    assert_eq!(pts.len(), 2);
    let pts = critical_points_static(m3, 1.2 * fc3.fx_crit, 0.0).unwrap();
    assert_eq!(pts.len(), 1);
    assert_eq!(pts[0].kind, PointKind::Well);

    // y-forcing, b < 1/2: five points below both thresholds, the y-axis
    // pair annihilates at F_y_crit, wells collide onto the axis at F_y_sad.
    let pts = critical_points_static(m, 0.0, 0.5 * fc.fy_crit).unwrap();
    assert_eq!(pts.len(), 5);
    assert_eq!(kinds(&pts, PointKind::Well), 2);
    assert_eq!(kinds(&pts, PointKind::Saddle), 2);
    assert_eq!(kinds(&pts, PointKind::Hill), 1);
    let pts = critical_points_static(m, 0.0, fc.fy_crit).unwrap();
    assert_eq!(pts.len(), 4, "y1 = y2 merge at F_y_crit");
    assert_eq!(kinds(&pts, PointKind::Unidentified), 1);
    let pts = critical_points_static(m, 0.0, 0.5 * (fc.fy_crit + fc.fy_sad)).unwrap();
    assert_eq!(pts.len(), 3);
    assert_eq!(kinds(&pts, PointKind::Well), 2);
    assert_eq!(kinds(&pts, PointKind::Saddle), 1);
    let pts = critical_points_static(m, 0.0, fc.fy_sad).unwrap();
    assert_eq!(pts.len(), 1);
    assert_eq!(pts[0].kind, PointKind::Unidentified);
    let pts = critical_points_static(m, 0.0, 1.1 * fc.fy_sad).unwrap();
    assert_eq!(pts.len(), 1);
    assert_eq!(pts[0].kind, PointKind::Well);

    // y-forcing with b >= 1/2: single y-axis point plus the well pair.
    let pts = critical_points_static(m3, 0.0, 0.5 * fc3.fy_sad).unwrap();
    assert_eq!(pts.len(), 3);
    assert_eq!(kinds(&pts, PointKind::Well), 2);
    assert_eq!(kinds(&pts, PointKind::Saddle), 1);
    let pts = critical_points_static(m3, 0.0, 1.1 * fc3.fy_sad).unwrap();
    assert_eq!(pts.len(), 1);
    assert_eq!(pts[0].kind, PointKind::Well);

    let secs = t0.elapsed().as_secs_f64();
    assert!(secs < 60.0, "AC-1 runtime {secs}s exceeds one minute");
    println!("AC-1 PASS: 10^4 random forcings polished to 1e-9; nature tables and collision counts reproduced ({secs:.1}s)");
}

/// AC-2: discrete closed forms vs matrix iteration to 1e-12; continuous
/// solutions vs an RK4 reference to 1e-8; synchronised invariant exactly
/// one half and synchronised Fourier transform exactly zero.
#[test]
fn ac2_chain_closed_forms() {
    let t0 = std::time::Instant::now();
    let mut rng = realization_rng(202, 0);
    for trial in 0..1000 {
        let p = 0.01 + 0.98 * rng.random::<f64>();
        let q = 0.01 + 0.98 * rng.random::<f64>();
        let m = 1 + (rng.random::<f64>() * 7.0) as u32;
        let t = (rng.random::<f64>() * 120.0) as u64;
        let nm = rng.random::<f64>();
        let nu0 = StateProb::new(nm, 1.0 - nm);
        for spec in [DiscreteSpec::alternating(p, q, m), DiscreteSpec::synchronized(p, q, m)] {
            let closed = discrete_state_prob(&spec, nu0, t);
            // Brute-force matrix-power iteration.
            let mut nu = [nu0.nu_minus, nu0.nu_plus];
            for s in 0..t {
                let (fm, fp) = spec.rates_at(s % spec.period());
                nu = [(1.0 - fm) * nu[0] + fp * nu[1], fm * nu[0] + (1.0 - fp) * nu[1]];
            }
            assert!(
                (closed.nu_minus - nu[0]).abs() < 1e-12,
                "trial {trial} {spec:?} t={t}: {} vs {}",
                closed.nu_minus,
                nu[0]
            );
        }
    }

    // Synchronised invariant is exactly (1/2, 1/2) and its transform is
    // exactly zero.
    let sync = DiscreteSpec::synchronized(0.37, 0.08, 3);
    for n in 0..sync.period() {
        assert_eq!(discrete_invariant(&sync, n), StateProb::HALF);
    }
    for w in 1..6 {
        let f = discrete_fourier(&sync, w);
        assert!(f.re == 0.0 && f.im == 0.0);
    }

    // Continuous chains against a reference ODE integration.
    let rk4 = |p: &dyn Fn(f64) -> f64, q: &dyn Fn(f64) -> f64, nu0: StateProb, t_end: f64| {
        let steps = 200_000usize;
        let h = t_end / steps as f64;
        let mut y = [nu0.nu_minus, nu0.nu_plus];
        let f = |t: f64, y: [f64; 2]| {
            let (pp, qq) = (p(t), q(t));
            [-pp * y[0] + qq * y[1], pp * y[0] - qq * y[1]]
        };
        let mut t = 0.0;
        for _ in 0..steps {
            let k1 = f(t, y);
            let k2 = f(t + 0.5 * h, [y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]]);
            let k3 = f(t + 0.5 * h, [y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]]);
            let k4 = f(t + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
            y[0] += h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
            y[1] += h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
            t += h;
        }
        StateProb::new(y[0], y[1])
    };
    for trial in 0..20 {
        let period = 0.5 + 3.0 * rng.random::<f64>();
        let (c0, c1) = (0.1 + 0.5 * rng.random::<f64>(), 0.3 * rng.random::<f64>());
        let (d0, d1) = (0.1 + 0.5 * rng.random::<f64>(), 0.3 * rng.random::<f64>());
        let (ph1, ph2) = (rng.random::<f64>() * 6.28, rng.random::<f64>() * 6.28);
        let tau = 2.0 * std::f64::consts::PI / period;
        let p = move |t: f64| c0 + c1.min(c0 - 1e-3) * (tau * t + ph1).cos();
        let q = move |t: f64| d0 + d1.min(d0 - 1e-3) * (tau * t + ph2).sin();
        let spec = ContinuousSpec::new(p, q, period);
        let nm = rng.random::<f64>();
        let nu0 = StateProb::new(nm, 1.0 - nm);
        let t_end = rng.random::<f64>() * 3.0 * period;
        let got = continuous_state_prob(&spec, nu0, t_end).unwrap();
        let want = rk4(&p, &q, nu0, t_end);
        assert!(
            (got.nu_minus - want.nu_minus).abs() < 1e-8,
            "trial {trial}: {} vs {}",
            got.nu_minus,
            want.nu_minus
        );
        // The invariant measure propagates to itself through one period.
        let inv0 = continuous_invariant(&spec, 0.0).unwrap();
        let prop = rk4(&p, &q, inv0, period);
        assert!((prop.nu_minus - inv0.nu_minus).abs() < 1e-8);
    }
    let sync = ContinuousSpec::synchronized(|t: f64| 0.4 + 0.2 * t.sin(), 2.0);
    assert_eq!(continuous_invariant(&sync, 1.3).unwrap(), StateProb::HALF);

    let secs = t0.elapsed().as_secs_f64();
    assert!(secs < 60.0, "AC-2 runtime {secs}s exceeds one minute");
    println!("AC-2 PASS: 1000 discrete instances at 1e-12, continuous vs RK4 at 1e-8, synchronised exactness ({secs:.1}s)");
}

/// AC-3: the paper's mean escape time at eps = 0.30, phi = 75 deg,
/// t_step = 0.014, R = 0.19, over at least 5000 transitions: within 10%
/// of 0.1064 T.
#[test]
fn ac3_mean_escape_time() {
    let t0 = std::time::Instant::now();
    let cell = run_paper_cell(75.0, 0.30, 64, 9.0, 303);
    let n = cell.transitions.len();
    assert!(n >= 5000, "only {n} transitions; increase periods");
    let mean = cell.mean_escape_periods;
    let rel = (mean - 0.1064).abs() / 0.1064;
    assert!(
        rel <= 0.10,
        "mean escape {mean:.4} T deviates {:.1}% from 0.1064 T over {n} transitions",
        100.0 * rel
    );
    println!(
        "AC-3 PASS: mean escape {mean:.4} T (target 0.1064 T, {:.1}% off) over {n} transitions ({:.0}s)",
        100.0 * rel,
        t0.elapsed().as_secs_f64()
    );
}

/// AC-4: Single at phi = 0 deg and Double at phi = 90 deg in the
/// resonance window, with visible peaks at half-integer (and integer for
/// 90 deg) multiples of the period; at least 2000 transitions per cell.
#[test]
fn ac4_single_and_double_frequency() {
    let t0 = std::time::Instant::now();
    // Folded masses near integer (I) and half-integer (H) multiples; the
    // two windows each cover a 0.2-period band, so a structureless
    // histogram would put about 20% of the mass in each.
    let folded = |cell: &CellResult| -> (f64, f64, f64) {
        let hist = cell.histogram.as_ref().unwrap();
        let mut integer = 0.0;
        let mut half = 0.0;
        let total = hist.total as f64;
        for (i, &c) in hist.counts.iter().enumerate() {
            let centre = (i as f64 + 0.5) * hist.bin_width;
            let phase = centre.fract();
            if phase.min(1.0 - phase) <= 0.1 {
                integer += c as f64;
            }
            if (phase - 0.5).abs() <= 0.1 {
                half += c as f64;
            }
        }
        (integer / total, half / total, total)
    };

    let single = run_paper_cell(0.0, 0.20, 200, 9.0, 404);
    let n_single = single.transitions.len();
    assert!(n_single >= 2000, "phi=0: only {n_single} transitions");
    let (sig, ratio) = single.signature.expect("signature");
    assert_eq!(sig, sombrero::measures::Signature::Single, "ratio {ratio}");
    let (i0, h0, _) = folded(&single);
    assert!(h0 > 0.4, "phi=0: half-integer peaks carry {h0:.2} of the mass");
    assert!(i0 < 0.1 * h0 + 0.05, "phi=0: integer mass {i0:.3}");

    let double = run_paper_cell(90.0, 0.21, 200, 19.0, 405);
    let n_double = double.transitions.len();
    assert!(n_double >= 2000, "phi=90: only {n_double} transitions");
    let (sig, ratio) = double.signature.expect("signature");
    assert_eq!(sig, sombrero::measures::Signature::Double, "ratio {ratio}");
    let (i9, h9, _) = folded(&double);
    assert!(h9 > 0.3 && i9 > 0.3, "phi=90: masses I={i9:.2} H={h9:.2}");

    println!(
        "AC-4 PASS: phi=0 Single (H mass {h0:.2}, {n_single} transitions), phi=90 Double (I {i9:.2} / H {h9:.2}, {n_double} transitions) ({:.0}s)",
        t0.elapsed().as_secs_f64()
    );
}

/// AC-5: at phi = 90 deg the six measures are blind across the noise
/// sweep: M4 within 5% of T/2, M5 and M6 within 5% of T ln 2, M1..M3
/// below 10% of their phi = 0 peaks.
#[test]
fn ac5_six_measure_blindness() {
    let t0 = std::time::Instant::now();
    let period = 2.0 * std::f64::consts::PI / PAPER_OMEGA;
    let half_t = 0.5 * period;
    let t_ln2 = period * std::f64::consts::LN_2;

    let eps_ninety: Vec<f64> = (15..=30).map(|i| i as f64 / 100.0).collect();
    let mut max90 = [0.0f64; 3];
    for &eps in &eps_ninety {
        let cell = run_paper_cell(90.0, eps, 144, 6.0, 505);
        let c = &cell.chain;
        assert!(
            (c.m4 - half_t).abs() <= 0.05 * half_t,
            "eps={eps}: M4 = {} vs T/2 = {half_t}",
            c.m4
        );
        assert!(
            (c.m5 - t_ln2).abs() <= 0.05 * t_ln2,
            "eps={eps}: M5 = {} vs T ln2 = {t_ln2}",
            c.m5
        );
        assert!(
            (c.m6 - t_ln2).abs() <= 0.05 * t_ln2,
            "eps={eps}: M6 = {} vs T ln2 = {t_ln2}",
            c.m6
        );
        max90[0] = max90[0].max(c.m1);
        max90[1] = max90[1].max(c.m2);
        max90[2] = max90[2].max(c.m3);
    }

    // phi = 0 peaks over a representative sweep of the same range.
    let mut peak0 = [0.0f64; 3];
    for &eps in &[0.16, 0.18, 0.20, 0.22, 0.24, 0.26, 0.28, 0.30] {
        let cell = run_paper_cell(0.0, eps, 64, 6.0, 506);
        peak0[0] = peak0[0].max(cell.chain.m1);
        peak0[1] = peak0[1].max(cell.chain.m2);
        peak0[2] = peak0[2].max(cell.chain.m3);
    }
    for k in 0..3 {
        assert!(
            max90[k] < 0.1 * peak0[k],
            "M{}: phi=90 max {} vs 10% of phi=0 peak {}",
            k + 1,
            max90[k],
            peak0[k]
        );
    }
    println!(
        "AC-5 PASS: across eps 0.15..0.30 at phi=90: M4 in T/2 band, M5/M6 in T ln2 band; M1-M3 at most {:.1}%/{:.1}%/{:.1}% of the phi=0 peaks ({:.0}s)",
        100.0 * max90[0] / peak0[0],
        100.0 * max90[1] / peak0[1],
        100.0 * max90[2] / peak0[2],
        t0.elapsed().as_secs_f64()
    );
}

// Sample replicates of sqrt(n) S_n with pairs drawn exactly from the
// adiabatic conditional escape-time law.
fn sample_scaled_statistics(
    rate: &RateFunction,
    n: usize,
    replicates: usize,
    seed: u64,
) -> Vec<f64> {
    let mut rng = realization_rng(seed, 0);
    let period = rate.period;
    let quantile = |u: f64, v: f64| -> f64 {
        let target = -(1.0 - v).ln();
        let mut hi = u + period;
        while rate.integral(u, hi) < target {
            hi += period;
        }
        let mut lo = u;
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if rate.integral(u, mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let mut out = Vec::with_capacity(replicates);
    let family = |u: f64, t: f64| 1.0 - (-rate.integral(u, t)).exp();
    for _ in 0..replicates {
        let pairs: Vec<(f64, f64)> = (0..n)
            .map(|_| {
                let u = period * rng.random::<f64>();
                let t = quantile(u, rng.random::<f64>());
                (u, t)
            })
            .collect();
        let s = conditional_ks(&pairs, family).unwrap();
        out.push((n as f64).sqrt() * s);
    }
    out.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    out
}

fn ecdf_sup_distance(sorted: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let n = sorted.len() as f64;
    let mut sup: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        sup = sup.max(((i + 1) as f64 / n - f).abs()).max((f - i as f64 / n).abs());
    }
    sup
}

/// AC-6, attainable part: under the conditional null the scaled statistic
/// follows the exact finite-n KS law (distance < 0.02 over 10^4
/// replicates), and the empirical 99th percentile of S_20 is 0.356 ± 0.02.
#[test]
fn ac6_conditional_ks_meta_test_finite_n() {
    let t0 = std::time::Instant::now();
    let (lr, _rl) = adiabatic_rates(paper_model(), &paper_forcing(75.0), 0.30).unwrap();

    let scaled50 = sample_scaled_statistics(&lr, 50, 10_000, 606);
    let d_exact = ecdf_sup_distance(&scaled50, |x| ks_finite_cdf(50, x / 50.0_f64.sqrt()));
    assert!(
        d_exact < 0.02,
        "distance to the exact finite-n law is {d_exact:.4}"
    );

    let scaled20 = sample_scaled_statistics(&lr, 20, 10_000, 607);
    let s20_p99 = scaled20[(0.99 * (scaled20.len() as f64 - 1.0)).round() as usize]
        / 20.0_f64.sqrt();
    assert!(
        (s20_p99 - 0.356).abs() <= 0.02,
        "empirical 99th percentile of S_20 is {s20_p99:.4}"
    );
    println!(
        "AC-6 PASS (finite-n part): sup distance to exact law {d_exact:.4} < 0.02; S_20 99th percentile {s20_p99:.4} in 0.356±0.02 ({:.0}s)",
        t0.elapsed().as_secs_f64()
    );
}

/// AC-6, as literally specified: the empirical law of sqrt(n) S_n at
/// n = 50 must have KS distance < 0.02 from the *asymptotic* Q.
///
/// This is unattainable: S_n is exactly finite-n KS distributed, and the
/// true sup distance between the law of sqrt(50) D_50 and Q is 0.0373
/// (computable from the exact finite-n CDF), already above the 0.02
/// bound before any sampling noise. The empirical distance converges to
/// that value; the companion test above shows the sampler and statistic
/// are correct against the exact law. Kept red deliberately.
#[test]
fn ac6_conditional_ks_distance_to_asymptotic_q_as_specified() {
    // True (sampling-free) distance between the finite-n law and Q.
    let mut true_gap: f64 = 0.0;
    let mut x = 0.3;
    while x < 2.5 {
        true_gap = true_gap.max((ks_finite_cdf(50, x / 50.0_f64.sqrt()) - kolmogorov_cdf(x)).abs());
        x += 0.002;
    }
    let (lr, _rl) = adiabatic_rates(paper_model(), &paper_forcing(75.0), 0.30).unwrap();
    let scaled50 = sample_scaled_statistics(&lr, 50, 10_000, 606);
    let d_q = ecdf_sup_distance(&scaled50, kolmogorov_cdf);
    assert!(
        d_q < 0.02,
        "as-specified bound is unattainable: empirical distance to Q is {d_q:.4}, and the \
         exact finite-n law itself sits {true_gap:.4} away from Q at n = 50, already above \
         0.02; the companion finite-n test passes at < 0.02"
    );
}

/// AC-7, attainable part: the reported (sqrt(n) S_n, q) pairs reproduce
/// through ks_decision to 1e-3.
#[test]
fn ac7_ks_anchor_pairs() {
    for (scaled, q) in [(0.5233, 0.0529), (1.2587, 0.9159), (1.0465, 0.7766)] {
        let n = 200usize;
        let statistic = scaled / (n as f64).sqrt();
        let r = ks_decision(statistic, n, Confidence::P99);
        assert!((r.scaled - scaled).abs() < 1e-12);
        assert!((r.q_value - q).abs() < 1e-3, "Q({scaled}) = {} vs {q}", r.q_value);
        assert!(!r.reject);
    }
    // The asymptotic CDF itself against an independently summed series.
    assert!((kolmogorov_cdf(1.6920) - 0.9934780433874751).abs() < 1e-12);
    println!("AC-7 PASS (anchor pairs): all three (sqrt(n) S_n, q) pairs reproduce to 1e-3");
}

/// AC-7, as literally specified: Q(1.6920) = 0.99 to 4 decimal places.
///
/// Unattainable with the source's own series Q(x) = 1 - 2 Σ (-1)^{k-1}
/// e^{-2 k² x²}: the exact value is Q(1.6920) = 0.993478 (the value 0.99
/// corresponds to the argument 1.6276). The three anchor q-values above
/// confirm this series is the one the reported numbers come from, so the
/// 0.99 reading is a rounding of 0.9935 at two decimals, not four. Kept
/// red deliberately.
#[test]
fn ac7_q_at_1_6920_as_specified() {
    let q = kolmogorov_cdf(1.6920);
    assert!(
        (q - 0.99).abs() < 0.5e-4,
        "as-specified bound is unattainable: Q(1.6920) = {q:.6}, which is 0.99 only at \
         two-decimal rounding; Q(x) = 0.99 exactly at x = 1.6276"
    );
}

/// AC-8: the inverse total static rate of the 1D double well is exactly
/// twice the unforced mean escape time (barrier-top vs full-transit), and
/// the resonance window inverts back to a half-period mean escape.
#[test]
fn ac8_one_dimensional_cross_check() {
    for (a, eps) in [(1.0, 0.5), (0.15, 0.3), (0.6, 0.25), (2.0, 0.9)] {
        let ratio = (1.0 / static_rate_1d(a, eps)) / benzi_mean_escape(a, 0.0, eps, BenziBranch::Unforced);
        assert!((ratio - 2.0).abs() < 1e-12, "a={a}, eps={eps}: ratio {ratio}");
    }
    for (a, f, omega) in [(1.0, 0.05, 0.001), (0.5, 0.02, 0.01), (1.5, 0.2, 0.1)] {
        let (e1, e2) = resonance_window(a, f, omega).unwrap();
        assert!(e1 < e2);
        let target = std::f64::consts::PI / omega;
        let t1 = benzi_mean_escape(a, f, e1, BenziBranch::LowBarrier);
        let t2 = benzi_mean_escape(a, f, e2, BenziBranch::HighBarrier);
        assert!((t1 - target).abs() <= 1e-9 * target, "low-barrier round trip {t1} vs {target}");
        assert!((t2 - target).abs() <= 1e-9 * target);
    }
    println!("AC-8 PASS: rate-vs-transit factor exactly 2; resonance window round-trips to pi/Omega at 1e-9");
}

/// AC-9: planner anchors: the chi variance 0.4292 at r = 2, t1 = 6.2832
/// at Omega = 0.001 and N1 = 1000, R2 ≈ 0.1649 at eps = 0.3, t = 0.014,
/// delta = 0.01.
#[test]
fn ac9_planner_anchors() {
    assert!((CHI_VARIANCE_R2 - 0.4292).abs() < 5e-5, "sigma^2 = {CHI_VARIANCE_R2}");

    let plan = plan_parameters(paper_model(), &paper_forcing(75.0), 0.3, PlanTuning::default())
        .unwrap();
    assert!((plan.t1 - 6.2832).abs() < 1e-4, "t1 = {}", plan.t1);

    let r2 = (0.3f64.powi(2) * CHI_VARIANCE_R2 * 0.014 / (2.0 * 0.01 - 0.01 * 0.01)).sqrt();
    assert!((r2 - 0.1649).abs() < 5e-4, "R2 = {r2}");
    // The planner's own R2 uses its computed t_osc; both radius bounds
    // come out positive at the production parameters.
    assert!(plan.r2 > 0.0 && plan.r1 > 0.0);
    println!(
        "AC-9 PASS: sigma^2 = {CHI_VARIANCE_R2:.6}, t1 = {:.4}, R2(0.3, 0.014, 0.01) = {r2:.4}",
        plan.t1
    );
}

/// Reduced-scale end-to-end grid: the full 112-cell grid at 20
/// realisations x 5 periods completes, writes one row per cell, and
/// stays within the ten-minute budget.
#[test]
fn acceptance_grid_smoke() {
    let t0 = std::time::Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::default();
    cfg.realizations = 20;
    cfg.periods = 5.0;
    cfg.burn_in_periods = 1.0;
    cfg.seed = 909;
    cfg.out_dir = dir.path().join("bundle");
    let outcomes = run_grid(&cfg).unwrap();
    assert_eq!(outcomes.len(), 112, "16 noise levels x 7 angles");
    let failures = write_grid_bundle(&cfg.out_dir, &cfg, &outcomes).unwrap();
    assert_eq!(failures, 0, "cells failed: see master.csv");
    let master = std::fs::read_to_string(cfg.out_dir.join("master.csv")).unwrap();
    assert_eq!(master.lines().count(), 113);
    let secs = t0.elapsed().as_secs_f64();
    assert!(secs < 600.0, "smoke grid took {secs}s");
    println!("acceptance grid smoke PASS: 112 cells in {secs:.0}s");
}

/// The classical small-n decision anchor: a statistic of exactly 0.356 at
/// n = 20 sits on the 99% boundary and is not rejected.
#[test]
fn ks_decision_small_n_anchor() {
    let r = ks_decision(0.356, 20, Confidence::P99);
    assert!(!r.reject);
    assert!(ks_decision(0.36, 20, Confidence::P99).reject);
    // Samples at the 1/(2n) quantile grid attain the minimal statistic.
    let samples: Vec<f64> = (1..=20).map(|i| (2 * i - 1) as f64 / 40.0).collect();
    let d = ks_statistic(&samples, |x| x).unwrap();
    assert!(!ks_decision(d, 20, Confidence::P99).reject);
    println!("decision anchor PASS: boundary non-reject at (n=20, 0.356)");
}
