//! Numerical-precision planning: the six time-step bounds t₁…t₆, the two
//! radius bounds R₁, R₂, the end-time rule, Marcum-Q jump probabilities and
//! the iterative-map stability check.
//!
//! One Euler increment near drift bound `A_i = (max_S |∂V0/∂x_i| + |F_i|)
//! t` and noise `B = ε √t` has squared length distributed noncentral
//! chi-squared, so `P(Δz > l) = Q_{r/2}(√λ, l/(ε√t))` with
//! `λ = ΣA_i²/B²`. A bound `t` keeps the expected number of forbidden
//! jumps below N₃: `(t_end/t) P(Δz > l) = N₃`, inverted by bisection.
//!
//! None of these are rigorous estimates; they are the guideline the
//! simulations are planned around.

#[allow(unused_imports)] // used by the no_std build
use num_traits::Float;

use crate::kramers::{adiabatic_rates, KramersError};
use crate::numeric;
use crate::potential::{
    critical_table, evaluate_field, static_field, Forcing, ModelParams, PointKind,
};
use crate::vec2::Vec2;

/// Variance of the chi distribution with r = 2 degrees of freedom,
/// `2 - (√2 Γ(3/2)/Γ(1))² = 2 - π/2 ≈ 0.4292`.
pub const CHI_VARIANCE_R2: f64 = 2.0 - core::f64::consts::FRAC_PI_2;

/// Tuning constants of the plan.
#[derive(Debug, Clone, Copy)]
pub struct PlanTuning {
    /// Phase resolution of one period (t₁ = T / n1).
    pub n1: f64,
    /// Escape-time resolution (t₂ = min τ / n2) and the end-time safety
    /// factor in h₁.
    pub n2: f64,
    /// Tolerated number of forbidden jumps per run.
    pub n3: f64,
    /// Contraction margin of the stable Euler map.
    pub delta: f64,
}

impl Default for PlanTuning {
    fn default() -> Self {
        PlanTuning { n1: 1000.0, n2: 1000.0, n3: 0.1, delta: 0.01 }
    }
}

/// The full plan: six time-step bounds, two radius bounds, the end time
/// and the recommended minima.
#[derive(Debug, Clone, Copy)]
pub struct PlanReport {
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
    pub t4: f64,
    pub t5: f64,
    pub t6: f64,
    pub r1: f64,
    pub r2: f64,
    pub t_end: f64,
    pub recommended_t_step: f64,
    pub recommended_r: f64,
    pub n1: f64,
    pub n2: f64,
    pub n3: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PlannerError {
    /// Even a vanishing time step violates the jump bound.
    NoSolution,
    /// The sampled stability region is empty.
    EmptySet,
    Kramers(KramersError),
}

impl From<KramersError> for PlannerError {
    fn from(e: KramersError) -> Self {
        PlannerError::Kramers(e)
    }
}

impl core::fmt::Display for PlannerError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            PlannerError::NoSolution => write!(f, "jump bound unsatisfiable"),
            PlannerError::EmptySet => write!(f, "empty stability sample set"),
            PlannerError::Kramers(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for PlannerError {}

/// Generalised Marcum Q-function `Q_m(a, b) = P(η > b²)` for η noncentral
/// chi-squared with 2m degrees of freedom and noncentrality a², evaluated
/// through the Poisson mixture of regularized upper incomplete gammas.
pub fn marcum_q(m: f64, a: f64, b: f64) -> f64 {
    assert!(a >= 0.0 && b >= 0.0);
    let dof2 = 2.0 * m;
    assert!(
        dof2 > 0.0 && (dof2 - dof2.round()).abs() < 1e-12,
        "order must be a positive half-integer"
    );
    if b == 0.0 {
        return 1.0;
    }
    let lambda = a * a;
    let x = b * b;
    // sf = Σ_j Pois(j; λ/2) Q(m + j, x/2), truncated once the Poisson tail
    // is negligible.
    let half = 0.5 * lambda;
    let mut weight = (-half).exp();
    let mut acc = 0.0;
    let mut used = 0.0;
    let mut j = 0usize;
    // For large λ start at the mode would be better; λ stays modest here.
    loop {
        acc += weight * numeric::gamma_q(m + j as f64, 0.5 * x);
        used += weight;
        if 1.0 - used < 1e-14 && j as f64 > half {
            break;
        }
        j += 1;
        weight *= half / j as f64;
        if j > 10_000 {
            break;
        }
    }
    // The untruncated Poisson tail survives with probability ≤ 1.
    (acc + (1.0 - used).max(0.0)).clamp(0.0, 1.0)
}

/// Largest time step `t` with `(t_end / t) Q_{r/2}(√λ(t), l/(ε√t)) = n3`
/// for the 2-dimensional increment with per-axis drift bounds
/// `grad_max + |F|`; the left side is monotone increasing in `t`.
pub fn jump_bound(
    grad_max: (f64, f64),
    f_components: (f64, f64),
    eps: f64,
    l: f64,
    t_end: f64,
    n3: f64,
) -> Result<f64, PlannerError> {
    assert!(l > 0.0 && eps > 0.0 && t_end > 0.0 && n3 > 0.0);
    let a1 = grad_max.0.abs() + f_components.0.abs();
    let a2 = grad_max.1.abs() + f_components.1.abs();
    let lhs = |t: f64| {
        let lambda = t * (a1 * a1 + a2 * a2) / (eps * eps);
        (t_end / t) * marcum_q(1.0, lambda.sqrt(), l / (eps * t.sqrt()))
    };
    let mut lo = 1e-18;
    if lhs(lo) >= n3 {
        return Err(PlannerError::NoSolution);
    }
    let mut hi = lo;
    while lhs(hi) < n3 {
        hi *= 2.0;
        if hi >= t_end {
            // The bound never binds within the run length.
            return Ok(t_end);
        }
    }
    lo = hi / 2.0;
    Ok(numeric::bisect(|t| lhs(t) - n3, lo, hi, 1e-12))
}

// Distances from each well to every other critical point, minimised over
// the phase table; returns (min distance, half of it).
fn well_separation(model: ModelParams, forcing: &Forcing) -> Result<(f64, f64), PlannerError> {
    let u_step = 2.0 * core::f64::consts::PI / 1000.0;
    let table = critical_table(model, forcing, u_step).map_err(KramersError::Potential)?;
    let mut min_d = f64::INFINITY;
    for entry in &table.entries {
        for w in entry.iter().filter(|p| p.kind == PointKind::Well) {
            for c in entry.iter() {
                let d = w.position.dist(c.position);
                if d > 1e-12 {
                    min_d = min_d.min(d);
                }
            }
        }
    }
    Ok((min_d, 0.5 * min_d))
}

// Maximum height any well reaches over one period.
fn max_well_height(model: ModelParams, forcing: &Forcing) -> Result<f64, PlannerError> {
    let u_step = 2.0 * core::f64::consts::PI / 1000.0;
    let table = critical_table(model, forcing, u_step).map_err(KramersError::Potential)?;
    let mut h0 = f64::NEG_INFINITY;
    for (i, entry) in table.entries.iter().enumerate() {
        let u = i as f64 * u_step;
        let c = -u.cos();
        for w in entry.iter().filter(|p| p.kind == PointKind::Well) {
            let v = static_field(model, forcing.fx() * c, forcing.fy() * c, w.position).value;
            h0 = h0.max(v);
        }
    }
    Ok(h0)
}

// Per-axis gradient maxima of V0 over the sublevel set
// min_t V_t <= h1 (which is V0 - |Fx x + Fy y| <= h1), sampled on a 0.01
// grid over its bounding box.
fn sublevel_gradient_max(model: ModelParams, forcing: &Forcing, h1: f64) -> (f64, f64) {
    let (fx, fy) = (forcing.fx(), forcing.fy());
    // Bounding radius: grow until the ring lies above the level set.
    let mut r_max = 2.0;
    loop {
        let mut above = true;
        for k in 0..64 {
            let ang = 2.0 * core::f64::consts::PI * k as f64 / 64.0;
            let p = Vec2::new(r_max * ang.cos(), r_max * ang.sin());
            let v0 = static_field(model, 0.0, 0.0, p).value;
            if v0 - (fx * p.x + fy * p.y).abs() <= h1 {
                above = false;
                break;
            }
        }
        if above {
            break;
        }
        r_max += 0.5;
        if r_max > 50.0 {
            break;
        }
    }
    let step = 0.01;
    let n = (2.0 * r_max / step) as usize + 1;
    let (mut gx, mut gy) = (0.0f64, 0.0f64);
    for i in 0..n {
        let x = -r_max + step * i as f64;
        for j in 0..n {
            let y = -r_max + step * j as f64;
            let p = Vec2::new(x, y);
            let f0 = static_field(model, 0.0, 0.0, p);
            if f0.value - (fx * x + fy * y).abs() <= h1 {
                gx = gx.max(f0.grad.x.abs() - 0.0);
                gy = gy.max(f0.grad.y.abs());
            }
        }
    }
    (gx, gy)
}

// Gradient maxima of V0 over the moving R-balls around the wells.
fn ball_gradient_max(
    model: ModelParams,
    forcing: &Forcing,
    radius: f64,
) -> Result<(f64, f64), PlannerError> {
    let u_step = 2.0 * core::f64::consts::PI / 100.0;
    let table = critical_table(model, forcing, u_step).map_err(KramersError::Potential)?;
    let (mut gx, mut gy) = (0.0f64, 0.0f64);
    for entry in &table.entries {
        for w in entry.iter().filter(|p| p.kind == PointKind::Well) {
            for ia in 0..16 {
                let ang = 2.0 * core::f64::consts::PI * ia as f64 / 16.0;
                for ir in 1..=4 {
                    let rr = radius * ir as f64 / 4.0;
                    let p = w.position + Vec2::new(rr * ang.cos(), rr * ang.sin());
                    let g = static_field(model, 0.0, 0.0, p).grad;
                    gx = gx.max(g.x.abs());
                    gy = gy.max(g.y.abs());
                }
            }
        }
    }
    Ok((gx, gy))
}

/// Compute the full plan for an experiment at `(model, forcing, eps)`.
pub fn plan_parameters(
    model: ModelParams,
    forcing: &Forcing,
    eps: f64,
    tuning: PlanTuning,
) -> Result<PlanReport, PlannerError> {
    let omega = forcing.omega;
    let t1 = 2.0 * core::f64::consts::PI / (omega * tuning.n1);

    // Kramers escape-time range over one period drives t2 and t_end.
    let (lr, rl) = adiabatic_rates(model, forcing, eps)?;
    let mut tau_min = f64::INFINITY;
    let mut tau_max = 0.0f64;
    for rate in [&lr, &rl] {
        let (lo, hi) = rate.min_max();
        tau_min = tau_min.min(1.0 / hi);
        tau_max = tau_max.max(1.0 / lo);
    }
    let t_end = 1000.0 * (tau_max + tau_min);
    let t2 = tau_min / tuning.n2;

    let (l1, r1) = well_separation(model, forcing)?;
    let fcomp = (forcing.fx().abs(), forcing.fy().abs());

    // t3: pure diffusive jump over l1 (gradient and forcing dropped).
    let t3 = jump_bound((0.0, 0.0), (0.0, 0.0), eps, l1, t_end, tuning.n3)?;
    // t4: the unforced critical points S1 have zero gradient, forcing kept.
    let t4 = jump_bound((0.0, 0.0), fcomp, eps, l1, t_end, tuning.n3)?;
    // t5: gradient maxima over the sublevel set below h1.
    let h0 = max_well_height(model, forcing)?;
    let h1 = 0.5 * eps * eps * (tuning.n2 * t_end).ln() + h0;
    let g_s2 = sublevel_gradient_max(model, forcing, h1);
    let t5 = jump_bound(g_s2, fcomp, eps, l1, t_end, tuning.n3)?;

    // Radii: half separation, and the accumulated-noise variance bound
    // with the chi variance for r = 2.
    let t_osc = t1.min(t2).min(t3).min(t4).min(t5);
    let r2 = (eps * eps * CHI_VARIANCE_R2 * t_osc / (2.0 * tuning.delta - tuning.delta * tuning.delta))
        .sqrt();
    let r = r1.min(r2);

    // t6: jumps across the capture radius itself (l3 = R, gradients over
    // the moving balls).
    let g_s3 = ball_gradient_max(model, forcing, r)?;
    let t6 = jump_bound(g_s3, fcomp, eps, r, t_end, tuning.n3)?;

    Ok(PlanReport {
        t1,
        t2,
        t3,
        t4,
        t5,
        t6,
        r1,
        r2,
        t_end,
        recommended_t_step: t_osc.min(t6),
        recommended_r: r,
        n1: tuning.n1,
        n2: tuning.n2,
        n3: tuning.n3,
        delta: tuning.delta,
    })
}

/// Operator-norm estimate of the Euler map `M(z) = z - t ∇V(z + well)` in
/// well-shifted coordinates over the sample set `S` (which must exclude
/// the origin), and whether it contracts with margin `delta`.
pub fn stability_norm(
    grad: impl Fn(Vec2) -> Vec2,
    well: Vec2,
    t_step: f64,
    set: &[Vec2],
    delta: f64,
) -> Result<(f64, bool), PlannerError> {
    if set.is_empty() {
        return Err(PlannerError::EmptySet);
    }
    let mut norm = 0.0f64;
    for &z in set {
        let nz = z.norm();
        assert!(nz > 0.0, "sample set must exclude the shifted origin");
        let g = grad(z + well);
        let mapped = z - g * t_step;
        norm = norm.max(mapped.norm() / nz);
    }
    Ok((norm, norm <= 1.0 - delta))
}

/// [`stability_norm`] for the driven potential frozen at `t_fix`, shifted
/// to the well nearest `well_hint`.
pub fn stability_check(
    model: ModelParams,
    forcing: &Forcing,
    t_fix: f64,
    well_hint: Vec2,
    t_step: f64,
    set: &[Vec2],
    delta: f64,
) -> Result<(f64, bool), PlannerError> {
    let points = crate::potential::critical_points(model, forcing, t_fix)
        .map_err(KramersError::Potential)?;
    let well = points
        .iter()
        .filter(|p| p.kind == PointKind::Well)
        .min_by(|a, b| {
            a.position
                .dist(well_hint)
                .partial_cmp(&b.position.dist(well_hint))
                .unwrap()
        })
        .ok_or(PlannerError::Kramers(KramersError::TopologyChanged))?
        .position;
    stability_norm(
        |p| evaluate_field(model, forcing, p, t_fix).grad,
        well,
        t_step,
        set,
        delta,
    )
}
