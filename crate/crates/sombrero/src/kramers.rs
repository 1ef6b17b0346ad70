//! Escape-rate and escape-time-distribution engine.
//!
//! The static escape rate from a well `x` through saddle `z_i` is
//!
//! ```text
//! R_i = k_i exp(-2 ΔV_i / ε²),
//! k_i = sqrt(det ∇²V(x)) / 2π · |λ(z_i)| / sqrt(|det ∇²V(z_i)|)
//! ```
//!
//! with `ΔV_i = V(z_i) - V(x)` and `|λ(z_i)|` the magnitude of the saddle's
//! negative Hessian eigenvalue; the total rate sums over the saddles.
//! Freezing the driven potential phase by phase yields the adiabatic rate
//! functions `R₋₁₊₁(t)`, `R₊₁₋₁(t)`, from which escape-time densities
//! `p(t, u) = R(t) exp{-∫_u^t R}` follow.

use alloc::vec::Vec;

#[allow(unused_imports)] // used by the no_std build
use num_traits::Float;

use crate::numeric;
use crate::potential::{
    critical_table, static_field, CriticalPoint, Forcing, ModelParams, PointKind, PotentialError,
};

#[derive(Debug, Clone, PartialEq)]
pub enum KramersError {
    /// Hessian signs contradict the claimed well/saddle kinds.
    BadCriticalPoint,
    /// A frozen phase of the potential lacks the two-well topology.
    TopologyChanged,
    /// The ε₁/ε₂ logarithm is nonpositive (forcing too fast or wells too
    /// shallow for the matching condition).
    InvalidRegime,
    /// Quadrature tolerance unreachable.
    QuadratureFailure,
    Potential(PotentialError),
}

impl From<PotentialError> for KramersError {
    fn from(e: PotentialError) -> Self {
        KramersError::Potential(e)
    }
}

impl core::fmt::Display for KramersError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            KramersError::BadCriticalPoint => write!(f, "Hessian contradicts claimed point kind"),
            KramersError::TopologyChanged => write!(f, "frozen potential lost the two-well topology"),
            KramersError::InvalidRegime => write!(f, "resonance-window logarithm is nonpositive"),
            KramersError::QuadratureFailure => write!(f, "quadrature tolerance unreachable"),
            KramersError::Potential(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for KramersError {}

/// Number of tabulated phases for adiabatic rate functions.
pub const RATE_TABLE_LEN: usize = 1000;

/// A nonnegative T-periodic rate of time, tabulated densely and evaluated
/// by periodic cubic (Catmull–Rom) interpolation; integrals are exact on
/// the interpolant.
#[derive(Debug, Clone)]
pub struct RateFunction {
    pub period: f64,
    values: Vec<f64>,
    // Prefix integrals of the interpolant at the knots; cum[n] is the
    // full-period integral.
    cum: Vec<f64>,
}

impl RateFunction {
    pub fn from_fn(f: impl Fn(f64) -> f64, period: f64, len: usize) -> Self {
        assert!(period > 0.0 && len >= 4);
        let values = (0..len).map(|i| f(period * i as f64 / len as f64)).collect();
        Self::from_values(values, period)
    }

    pub fn constant(rate: f64, period: f64) -> Self {
        assert!(rate >= 0.0);
        Self::from_values(alloc::vec![rate; 4], period)
    }

    pub fn from_values(values: Vec<f64>, period: f64) -> Self {
        assert!(values.len() >= 4 && period > 0.0);
        let mut rf = RateFunction { period, values, cum: Vec::new() };
        let mut cum = Vec::with_capacity(rf.values.len() + 1);
        cum.push(0.0);
        for i in 0..rf.values.len() {
            let prev = *cum.last().unwrap();
            cum.push(prev + rf.segment_integral(i, 1.0));
        }
        rf.cum = cum;
        rf
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn segment(&self, t: f64) -> (usize, f64) {
        let n = self.values.len();
        let u = numeric::phase_mod(t, self.period) / self.period * n as f64;
        let i = (u as usize).min(n - 1);
        (i, u - i as f64)
    }

    fn knots(&self, i: usize) -> (f64, f64, f64, f64) {
        let n = self.values.len();
        let y0 = self.values[(i + n - 1) % n];
        let y1 = self.values[i];
        let y2 = self.values[(i + 1) % n];
        let y3 = self.values[(i + 2) % n];
        (y0, y1, y2, y3)
    }

    /// Rate at time `t` (clamped at zero).
    pub fn eval(&self, t: f64) -> f64 {
        let (i, s) = self.segment(t);
        let (y0, y1, y2, y3) = self.knots(i);
        let m1 = 0.5 * (y2 - y0);
        let m2 = 0.5 * (y3 - y1);
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        (h00 * y1 + h10 * m1 + h01 * y2 + h11 * m2).max(0.0)
    }

    // Integral of the interpolant over [t_i, t_i + s h] within segment i.
    fn segment_integral(&self, i: usize, s: f64) -> f64 {
        let (y0, y1, y2, y3) = self.knots(i);
        let m1 = 0.5 * (y2 - y0);
        let m2 = 0.5 * (y3 - y1);
        let s2 = s * s;
        let s3 = s2 * s;
        let s4 = s3 * s;
        // Antiderivatives of the Hermite basis.
        let ih00 = 0.5 * s4 - s3 + s;
        let ih10 = 0.25 * s4 - 2.0 * s3 / 3.0 + 0.5 * s2;
        let ih01 = -0.5 * s4 + s3;
        let ih11 = 0.25 * s4 - s3 / 3.0;
        let h = self.period / self.values.len() as f64;
        h * (ih00 * y1 + ih10 * m1 + ih01 * y2 + ih11 * m2)
    }

    /// Integral of the full period.
    pub fn period_integral(&self) -> f64 {
        *self.cum.last().unwrap()
    }

    // Integral from phase 0 to `t` within [0, T).
    fn partial_integral(&self, t: f64) -> f64 {
        let (i, s) = self.segment(t);
        self.cum[i] + self.segment_integral(i, s)
    }

    /// ∫_u^t of the rate (t >= u; spans any number of periods).
    pub fn integral(&self, u: f64, t: f64) -> f64 {
        debug_assert!(t >= u);
        let full = self.period_integral();
        let d = t - u;
        let whole = (d / self.period).floor();
        let rem = d - whole * self.period;
        let pu = numeric::phase_mod(u, self.period);
        let end = pu + rem;
        let rest = if end < self.period {
            self.partial_integral(end) - self.partial_integral(pu)
        } else {
            full - self.partial_integral(pu) + self.partial_integral(end - self.period)
        };
        whole * full + rest
    }

    pub fn min_max(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for &v in &self.values {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }
}

/// Kramers rate through every saddle of a frozen well and their total.
#[derive(Debug, Clone)]
pub struct StaticRate {
    pub total: f64,
    pub per_saddle: Vec<f64>,
}

/// Static Kramers rate from `well` through `saddles` of the tilted
/// potential `V0 + fx x + fy y` at noise level `eps`.
pub fn static_rate(
    model: ModelParams,
    tilt: (f64, f64),
    eps: f64,
    well: &CriticalPoint,
    saddles: &[CriticalPoint],
) -> Result<StaticRate, KramersError> {
    assert!(eps > 0.0);
    let wf = static_field(model, tilt.0, tilt.1, well.position);
    let det_w = wf.hessian.det();
    if well.kind != PointKind::Well || det_w <= 0.0 || wf.hessian.xx <= 0.0 {
        return Err(KramersError::BadCriticalPoint);
    }
    let mut per_saddle = Vec::with_capacity(saddles.len());
    let mut total = 0.0;
    for s in saddles {
        let sf = static_field(model, tilt.0, tilt.1, s.position);
        let det_s = sf.hessian.det();
        if s.kind != PointKind::Saddle || det_s >= 0.0 {
            return Err(KramersError::BadCriticalPoint);
        }
        let (lam_min, _) = sf.hessian.eigenvalues();
        let k = det_w.sqrt() / (2.0 * core::f64::consts::PI) * lam_min.abs() / det_s.abs().sqrt();
        let dv = sf.value - wf.value;
        let r = k * (-2.0 * dv / (eps * eps)).exp();
        per_saddle.push(r);
        total += r;
    }
    Ok(StaticRate { total, per_saddle })
}

/// 1D reduction of the Kramers formula for the double well
/// `V = x⁴/4 - a x²/2`: prefactor `a√2/2π`, barrier `a²/4`.
pub fn static_rate_1d(a: f64, eps: f64) -> f64 {
    assert!(a > 0.0 && eps > 0.0);
    let k = a * 2.0f64.sqrt() / (2.0 * core::f64::consts::PI);
    k * (-2.0 * (a * a / 4.0) / (eps * eps)).exp()
}

/// Adiabatic escape-rate functions (left→right, right→left): freeze the
/// potential at each of `RATE_TABLE_LEN` phases, locate wells and saddles,
/// and apply the static formula per well.
pub fn adiabatic_rates(
    model: ModelParams,
    forcing: &Forcing,
    eps: f64,
) -> Result<(RateFunction, RateFunction), KramersError> {
    let u_step = 2.0 * core::f64::consts::PI / RATE_TABLE_LEN as f64;
    let table = critical_table(model, forcing, u_step)?;
    adiabatic_rates_from_table(model, forcing, eps, &table)
}

/// [`adiabatic_rates`] over a prebuilt phase table (the table only depends
/// on the forcing geometry, so it can be shared across noise levels).
pub fn adiabatic_rates_from_table(
    model: ModelParams,
    forcing: &Forcing,
    eps: f64,
    table: &crate::potential::CriticalTable,
) -> Result<(RateFunction, RateFunction), KramersError> {
    let period = forcing.period();
    let u_step = table.u_step;
    let mut lr = Vec::with_capacity(table.len());
    let mut rl = Vec::with_capacity(table.len());
    for (i, entry) in table.entries.iter().enumerate() {
        let u = i as f64 * u_step;
        let c = -u.cos();
        let tilt = (forcing.fx() * c, forcing.fy() * c);
        let wells: Vec<&CriticalPoint> =
            entry.iter().filter(|p| p.kind == PointKind::Well).collect();
        let saddles: Vec<CriticalPoint> =
            entry.iter().filter(|p| p.kind == PointKind::Saddle).copied().collect();
        if wells.len() != 2 || saddles.is_empty() {
            return Err(KramersError::TopologyChanged);
        }
        let (left, right) = if wells[0].position.x < 0.0 {
            (wells[0], wells[1])
        } else {
            (wells[1], wells[0])
        };
        lr.push(static_rate(model, tilt, eps, left, &saddles)?.total);
        rl.push(static_rate(model, tilt, eps, right, &saddles)?.total);
    }
    Ok((RateFunction::from_values(lr, period), RateFunction::from_values(rl, period)))
}

/// Escape-time distribution conditioned on entering the well at time `u`:
/// `pdf(t) = R(t) exp{-∫_u^t R}`, `cdf(t) = 1 - exp{-∫_u^t R}` for t ≥ u.
#[derive(Debug, Clone)]
pub struct EscapeDistribution {
    pub rate: RateFunction,
    pub entry_time: f64,
}

impl EscapeDistribution {
    pub fn new(rate: RateFunction, entry_time: f64) -> Self {
        EscapeDistribution { rate, entry_time }
    }

    pub fn pdf(&self, t: f64) -> f64 {
        if t < self.entry_time {
            return 0.0;
        }
        self.rate.eval(t) * (-self.rate.integral(self.entry_time, t)).exp()
    }

    pub fn cdf(&self, t: f64) -> f64 {
        if t <= self.entry_time {
            return 0.0;
        }
        -(-self.rate.integral(self.entry_time, t)).exp_m1()
    }

    /// Normalised-time density over durations measured in periods:
    /// `T · pdf(u + d T)` for duration `d ≥ 0`.
    pub fn pdf_normalized(&self, d: f64) -> f64 {
        self.rate.period * self.pdf(self.entry_time + d * self.rate.period)
    }

    pub fn cdf_normalized(&self, d: f64) -> f64 {
        self.cdf(self.entry_time + d * self.rate.period)
    }

    /// Inverse CDF: the exit time t with cdf(t) = v (bisection on the
    /// monotone cumulative rate).
    pub fn quantile(&self, v: f64) -> f64 {
        assert!((0.0..1.0).contains(&v));
        if v == 0.0 {
            return self.entry_time;
        }
        let target = -(1.0 - v).ln();
        let mut hi = self.entry_time + self.rate.period;
        while self.rate.integral(self.entry_time, hi) < target {
            hi += self.rate.period;
            if hi - self.entry_time > 1e9 * self.rate.period {
                break;
            }
        }
        numeric::bisect(
            |t| self.rate.integral(self.entry_time, t) - target,
            self.entry_time,
            hi,
            1e-13,
        )
    }
}

/// Escape-time distribution for a rate function and entry time.
pub fn escape_distribution(rate: &RateFunction, u: f64) -> EscapeDistribution {
    EscapeDistribution::new(rate.clone(), u)
}

/// Perfect-phase approximation of the total escape-duration density:
/// `p_tot(t) ≈ p₊(t, 0)` built from the right→left adiabatic rate. Valid
/// under the half-period geometry `R₋₁₊₁(t) = R₊₁₋₁(t + T/2)`.
pub fn perfect_phase_pdf(
    model: ModelParams,
    forcing: &Forcing,
    eps: f64,
) -> Result<EscapeDistribution, KramersError> {
    let (_lr, rl) = adiabatic_rates(model, forcing, eps)?;
    Ok(EscapeDistribution::new(rl, 0.0))
}

/// Which extreme of the slowly forced 1D double well a mean escape time
/// refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenziBranch {
    /// F = 0.
    Unforced,
    /// Barrier at its lowest (t = 0): exponent factor `1 - 4F/a^{3/2}`.
    LowBarrier,
    /// Barrier at its highest (t = π/Ω): exponent factor `1 + 4F/a^{3/2}`.
    HighBarrier,
}

/// Mean escape time of the 1D double well `x⁴/4 - a x²/2` with slow weak
/// forcing, in the small-noise approximation.
pub fn benzi_mean_escape(a: f64, f: f64, eps: f64, branch: BenziBranch) -> f64 {
    assert!(a > 0.0 && eps > 0.0 && f >= 0.0);
    let base = core::f64::consts::PI / (a * 2.0f64.sqrt());
    let x = a * a / (2.0 * eps * eps);
    match branch {
        BenziBranch::Unforced => base * x.exp(),
        BenziBranch::LowBarrier => base * (x * (1.0 - 4.0 * f / a.powf(1.5))).exp(),
        BenziBranch::HighBarrier => base * (x * (1.0 + 4.0 * f / a.powf(1.5))).exp(),
    }
}

/// Noise window [ε₁, ε₂] bracketing the resonance condition: solving
/// `⟨τ⟩ = π/Ω` for the low/high-barrier extremes gives
///
/// ```text
/// ε_i = a [ (1 ∓ 4F/a^{3/2}) / (2 ln(√2 a / Ω)) ]^{1/2}
/// ```
pub fn resonance_window(a: f64, f: f64, omega: f64) -> Result<(f64, f64), KramersError> {
    assert!(a > 0.0 && f > 0.0 && omega > 0.0);
    let log = (2.0f64.sqrt() * a / omega).ln();
    if log <= 0.0 {
        return Err(KramersError::InvalidRegime);
    }
    let c = 4.0 * f / a.powf(1.5);
    let eps1 = a * ((1.0 - c) / (2.0 * log)).sqrt();
    let eps2 = a * ((1.0 + c) / (2.0 * log)).sqrt();
    Ok((eps1, eps2))
}

/// Adiabatic validity check: minimum and maximum Kramers mean escape time
/// over one period (both directions); `holds` when even the slowest escape
/// fits within one forcing period 2π/Ω.
#[derive(Debug, Clone, Copy)]
pub struct AdiabaticCheck {
    pub min_tau: f64,
    pub max_tau: f64,
    pub holds: bool,
}

pub fn adiabatic_check(
    model: ModelParams,
    forcing: &Forcing,
    eps: f64,
) -> Result<AdiabaticCheck, KramersError> {
    let (lr, rl) = adiabatic_rates(model, forcing, eps)?;
    let mut min_tau = f64::INFINITY;
    let mut max_tau = 0.0f64;
    for rate in [&lr, &rl] {
        let (lo, hi) = rate.min_max();
        min_tau = min_tau.min(1.0 / hi);
        max_tau = max_tau.max(1.0 / lo);
    }
    Ok(AdiabaticCheck { min_tau, max_tau, holds: max_tau <= forcing.period() })
}
