//! Closed-form theory of periodically driven two-state Markov chains on
//! {-1, +1}: state probabilities, invariant measures, relaxation time and
//! the Fourier transform of the averaged chain, in discrete and continuous
//! time.
//!
//! Discrete, alternating saddles (period T = 2m, escape probabilities p
//! and q swapping between the half-periods, λ = 1 - p - q):
//!
//! ```text
//! n in [0, m):   ν₋ = q/(p+q) + (p-q)/(p+q) λ^n/(1+λ^m)       - C λ^(2mN+n)
//! n in [m, 2m):  ν₋ = p/(p+q) - (p-q)/(p+q) λ^(n-m)/(1+λ^m)   - C λ^(2mN+n)
//! C = [ν₊(0)(p + qλ^m) - ν₋(0)(q + pλ^m)] / [(p+q)(1+λ^m)]
//! ```
//!
//! Discrete, synchronised saddles (period 4m): ν stays symmetric around
//! 1/2 with the transient `(1-2p)^(..) (1-2q)^(..) [ν₊(0) - ν₋(0)]`.
//!
//! Continuous time: with `g(t) = exp ∫0^t (p+q)`, the integrating-factor
//! solution is `ν₋(t) = [ν₋(0) + ∫0^t q g] / g(t)` and the invariant
//! measure `ν̄₋(t) = [∫0^t q g]/g(t) + [∫0^T q g]/[g(t)(g(T)-1)]`.

use alloc::boxed::Box;
use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)] // used by the no_std build
use num_traits::Float;

use crate::numeric;

/// State-probability pair (ν₋, ν₊); components sum to one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateProb {
    pub nu_minus: f64,
    pub nu_plus: f64,
}

impl StateProb {
    pub fn new(nu_minus: f64, nu_plus: f64) -> Self {
        debug_assert!((nu_minus + nu_plus - 1.0).abs() < 1e-9);
        StateProb { nu_minus, nu_plus }
    }

    pub const HALF: StateProb = StateProb { nu_minus: 0.5, nu_plus: 0.5 };

    /// Averaged chain value ⟨Y⟩ = ν₊ - ν₋.
    pub fn mean(&self) -> f64 {
        self.nu_plus - self.nu_minus
    }
}

/// Block structure of the driven transition matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainMode {
    /// Period 2m; escape probabilities (p, q) swap between the halves.
    Alternating,
    /// Period 4m; both states share the same escape probability, p on the
    /// odd quarter-blocks and q on the even ones.
    Synchronized,
}

/// Discrete-time spec: escape probabilities p, q in (0, 1) and the block
/// length m.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscreteSpec {
    pub p: f64,
    pub q: f64,
    pub m: u32,
    pub mode: ChainMode,
}

impl DiscreteSpec {
    pub fn alternating(p: f64, q: f64, m: u32) -> Self {
        assert!(p > 0.0 && p < 1.0 && q > 0.0 && q < 1.0 && m >= 1);
        DiscreteSpec { p, q, m, mode: ChainMode::Alternating }
    }

    pub fn synchronized(p: f64, q: f64, m: u32) -> Self {
        assert!(p > 0.0 && p < 1.0 && q > 0.0 && q < 1.0 && m >= 1);
        DiscreteSpec { p, q, m, mode: ChainMode::Synchronized }
    }

    pub fn period(&self) -> u64 {
        match self.mode {
            ChainMode::Alternating => 2 * self.m as u64,
            ChainMode::Synchronized => 4 * self.m as u64,
        }
    }

    /// Flip probabilities (from -1, from +1) at phase `n` of the period.
    pub fn rates_at(&self, n: u64) -> (f64, f64) {
        let m = self.m as u64;
        match self.mode {
            ChainMode::Alternating => {
                if n % (2 * m) < m {
                    (self.p, self.q)
                } else {
                    (self.q, self.p)
                }
            }
            ChainMode::Synchronized => {
                let blk = (n % (4 * m)) / m;
                if blk % 2 == 0 {
                    (self.p, self.p)
                } else {
                    (self.q, self.q)
                }
            }
        }
    }
}

/// Closed-form state probability at integer time `t` from the initial
/// distribution `nu0`.
pub fn discrete_state_prob(spec: &DiscreteSpec, nu0: StateProb, t: u64) -> StateProb {
    let (p, q, m) = (spec.p, spec.q, spec.m as u64);
    match spec.mode {
        ChainMode::Alternating => {
            let lam = 1.0 - p - q;
            let period = 2 * m;
            let n = t % period;
            let lam_m = lam.powi(m as i32);
            let c = (nu0.nu_plus * (p + q * lam_m) - nu0.nu_minus * (q + p * lam_m))
                / ((p + q) * (1.0 + lam_m));
            // Note 2mN + n = t, so the transient is c λ^t.
            let tail = c * pow_save(lam, t);
            let base_minus = if n < m {
                q / (p + q) + (p - q) / (p + q) * lam.powi(n as i32) / (1.0 + lam_m)
            } else {
                p / (p + q) - (p - q) / (p + q) * lam.powi((n - m) as i32) / (1.0 + lam_m)
            };
            StateProb::new(base_minus - tail, 1.0 - base_minus + tail)
        }
        ChainMode::Synchronized => {
            let period = 4 * m;
            let big_n = t / period;
            let n = t % period;
            let (ep, eq) = if n < m {
                (2 * m * big_n + n, 2 * m * big_n)
            } else if n < 2 * m {
                (2 * m * big_n + m, 2 * m * big_n + (n - m))
            } else if n < 3 * m {
                (2 * m * big_n + m + (n - 2 * m), 2 * m * big_n + m)
            } else {
                (2 * m * big_n + 2 * m, 2 * m * big_n + m + (n - 3 * m))
            };
            let z = pow_save(1.0 - 2.0 * p, ep) * pow_save(1.0 - 2.0 * q, eq)
                * (nu0.nu_plus - nu0.nu_minus);
            StateProb::new(0.5 - 0.5 * z, 0.5 + 0.5 * z)
        }
    }
}

// |x| < 1 power with u64 exponent; underflows cleanly to zero.
fn pow_save(x: f64, e: u64) -> f64 {
    let mut result = 1.0;
    let mut base = x;
    let mut exp = e;
    while exp > 0 {
        if exp & 1 == 1 {
            result *= base;
            if result == 0.0 {
                return 0.0;
            }
        }
        exp >>= 1;
        if exp > 0 {
            base *= base;
        }
    }
    result
}

/// Invariant measure at phase `n` of the period (the N → ∞ limit of the
/// state probabilities).
pub fn discrete_invariant(spec: &DiscreteSpec, n: u64) -> StateProb {
    let (p, q, m) = (spec.p, spec.q, spec.m as u64);
    match spec.mode {
        ChainMode::Alternating => {
            let lam = 1.0 - p - q;
            let n = n % (2 * m);
            let lam_m = lam.powi(m as i32);
            let nu_minus = if n < m {
                q / (p + q) + (p - q) / (p + q) * lam.powi(n as i32) / (1.0 + lam_m)
            } else {
                p / (p + q) - (p - q) / (p + q) * lam.powi((n - m) as i32) / (1.0 + lam_m)
            };
            StateProb::new(nu_minus, 1.0 - nu_minus)
        }
        ChainMode::Synchronized => StateProb::HALF,
    }
}

/// Fourier transform of the averaged chain at integer harmonic `omega`
/// (transform over one period with a 1/T prefactor). Synchronised chains
/// transform to exactly zero; so do even harmonics of the alternating
/// chain.
pub fn discrete_fourier(spec: &DiscreteSpec, omega: u32) -> Complex64 {
    if spec.mode == ChainMode::Synchronized || omega % 2 == 0 {
        return Complex64::new(0.0, 0.0);
    }
    let (p, q, m) = (spec.p, spec.q, spec.m as f64);
    let lam = 1.0 - p - q;
    let lam_m = lam.powf(m);
    let t = 2.0 * m;
    let w = omega as f64;
    let e1 = (-Complex64::i() * core::f64::consts::PI * w).exp();
    let em = (-Complex64::i() * core::f64::consts::PI * w / m).exp();
    let geom = (Complex64::new(1.0, 0.0) - e1) / (Complex64::new(1.0, 0.0) - em);
    let damped = (Complex64::new(1.0, 0.0) - lam_m * e1)
        / (Complex64::new(1.0, 0.0) - lam * em)
        * (2.0 / (1.0 + lam_m));
    (1.0 / t) * (p - q) / (p + q) * (Complex64::new(1.0, 0.0) - e1) * (geom - damped)
}

/// Continuous-time spec: nonnegative T-periodic rate functions. The
/// synchronised constructor records p ≡ q so the exact exponential branch
/// is used.
pub struct ContinuousSpec {
    p_fn: Box<dyn Fn(f64) -> f64>,
    q_fn: Box<dyn Fn(f64) -> f64>,
    pub period: f64,
    pub synchronized: bool,
}

impl ContinuousSpec {
    pub fn new(
        p_fn: impl Fn(f64) -> f64 + 'static,
        q_fn: impl Fn(f64) -> f64 + 'static,
        period: f64,
    ) -> Self {
        assert!(period > 0.0);
        ContinuousSpec { p_fn: Box::new(p_fn), q_fn: Box::new(q_fn), period, synchronized: false }
    }

    pub fn synchronized(p_fn: impl Fn(f64) -> f64 + Clone + 'static, period: f64) -> Self {
        assert!(period > 0.0);
        let q = p_fn.clone();
        ContinuousSpec { p_fn: Box::new(p_fn), q_fn: Box::new(q), period, synchronized: true }
    }

    pub fn p(&self, t: f64) -> f64 {
        (self.p_fn)(t)
    }

    pub fn q(&self, t: f64) -> f64 {
        (self.q_fn)(t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChainError {
    /// The requested quadrature tolerance could not be met.
    QuadratureFailure,
    /// ∫(p + q) over one period vanishes: no invariant structure.
    DegenerateRates,
}

impl core::fmt::Display for ChainError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ChainError::QuadratureFailure => write!(f, "quadrature tolerance unreachable"),
            ChainError::DegenerateRates => write!(f, "rates integrate to zero over a period"),
        }
    }
}

impl core::error::Error for ChainError {}

const QUAD_TOL: f64 = 1e-12;

// Cumulative pair over [0, t]: G(t) = ∫(p+q) and, in a numerically safe
// scaled form, S(t) = ∫ f(s) e^{G(s) - G(t)} ds for f = q (or p).
// Panel-doubling 15-point Gauss-Legendre; exponents stay nonpositive.
fn weighted_exponential_integral(
    spec: &ContinuousSpec,
    weight_q: bool,
    t: f64,
) -> Result<(f64, f64), ChainError> {
    if t == 0.0 {
        return Ok((0.0, 0.0));
    }
    let rate_sum = |s: f64| spec.p(s) + spec.q(s);
    let weight = |s: f64| if weight_q { spec.q(s) } else { spec.p(s) };
    let mut n_panels = (8.0 * (t / spec.period).max(1.0)) as usize;
    let mut last: Option<(f64, f64)> = None;
    for _ in 0..10 {
        // Panel boundaries and cumulative G at them.
        let h = t / n_panels as f64;
        let mut g_cum = Vec::with_capacity(n_panels + 1);
        g_cum.push(0.0);
        for i in 0..n_panels {
            let a = h * i as f64;
            let dg = numeric::gl15(rate_sum, a, a + h);
            let prev = *g_cum.last().unwrap();
            g_cum.push(prev + dg);
        }
        let g_total = *g_cum.last().unwrap();
        // S(t) = Σ_panels ∫ f(s) e^{G(s)-G(t)} ds with G(s) resolved inside
        // each panel by a nested short quadrature.
        let mut s_total = 0.0;
        for i in 0..n_panels {
            let a = h * i as f64;
            let g_a = g_cum[i];
            let val = numeric::gl15(
                |s| {
                    let g_s = g_a + numeric::gl15(rate_sum, a, s);
                    weight(s) * (g_s - g_total).exp()
                },
                a,
                a + h,
            );
            s_total += val;
        }
        if let Some((g_prev, s_prev)) = last {
            if (g_prev - g_total).abs() <= QUAD_TOL * g_total.abs().max(1.0)
                && (s_prev - s_total).abs() <= QUAD_TOL
            {
                return Ok((g_total, s_total));
            }
        }
        last = Some((g_total, s_total));
        n_panels *= 2;
    }
    Err(ChainError::QuadratureFailure)
}

/// State probability of the continuous chain at time `t >= 0`; exact
/// exponential branch when the spec is synchronised (p ≡ q).
pub fn continuous_state_prob(
    spec: &ContinuousSpec,
    nu0: StateProb,
    t: f64,
) -> Result<StateProb, ChainError> {
    assert!(t >= 0.0);
    if spec.synchronized {
        let ip = numeric::integrate(|s| spec.p(s), 0.0, t, QUAD_TOL);
        let z = (nu0.nu_plus - nu0.nu_minus) * (-2.0 * ip).exp();
        return Ok(StateProb::new(0.5 - 0.5 * z, 0.5 + 0.5 * z));
    }
    let (g_total, s_q) = weighted_exponential_integral(spec, true, t)?;
    let nu_minus = nu0.nu_minus * (-g_total).exp() + s_q;
    Ok(StateProb::new(nu_minus.clamp(0.0, 1.0), (1.0 - nu_minus).clamp(0.0, 1.0)))
}

/// Invariant measure of the continuous chain at phase `t` in [0, T).
pub fn continuous_invariant(spec: &ContinuousSpec, t: f64) -> Result<StateProb, ChainError> {
    assert!((0.0..spec.period).contains(&t));
    if spec.synchronized {
        return Ok(StateProb::HALF);
    }
    let (g_period, s_q_period) = weighted_exponential_integral(spec, true, spec.period)?;
    if g_period <= 1e-12 {
        return Err(ChainError::DegenerateRates);
    }
    let (g_t, s_q_t) = weighted_exponential_integral(spec, true, t)?;
    // ν̄₋(t) = S_q(t) + S_q(T) e^{G(T)-G(t)} / (g(T)-1) with the scaled
    // integrals S(x) = ∫ q e^{G(s)-G(x)}; the correction term rewrites to
    // S_q(T) e^{-G(t)} g(T)/(g(T)-1) = S_q(T) e^{-G(t)} / (1 - e^{-G(T)}).
    let tail = s_q_period * (-g_t).exp() / (1.0 - (-g_period).exp());
    let nu_minus = s_q_t + tail;
    Ok(StateProb::new(nu_minus, 1.0 - nu_minus))
}

/// First time the Euclidean distance between the state probability and the
/// invariant measure drops to 1/e, for the continuous chain.
///
/// The difference obeys ‖ν(t) - ν̄(t)‖ = √2 |ν₋(0) - ν̄₋(0)| / g(t), which
/// is nonincreasing, so the crossing is found by bisection on
/// G(t) = ∫(p+q).
pub fn relaxation_time(spec: &ContinuousSpec, nu0: StateProb) -> Result<f64, ChainError> {
    let nu_bar0 = continuous_invariant(spec, 0.0)?;
    let delta0 = (nu0.nu_minus - nu_bar0.nu_minus).abs();
    let target = core::f64::consts::SQRT_2 * delta0;
    let threshold = (-1.0f64).exp();
    if target <= threshold {
        return Ok(0.0);
    }
    // Solve G(t*) = ln(√2 Δ0) + 1.
    let needed = (target).ln() + 1.0;
    let g_of = |t: f64| numeric::integrate(|s| spec.p(s) + spec.q(s), 0.0, t, QUAD_TOL);
    let g_period = g_of(spec.period);
    if g_period <= 0.0 {
        return Err(ChainError::DegenerateRates);
    }
    let mut hi = spec.period;
    let mut g_hi = g_period;
    while g_hi < needed {
        hi *= 2.0;
        g_hi = g_of(hi);
    }
    Ok(numeric::bisect(|t| g_of(t) - needed, 0.0, hi, 1e-12))
}

/// Discrete analogue of [`relaxation_time`]: smallest integer `t` with
/// ‖ν(t) - ν̄(t mod T)‖ ≤ 1/e.
pub fn discrete_relaxation_time(spec: &DiscreteSpec, nu0: StateProb) -> u64 {
    let threshold = (-1.0f64).exp();
    let norm = |t: u64| {
        let nu = discrete_state_prob(spec, nu0, t);
        let bar = discrete_invariant(spec, t % spec.period());
        let dx = nu.nu_minus - bar.nu_minus;
        let dy = nu.nu_plus - bar.nu_plus;
        (dx * dx + dy * dy).sqrt()
    };
    let mut t = 0u64;
    loop {
        if norm(t) <= threshold {
            return t;
        }
        t += 1;
        if t > 100_000_000 {
            return t; // unreachable for p, q in (0,1) but keeps this total
        }
    }
}
