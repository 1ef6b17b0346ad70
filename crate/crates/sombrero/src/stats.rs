//! Kolmogorov–Smirnov machinery: the asymptotic Kolmogorov CDF
//! `Q(x) = 1 - 2 Σ (-1)^{k-1} e^{-2k²x²}`, the classical one-sample
//! statistic, the conditional KS statistic for observations that are not
//! identically distributed, the exact finite-n distribution and decision
//! rules at the 99% level.
//!
//! The conditional statistic transforms pairs `(u_i, t_i)` through their
//! conditional CDFs, `Y_i = F_{u_i}(t_i)`; under the conditional null the
//! `Y_i` are uniform and `S_n = sup_x |ECDF(x) - x|` is KS distributed.

use alloc::vec::Vec;

#[allow(unused_imports)] // used by the no_std build
use num_traits::Float;

/// Decision summary of a KS test at the configured confidence level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub n: usize,
    pub statistic: f64,
    /// √n · statistic.
    pub scaled: f64,
    /// Q(√n · statistic).
    pub q_value: f64,
    pub reject: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StatsError {
    EmptySample,
    /// A transformed value F_{u_i}(t_i) fell outside [0, 1].
    OutOfSupport,
}

impl core::fmt::Display for StatsError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            StatsError::EmptySample => write!(f, "empty sample"),
            StatsError::OutOfSupport => write!(f, "conditional CDF value outside [0, 1]"),
        }
    }
}

impl core::error::Error for StatsError {}

/// Asymptotic Kolmogorov CDF `Q(x)`. The alternating series is summed to
/// machine convergence for x ≥ 0.2; below that the value is under 1e-17
/// and is clamped to zero.
pub fn kolmogorov_cdf(x: f64) -> f64 {
    assert!(x >= 0.0);
    if x < 0.2 {
        return 0.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..200 {
        let term = (-2.0 * (k * k) as f64 * x * x).exp();
        sum += sign * term;
        if term < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (1.0 - 2.0 * sum).clamp(0.0, 1.0)
}

/// One-sample KS statistic `D_n = sup |F_n - F|` against a continuous CDF,
/// by the sorted-sample formula `max(i/n - F(x_(i)), F(x_(i)) - (i-1)/n)`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64, StatsError> {
    if samples.is_empty() {
        return Err(StatsError::EmptySample);
    }
    let mut sorted: Vec<f64> = samples.to_vec();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    let mut sup = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        sup = sup.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    Ok(sup)
}

/// Conditional KS statistic `S_n` for pairs `(u_i, t_i)` against the CDF
/// family `family(u, t) = F_u(t)`.
pub fn conditional_ks(
    pairs: &[(f64, f64)],
    family: impl Fn(f64, f64) -> f64,
) -> Result<f64, StatsError> {
    if pairs.is_empty() {
        return Err(StatsError::EmptySample);
    }
    let mut transformed = Vec::with_capacity(pairs.len());
    for &(u, t) in pairs {
        let y = family(u, t);
        if !(0.0..=1.0).contains(&y) {
            return Err(StatsError::OutOfSupport);
        }
        transformed.push(y);
    }
    ks_statistic(&transformed, |x| x.clamp(0.0, 1.0))
}

/// Exact finite-n KS distribution P(D_n < d) (matrix method of Marsaglia,
/// Tsang and Wang).
pub fn ks_finite_cdf(n: usize, d: f64) -> f64 {
    assert!(n >= 1);
    if d <= 1.0 / (2.0 * n as f64) {
        return 0.0;
    }
    if d >= 1.0 {
        return 1.0;
    }
    let nd = n as f64 * d;
    let k = nd.ceil() as usize;
    let h = k as f64 - nd;
    let m = 2 * k - 1;
    // Build H.
    let mut mat = alloc::vec![0.0f64; m * m];
    for i in 0..m {
        for j in 0..m {
            if i as i64 - j as i64 + 1 >= 0 {
                mat[i * m + j] = 1.0;
            }
        }
    }
    for i in 0..m {
        mat[i * m] -= h.powi(i as i32 + 1);
        mat[(m - 1) * m + i] -= h.powi((m - i) as i32);
    }
    mat[(m - 1) * m] += if 2.0 * h - 1.0 > 0.0 { (2.0 * h - 1.0).powi(m as i32) } else { 0.0 };
    for i in 0..m {
        for j in 0..m {
            if i as i64 - j as i64 + 1 > 0 {
                for g in 1..=(i - j + 1) {
                    mat[i * m + j] /= g as f64;
                }
            }
        }
    }
    // H^n with scaling to avoid overflow.
    let (pow, mut e_q) = mat_pow(&mat, m, n);
    let mut p = pow[(k - 1) * m + (k - 1)];
    for i in 1..=n {
        p *= i as f64 / n as f64;
        if p < 1e-140 {
            p *= 1e140;
            e_q -= 140;
        }
    }
    p * 10.0f64.powi(e_q)
}

// Matrix power with decimal-exponent scaling; returns (matrix, exponent).
fn mat_pow(mat: &[f64], m: usize, n: usize) -> (Vec<f64>, i32) {
    if n == 1 {
        return (mat.to_vec(), 0);
    }
    let (half, mut e) = mat_pow(mat, m, n / 2);
    let mut sq = mat_mul(&half, &half, m);
    e *= 2;
    if n % 2 == 1 {
        sq = mat_mul(&sq, mat, m);
    }
    if sq[(m / 2) * m + (m / 2)] > 1e140 {
        for v in &mut sq {
            *v *= 1e-140;
        }
        e += 140;
    }
    (sq, e)
}

fn mat_mul(a: &[f64], b: &[f64], m: usize) -> Vec<f64> {
    let mut c = alloc::vec![0.0f64; m * m];
    for i in 0..m {
        for k in 0..m {
            let aik = a[i * m + k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..m {
                c[i * m + j] += aik * b[k * m + j];
            }
        }
    }
    c
}

/// Critical value of D_n at the 99% level for n < 100, from the exact
/// finite-n distribution, except the classical printed anchor 0.356 at
/// n = 20 which the decision rule is pinned to. For n ≥ 100 the rule is
/// the asymptotic 1.6920/√n.
pub fn critical_value_99(n: usize) -> f64 {
    assert!(n >= 1);
    if n >= 100 {
        return 1.6920 / (n as f64).sqrt();
    }
    if n == 20 {
        // Classical table entry (the exact value is 0.35241).
        return 0.356;
    }
    crate::numeric::bisect(|d| ks_finite_cdf(n, d) - 0.99, 1.0 / (2.0 * n as f64), 1.0, 1e-10)
}

/// Supported confidence levels of the decision rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Confidence {
    P99,
}

/// Decision at the given confidence: reject when the statistic exceeds the
/// critical value; the q-value Q(√n · statistic) is always reported.
pub fn ks_decision(statistic: f64, n: usize, _confidence: Confidence) -> KsResult {
    assert!(n >= 1);
    let scaled = (n as f64).sqrt() * statistic;
    KsResult {
        n,
        statistic,
        scaled,
        q_value: kolmogorov_cdf(scaled.max(0.0)),
        reject: statistic > critical_value_99(n),
    }
}
