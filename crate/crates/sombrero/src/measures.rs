//! The six stochastic-resonance measures, single-bin DFT linear response,
//! escape-time histograms and the Single/Intermediate/Double frequency
//! signature.
//!
//! With the invariant profile ν̄±(t), the averaged chain ⟨Y⟩ = ν̄₊ - ν̄₋,
//! the averaged out-of-phase chain ⟨Ȳ⟩ and the half-period indicators
//! φ∓(t), the measures over one period T are
//!
//! ```text
//! M1 = lin/F       M2 = lin/(εF)     M3 = ∫⟨Y⟩² dt
//! M4 = ∫⟨Ȳ⟩ dt     M5 = ∫ φ⁻ ln(φ⁻/ν̄₋) + φ⁺ ln(φ⁺/ν̄₊) dt
//! M6 = ∫ -ν̄₋ ln ν̄₋ - ν̄₊ ln ν̄₊ dt
//! ```
//!
//! where `lin` is the DFT amplitude of the averaged trajectory at the
//! driving frequency. Empirical ν̄ values that are zero or negative are
//! guarded: substituted by the smallest positive observation in M5's
//! logarithm and dropped (limit 0) from M6's x ln x sum.

use alloc::vec::Vec;

#[allow(unused_imports)] // used by the no_std build
use num_traits::Float;

use crate::numeric::phase_mod;
use crate::reduction::InvariantProfile;

/// Source of a measures record: the diffusion carries only M1 and M2 (the
/// chain-independent linear response); the chain carries all six.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasureSource {
    Diffusion,
    Chain,
}

/// The six measures at one experiment cell. For `Diffusion` records the
/// entries `m3..m6` are NaN.
#[derive(Debug, Clone, Copy)]
pub struct MeasuresRecord {
    pub source: MeasureSource,
    pub eps: f64,
    pub phi_deg: f64,
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
    pub m4: f64,
    pub m5: f64,
    pub m6: f64,
}

/// Escape-time histogram in normalised time (durations in periods),
/// binned from zero.
#[derive(Debug, Clone)]
pub struct Histogram {
    pub bin_width: f64,
    pub counts: Vec<u64>,
    pub total: u64,
}

impl Histogram {
    /// Empirical density: count / (total · bin width).
    pub fn density(&self) -> Vec<f64> {
        let norm = 1.0 / (self.total as f64 * self.bin_width);
        self.counts.iter().map(|&c| c as f64 * norm).collect()
    }

    /// Mean of the binned durations (bin midpoints weighted by counts).
    pub fn mean(&self) -> f64 {
        let mut s = 0.0;
        for (i, &c) in self.counts.iter().enumerate() {
            s += (i as f64 + 0.5) * self.bin_width * c as f64;
        }
        s / self.total as f64
    }

    /// Upper edge of the highest occupied bin, in periods.
    pub fn span(&self) -> f64 {
        self.bin_width * self.counts.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeasuresError {
    /// The requested frequency is outside (0, Nyquist].
    FrequencyOutOfRange { requested: f64, nyquist: f64 },
    /// No mass near half-integer multiples of the period: the signature
    /// ratio is undefined.
    DegenerateHistogram,
}

impl core::fmt::Display for MeasuresError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            MeasuresError::FrequencyOutOfRange { requested, nyquist } => {
                write!(f, "frequency {requested} outside (0, {nyquist}]")
            }
            MeasuresError::DegenerateHistogram => {
                write!(f, "no histogram mass near half-integer periods")
            }
        }
    }
}

impl core::error::Error for MeasuresError {}

/// DFT amplitude and phase of a sampled series at the driving frequency
/// `omega`: the bin nearest `Ω/(2π ω_step)` with `ω_step = 1/((N-1) t_step)`,
/// amplitude `2 |X̃| / N` so a unit cosine reads 1, phase its argument.
pub fn linear_response(
    series: &[f64],
    t_step: f64,
    omega: f64,
) -> Result<(f64, f64), MeasuresError> {
    assert!(series.len() >= 2 && t_step > 0.0);
    let n = series.len();
    let freq = omega / (2.0 * core::f64::consts::PI);
    let nyquist = 0.5 / t_step;
    if freq <= 0.0 || freq > nyquist {
        return Err(MeasuresError::FrequencyOutOfRange { requested: freq, nyquist });
    }
    let omega_step = 1.0 / ((n - 1) as f64 * t_step);
    let bin = (freq / omega_step).round() as usize;
    let bin = bin.min(n - 1);
    // Single-bin DFT: X̃_k = Σ x_n e^{-2πi k n / N}.
    let ang_step = -2.0 * core::f64::consts::PI * bin as f64 / n as f64;
    let (mut re, mut im) = (0.0f64, 0.0f64);
    for (i, &x) in series.iter().enumerate() {
        let a = ang_step * i as f64;
        re += x * a.cos();
        im += x * a.sin();
    }
    let amp = 2.0 * (re * re + im * im).sqrt() / n as f64;
    Ok((amp, im.atan2(re)))
}

// M5 / M6 entropy integrals over the invariant profile with the zero
// guards; bins are uniform so the integral is a scaled sum.
fn entropy_measures(invariant: &InvariantProfile) -> (f64, f64) {
    let bins = invariant.bins();
    let dt = invariant.period / bins as f64;
    let positive_min = |vals: &[f64]| {
        vals.iter().copied().filter(|&v| v > 0.0).fold(f64::INFINITY, f64::min)
    };
    let lim_minus = positive_min(&invariant.nu_minus);
    let lim_plus = positive_min(&invariant.nu_plus);
    let mut m5 = 0.0;
    let mut m6 = 0.0;
    for i in 0..bins {
        let (nm, np) = (invariant.nu_minus[i], invariant.nu_plus[i]);
        // φ⁻ = 1 on the first half-period, φ⁺ = 1 on the second.
        let v = if (i as f64 + 0.5) / bins as f64 <= 0.5 { nm } else { np };
        let lim = if (i as f64 + 0.5) / bins as f64 <= 0.5 { lim_minus } else { lim_plus };
        m5 += dt * (1.0 / if v > 0.0 { v } else { lim }).ln();
        if nm > 0.0 {
            m6 -= dt * nm * nm.ln();
        }
        if np > 0.0 {
            m6 -= dt * np * np.ln();
        }
    }
    (m5, m6)
}

/// Compute the six measures for one experiment cell.
///
/// * `mean_x`, `mean_chain`: full averaged time series (for the linear
///   response at `omega`), sampled every `t_step`.
/// * `oop_profile`: averaged out-of-phase chain on the phase bins of
///   `invariant`.
///
/// Returns the diffusion record (M1, M2 from the x response; M3..M6 NaN)
/// and the chain record (all six).
#[allow(clippy::too_many_arguments)]
pub fn six_measures(
    mean_x: &[f64],
    mean_chain: &[f64],
    t_step: f64,
    omega: f64,
    oop_profile: &[f64],
    invariant: &InvariantProfile,
    forcing_magnitude: f64,
    eps: f64,
    phi_deg: f64,
) -> Result<(MeasuresRecord, MeasuresRecord), MeasuresError> {
    assert_eq!(oop_profile.len(), invariant.bins());
    let (x_lin, _) = linear_response(mean_x, t_step, omega)?;
    let (y_lin, _) = linear_response(mean_chain, t_step, omega)?;
    let period = invariant.period;
    let bins = invariant.bins();
    let dt = period / bins as f64;

    let diffusion = MeasuresRecord {
        source: MeasureSource::Diffusion,
        eps,
        phi_deg,
        m1: x_lin / forcing_magnitude,
        m2: x_lin / (eps * forcing_magnitude),
        m3: f64::NAN,
        m4: f64::NAN,
        m5: f64::NAN,
        m6: f64::NAN,
    };

    let m3 = (0..bins)
        .map(|i| {
            let y = invariant.nu_plus[i] - invariant.nu_minus[i];
            y * y * dt
        })
        .sum();
    let m4 = oop_profile.iter().map(|&v| v * dt).sum();
    let (m5, m6) = entropy_measures(invariant);
    let chain = MeasuresRecord {
        source: MeasureSource::Chain,
        eps,
        phi_deg,
        m1: y_lin / forcing_magnitude,
        m2: y_lin / (eps * forcing_magnitude),
        m3,
        m4,
        m5,
        m6,
    };
    Ok((diffusion, chain))
}

/// Default histogram bin width in periods.
pub const DEFAULT_BIN_WIDTH: f64 = 0.05;

/// Histogram of escape durations in normalised time (periods).
pub fn escape_histogram(escape_times: &[f64], period: f64, bin_width: f64) -> Histogram {
    assert!(!escape_times.is_empty() && bin_width > 0.0 && period > 0.0);
    let mut counts: Vec<u64> = Vec::new();
    for &t in escape_times {
        let d = t / period;
        let bin = (d / bin_width) as usize;
        if bin >= counts.len() {
            counts.resize(bin + 1, 0);
        }
        counts[bin] += 1;
    }
    Histogram { bin_width, counts, total: escape_times.len() as u64 }
}

/// Histogram signature: peaks at half-integer periods only (Single), at
/// half-integer and integer periods (Double), or in between.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Signature {
    Single,
    Intermediate,
    Double,
}

impl core::fmt::Display for Signature {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Signature::Single => write!(f, "Single"),
            Signature::Intermediate => write!(f, "Intermediate"),
            Signature::Double => write!(f, "Double"),
        }
    }
}

/// Phase half-window around integer / half-integer multiples, in periods.
pub const SIGNATURE_WINDOW: f64 = 0.1;
/// Classification thresholds on the integer/half-integer mass ratio.
pub const SIGNATURE_SINGLE_MAX: f64 = 0.15;
pub const SIGNATURE_DOUBLE_MIN: f64 = 0.6;

/// Fold the histogram mod one period and compare the mass near integer
/// multiples (I) with the mass near half-integer multiples (H): the ratio
/// r = I/H classifies Single (r < 0.15), Double (r > 0.6) or Intermediate.
pub fn frequency_signature(hist: &Histogram) -> Result<(Signature, f64), MeasuresError> {
    debug_assert!(hist.span() >= 2.0, "histogram should cover at least two periods");
    let mut integer_mass = 0.0f64;
    let mut half_mass = 0.0f64;
    for (i, &c) in hist.counts.iter().enumerate() {
        let centre = (i as f64 + 0.5) * hist.bin_width;
        let phase = phase_mod(centre, 1.0);
        let dist_int = phase.min(1.0 - phase);
        let dist_half = (phase - 0.5).abs();
        if dist_int <= SIGNATURE_WINDOW {
            integer_mass += c as f64;
        }
        if dist_half <= SIGNATURE_WINDOW {
            half_mass += c as f64;
        }
    }
    if half_mass == 0.0 {
        return Err(MeasuresError::DegenerateHistogram);
    }
    let r = integer_mass / half_mass;
    let sig = if r < SIGNATURE_SINGLE_MAX {
        Signature::Single
    } else if r > SIGNATURE_DOUBLE_MIN {
        Signature::Double
    } else {
        Signature::Intermediate
    };
    Ok((sig, r))
}
