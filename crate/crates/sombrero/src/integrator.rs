//! Euler–Maruyama simulation of the forced SDE
//!
//! ```text
//! dx = [-∂V0/∂x + Fx cos Ωt] dt + ε dWx
//! dy = [-∂V0/∂y + Fy cos Ωt] dt + ε dWy
//! ```
//!
//! with the scheme `z_n = z_{n-1} + drift(z_{n-1}, t_{n-1}) t_step
//! + ε sqrt(t_step) ξ`, two independent standard normal draws per step
//! (x first, then y). Runs are deterministic in the seed; ensemble
//! realisation `k` uses stream `k` of the counter-based generator.

use alloc::vec::Vec;

#[allow(unused_imports)] // used by the no_std build
use num_traits::Float;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::potential::{drift, Forcing, ModelParams};
use crate::vec2::Vec2;

/// Simulation window, start point, seed and recording stride.
#[derive(Debug, Clone, Copy)]
pub struct SimConfig {
    pub t_start: f64,
    pub t_step: f64,
    pub t_end: f64,
    pub start: Vec2,
    pub seed: u64,
    /// Store every k-th step in the returned trajectory (k >= 1). The
    /// integration itself always runs at full resolution.
    pub record_stride: usize,
}

impl SimConfig {
    pub fn new(t_start: f64, t_step: f64, t_end: f64, start: Vec2, seed: u64) -> Self {
        assert!(t_step > 0.0 && t_end > t_start);
        SimConfig { t_start, t_step, t_end, start, seed, record_stride: 10 }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        assert!(stride >= 1);
        self.record_stride = stride;
        self
    }

    pub fn n_steps(&self) -> usize {
        ((self.t_end - self.t_start) / self.t_step).ceil() as usize
    }
}

/// A recorded path: samples every `dt_recorded` starting at `t0`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub t0: f64,
    pub dt_recorded: f64,
    pub seed: u64,
    pub samples: Vec<Vec2>,
}

impl Trajectory {
    pub fn time_of(&self, i: usize) -> f64 {
        self.t0 + self.dt_recorded * i as f64
    }
}

/// Pointwise ensemble mean of `x` and `y`.
#[derive(Debug, Clone)]
pub struct EnsembleMean {
    pub t0: f64,
    pub dt_recorded: f64,
    pub mean: Vec<Vec2>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SimError {
    /// A coordinate left the finite range (time step too large).
    NonFinite { t: f64 },
}

impl core::fmt::Display for SimError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            SimError::NonFinite { t } => write!(f, "trajectory became non-finite at t = {t}"),
        }
    }
}

impl core::error::Error for SimError {}

/// Deterministic per-realisation generator: stream `k` of the seeded
/// ChaCha generator, so realisations are independent and the ensemble is
/// reproducible from the master seed alone.
pub fn realization_rng(seed: u64, realization: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(realization);
    rng
}

/// Run one path, invoking `sink(step_index, t, position)` at every step at
/// full resolution (including the initial point at step 0).
pub fn simulate_with<F>(
    model: ModelParams,
    forcing: &Forcing,
    eps: f64,
    cfg: &SimConfig,
    rng: &mut ChaCha8Rng,
    mut sink: F,
) -> Result<(), SimError>
where
    F: FnMut(usize, f64, Vec2),
{
    assert!(eps >= 0.0);
    let n = cfg.n_steps();
    let sqrt_dt = cfg.t_step.sqrt();
    let mut z = cfg.start;
    let mut t = cfg.t_start;
    sink(0, t, z);
    for i in 1..=n {
        let d = drift(model, forcing, z, t);
        let (gx, gy): (f64, f64) =
            (StandardNormal.sample(rng), StandardNormal.sample(rng));
        z = Vec2::new(
            z.x + d.x * cfg.t_step + eps * sqrt_dt * gx,
            z.y + d.y * cfg.t_step + eps * sqrt_dt * gy,
        );
        t = cfg.t_start + cfg.t_step * i as f64;
        if !z.is_finite() {
            return Err(SimError::NonFinite { t });
        }
        sink(i, t, z);
    }
    Ok(())
}

/// Run one path and record every `record_stride`-th step.
pub fn simulate(
    model: ModelParams,
    forcing: &Forcing,
    eps: f64,
    cfg: &SimConfig,
) -> Result<Trajectory, SimError> {
    let mut rng = realization_rng(cfg.seed, 0);
    let stride = cfg.record_stride;
    let mut samples = Vec::with_capacity(cfg.n_steps() / stride + 2);
    simulate_with(model, forcing, eps, cfg, &mut rng, |i, _t, z| {
        if i % stride == 0 {
            samples.push(z);
        }
    })?;
    Ok(Trajectory {
        t0: cfg.t_start,
        dt_recorded: cfg.t_step * stride as f64,
        seed: cfg.seed,
        samples,
    })
}

/// Pointwise mean over `n_realizations` independent paths; realisation `k`
/// draws from stream `k`, so the result does not depend on the order of
/// execution.
pub fn simulate_ensemble(
    model: ModelParams,
    forcing: &Forcing,
    eps: f64,
    cfg: &SimConfig,
    n_realizations: usize,
) -> Result<EnsembleMean, SimError> {
    assert!(n_realizations >= 1);
    let stride = cfg.record_stride;
    let mut sums: Vec<Vec2> = Vec::new();
    for k in 0..n_realizations {
        let mut rng = realization_rng(cfg.seed, k as u64);
        let mut idx = 0usize;
        simulate_with(model, forcing, eps, cfg, &mut rng, |i, _t, z| {
            if i % stride == 0 {
                if k == 0 {
                    sums.push(z);
                } else {
                    sums[idx] += z;
                    idx += 1;
                }
            }
        })?;
    }
    let inv = 1.0 / n_realizations as f64;
    for s in &mut sums {
        *s = *s * inv;
    }
    Ok(EnsembleMean { t0: cfg.t_start, dt_recorded: cfg.t_step * stride as f64, mean: sums })
}

/// Deterministic descent (ε = 0) against the potential frozen at
/// `t_fix`. Used for stability checks of the Euler map.
pub fn descend(
    model: ModelParams,
    forcing: &Forcing,
    t_fix: f64,
    start: Vec2,
    t_step: f64,
    max_t: f64,
) -> Result<Trajectory, SimError> {
    assert!(t_step > 0.0 && max_t > 0.0);
    let n = (max_t / t_step).ceil() as usize;
    let mut samples = Vec::with_capacity(n + 1);
    let mut z = start;
    samples.push(z);
    for i in 1..=n {
        let d = drift(model, forcing, z, t_fix);
        z = Vec2::new(z.x + d.x * t_step, z.y + d.y * t_step);
        if !z.is_finite() {
            return Err(SimError::NonFinite { t: t_step * i as f64 });
        }
        samples.push(z);
    }
    Ok(Trajectory { t0: 0.0, dt_recorded: t_step, seed: 0, samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::critical_forces;

    fn model() -> ModelParams {
        ModelParams::new(0.15, 0.1)
    }

    fn no_force() -> Forcing {
        Forcing::new(0.0, 0.0, 0.001)
    }

    #[test]
    fn zero_noise_fixed_point_stays_put() {
        let well = Vec2::new(1.3f64.sqrt(), 0.0);
        let cfg = SimConfig::new(0.0, 0.014, 10.0, well, 7).with_stride(1);
        let traj = simulate(model(), &no_force(), 0.0, &cfg).unwrap();
        for s in &traj.samples {
            assert!(s.dist(well) < 1e-12);
        }
    }

    #[test]
    fn deterministic_descent_reaches_left_well() {
        // Reference integration at t_step/10 is the oracle.
        let start = Vec2::new(-0.75, -0.75);
        let target = Vec2::new(-(1.3f64.sqrt()), 0.0);
        let coarse = SimConfig::new(0.0, 0.014, 100.0, start, 0).with_stride(1);
        let fine = SimConfig::new(0.0, 0.0014, 100.0, start, 0).with_stride(1);
        let a = simulate(model(), &no_force(), 0.0, &coarse).unwrap();
        let b = simulate(model(), &no_force(), 0.0, &fine).unwrap();
        let za = *a.samples.last().unwrap();
        let zb = *b.samples.last().unwrap();
        assert!(za.dist(target) < 1e-3, "coarse endpoint {za:?}");
        assert!(zb.dist(target) < 1e-6);
        assert!(za.dist(zb) < 1e-3);
    }

    #[test]
    fn descend_from_corners_terminates_in_a_well() {
        let m = model();
        let fc = critical_forces(m);
        let forcing = Forcing::new(0.7 * fc.f_crit, 75.0, 0.001);
        let (fx, fy) = forcing.tilt_at(0.0);
        let wells: Vec<Vec2> = crate::potential::critical_points_static(m, fx, fy)
            .unwrap()
            .into_iter()
            .filter(|p| p.kind == crate::potential::PointKind::Well)
            .map(|p| p.position)
            .collect();
        for (sx, sy) in [(2.0, 2.0), (2.0, -2.0), (-2.0, 2.0), (-2.0, -2.0)] {
            let traj = descend(m, &forcing, 0.0, Vec2::new(sx, sy), 0.014, 400.0).unwrap();
            let end = *traj.samples.last().unwrap();
            // Tenfold finer reference integration agrees and both settle
            // at a well of the frozen potential.
            let fine = descend(m, &forcing, 0.0, Vec2::new(sx, sy), 0.0014, 400.0).unwrap();
            let end_fine = *fine.samples.last().unwrap();
            assert!(end.dist(end_fine) < 1e-3);
            assert!(wells.iter().any(|w| end.dist(*w) < 1e-3));
        }
    }

    #[test]
    fn huge_step_is_unstable() {
        let r = descend(model(), &no_force(), 0.0, Vec2::new(-0.75, -0.75), 1.0, 200.0);
        match r {
            Err(SimError::NonFinite { .. }) => {}
            Ok(traj) => {
                // If it stays finite it must not have settled at a well.
                let end = *traj.samples.last().unwrap();
                assert!(end.dist(Vec2::new(-(1.3f64.sqrt()), 0.0)) > 1e-3);
            }
        }
    }

    #[test]
    fn determinism_and_single_realization_mean() {
        let cfg = SimConfig::new(0.0, 0.014, 50.0, Vec2::new(1.0, 0.0), 42).with_stride(5);
        let a = simulate(model(), &no_force(), 0.3, &cfg).unwrap();
        let b = simulate(model(), &no_force(), 0.3, &cfg).unwrap();
        assert_eq!(a.samples, b.samples);

        let mean = simulate_ensemble(model(), &no_force(), 0.3, &cfg, 1).unwrap();
        assert_eq!(mean.mean.len(), a.samples.len());
        for (m, s) in mean.mean.iter().zip(&a.samples) {
            assert!(m.dist(*s) < 1e-15);
        }
    }

    #[test]
    fn zero_noise_ensemble_equals_single_path() {
        let cfg = SimConfig::new(0.0, 0.014, 30.0, Vec2::new(-0.5, 0.4), 3).with_stride(2);
        let single = simulate(model(), &no_force(), 0.0, &cfg).unwrap();
        let mean = simulate_ensemble(model(), &no_force(), 0.0, &cfg, 8).unwrap();
        for (m, s) in mean.mean.iter().zip(&single.samples) {
            assert!(m.dist(*s) < 1e-12);
        }
    }

    #[test]
    fn child_streams_are_uncorrelated() {
        let mut r0 = realization_rng(99, 0);
        let mut r1 = realization_rng(99, 1);
        let n = 1_000_000;
        let (mut sxy, mut sx, mut sy, mut sxx, mut syy) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for _ in 0..n {
            let a: f64 = StandardNormal.sample(&mut r0);
            let b: f64 = StandardNormal.sample(&mut r1);
            sx += a;
            sy += b;
            sxy += a * b;
            sxx += a * a;
            syy += b * b;
        }
        let nf = n as f64;
        let cov = sxy / nf - (sx / nf) * (sy / nf);
        let rho = cov / ((sxx / nf - (sx / nf).powi(2)).sqrt() * (syy / nf - (sy / nf).powi(2)).sqrt());
        assert!(rho.abs() < 0.01, "rho = {rho}");
    }

    #[test]
    fn ou_stationary_variance_matches_curvature() {
        // Near the right well the x-curvature is 2.6; stationary variance
        // of the linearised dynamics is eps^2 / (2 k).
        let m = model();
        let eps = 0.05;
        let cfg = SimConfig::new(0.0, 0.014, 0.014 * 2.0e6, Vec2::new(1.3f64.sqrt(), 0.0), 11)
            .with_stride(1);
        let mut rng = realization_rng(cfg.seed, 0);
        let (mut count, mut sum, mut sum2) = (0u64, 0.0f64, 0.0f64);
        let burn = 100_000usize;
        simulate_with(m, &no_force(), eps, &cfg, &mut rng, |i, _t, z| {
            if i > burn {
                count += 1;
                sum += z.x;
                sum2 += z.x * z.x;
            }
        })
        .unwrap();
        let meanx = sum / count as f64;
        let var = sum2 / count as f64 - meanx * meanx;
        let expected = eps * eps / (2.0 * 2.6);
        assert!(
            (var - expected).abs() < 0.05 * expected,
            "var = {var}, expected = {expected}"
        );
    }
}
