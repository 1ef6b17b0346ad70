//! Reduction of a diffusion path to the two-state chain `Y_t = ±1` via
//! moving well neighbourhoods of radius `R`, extraction of entry/exit
//! times, the out-of-phase chain and empirical invariant measures.
//!
//! The discrete rule is one-step delayed and sticky: the state at step
//! `n + 1` is −1 if the position at step `n` lies strictly inside the left
//! well's ball, +1 if inside the right well's ball, and otherwise the state
//! at step `n`.

use alloc::vec::Vec;

use crate::integrator::Trajectory;
use crate::potential::WellTable;
use crate::vec2::Vec2;

/// Which well a transition record belongs to (the well occupied during the
/// run, i.e. the well being escaped from).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Two-state path sampled every `dt` from `t0`.
#[derive(Debug, Clone)]
pub struct ChainPath {
    pub t0: f64,
    pub dt: f64,
    pub radius: f64,
    /// States over {-1, +1}.
    pub states: Vec<i8>,
}

impl ChainPath {
    pub fn time_of(&self, i: usize) -> f64 {
        self.t0 + self.dt * i as f64
    }
}

/// One complete well visit: entry at `enter`, exit at `exit`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionRecord {
    pub enter: f64,
    pub exit: f64,
    pub side: Side,
}

impl TransitionRecord {
    pub fn escape_time(&self) -> f64 {
        self.exit - self.enter
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReduceError {
    /// The two well balls intersect at some phase: R is too large.
    OverlappingWells { min_separation: f64 },
    /// A phase bin of the empirical invariant received no observations.
    InsufficientData { bin: usize },
}

impl core::fmt::Display for ReduceError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ReduceError::OverlappingWells { min_separation } => write!(
                f,
                "well neighbourhoods overlap (minimal separation {min_separation})"
            ),
            ReduceError::InsufficientData { bin } => {
                write!(f, "phase bin {bin} has no observations")
            }
        }
    }
}

impl core::error::Error for ReduceError {}

/// Incremental reducer so that long paths never need to be stored. Feed
/// positions step by step; the current state is available after each push.
pub struct ChainReducer<'a> {
    wells: &'a WellTable,
    r_sq: f64,
    state: i8,
}

impl<'a> ChainReducer<'a> {
    pub fn new(wells: &'a WellTable, radius: f64, initial_state: i8) -> Result<Self, ReduceError> {
        assert!(initial_state == -1 || initial_state == 1);
        let sep = wells.min_separation();
        if sep <= 2.0 * radius {
            return Err(ReduceError::OverlappingWells { min_separation: sep });
        }
        Ok(ChainReducer { wells, r_sq: radius * radius, state: initial_state })
    }

    pub fn state(&self) -> i8 {
        self.state
    }

    /// Consume the position at time `t` (step n) and return the state at
    /// step n + 1.
    pub fn advance(&mut self, t: f64, pos: Vec2) -> i8 {
        if (pos - self.wells.left_at(t)).norm_sq() < self.r_sq {
            self.state = -1;
        } else if (pos - self.wells.right_at(t)).norm_sq() < self.r_sq {
            self.state = 1;
        }
        self.state
    }
}

/// Reduce a recorded trajectory to a chain path.
pub fn reduce_to_chain(
    traj: &Trajectory,
    wells: &WellTable,
    radius: f64,
    initial_state: i8,
) -> Result<ChainPath, ReduceError> {
    let mut reducer = ChainReducer::new(wells, radius, initial_state)?;
    let mut states = Vec::with_capacity(traj.samples.len());
    states.push(initial_state);
    for (i, pos) in traj.samples.iter().enumerate().take(traj.samples.len() - 1) {
        states.push(reducer.advance(traj.time_of(i), *pos));
    }
    Ok(ChainPath { t0: traj.t0, dt: traj.dt_recorded, radius, states })
}

/// Entry/exit records: one per maximal constant run that is preceded and
/// followed by the opposite state. First and last partial runs are dropped.
pub fn extract_transitions(chain: &ChainPath) -> Vec<TransitionRecord> {
    let mut out = Vec::new();
    let n = chain.states.len();
    if n < 2 {
        return out;
    }
    let mut run_start: Option<usize> = None;
    for i in 1..n {
        if chain.states[i] != chain.states[i - 1] {
            if let Some(s) = run_start {
                out.push(TransitionRecord {
                    enter: chain.time_of(s),
                    exit: chain.time_of(i),
                    side: if chain.states[s] < 0 { Side::Left } else { Side::Right },
                });
            }
            run_start = Some(i);
        }
    }
    out
}

/// Streaming transition extractor for fused simulate-and-reduce loops.
pub struct TransitionCollector {
    last_state: i8,
    run_start: Option<f64>,
    pub records: Vec<TransitionRecord>,
}

impl TransitionCollector {
    pub fn new(initial_state: i8) -> Self {
        TransitionCollector { last_state: initial_state, run_start: None, records: Vec::new() }
    }

    pub fn push(&mut self, t: f64, state: i8) {
        if state != self.last_state {
            if let Some(s) = self.run_start {
                self.records.push(TransitionRecord {
                    enter: s,
                    exit: t,
                    side: if self.last_state < 0 { Side::Left } else { Side::Right },
                });
            }
            self.run_start = Some(t);
            self.last_state = state;
        }
    }
}

/// The out-of-phase indicator of a chain: 1 when the state disagrees with
/// the forcing phase (left well in the second half-period or right well in
/// the first), 0 otherwise.
pub fn out_of_phase(chain: &ChainPath, period: f64) -> Vec<u8> {
    assert!(period > 0.0);
    chain
        .states
        .iter()
        .enumerate()
        .map(|(i, &s)| out_of_phase_value(s, chain.time_of(i), period))
        .collect()
}

/// Pointwise out-of-phase value for state `s` at time `t`.
pub fn out_of_phase_value(s: i8, t: f64, period: f64) -> u8 {
    let phase = crate::numeric::phase_mod(t, period);
    let first_half = phase <= 0.5 * period;
    match (s < 0, first_half) {
        (true, true) => 0,
        (true, false) => 1,
        (false, true) => 1,
        (false, false) => 0,
    }
}

/// Empirical invariant measure on [0, T): per phase bin, the fraction of
/// (realisation, period) observations with state +1 after the burn-in.
#[derive(Debug, Clone)]
pub struct InvariantProfile {
    pub period: f64,
    pub nu_minus: Vec<f64>,
    pub nu_plus: Vec<f64>,
}

impl InvariantProfile {
    pub fn bins(&self) -> usize {
        self.nu_plus.len()
    }
}

/// Default number of phase bins per period.
pub const PHASE_BINS: usize = 1000;

/// Accumulates per-phase-bin state counts; merge across realisations by
/// summing.
#[derive(Debug, Clone)]
pub struct PhaseAccumulator {
    pub period: f64,
    pub burn_in: f64,
    pub plus: Vec<u64>,
    pub minus: Vec<u64>,
    pub oop_sum: Vec<u64>,
}

impl PhaseAccumulator {
    pub fn new(period: f64, burn_in_periods: f64, bins: usize) -> Self {
        PhaseAccumulator {
            period,
            burn_in: burn_in_periods * period,
            plus: alloc::vec![0; bins],
            minus: alloc::vec![0; bins],
            oop_sum: alloc::vec![0; bins],
        }
    }

    pub fn push(&mut self, t: f64, state: i8) {
        if t < self.burn_in {
            return;
        }
        let bins = self.plus.len();
        let phase = crate::numeric::phase_mod(t, self.period) / self.period;
        let bin = ((phase * bins as f64) as usize).min(bins - 1);
        if state > 0 {
            self.plus[bin] += 1;
        } else {
            self.minus[bin] += 1;
        }
        self.oop_sum[bin] += u64::from(out_of_phase_value(state, t, self.period));
    }

    pub fn merge(&mut self, other: &PhaseAccumulator) {
        for i in 0..self.plus.len() {
            self.plus[i] += other.plus[i];
            self.minus[i] += other.minus[i];
            self.oop_sum[i] += other.oop_sum[i];
        }
    }

    pub fn invariant(&self) -> Result<InvariantProfile, ReduceError> {
        let mut nu_plus = Vec::with_capacity(self.plus.len());
        for i in 0..self.plus.len() {
            let total = self.plus[i] + self.minus[i];
            if total == 0 {
                return Err(ReduceError::InsufficientData { bin: i });
            }
            nu_plus.push(self.plus[i] as f64 / total as f64);
        }
        let nu_minus = nu_plus.iter().map(|p| 1.0 - p).collect();
        Ok(InvariantProfile { period: self.period, nu_minus, nu_plus })
    }

    /// Mean out-of-phase indicator per phase bin.
    pub fn oop_profile(&self) -> Result<Vec<f64>, ReduceError> {
        (0..self.plus.len())
            .map(|i| {
                let total = self.plus[i] + self.minus[i];
                if total == 0 {
                    Err(ReduceError::InsufficientData { bin: i })
                } else {
                    Ok(self.oop_sum[i] as f64 / total as f64)
                }
            })
            .collect()
    }
}

/// Empirical invariant measure of an ensemble of chains.
pub fn empirical_invariant(
    chains: &[ChainPath],
    period: f64,
    burn_in_periods: f64,
) -> Result<InvariantProfile, ReduceError> {
    assert!(!chains.is_empty());
    let mut acc = PhaseAccumulator::new(period, burn_in_periods, PHASE_BINS);
    for chain in chains {
        for (i, &s) in chain.states.iter().enumerate() {
            acc.push(chain.time_of(i), s);
        }
    }
    acc.invariant()
}
