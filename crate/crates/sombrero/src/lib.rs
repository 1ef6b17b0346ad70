//! Simulation and statistical analysis of stochastic resonance in a planar
//! double-well potential with two transition pathways (the "sombrero" or
//! Mexican-hat potential).
//!
//! The library is organised around the experiment pipeline:
//!
//! * [`potential`] — the potential, its derivatives and the complete
//!   critical-point structure under arbitrary forcing.
//! * [`integrator`] — Euler–Maruyama simulation of the forced SDE.
//! * [`reduction`] — reduction of a diffusion path to a two-state chain via
//!   moving well neighbourhoods, escape-time extraction and empirical
//!   invariant measures.
//! * [`chain`] — closed-form theory of periodically driven two-state Markov
//!   chains, discrete and continuous time.
//! * [`kramers`] — Kramers escape rates, adiabatic rate functions and
//!   escape-time distributions.
//! * [`measures`] — the six resonance measures, linear response and
//!   escape-time histograms.
//! * [`stats`] — Kolmogorov–Smirnov machinery including the conditional KS
//!   statistic for non-identically distributed observations.
//! * [`planner`] — precision planning: time-step and radius bounds, Marcum-Q
//!   jump probabilities and the iterative-map stability check.
//!
//! The crate is `no_std` (with `alloc`); everything here is pure computation.
//! File formats, the CLI and parallel experiment orchestration live in the
//! companion `sombrero-cli` crate.

#![no_std]

extern crate alloc;

pub mod chain;
pub mod integrator;
pub mod kramers;
pub mod measures;
mod numeric;
pub mod planner;
pub mod potential;
pub mod reduction;
pub mod stats;
mod vec2;

pub use vec2::Vec2;
