//! File formats, configuration, grid orchestration and reporting for the
//! sombrero stochastic-resonance toolkit. The numerics live in the
//! `sombrero` core crate; this crate carries everything that touches the
//! filesystem or threads.

pub mod config;
pub mod formats;
pub mod grid;
pub mod report;
