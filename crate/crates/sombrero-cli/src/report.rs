//! Human-readable summary of a finished grid bundle.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};

/// Parsed master CSV row.
#[derive(Debug, Clone)]
pub struct MasterRow {
    pub phi: f64,
    pub eps: f64,
    pub n_transitions: u64,
    pub mean_escape_periods: f64,
    pub signature: String,
    pub measures: Vec<f64>, // m1_diff..m6 (8 values)
    pub ks_left: (f64, f64),
    pub ks_right: (f64, f64),
    pub reject: (String, String),
}

pub fn read_master(path: &Path) -> Result<Vec<MasterRow>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 {
            if line != crate::grid::MASTER_HEADER {
                bail!("unexpected master header");
            }
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 19 {
            bail!("master line {}: expected 19 columns, found {}", i + 1, f.len());
        }
        let num = |s: &str| s.parse::<f64>().unwrap_or(f64::NAN);
        rows.push(MasterRow {
            phi: num(f[0]),
            eps: num(f[1]),
            n_transitions: f[2].parse().unwrap_or(0),
            mean_escape_periods: num(f[3]),
            signature: f[4].to_string(),
            measures: f[5..13].iter().map(|s| num(s)).collect(),
            ks_left: (num(f[13]), num(f[14])),
            ks_right: (num(f[15]), num(f[16])),
            reject: (f[17].to_string(), f[18].to_string()),
        });
    }
    Ok(rows)
}

/// Render the bundle summary: one block per cell plus grid-level notes.
pub fn render_report(dir: &Path) -> Result<String> {
    let rows = read_master(&dir.join("master.csv"))?;
    let mut out = String::new();
    writeln!(out, "experiment bundle: {}", dir.display())?;
    writeln!(out, "cells: {}", rows.len())?;
    let failed = rows.iter().filter(|r| r.signature.starts_with("error:")).count();
    if failed > 0 {
        writeln!(out, "failed cells: {failed}")?;
    }
    writeln!(out)?;
    for r in &rows {
        writeln!(out, "cell phi={} eps={}", r.phi, r.eps)?;
        if r.signature.starts_with("error:") {
            writeln!(out, "  {}", r.signature)?;
            continue;
        }
        writeln!(
            out,
            "  transitions: {}  mean escape: {:.4} T  signature: {}",
            r.n_transitions, r.mean_escape_periods, r.signature
        )?;
        writeln!(
            out,
            "  measures 1-2 (diffusion): {:.4e} {:.4e}",
            r.measures[0], r.measures[1]
        )?;
        writeln!(
            out,
            "  measures 1-6 (chain): {:.4e} {:.4e} {:.4e} {:.4e} {:.4e} {:.4e}",
            r.measures[2], r.measures[3], r.measures[4], r.measures[5], r.measures[6], r.measures[7]
        )?;
        writeln!(
            out,
            "  KS left: stat {:.4} q {:.4} reject {}  |  right: stat {:.4} q {:.4} reject {}",
            r.ks_left.0, r.ks_left.1, r.reject.0, r.ks_right.0, r.ks_right.1, r.reject.1
        )?;
    }
    Ok(out)
}
