//! On-disk artifact formats.
//!
//! * Trajectory CSV `t,x,y` (full precision) and the compact binary form:
//!   magic `STRJ1`, then little-endian `t0`, `dt`, `seed` (u64), count
//!   (u64) and `count` pairs of f64 `(x, y)`.
//! * Transitions CSV `enter,exit,side,escape_time,enter_phase`.
//! * Rate table CSV `phase,rate_lr,rate_rl`.
//! * Measures CSV `phi,eps,source,m1,m2,m3,m4,m5,m6`.
//! * Histogram CSV `bin_start,count,density`.
//! * KS report CSV `n,statistic,scaled,q_value,reject`.
//! * Plan report JSON (all fields of the plan).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sombrero::integrator::Trajectory;
use sombrero::kramers::RateFunction;
use sombrero::measures::{Histogram, MeasuresRecord};
use sombrero::planner::PlanReport;
use sombrero::reduction::{Side, TransitionRecord};
use sombrero::stats::KsResult;
use sombrero::Vec2;

pub const TRAJECTORY_MAGIC: &[u8; 5] = b"STRJ1";

pub fn write_trajectory_csv(path: &Path, traj: &Trajectory) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "t,x,y")?;
    for (i, s) in traj.samples.iter().enumerate() {
        writeln!(w, "{},{},{}", traj.time_of(i), s.x, s.y)?;
    }
    Ok(())
}

pub fn write_trajectory_bin(path: &Path, traj: &Trajectory) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(TRAJECTORY_MAGIC)?;
    w.write_all(&traj.t0.to_le_bytes())?;
    w.write_all(&traj.dt_recorded.to_le_bytes())?;
    w.write_all(&traj.seed.to_le_bytes())?;
    w.write_all(&(traj.samples.len() as u64).to_le_bytes())?;
    for s in &traj.samples {
        w.write_all(&s.x.to_le_bytes())?;
        w.write_all(&s.y.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_trajectory_bin(path: &Path) -> Result<Trajectory> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 5];
    r.read_exact(&mut magic)?;
    if &magic != TRAJECTORY_MAGIC {
        bail!("not a trajectory file (bad magic)");
    }
    let mut f = [0u8; 8];
    let mut read_f64 = |r: &mut BufReader<File>| -> Result<f64> {
        r.read_exact(&mut f)?;
        Ok(f64::from_le_bytes(f))
    };
    let t0 = read_f64(&mut r)?;
    let dt = read_f64(&mut r)?;
    let mut u = [0u8; 8];
    r.read_exact(&mut u)?;
    let seed = u64::from_le_bytes(u);
    r.read_exact(&mut u)?;
    let n = u64::from_le_bytes(u) as usize;
    let mut samples = Vec::with_capacity(n);
    let mut buf = [0u8; 16];
    for _ in 0..n {
        r.read_exact(&mut buf)?;
        samples.push(Vec2::new(
            f64::from_le_bytes(buf[..8].try_into().unwrap()),
            f64::from_le_bytes(buf[8..].try_into().unwrap()),
        ));
    }
    Ok(Trajectory { t0, dt_recorded: dt, seed, samples })
}

pub fn read_trajectory_csv(path: &Path) -> Result<Trajectory> {
    let r = BufReader::new(File::open(path)?);
    let mut samples = Vec::new();
    let mut times: Vec<f64> = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if i == 0 {
            continue; // header
        }
        let mut it = line.split(',');
        let t: f64 = it.next().context("missing t")?.parse()?;
        let x: f64 = it.next().context("missing x")?.parse()?;
        let y: f64 = it.next().context("missing y")?.parse()?;
        times.push(t);
        samples.push(Vec2::new(x, y));
    }
    if samples.len() < 2 {
        bail!("trajectory needs at least two samples");
    }
    Ok(Trajectory { t0: times[0], dt_recorded: times[1] - times[0], seed: 0, samples })
}

pub fn side_label(side: Side) -> &'static str {
    match side {
        Side::Left => "left",
        Side::Right => "right",
    }
}

pub fn write_transitions_csv(
    path: &Path,
    records: &[TransitionRecord],
    period: f64,
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "enter,exit,side,escape_time,enter_phase")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.enter,
            r.exit,
            side_label(r.side),
            r.escape_time(),
            (r.enter % period + period) % period / period,
        )?;
    }
    Ok(())
}

pub fn read_transitions_csv(path: &Path) -> Result<Vec<TransitionRecord>> {
    let r = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if i == 0 {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() < 3 {
            bail!("transitions line {}: expected at least 3 fields", i + 1);
        }
        let side = match parts[2] {
            "left" => Side::Left,
            "right" => Side::Right,
            other => bail!("unknown side {other:?}"),
        };
        out.push(TransitionRecord { enter: parts[0].parse()?, exit: parts[1].parse()?, side });
    }
    Ok(out)
}

pub fn write_rate_table_csv(path: &Path, lr: &RateFunction, rl: &RateFunction) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "phase,rate_lr,rate_rl")?;
    let n = lr.values().len();
    for i in 0..n {
        let phase = i as f64 / n as f64;
        writeln!(w, "{},{},{}", phase, lr.values()[i], rl.values()[i])?;
    }
    Ok(())
}

pub fn measures_csv_header() -> &'static str {
    "phi,eps,source,m1,m2,m3,m4,m5,m6"
}

pub fn measures_csv_row(r: &MeasuresRecord) -> String {
    let source = match r.source {
        sombrero::measures::MeasureSource::Diffusion => "diffusion",
        sombrero::measures::MeasureSource::Chain => "chain",
    };
    format!(
        "{},{},{},{},{},{},{},{},{}",
        r.phi_deg, r.eps, source, r.m1, r.m2, r.m3, r.m4, r.m5, r.m6
    )
}

pub fn write_measures_csv(path: &Path, records: &[MeasuresRecord]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{}", measures_csv_header())?;
    for r in records {
        writeln!(w, "{}", measures_csv_row(r))?;
    }
    Ok(())
}

pub fn write_histogram_csv(path: &Path, hist: &Histogram) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "bin_start,count,density")?;
    let density = hist.density();
    for (i, (&c, d)) in hist.counts.iter().zip(&density).enumerate() {
        writeln!(w, "{},{},{}", i as f64 * hist.bin_width, c, d)?;
    }
    Ok(())
}

pub fn ks_csv_header() -> &'static str {
    "n,statistic,scaled,q_value,reject"
}

pub fn ks_csv_row(r: &KsResult) -> String {
    format!("{},{},{},{},{}", r.n, r.statistic, r.scaled, r.q_value, r.reject)
}

pub fn write_ks_csv(path: &Path, results: &[KsResult]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{}", ks_csv_header())?;
    for r in results {
        writeln!(w, "{}", ks_csv_row(r))?;
    }
    Ok(())
}

/// Serializable mirror of the plan report.
#[derive(Debug, Serialize, Deserialize)]
pub struct PlanJson {
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

impl From<&PlanReport> for PlanJson {
    fn from(p: &PlanReport) -> Self {
        PlanJson {
            t1: p.t1,
            t2: p.t2,
            t3: p.t3,
            t4: p.t4,
            t5: p.t5,
            t6: p.t6,
            r1: p.r1,
            r2: p.r2,
            t_end: p.t_end,
            recommended_t_step: p.recommended_t_step,
            recommended_r: p.recommended_r,
            n1: p.n1,
            n2: p.n2,
            n3: p.n3,
            delta: p.delta,
        }
    }
}

pub fn write_plan_json(path: &Path, plan: &PlanReport) -> Result<()> {
    let json = serde_json::to_string_pretty(&PlanJson::from(plan))?;
    std::fs::write(path, json)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn trajectory_binary_round_trip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("t.strj");
        let traj = Trajectory {
            t0: 1.5,
            dt_recorded: 0.14,
            seed: 99,
            samples: vec![Vec2::new(0.1, -0.2), Vec2::new(1e-17, 3.0), Vec2::new(-4.0, 5.5)],
        };
        write_trajectory_bin(&path, &traj).unwrap();
        let back = read_trajectory_bin(&path).unwrap();
        assert_eq!(back.t0, 1.5);
        assert_eq!(back.dt_recorded, 0.14);
        assert_eq!(back.seed, 99);
        assert_eq!(back.samples, traj.samples);
    }

    #[test]
    fn trajectory_csv_round_trip_full_precision() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let traj = Trajectory {
            t0: 0.0,
            dt_recorded: 0.5,
            seed: 0,
            samples: vec![
                Vec2::new(0.1 + 0.2, core::f64::consts::PI),
                Vec2::new(f64::MIN_POSITIVE, -1.0 / 3.0),
            ],
        };
        write_trajectory_csv(&path, &traj).unwrap();
        let back = read_trajectory_csv(&path).unwrap();
        assert_eq!(back.samples, traj.samples);
    }

    #[test]
    fn transitions_round_trip_and_phase_column() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("tr.csv");
        let records = vec![
            TransitionRecord { enter: 12.0, exit: 19.0, side: Side::Left },
            TransitionRecord { enter: 19.0, exit: 31.5, side: Side::Right },
        ];
        write_transitions_csv(&path, &records, 10.0).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "enter,exit,side,escape_time,enter_phase");
        assert_eq!(lines.next().unwrap(), "12,19,left,7,0.2");
        let back = read_transitions_csv(&path).unwrap();
        assert_eq!(back, records);
    }

    #[test]
    fn bad_magic_is_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad.strj");
        std::fs::write(&path, b"NOPE!xxxxxxxx").unwrap();
        assert!(read_trajectory_bin(&path).is_err());
    }
}
