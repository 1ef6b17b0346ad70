//! Plain-text experiment configuration: one `key = value` per line,
//! `[section]` headers, `#` comments. Lists are whitespace- or
//! comma-separated; `t_step` and `radius` accept the literal `plan` to
//! defer to the planner.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};

/// Value or "ask the planner".
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Planned {
    Explicit(f64),
    Plan,
}

impl Planned {
    pub fn resolve(&self, planned: f64) -> f64 {
        match self {
            Planned::Explicit(v) => *v,
            Planned::Plan => planned,
        }
    }
}

/// The full experiment coordinate grid and run parameters.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub a: f64,
    pub b: f64,
    /// Forcing magnitude as a multiple of the critical forcing.
    pub f_factor: f64,
    pub phi_deg: Vec<f64>,
    pub omega: f64,
    pub eps: Vec<f64>,
    pub t_step: Planned,
    pub radius: Planned,
    pub realizations: usize,
    pub periods: f64,
    pub burn_in_periods: f64,
    pub seed: u64,
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            a: 0.15,
            b: 0.1,
            f_factor: 0.7,
            phi_deg: vec![0.0, 75.0, 78.0, 81.0, 84.0, 87.0, 90.0],
            omega: 0.001,
            eps: (15..=30).map(|i| i as f64 / 100.0).collect(),
            t_step: Planned::Explicit(0.014),
            radius: Planned::Explicit(0.19),
            realizations: 200,
            periods: 30.0,
            burn_in_periods: 5.0,
            seed: 1,
            out_dir: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.a <= 0.0 || self.b <= 0.0 {
            bail!("shape parameters must be positive");
        }
        if self.eps.is_empty() {
            bail!("noise list is empty");
        }
        if self.phi_deg.is_empty() {
            bail!("angle list is empty");
        }
        if self.realizations < 1 {
            bail!("realizations must be at least 1");
        }
        if self.eps.iter().any(|&e| e <= 0.0) {
            bail!("noise levels must be positive");
        }
        if self.periods <= self.burn_in_periods {
            bail!("periods must exceed the burn-in");
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        let mut section = String::new();
        let mut seen: BTreeMap<String, String> = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if line.starts_with('[') && line.ends_with(']') {
                section = line[1..line.len() - 1].trim().to_lowercase();
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected key = value", lineno + 1))?;
            let full = if section.is_empty() {
                key.trim().to_lowercase()
            } else {
                format!("{section}.{}", key.trim().to_lowercase())
            };
            seen.insert(full, value.trim().to_string());
        }

        let num = |v: &str| -> Result<f64> {
            v.parse::<f64>().map_err(|_| anyhow!("invalid number {v:?}"))
        };
        let list = |v: &str| -> Result<Vec<f64>> {
            v.split(|c: char| c.is_whitespace() || c == ',')
                .filter(|s| !s.is_empty())
                .map(num)
                .collect()
        };
        let planned = |v: &str| -> Result<Planned> {
            if v.eq_ignore_ascii_case("plan") {
                Ok(Planned::Plan)
            } else {
                Ok(Planned::Explicit(num(v)?))
            }
        };

        for (key, value) in &seen {
            match key.as_str() {
                "model.a" => cfg.a = num(value)?,
                "model.b" => cfg.b = num(value)?,
                "forcing.f_factor" => cfg.f_factor = num(value)?,
                "forcing.phi_deg" => cfg.phi_deg = list(value)?,
                "forcing.omega" => cfg.omega = num(value)?,
                "noise.eps" => cfg.eps = list(value)?,
                "simulation.t_step" => cfg.t_step = planned(value)?,
                "simulation.radius" => cfg.radius = planned(value)?,
                "simulation.realizations" => cfg.realizations = num(value)? as usize,
                "simulation.periods" => cfg.periods = num(value)?,
                "simulation.burn_in_periods" => cfg.burn_in_periods = num(value)?,
                "simulation.seed" => cfg.seed = num(value)? as u64,
                "output.dir" => cfg.out_dir = PathBuf::from(value),
                other => bail!("unknown configuration key {other:?}"),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_lists_and_comments() {
        let text = "
# experiment
[model]
a = 0.2
b = 0.15
[forcing]
phi_deg = 0, 45 90   # three angles
omega = 0.01
[noise]
eps = 0.2 0.25
[simulation]
t_step = plan
radius = 0.19
realizations = 8
periods = 10
seed = 99
[output]
dir = /tmp/somewhere
";
        let cfg = ExperimentConfig::parse(text).unwrap();
        assert_eq!(cfg.a, 0.2);
        assert_eq!(cfg.phi_deg, vec![0.0, 45.0, 90.0]);
        assert_eq!(cfg.eps, vec![0.2, 0.25]);
        assert_eq!(cfg.t_step, Planned::Plan);
        assert_eq!(cfg.radius, Planned::Explicit(0.19));
        assert_eq!(cfg.seed, 99);
        assert_eq!(cfg.out_dir, PathBuf::from("/tmp/somewhere"));
    }

    #[test]
    fn defaults_reproduce_the_production_grid() {
        let cfg = ExperimentConfig::default();
        assert_eq!(cfg.eps.len(), 16);
        assert_eq!(cfg.phi_deg.len(), 7);
        assert_eq!(cfg.realizations, 200);
        assert_eq!(cfg.periods, 30.0);
        assert_eq!(cfg.t_step, Planned::Explicit(0.014));
        assert_eq!(cfg.radius, Planned::Explicit(0.19));
        cfg.validate().unwrap();
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ExperimentConfig::parse("[noise]\neps =\n").is_err());
        assert!(ExperimentConfig::parse("[forcing]\nphi_deg =\n").is_err());
        assert!(ExperimentConfig::parse("nonsense\n").is_err());
        assert!(ExperimentConfig::parse("[simulation]\nwhat = 3\n").is_err());
    }
}
