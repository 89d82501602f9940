//! Run configuration: JSON file, then command-line overrides, then checks.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use stokes_spectra::background::{Settings, WaveModel};
use stokes_spectra::reduction::{RootOptions, SidebandMethod};
use stokes_spectra::stokes::MAX_SERIES_AMPLITUDE;

/// Bloch parameters as an explicit list or an evenly spaced range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MuSpec {
    List(Vec<f64>),
    Range { start: f64, stop: f64, count: usize },
}

impl MuSpec {
    pub fn values(&self) -> Vec<f64> {
        match self {
            MuSpec::List(v) => v.clone(),
            MuSpec::Range { count: 0, .. } => Vec::new(),
            MuSpec::Range { start, count: 1, .. } => vec![*start],
            MuSpec::Range { start, stop, count } => {
                let step = (stop - start) / (*count as f64 - 1.0);
                (0..*count).map(|i| start + step * i as f64).collect()
            }
        }
    }

    /// `a,b,c` or `start:stop:count`.
    pub fn parse(s: &str) -> anyhow::Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(MuSpec::List(Vec::new()));
        }
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() == 3 {
            return Ok(MuSpec::Range {
                start: parts[0].trim().parse().with_context(|| format!("bad range start in {s:?}"))?,
                stop: parts[1].trim().parse().with_context(|| format!("bad range stop in {s:?}"))?,
                count: parts[2].trim().parse().with_context(|| format!("bad range count in {s:?}"))?,
            });
        }
        if parts.len() != 1 {
            bail!("expected a comma list or start:stop:count, got {s:?}");
        }
        Ok(MuSpec::List(parse_list(s)?))
    }
}

pub fn parse_list(s: &str) -> anyhow::Result<Vec<f64>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().with_context(|| format!("not a number: {t:?}")))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Riemann stretch fixed point, sup-norm step.
    pub fixed_point: f64,
    /// Eigenvector residual `‖ℒv − λv‖/‖v‖` accepted for the unstable branch.
    pub eigen_residual: f64,
    /// Newton stop on `|𝒫|` relative to its Hadamard scale.
    pub newton: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { fixed_point: 1e-12, eigen_residual: 1e-8, newton: 1e-15 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub g: f64,
    pub eps: Vec<f64>,
    pub mu: MuSpec,
    pub k: usize,
    pub stokes_order: u32,
    pub wave: WaveModel,
    pub sideband: SidebandMethod,
    pub tolerances: Tolerances,
    pub out: PathBuf,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            g: 1.0,
            eps: vec![0.05],
            mu: MuSpec::Range { start: 0.0005, stop: 0.0025, count: 5 },
            k: 32,
            stokes_order: 3,
            wave: WaveModel::Refined,
            sideband: SidebandMethod::Direct,
            tolerances: Tolerances::default(),
            out: PathBuf::from("out"),
            seed: 0,
        }
    }
}

/// Command-line values that override the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub k: Option<usize>,
    pub eps: Option<String>,
    pub mu: Option<String>,
    pub g: Option<f64>,
    pub seed: Option<u64>,
}

/// Problems the user can fix by changing arguments; exit status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| usage(format!("config {}: {e}", path.display())))
    }

    pub fn resolve(path: Option<&Path>, o: &Overrides) -> anyhow::Result<Self> {
        let mut c = match path {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        if let Some(v) = &o.out {
            c.out = v.clone();
        }
        if let Some(v) = o.k {
            c.k = v;
        }
        if let Some(v) = &o.eps {
            c.eps = parse_list(v).map_err(|e| usage(format!("--eps: {e}")))?;
        }
        if let Some(v) = &o.mu {
            c.mu = MuSpec::parse(v).map_err(|e| usage(format!("--mu: {e}")))?;
        }
        if let Some(v) = o.g {
            c.g = v;
        }
        if let Some(v) = o.seed {
            c.seed = v;
        }
        Ok(c)
    }

    /// Checks everything except the μ list, which only some commands use.
    pub fn check(&self) -> anyhow::Result<()> {
        let t = &self.tolerances;
        for (name, v) in [("fixed_point", t.fixed_point), ("eigen_residual", t.eigen_residual), ("newton", t.newton)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(usage(format!("tolerance {name}={v} must be positive")));
            }
        }
        if self.eps.is_empty() {
            return Err(usage("the ε list is empty"));
        }
        if let Some(e) = self.eps.iter().find(|e| !(e.abs() <= MAX_SERIES_AMPLITUDE)) {
            return Err(usage(format!("ε={e} outside |ε| <= {MAX_SERIES_AMPLITUDE}")));
        }
        if let SidebandMethod::Neumann { order: 0 } = self.sideband {
            return Err(usage("Neumann order must be at least 1"));
        }
        self.settings().validate().map_err(|e| usage(e.to_string()))
    }

    pub fn mu_values(&self) -> anyhow::Result<Vec<f64>> {
        let mu = self.mu.values();
        if mu.is_empty() {
            return Err(usage("the μ list is empty"));
        }
        if let Some(m) = mu.iter().find(|m| !(**m > 0.0 && **m < 0.5)) {
            return Err(usage(format!("μ={m} outside (0, 1/2)")));
        }
        Ok(mu)
    }

    pub fn settings(&self) -> Settings {
        Settings {
            k: self.k,
            g: self.g,
            wave: self.wave,
            stokes_order: self.stokes_order,
            fixed_point_tol: self.tolerances.fixed_point,
            ..Settings::default()
        }
    }

    pub fn root_options(&self) -> RootOptions {
        RootOptions { method: self.sideband, residual_tol: self.tolerances.newton }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_endpoints() {
        let v = MuSpec::Range { start: 0.001, stop: 0.005, count: 5 }.values();
        assert_eq!(v.len(), 5);
        assert_eq!(v[0], 0.001);
        assert!((v[4] - 0.005).abs() < 1e-18);
    }

    #[test]
    fn parse_forms() {
        assert_eq!(MuSpec::parse("0.1, 0.2").unwrap(), MuSpec::List(vec![0.1, 0.2]));
        assert_eq!(MuSpec::parse("0.1:0.2:3").unwrap(), MuSpec::Range { start: 0.1, stop: 0.2, count: 3 });
        assert!(MuSpec::parse("a:b").is_err());
        assert_eq!(MuSpec::parse("").unwrap(), MuSpec::List(vec![]));
    }

    #[test]
    fn json_defaults_fill_in() {
        let c: RunConfig = serde_json::from_str(r#"{"eps":[0.03],"mu":[0.01]}"#).unwrap();
        assert_eq!(c.k, 32);
        assert_eq!(c.mu, MuSpec::List(vec![0.01]));
        let back: RunConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
        let r: RunConfig = serde_json::from_str(r#"{"mu":{"start":0.01,"stop":0.02,"count":2},"sideband":{"method":"neumann","order":4}}"#).unwrap();
        assert_eq!(r.mu.values(), vec![0.01, 0.02]);
        assert_eq!(r.sideband, SidebandMethod::Neumann { order: 4 });
    }

    #[test]
    fn checks() {
        let mut c = RunConfig::default();
        c.check().unwrap();
        c.mu = MuSpec::List(vec![]);
        assert!(c.mu_values().unwrap_err().downcast_ref::<UsageError>().is_some());
        c.mu = MuSpec::List(vec![0.5]);
        assert!(c.mu_values().is_err());
        c.eps = vec![0.3];
        assert!(c.check().is_err());
        c.eps = vec![0.05];
        c.tolerances.newton = 0.0;
        assert!(c.check().is_err());
        assert!(serde_json::from_str::<RunConfig>(r#"{"epsilon":[0.1]}"#).is_err());
    }
}
