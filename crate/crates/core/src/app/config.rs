//! Experiment configuration from `key = value` text and command-line overrides.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{Result, SdgError};
use crate::ib::{CurveKind, CurveParams};
use crate::solver::PicardSettings;

/// Default time step.
pub const DEFAULT_DT: f64 = 0.01;
/// Default number of steps between marker snapshots.
pub const DEFAULT_SNAPSHOT_STRIDE: usize = 10;

/// Keys accepted in configuration files.
pub const KEYS: [&str; 14] = [
    "experiment",
    "N",
    "m",
    "K",
    "T",
    "dt",
    "rho",
    "mu",
    "kappa",
    "picard_tol",
    "picard_max_iters",
    "output",
    "snapshot_stride",
    "balloon_radius",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: CurveKind,
    /// Coarse divisions per side.
    pub n: usize,
    /// Number of markers.
    pub m: usize,
    /// Number of time steps.
    pub steps: usize,
    pub t_final: f64,
    pub rho: f64,
    pub mu: f64,
    pub kappa: f64,
    pub picard: PicardSettings,
    pub output: Option<PathBuf>,
    pub snapshot_stride: usize,
    pub curve: CurveParams,
}

/// Final time used when none is given.
pub fn default_final_time(kind: CurveKind) -> f64 {
    match kind {
        CurveKind::Balloon => 3.0,
        _ => 2.0,
    }
}

fn usage(msg: impl Into<String>) -> SdgError {
    SdgError::Usage(msg.into())
}

fn parse<T: std::str::FromStr>(key: &str, raw: &str) -> Result<T> {
    raw.trim().parse().map_err(|_| usage(format!("cannot parse value '{raw}' for '{key}'")))
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| usage(format!("line {}: expected 'key = value'", lineno + 1)))?;
        let k = k.trim();
        if !KEYS.contains(&k) {
            return Err(usage(format!("line {}: unknown key '{k}'", lineno + 1)));
        }
        map.insert(k.to_string(), v.trim().to_string());
    }
    Ok(map)
}

pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>> {
    parse_key_values(&std::fs::read_to_string(path)?)
}

impl ExperimentConfig {
    /// Defaults for one experiment: `ρ = μ = κ = 1`, `Δt = 0.01`, `N = 32`, `m = 256`.
    pub fn new(experiment: CurveKind) -> Self {
        let t_final = default_final_time(experiment);
        Self {
            experiment,
            n: 32,
            m: 256,
            steps: (t_final / DEFAULT_DT).round() as usize,
            t_final,
            rho: 1.0,
            mu: 1.0,
            kappa: 1.0,
            picard: PicardSettings::default(),
            output: None,
            snapshot_stride: DEFAULT_SNAPSHOT_STRIDE,
            curve: CurveParams::default(),
        }
    }

    pub fn dt(&self) -> f64 {
        self.t_final / self.steps as f64
    }

    /// Builds a configuration from raw `key -> value` pairs.
    ///
    /// `K`, `T` and `dt` may be given in any consistent combination; giving all
    /// three with `dt·K ≠ T` is a usage error.
    pub fn from_map(map: &BTreeMap<String, String>) -> Result<Self> {
        for k in map.keys() {
            if !KEYS.contains(&k.as_str()) {
                return Err(usage(format!("unknown key '{k}'")));
            }
        }
        let experiment: CurveKind = map
            .get("experiment")
            .ok_or_else(|| usage("missing 'experiment'"))?
            .parse()
            .map_err(|e: SdgError| usage(e.to_string()))?;
        let mut cfg = Self::new(experiment);
        let get = |k: &str| map.get(k).map(String::as_str);
        if let Some(v) = get("N") {
            cfg.n = parse("N", v)?;
        }
        if let Some(v) = get("m") {
            cfg.m = parse("m", v)?;
        }
        if let Some(v) = get("rho") {
            cfg.rho = parse("rho", v)?;
        }
        if let Some(v) = get("mu") {
            cfg.mu = parse("mu", v)?;
        }
        if let Some(v) = get("kappa") {
            cfg.kappa = parse("kappa", v)?;
        }
        if let Some(v) = get("picard_tol") {
            cfg.picard.tol = parse("picard_tol", v)?;
        }
        if let Some(v) = get("picard_max_iters") {
            cfg.picard.max_iters = parse("picard_max_iters", v)?;
        }
        if let Some(v) = get("output") {
            cfg.output = Some(PathBuf::from(v));
        }
        if let Some(v) = get("snapshot_stride") {
            cfg.snapshot_stride = parse("snapshot_stride", v)?;
        }
        if let Some(v) = get("balloon_radius") {
            cfg.curve.balloon_radius = parse("balloon_radius", v)?;
        }
        let k: Option<usize> = get("K").map(|v| parse("K", v)).transpose()?;
        let t: Option<f64> = get("T").map(|v| parse("T", v)).transpose()?;
        let dt: Option<f64> = get("dt").map(|v| parse("dt", v)).transpose()?;
        let (steps, t_final) = resolve_time(k, t, dt, cfg.t_final)?;
        cfg.steps = steps;
        cfg.t_final = t_final;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(usage(format!("{name} must be positive and finite, got {v}")))
            }
        };
        if self.n == 0 {
            return Err(usage("N must be at least 1"));
        }
        if self.m < 3 {
            return Err(usage(format!("m must be at least 3, got {}", self.m)));
        }
        if self.steps == 0 {
            return Err(usage("K must be at least 1"));
        }
        if self.snapshot_stride == 0 {
            return Err(usage("snapshot_stride must be at least 1"));
        }
        positive("T", self.t_final)?;
        positive("rho", self.rho)?;
        positive("mu", self.mu)?;
        if !(self.kappa >= 0.0 && self.kappa.is_finite()) {
            return Err(usage(format!("kappa must be finite and non-negative, got {}", self.kappa)));
        }
        self.picard.validate().map_err(|e| usage(e.to_string()))
    }

    /// `key = value` lines accepted back by [`parse_key_values`].
    pub fn to_key_values(&self) -> Vec<(String, String)> {
        let mut out = vec![
            ("experiment".to_string(), self.experiment.to_string()),
            ("N".to_string(), self.n.to_string()),
            ("m".to_string(), self.m.to_string()),
            ("K".to_string(), self.steps.to_string()),
            ("T".to_string(), format!("{:.16e}", self.t_final)),
            ("dt".to_string(), format!("{:.16e}", self.dt())),
            ("rho".to_string(), format!("{:.16e}", self.rho)),
            ("mu".to_string(), format!("{:.16e}", self.mu)),
            ("kappa".to_string(), format!("{:.16e}", self.kappa)),
            ("picard_tol".to_string(), format!("{:.16e}", self.picard.tol)),
            ("picard_max_iters".to_string(), self.picard.max_iters.to_string()),
            ("snapshot_stride".to_string(), self.snapshot_stride.to_string()),
            ("balloon_radius".to_string(), format!("{:.16e}", self.curve.balloon_radius)),
        ];
        if let Some(o) = &self.output {
            out.push(("output".to_string(), o.display().to_string()));
        }
        out
    }
}

/// Resolves `(K, T)` from any of `K`, `T`, `dt`.
pub fn resolve_time(k: Option<usize>, t: Option<f64>, dt: Option<f64>, default_t: f64) -> Result<(usize, f64)> {
    let steps_for = |t: f64, dt: f64| -> Result<usize> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(usage(format!("dt must be positive, got {dt}")));
        }
        let k = (t / dt).round();
        if k < 1.0 || ((k * dt - t).abs() > 1e-9 * t) {
            return Err(usage(format!("T = {t} is not an integer multiple of dt = {dt}")));
        }
        Ok(k as usize)
    };
    match (k, t, dt) {
        (Some(k), Some(t), Some(dt)) => {
            if ((k as f64) * dt - t).abs() > 1e-9 * t.abs().max(f64::MIN_POSITIVE) {
                return Err(usage(format!("dt * K = {} differs from T = {t}", k as f64 * dt)));
            }
            Ok((k, t))
        }
        (Some(k), Some(t), None) => Ok((k, t)),
        (Some(k), None, Some(dt)) => Ok((k, k as f64 * dt)),
        (Some(k), None, None) => Ok((k, default_t)),
        (None, t, dt) => {
            let t = t.unwrap_or(default_t);
            Ok((steps_for(t, dt.unwrap_or(DEFAULT_DT))?, t))
        }
    }
}
