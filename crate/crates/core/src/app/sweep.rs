//! Cartesian parameter sweeps with one summary row per run.

use std::path::Path;

use crate::app::config::{resolve_time, ExperimentConfig};
use crate::app::experiment::{run_experiment, RunRecord};
use crate::app::output::{fmt_f64, write_run};
use crate::error::{Result, SdgError};

pub const SUMMARY_HEADER: &str =
    "run,experiment,N,m,K,dt,kappa,t_final,area_change_pct,max_energy_ratio,eta,picard_warnings,status";

/// Axes of a sweep; an empty axis keeps the base value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepAxes {
    pub n: Vec<usize>,
    pub m: Vec<usize>,
    pub steps: Vec<usize>,
    pub kappa: Vec<f64>,
    pub dt: Vec<f64>,
}

fn or_base<T: Copy>(axis: &[T], base: T) -> Vec<T> {
    if axis.is_empty() {
        vec![base]
    } else {
        axis.to_vec()
    }
}

/// Expands the cartesian product in the order `N, m, K, κ, Δt` (last varies fastest).
pub fn expand(base: &ExperimentConfig, axes: &SweepAxes) -> Result<Vec<ExperimentConfig>> {
    if !axes.steps.is_empty() && !axes.dt.is_empty() {
        return Err(SdgError::Usage("sweep over both K and dt is ambiguous for a fixed T".into()));
    }
    let mut out = Vec::new();
    for &n in &or_base(&axes.n, base.n) {
        for &m in &or_base(&axes.m, base.m) {
            for &k in &or_base(&axes.steps, base.steps) {
                for &kappa in &or_base(&axes.kappa, base.kappa) {
                    for &dt in &or_base(&axes.dt, base.dt()) {
                        let mut c = base.clone();
                        c.n = n;
                        c.m = m;
                        c.kappa = kappa;
                        let (steps, t) = if axes.dt.is_empty() {
                            (k, base.t_final)
                        } else {
                            resolve_time(None, Some(base.t_final), Some(dt), base.t_final)?
                        };
                        c.steps = steps;
                        c.t_final = t;
                        c.validate()?;
                        out.push(c);
                    }
                }
            }
        }
    }
    Ok(out)
}

pub fn summary_row(index: usize, r: &RunRecord) -> String {
    let c = &r.config;
    let last = r.last();
    format!(
        "{index},{},{},{},{},{},{},{},{},{},{},{},{}",
        c.experiment,
        c.n,
        c.m,
        c.steps,
        fmt_f64(c.dt()),
        fmt_f64(c.kappa),
        fmt_f64(last.time),
        fmt_f64(last.area_change_pct),
        fmt_f64(r.max_energy_ratio()),
        fmt_f64(last.eta),
        r.picard_warnings,
        r.status.label(r.picard_warnings)
    )
}

/// Runs every configuration; writes each run into `run_<i>/` and the summary
/// into `summary.csv` when `output` is given.
pub fn run_sweep(configs: &[ExperimentConfig], output: Option<&Path>) -> Result<Vec<RunRecord>> {
    let mut summary = String::from(SUMMARY_HEADER);
    summary.push('\n');
    let mut records = Vec::with_capacity(configs.len());
    for (i, c) in configs.iter().enumerate() {
        let r = run_experiment(c)?;
        if let Some(dir) = output {
            write_run(&r, &dir.join(format!("run_{i}")))?;
        }
        summary.push_str(&summary_row(i, &r));
        summary.push('\n');
        records.push(r);
    }
    if let Some(dir) = output {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("summary.csv"), summary)?;
    }
    Ok(records)
}
