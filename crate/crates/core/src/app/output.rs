//! CSV and metadata files of a run. Floats are written with 17 significant digits.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::app::experiment::{MarkerSnapshot, RunRecord};
use crate::diagnostics::DiagnosticsRecord;
use crate::error::Result;

pub const AREA_HISTORY_HEADER: &str = "step,t,area,area_change_pct,E,eta,picard_iters,blown_up";
pub const MARKERS_HEADER: &str = "i,s,x,y";

/// Formats a float with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn area_history_row(r: &DiagnosticsRecord) -> String {
    format!(
        "{},{},{},{},{},{},{},{}",
        r.step,
        fmt_f64(r.time),
        fmt_f64(r.area),
        fmt_f64(r.area_change_pct),
        fmt_f64(r.energy),
        fmt_f64(r.eta),
        r.picard_iters,
        u8::from(r.blown_up)
    )
}

pub fn area_history_csv(records: &[DiagnosticsRecord]) -> String {
    let mut out = String::from(AREA_HISTORY_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&area_history_row(r));
        out.push('\n');
    }
    out
}

pub fn markers_csv(snap: &MarkerSnapshot) -> String {
    let mut out = String::from(MARKERS_HEADER);
    out.push('\n');
    for (i, (s, x)) in snap.s.iter().zip(&snap.x).enumerate() {
        let _ = writeln!(out, "{i},{},{},{}", fmt_f64(*s), fmt_f64(x.x), fmt_f64(x.y));
    }
    out
}

pub fn run_meta(record: &RunRecord) -> String {
    let mut out = String::new();
    for (k, v) in record.config.to_key_values() {
        let _ = writeln!(out, "{k} = {v}");
    }
    let _ = writeln!(out, "code_version = {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(out, "k0 = mu");
    let _ = writeln!(out, "status = {}", record.status.label(record.picard_warnings));
    let _ = writeln!(out, "status_detail = {}", record.status);
    let _ = writeln!(out, "steps_completed = {}", record.last().step);
    let _ = writeln!(out, "picard_warnings = {}", record.picard_warnings);
    let _ = writeln!(out, "max_constraint_residual = {}", fmt_f64(record.invariants.constraint_residual));
    let _ = writeln!(out, "max_total_force = {}", fmt_f64(record.invariants.total_force));
    let _ = writeln!(out, "max_energy_identity_defect = {}", fmt_f64(record.invariants.energy_defect));
    out
}

/// Writes `area_history.csv`, `markers_<step>.csv` and `run.meta` into `dir`.
pub fn write_run(record: &RunRecord, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut put = |name: String, body: String| -> Result<()> {
        let path = dir.join(name);
        fs::write(&path, body)?;
        written.push(path);
        Ok(())
    };
    put("area_history.csv".into(), area_history_csv(&record.records))?;
    for snap in &record.snapshots {
        put(format!("markers_{}.csv", snap.step), markers_csv(snap))?;
    }
    put("run.meta".into(), run_meta(record))?;
    Ok(written)
}
