//! Command-line front end: `run`, `sweep` and `check`.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::app::check::run_checks;
use crate::app::config::{read_config_file, ExperimentConfig};
use crate::app::experiment::run_experiment;
use crate::app::output::write_run;
use crate::app::sweep::{expand, run_sweep, SweepAxes};
use crate::error::{Result, SdgError};

/// Exit status of a usage error.
pub const EXIT_USAGE: i32 = 2;
/// Exit status of a runtime failure.
pub const EXIT_FAILURE: i32 = 1;

#[derive(Debug, Parser)]
#[command(name = "sdg-ibm", version, about = "Staggered DG immersed boundary solver for 2D fluid-structure interaction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a single experiment.
    Run(RunArgs),
    /// Run the cartesian product of parameter lists.
    Sweep(SweepArgs),
    /// Run the built-in structural checks.
    Check {
        /// Coarse divisions per side.
        #[arg(long = "N", default_value_t = 8)]
        n: usize,
    },
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Plain `key = value` configuration file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// ellipse-static, l-shape, ellipse-rotating, stretched-circle or balloon.
    #[arg(long)]
    experiment: Option<String>,
    /// Final time.
    #[arg(long = "T")]
    t_final: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    picard_tol: Option<f64>,
    #[arg(long)]
    picard_max_iters: Option<usize>,
    #[arg(long)]
    snapshot_stride: Option<usize>,
    #[arg(long)]
    balloon_radius: Option<f64>,
    /// Output directory.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Coarse divisions per side.
    #[arg(long = "N")]
    n: Option<usize>,
    /// Number of markers.
    #[arg(long)]
    m: Option<usize>,
    /// Number of time steps.
    #[arg(long = "K")]
    k: Option<usize>,
    /// Time step; must satisfy dt * K = T.
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long = "N", value_delimiter = ',')]
    n: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    m: Vec<usize>,
    #[arg(long = "K", value_delimiter = ',')]
    k: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    dt: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    kappa: Vec<f64>,
}

fn base_map(common: &CommonArgs) -> Result<BTreeMap<String, String>> {
    let mut map = match &common.config {
        Some(p) => read_config_file(p)?,
        None => BTreeMap::new(),
    };
    let mut set = |k: &str, v: Option<String>| {
        if let Some(v) = v {
            map.insert(k.to_string(), v);
        }
    };
    set("experiment", common.experiment.clone());
    set("T", common.t_final.map(|v| v.to_string()));
    set("rho", common.rho.map(|v| v.to_string()));
    set("mu", common.mu.map(|v| v.to_string()));
    set("picard_tol", common.picard_tol.map(|v| v.to_string()));
    set("picard_max_iters", common.picard_max_iters.map(|v| v.to_string()));
    set("snapshot_stride", common.snapshot_stride.map(|v| v.to_string()));
    set("balloon_radius", common.balloon_radius.map(|v| v.to_string()));
    set("output", common.output.as_ref().map(|p| p.display().to_string()));
    Ok(map)
}

fn run_config(args: &RunArgs) -> Result<ExperimentConfig> {
    let mut map = base_map(&args.common)?;
    for (k, v) in [
        ("N", args.n.map(|v| v.to_string())),
        ("m", args.m.map(|v| v.to_string())),
        ("K", args.k.map(|v| v.to_string())),
        ("dt", args.dt.map(|v| v.to_string())),
        ("kappa", args.kappa.map(|v| v.to_string())),
    ] {
        if let Some(v) = v {
            map.insert(k.to_string(), v);
        }
    }
    ExperimentConfig::from_map(&map)
}

fn cmd_run(args: &RunArgs) -> Result<()> {
    let cfg = run_config(args)?;
    let record = run_experiment(&cfg)?;
    let last = record.last();
    println!(
        "{}: N={} m={} K={} dt={} kappa={} -> t={} area change {:.6e}% max E/E0 {:.6e} status {}",
        cfg.experiment,
        cfg.n,
        cfg.m,
        cfg.steps,
        cfg.dt(),
        cfg.kappa,
        last.time,
        last.area_change_pct,
        record.max_energy_ratio(),
        record.status
    );
    if let Some(dir) = &cfg.output {
        write_run(&record, dir)?;
        println!("wrote {}", dir.display());
    }
    Ok(())
}

fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let map = base_map(&args.common)?;
    let base = ExperimentConfig::from_map(&map)?;
    let axes = SweepAxes { n: args.n.clone(), m: args.m.clone(), steps: args.k.clone(), kappa: args.kappa.clone(), dt: args.dt.clone() };
    let configs = expand(&base, &axes)?;
    let records = run_sweep(&configs, base.output.as_deref())?;
    for (i, r) in records.iter().enumerate() {
        println!("{}", crate::app::sweep::summary_row(i, r));
    }
    Ok(())
}

fn cmd_check(n: usize) -> Result<bool> {
    let mut all = true;
    for r in run_checks(n)? {
        let ok = r.passed();
        all &= ok;
        println!("[{}] {}: {:.3e} (tolerance {:.1e})", if ok { "PASS" } else { "FAIL" }, r.name, r.value, r.tolerance);
    }
    Ok(all)
}

fn exit_code(e: &SdgError) -> i32 {
    match e {
        SdgError::Usage(_) | SdgError::InvalidParameter(_) => EXIT_USAGE,
        _ => EXIT_FAILURE,
    }
}

/// Parses `argv` (program name first) and runs the subcommand; returns the exit status.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a).map(|_| true),
        Command::Sweep(a) => cmd_sweep(a).map(|_| true),
        Command::Check { n } => cmd_check(*n),
    };
    match result {
        Ok(true) => 0,
        Ok(false) => EXIT_FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inconsistent_time_grid_is_usage_error() {
        let code = cli_main(["sdg-ibm", "run", "--experiment", "ellipse-static", "--K", "100", "--dt", "0.01", "--T", "2"]);
        assert_eq!(code, EXIT_USAGE);
    }

    #[test]
    fn bad_flags_are_usage_errors() {
        assert_eq!(cli_main(["sdg-ibm", "run", "--bogus"]), EXIT_USAGE);
        assert_eq!(cli_main(["sdg-ibm", "run", "--experiment", "circle"]), EXIT_USAGE);
        assert_eq!(cli_main(["sdg-ibm", "run", "--experiment", "balloon", "--m", "2"]), EXIT_USAGE);
    }
}
