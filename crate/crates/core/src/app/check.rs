//! Quick structural self-checks behind the `check` subcommand.

use crate::app::forcing::{rotating_body_force, rotating_field};
use crate::assembly::{assemble_convection, build_momentum, load_vector};
use crate::error::Result;
use crate::ib::{assemble_force, init_curve, CurveKind, CurveParams};
use crate::quadrature::macro_points;
use crate::solver::{solve_linearized, Discretization, LinearizedProblem};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub value: f64,
    pub tolerance: f64,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.value.is_finite() && self.value <= self.tolerance
    }
}

/// Runs the checks on an `n × n` mesh.
pub fn run_checks(n: usize) -> Result<Vec<CheckResult>> {
    let disc = Discretization::unit_square(n)?;
    let nu = disc.n_velocity();
    let mut out = Vec::new();

    let u0 = disc.project_divergence_free(&load_vector(&disc.mesh, &disc.spaces, rotating_field))?;
    let v = disc.postprocess(&u0)?;
    let conv = assemble_convection(&disc.mesh, &v);
    let op = build_momentum(&disc.core, &conv, 100.0, 1.0, 1.0)?;

    let vg = op.convection();
    let skew = vg.add_scaled(1.0, &vg.transpose()).max_abs();
    out.push(CheckResult { name: "convection skew-symmetry", value: skew, tolerance: 1e-12 * vg.max_abs().max(1.0) });

    let lap = op.negative_laplacian();
    let min_rayleigh = (1..=20)
        .map(|k| {
            let x: Vec<f64> = (0..nu).map(|i| ((i * k) as f64 * 0.7 + k as f64).sin()).collect();
            let ax = lap.mul_vec(&x);
            let num: f64 = x.iter().zip(&ax).map(|(a, b)| a * b).sum();
            num / x.iter().map(|a| a * a).sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min);
    out.push(CheckResult { name: "negative Laplacian positive", value: -min_rayleigh, tolerance: 0.0 });

    let rhs: Vec<f64> = disc
        .mass_times(&u0)
        .iter()
        .zip(load_vector(&disc.mesh, &disc.spaces, |x| rotating_body_force(x, 1.0, 1.0)))
        .map(|(m, f)| 100.0 * m + f)
        .collect();
    let state = solve_linearized(&disc, &LinearizedProblem { alpha: 100.0, mu: 1.0, rho: 1.0, v: &v, rhs: &rhs })?;
    out.push(CheckResult {
        name: "energy identity",
        value: disc.energy_identity_defect(100.0, 1.0, &state, &rhs),
        tolerance: 1e-10,
    });

    let u = state.velocity();
    let cu = disc.core.c.mul_vec(&u);
    let cu_norm = cu.iter().map(|x| x * x).sum::<f64>().sqrt();
    let u_norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    out.push(CheckResult { name: "weak divergence", value: cu_norm / u_norm.max(f64::MIN_POSITIVE), tolerance: 1e-9 });

    let post = disc.postprocess(&u)?;
    let mut div: f64 = 0.0;
    for c in 0..disc.mesh.num_macros() {
        for table in macro_points() {
            for p in table {
                div = div.max(post.divergence(&disc.mesh, c, &p.coarse).abs());
            }
        }
    }
    out.push(CheckResult {
        name: "postprocessed divergence",
        value: div,
        tolerance: 1e-10 * post.max_abs_coefficient().max(1.0),
    });

    let ib = init_curve(CurveKind::Balloon, &CurveParams::default(), 128, 4.0)?;
    let force = assemble_force(&disc.mesh, &disc.spaces, &ib)?;
    out.push(CheckResult { name: "total marker force", value: force.total_force().norm(), tolerance: 1e-12 });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_checks_pass_on_small_mesh() {
        for r in run_checks(4).unwrap() {
            assert!(r.passed(), "{r:?}");
        }
    }
}
