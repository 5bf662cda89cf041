//! Monitored quantities: enclosed area, discrete energy, CFL parameter and the
//! broken H¹ seminorm.

use crate::error::Result;
use crate::ib::ImmersedBoundary;
use crate::mesh::{Point, StaggeredMesh};
use crate::spaces::DofLayout;

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRecord {
    pub step: usize,
    pub time: f64,
    pub area: f64,
    pub area_change_pct: f64,
    pub energy: f64,
    pub eta: f64,
    pub picard_iters: usize,
    pub picard_converged: bool,
    pub h_s: f64,
    pub h_x: f64,
    pub max_segment: f64,
    pub blown_up: bool,
}

/// Signed shoelace area of the marker polygon.
pub fn polygon_area(points: &[Point]) -> f64 {
    let m = points.len();
    let twice: f64 = (0..m)
        .map(|i| {
            let a = points[i];
            let b = points[(i + 1) % m];
            a.x * b.y - b.x * a.y
        })
        .sum();
    0.5 * twice
}

/// Relative change of `|area|` in percent.
pub fn area_change_pct(area0: f64, area: f64) -> f64 {
    (area.abs() - area0.abs()) / area0.abs() * 100.0
}

/// `(κ/2) ‖∂X/∂s‖²_{0,D}`.
pub fn curve_energy(ib: &ImmersedBoundary) -> f64 {
    0.5 * ib.kappa * ib.stretch_norm_squared()
}

/// Running energy `Eⁿ = (ρ/2)‖uⁿ‖² + Δt Σ_j K₀|u^j|²_{1,*} + (κ/2)‖∂Xⁿ/∂s‖²`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyTracker {
    pub rho: f64,
    pub dt: f64,
    pub k0: f64,
    dissipation: f64,
}

impl EnergyTracker {
    pub fn new(rho: f64, dt: f64, k0: f64) -> Self {
        Self { rho, dt, k0, dissipation: 0.0 }
    }

    /// Energy at the current state without adding a dissipation term.
    pub fn energy(&self, u_l2_squared: f64, ib: &ImmersedBoundary) -> f64 {
        0.5 * self.rho * u_l2_squared + self.dissipation + curve_energy(ib)
    }

    /// Adds `Δt K₀ |uⁿ|²_{1,*}` and returns `Eⁿ`.
    pub fn record(&mut self, u_l2_squared: f64, seminorm_squared: f64, ib: &ImmersedBoundary) -> f64 {
        self.dissipation += self.dt * self.k0 * seminorm_squared;
        self.energy(u_l2_squared, ib)
    }
}

/// Inputs of the CFL parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CflGeometry {
    pub h_s: f64,
    pub h_x: f64,
    pub max_segment: f64,
}

pub fn cfl_geometry(ib: &ImmersedBoundary, mesh: &StaggeredMesh) -> Result<CflGeometry> {
    let m = ib.num_markers();
    let mut h_s = f64::INFINITY;
    let mut h_x = f64::INFINITY;
    let mut max_segment: f64 = 0.0;
    for i in 1..=m {
        h_s = h_s.min((ib.s[i] - ib.s[i - 1]).abs());
        let (p, q) = ib.segment(i);
        max_segment = max_segment.max((q - p).norm());
        h_x = h_x.min(mesh.segment_patch_diameter(&p, &q)?);
    }
    Ok(CflGeometry { h_s, h_x, max_segment })
}

/// `η = κΔt/h_s · (1 + L/h_x)`.
pub fn eta_from(kappa: f64, dt: f64, g: &CflGeometry) -> f64 {
    kappa * dt / g.h_s * (1.0 + g.max_segment / g.h_x)
}

pub fn cfl_eta(ib: &ImmersedBoundary, mesh: &StaggeredMesh, dt: f64) -> Result<f64> {
    Ok(eta_from(ib.kappa, dt, &cfl_geometry(ib, mesh)?))
}

/// `|u|²_{1,*}` of a piecewise-linear vector field given by its vertex values on
/// every sub-triangle.
pub fn broken_seminorm_squared(mesh: &StaggeredMesh, nodal: &[[Point; 3]]) -> f64 {
    let mut total = 0.0;
    for (el, vals) in mesh.elements.iter().zip(nodal) {
        let g = el.barycentric_gradients();
        for comp in 0..2 {
            let grad: Point = (0..3).map(|a| g[a] * vals[a][comp]).fold(Point::zeros(), |s, v| s + v);
            total += el.area * grad.norm_squared();
        }
    }
    for e in &mesh.edges {
        let trace = |t: usize| -> [Point; 2] {
            let el = &mesh.elements[t];
            std::array::from_fn(|end| {
                let a = el.vertices.iter().position(|v| *v == e.endpoints[end]).expect("edge endpoint is a vertex");
                nodal[t][a]
            })
        };
        let plus = trace(e.plus);
        let jump = match e.minus {
            Some(minus) => {
                let m = trace(minus);
                [plus[0] - m[0], plus[1] - m[1]]
            }
            None => plus,
        };
        let sq = jump[0].norm_squared() + jump[0].dot(&jump[1]) + jump[1].norm_squared();
        total += sq / 3.0;
    }
    total
}

/// Vertex values of stacked velocity coefficients on every sub-triangle.
pub fn velocity_nodal_values(layout: &DofLayout, u: &[f64]) -> Vec<[Point; 3]> {
    let nu = layout.dim;
    (0..layout.num_elements())
        .map(|t| {
            let a = layout.local_coefficients(t, &u[..nu]);
            let b = layout.local_coefficients(t, &u[nu..]);
            std::array::from_fn(|i| Point::new(a[i], b[i]))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ib::{init_curve, CurveKind, CurveParams};
    use crate::mesh::{build_unit_square_mesh, staggered_subdivide};
    use std::f64::consts::PI;

    #[test]
    fn unit_square_area_and_orientation() {
        let mut sq = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(1.0, 1.0), Point::new(0.0, 1.0)];
        assert_eq!(polygon_area(&sq), 1.0);
        sq.reverse();
        assert_eq!(polygon_area(&sq), -1.0);
        assert_eq!(area_change_pct(1.0, -1.0), 0.0);
    }

    #[test]
    fn inscribed_ellipse_polygon_area() {
        let m = 256;
        let ib = init_curve(CurveKind::EllipseStatic, &CurveParams::default(), m, 1.0).unwrap();
        let exact = 0.5 * m as f64 * 0.2 * 0.1 * (2.0 * PI / m as f64).sin();
        assert!((polygon_area(&ib.x) - exact).abs() < 1e-14);
    }

    #[test]
    fn eta_direct_formula() {
        let g = CflGeometry { h_s: 1.0 / 128.0, h_x: 1.0 / 64.0, max_segment: 0.01 };
        assert!((eta_from(1.0, 0.01, &g) - 2.0992).abs() < 1e-12);
        assert_eq!(eta_from(0.0, 0.01, &g), 0.0);
    }

    #[test]
    fn balloon_rest_energy() {
        let m = 128;
        let ib = init_curve(CurveKind::Balloon, &CurveParams::default(), m, 4.0).unwrap();
        let r: f64 = 0.4;
        let x = PI / m as f64;
        let expected = 2.0 * 2.0 * PI * r * (x.sin() / x).powi(2);
        let tracker = EnergyTracker::new(1.0, 0.01, 1.0);
        let e0 = tracker.energy(0.0, &ib);
        assert!((e0 - expected).abs() < 1e-12);
        assert!((e0 - 5.0255).abs() < 1e-4);
    }

    #[test]
    fn zero_field_has_zero_seminorm() {
        let mesh = staggered_subdivide(build_unit_square_mesh(2).unwrap());
        let nodal = vec![[Point::zeros(); 3]; mesh.num_elements()];
        assert_eq!(broken_seminorm_squared(&mesh, &nodal), 0.0);
    }
}
