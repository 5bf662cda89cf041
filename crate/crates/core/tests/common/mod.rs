//! Independent reference computations shared by the integration tests.
//!
//! The bilinear forms are assembled here directly from their integral
//! definitions, on each sub-triangle and edge, with quadrature rules that the
//! library does not use. Only the layouts' local expansions are shared.
#![allow(dead_code)]

use nalgebra::DMatrix;
use sdg_ibm::mesh::{barycentric, EdgeKind, Point, StaggeredMesh};
use sdg_ibm::postprocess::PostprocessedVelocity;
use sdg_ibm::solver::Discretization;
use sdg_ibm::spaces::{DofLayout, SpaceKind};

/// Seven-point degree-5 rule: barycentric point and weight relative to the area.
pub fn triangle_rule7() -> Vec<([f64; 3], f64)> {
    let s = 15f64.sqrt();
    let a1 = (6.0 - s) / 21.0;
    let a2 = (6.0 + s) / 21.0;
    let w1 = (155.0 - s) / 1200.0;
    let w2 = (155.0 + s) / 1200.0;
    let mut out = vec![([1.0 / 3.0; 3], 9.0 / 40.0)];
    for (a, w) in [(a1, w1), (a2, w2)] {
        let b = 1.0 - 2.0 * a;
        out.push(([b, a, a], w));
        out.push(([a, b, a], w));
        out.push(([a, a, b], w));
    }
    out
}

/// Three-point Gauss rule on `[0, 1]`: parameter and weight.
pub fn gauss3() -> [(f64, f64); 3] {
    let d = 0.5 * (0.6f64).sqrt();
    [(0.5 - d, 5.0 / 18.0), (0.5, 8.0 / 18.0), (0.5 + d, 5.0 / 18.0)]
}

pub fn at(vertices: &[Point; 3], l: &[f64; 3]) -> Point {
    vertices[0] * l[0] + vertices[1] * l[1] + vertices[2] * l[2]
}

/// Adds `value · e_i ⊗ e_j` for the expansions of a row and a column local function.
fn scatter(out: &mut DMatrix<f64>, rows: &[(usize, f64)], row_offset: usize, cols: &[(usize, f64)], col_offset: usize, value: f64) {
    for &(i, ci) in rows {
        for &(j, cj) in cols {
            out[(row_offset + i, col_offset + j)] += ci * cj * value;
        }
    }
}

/// Sides of an interior edge with their outward normals.
fn sides(mesh: &StaggeredMesh, e: usize) -> Vec<(usize, Point)> {
    let edge = &mesh.edges[e];
    let mut out = vec![(edge.plus, edge.normal)];
    if let Some(m) = edge.minus {
        out.push((m, -edge.normal));
    }
    out
}

/// `[i, j] = B*_h(v_i, Ψ_j) = −∫ v_i div_h Ψ_j + Σ_{interior coarse e} ∫_e v_i [Ψ_j·n]`.
pub fn oracle_b(disc: &Discretization) -> DMatrix<f64> {
    let (mesh, vel, grad) = (&disc.mesh, &disc.spaces.velocity, &disc.spaces.gradient);
    let mut out = DMatrix::zeros(vel.dim, grad.dim);
    for (t, el) in mesh.elements.iter().enumerate() {
        let dl = el.barycentric_gradients();
        for (l, w) in triangle_rule7() {
            for b in 0..3 {
                for a in 0..3 {
                    for comp in 0..2 {
                        let v = -w * el.area * l[b] * dl[a][comp];
                        scatter(&mut out, vel.local(t, b), 0, grad.local(t, 2 * a + comp), 0, v);
                    }
                }
            }
        }
    }
    for e in mesh.interior_coarse_edges() {
        let edge = &mesh.edges[e];
        for (s, w) in gauss3() {
            let x = edge.point_at(s);
            let lv = mesh.elements[edge.plus].barycentric(&x);
            for (side, n) in sides(mesh, e) {
                let lg = mesh.elements[side].barycentric(&x);
                for b in 0..3 {
                    for a in 0..3 {
                        for comp in 0..2 {
                            let v = w * edge.length * lv[b] * lg[a] * n[comp];
                            scatter(&mut out, vel.local(edge.plus, b), 0, grad.local(side, 2 * a + comp), 0, v);
                        }
                    }
                }
            }
        }
    }
    out
}

/// `[i, comp·n_u + j] = b*_h(q_i, v_j e_comp) = −∫ q_i div_h v + Σ_{F_p} ∫_e q_i [v·n]`.
pub fn oracle_c(disc: &Discretization) -> DMatrix<f64> {
    let (mesh, vel, pre) = (&disc.mesh, &disc.spaces.velocity, &disc.spaces.pressure);
    let nu = vel.dim;
    let mut out = DMatrix::zeros(pre.dim, 2 * nu);
    for (t, el) in mesh.elements.iter().enumerate() {
        let dl = el.barycentric_gradients();
        for (l, w) in triangle_rule7() {
            for b in 0..3 {
                for a in 0..3 {
                    for comp in 0..2 {
                        let v = -w * el.area * l[b] * dl[a][comp];
                        scatter(&mut out, pre.local(t, b), 0, vel.local(t, a), comp * nu, v);
                    }
                }
            }
        }
    }
    for e in mesh.subdivision_edges() {
        let edge = &mesh.edges[e];
        assert_eq!(edge.kind, EdgeKind::Subdivision);
        for (s, w) in gauss3() {
            let x = edge.point_at(s);
            let lq = mesh.elements[edge.plus].barycentric(&x);
            for (side, n) in sides(mesh, e) {
                let lv = mesh.elements[side].barycentric(&x);
                for b in 0..3 {
                    for a in 0..3 {
                        for comp in 0..2 {
                            let v = w * edge.length * lq[b] * lv[a] * n[comp];
                            scatter(&mut out, pre.local(edge.plus, b), 0, vel.local(side, a), comp * nu, v);
                        }
                    }
                }
            }
        }
    }
    out
}

/// `[i, j] = R*_h(v_i, Ψ_j) = ∫ v_i (V·Ψ_j)`.
pub fn oracle_r(disc: &Discretization, v: &PostprocessedVelocity) -> DMatrix<f64> {
    let (mesh, vel, grad) = (&disc.mesh, &disc.spaces.velocity, &disc.spaces.gradient);
    let mut out = DMatrix::zeros(vel.dim, grad.dim);
    for (t, el) in mesh.elements.iter().enumerate() {
        let coarse = mesh.coarse.triangle_points(el.macro_index);
        for (l, w) in triangle_rule7() {
            let x = at(&el.vertices, &l);
            let vx = v.eval_barycentric(el.macro_index, &barycentric(&coarse, &x));
            for b in 0..3 {
                for a in 0..3 {
                    for comp in 0..2 {
                        let val = w * el.area * l[b] * l[a] * vx[comp];
                        scatter(&mut out, vel.local(t, b), 0, grad.local(t, 2 * a + comp), 0, val);
                    }
                }
            }
        }
    }
    out
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    (a - b).amax()
}

/// Local vertex of element `t` at point `p`.
fn vertex_index(mesh: &StaggeredMesh, t: usize, p: &Point) -> usize {
    mesh.elements[t]
        .vertices
        .iter()
        .position(|v| (v - p).norm() < 1e-12)
        .expect("edge endpoint is a vertex of its adjacent elements")
}

/// Rows of the inter-element conditions defining a space, over the broken
/// local nodal values (element-major, `local_size` per element).
pub fn constraint_matrix(mesh: &StaggeredMesh, kind: SpaceKind) -> DMatrix<f64> {
    let ls = kind.local_size();
    let ncols = ls * mesh.num_elements();
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    for (e, edge) in mesh.edges.iter().enumerate() {
        let relevant = match kind {
            SpaceKind::VelocityComponent => edge.kind == EdgeKind::Coarse,
            _ => edge.kind == EdgeKind::Subdivision,
        };
        if !relevant {
            continue;
        }
        for p in &edge.endpoints {
            let mut row = Vec::new();
            for (side, n) in sides(mesh, e) {
                let a = vertex_index(mesh, side, p);
                match kind {
                    // normal-component continuity; `n` already carries the side's sign
                    SpaceKind::Gradient => {
                        row.push((ls * side + 2 * a, n.x));
                        row.push((ls * side + 2 * a + 1, n.y));
                    }
                    _ => row.push((ls * side + a, if side == edge.plus { 1.0 } else { -1.0 })),
                }
            }
            rows.push(row);
        }
    }
    let mut k = DMatrix::zeros(rows.len(), ncols);
    for (i, row) in rows.iter().enumerate() {
        for &(j, v) in row {
            k[(i, j)] += v;
        }
    }
    k
}

pub fn numerical_rank(m: &DMatrix<f64>) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let tol = 1e-10 * sv.max().max(1.0);
    sv.iter().filter(|&&s| s > tol).count()
}

/// Dense local-to-global transfer matrix of a layout.
pub fn transfer_matrix(layout: &DofLayout) -> DMatrix<f64> {
    let rows = layout.local_size() * layout.num_elements();
    let mut t = DMatrix::zeros(rows, layout.dim);
    for (i, j, c) in layout.transfer_triplets() {
        t[(i, j)] += c;
    }
    t
}

/// `u = (sin²πx sin2πy, −sin2πx sin²πy)`: divergence free, zero on the boundary.
pub fn manufactured_velocity(x: &Point) -> Point {
    use std::f64::consts::PI;
    let (sx, sy) = ((PI * x.x).sin(), (PI * x.y).sin());
    Point::new(sx * sx * (2.0 * PI * x.y).sin(), -(2.0 * PI * x.x).sin() * sy * sy)
}

/// `α u − μ Δu` for the manufactured velocity with zero pressure.
pub fn manufactured_load(x: &Point, alpha: f64, mu: f64) -> Point {
    use std::f64::consts::PI;
    let p2 = PI * PI;
    let (sx, sy) = ((PI * x.x).sin(), (PI * x.y).sin());
    let (s2x, s2y) = ((2.0 * PI * x.x).sin(), (2.0 * PI * x.y).sin());
    let (c2x, c2y) = ((2.0 * PI * x.x).cos(), (2.0 * PI * x.y).cos());
    let lap1 = 2.0 * p2 * c2x * s2y - 4.0 * p2 * sx * sx * s2y;
    let lap2 = 4.0 * p2 * s2x * sy * sy - 2.0 * p2 * s2x * c2y;
    manufactured_velocity(x) * alpha - Point::new(lap1, lap2) * mu
}

/// L² error of the piecewise-linear velocity `(u₁, u₂)` against `exact`.
pub fn l2_error_discrete(disc: &Discretization, u: &[f64], exact: impl Fn(&Point) -> Point) -> f64 {
    let nu = disc.n_velocity();
    let layout = &disc.spaces.velocity;
    let mut total = 0.0;
    for (t, el) in disc.mesh.elements.iter().enumerate() {
        let c1 = layout.local_coefficients(t, &u[..nu]);
        let c2 = layout.local_coefficients(t, &u[nu..]);
        for (l, w) in triangle_rule7() {
            let uh = Point::new((0..3).map(|a| c1[a] * l[a]).sum(), (0..3).map(|a| c2[a] * l[a]).sum());
            total += w * el.area * (uh - exact(&at(&el.vertices, &l))).norm_squared();
        }
    }
    total.sqrt()
}

/// L² error of a postprocessed velocity against `exact`.
pub fn l2_error_post(disc: &Discretization, v: &PostprocessedVelocity, exact: impl Fn(&Point) -> Point) -> f64 {
    let mut total = 0.0;
    for el in &disc.mesh.elements {
        let coarse = disc.mesh.coarse.triangle_points(el.macro_index);
        for (l, w) in triangle_rule7() {
            let x = at(&el.vertices, &l);
            let vh = v.eval_barycentric(el.macro_index, &barycentric(&coarse, &x));
            total += w * el.area * (vh - exact(&x)).norm_squared();
        }
    }
    total.sqrt()
}
