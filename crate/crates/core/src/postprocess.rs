//! Divergence-free P2 velocity recovered on every macro-element from `(u_h, L_h)`.
//!
//! On each coarse triangle the postprocessed velocity `u*` is a vector P2 field
//! fixed by twelve conditions:
//!
//! * per boundary edge, the two P1 flux moments of `u*·n` equal those of `u_h`;
//! * per boundary edge, the tangential derivative of `u*·n` tested against the
//!   linear Legendre mode `s − ½` equals that of `nᵀ{L_h}τ`;
//! * the mean of `u*` over the macro equals the mean of `u_h`;
//! * the bubble-weighted mean of `curl u*` equals that of `(L_h)₂₁ − (L_h)₁₂`.
//!
//! The normal trace of `u*` is then built only from data shared by both sides of
//! a coarse edge, and `div u*` vanishes identically.
//!
//! Coefficients are stored as `[6·component + node]` with P2 nodes
//! `v₀, v₁, v₂` followed by the midpoints of edges `v₀v₁, v₁v₂, v₂v₀`.

use nalgebra::{FullPivLU, SMatrix, SVector};

use crate::assembly::{gradient_at_vertices, Auxiliaries};
use crate::error::{Result, SdgError};
use crate::mesh::{barycentric, barycentric_gradients, Point, StaggeredMesh};
use crate::quadrature::{edge_rule, macro_points};
use crate::spaces::Spaces;

type Mat12 = SMatrix<f64, 12, 12>;
type Vec12 = SVector<f64, 12>;

/// P2 Lagrange basis in barycentric coordinates.
pub fn p2_basis(l: &[f64; 3]) -> [f64; 6] {
    [
        l[0] * (2.0 * l[0] - 1.0),
        l[1] * (2.0 * l[1] - 1.0),
        l[2] * (2.0 * l[2] - 1.0),
        4.0 * l[0] * l[1],
        4.0 * l[1] * l[2],
        4.0 * l[2] * l[0],
    ]
}

/// Cartesian gradients of the P2 basis, given the barycentric gradients.
pub fn p2_gradients(l: &[f64; 3], dl: &[Point; 3]) -> [Point; 6] {
    [
        dl[0] * (4.0 * l[0] - 1.0),
        dl[1] * (4.0 * l[1] - 1.0),
        dl[2] * (4.0 * l[2] - 1.0),
        (dl[0] * l[1] + dl[1] * l[0]) * 4.0,
        (dl[1] * l[2] + dl[2] * l[1]) * 4.0,
        (dl[2] * l[0] + dl[0] * l[2]) * 4.0,
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct PostprocessedVelocity {
    pub coefficients: Vec<[f64; 12]>,
}

impl PostprocessedVelocity {
    pub fn zeros(num_macros: usize) -> Self {
        Self { coefficients: vec![[0.0; 12]; num_macros] }
    }

    pub fn is_zero_on(&self, c: usize) -> bool {
        self.coefficients[c].iter().all(|&v| v == 0.0)
    }

    /// Value on macro `c` at coarse barycentric coordinates `l`.
    pub fn eval_barycentric(&self, c: usize, l: &[f64; 3]) -> Point {
        let n = p2_basis(l);
        let co = &self.coefficients[c];
        let mut v = Point::zeros();
        for i in 0..6 {
            v.x += co[i] * n[i];
            v.y += co[6 + i] * n[i];
        }
        v
    }

    /// Jacobian `[[∂₁u₁, ∂₂u₁], [∂₁u₂, ∂₂u₂]]` on macro `c`.
    pub fn jacobian(&self, mesh: &StaggeredMesh, c: usize, l: &[f64; 3]) -> [[f64; 2]; 2] {
        let dl = barycentric_gradients(&mesh.coarse.triangle_points(c));
        let g = p2_gradients(l, &dl);
        let co = &self.coefficients[c];
        let mut j = [[0.0; 2]; 2];
        for i in 0..6 {
            for comp in 0..2 {
                j[comp][0] += co[6 * comp + i] * g[i].x;
                j[comp][1] += co[6 * comp + i] * g[i].y;
            }
        }
        j
    }

    pub fn divergence(&self, mesh: &StaggeredMesh, c: usize, l: &[f64; 3]) -> f64 {
        let j = self.jacobian(mesh, c, l);
        j[0][0] + j[1][1]
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.coefficients.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Value of `u*` at `x`, taken from the smallest-index macro containing `x`.
pub fn evaluate_postprocessed(mesh: &StaggeredMesh, v: &PostprocessedVelocity, x: &Point) -> Result<Point> {
    let c = mesh.locate_macro(x)?;
    let l = barycentric(&mesh.coarse.triangle_points(c), x);
    Ok(v.eval_barycentric(c, &l))
}

/// Precomputed local systems; they depend on geometry only.
#[derive(Debug, Clone)]
pub struct Postprocessor {
    systems: Vec<FullPivLU<f64, nalgebra::Const<12>, nalgebra::Const<12>>>,
}

struct EdgeFrame {
    length: f64,
    normal: Point,
    tangent: Point,
}

fn edge_frame(mesh: &StaggeredMesh, c: usize, k: usize) -> EdgeFrame {
    let p = mesh.coarse.triangle_points(c);
    let d = p[(k + 1) % 3] - p[k];
    let length = d.norm();
    let tangent = d / length;
    // counter-clockwise triangle: outward normal is the tangent rotated clockwise
    EdgeFrame { length, normal: Point::new(tangent.y, -tangent.x), tangent }
}

fn edge_barycentric(k: usize, s: f64) -> [f64; 3] {
    let mut l = [0.0; 3];
    l[k] = 1.0 - s;
    l[(k + 1) % 3] = s;
    l
}

fn local_matrix(mesh: &StaggeredMesh, c: usize) -> Mat12 {
    let mut a = Mat12::zeros();
    let dl = barycentric_gradients(&mesh.coarse.triangle_points(c));
    for k in 0..3 {
        let f = edge_frame(mesh, c, k);
        for &(s, w) in &edge_rule() {
            let l = edge_barycentric(k, s);
            let n = p2_basis(&l);
            let g = p2_gradients(&l, &dl);
            for i in 0..6 {
                for comp in 0..2 {
                    let col = 6 * comp + i;
                    a[(3 * k, col)] += w * f.length * (1.0 - s) * n[i] * f.normal[comp];
                    a[(3 * k + 1, col)] += w * f.length * s * n[i] * f.normal[comp];
                    a[(3 * k + 2, col)] += w * f.length * (s - 0.5) * f.normal[comp] * g[i].dot(&f.tangent);
                }
            }
        }
    }
    let table = macro_points();
    for (k, &t) in mesh.macro_elements(c).iter().enumerate() {
        let scale = 2.0 * mesh.elements[t].area;
        for p in &table[k] {
            let w = scale * p.weight;
            let n = p2_basis(&p.coarse);
            let g = p2_gradients(&p.coarse, &dl);
            let bubble = p.coarse[0] * p.coarse[1] * p.coarse[2];
            for i in 0..6 {
                a[(9, i)] += w * n[i];
                a[(10, 6 + i)] += w * n[i];
                a[(11, 6 + i)] += w * bubble * g[i].x;
                a[(11, i)] -= w * bubble * g[i].y;
            }
        }
    }
    a
}

impl Postprocessor {
    pub fn new(mesh: &StaggeredMesh) -> Result<Self> {
        let systems = (0..mesh.num_macros())
            .map(|c| {
                let a = local_matrix(mesh, c);
                let lu = a.full_piv_lu();
                let scale = a.amax();
                let pivot = lu.u().diagonal().amin();
                if !lu.is_invertible() || pivot <= 1e-13 * scale {
                    Err(SdgError::PostprocessFailure(c))
                } else {
                    Ok(lu)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { systems })
    }

    /// Postprocesses every macro-element.
    pub fn apply(&self, mesh: &StaggeredMesh, spaces: &Spaces, u1: &[f64], u2: &[f64], aux: &Auxiliaries) -> Result<PostprocessedVelocity> {
        let coefficients = (0..mesh.num_macros())
            .map(|c| self.postprocess_macro(mesh, spaces, c, [u1, u2], aux))
            .collect::<Result<Vec<_>>>()?;
        Ok(PostprocessedVelocity { coefficients })
    }

    /// Twelve P2 coefficients of `u*` on macro `c`.
    pub fn postprocess_macro(&self, mesh: &StaggeredMesh, spaces: &Spaces, c: usize, u: [&[f64]; 2], aux: &Auxiliaries) -> Result<[f64; 12]> {
        let rhs = local_rhs(mesh, spaces, c, u, aux);
        let x = self.systems[c].solve(&rhs).ok_or(SdgError::PostprocessFailure(c))?;
        let mut out = [0.0; 12];
        out.copy_from_slice(x.as_slice());
        if out.iter().any(|v| !v.is_finite()) {
            return Err(SdgError::PostprocessFailure(c));
        }
        Ok(out)
    }
}

fn local_rhs(mesh: &StaggeredMesh, spaces: &Spaces, c: usize, u: [&[f64]; 2], aux: &Auxiliaries) -> Vec12 {
    let mut b = Vec12::zeros();
    let elems = mesh.macro_elements(c);
    let value = |slot: usize, comp: usize| spaces.velocity_slot(c, slot).map_or(0.0, |g| u[comp][g]);
    let grads: Vec<_> = elems.iter().map(|&t| gradient_at_vertices(spaces, aux, t)).collect();

    for (k, &t) in elems.iter().enumerate() {
        let f = edge_frame(mesh, c, k);
        // flux moments of u_h against 1 - s and s
        for comp in 0..2 {
            let u0 = value(3 * k, comp);
            let u1 = value(3 * k + 1, comp);
            b[3 * k] += f.normal[comp] * f.length / 6.0 * (2.0 * u0 + u1);
            b[3 * k + 1] += f.normal[comp] * f.length / 6.0 * (u0 + 2.0 * u1);
        }
        // averaged gradient at both edge endpoints
        let own = &grads[k];
        let mut avg = [own[0], own[1]];
        let e = &mesh.edges[mesh.elements[t].edges[0]];
        let other = if e.plus == t { e.minus } else { Some(e.plus) };
        if let Some(o) = other {
            let og = gradient_at_vertices(spaces, aux, o);
            let ov = &mesh.elements[o].vertices;
            for (end, own_vertex) in [0usize, 1].into_iter().zip([k, k + 1]) {
                let p = mesh.elements[t].vertices[end];
                debug_assert_eq!(p, mesh.coarse.triangle_points(c)[own_vertex % 3]);
                let a = ov.iter().position(|q| *q == p).expect("coarse edge endpoints are shared");
                for i in 0..2 {
                    for j in 0..2 {
                        avg[end][i][j] = 0.5 * (own[end][i][j] + og[a][i][j]);
                    }
                }
            }
        }
        let g = |m: &[[f64; 2]; 2]| {
            let mut s = 0.0;
            for i in 0..2 {
                for j in 0..2 {
                    s += f.normal[i] * m[i][j] * f.tangent[j];
                }
            }
            s
        };
        b[3 * k + 2] = f.length * (g(&avg[1]) - g(&avg[0])) / 12.0;
    }

    let table = macro_points();
    for (k, &t) in elems.iter().enumerate() {
        let area = mesh.elements[t].area;
        for comp in 0..2 {
            b[9 + comp] += area / 3.0 * (0..3).map(|a| value(3 * k + a, comp)).sum::<f64>();
        }
        let scale = 2.0 * area;
        let curl: [f64; 3] = std::array::from_fn(|a| grads[k][a][1][0] - grads[k][a][0][1]);
        for p in &table[k] {
            let bubble = p.coarse[0] * p.coarse[1] * p.coarse[2];
            let lc: f64 = (0..3).map(|a| p.sub[a] * curl[a]).sum();
            b[11] += scale * p.weight * bubble * lc;
        }
    }
    b
}
