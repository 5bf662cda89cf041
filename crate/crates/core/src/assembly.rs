//! Assembly of the bilinear forms, macro-local elimination of the auxiliary
//! gradient variables, and the momentum operator
//! `A = α M̃ − μ Δ_h + ρ V·∇_h` with `Δ_h = −B M⁻¹ Bᵀ` and
//! `V·∇_h = ½ (R M⁻¹ Bᵀ − B M⁻¹ Rᵀ)`.
//!
//! All forms couple only dofs of one macro-element `S(ν)` on the gradient side,
//! so each is stored as a small dense block per macro-element. Velocity slots of a
//! macro are numbered `3k + a` (sub-triangle `k`, local vertex `a`); gradient
//! nodal functions `6k + 2a + component`.
//!
//! Global matrices are obtained by scattering blocks in ascending macro order,
//! which keeps assembly bit-reproducible and keeps the symmetric and
//! skew-symmetric parts exactly (skew-)symmetric.

use nalgebra::{SMatrix, SVector};

use crate::error::{Result, SdgError};
use crate::mesh::{Point, StaggeredMesh};
use crate::postprocess::PostprocessedVelocity;
use crate::quadrature::macro_points;
use crate::sparse::CsrMatrix;
use crate::spaces::Spaces;

pub type Mat9 = SMatrix<f64, 9, 9>;
type Mat12 = SMatrix<f64, 12, 12>;
type Mat9x18 = SMatrix<f64, 9, 18>;
type Mat12x9 = SMatrix<f64, 12, 9>;
type Mat12x18 = SMatrix<f64, 12, 18>;
type Vec9 = SVector<f64, 9>;
type Vec12 = SVector<f64, 12>;

/// Geometry-only operators of one macro-element.
#[derive(Debug, Clone)]
pub struct MacroForms {
    /// Global velocity dof of each slot; `None` on ∂Ω.
    pub slots: [Option<usize>; 9],
    /// Velocity mass block.
    pub mass: Mat9,
    /// Gradient-space mass block `M_ν`.
    pub gradient_mass: Mat12,
    /// Lower Cholesky factor `L` of `M_ν`.
    chol: Mat12,
    /// `B_ν` restricted to the macro (slots × gradient basis).
    pub b: SMatrix<f64, 9, 12>,
    /// `L⁻¹ B_νᵀ`.
    zb: Mat12x9,
    /// `L⁻¹ G` with `G` the gradient basis nodal values.
    h: Mat12x18,
    /// `b_h` block: pressure dofs × (component · 9 + slot).
    pub c: SMatrix<f64, 4, 18>,
}

#[derive(Debug, Clone)]
pub struct CoreForms {
    pub n_velocity: usize,
    pub n_gradient: usize,
    pub n_pressure: usize,
    /// `B_ij = B_h(Ψ_j, v_i)`, velocity × gradient.
    pub b: CsrMatrix,
    /// `C_ij = b_h(v_j, q_i)`, pressure × (u₁ dofs, u₂ dofs).
    pub c: CsrMatrix,
    /// Gradient mass, block diagonal.
    pub m: CsrMatrix,
    /// Velocity-component mass.
    pub m_tilde: CsrMatrix,
    /// `∫_Ω q_j` for every pressure basis function.
    pub pressure_mean: Vec<f64>,
    pub macros: Vec<MacroForms>,
}

/// Nodal-function form of the convection term per macro: slot × gradient nodal function.
#[derive(Debug, Clone)]
pub struct ConvectionForm {
    pub local: Vec<Mat9x18>,
}

#[derive(Debug, Clone)]
pub struct MomentumOperator {
    pub alpha: f64,
    pub mu: f64,
    pub rho: f64,
    /// `A` per macro.
    pub blocks: Vec<Mat9>,
    /// `−Δ_h` per macro.
    pub laplacian_blocks: Vec<Mat9>,
    /// `V·∇_h` per macro.
    pub convection_blocks: Vec<Mat9>,
    slots: Vec<[Option<usize>; 9]>,
    n: usize,
}

/// Eliminated auxiliaries, all coefficient vectors over the gradient space.
#[derive(Debug, Clone, PartialEq)]
pub struct Auxiliaries {
    pub w: Vec<f64>,
    pub z: Vec<f64>,
    pub w_tilde: Vec<f64>,
    pub z_tilde: Vec<f64>,
    /// Row 1 of `L_h`.
    pub w_hat: Vec<f64>,
    /// Row 2 of `L_h`.
    pub z_hat: Vec<f64>,
}

fn edge_product(len: f64, f: [f64; 2], g: [f64; 2]) -> f64 {
    len / 6.0 * (2.0 * f[0] * g[0] + f[0] * g[1] + f[1] * g[0] + 2.0 * f[1] * g[1])
}

/// Endpoint values (at `p0`, `p1`) of the sub-triangle barycentric function of
/// local vertex `a` along an edge of that sub-triangle.
fn trace_on_edge(vertices: &[Point; 3], a: usize, p0: &Point, p1: &Point) -> [f64; 2] {
    [f64::from(u8::from(vertices[a] == *p0)), f64::from(u8::from(vertices[a] == *p1))]
}

fn macro_forms(mesh: &StaggeredMesh, spaces: &Spaces, c: usize) -> Result<MacroForms> {
    let elems = mesh.macro_elements(c);
    let mut slots = [None; 9];
    for (s, slot) in slots.iter_mut().enumerate() {
        *slot = spaces.velocity_slot(c, s);
    }
    let mut mass = Mat9::zeros();
    let mut m18 = SMatrix::<f64, 18, 18>::zeros();
    let mut b18 = Mat9x18::zeros();
    let mut c18 = SMatrix::<f64, 4, 18>::zeros();
    let pdof = |k: usize, a: usize| if a == 2 { 3 } else { (k + a) % 3 };

    for (k, &t) in elems.iter().enumerate() {
        let el = &mesh.elements[t];
        let area = el.area;
        let grads = el.barycentric_gradients();
        for a in 0..3 {
            for b in 0..3 {
                let m = area / 12.0 * if a == b { 2.0 } else { 1.0 };
                mass[(3 * k + a, 3 * k + b)] = m;
                for comp in 0..2 {
                    m18[(6 * k + 2 * a + comp, 6 * k + 2 * b + comp)] = m;
                    // ∫ λ_a ∂_comp λ_b
                    b18[(3 * k + b, 6 * k + 2 * a + comp)] += area / 3.0 * grads[b][comp];
                    // ∫ λ_b ∂_comp q_a
                    c18[(pdof(k, a), 9 * comp + 3 * k + b)] += area / 3.0 * grads[a][comp];
                }
            }
        }
        // −∫_{∂S} (v·n_S) q on the coarse edge
        let e = &mesh.edges[el.edges[0]];
        let n = e.normal * e.orientation(t);
        let [p0, p1] = &e.endpoints;
        for a in 0..2 {
            for b in 0..2 {
                let f = trace_on_edge(&el.vertices, a, p0, p1);
                let g = trace_on_edge(&el.vertices, b, p0, p1);
                let val = edge_product(e.length, f, g);
                for comp in 0..2 {
                    c18[(pdof(k, a), 9 * comp + 3 * k + b)] -= val * n[comp];
                }
            }
        }
    }

    // −∫_e {Ψ·n} [v] on subdivision edges
    for j in 0..3 {
        let e = &mesh.edges[mesh.num_coarse_edges + 3 * c + j];
        let [p0, p1] = &e.endpoints;
        let sides = [(j + 2) % 3, j];
        for &kw in &sides {
            let tw = elems[kw];
            for &ks in &sides {
                let ts = elems[ks];
                let sigma = e.orientation(ts);
                for a in 0..3 {
                    let f = trace_on_edge(&mesh.elements[tw].vertices, a, p0, p1);
                    if f == [0.0, 0.0] {
                        continue;
                    }
                    for b in 0..3 {
                        let g = trace_on_edge(&mesh.elements[ts].vertices, b, p0, p1);
                        if g == [0.0, 0.0] {
                            continue;
                        }
                        let val = 0.5 * sigma * edge_product(e.length, f, g);
                        for comp in 0..2 {
                            b18[(3 * ks + b, 6 * kw + 2 * a + comp)] -= val * e.normal[comp];
                        }
                    }
                }
            }
        }
    }

    let g = &spaces.gradient_basis[c];
    let gradient_mass = g * m18 * g.transpose();
    let chol = gradient_mass
        .cholesky()
        .ok_or_else(|| SdgError::AssemblyFailure(format!("gradient mass block of macro-element {c} is singular")))?
        .l();
    let h = chol
        .solve_lower_triangular(g)
        .ok_or_else(|| SdgError::AssemblyFailure(format!("gradient mass block of macro-element {c} is singular")))?;
    let zb = h * b18.transpose();
    let b = b18 * g.transpose();
    Ok(MacroForms { slots, mass, gradient_mass, chol, b, zb, h, c: c18 })
}

/// Assembles `B`, `C`, `M`, `M̃` and the per-macro eliminations.
pub fn assemble_core(mesh: &StaggeredMesh, spaces: &Spaces) -> Result<CoreForms> {
    let nm = mesh.num_macros();
    let macros = (0..nm).map(|c| macro_forms(mesh, spaces, c)).collect::<Result<Vec<_>>>()?;
    let nu = spaces.velocity.dim;
    let nw = spaces.gradient.dim;
    let np = spaces.pressure.dim;

    let mut b_t = Vec::with_capacity(nm * 9 * 12);
    let mut c_t = Vec::with_capacity(nm * 4 * 18);
    let mut m_t = Vec::with_capacity(nm * 144);
    let mut mt_t = Vec::with_capacity(nm * 81);
    let mut pressure_mean = vec![0.0; np];
    for (c, mf) in macros.iter().enumerate() {
        for i in 0..12 {
            for j in 0..12 {
                m_t.push((12 * c + i, 12 * c + j, mf.gradient_mass[(i, j)]));
            }
        }
        for (s, gs) in mf.slots.iter().enumerate() {
            let Some(gs) = *gs else { continue };
            for j in 0..12 {
                b_t.push((gs, 12 * c + j, mf.b[(s, j)]));
            }
            for (s2, gs2) in mf.slots.iter().enumerate() {
                if let Some(gs2) = *gs2 {
                    mt_t.push((gs, gs2, mf.mass[(s, s2)]));
                }
            }
            for q in 0..4 {
                for comp in 0..2 {
                    c_t.push((4 * c + q, comp * nu + gs, mf.c[(q, 9 * comp + s)]));
                }
            }
        }
        for (k, &t) in mesh.macro_elements(c).iter().enumerate() {
            let third = mesh.elements[t].area / 3.0;
            pressure_mean[4 * c + k] += third;
            pressure_mean[4 * c + (k + 1) % 3] += third;
            pressure_mean[4 * c + 3] += third;
        }
    }
    Ok(CoreForms {
        n_velocity: nu,
        n_gradient: nw,
        n_pressure: np,
        b: CsrMatrix::from_triplets(nu, nw, b_t),
        c: CsrMatrix::from_triplets(np, 2 * nu, c_t),
        m: CsrMatrix::from_triplets(nw, nw, m_t),
        m_tilde: CsrMatrix::from_triplets(nu, nu, mt_t),
        pressure_mean,
        macros,
    })
}

/// Per-macro nodal-function matrices of `R_h(Ψ, v) = ∫ (V·Ψ) v`.
pub fn assemble_convection(mesh: &StaggeredMesh, v: &PostprocessedVelocity) -> ConvectionForm {
    let table = macro_points();
    let local = (0..mesh.num_macros())
        .map(|c| {
            let mut r = Mat9x18::zeros();
            if v.is_zero_on(c) {
                return r;
            }
            for (k, &t) in mesh.macro_elements(c).iter().enumerate() {
                let scale = 2.0 * mesh.elements[t].area;
                for p in &table[k] {
                    let vel = v.eval_barycentric(c, &p.coarse);
                    let w = scale * p.weight;
                    for a in 0..3 {
                        for b in 0..3 {
                            let ll = w * p.sub[a] * p.sub[b];
                            for comp in 0..2 {
                                r[(3 * k + b, 6 * k + 2 * a + comp)] += ll * vel[comp];
                            }
                        }
                    }
                }
            }
            r
        })
        .collect();
    ConvectionForm { local }
}

impl ConvectionForm {
    pub fn zero(num_macros: usize) -> Self {
        Self { local: vec![Mat9x18::zeros(); num_macros] }
    }

    /// Global `R_ij = R_h(Ψ_j, v_i)`, velocity × gradient.
    pub fn matrix(&self, core: &CoreForms, spaces: &Spaces) -> CsrMatrix {
        let mut t = Vec::new();
        for (c, (r18, mf)) in self.local.iter().zip(&core.macros).enumerate() {
            let r = r18 * spaces.gradient_basis[c].transpose();
            for (s, gs) in mf.slots.iter().enumerate() {
                if let Some(gs) = *gs {
                    for j in 0..12 {
                        t.push((gs, 12 * c + j, r[(s, j)]));
                    }
                }
            }
        }
        CsrMatrix::from_triplets(core.n_velocity, core.n_gradient, t)
    }
}

/// `XᵀY` with a fixed summation order, so that `XᵀX` is exactly symmetric.
fn gram(x: &Mat12x9, y: &Mat12x9) -> Mat9 {
    Mat9::from_fn(|i, j| {
        let mut s = 0.0;
        for k in 0..12 {
            s += x[(k, i)] * y[(k, j)];
        }
        s
    })
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(SdgError::InvalidParameter(format!("{name} must be positive and finite, got {v}")))
    }
}

/// Forms `A` blockwise from the macro-local eliminations.
pub fn build_momentum(core: &CoreForms, conv: &ConvectionForm, alpha: f64, mu: f64, rho: f64) -> Result<MomentumOperator> {
    check_positive("alpha", alpha)?;
    check_positive("mu", mu)?;
    check_positive("rho", rho)?;
    let nm = core.macros.len();
    let mut blocks = Vec::with_capacity(nm);
    let mut laplacian_blocks = Vec::with_capacity(nm);
    let mut convection_blocks = Vec::with_capacity(nm);
    for (mf, r18) in core.macros.iter().zip(&conv.local) {
        let lap = gram(&mf.zb, &mf.zb);
        let zr: Mat12x9 = mf.h * r18.transpose();
        let s = gram(&zr, &mf.zb);
        let conv_block = Mat9::from_fn(|i, j| 0.5 * (s[(i, j)] - s[(j, i)]));
        let a = Mat9::from_fn(|i, j| alpha * mf.mass[(i, j)] + mu * lap[(i, j)] + rho * conv_block[(i, j)]);
        blocks.push(a);
        laplacian_blocks.push(lap);
        convection_blocks.push(conv_block);
    }
    Ok(MomentumOperator {
        alpha,
        mu,
        rho,
        blocks,
        laplacian_blocks,
        convection_blocks,
        slots: core.macros.iter().map(|m| m.slots).collect(),
        n: core.n_velocity,
    })
}

impl MomentumOperator {
    fn scatter(&self, blocks: &[Mat9]) -> CsrMatrix {
        let mut t = Vec::with_capacity(blocks.len() * 81);
        for (blk, slots) in blocks.iter().zip(&self.slots) {
            for (i, gi) in slots.iter().enumerate() {
                let Some(gi) = *gi else { continue };
                for (j, gj) in slots.iter().enumerate() {
                    if let Some(gj) = *gj {
                        t.push((gi, gj, blk[(i, j)]));
                    }
                }
            }
        }
        CsrMatrix::from_triplets(self.n, self.n, t)
    }

    pub fn matrix(&self) -> CsrMatrix {
        self.scatter(&self.blocks)
    }

    /// `−Δ_h = B M⁻¹ Bᵀ`.
    pub fn negative_laplacian(&self) -> CsrMatrix {
        self.scatter(&self.laplacian_blocks)
    }

    /// `V·∇_h`.
    pub fn convection(&self) -> CsrMatrix {
        self.scatter(&self.convection_blocks)
    }

    pub fn slots(&self) -> &[[Option<usize>; 9]] {
        &self.slots
    }
}

fn gather(slots: &[Option<usize>; 9], u: &[f64]) -> Vec9 {
    Vec9::from_fn(|s, _| slots[s].map_or(0.0, |g| u[g]))
}

/// Recovers `w, z, w̃, z̃` and the gradient approximation `L_h`, macro by macro.
pub fn recover_auxiliaries(core: &CoreForms, conv: &ConvectionForm, u1: &[f64], u2: &[f64], mu: f64, rho: f64) -> Auxiliaries {
    let nw = core.n_gradient;
    let mut aux = Auxiliaries {
        w: vec![0.0; nw],
        z: vec![0.0; nw],
        w_tilde: vec![0.0; nw],
        z_tilde: vec![0.0; nw],
        w_hat: vec![0.0; nw],
        z_hat: vec![0.0; nw],
    };
    let sq = mu.sqrt();
    let coupling = rho / (2.0 * sq);
    for (c, (mf, r18)) in core.macros.iter().zip(&conv.local).enumerate() {
        let lt = mf.chol.transpose();
        let zr: Mat12x9 = mf.h * r18.transpose();
        for (u, hat, tilde, plain) in [
            (u1, &mut aux.w_hat, &mut aux.w_tilde, &mut aux.w),
            (u2, &mut aux.z_hat, &mut aux.z_tilde, &mut aux.z),
        ] {
            let ul = gather(&mf.slots, u);
            let solve = |y: Vec12| lt.solve_upper_triangular(&y).expect("factor checked at assembly");
            let h = solve(mf.zb * ul);
            let t = solve(zr * ul);
            for i in 0..12 {
                hat[12 * c + i] = h[i];
                tilde[12 * c + i] = t[i];
                plain[12 * c + i] = sq * h[i] - coupling * t[i];
            }
        }
    }
    aux
}

impl CoreForms {
    /// Squared L² norm of the recovered gradient field `M⁻¹ Bᵀ u`.
    pub fn gradient_energy(&self, u: &[f64]) -> f64 {
        self.macros
            .iter()
            .map(|mf| (mf.zb * gather(&mf.slots, u)).norm_squared())
            .sum()
    }

    /// `uᵀ M̃ u`, evaluated blockwise.
    pub fn mass_energy(&self, u: &[f64]) -> f64 {
        self.m_tilde.mul_vec(u).iter().zip(u).map(|(a, b)| a * b).sum()
    }
}

/// Element-local values of `L_h` at the vertices of sub-triangle `t`:
/// `out[a] = [[∂₁u₁, ∂₂u₁], [∂₁u₂, ∂₂u₂]]` at local vertex `a`.
pub fn gradient_at_vertices(spaces: &Spaces, aux: &Auxiliaries, t: usize) -> [[[f64; 2]; 2]; 3] {
    let w = spaces.gradient.local_coefficients(t, &aux.w_hat);
    let z = spaces.gradient.local_coefficients(t, &aux.z_hat);
    std::array::from_fn(|a| [[w[2 * a], w[2 * a + 1]], [z[2 * a], z[2 * a + 1]]])
}

/// Load functional `(f, v)` on stacked velocity components, by quadrature.
pub fn load_vector(mesh: &StaggeredMesh, spaces: &Spaces, f: impl Fn(&Point) -> Point) -> Vec<f64> {
    let nu = spaces.velocity.dim;
    let mut out = vec![0.0; 2 * nu];
    let table = macro_points();
    for (t, el) in mesh.elements.iter().enumerate() {
        let scale = 2.0 * el.area;
        for p in &table[el.local_index] {
            let x = el.vertices[0] * p.sub[0] + el.vertices[1] * p.sub[1] + el.vertices[2] * p.sub[2];
            let fx = f(&x);
            for a in 0..3 {
                for &(g, coeff) in spaces.velocity.local(t, a) {
                    let w = scale * p.weight * p.sub[a] * coeff;
                    out[g] += w * fx.x;
                    out[nu + g] += w * fx.y;
                }
            }
        }
    }
    out
}
