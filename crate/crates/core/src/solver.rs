//! Saddle-point solves and the Picard fixed-point loop of one time step.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMat};
use faer::Mat;
use std::sync::{Arc, Mutex};

use crate::assembly::{assemble_convection, assemble_core, build_momentum, recover_auxiliaries, Auxiliaries, ConvectionForm, CoreForms, Mat9};
use crate::error::{Result, SdgError};
use crate::mesh::{build_unit_square_mesh, staggered_subdivide, StaggeredMesh};
use crate::postprocess::{PostprocessedVelocity, Postprocessor};
use crate::spaces::{build_layouts, Spaces};

/// Relative residual accepted from a direct solve.
pub const RESIDUAL_TOLERANCE: f64 = 1e-9;
/// Guard for the relative successive difference of the Picard loop.
pub const EPS_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardSettings {
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for PicardSettings {
    fn default() -> Self {
        Self { tol: 1e-8, max_iters: 25 }
    }
}

impl PicardSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || self.max_iters == 0 {
            return Err(SdgError::InvalidParameter(format!(
                "Picard settings need tol > 0 and max_iters >= 1 (got {}, {})",
                self.tol, self.max_iters
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t_final: f64,
    pub steps: usize,
    pub dt: f64,
}

impl TimeGrid {
    pub fn new(t_final: f64, steps: usize) -> Result<Self> {
        if !(t_final > 0.0) || !t_final.is_finite() || steps == 0 {
            return Err(SdgError::InvalidParameter(format!(
                "time grid needs T > 0 and K >= 1 (got T = {t_final}, K = {steps})"
            )));
        }
        Ok(Self { t_final, steps, dt: t_final / steps as f64 })
    }

    pub fn time(&self, n: usize) -> f64 {
        self.t_final * n as f64 / self.steps as f64
    }
}

/// Coefficients of `(u₁, u₂, p)` with the eliminated auxiliaries.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
    pub p: Vec<f64>,
    pub aux: Auxiliaries,
}

impl FieldState {
    /// `(u₁, u₂)` stacked.
    pub fn velocity(&self) -> Vec<f64> {
        self.u1.iter().chain(&self.u2).copied().collect()
    }

    pub fn is_finite(&self) -> bool {
        self.u1.iter().chain(&self.u2).chain(&self.p).all(|v| v.is_finite())
    }
}

/// Parameters of one linearized (Oseen-type) problem.
#[derive(Debug, Clone, Copy)]
pub struct LinearizedProblem<'a> {
    pub alpha: f64,
    pub mu: f64,
    pub rho: f64,
    pub v: &'a PostprocessedVelocity,
    /// Load functional on `(u₁ dofs, u₂ dofs)`.
    pub rhs: &'a [f64],
}

/// Fixed-pattern sparse LU of `[[A, 0, C₁ᵀ], [0, A, C₂ᵀ], [C₁, C₂, 0]]`.
///
/// The constant pressure mode is removed by replacing the constraint row of
/// pressure dof 0 with `p₀ = 0`; the rows of `C` sum to zero, so that row is
/// implied by the others. The pressure is shifted to zero mean after the solve.
/// A dense zero-mean multiplier row gives the same solution but ruins the
/// fill-reducing ordering.
pub struct SaddleSolver {
    n: usize,
    nu: usize,
    pattern: SymbolicSparseColMat<usize>,
    base_values: Vec<f64>,
    /// Value slot of every present `(i, j)` pair of each macro, for component 1 then 2.
    block_slots: Vec<Vec<usize>>,
    pressure_mean: Vec<f64>,
    symbolic: SymbolicLu<usize>,
}

impl std::fmt::Debug for SaddleSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SaddleSolver").field("n", &self.n).field("nnz", &self.base_values.len()).finish()
    }
}

impl SaddleSolver {
    pub fn new(core: &CoreForms) -> Result<Self> {
        let nu = core.n_velocity;
        let np = core.n_pressure;
        let n = 2 * nu + np;
        let pinned = 2 * nu;
        let mut entries: Vec<(usize, usize)> = Vec::new();
        for mf in &core.macros {
            for comp in 0..2 {
                for gi in mf.slots.iter().flatten() {
                    for gj in mf.slots.iter().flatten() {
                        entries.push((comp * nu + gj, comp * nu + gi));
                    }
                }
            }
        }
        for (r, c, _) in core.c.triplets() {
            if r != 0 {
                entries.push((c, 2 * nu + r));
                entries.push((2 * nu + r, c));
            }
        }
        entries.push((pinned, pinned));
        // (column, row) ordering gives compressed columns directly
        entries.sort_unstable();
        entries.dedup();
        let mut col_ptr = vec![0usize; n + 1];
        let mut row_idx = Vec::with_capacity(entries.len());
        for &(c, r) in &entries {
            col_ptr[c + 1] += 1;
            row_idx.push(r);
        }
        for c in 0..n {
            col_ptr[c + 1] += col_ptr[c];
        }
        let slot = |r: usize, c: usize| -> usize {
            let range = col_ptr[c]..col_ptr[c + 1];
            range.start + row_idx[range].binary_search(&r).expect("entry in pattern")
        };
        let mut base_values = vec![0.0; entries.len()];
        for (r, c, v) in core.c.triplets() {
            if r != 0 {
                base_values[slot(2 * nu + r, c)] += v;
                base_values[slot(c, 2 * nu + r)] += v;
            }
        }
        base_values[slot(pinned, pinned)] = 1.0;
        let block_slots = core
            .macros
            .iter()
            .map(|mf| {
                let mut s = Vec::with_capacity(162);
                for comp in 0..2 {
                    for gi in mf.slots.iter().flatten() {
                        for gj in mf.slots.iter().flatten() {
                            s.push(slot(comp * nu + gi, comp * nu + gj));
                        }
                    }
                }
                s
            })
            .collect();
        let pattern = SymbolicSparseColMat::new_checked(n, n, col_ptr, None, row_idx);
        let symbolic = SymbolicLu::try_new(pattern.as_ref())
            .map_err(|e| SdgError::SingularSystem(format!("symbolic factorization failed: {e:?}")))?;
        Ok(Self { n, nu, pattern, base_values, block_slots, pressure_mean: core.pressure_mean.clone(), symbolic })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn values(&self, core: &CoreForms, blocks: &[Mat9]) -> Vec<f64> {
        let mut values = self.base_values.clone();
        for ((mf, blk), slots) in core.macros.iter().zip(blocks).zip(&self.block_slots) {
            let present: Vec<usize> = (0..9).filter(|&s| mf.slots[s].is_some()).collect();
            let mut it = slots.iter();
            for _ in 0..2 {
                for &i in &present {
                    for &j in &present {
                        values[*it.next().unwrap()] += blk[(i, j)];
                    }
                }
            }
        }
        values
    }

    fn mul(&self, values: &[f64], x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        let col_ptr = self.pattern.col_ptr();
        let row_idx = self.pattern.row_idx();
        for c in 0..self.n {
            for k in col_ptr[c]..col_ptr[c + 1] {
                y[row_idx[k]] += values[k] * x[c];
            }
        }
        y
    }

    /// Factorizes the saddle matrix with momentum blocks `blocks`.
    pub fn factorize(&self, core: &CoreForms, blocks: &[Mat9]) -> Result<SaddleFactorization> {
        let values = self.values(core, blocks);
        if values.iter().any(|v| !v.is_finite()) {
            return Err(SdgError::SingularSystem("non-finite matrix entries".into()));
        }
        let mat = SparseColMatRef::new(self.pattern.as_ref(), &values);
        let lu = Lu::try_new_with_symbolic(self.symbolic.clone(), mat)
            .map_err(|e| SdgError::SingularSystem(format!("numeric factorization failed: {e:?}")))?;
        Ok(SaddleFactorization { lu })
    }

    fn load(&self, rhs: &[f64]) -> Result<(Vec<f64>, f64)> {
        assert_eq!(rhs.len(), 2 * self.nu);
        let mut b = vec![0.0; self.n];
        b[..2 * self.nu].copy_from_slice(rhs);
        let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !bnorm.is_finite() {
            return Err(SdgError::SingularSystem("non-finite load entries".into()));
        }
        Ok((b, bnorm))
    }

    fn residual(&self, values: &[f64], b: &[f64], x: &[f64]) -> (Vec<f64>, f64) {
        let r: Vec<f64> = self.mul(values, x).iter().zip(b).map(|(ax, bi)| bi - ax).collect();
        let norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        (r, norm)
    }

    fn finish(&self, mut x: Vec<f64>, rel: f64) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        if !(rel <= RESIDUAL_TOLERANCE) {
            if rel.is_finite() {
                return Err(SdgError::SolveDiverged { residual: rel, tolerance: RESIDUAL_TOLERANCE });
            }
            return Err(SdgError::SingularSystem("factorization produced non-finite values".into()));
        }
        let nu = self.nu;
        let mut p = x[2 * nu..].to_vec();
        let area: f64 = self.pressure_mean.iter().sum();
        let mean = p.iter().zip(&self.pressure_mean).map(|(a, m)| a * m).sum::<f64>() / area;
        p.iter_mut().for_each(|v| *v -= mean);
        x.truncate(2 * nu);
        let u2 = x.split_off(nu);
        Ok((x, u2, p))
    }

    fn zero(&self) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        (vec![0.0; self.nu], vec![0.0; self.nu], vec![0.0; self.n - 2 * self.nu])
    }

    /// Solves with momentum blocks `blocks` (one 9×9 block per macro) and
    /// velocity load `rhs` by a fresh factorization plus one refinement step;
    /// returns `(u₁, u₂, p)` with `∫p = 0`.
    pub fn solve(&self, core: &CoreForms, blocks: &[Mat9], rhs: &[f64]) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let (b, bnorm) = self.load(rhs)?;
        if bnorm == 0.0 {
            return Ok(self.zero());
        }
        let values = self.values(core, blocks);
        let fact = self.factorize(core, blocks)?;
        let mut x = fact.apply(&b);
        let (r, _) = self.residual(&values, &b, &x);
        let dx = fact.apply(&r);
        x.iter_mut().zip(&dx).for_each(|(xi, d)| *xi += d);
        let (_, rnorm) = self.residual(&values, &b, &x);
        self.finish(x, rnorm / bnorm)
    }

    /// Solves with momentum blocks `blocks` by defect correction around the
    /// factorization `base` of a nearby matrix; falls back to [`Self::solve`]
    /// when the corrections stop contracting.
    pub fn solve_corrected(
        &self,
        core: &CoreForms,
        blocks: &[Mat9],
        rhs: &[f64],
        base: &SaddleFactorization,
    ) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let (b, bnorm) = self.load(rhs)?;
        if bnorm == 0.0 {
            return Ok(self.zero());
        }
        let values = self.values(core, blocks);
        if values.iter().any(|v| !v.is_finite()) {
            return Err(SdgError::SingularSystem("non-finite matrix entries".into()));
        }
        let mut x = base.apply(&b);
        let (mut r, mut rnorm) = self.residual(&values, &b, &x);
        for _ in 0..CORRECTION_MAX_ITERS {
            if rnorm <= CORRECTION_TOLERANCE * bnorm {
                return self.finish(x, rnorm / bnorm);
            }
            let dx = base.apply(&r);
            x.iter_mut().zip(&dx).for_each(|(xi, d)| *xi += d);
            let (r_next, next) = self.residual(&values, &b, &x);
            if !(next <= CORRECTION_CONTRACTION * rnorm) {
                break;
            }
            r = r_next;
            rnorm = next;
        }
        self.solve(core, blocks, rhs)
    }
}

/// Relative residual targeted by [`SaddleSolver::solve_corrected`].
pub const CORRECTION_TOLERANCE: f64 = 1e-13;
/// Largest accepted residual ratio of one correction step.
pub const CORRECTION_CONTRACTION: f64 = 0.5;
pub const CORRECTION_MAX_ITERS: usize = 40;

/// Numeric LU factors of one saddle matrix.
pub struct SaddleFactorization {
    lu: Lu<usize, f64>,
}

impl std::fmt::Debug for SaddleFactorization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SaddleFactorization").finish_non_exhaustive()
    }
}

impl SaddleFactorization {
    fn apply(&self, r: &[f64]) -> Vec<f64> {
        let mut m = Mat::from_fn(r.len(), 1, |i, _| r[i]);
        self.lu.solve_in_place(m.as_mut());
        (0..r.len()).map(|i| m[(i, 0)]).collect()
    }
}

/// Mesh, spaces, macro forms, postprocessing systems and the saddle-point
/// factorization pattern for one resolution.
#[derive(Debug)]
pub struct Discretization {
    pub mesh: StaggeredMesh,
    pub spaces: Spaces,
    pub core: CoreForms,
    pub postprocessor: Postprocessor,
    pub saddle: SaddleSolver,
    /// Factorization of the convection-free saddle matrix for the last `(α, μ)` used.
    stokes: Mutex<Option<((u64, u64), Arc<SaddleFactorization>)>>,
}

impl Discretization {
    pub fn unit_square(n: usize) -> Result<Self> {
        Self::from_mesh(staggered_subdivide(build_unit_square_mesh(n)?))
    }

    pub fn from_mesh(mesh: StaggeredMesh) -> Result<Self> {
        let spaces = build_layouts(&mesh, 1)?;
        let core = assemble_core(&mesh, &spaces)?;
        let postprocessor = Postprocessor::new(&mesh)?;
        let saddle = SaddleSolver::new(&core)?;
        Ok(Self { mesh, spaces, core, postprocessor, saddle, stokes: Mutex::new(None) })
    }

    /// Factorization of the saddle matrix with `A = α M̃ − μ Δ_h`, cached per `(α, μ)`.
    pub fn stokes_factorization(&self, alpha: f64, mu: f64) -> Result<Arc<SaddleFactorization>> {
        let key = (alpha.to_bits(), mu.to_bits());
        let mut cache = self.stokes.lock().unwrap_or_else(|e| e.into_inner());
        if let Some((k, f)) = cache.as_ref() {
            if *k == key {
                return Ok(Arc::clone(f));
            }
        }
        let op = build_momentum(&self.core, &ConvectionForm::zero(self.mesh.num_macros()), alpha, mu, 1.0)?;
        let f = Arc::new(self.saddle.factorize(&self.core, &op.blocks)?);
        *cache = Some((key, Arc::clone(&f)));
        Ok(f)
    }

    pub fn n_velocity(&self) -> usize {
        self.core.n_velocity
    }

    /// `‖u‖²_{L²}` for stacked `(u₁, u₂)`.
    pub fn l2_norm_squared(&self, u: &[f64]) -> f64 {
        let nu = self.n_velocity();
        self.core.mass_energy(&u[..nu]) + self.core.mass_energy(&u[nu..])
    }

    /// `M̃` applied to each component of stacked `(u₁, u₂)`.
    pub fn mass_times(&self, u: &[f64]) -> Vec<f64> {
        let nu = self.n_velocity();
        let mut out = self.core.m_tilde.mul_vec(&u[..nu]);
        out.extend(self.core.m_tilde.mul_vec(&u[nu..]));
        out
    }

    /// Postprocessed velocity of stacked `(u₁, u₂)`.
    pub fn postprocess(&self, u: &[f64]) -> Result<PostprocessedVelocity> {
        let nu = self.n_velocity();
        let conv = ConvectionForm::zero(self.mesh.num_macros());
        let aux = recover_auxiliaries(&self.core, &conv, &u[..nu], &u[nu..], 1.0, 1.0);
        self.postprocessor.apply(&self.mesh, &self.spaces, &u[..nu], &u[nu..], &aux)
    }

    /// `α‖u‖² + μ‖L_h‖² − (F, u)` relative to `(F, u)`-scale.
    pub fn energy_identity_defect(&self, alpha: f64, mu: f64, state: &FieldState, rhs: &[f64]) -> f64 {
        let u = state.velocity();
        let lhs = alpha * self.l2_norm_squared(&u)
            + mu * (self.core.gradient_energy(&state.u1) + self.core.gradient_energy(&state.u2));
        let work: f64 = rhs.iter().zip(&u).map(|(f, v)| f * v).sum();
        let scale = lhs.abs().max(work.abs());
        if scale == 0.0 {
            0.0
        } else {
            (lhs - work).abs() / scale
        }
    }

    /// L² projection of `(u₁, u₂)`-load `rhs` onto the weakly divergence-free subspace.
    pub fn project_divergence_free(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let blocks: Vec<Mat9> = self.core.macros.iter().map(|m| m.mass).collect();
        let (u1, u2, _) = self.saddle.solve(&self.core, &blocks, rhs)?;
        Ok(u1.into_iter().chain(u2).collect())
    }
}

pub fn solve_linearized(disc: &Discretization, problem: &LinearizedProblem<'_>) -> Result<FieldState> {
    let conv = assemble_convection(&disc.mesh, problem.v);
    let op = build_momentum(&disc.core, &conv, problem.alpha, problem.mu, problem.rho)?;
    let base = disc.stokes_factorization(problem.alpha, problem.mu)?;
    let (u1, u2, p) = disc.saddle.solve_corrected(&disc.core, &op.blocks, problem.rhs, &base)?;
    let aux = recover_auxiliaries(&disc.core, &conv, &u1, &u2, problem.mu, problem.rho);
    Ok(FieldState { u1, u2, p, aux })
}

#[derive(Debug, Clone)]
pub struct PicardOutcome {
    pub state: FieldState,
    pub iterations: usize,
    pub converged: bool,
    /// Non-finite iterate encountered; `state` is the offending iterate.
    pub blown_up: bool,
    /// Relative successive differences, one per iteration.
    pub differences: Vec<f64>,
    /// Largest relative energy-identity defect over the iterations.
    pub energy_defect: f64,
}

/// Fixed-point iterations for one time step with load `rhs`
/// (`ρ/Δt · M̃ u^{n−1}` plus body and immersed-boundary forces).
pub fn picard_solve(
    disc: &Discretization,
    u_prev: &[f64],
    rhs: &[f64],
    settings: &PicardSettings,
    dt: f64,
    rho: f64,
    mu: f64,
) -> Result<PicardOutcome> {
    settings.validate()?;
    let alpha = rho / dt;
    let mut current = u_prev.to_vec();
    let mut differences = Vec::new();
    let mut energy_defect: f64 = 0.0;
    let mut m = 0;
    loop {
        m += 1;
        let v = disc.postprocess(&current)?;
        let problem = LinearizedProblem { alpha, mu, rho, v: &v, rhs };
        let state = solve_linearized(disc, &problem)?;
        if !state.is_finite() {
            return Ok(PicardOutcome { state, iterations: m, converged: false, blown_up: true, differences, energy_defect });
        }
        energy_defect = energy_defect.max(disc.energy_identity_defect(alpha, mu, &state, rhs));
        let next = state.velocity();
        let delta: Vec<f64> = next.iter().zip(&current).map(|(a, b)| a - b).collect();
        let diff = disc.l2_norm_squared(&delta).sqrt() / disc.l2_norm_squared(&next).sqrt().max(EPS_FLOOR);
        differences.push(diff);
        let converged = diff <= settings.tol;
        if converged || m >= settings.max_iters {
            return Ok(PicardOutcome { state, iterations: m, converged, blown_up: false, differences, energy_defect });
        }
        current = next;
    }
}
