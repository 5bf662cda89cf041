//! Lowest-order (k = 1) staggered spaces.
//!
//! Every space is built from element-local P1 nodal functions. A [`DofLayout`]
//! maps each local nodal function to a short list of `(global dof, coefficient)`
//! pairs, so that the local value is `Σ coefficient · x[global]`. Local nodal
//! index is `a` (vertex) for scalar spaces and `2a + component` for the vector
//! gradient space.
//!
//! * velocity component `U^h`: continuous across interior coarse edges, zero on ∂Ω;
//!   dofs are the two endpoints of every interior coarse edge plus the centre
//!   node of every sub-triangle.
//! * pressure `P^h`: continuous inside each macro-element; dofs `4c + k` at the
//!   coarse vertex `v_k` and `4c + 3` at `ν`.
//! * gradient `W^h`: normal trace continuous across subdivision edges; twelve
//!   basis fields per macro-element, dofs `12c .. 12c + 12`.

use nalgebra::SMatrix;

use crate::error::{Result, SdgError};
use crate::mesh::{Point, StaggeredMesh};

/// Nodal values of the twelve gradient basis fields of one macro-element.
/// Column index is `6k + 2a + component` for sub-triangle `k`, local vertex `a`.
pub type MacroGradientBasis = SMatrix<f64, 12, 18>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceKind {
    VelocityComponent,
    Gradient,
    Pressure,
}

impl SpaceKind {
    /// Local nodal functions per sub-triangle.
    pub fn local_size(self) -> usize {
        match self {
            SpaceKind::Gradient => 6,
            _ => 3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DofLayout {
    pub kind: SpaceKind,
    pub dim: usize,
    offsets: Vec<usize>,
    entries: Vec<(usize, f64)>,
}

impl DofLayout {
    fn from_lists(kind: SpaceKind, dim: usize, lists: Vec<Vec<(usize, f64)>>) -> Self {
        let mut offsets = Vec::with_capacity(lists.len() + 1);
        let mut entries = Vec::new();
        offsets.push(0);
        for l in lists {
            entries.extend(l);
            offsets.push(entries.len());
        }
        Self { kind, dim, offsets, entries }
    }

    pub fn local_size(&self) -> usize {
        self.kind.local_size()
    }

    pub fn num_elements(&self) -> usize {
        (self.offsets.len() - 1) / self.local_size()
    }

    /// Global expansion of local nodal function `r` of `element`.
    pub fn local(&self, element: usize, r: usize) -> &[(usize, f64)] {
        let i = element * self.local_size() + r;
        &self.entries[self.offsets[i]..self.offsets[i + 1]]
    }

    /// Local nodal coefficients of a global coefficient vector on `element`.
    pub fn local_coefficients(&self, element: usize, global: &[f64]) -> Vec<f64> {
        (0..self.local_size())
            .map(|r| self.local(element, r).iter().map(|&(g, c)| c * global[g]).sum())
            .collect()
    }

    /// Dense local-to-global transfer matrix (rows: all local nodal functions,
    /// element-major; columns: global dofs).
    pub fn transfer_triplets(&self) -> Vec<(usize, usize, f64)> {
        let n = self.offsets.len() - 1;
        (0..n)
            .flat_map(|i| self.entries[self.offsets[i]..self.offsets[i + 1]].iter().map(move |&(g, c)| (i, g, c)))
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct Spaces {
    pub velocity: DofLayout,
    pub gradient: DofLayout,
    pub pressure: DofLayout,
    /// Per macro-element gradient basis nodal values.
    pub gradient_basis: Vec<MacroGradientBasis>,
}

impl Spaces {
    /// Velocity dof behind slot `3k + a` of macro `c` (`None` for boundary traces).
    pub fn velocity_slot(&self, c: usize, slot: usize) -> Option<usize> {
        self.velocity.local(3 * c + slot / 3, slot % 3).first().map(|&(g, _)| g)
    }
}

pub fn build_layouts(mesh: &StaggeredMesh, k: usize) -> Result<Spaces> {
    if k != 1 {
        return Err(SdgError::UnsupportedDegree(k));
    }
    let gradient_basis: Vec<MacroGradientBasis> = (0..mesh.num_macros()).map(|c| gradient_macro_basis(mesh, c)).collect();
    Ok(Spaces {
        velocity: velocity_layout(mesh),
        pressure: pressure_layout(mesh),
        gradient: gradient_layout(&gradient_basis),
        gradient_basis,
    })
}

fn velocity_layout(mesh: &StaggeredMesh) -> DofLayout {
    let coarse = &mesh.coarse;
    let mut edge_dof = vec![usize::MAX; mesh.num_coarse_edges];
    let mut next = 0;
    for e in mesh.interior_coarse_edges() {
        edge_dof[e] = next;
        next += 2;
    }
    let mut lists = Vec::with_capacity(3 * mesh.num_elements());
    for (t, el) in mesh.elements.iter().enumerate() {
        let c = el.macro_index;
        let k = el.local_index;
        let e = el.edges[0];
        for a in 0..2 {
            let v = coarse.triangles[c][(k + a) % 3];
            if mesh.edges[e].is_boundary() {
                lists.push(Vec::new());
            } else {
                let end = usize::from(coarse.edges[e].vertices[1] == v);
                lists.push(vec![(edge_dof[e] + end, 1.0)]);
            }
        }
        lists.push(vec![(next + t, 1.0)]);
    }
    DofLayout::from_lists(SpaceKind::VelocityComponent, next + mesh.num_elements(), lists)
}

fn pressure_layout(mesh: &StaggeredMesh) -> DofLayout {
    let mut lists = Vec::with_capacity(3 * mesh.num_elements());
    for el in &mesh.elements {
        let c = el.macro_index;
        let k = el.local_index;
        lists.push(vec![(4 * c + k, 1.0)]);
        lists.push(vec![(4 * c + (k + 1) % 3, 1.0)]);
        lists.push(vec![(4 * c + 3, 1.0)]);
    }
    DofLayout::from_lists(SpaceKind::Pressure, 4 * mesh.num_macros(), lists)
}

fn gradient_layout(basis: &[MacroGradientBasis]) -> DofLayout {
    let mut lists = Vec::with_capacity(18 * basis.len());
    for (c, g) in basis.iter().enumerate() {
        for col in 0..18 {
            let list = (0..12)
                .filter(|&row| g[(row, col)] != 0.0)
                .map(|row| (12 * c + row, g[(row, col)]))
                .collect();
            lists.push(list);
        }
    }
    DofLayout::from_lists(SpaceKind::Gradient, 12 * basis.len(), lists)
}

/// Explicit basis of the normal-continuous vector P1 fields on one macro-element.
fn gradient_macro_basis(mesh: &StaggeredMesh, c: usize) -> MacroGradientBasis {
    let nu = mesh.centers[c];
    let verts = mesh.coarse.triangle_points(c);
    let tangent = |j: usize| (nu - verts[j]).normalize();
    let normal = |j: usize| {
        let t = tangent(j);
        Point::new(t.y, -t.x)
    };
    let col = |k: usize, a: usize| 6 * k + 2 * a;
    let mut g = MacroGradientBasis::zeros();
    let set = |g: &mut MacroGradientBasis, row: usize, col: usize, v: Point| {
        g[(row, col)] = v.x;
        g[(row, col + 1)] = v.y;
    };
    // coarse vertex v_k: local vertex 0 of t_k, local vertex 1 of t_{k-1}
    for k in 0..3 {
        let prev = (k + 2) % 3;
        let n = normal(k);
        let tau = tangent(k);
        set(&mut g, 3 * k, col(k, 0), n);
        set(&mut g, 3 * k, col(prev, 1), n);
        set(&mut g, 3 * k + 1, col(prev, 1), tau);
        set(&mut g, 3 * k + 2, col(k, 0), tau);
    }
    // centre ν: local vertex 2 of every sub-triangle
    for k in 0..3 {
        set(&mut g, 9, col(k, 2), Point::new(1.0, 0.0));
        set(&mut g, 10, col(k, 2), Point::new(0.0, 1.0));
    }
    let n2 = normal(2);
    let (a, b) = (tangent(0).dot(&n2), tangent(1).dot(&n2));
    let s = (a * a + b * b).sqrt();
    set(&mut g, 11, col(1, 2), tangent(1) * (a / s));
    set(&mut g, 11, col(2, 2), tangent(0) * (b / s));
    g
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FieldValue {
    Scalar(f64),
    Vector(Point),
}

/// Coefficient vector over a layout.
#[derive(Debug, Clone)]
pub struct DiscreteField<'a> {
    pub layout: &'a DofLayout,
    pub coefficients: Vec<f64>,
}

impl<'a> DiscreteField<'a> {
    pub fn new(layout: &'a DofLayout, coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.len() != layout.dim {
            return Err(SdgError::InvalidParameter(format!(
                "coefficient length {} does not match layout dimension {}",
                coefficients.len(),
                layout.dim
            )));
        }
        Ok(Self { layout, coefficients })
    }

    pub fn zeros(layout: &'a DofLayout) -> Self {
        Self { layout, coefficients: vec![0.0; layout.dim] }
    }
}

/// Value of the element-local polynomial at `x` (one-sided trace on edges).
pub fn evaluate_field(mesh: &StaggeredMesh, field: &DiscreteField<'_>, element: usize, x: &Point) -> Result<FieldValue> {
    let el = mesh
        .elements
        .get(element)
        .ok_or_else(|| SdgError::InvalidEvaluation(format!("element {element} does not exist")))?;
    let lam = el.barycentric(x);
    if lam.iter().any(|&l| l < -1e-10) {
        return Err(SdgError::InvalidEvaluation(format!(
            "point ({}, {}) is not in element {element}",
            x.x, x.y
        )));
    }
    let local = field.layout.local_coefficients(element, &field.coefficients);
    Ok(match field.layout.kind {
        SpaceKind::Gradient => {
            let mut v = Point::zeros();
            for a in 0..3 {
                v += Point::new(local[2 * a], local[2 * a + 1]) * lam[a];
            }
            FieldValue::Vector(v)
        }
        _ => FieldValue::Scalar((0..3).map(|a| local[a] * lam[a]).sum()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_unit_square_mesh, staggered_subdivide};

    fn setup(n: usize) -> (StaggeredMesh, Spaces) {
        let mesh = staggered_subdivide(build_unit_square_mesh(n).unwrap());
        let spaces = build_layouts(&mesh, 1).unwrap();
        (mesh, spaces)
    }

    #[test]
    fn dimensions_for_n4() {
        let (_, s) = setup(4);
        assert_eq!(s.velocity.dim, 176);
        assert_eq!(s.gradient.dim, 384);
        assert_eq!(s.pressure.dim, 128);
    }

    #[test]
    fn degree_other_than_one_is_rejected() {
        let mesh = staggered_subdivide(build_unit_square_mesh(2).unwrap());
        assert!(matches!(build_layouts(&mesh, 2), Err(SdgError::UnsupportedDegree(2))));
    }

    #[test]
    fn zero_field_evaluates_to_zero() {
        let (mesh, s) = setup(2);
        let f = DiscreteField::zeros(&s.gradient);
        let x = mesh.elements[5].map_reference(0.3, 0.3);
        assert_eq!(evaluate_field(&mesh, &f, 5, &x).unwrap(), FieldValue::Vector(Point::zeros()));
    }

    #[test]
    fn evaluation_outside_element_is_rejected() {
        let (mesh, s) = setup(2);
        let f = DiscreteField::zeros(&s.pressure);
        let x = mesh.elements[5].map_reference(0.3, 0.3);
        assert!(matches!(evaluate_field(&mesh, &f, 0, &x), Err(SdgError::InvalidEvaluation(_))));
        assert!(DiscreteField::new(&s.pressure, vec![0.0; 3]).is_err());
    }

    #[test]
    fn pressure_reproduces_linear_function_per_macro() {
        let (mesh, s) = setup(3);
        let mut coeffs = vec![0.0; s.pressure.dim];
        for c in 0..mesh.num_macros() {
            let v = mesh.coarse.triangle_points(c);
            for k in 0..3 {
                coeffs[4 * c + k] = v[k].x;
            }
            coeffs[4 * c + 3] = mesh.centers[c].x;
        }
        let f = DiscreteField::new(&s.pressure, coeffs).unwrap();
        for (t, el) in mesh.elements.iter().enumerate() {
            for &(xi, eta, _) in &crate::quadrature::triangle_rule()[..3] {
                let x = el.map_reference(xi, eta);
                let FieldValue::Scalar(v) = evaluate_field(&mesh, &f, t, &x).unwrap() else { panic!() };
                assert!((v - x.x).abs() < 1e-14);
            }
        }
    }
}
