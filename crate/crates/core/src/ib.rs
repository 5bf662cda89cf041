//! Closed elastic curve sampled by Lagrangian markers, its force on the fluid,
//! and the explicit marker update.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Result, SdgError};
use crate::mesh::{Point, StaggeredMesh};
use crate::postprocess::{evaluate_postprocessed, PostprocessedVelocity};
use crate::spaces::Spaces;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CurveKind {
    EllipseStatic,
    LShape,
    EllipseRotating,
    StretchedCircle,
    Balloon,
}

impl CurveKind {
    pub const ALL: [CurveKind; 5] = [
        CurveKind::EllipseStatic,
        CurveKind::LShape,
        CurveKind::EllipseRotating,
        CurveKind::StretchedCircle,
        CurveKind::Balloon,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CurveKind::EllipseStatic => "ellipse-static",
            CurveKind::LShape => "l-shape",
            CurveKind::EllipseRotating => "ellipse-rotating",
            CurveKind::StretchedCircle => "stretched-circle",
            CurveKind::Balloon => "balloon",
        }
    }
}

impl fmt::Display for CurveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CurveKind {
    type Err = SdgError;

    fn from_str(s: &str) -> Result<Self> {
        CurveKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| SdgError::InvalidParameter(format!("unknown curve kind '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveParams {
    pub balloon_radius: f64,
}

impl Default for CurveParams {
    fn default() -> Self {
        Self { balloon_radius: 0.4 }
    }
}

/// Vertices of the L-shaped polygon, counter-clockwise.
pub const L_SHAPE: [(f64, f64); 6] = [(0.3, 0.3), (0.7, 0.3), (0.7, 0.45), (0.45, 0.45), (0.45, 0.7), (0.3, 0.7)];

#[derive(Debug, Clone, PartialEq)]
pub struct ImmersedBoundary {
    /// Partition `s₀ = 0 < … < s_m = L`.
    pub s: Vec<f64>,
    /// Markers `X(s₀), …, X(s_{m−1})`; `X(s_m) = X(s₀)`.
    pub x: Vec<Point>,
    pub kappa: f64,
}

fn stretched(s: f64) -> f64 {
    let g = |s: f64| 1.0 / (1.0 + (-10.0 + 20.0 * s).exp());
    (g(s) - g(0.0)) / (g(1.0) - g(0.0))
}

fn l_shape_point(s: f64) -> Point {
    let verts: Vec<Point> = L_SHAPE.iter().map(|&(x, y)| Point::new(x, y)).collect();
    let lens: Vec<f64> = (0..verts.len()).map(|i| (verts[(i + 1) % verts.len()] - verts[i]).norm()).collect();
    let total: f64 = lens.iter().sum();
    let mut d = s * total;
    for i in 0..verts.len() {
        if d <= lens[i] || i == verts.len() - 1 {
            let a = verts[i];
            let b = verts[(i + 1) % verts.len()];
            return a + (b - a) * (d / lens[i]).min(1.0);
        }
        d -= lens[i];
    }
    unreachable!()
}

/// Parametrized curve point `X₀(s)`.
pub fn curve_point(kind: CurveKind, params: &CurveParams, s: f64) -> Point {
    let tau = 2.0 * PI;
    match kind {
        CurveKind::EllipseStatic => Point::new(0.2 * (tau * s).cos() + 0.3, 0.1 * (tau * s).sin() + 0.3),
        CurveKind::EllipseRotating => Point::new(0.2 * (tau * s).cos() + 0.4, 0.1 * (tau * s).sin() + 0.5),
        CurveKind::StretchedCircle => {
            let g = stretched(s);
            Point::new(0.2 * (tau * g).cos() + 0.5, 0.2 * (tau * g).sin() + 0.5)
        }
        CurveKind::Balloon => {
            let r = params.balloon_radius;
            Point::new(r * (s / r).cos() + 0.5, r * (s / r).sin() + 0.5)
        }
        CurveKind::LShape => l_shape_point(s),
    }
}

/// Length `L` of the Lagrangian interval.
pub fn curve_length(kind: CurveKind, params: &CurveParams) -> f64 {
    match kind {
        CurveKind::Balloon => 2.0 * PI * params.balloon_radius,
        _ => 1.0,
    }
}

pub fn init_curve(kind: CurveKind, params: &CurveParams, m: usize, kappa: f64) -> Result<ImmersedBoundary> {
    if m < 3 {
        return Err(SdgError::InvalidParameter(format!("need at least 3 markers, got {m}")));
    }
    if !(kappa >= 0.0) || !kappa.is_finite() {
        return Err(SdgError::InvalidParameter(format!("kappa must be finite and non-negative, got {kappa}")));
    }
    if kind == CurveKind::Balloon && !(params.balloon_radius > 0.0 && params.balloon_radius < 0.5) {
        return Err(SdgError::InvalidParameter(format!("balloon radius must lie in (0, 0.5), got {}", params.balloon_radius)));
    }
    let len = curve_length(kind, params);
    let s: Vec<f64> = (0..=m).map(|i| if i == m { len } else { len * i as f64 / m as f64 }).collect();
    let x: Vec<Point> = s[..m].iter().map(|&si| curve_point(kind, params, si)).collect();
    for (i, p) in x.iter().enumerate() {
        if !(p.x > 0.0 && p.x < 1.0 && p.y > 0.0 && p.y < 1.0) {
            return Err(SdgError::InvalidGeometry(format!("marker {i} at ({}, {}) is not inside the domain", p.x, p.y)));
        }
    }
    Ok(ImmersedBoundary { s, x, kappa })
}

/// Force functional on stacked velocity components, plus the per-marker forces.
#[derive(Debug, Clone, PartialEq)]
pub struct ForceFunctional {
    pub values: Vec<f64>,
    pub marker_forces: Vec<Point>,
}

impl ForceFunctional {
    pub fn total_force(&self) -> Point {
        self.marker_forces.iter().fold(Point::zeros(), |a, f| a + f)
    }
}

impl ImmersedBoundary {
    pub fn num_markers(&self) -> usize {
        self.x.len()
    }

    pub fn length(&self) -> f64 {
        self.s[self.x.len()]
    }

    /// `X'_{i−½} = (X_i − X_{i−1}) / (s_i − s_{i−1})` for `i = 1..=m`, periodic.
    pub fn segment_derivative(&self, i: usize) -> Point {
        let m = self.x.len();
        (self.x[i % m] - self.x[i - 1]) / (self.s[i] - self.s[i - 1])
    }

    /// Segment endpoints `(X_{i−1}, X_i)` for `i = 1..=m`.
    pub fn segment(&self, i: usize) -> (Point, Point) {
        (self.x[i - 1], self.x[i % self.x.len()])
    }

    /// `κ (X'_{i+½} − X'_{i−½})` for every marker.
    pub fn marker_forces(&self) -> Vec<Point> {
        let m = self.x.len();
        (0..m)
            .map(|i| {
                let ahead = self.segment_derivative(i + 1);
                let behind = self.segment_derivative(if i == 0 { m } else { i });
                (ahead - behind) * self.kappa
            })
            .collect()
    }

    /// `‖∂X/∂s‖²_{0,D} = Σ (s_i − s_{i−1}) |X'_{i−½}|²`.
    pub fn stretch_norm_squared(&self) -> f64 {
        (1..=self.x.len())
            .map(|i| (self.s[i] - self.s[i - 1]) * self.segment_derivative(i).norm_squared())
            .sum()
    }
}

/// `(F_h, v) = Σ_i κ (X'_{i+½} − X'_{i−½}) · v(X_i)`.
pub fn assemble_force(mesh: &StaggeredMesh, spaces: &Spaces, ib: &ImmersedBoundary) -> Result<ForceFunctional> {
    let nu = spaces.velocity.dim;
    let mut values = vec![0.0; 2 * nu];
    let marker_forces = ib.marker_forces();
    for (i, (x, f)) in ib.x.iter().zip(&marker_forces).enumerate() {
        let t = mesh
            .locate_point(x)
            .map_err(|_| SdgError::MarkerEscaped { index: i, x: x.x, y: x.y })?;
        let lam = mesh.elements[t].barycentric(x);
        for (a, l) in lam.iter().enumerate() {
            for &(g, c) in spaces.velocity.local(t, a) {
                values[g] += f.x * l * c;
                values[nu + g] += f.y * l * c;
            }
        }
    }
    Ok(ForceFunctional { values, marker_forces })
}

/// `X_i ← X_i + Δt u*(X_i)`.
pub fn advance_markers(mesh: &StaggeredMesh, ib: &ImmersedBoundary, v: &PostprocessedVelocity, dt: f64) -> Result<ImmersedBoundary> {
    let mut x = Vec::with_capacity(ib.x.len());
    for (i, p) in ib.x.iter().enumerate() {
        let vel = evaluate_postprocessed(mesh, v, p).map_err(|_| SdgError::MarkerEscaped { index: i, x: p.x, y: p.y })?;
        let q = p + vel * dt;
        if !(q.x > 0.0 && q.x < 1.0 && q.y > 0.0 && q.y < 1.0) {
            return Err(SdgError::MarkerEscaped { index: i, x: q.x, y: q.y });
        }
        x.push(q);
    }
    Ok(ImmersedBoundary { s: ib.s.clone(), x, kappa: ib.kappa })
}

/// Largest marker displacement `Δt |u*(X_i)|` of one update.
pub fn max_displacement(before: &ImmersedBoundary, after: &ImmersedBoundary) -> f64 {
    before.x.iter().zip(&after.x).map(|(a, b)| (b - a).norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Point, b: (f64, f64)) -> bool {
        (a.x - b.0).abs() < 1e-15 && (a.y - b.1).abs() < 1e-15
    }

    #[test]
    fn ellipse_static_markers() {
        let ib = init_curve(CurveKind::EllipseStatic, &CurveParams::default(), 4, 1.0).unwrap();
        let want = [(0.5, 0.3), (0.3, 0.4), (0.1, 0.3), (0.3, 0.2)];
        for (p, w) in ib.x.iter().zip(want) {
            assert!(close(*p, w), "{p:?} vs {w:?}");
        }
    }

    #[test]
    fn balloon_markers() {
        let ib = init_curve(CurveKind::Balloon, &CurveParams::default(), 4, 1.0).unwrap();
        let want = [(0.9, 0.5), (0.5, 0.9), (0.1, 0.5), (0.5, 0.1)];
        for (p, w) in ib.x.iter().zip(want) {
            assert!(close(*p, w), "{p:?} vs {w:?}");
        }
        assert!((ib.length() - 0.8 * PI).abs() < 1e-15);
    }

    #[test]
    fn stretched_rescaling_endpoints() {
        assert_eq!(stretched(0.0), 0.0);
        assert_eq!(stretched(1.0), 1.0);
    }

    #[test]
    fn l_shape_corners_are_markers() {
        let ib = init_curve(CurveKind::LShape, &CurveParams::default(), 32, 1.0).unwrap();
        for &(x, y) in &L_SHAPE {
            assert!(ib.x.iter().any(|p| (p.x - x).abs() < 1e-14 && (p.y - y).abs() < 1e-14));
        }
    }

    #[test]
    fn unknown_kind_and_bad_sizes() {
        assert!(matches!("circle".parse::<CurveKind>(), Err(SdgError::InvalidParameter(_))));
        assert_eq!("balloon".parse::<CurveKind>().unwrap(), CurveKind::Balloon);
        assert!(init_curve(CurveKind::Balloon, &CurveParams::default(), 2, 1.0).is_err());
        let big = CurveParams { balloon_radius: 0.5 };
        assert!(init_curve(CurveKind::Balloon, &big, 8, 1.0).is_err());
    }

    #[test]
    fn collinear_markers_feel_no_force() {
        let ib = ImmersedBoundary {
            s: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            x: vec![Point::new(0.2, 0.2), Point::new(0.3, 0.2), Point::new(0.4, 0.2), Point::new(0.3, 0.6)],
            kappa: 2.0,
        };
        assert!(ib.marker_forces()[1].norm() < 1e-14);
    }
}
