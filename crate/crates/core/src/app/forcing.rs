//! Closed-form rotating flow and the body force that keeps it steady.

use std::f64::consts::PI;

use crate::mesh::Point;

/// `v = (−0.4 (1 − cos 2πx) sin 2πy, 0.4 sin 2πx (1 − cos 2πy))`.
pub fn rotating_field(x: &Point) -> Point {
    let (a, b) = (2.0 * PI * x.x, 2.0 * PI * x.y);
    Point::new(-0.4 * (1.0 - a.cos()) * b.sin(), 0.4 * a.sin() * (1.0 - b.cos()))
}

/// Jacobian `[[∂₁v₁, ∂₂v₁], [∂₁v₂, ∂₂v₂]]` of [`rotating_field`].
pub fn rotating_jacobian(x: &Point) -> [[f64; 2]; 2] {
    let (a, b) = (2.0 * PI * x.x, 2.0 * PI * x.y);
    let c = 0.8 * PI;
    [
        [-c * a.sin() * b.sin(), -c * (1.0 - a.cos()) * b.cos()],
        [c * a.cos() * (1.0 - b.cos()), c * a.sin() * b.sin()],
    ]
}

/// `Δv` of [`rotating_field`].
pub fn rotating_laplacian(x: &Point) -> Point {
    let (a, b) = (2.0 * PI * x.x, 2.0 * PI * x.y);
    let k = 0.4 * (2.0 * PI) * (2.0 * PI);
    Point::new(-k * b.sin() * (2.0 * a.cos() - 1.0), k * a.sin() * (2.0 * b.cos() - 1.0))
}

/// `f = ρ (v·∇) v − μ Δv`.
pub fn rotating_body_force(x: &Point, rho: f64, mu: f64) -> Point {
    let v = rotating_field(x);
    let j = rotating_jacobian(x);
    let conv = Point::new(j[0][0] * v.x + j[0][1] * v.y, j[1][0] * v.x + j[1][1] * v.y);
    conv * rho - rotating_laplacian(x) * mu
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_is_divergence_free_and_vanishes_on_boundary() {
        for &(x, y) in &[(0.1, 0.7), (0.33, 0.2), (0.9, 0.45)] {
            let j = rotating_jacobian(&Point::new(x, y));
            assert!((j[0][0] + j[1][1]).abs() < 1e-14);
        }
        for t in [0.0, 0.3, 0.8] {
            for p in [Point::new(t, 0.0), Point::new(0.0, t), Point::new(1.0, t), Point::new(t, 1.0)] {
                assert!(rotating_field(&p).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let p = Point::new(0.37, 0.61);
        let h = 1e-5;
        let j = rotating_jacobian(&p);
        let dx = (rotating_field(&(p + Point::new(h, 0.0))) - rotating_field(&(p - Point::new(h, 0.0)))) / (2.0 * h);
        let dy = (rotating_field(&(p + Point::new(0.0, h))) - rotating_field(&(p - Point::new(0.0, h)))) / (2.0 * h);
        assert!((dx.x - j[0][0]).abs() < 1e-8 && (dy.x - j[0][1]).abs() < 1e-8);
        assert!((dx.y - j[1][0]).abs() < 1e-8 && (dy.y - j[1][1]).abs() < 1e-8);
        let lap = (rotating_field(&(p + Point::new(h, 0.0)))
            + rotating_field(&(p - Point::new(h, 0.0)))
            + rotating_field(&(p + Point::new(0.0, h)))
            + rotating_field(&(p - Point::new(0.0, h)))
            - rotating_field(&p) * 4.0)
            / (h * h);
        assert!((lap - rotating_laplacian(&p)).norm() < 1e-3);
    }
}
