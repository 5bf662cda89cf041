//! Quadrature rules on the reference triangle and the unit interval.

use std::sync::OnceLock;

/// Four-point Gauss–Legendre rule on `[-1, 1]`: `(node, weight)`.
fn gauss_legendre_4() -> [(f64, f64); 4] {
    let a = (3.0 / 7.0 - 2.0 / 7.0 * (6.0f64 / 5.0).sqrt()).sqrt();
    let b = (3.0 / 7.0 + 2.0 / 7.0 * (6.0f64 / 5.0).sqrt()).sqrt();
    let wa = (18.0 + 30.0f64.sqrt()) / 36.0;
    let wb = (18.0 - 30.0f64.sqrt()) / 36.0;
    [(-b, wb), (-a, wa), (a, wa), (b, wb)]
}

/// Gauss–Legendre on `[0, 1]`, exact for polynomials of degree 7.
pub fn edge_rule() -> [(f64, f64); 4] {
    gauss_legendre_4().map(|(x, w)| (0.5 * (x + 1.0), 0.5 * w))
}

/// Collapsed-tensor rule on the reference triangle `{ξ, η ≥ 0, ξ + η ≤ 1}`,
/// exact for total degree 6. Entries are `(ξ, η, weight)`; weights sum to 1/2.
pub fn triangle_rule() -> Vec<(f64, f64, f64)> {
    let line = edge_rule();
    let mut out = Vec::with_capacity(16);
    for &(u, wu) in &line {
        for &(v, wv) in &line {
            out.push((u * (1.0 - v), v, wu * wv * (1.0 - v)));
        }
    }
    out
}

/// A triangle quadrature point inside sub-triangle `k` of a centroid-split
/// macro-element, in both barycentric frames.
#[derive(Debug, Clone, Copy)]
pub struct MacroPoint {
    /// Reference weight (weights of one sub-triangle sum to 1/2).
    pub weight: f64,
    /// Barycentric coordinates in the sub-triangle `(v_k, v_{k+1}, ν)`.
    pub sub: [f64; 3],
    /// Barycentric coordinates in the coarse triangle `(v_0, v_1, v_2)`.
    pub coarse: [f64; 3],
}

/// Quadrature points of the three sub-triangles, identical for every macro-element.
pub fn macro_points() -> &'static [Vec<MacroPoint>; 3] {
    static TABLE: OnceLock<[Vec<MacroPoint>; 3]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let rule = triangle_rule();
        std::array::from_fn(|k| {
            rule.iter()
                .map(|&(xi, eta, w)| {
                    let sub = [1.0 - xi - eta, xi, eta];
                    let mut coarse = [eta / 3.0; 3];
                    coarse[k] += sub[0];
                    coarse[(k + 1) % 3] += sub[1];
                    MacroPoint { weight: w, sub, coarse }
                })
                .collect()
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    #[test]
    fn triangle_rule_is_exact_to_degree_six() {
        let rule = triangle_rule();
        for p in 0..=6u32 {
            for q in 0..=(6 - p) {
                let exact = factorial(p) * factorial(q) / factorial(p + q + 2);
                let approx: f64 = rule.iter().map(|&(x, y, w)| w * x.powi(p as i32) * y.powi(q as i32)).sum();
                assert!((approx - exact).abs() < 1e-15, "x^{p} y^{q}");
            }
        }
    }

    #[test]
    fn edge_rule_is_exact_to_degree_seven() {
        for p in 0..=7 {
            let approx: f64 = edge_rule().iter().map(|&(x, w)| w * x.powi(p)).sum();
            assert!((approx - 1.0 / (p as f64 + 1.0)).abs() < 1e-15);
        }
    }
}
