use proptest::prelude::*;
use sdg_ibm::mesh::{build_unit_square_mesh, staggered_subdivide, EdgeKind, Point, StaggeredMesh};
use sdg_ibm::SdgError;

fn mesh(n: usize) -> StaggeredMesh {
    staggered_subdivide(build_unit_square_mesh(n).unwrap())
}

/// Smallest-index element whose closure holds `x`, by exhaustive search.
fn brute_locate(m: &StaggeredMesh, x: &Point) -> Option<usize> {
    m.elements.iter().position(|e| e.barycentric(x).iter().all(|&l| l >= -1e-12))
}

#[test]
fn counts_and_areas() {
    for n in [1, 2, 5] {
        let m = mesh(n);
        assert_eq!(m.num_macros(), 2 * n * n);
        assert_eq!(m.num_elements(), 6 * n * n);
        assert_eq!(m.coarse.edges.len(), 3 * n * n + 2 * n);
        assert_eq!(m.subdivision_edges().len(), 3 * m.num_macros());
        assert_eq!(m.interior_coarse_edges().count(), 3 * n * n - 2 * n);
        assert!((m.total_area() - 1.0).abs() < 1e-14);
        for c in 0..m.num_macros() {
            let els = m.macro_elements(c);
            let a: f64 = els.iter().map(|&t| m.elements[t].area).sum();
            assert!(els.iter().all(|&t| (m.elements[t].area - a / 3.0).abs() < 1e-15));
        }
    }
}

#[test]
fn edge_normals_are_unit_and_point_out_of_plus() {
    let m = mesh(3);
    for e in &m.edges {
        assert!((e.normal.norm() - 1.0).abs() < 1e-14);
        let d = e.endpoints[1] - e.endpoints[0];
        assert!(e.normal.dot(&d).abs() < 1e-14);
        let centroid = m.elements[e.plus].vertices.iter().sum::<Point>() / 3.0;
        assert!((centroid - e.endpoints[0]).dot(&e.normal) < 0.0);
        assert_eq!(e.is_boundary(), e.kind == EdgeKind::Coarse && e.minus.is_none());
        if let Some(minus) = e.minus {
            assert!(e.plus < minus);
            assert_eq!(e.orientation(minus), -1.0);
        }
    }
    // local edge 0 of every sub-triangle is a coarse edge
    for el in &m.elements {
        assert_eq!(m.edges[el.edges[0]].kind, EdgeKind::Coarse);
        assert_eq!(m.edges[el.edges[1]].kind, EdgeKind::Subdivision);
        assert_eq!(m.edges[el.edges[2]].kind, EdgeKind::Subdivision);
    }
}

#[test]
fn points_outside_are_rejected() {
    let m = mesh(2);
    for p in [Point::new(-0.1, 0.5), Point::new(0.5, 1.2), Point::new(f64::NAN, 0.5)] {
        assert!(matches!(m.locate_point(&p), Err(SdgError::PointOutsideDomain { .. })));
    }
}

proptest! {
    #[test]
    fn locate_matches_exhaustive_search(n in 1usize..7, x in 0.0f64..=1.0, y in 0.0f64..=1.0) {
        let m = mesh(n);
        let p = Point::new(x, y);
        let found = m.locate_point(&p).unwrap();
        prop_assert_eq!(Some(found), brute_locate(&m, &p));
        prop_assert_eq!(m.locate_macro(&p).unwrap(), m.elements[found].macro_index);
    }

    #[test]
    fn locate_on_vertices_and_edges(n in 1usize..6, i in 0usize..1000, t in 0.0f64..=1.0) {
        let m = mesh(n);
        let e = &m.edges[i % m.edges.len()];
        let p = e.point_at(t);
        prop_assert_eq!(Some(m.locate_point(&p).unwrap()), brute_locate(&m, &p));
    }

    #[test]
    fn trace_covers_every_element_the_segment_crosses(
        n in 1usize..6,
        a in (0.0f64..=1.0, 0.0f64..=1.0),
        b in (0.0f64..=1.0, 0.0f64..=1.0),
    ) {
        let m = mesh(n);
        let (p, q) = (Point::new(a.0, a.1), Point::new(b.0, b.1));
        let hits = m.trace_segment(&p, &q).unwrap();
        prop_assert!(!hits.is_empty());
        prop_assert!(hits.windows(2).all(|w| w[0].entry <= w[1].entry));
        let listed: Vec<usize> = hits.iter().map(|h| h.element).collect();
        for k in 0..=400 {
            let x = p + (q - p) * (k as f64 / 400.0);
            for (t, el) in m.elements.iter().enumerate() {
                if el.barycentric(&x).iter().all(|&l| l > 1e-9) {
                    prop_assert!(listed.contains(&t), "element {} holds a segment point but is missing", t);
                }
            }
        }
        for h in &hits {
            let x = p + (q - p) * h.entry;
            prop_assert!(m.elements[h.element].barycentric(&x).iter().all(|&l| l >= -1e-9));
        }
    }
}
