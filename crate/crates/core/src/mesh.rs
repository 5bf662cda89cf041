//! Coarse triangulation of the unit square and its staggered subdivision.
//!
//! Every coarse triangle `S(ν)` is split into three sub-triangles by joining its
//! centroid `ν` to the three vertices. Sub-triangle `k` of coarse triangle `c`
//! has global index `3c + k` and vertices `(v_k, v_{k+1}, ν)` in counter-clockwise
//! order, so local edge 0 is always the coarse edge.
//!
//! Edge numbering: coarse edges (`F_u`) come first and keep their coarse index;
//! the subdivision edges (`F_p`) follow, edge `(v_j, ν)` of macro `c` having index
//! `n_coarse_edges + 3c + j`.

use std::collections::BTreeMap;
use std::io::Write;

use nalgebra::Vector2;

use crate::error::{Result, SdgError};

pub type Point = Vector2<f64>;

/// Barycentric containment tolerance for point location.
const LOCATE_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct CoarseEdge {
    /// Endpoint vertex indices, lower index first.
    pub vertices: [usize; 2],
    /// Incident coarse triangles (one on the boundary, two in the interior).
    pub triangles: Vec<usize>,
    pub boundary: bool,
}

#[derive(Debug, Clone)]
pub struct CoarseTriangulation {
    /// Divisions per side of the unit square (0 for triangulations not built on a grid).
    pub divisions: usize,
    pub vertices: Vec<Point>,
    /// Counter-clockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    pub edges: Vec<CoarseEdge>,
    /// `triangle_edges[t][k]` is the edge joining local vertices `k` and `k + 1`.
    pub triangle_edges: Vec<[usize; 3]>,
}

impl CoarseTriangulation {
    /// Builds the edge structure for an arbitrary conforming triangulation.
    pub fn from_triangles(vertices: Vec<Point>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        if triangles.is_empty() {
            return Err(SdgError::InvalidGeometry("triangulation has no triangles".into()));
        }
        let mut lookup: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut edges: Vec<CoarseEdge> = Vec::new();
        let mut triangle_edges = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= vertices.len()) {
                return Err(SdgError::InvalidGeometry(format!("triangle {t} references a missing vertex")));
            }
            let area = signed_area(&[vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]]);
            if area <= 0.0 {
                return Err(SdgError::InvalidGeometry(format!(
                    "triangle {t} is degenerate or clockwise (signed area {area:e})"
                )));
            }
            let mut te = [0usize; 3];
            for k in 0..3 {
                let a = tri[k];
                let b = tri[(k + 1) % 3];
                let key = (a.min(b), a.max(b));
                let id = *lookup.entry(key).or_insert_with(|| {
                    edges.push(CoarseEdge {
                        vertices: [key.0, key.1],
                        triangles: Vec::with_capacity(2),
                        boundary: false,
                    });
                    edges.len() - 1
                });
                edges[id].triangles.push(t);
                te[k] = id;
            }
            triangle_edges.push(te);
        }
        for (e, edge) in edges.iter_mut().enumerate() {
            match edge.triangles.len() {
                1 => edge.boundary = true,
                2 => edge.boundary = false,
                n => {
                    return Err(SdgError::InvalidGeometry(format!(
                        "edge {e} is shared by {n} triangles"
                    )))
                }
            }
        }
        Ok(Self { divisions: 0, vertices, triangles, edges, triangle_edges })
    }

    pub fn num_boundary_edges(&self) -> usize {
        self.edges.iter().filter(|e| e.boundary).count()
    }

    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }
}

/// Uniform `n x n` grid of squares on `[0,1]²`, each split along the
/// bottom-left to top-right diagonal.
pub fn build_unit_square_mesh(n: usize) -> Result<CoarseTriangulation> {
    if n == 0 {
        return Err(SdgError::InvalidParameter("N must be at least 1".into()));
    }
    let h = 1.0 / n as f64;
    let idx = |i: usize, j: usize| j * (n + 1) + i;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            // exact boundary coordinates
            let x = if i == n { 1.0 } else { i as f64 * h };
            let y = if j == n { 1.0 } else { j as f64 * h };
            vertices.push(Point::new(x, y));
        }
    }
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let v00 = idx(i, j);
            let v10 = idx(i + 1, j);
            let v11 = idx(i + 1, j + 1);
            let v01 = idx(i, j + 1);
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
        }
    }
    let mut mesh = CoarseTriangulation::from_triangles(vertices, triangles)?;
    mesh.divisions = n;
    Ok(mesh)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeKind {
    /// Edge of the coarse triangulation (`F_u`).
    Coarse,
    /// Edge created by the subdivision (`F_p`).
    Subdivision,
}

#[derive(Debug, Clone)]
pub struct Edge {
    pub kind: EdgeKind,
    pub endpoints: [Point; 2],
    /// Fixed unit normal: outward from `plus`.
    pub normal: Point,
    pub length: f64,
    /// Lower-indexed adjacent sub-triangle.
    pub plus: usize,
    /// Higher-indexed adjacent sub-triangle, `None` on the boundary.
    pub minus: Option<usize>,
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.minus.is_none()
    }

    /// Point at parameter `t ∈ [0,1]` from the first to the second endpoint.
    pub fn point_at(&self, t: f64) -> Point {
        self.endpoints[0] + (self.endpoints[1] - self.endpoints[0]) * t
    }

    /// Sign `n_e · n_τ` for an adjacent element `τ` (outward normal `n_τ`).
    pub fn orientation(&self, element: usize) -> f64 {
        if element == self.plus {
            1.0
        } else {
            -1.0
        }
    }
}

#[derive(Debug, Clone)]
pub struct Element {
    /// `(v_k, v_{k+1}, ν)`, counter-clockwise.
    pub vertices: [Point; 3],
    pub macro_index: usize,
    pub local_index: usize,
    /// Local edge `j` joins local vertices `j` and `j + 1`; local edge 0 is coarse.
    pub edges: [usize; 3],
    pub area: f64,
}

impl Element {
    pub fn barycentric(&self, x: &Point) -> [f64; 3] {
        barycentric(&self.vertices, x)
    }

    pub fn contains(&self, x: &Point) -> bool {
        self.barycentric(x).iter().all(|&l| l >= -LOCATE_TOL)
    }

    /// Gradients of the three barycentric coordinates (constant on the element).
    pub fn barycentric_gradients(&self) -> [Point; 3] {
        barycentric_gradients(&self.vertices)
    }

    pub fn map_reference(&self, xi: f64, eta: f64) -> Point {
        let [a, b, c] = self.vertices;
        a + (b - a) * xi + (c - a) * eta
    }

    pub fn diameter(&self) -> f64 {
        let [a, b, c] = self.vertices;
        (a - b).norm().max((b - c).norm()).max((c - a).norm())
    }
}

/// One element met by a segment, see [`StaggeredMesh::trace_segment`].
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentHit {
    pub element: usize,
    /// Segment parameter at which the element is entered.
    pub entry: f64,
    /// Edges of the element that intersect the open segment.
    pub crossed_edges: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct StaggeredMesh {
    pub coarse: CoarseTriangulation,
    /// Interior point `ν` (centroid) of every coarse triangle.
    pub centers: Vec<Point>,
    pub elements: Vec<Element>,
    pub edges: Vec<Edge>,
    pub num_coarse_edges: usize,
    grid: ElementGrid,
}

/// Subdivides every coarse triangle at its centroid.
pub fn staggered_subdivide(coarse: CoarseTriangulation) -> StaggeredMesh {
    let nt = coarse.triangles.len();
    let nfu = coarse.edges.len();
    let mut centers = Vec::with_capacity(nt);
    let mut elements = Vec::with_capacity(3 * nt);
    for c in 0..nt {
        let p = coarse.triangle_points(c);
        let nu = (p[0] + p[1] + p[2]) / 3.0;
        centers.push(nu);
        for k in 0..3 {
            let vertices = [p[k], p[(k + 1) % 3], nu];
            elements.push(Element {
                vertices,
                macro_index: c,
                local_index: k,
                edges: [
                    coarse.triangle_edges[c][k],
                    nfu + 3 * c + (k + 1) % 3,
                    nfu + 3 * c + k,
                ],
                area: signed_area(&vertices),
            });
        }
    }

    let mut edges = Vec::with_capacity(nfu + 3 * nt);
    for ce in &coarse.edges {
        let mut adj: Vec<usize> = ce
            .triangles
            .iter()
            .map(|&t| {
                let k = coarse.triangle_edges[t].iter().position(|&e| e == edges.len()).unwrap();
                3 * t + k
            })
            .collect();
        adj.sort_unstable();
        let endpoints = [coarse.vertices[ce.vertices[0]], coarse.vertices[ce.vertices[1]]];
        edges.push(make_edge(EdgeKind::Coarse, endpoints, &elements, adj[0], adj.get(1).copied()));
    }
    for c in 0..nt {
        for j in 0..3 {
            let a = 3 * c + (j + 2) % 3;
            let b = 3 * c + j;
            let endpoints = [coarse.vertices[coarse.triangles[c][j]], centers[c]];
            edges.push(make_edge(EdgeKind::Subdivision, endpoints, &elements, a.min(b), Some(a.max(b))));
        }
    }
    let grid = ElementGrid::new(&elements);
    StaggeredMesh { coarse, centers, elements, edges, num_coarse_edges: nfu, grid }
}

fn make_edge(kind: EdgeKind, endpoints: [Point; 2], elements: &[Element], plus: usize, minus: Option<usize>) -> Edge {
    let d = endpoints[1] - endpoints[0];
    let length = d.norm();
    let mut normal = Point::new(d.y, -d.x) / length;
    let el = &elements[plus];
    let centroid = (el.vertices[0] + el.vertices[1] + el.vertices[2]) / 3.0;
    if normal.dot(&(endpoints[0] - centroid)) < 0.0 {
        normal = -normal;
    }
    Edge { kind, endpoints, normal, length, plus, minus }
}

impl StaggeredMesh {
    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn num_macros(&self) -> usize {
        self.centers.len()
    }

    /// `S(ν)`: the three sub-triangles of a coarse triangle.
    pub fn macro_elements(&self, c: usize) -> [usize; 3] {
        [3 * c, 3 * c + 1, 3 * c + 2]
    }

    /// `R(e)`: the sub-triangles sharing a coarse edge.
    pub fn patch(&self, coarse_edge: usize) -> Vec<usize> {
        let e = &self.edges[coarse_edge];
        std::iter::once(e.plus).chain(e.minus).collect()
    }

    pub fn coarse_edges(&self) -> std::ops::Range<usize> {
        0..self.num_coarse_edges
    }

    pub fn subdivision_edges(&self) -> std::ops::Range<usize> {
        self.num_coarse_edges..self.edges.len()
    }

    /// Interior coarse edges (`F_u⁰`).
    pub fn interior_coarse_edges(&self) -> impl Iterator<Item = usize> + '_ {
        self.coarse_edges().filter(move |&e| !self.edges[e].is_boundary())
    }

    pub fn total_area(&self) -> f64 {
        self.elements.iter().map(|e| e.area).sum()
    }

    /// Smallest interior angle over all sub-triangles, in degrees.
    pub fn min_angle_degrees(&self) -> f64 {
        let mut min = f64::INFINITY;
        for el in &self.elements {
            for k in 0..3 {
                let a = el.vertices[k];
                let u = el.vertices[(k + 1) % 3] - a;
                let v = el.vertices[(k + 2) % 3] - a;
                let ang = (u.dot(&v) / (u.norm() * v.norm())).clamp(-1.0, 1.0).acos();
                min = min.min(ang.to_degrees());
            }
        }
        min
    }

    /// Element whose closure contains `x`, smallest index on ties.
    pub fn locate_point(&self, x: &Point) -> Result<usize> {
        self.grid
            .candidates(x)
            .iter()
            .copied()
            .find(|&t| self.elements[t].contains(x))
            .ok_or(SdgError::PointOutsideDomain { x: x.x, y: x.y })
    }

    /// Coarse triangle whose closure contains `x`, smallest index on ties.
    pub fn locate_macro(&self, x: &Point) -> Result<usize> {
        // the smallest containing sub-triangle belongs to the smallest containing macro
        self.locate_point(x).map(|t| self.elements[t].macro_index)
    }

    /// Elements met by the closed segment `pq`, ordered by entry parameter.
    pub fn trace_segment(&self, p: &Point, q: &Point) -> Result<Vec<SegmentHit>> {
        let first = self.locate_point(p)?;
        self.locate_point(q)?;
        let d = q - p;
        if d.norm() <= LOCATE_TOL {
            return Ok(vec![SegmentHit { element: first, entry: 0.0, crossed_edges: Vec::new() }]);
        }
        let mut hits = Vec::new();
        for t in self.grid.candidates_in_box(p, q) {
            let el = &self.elements[t];
            if let Some((t0, _)) = clip_segment(&el.vertices, p, q) {
                let crossed_edges = el
                    .edges
                    .iter()
                    .copied()
                    .filter(|&e| {
                        let edge = &self.edges[e];
                        segment_crosses_open(p, q, &edge.endpoints[0], &edge.endpoints[1])
                    })
                    .collect();
                hits.push(SegmentHit { element: t, entry: t0, crossed_edges });
            }
        }
        hits.sort_by(|a, b| a.entry.total_cmp(&b.entry).then(a.element.cmp(&b.element)));
        Ok(hits)
    }

    /// Diameter of the union of the elements met by segment `pq`.
    pub fn segment_patch_diameter(&self, p: &Point, q: &Point) -> Result<f64> {
        let hits = self.trace_segment(p, q)?;
        let pts: Vec<Point> = hits.iter().flat_map(|h| self.elements[h.element].vertices).collect();
        let mut diam: f64 = 0.0;
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                diam = diam.max((pts[i] - pts[j]).norm());
            }
        }
        Ok(diam)
    }

    /// Plain-text dump: one record per line, `#` header documents the fields.
    pub fn write_dump<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# staggered mesh dump")?;
        writeln!(out, "# vertex <index> <x> <y>")?;
        writeln!(out, "# center <macro> <x> <y>")?;
        writeln!(out, "# element <index> <macro> <local> <x0> <y0> <x1> <y1> <x2> <y2>")?;
        writeln!(out, "# edge <index> <coarse|subdivision> <plus> <minus|-1> <nx> <ny> <length>")?;
        for (i, v) in self.coarse.vertices.iter().enumerate() {
            writeln!(out, "vertex {i} {:.17e} {:.17e}", v.x, v.y)?;
        }
        for (c, v) in self.centers.iter().enumerate() {
            writeln!(out, "center {c} {:.17e} {:.17e}", v.x, v.y)?;
        }
        for (t, el) in self.elements.iter().enumerate() {
            let [a, b, c] = el.vertices;
            writeln!(
                out,
                "element {t} {} {} {:.17e} {:.17e} {:.17e} {:.17e} {:.17e} {:.17e}",
                el.macro_index, el.local_index, a.x, a.y, b.x, b.y, c.x, c.y
            )?;
        }
        for (e, edge) in self.edges.iter().enumerate() {
            let kind = match edge.kind {
                EdgeKind::Coarse => "coarse",
                EdgeKind::Subdivision => "subdivision",
            };
            let minus = edge.minus.map_or(-1, |m| m as i64);
            writeln!(
                out,
                "edge {e} {kind} {} {minus} {:.17e} {:.17e} {:.17e}",
                edge.plus, edge.normal.x, edge.normal.y, edge.length
            )?;
        }
        Ok(())
    }
}

/// Uniform background grid of buckets; each bucket lists (ascending) the elements
/// whose bounding box touches it.
#[derive(Debug, Clone)]
struct ElementGrid {
    lo: Point,
    cell: Point,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<usize>>,
}

impl ElementGrid {
    fn new(elements: &[Element]) -> Self {
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for el in elements {
            for v in &el.vertices {
                lo = lo.inf(v);
                hi = hi.sup(v);
            }
        }
        let n = ((elements.len() as f64 / 2.0).sqrt().ceil() as usize).max(1);
        let (nx, ny) = (n, n);
        let cell = Point::new((hi.x - lo.x) / nx as f64, (hi.y - lo.y) / ny as f64);
        let mut grid = Self { lo, cell, nx, ny, buckets: vec![Vec::new(); nx * ny] };
        for (t, el) in elements.iter().enumerate() {
            let mut blo = el.vertices[0];
            let mut bhi = el.vertices[0];
            for v in &el.vertices[1..] {
                blo = blo.inf(v);
                bhi = bhi.sup(v);
            }
            let (i0, j0) = grid.bucket_of(&blo.add_scalar(-1e-9));
            let (i1, j1) = grid.bucket_of(&bhi.add_scalar(1e-9));
            for j in j0..=j1 {
                for i in i0..=i1 {
                    grid.buckets[j * nx + i].push(t);
                }
            }
        }
        grid
    }

    fn bucket_of(&self, x: &Point) -> (usize, usize) {
        let fi = ((x.x - self.lo.x) / self.cell.x).floor();
        let fj = ((x.y - self.lo.y) / self.cell.y).floor();
        let i = if fi.is_finite() { fi.clamp(0.0, (self.nx - 1) as f64) as usize } else { 0 };
        let j = if fj.is_finite() { fj.clamp(0.0, (self.ny - 1) as f64) as usize } else { 0 };
        (i, j)
    }

    fn candidates(&self, x: &Point) -> &[usize] {
        let (i, j) = self.bucket_of(x);
        &self.buckets[j * self.nx + i]
    }

    fn candidates_in_box(&self, p: &Point, q: &Point) -> Vec<usize> {
        let (i0, j0) = self.bucket_of(&p.inf(q));
        let (i1, j1) = self.bucket_of(&p.sup(q));
        let mut out: Vec<usize> = (j0..=j1)
            .flat_map(|j| (i0..=i1).map(move |i| (i, j)))
            .flat_map(|(i, j)| self.buckets[j * self.nx + i].iter().copied())
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

pub fn signed_area(p: &[Point; 3]) -> f64 {
    0.5 * ((p[1].x - p[0].x) * (p[2].y - p[0].y) - (p[2].x - p[0].x) * (p[1].y - p[0].y))
}

pub fn barycentric(p: &[Point; 3], x: &Point) -> [f64; 3] {
    let area = signed_area(p);
    let l0 = signed_area(&[*x, p[1], p[2]]) / area;
    let l1 = signed_area(&[p[0], *x, p[2]]) / area;
    [l0, l1, 1.0 - l0 - l1]
}

pub fn barycentric_gradients(p: &[Point; 3]) -> [Point; 3] {
    let two_area = 2.0 * signed_area(p);
    let g = |a: &Point, b: &Point| Point::new(a.y - b.y, b.x - a.x) / two_area;
    [g(&p[1], &p[2]), g(&p[2], &p[0]), g(&p[0], &p[1])]
}

/// Parameter interval of segment `pq` inside the closed triangle, if any.
fn clip_segment(tri: &[Point; 3], p: &Point, q: &Point) -> Option<(f64, f64)> {
    let lp = barycentric(tri, p);
    let lq = barycentric(tri, q);
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for i in 0..3 {
        // λ(t) = lp + t (lq - lp) >= -tol
        let a = lp[i] + LOCATE_TOL;
        let slope = lq[i] - lp[i];
        if slope.abs() < 1e-300 {
            if a < 0.0 {
                return None;
            }
        } else {
            let t = -a / slope;
            if slope > 0.0 {
                t0 = t0.max(t);
            } else {
                t1 = t1.min(t);
            }
        }
    }
    (t0 <= t1).then_some((t0, t1))
}

fn cross(a: &Point, b: &Point) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Whether segment `ab` meets the open segment `pq` (endpoints `p`, `q` excluded).
fn segment_crosses_open(p: &Point, q: &Point, a: &Point, b: &Point) -> bool {
    let d = q - p;
    let e = b - a;
    let denom = cross(&d, &e);
    let scale = d.norm() * e.norm();
    if denom.abs() <= 1e-14 * scale {
        // parallel: count collinear overlap strictly inside pq
        if cross(&(a - p), &d).abs() > 1e-14 * d.norm() * (a - p).norm().max(1e-300) {
            return false;
        }
        let dd = d.dot(&d);
        let ta = (a - p).dot(&d) / dd;
        let tb = (b - p).dot(&d) / dd;
        let (lo, hi) = (ta.min(tb), ta.max(tb));
        return hi > 0.0 && lo < 1.0 && hi - lo > 0.0;
    }
    let t = cross(&(a - p), &e) / denom;
    let s = cross(&(a - p), &d) / denom;
    let eps = 1e-12;
    t > eps && t < 1.0 - eps && s >= -eps && s <= 1.0 + eps
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mesh(n: usize) -> StaggeredMesh {
        staggered_subdivide(build_unit_square_mesh(n).unwrap())
    }

    #[test]
    fn coarse_counts() {
        let m1 = build_unit_square_mesh(1).unwrap();
        assert_eq!((m1.triangles.len(), m1.vertices.len(), m1.edges.len()), (2, 4, 5));
        let m4 = build_unit_square_mesh(4).unwrap();
        assert_eq!((m4.triangles.len(), m4.vertices.len(), m4.edges.len()), (32, 25, 56));
        assert_eq!(m4.num_boundary_edges(), 16);
        assert_eq!(build_unit_square_mesh(32).unwrap().triangles.len(), 2048);
        assert!(matches!(build_unit_square_mesh(0), Err(SdgError::InvalidParameter(_))));
    }

    #[test]
    fn subdivision_counts() {
        let m = mesh(1);
        assert_eq!(m.num_elements(), 6);
        assert_eq!(m.centers.len(), 2);
        assert_eq!(m.subdivision_edges().len(), 6);
        let m = mesh(4);
        assert_eq!(m.num_elements(), 96);
        assert_eq!(m.subdivision_edges().len(), 96);
        assert_eq!(m.interior_coarse_edges().count(), 40);
    }

    #[test]
    fn centroid_splits_area_in_thirds() {
        let m = mesh(3);
        for c in 0..m.num_macros() {
            let coarse = signed_area(&m.coarse.triangle_points(c));
            for t in m.macro_elements(c) {
                assert!((m.elements[t].area - coarse / 3.0).abs() < 1e-15);
            }
        }
        assert!((m.total_area() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn each_element_has_one_coarse_and_two_subdivision_edges() {
        let m = mesh(4);
        for el in &m.elements {
            let coarse = el.edges.iter().filter(|&&e| m.edges[e].kind == EdgeKind::Coarse).count();
            assert_eq!(coarse, 1);
            assert!(el.area > 0.0);
        }
    }

    #[test]
    fn normals_point_out_of_plus_and_out_of_domain() {
        let m = mesh(4);
        for e in &m.edges {
            assert!((e.normal.norm() - 1.0).abs() < 1e-14);
            let mid = (e.endpoints[0] + e.endpoints[1]) / 2.0;
            let plus = &m.elements[e.plus];
            let c = (plus.vertices[0] + plus.vertices[1] + plus.vertices[2]) / 3.0;
            assert!(e.normal.dot(&(mid - c)) > 0.0);
            if let Some(minus) = e.minus {
                assert!(e.plus < minus);
            } else {
                let out = mid + e.normal * 1e-3;
                assert!(out.x < 0.0 || out.x > 1.0 || out.y < 0.0 || out.y > 1.0);
            }
        }
    }

    #[test]
    fn locate_centroid_tie_break() {
        let m = mesh(1);
        assert_eq!(m.locate_point(&m.centers[0]).unwrap(), 0);
        assert_eq!(m.locate_point(&m.centers[1]).unwrap(), 3);
        assert!(matches!(
            m.locate_point(&Point::new(1.5, 0.5)),
            Err(SdgError::PointOutsideDomain { .. })
        ));
    }

    #[test]
    fn trace_degenerate_segments() {
        let m = mesh(4);
        let p = Point::new(0.1, 0.2);
        let hits = m.trace_segment(&p, &p).unwrap();
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].element, m.locate_point(&p).unwrap());
        assert!(hits[0].crossed_edges.is_empty());

        let el = &m.elements[17];
        let a = el.map_reference(0.2, 0.2);
        let b = el.map_reference(0.3, 0.4);
        let hits = m.trace_segment(&a, &b).unwrap();
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].element, 17);
    }

    #[test]
    fn dump_has_one_line_per_record() {
        let m = mesh(2);
        let mut buf = Vec::new();
        m.write_dump(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let records = text.lines().filter(|l| !l.starts_with('#')).count();
        assert_eq!(records, m.coarse.vertices.len() + m.centers.len() + m.num_elements() + m.edges.len());
    }
}
