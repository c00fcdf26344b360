//! Conforming triangular meshes of the image rectangle, affine element maps,
//! M-uniformity quality measures and the metric-driven adaptation engine.

mod adapt;
mod export;
mod locate;

pub(crate) use locate::barycentric;

use std::collections::{BTreeMap, HashMap};

pub use adapt::{
    adapt_mesh, adapt_mesh_with, AdaptOptions, AdaptReport, AdaptStatus, MeshMetric,
    MetricSource, RasterMetric,
};
pub use export::{mesh_to_off, mesh_to_svg};
pub use locate::Locator;

use crate::error::{Error, Result};
use crate::tensor::{orient, Mat2, Point, Sym2};

/// Triangular mesh of `[0, extent.0] × [0, extent.1]` in pixel coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct TriMesh {
    pub vertices: Vec<Point>,
    /// Vertex index triples, counterclockwise.
    pub triangles: Vec<[usize; 3]>,
    pub boundary: Vec<bool>,
    extent: (f64, f64),
    fields: BTreeMap<String, Vec<f64>>,
}

const BOUNDARY_TOL: f64 = 1e-9;

impl TriMesh {
    /// Builds a mesh and derives boundary flags from the rectangle.
    pub fn new(vertices: Vec<Point>, triangles: Vec<[usize; 3]>, extent: (f64, f64)) -> Self {
        let boundary = vertices.iter().map(|&p| on_rectangle(p, extent)).collect();
        TriMesh {
            vertices,
            triangles,
            boundary,
            extent,
            fields: BTreeMap::new(),
        }
    }

    pub fn extent(&self) -> (f64, f64) {
        self.extent
    }

    pub fn domain_area(&self) -> f64 {
        self.extent.0 * self.extent.1
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn corners(&self, k: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[k];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn signed_area(&self, k: usize) -> f64 {
        let [a, b, c] = self.corners(k);
        0.5 * orient(a, b, c)
    }

    pub fn area(&self, k: usize) -> f64 {
        self.signed_area(k).abs()
    }

    pub fn total_area(&self) -> f64 {
        (0..self.num_triangles()).map(|k| self.signed_area(k)).sum()
    }

    pub fn centroid(&self, k: usize) -> Point {
        let [a, b, c] = self.corners(k);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    /// Constant gradients of the three barycentric basis functions of element `k`.
    pub fn basis_gradients(&self, k: usize) -> Result<[Point; 3]> {
        let [p0, p1, p2] = self.corners(k);
        let twice = orient(p0, p1, p2);
        if twice <= 0.0 {
            return Err(Error::DegenerateElement {
                element: k,
                area: 0.5 * twice,
            });
        }
        Ok([
            [(p1[1] - p2[1]) / twice, (p2[0] - p1[0]) / twice],
            [(p2[1] - p0[1]) / twice, (p0[0] - p2[0]) / twice],
            [(p0[1] - p1[1]) / twice, (p1[0] - p0[0]) / twice],
        ])
    }

    /// Unique undirected edges `(a, b)` with `a < b`, in first-seen order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut seen = HashMap::new();
        let mut out = Vec::new();
        for t in &self.triangles {
            for e in 0..3 {
                let (a, b) = (t[e], t[(e + 1) % 3]);
                let key = (a.min(b), a.max(b));
                if seen.insert(key, ()).is_none() {
                    out.push(key);
                }
            }
        }
        out
    }

    /// Sorted neighbor lists per vertex.
    pub fn vertex_neighbors(&self) -> Vec<Vec<usize>> {
        let mut nb = vec![Vec::new(); self.num_vertices()];
        for &(a, b) in &self.edges() {
            nb[a].push(b);
            nb[b].push(a);
        }
        for l in &mut nb {
            l.sort_unstable();
        }
        nb
    }

    pub fn set_field(&mut self, name: &str, values: Vec<f64>) -> Result<()> {
        if values.len() != self.num_vertices() {
            return Err(Error::ShapeMismatch(format!(
                "field '{name}' has {} values for {} vertices",
                values.len(),
                self.num_vertices()
            )));
        }
        self.fields.insert(name.to_string(), values);
        Ok(())
    }

    pub fn field(&self, name: &str) -> Option<&[f64]> {
        self.fields.get(name).map(Vec::as_slice)
    }

    /// Linear interpolation of nodal `values` at barycentric coordinates in element `k`.
    pub fn interpolate(&self, values: &[f64], k: usize, bary: [f64; 3]) -> f64 {
        let [a, b, c] = self.triangles[k];
        bary[0] * values[a] + bary[1] * values[b] + bary[2] * values[c]
    }

    /// Checks orientation, conformity, coverage of the rectangle and boundary flags.
    pub fn validate(&self) -> Result<()> {
        for k in 0..self.num_triangles() {
            let [a, b, c] = self.triangles[k];
            let n = self.num_vertices();
            if a >= n || b >= n || c >= n || a == b || b == c || a == c {
                return Err(Error::InvalidParameter(format!("triangle {k} has bad indices")));
            }
            let area = self.signed_area(k);
            if area <= 0.0 {
                return Err(Error::DegenerateElement { element: k, area });
            }
        }
        let mut edge_count: HashMap<(usize, usize), usize> = HashMap::new();
        for t in &self.triangles {
            for e in 0..3 {
                let (a, b) = (t[e], t[(e + 1) % 3]);
                *edge_count.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        for (&(a, b), &c) in &edge_count {
            match c {
                2 => {}
                1 => {
                    let (pa, pb) = (self.vertices[a], self.vertices[b]);
                    let same_side = side_mask(pa, self.extent) & side_mask(pb, self.extent);
                    if same_side == 0 {
                        return Err(Error::InvalidParameter(format!(
                            "open edge ({a}, {b}) is not on the image boundary"
                        )));
                    }
                }
                _ => {
                    return Err(Error::InvalidParameter(format!(
                        "edge ({a}, {b}) shared by {c} triangles"
                    )))
                }
            }
        }
        let rel = (self.total_area() - self.domain_area()).abs() / self.domain_area();
        if rel > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "mesh area deviates from the rectangle by {rel:e}"
            )));
        }
        for (v, &p) in self.vertices.iter().enumerate() {
            if self.boundary[v] != on_rectangle(p, self.extent) {
                return Err(Error::InvalidParameter(format!("wrong boundary flag at vertex {v}")));
            }
        }
        Ok(())
    }
}

/// Bitmask of rectangle sides a point lies on: 1 left, 2 right, 4 bottom, 8 top.
pub(crate) fn side_mask(p: Point, extent: (f64, f64)) -> u8 {
    let tol = BOUNDARY_TOL * extent.0.max(extent.1).max(1.0);
    let mut m = 0;
    if p[0].abs() <= tol {
        m |= 1;
    }
    if (p[0] - extent.0).abs() <= tol {
        m |= 2;
    }
    if p[1].abs() <= tol {
        m |= 4;
    }
    if (p[1] - extent.1).abs() <= tol {
        m |= 8;
    }
    m
}

fn on_rectangle(p: Point, extent: (f64, f64)) -> bool {
    side_mask(p, extent) != 0
}

/// Structured right-triangle mesh of a `width × height` image with about `n_target` vertices.
pub fn uniform_initial_mesh(width: usize, height: usize, n_target: usize) -> Result<TriMesh> {
    if n_target < 4 {
        return Err(Error::InvalidParameter(format!("n_target = {n_target} < 4")));
    }
    if width < 2 || height < 2 {
        return Err(Error::DegenerateImage { width, height });
    }
    let (ex, ey) = ((width - 1) as f64, (height - 1) as f64);
    let nx = ((n_target as f64 * ex / ey).sqrt().round() as usize).max(2);
    let ny = ((n_target as f64 / nx as f64).round() as usize).max(2);
    Ok(structured_mesh(nx, ny, (ex, ey)))
}

/// `nx × ny` lattice over `[0, ex] × [0, ey]`; `nx = width, ny = height` puts a vertex on every pixel.
pub fn structured_mesh(nx: usize, ny: usize, extent: (f64, f64)) -> TriMesh {
    let (ex, ey) = extent;
    let mut vertices = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        // exact endpoints keep boundary vertices on the rectangle
        let y = if j == ny - 1 { ey } else { ey * j as f64 / (ny - 1) as f64 };
        for i in 0..nx {
            let x = if i == nx - 1 { ex } else { ex * i as f64 / (nx - 1) as f64 };
            vertices.push([x, y]);
        }
    }
    let id = |i: usize, j: usize| j * nx + i;
    let mut triangles = Vec::with_capacity(2 * (nx - 1) * (ny - 1));
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            // alternate diagonals so the pattern has no preferred direction
            if (i + j) % 2 == 0 {
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            } else {
                triangles.push([a, b, d]);
                triangles.push([b, c, d]);
            }
        }
    }
    TriMesh::new(vertices, triangles, (ex, ey))
}

// ---------------------------------------------------------------------------
// Reference element and quality measures

/// Side length of the equilateral triangle with unit area.
pub fn reference_side() -> f64 {
    (4.0 / 3f64.sqrt()).sqrt()
}

/// Vertices of the unit-area equilateral reference triangle.
pub fn reference_vertices() -> [Point; 3] {
    let s = reference_side();
    [[0.0, 0.0], [s, 0.0], [0.5 * s, 0.5 * 3f64.sqrt() * s]]
}

/// `(RᵀR)⁻¹` for the reference edge matrix `R`.
const REF_GRAM_INV: Sym2 = Sym2::new(
    0.577_350_269_189_625_8,
    -0.288_675_134_594_812_9,
    0.577_350_269_189_625_8,
);

/// Affine map `x = jacobian · ξ + translation` from the reference element onto a mesh element.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AffineMap {
    pub jacobian: Mat2,
    pub translation: Point,
}

impl AffineMap {
    pub fn apply(&self, xi: Point) -> Point {
        let v = self.jacobian.apply(xi);
        [v[0] + self.translation[0], v[1] + self.translation[1]]
    }
}

pub fn element_affine_map(mesh: &TriMesh, k: usize) -> Result<AffineMap> {
    let [p0, p1, p2] = mesh.corners(k);
    let area = 0.5 * orient(p0, p1, p2);
    if area <= 0.0 {
        return Err(Error::DegenerateElement { element: k, area });
    }
    let [r0, r1, r2] = reference_vertices();
    let e = Mat2::from_columns([p1[0] - p0[0], p1[1] - p0[1]], [p2[0] - p0[0], p2[1] - p0[1]]);
    let r = Mat2::from_columns([r1[0] - r0[0], r1[1] - r0[1]], [r2[0] - r0[0], r2[1] - r0[1]]);
    let jacobian = e.mul(&r.inverse().expect("reference element is non-degenerate"));
    Ok(AffineMap {
        jacobian,
        translation: p0,
    })
}

/// Symmetric positive definite tensor per mesh vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricField {
    pub tensors: Vec<Sym2>,
}

impl MetricField {
    pub fn new(tensors: Vec<Sym2>) -> Result<Self> {
        let field = MetricField { tensors };
        field.validate()?;
        Ok(field)
    }

    pub fn uniform(n: usize, m: Sym2) -> Self {
        MetricField {
            tensors: vec![m; n],
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.tensors.iter().position(|m| !m.is_spd()) {
            Some(vertex) => Err(Error::MetricNotSpd { vertex }),
            None => Ok(()),
        }
    }

    pub fn scaled(&self, s: f64) -> MetricField {
        MetricField {
            tensors: self.tensors.iter().map(|&m| m * s).collect(),
        }
    }
}

/// Element metric as the average of the three vertex tensors.
pub fn element_metric(metric: &MetricField, mesh: &TriMesh, k: usize) -> Sym2 {
    let [a, b, c] = mesh.triangles[k];
    (metric.tensors[a] + metric.tensors[b] + metric.tensors[c]) * (1.0 / 3.0)
}

/// `Σ_K |K| √det(M_K)`.
pub fn sigma_h(mesh: &TriMesh, metric: &MetricField) -> f64 {
    (0..mesh.num_triangles())
        .map(|k| mesh.area(k) * element_metric(metric, mesh, k).det().sqrt())
        .sum()
}

/// `N |K| √det(M_K) / σ_h`; equal to one on an equidistributed mesh.
pub fn equidistribution_ratio(mesh: &TriMesh, metric: &MetricField, k: usize) -> f64 {
    let sigma = sigma_h(mesh, metric);
    mesh.num_triangles() as f64 * mesh.area(k) * element_metric(metric, mesh, k).det().sqrt()
        / sigma
}

/// Equidistribution ratios of every element with `σ_h` computed once.
pub fn equidistribution_ratios(mesh: &TriMesh, metric: &MetricField) -> Vec<f64> {
    let terms: Vec<f64> = (0..mesh.num_triangles())
        .map(|k| mesh.area(k) * element_metric(metric, mesh, k).det().sqrt())
        .collect();
    let sigma: f64 = terms.iter().sum();
    let n = terms.len() as f64;
    terms.iter().map(|t| n * t / sigma).collect()
}

/// `½ tr(JᵀMJ) / det(JᵀMJ)^½` for the element Jacobian `J`; at least one.
pub fn alignment_ratio(mesh: &TriMesh, metric: &MetricField, k: usize) -> Result<f64> {
    let map = element_affine_map(mesh, k)?;
    let g = map.jacobian.congruence(&element_metric(metric, mesh, k));
    Ok(0.5 * g.trace() / g.det().sqrt())
}

/// Alignment ratio of a triangle with corners `p` under metric `m`, without forming the map.
/// Returns infinity for inverted or degenerate triangles.
pub(crate) fn triangle_alignment(p: [Point; 3], m: &Sym2) -> f64 {
    let twice = orient(p[0], p[1], p[2]);
    if twice <= 0.0 {
        return f64::INFINITY;
    }
    let e1 = [p[1][0] - p[0][0], p[1][1] - p[0][1]];
    let e2 = [p[2][0] - p[0][0], p[2][1] - p[0][1]];
    let g = &REF_GRAM_INV;
    // J Jᵀ = E G Eᵀ
    let jj = Sym2::new(
        g.xx * e1[0] * e1[0] + 2.0 * g.xy * e1[0] * e2[0] + g.yy * e2[0] * e2[0],
        g.xx * e1[0] * e1[1] + g.xy * (e1[0] * e2[1] + e2[0] * e1[1]) + g.yy * e2[0] * e2[1],
        g.xx * e1[1] * e1[1] + 2.0 * g.xy * e1[1] * e2[1] + g.yy * e2[1] * e2[1],
    );
    let tr = m.xx * jj.xx + 2.0 * m.xy * jj.xy + m.yy * jj.yy;
    0.5 * tr / (m.det().sqrt() * 0.5 * twice)
}

/// Length of edge `a → b` in the endpoint-averaged metric.
pub fn metric_edge_length(a: Point, b: Point, ma: &Sym2, mb: &Sym2) -> f64 {
    let e = [b[0] - a[0], b[1] - a[1]];
    ((*ma + *mb) * 0.5).quad(e).sqrt()
}

pub fn metric_edge_lengths(mesh: &TriMesh, metric: &MetricField) -> Vec<f64> {
    mesh.edges()
        .iter()
        .map(|&(a, b)| {
            metric_edge_length(
                mesh.vertices[a],
                mesh.vertices[b],
                &metric.tensors[a],
                &metric.tensors[b],
            )
        })
        .collect()
}
