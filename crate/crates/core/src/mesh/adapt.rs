//! Metric-driven remeshing by local operations: edge split, edge collapse,
//! quality-improving edge flips and interior vertex smoothing.
//!
//! Edge lengths are measured in the endpoint-averaged metric after the metric
//! has been scaled so that a mesh with unit metric edge lengths has about the
//! requested number of elements.

use crate::error::{Error, Result};
use crate::mesh::locate::Locator;
use crate::mesh::{
    metric_edge_length, side_mask, sigma_h, triangle_alignment, MetricField, TriMesh,
};
use crate::raster::TensorField;
use crate::tensor::{midpoint, orient, Point, Sym2};

/// Anything that can report a metric tensor at a point of the image rectangle.
pub trait MetricSource: Sync {
    fn metric_at(&self, p: Point) -> Sym2;

    /// `∫ √det M dx` over the rectangle; drives the global normalization.
    fn sigma(&self, extent: (f64, f64)) -> f64 {
        let (ex, ey) = extent;
        let h = ((ex * ey) / 250_000.0).sqrt().max(0.5);
        let nx = (ex / h).ceil().max(1.0) as usize;
        let ny = (ey / h).ceil().max(1.0) as usize;
        let (hx, hy) = (ex / nx as f64, ey / ny as f64);
        let mut total = 0.0;
        for j in 0..ny {
            for i in 0..nx {
                let p = [(i as f64 + 0.5) * hx, (j as f64 + 0.5) * hy];
                total += self.metric_at(p).det().max(0.0).sqrt();
            }
        }
        total * hx * hy
    }
}

/// Metric given per pixel and sampled bilinearly.
pub struct RasterMetric {
    pub field: TensorField,
}

impl MetricSource for RasterMetric {
    fn metric_at(&self, p: Point) -> Sym2 {
        self.field.sample(p)
    }

    fn sigma(&self, _extent: (f64, f64)) -> f64 {
        // trapezoidal rule on the pixel lattice
        let (w, h) = (self.field.width, self.field.height);
        let mut total = 0.0;
        for j in 0..h {
            let wy = if j == 0 || j == h - 1 { 0.5 } else { 1.0 };
            for i in 0..w {
                let wx = if i == 0 || i == w - 1 { 0.5 } else { 1.0 };
                total += wx * wy * self.field.get(i, j).det().max(0.0).sqrt();
            }
        }
        total
    }
}

/// Per-vertex metric on a background mesh, interpolated linearly inside elements.
pub struct MeshMetric<'a> {
    mesh: &'a TriMesh,
    field: &'a MetricField,
    locator: Locator<'a>,
}

impl<'a> MeshMetric<'a> {
    pub fn new(mesh: &'a TriMesh, field: &'a MetricField) -> Result<Self> {
        if field.tensors.len() != mesh.num_vertices() {
            return Err(Error::ShapeMismatch(format!(
                "{} metric tensors for {} vertices",
                field.tensors.len(),
                mesh.num_vertices()
            )));
        }
        field.validate()?;
        Ok(MeshMetric {
            mesh,
            field,
            locator: Locator::new(mesh),
        })
    }
}

impl MetricSource for MeshMetric<'_> {
    fn metric_at(&self, p: Point) -> Sym2 {
        let (k, b, _) = self.locator.locate_or_nearest(p);
        let [i, j, l] = self.mesh.triangles[k];
        let t = &self.field.tensors;
        t[i] * b[0] + t[j] * b[1] + t[l] * b[2]
    }

    fn sigma(&self, _extent: (f64, f64)) -> f64 {
        sigma_h(self.mesh, self.field)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdaptOptions {
    /// Full split/collapse/flip/smooth cycles.
    pub passes: usize,
    pub max_split_sweeps: usize,
    pub max_collapse_sweeps: usize,
    pub max_flip_sweeps: usize,
    pub smooth_sweeps: usize,
    /// Multiplier on the nominal metric scale, e.g. carried over from a previous run.
    pub calibration: f64,
}

impl Default for AdaptOptions {
    fn default() -> Self {
        AdaptOptions {
            passes: 4,
            max_split_sweeps: 16,
            max_collapse_sweeps: 24,
            max_flip_sweeps: 8,
            smooth_sweeps: 3,
            calibration: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum AdaptStatus {
    Ok,
    /// Element count missed the ±25% band around the target; the mesh is still valid.
    ElementCountOutOfBand { count: usize, target: usize },
}

#[derive(Clone, Debug)]
pub struct AdaptReport {
    pub mesh: TriMesh,
    /// Normalized metric at the vertices of `mesh`.
    pub metric: MetricField,
    /// Factor applied to the source metric.
    pub scale: f64,
    /// `scale` relative to the nominal normalization.
    pub calibration: f64,
    pub target_elements: usize,
    pub status: AdaptStatus,
}

impl AdaptReport {
    pub fn in_band(&self) -> bool {
        self.status == AdaptStatus::Ok
    }
}

/// Adapts `mesh` to a per-vertex metric defined on it, aiming at `n_target` elements.
pub fn adapt_mesh(
    mesh: &TriMesh,
    metric: &MetricField,
    n_target: usize,
    passes: usize,
) -> Result<AdaptReport> {
    let source = MeshMetric::new(mesh, metric)?;
    adapt_mesh_with(
        mesh,
        &source,
        n_target,
        &AdaptOptions {
            passes,
            ..AdaptOptions::default()
        },
    )
}

/// Metric area of a unit-edge equilateral triangle.
const UNIT_TRIANGLE_AREA: f64 = 0.433_012_701_892_219_3;
const SQRT2: f64 = std::f64::consts::SQRT_2;
/// Collapses may not create triangles worse than this unless the ball was already worse.
const COLLAPSE_QUALITY_CAP: f64 = 2.5;
/// Length relaxation may worsen element shape up to this alignment ratio.
const RELAX_QUALITY_CAP: f64 = 1.4;

pub fn adapt_mesh_with(
    mesh: &TriMesh,
    source: &dyn MetricSource,
    n_target: usize,
    opts: &AdaptOptions,
) -> Result<AdaptReport> {
    if opts.passes == 0 {
        return Err(Error::InvalidParameter("adaptation needs at least one pass".into()));
    }
    if n_target == 0 {
        return Err(Error::InvalidParameter("element target must be positive".into()));
    }
    let extent = mesh.extent();
    let sigma = source.sigma(extent);
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::InvalidParameter(format!("metric integral {sigma} is not positive")));
    }
    if !(opts.calibration > 0.0 && opts.calibration.is_finite()) {
        return Err(Error::InvalidParameter("calibration must be positive".into()));
    }
    let nominal = n_target as f64 * UNIT_TRIANGLE_AREA / sigma;
    let mut w = Work::new(mesh, source, nominal * opts.calibration)?;
    for pass in 0..opts.passes {
        if pass > 0 {
            // element count scales linearly with the metric
            let ratio = n_target as f64 / w.live_triangles() as f64;
            if !(0.95..=1.05).contains(&ratio) {
                w.rescale(ratio.clamp(0.25, 4.0));
            }
        }
        for _ in 0..opts.max_split_sweeps {
            if w.split_sweep() == 0 {
                break;
            }
        }
        for _ in 0..opts.max_collapse_sweeps {
            if w.collapse_sweep() == 0 {
                break;
            }
        }
        w.flip_sweeps(opts.max_flip_sweeps);
        for _ in 0..opts.smooth_sweeps {
            w.relax_sweep();
            w.flip_sweeps(opts.max_flip_sweeps);
            w.smooth_sweep();
            w.flip_sweeps(opts.max_flip_sweeps);
        }
    }
    // settle lengths disturbed by the last smoothing
    w.split_sweep();
    w.collapse_sweep();
    w.flip_sweeps(opts.max_flip_sweeps);
    let scale = w.scale;
    let (mesh, metric) = w.finish();
    let count = mesh.num_triangles();
    let status = if (count as f64 - n_target as f64).abs() <= 0.25 * n_target as f64 {
        AdaptStatus::Ok
    } else {
        AdaptStatus::ElementCountOutOfBand {
            count,
            target: n_target,
        }
    };
    Ok(AdaptReport {
        mesh,
        metric: MetricField { tensors: metric },
        scale,
        calibration: scale / nominal,
        target_elements: n_target,
        status,
    })
}

struct Work<'s> {
    pts: Vec<Point>,
    met: Vec<Sym2>,
    tag: Vec<u8>,
    vdead: Vec<bool>,
    tris: Vec<[usize; 3]>,
    tdead: Vec<bool>,
    v2t: Vec<Vec<usize>>,
    source: &'s dyn MetricSource,
    scale: f64,
    extent: (f64, f64),
}

impl<'s> Work<'s> {
    fn new(mesh: &TriMesh, source: &'s dyn MetricSource, scale: f64) -> Result<Self> {
        let extent = mesh.extent();
        let mut met = Vec::with_capacity(mesh.num_vertices());
        for (v, &p) in mesh.vertices.iter().enumerate() {
            let m = source.metric_at(p) * scale;
            if !m.is_spd() {
                return Err(Error::MetricNotSpd { vertex: v });
            }
            met.push(m);
        }
        let mut w = Work {
            pts: mesh.vertices.clone(),
            met,
            tag: mesh.vertices.iter().map(|&p| side_mask(p, extent)).collect(),
            vdead: vec![false; mesh.num_vertices()],
            tris: Vec::with_capacity(mesh.num_triangles()),
            tdead: Vec::new(),
            v2t: vec![Vec::new(); mesh.num_vertices()],
            source,
            scale,
            extent,
        };
        for &t in &mesh.triangles {
            w.add_tri(t);
        }
        Ok(w)
    }

    fn live_triangles(&self) -> usize {
        self.tdead.iter().filter(|d| !**d).count()
    }

    fn rescale(&mut self, factor: f64) {
        self.scale *= factor;
        for m in &mut self.met {
            *m = *m * factor;
        }
    }

    fn metric(&self, p: Point) -> Sym2 {
        self.source.metric_at(p) * self.scale
    }

    fn len(&self, a: usize, b: usize) -> f64 {
        metric_edge_length(self.pts[a], self.pts[b], &self.met[a], &self.met[b])
    }

    fn quality_with(&self, t: [usize; 3], v: usize, p: Point, m: &Sym2) -> f64 {
        let pos = |i: usize| if i == v { p } else { self.pts[i] };
        let met = |i: usize| if i == v { *m } else { self.met[i] };
        let avg = (met(t[0]) + met(t[1]) + met(t[2])) * (1.0 / 3.0);
        triangle_alignment([pos(t[0]), pos(t[1]), pos(t[2])], &avg)
    }

    fn quality(&self, t: [usize; 3]) -> f64 {
        let avg = (self.met[t[0]] + self.met[t[1]] + self.met[t[2]]) * (1.0 / 3.0);
        triangle_alignment([self.pts[t[0]], self.pts[t[1]], self.pts[t[2]]], &avg)
    }

    fn add_tri(&mut self, t: [usize; 3]) -> usize {
        let k = self.tris.len();
        self.tris.push(t);
        self.tdead.push(false);
        for &v in &t {
            self.v2t[v].push(k);
        }
        k
    }

    fn kill_tri(&mut self, k: usize) {
        self.tdead[k] = true;
        for v in self.tris[k] {
            self.v2t[v].retain(|&x| x != k);
        }
    }

    fn add_vertex(&mut self, p: Point, tag: u8) -> usize {
        self.pts.push(p);
        let m = self.metric(p);
        self.met.push(m);
        self.tag.push(tag);
        self.vdead.push(false);
        self.v2t.push(Vec::new());
        self.pts.len() - 1
    }

    fn edge_tris(&self, a: usize, b: usize) -> Vec<usize> {
        self.v2t[a]
            .iter()
            .copied()
            .filter(|&k| self.tris[k].contains(&b))
            .collect()
    }

    fn neighbors(&self, v: usize) -> Vec<usize> {
        let mut n: Vec<usize> = self.v2t[v]
            .iter()
            .flat_map(|&k| self.tris[k])
            .filter(|&x| x != v)
            .collect();
        n.sort_unstable();
        n.dedup();
        n
    }

    fn live_edges(&self) -> Vec<(usize, usize)> {
        let mut e: Vec<(usize, usize)> = self
            .tris
            .iter()
            .zip(&self.tdead)
            .filter(|(_, &d)| !d)
            .flat_map(|(t, _)| {
                [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])].map(|(a, b)| (a.min(b), a.max(b)))
            })
            .collect();
        e.sort_unstable();
        e.dedup();
        e
    }

    fn snap(&self, mut p: Point, tag: u8) -> Point {
        if tag & 1 != 0 {
            p[0] = 0.0;
        }
        if tag & 2 != 0 {
            p[0] = self.extent.0;
        }
        if tag & 4 != 0 {
            p[1] = 0.0;
        }
        if tag & 8 != 0 {
            p[1] = self.extent.1;
        }
        p
    }

    // -- split ---------------------------------------------------------------

    fn split_sweep(&mut self) -> usize {
        let mut long: Vec<(f64, usize, usize)> = self
            .live_edges()
            .into_iter()
            .map(|(a, b)| (self.len(a, b), a, b))
            .filter(|e| e.0 > SQRT2)
            .collect();
        long.sort_by(|x, y| y.0.total_cmp(&x.0).then((x.1, x.2).cmp(&(y.1, y.2))));
        let mut count = 0;
        for (_, a, b) in long {
            if self.len(a, b) > SQRT2 && self.split(a, b) {
                count += 1;
            }
        }
        count
    }

    fn split(&mut self, a: usize, b: usize) -> bool {
        let ts = self.edge_tris(a, b);
        let tag = match ts.len() {
            1 => self.tag[a] & self.tag[b],
            2 => 0,
            _ => return false,
        };
        if ts.len() == 1 && tag == 0 {
            return false;
        }
        let p = self.snap(midpoint(self.pts[a], self.pts[b]), tag);
        let m = self.add_vertex(p, tag);
        for k in ts {
            let t = self.tris[k];
            let i = (0..3)
                .find(|&i| {
                    let (x, y) = (t[i], t[(i + 1) % 3]);
                    (x == a && y == b) || (x == b && y == a)
                })
                .expect("edge belongs to triangle");
            let (vi, vj, vk) = (t[i], t[(i + 1) % 3], t[(i + 2) % 3]);
            self.kill_tri(k);
            self.add_tri([vi, m, vk]);
            self.add_tri([m, vj, vk]);
        }
        true
    }

    // -- collapse ------------------------------------------------------------

    fn collapse_sweep(&mut self) -> usize {
        let mut short: Vec<(f64, usize, usize)> = self
            .live_edges()
            .into_iter()
            .map(|(a, b)| (self.len(a, b), a, b))
            .filter(|e| e.0 < 1.0 / SQRT2)
            .collect();
        short.sort_by(|x, y| x.0.total_cmp(&y.0).then((x.1, x.2).cmp(&(y.1, y.2))));
        let mut count = 0;
        for (_, a, b) in short {
            if self.vdead[a] || self.vdead[b] || self.len(a, b) >= 1.0 / SQRT2 {
                continue;
            }
            if self.try_collapse(b, a) || self.try_collapse(a, b) {
                count += 1;
            }
        }
        count
    }

    /// Removes vertex `r` by merging it into `k`.
    fn try_collapse(&mut self, r: usize, k: usize) -> bool {
        let tr = self.tag[r];
        if tr.count_ones() >= 2 {
            return false;
        }
        let ts = self.edge_tris(r, k);
        if ts.is_empty() {
            return false;
        }
        if tr != 0 && (ts.len() != 1 || self.tag[k] & tr != tr) {
            return false;
        }
        // link condition: shared neighbors are exactly the apexes of the shared triangles
        let mut opp: Vec<usize> = ts
            .iter()
            .map(|&t| {
                *self.tris[t]
                    .iter()
                    .find(|&&x| x != r && x != k)
                    .expect("triangle has a third vertex")
            })
            .collect();
        opp.sort_unstable();
        let nr = self.neighbors(r);
        let nk = self.neighbors(k);
        let common: Vec<usize> = nr.iter().copied().filter(|x| nk.binary_search(x).is_ok()).collect();
        if common != opp {
            return false;
        }
        for &n in &nr {
            if n != k && nk.binary_search(&n).is_err() && self.len(k, n) > SQRT2 {
                return false;
            }
        }
        let pk = self.pts[k];
        let mk = self.met[k];
        let mut old_worst: f64 = 1.0;
        let mut new_worst: f64 = 1.0;
        for &t in &self.v2t[r] {
            let tri = self.tris[t];
            old_worst = old_worst.max(self.quality(tri));
            if ts.contains(&t) {
                continue;
            }
            let q = self.quality_with(tri, r, pk, &mk);
            if !q.is_finite() {
                return false;
            }
            new_worst = new_worst.max(q);
        }
        if new_worst > old_worst.max(COLLAPSE_QUALITY_CAP) {
            return false;
        }
        for &t in &ts {
            self.kill_tri(t);
        }
        for t in self.v2t[r].clone() {
            let tri = self.tris[t].map(|x| if x == r { k } else { x });
            self.kill_tri(t);
            self.add_tri(tri);
        }
        self.vdead[r] = true;
        true
    }

    // -- flip ----------------------------------------------------------------

    fn flip_sweeps(&mut self, max_sweeps: usize) {
        for _ in 0..max_sweeps {
            let mut flips = 0;
            for (a, b) in self.live_edges() {
                if self.try_flip(a, b) {
                    flips += 1;
                }
            }
            if flips == 0 {
                break;
            }
        }
    }

    fn try_flip(&mut self, a: usize, b: usize) -> bool {
        let ts = self.edge_tris(a, b);
        if ts.len() != 2 {
            return false;
        }
        // orient so that t1 holds a → b
        let holds = |t: [usize; 3], x: usize, y: usize| (0..3).any(|i| t[i] == x && t[(i + 1) % 3] == y);
        let (t1, t2) = if holds(self.tris[ts[0]], a, b) {
            (ts[0], ts[1])
        } else {
            (ts[1], ts[0])
        };
        let third = |t: [usize; 3]| *t.iter().find(|&&x| x != a && x != b).unwrap();
        let c = third(self.tris[t1]);
        let d = third(self.tris[t2]);
        if c == d || self.v2t[c].iter().any(|&t| self.tris[t].contains(&d)) {
            return false;
        }
        let n1 = [a, d, c];
        let n2 = [d, b, c];
        let old = self.quality(self.tris[t1]).max(self.quality(self.tris[t2]));
        let new = self.quality(n1).max(self.quality(n2));
        if !(new.is_finite() && new < old * (1.0 - 1e-9)) {
            return false;
        }
        self.kill_tri(t1);
        self.kill_tri(t2);
        self.add_tri(n1);
        self.add_tri(n2);
        true
    }

    // -- smoothing -----------------------------------------------------------

    fn smooth_sweep(&mut self) {
        for v in 0..self.pts.len() {
            if self.vdead[v] || self.tag[v] != 0 || self.v2t[v].is_empty() {
                continue;
            }
            self.smooth_vertex(v);
        }
    }

    fn relax_sweep(&mut self) {
        for v in 0..self.pts.len() {
            if self.vdead[v] || self.tag[v] != 0 || self.v2t[v].is_empty() {
                continue;
            }
            self.relax_vertex(v);
        }
    }

    /// Moves `v` so its incident edges approach unit metric length without
    /// degrading element shape past the alignment bound.
    fn relax_vertex(&mut self, v: usize) {
        let p = self.pts[v];
        let nb = self.neighbors(v);
        let ring: Vec<[usize; 3]> = self.v2t[v].iter().map(|&t| self.tris[t]).collect();
        let energy = |w: &Self, pos: Point, m: &Sym2| -> f64 {
            nb.iter()
                .map(|&n| metric_edge_length(pos, w.pts[n], m, &w.met[n]).ln().powi(2))
                .sum()
        };
        let old_e = energy(self, p, &self.met[v]);
        let mut target = [0.0, 0.0];
        for &n in &nb {
            let l = self.len(v, n).max(1e-12);
            let q = self.pts[n];
            target[0] += q[0] + (p[0] - q[0]) / l;
            target[1] += q[1] + (p[1] - q[1]) / l;
        }
        target[0] /= nb.len() as f64;
        target[1] /= nb.len() as f64;
        let old_q = ring.iter().map(|&t| self.quality(t)).fold(1.0, f64::max);
        let q_cap = old_q.max(RELAX_QUALITY_CAP);
        for omega in [0.5, 0.25] {
            let cand = [p[0] + omega * (target[0] - p[0]), p[1] + omega * (target[1] - p[1])];
            if !(cand[0] > 0.0 && cand[0] < self.extent.0 && cand[1] > 0.0 && cand[1] < self.extent.1) {
                continue;
            }
            let mc = self.metric(cand);
            let new_q = ring
                .iter()
                .map(|&t| self.quality_with(t, v, cand, &mc))
                .fold(1.0, f64::max);
            if new_q.is_finite() && new_q <= q_cap && energy(self, cand, &mc) < old_e {
                self.pts[v] = cand;
                self.met[v] = mc;
                return;
            }
        }
    }

    /// Moves `v` toward the mean of the metric-equilateral apexes over its opposite edges.
    fn smooth_vertex(&mut self, v: usize) {
        let p = self.pts[v];
        let ring: Vec<[usize; 3]> = self.v2t[v].iter().map(|&t| self.tris[t]).collect();
        let mut target = [0.0, 0.0];
        for t in &ring {
            let i = t.iter().position(|&x| x == v).unwrap();
            let (a, b) = (t[(i + 1) % 3], t[(i + 2) % 3]);
            let m = (self.met[t[0]] + self.met[t[1]] + self.met[t[2]]) * (1.0 / 3.0);
            let q = equilateral_apex(self.pts[a], self.pts[b], &m);
            target[0] += q[0];
            target[1] += q[1];
        }
        target[0] /= ring.len() as f64;
        target[1] /= ring.len() as f64;
        let old = ring.iter().map(|&t| self.quality(t)).fold(1.0, f64::max);
        for omega in [0.5, 0.25] {
            let cand = [p[0] + omega * (target[0] - p[0]), p[1] + omega * (target[1] - p[1])];
            if !(cand[0] > 0.0 && cand[0] < self.extent.0 && cand[1] > 0.0 && cand[1] < self.extent.1) {
                continue;
            }
            let mc = self.metric(cand);
            let new = ring
                .iter()
                .map(|&t| self.quality_with(t, v, cand, &mc))
                .fold(1.0, f64::max);
            if new.is_finite() && new < old {
                self.pts[v] = cand;
                self.met[v] = mc;
                return;
            }
        }
    }

    fn finish(self) -> (TriMesh, Vec<Sym2>) {
        let mut remap = vec![usize::MAX; self.pts.len()];
        let mut pts = Vec::new();
        let mut met = Vec::new();
        for v in 0..self.pts.len() {
            if !self.vdead[v] && !self.v2t[v].is_empty() {
                remap[v] = pts.len();
                pts.push(self.pts[v]);
                met.push(self.met[v]);
            }
        }
        let tris = self
            .tris
            .iter()
            .zip(&self.tdead)
            .filter(|(_, &d)| !d)
            .map(|(t, _)| t.map(|x| remap[x]))
            .collect();
        (TriMesh::new(pts, tris, self.extent), met)
    }
}

/// Apex of the triangle that is equilateral in metric `m` on base `a → b`, to its left.
fn equilateral_apex(a: Point, b: Point, m: &Sym2) -> Point {
    // M = L Lᵀ; y = Lᵀ x maps the metric to the identity
    let l11 = m.xx.sqrt();
    let l21 = m.xy / l11;
    let l22 = (m.yy - l21 * l21).max(1e-300).sqrt();
    let e = [b[0] - a[0], b[1] - a[1]];
    let ey = [l11 * e[0] + l21 * e[1], l22 * e[1]];
    let h = 0.5 * 3f64.sqrt();
    let ny = [-ey[1] * h, ey[0] * h];
    // x = L⁻ᵀ y
    let nx = [ny[0] / l11 - l21 * ny[1] / (l11 * l22), ny[1] / l22];
    let mid = midpoint(a, b);
    debug_assert!(orient(a, b, [mid[0] + nx[0], mid[1] + nx[1]]) >= 0.0);
    [mid[0] + nx[0], mid[1] + nx[1]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{alignment_ratio, metric_edge_lengths, uniform_initial_mesh};

    struct Const(Sym2);
    impl MetricSource for Const {
        fn metric_at(&self, _: Point) -> Sym2 {
            self.0
        }
    }

    #[test]
    fn apex_is_equilateral_in_metric() {
        let m = Sym2::new(4.0, 1.0, 2.0);
        let (a, b) = ([0.3, 0.2], [1.4, 0.9]);
        let q = equilateral_apex(a, b, &m);
        let l = |p: Point, r: Point| m.quad([r[0] - p[0], r[1] - p[1]]).sqrt();
        assert!((l(a, b) - l(b, q)).abs() < 1e-12 && (l(a, b) - l(q, a)).abs() < 1e-12);
        assert!(orient(a, b, q) > 0.0);
    }

    #[test]
    fn identity_metric_gives_near_uniform_mesh() {
        let seed = uniform_initial_mesh(64, 64, 1500).unwrap();
        let src = Const(Sym2::identity());
        let r = adapt_mesh_with(&seed, &src, 800, &AdaptOptions::default()).unwrap();
        r.mesh.validate().unwrap();
        assert!(r.in_band(), "{:?}", r.status);
        let q: Vec<f64> = (0..r.mesh.num_triangles())
            .map(|k| alignment_ratio(&r.mesh, &r.metric, k).unwrap())
            .collect();
        let good = q.iter().filter(|&&x| x <= 1.3).count() as f64 / q.len() as f64;
        assert!(good >= 0.9, "{good}");
        let lens = metric_edge_lengths(&r.mesh, &r.metric);
        let ok = lens.iter().filter(|&&l| (1.0 / SQRT2..=SQRT2).contains(&l)).count() as f64;
        assert!(ok / lens.len() as f64 >= 0.9);
    }

    #[test]
    fn stripe_metric_elongates_elements() {
        // strong metric across a vertical stripe: elements thin in x, long in y
        struct Stripe;
        impl MetricSource for Stripe {
            fn metric_at(&self, p: Point) -> Sym2 {
                if (p[0] - 32.0).abs() < 6.0 {
                    Sym2::diag(100.0, 1.0)
                } else {
                    Sym2::identity()
                }
            }
        }
        let seed = uniform_initial_mesh(65, 65, 2000).unwrap();
        let r = adapt_mesh_with(&seed, &Stripe, 1500, &AdaptOptions::default()).unwrap();
        r.mesh.validate().unwrap();
        let mut ratios = Vec::new();
        for k in 0..r.mesh.num_triangles() {
            let c = r.mesh.centroid(k);
            if (c[0] - 32.0).abs() < 4.0 {
                let c3 = r.mesh.corners(k);
                let (x0, x1) = c3.iter().fold((f64::MAX, f64::MIN), |a, p| (a.0.min(p[0]), a.1.max(p[0])));
                let (y0, y1) = c3.iter().fold((f64::MAX, f64::MIN), |a, p| (a.0.min(p[1]), a.1.max(p[1])));
                ratios.push((y1 - y0) / (x1 - x0));
            }
        }
        let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
        assert!(mean >= 3.0, "mean anisotropy {mean}");
    }

    #[test]
    fn rejects_bad_inputs() {
        let seed = uniform_initial_mesh(8, 8, 16).unwrap();
        let bad = MetricField {
            tensors: vec![Sym2::diag(1.0, -1.0); seed.num_vertices()],
        };
        assert!(matches!(adapt_mesh(&seed, &bad, 10, 1), Err(Error::MetricNotSpd { .. })));
        let good = MetricField::uniform(seed.num_vertices(), Sym2::identity());
        assert!(adapt_mesh(&seed, &good, 10, 0).is_err());
    }

    #[test]
    fn deterministic() {
        let seed = uniform_initial_mesh(40, 30, 300).unwrap();
        let field = MetricField::new(
            seed.vertices
                .iter()
                .map(|p| Sym2::new(1.0 + 0.05 * p[0], 0.01 * p[1], 1.0 + 0.1 * (p[1] * 0.2).sin().abs()))
                .collect(),
        )
        .unwrap();
        let a = adapt_mesh(&seed, &field, 400, 2).unwrap();
        let b = adapt_mesh(&seed, &field, 400, 2).unwrap();
        assert_eq!(a.mesh, b.mesh);
    }
}
