use crate::mesh::TriMesh;
use crate::tensor::{orient, Point};

/// Bucket-grid point location over the triangles of a mesh.
pub struct Locator<'a> {
    mesh: &'a TriMesh,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<u32>>,
}

impl<'a> Locator<'a> {
    pub fn new(mesh: &'a TriMesh) -> Self {
        let (ex, ey) = mesh.extent();
        let n = mesh.num_triangles().max(1) as f64;
        let cell = ((ex * ey) / n).sqrt().max(1e-9);
        let nx = ((ex / cell).ceil() as usize).max(1);
        let ny = ((ey / cell).ceil() as usize).max(1);
        let mut buckets = vec![Vec::new(); nx * ny];
        for k in 0..mesh.num_triangles() {
            let c = mesh.corners(k);
            let (x0, x1) = min_max(c.iter().map(|p| p[0]));
            let (y0, y1) = min_max(c.iter().map(|p| p[1]));
            let (i0, i1) = (cell_index(x0, cell, nx), cell_index(x1, cell, nx));
            let (j0, j1) = (cell_index(y0, cell, ny), cell_index(y1, cell, ny));
            for j in j0..=j1 {
                for i in i0..=i1 {
                    buckets[j * nx + i].push(k as u32);
                }
            }
        }
        Locator {
            mesh,
            cell,
            nx,
            ny,
            buckets,
        }
    }

    /// Containing triangle and barycentric coordinates, if any.
    pub fn locate(&self, p: Point) -> Option<(usize, [f64; 3])> {
        let i = cell_index(p[0], self.cell, self.nx);
        let j = cell_index(p[1], self.cell, self.ny);
        let mut best: Option<(usize, [f64; 3], f64)> = None;
        for &k in &self.buckets[j * self.nx + i] {
            let k = k as usize;
            let b = barycentric(self.mesh.corners(k), p);
            let worst = b[0].min(b[1]).min(b[2]);
            if worst >= 0.0 {
                return Some((k, b));
            }
            if best.as_ref().is_none_or(|x| worst > x.2) {
                best = Some((k, b, worst));
            }
        }
        // accept points a rounding error outside an element
        best.filter(|x| x.2 > -1e-10).map(|(k, b, _)| (k, clamp_bary(b)))
    }

    /// Like [`Locator::locate`] but falls back to the nearest element; the flag reports an exact hit.
    pub fn locate_or_nearest(&self, p: Point) -> (usize, [f64; 3], bool) {
        if let Some((k, b)) = self.locate(p) {
            return (k, b, true);
        }
        let mut best = (0, [1.0, 0.0, 0.0], f64::INFINITY);
        for k in 0..self.mesh.num_triangles() {
            let b = clamp_bary(barycentric(self.mesh.corners(k), p));
            let c = self.mesh.corners(k);
            let q = [
                b[0] * c[0][0] + b[1] * c[1][0] + b[2] * c[2][0],
                b[0] * c[0][1] + b[1] * c[1][1] + b[2] * c[2][1],
            ];
            let d = (q[0] - p[0]).hypot(q[1] - p[1]);
            if d < best.2 {
                best = (k, b, d);
            }
        }
        (best.0, best.1, false)
    }
}

fn min_max(it: impl Iterator<Item = f64>) -> (f64, f64) {
    it.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

fn cell_index(x: f64, cell: f64, n: usize) -> usize {
    ((x / cell).floor().max(0.0) as usize).min(n - 1)
}

pub(crate) fn barycentric(c: [Point; 3], p: Point) -> [f64; 3] {
    let total = orient(c[0], c[1], c[2]);
    let b0 = orient(p, c[1], c[2]) / total;
    let b1 = orient(c[0], p, c[2]) / total;
    [b0, b1, 1.0 - b0 - b1]
}

fn clamp_bary(b: [f64; 3]) -> [f64; 3] {
    let c = [b[0].max(0.0), b[1].max(0.0), b[2].max(0.0)];
    let s = c[0] + c[1] + c[2];
    [c[0] / s, c[1] / s, c[2] / s]
}
