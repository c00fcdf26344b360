//! Compressed sparse row matrices on a mesh adjacency pattern and a
//! Jacobi-preconditioned conjugate gradient solver.

use crate::error::{Error, Result};
use crate::mesh::TriMesh;

#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Zero matrix whose pattern is vertex adjacency plus the diagonal.
    pub fn from_mesh_pattern(mesh: &TriMesh) -> Self {
        let n = mesh.num_vertices();
        let mut rows: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        for t in &mesh.triangles {
            for a in 0..3 {
                for b in 0..3 {
                    if a != b {
                        rows[t[a]].push(t[b]);
                    }
                }
            }
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for mut r in rows {
            r.sort_unstable();
            r.dedup();
            col_idx.extend(r);
            row_ptr.push(col_idx.len());
        }
        let nnz = col_idx.len();
        SparseMatrix {
            n,
            row_ptr,
            col_idx,
            values: vec![0.0; nnz],
        }
    }

    pub fn identity(n: usize) -> Self {
        SparseMatrix {
            n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Storage slot of entry `(i, j)`, if it is in the pattern.
    pub fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.col_idx[lo..hi].binary_search(&j).ok().map(|p| lo + p)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |s| self.values[s])
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn clear(&mut self) {
        self.values.iter_mut().for_each(|v| *v = 0.0);
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.col_idx[lo..hi].iter().copied().zip(self.values[lo..hi].iter().copied())
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_into(x, &mut y);
        y
    }

    fn mul_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.values[p] * x[self.col_idx[p]];
            }
            *yi = s;
        }
    }

    /// `self + s·other`; both must share a pattern.
    pub fn add_scaled(&self, other: &SparseMatrix, s: f64) -> Result<SparseMatrix> {
        if self.row_ptr != other.row_ptr || self.col_idx != other.col_idx {
            return Err(Error::ShapeMismatch("sparse patterns differ".into()));
        }
        let mut out = self.clone();
        for (v, o) in out.values.iter_mut().zip(&other.values) {
            *v += s * o;
        }
        Ok(out)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).map(|(_, v)| v).sum()).collect()
    }

    /// Largest `|a_ij - a_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for (i, row) in d.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] = v;
            }
        }
        d
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearSolve {
    pub iterations: usize,
    pub residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves an SPD system to relative residual `tol` starting from zero.
pub fn solve_linear(a: &SparseMatrix, rhs: &[f64], tol: f64, max_iters: usize) -> Result<Vec<f64>> {
    let mut x = vec![0.0; rhs.len()];
    solve_linear_from(a, rhs, &mut x, tol, max_iters)?;
    Ok(x)
}

/// Preconditioned conjugate gradients from the initial guess in `x`.
pub fn solve_linear_from(
    a: &SparseMatrix,
    rhs: &[f64],
    x: &mut [f64],
    tol: f64,
    max_iters: usize,
) -> Result<LinearSolve> {
    let n = a.dim();
    if rhs.len() != n || x.len() != n {
        return Err(Error::ShapeMismatch(format!("system of size {n} with rhs {} and guess {}", rhs.len(), x.len())));
    }
    let bnorm = dot(rhs, rhs).sqrt();
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(LinearSolve { iterations: 0, residual: 0.0 });
    }
    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let mut r = a.mul_vec(x);
    for (ri, bi) in r.iter_mut().zip(rhs) {
        *ri = bi - *ri;
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, b)| a * b).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut res = dot(&r, &r).sqrt() / bnorm;
    let mut it = 0;
    while res > tol {
        if it >= max_iters {
            return Err(Error::LinearSolver { iterations: it, residual: res });
        }
        a.mul_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::LinearSolver { iterations: it, residual: res });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        res = dot(&r, &r).sqrt() / bnorm;
        it += 1;
    }
    Ok(LinearSolve { iterations: it, residual: res })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::uniform_initial_mesh;

    #[test]
    fn identity_returns_rhs() {
        let b = vec![1.0, -2.0, 3.5];
        let x = solve_linear(&SparseMatrix::identity(3), &b, 1e-12, 10).unwrap();
        assert_eq!(x, b);
    }

    #[test]
    fn pattern_is_symmetric_adjacency() {
        let mesh = uniform_initial_mesh(4, 4, 10).unwrap();
        let m = SparseMatrix::from_mesh_pattern(&mesh);
        for (a, b) in mesh.edges() {
            assert!(m.slot(a, b).is_some() && m.slot(b, a).is_some());
        }
        assert_eq!(m.nnz(), mesh.num_vertices() + 2 * mesh.edges().len());
    }

    #[test]
    fn reports_failure() {
        let mut m = SparseMatrix::identity(2);
        m.values_mut()[1] = -1.0;
        assert!(solve_linear(&m, &[1.0, 1.0], 1e-10, 5).is_err());
    }
}
