//! Linear-element assembly of the mass matrix, the level-set stiffness matrix
//! and the load vector.

use rayon::prelude::*;

use super::sparse::SparseMatrix;
use crate::chanvese::{delta_eps, diffusion_coeff, force_term, midpoint_values, LevelSet, ModelParams, RegionConstants};
use crate::error::{Error, Result};
use crate::mesh::TriMesh;
use crate::tensor::Point;

/// Basis values of the three local functions at the edge midpoints (0-1, 1-2, 2-0).
const MIDPOINT_BASIS: [[f64; 3]; 3] = [[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]];

/// Per-mesh geometry cached across assemblies.
#[derive(Clone, Debug)]
pub struct FemSpace<'m> {
    mesh: &'m TriMesh,
    areas: Vec<f64>,
    grads: Vec<[Point; 3]>,
    slots: Vec<[usize; 9]>,
    pattern: SparseMatrix,
}

impl<'m> FemSpace<'m> {
    pub fn new(mesh: &'m TriMesh) -> Result<Self> {
        let mut areas = Vec::with_capacity(mesh.num_triangles());
        let mut grads = Vec::with_capacity(mesh.num_triangles());
        for k in 0..mesh.num_triangles() {
            let a = mesh.signed_area(k);
            if !(a > 0.0) {
                return Err(Error::DegenerateElement { element: k, area: a });
            }
            areas.push(a);
            grads.push(mesh.basis_gradients(k)?);
        }
        let pattern = SparseMatrix::from_mesh_pattern(mesh);
        let slots = mesh
            .triangles
            .iter()
            .map(|t| {
                let mut s = [0; 9];
                for a in 0..3 {
                    for b in 0..3 {
                        s[3 * a + b] = pattern.slot(t[a], t[b]).expect("pattern covers element");
                    }
                }
                s
            })
            .collect();
        Ok(FemSpace { mesh, areas, grads, slots, pattern })
    }

    pub fn mesh(&self) -> &TriMesh {
        self.mesh
    }

    fn scatter(&self, local: &[[f64; 9]]) -> SparseMatrix {
        let mut m = self.pattern.clone();
        let v = m.values_mut();
        for (s, l) in self.slots.iter().zip(local) {
            for q in 0..9 {
                v[s[q]] += l[q];
            }
        }
        m
    }

    pub fn mass(&self) -> SparseMatrix {
        let local: Vec<[f64; 9]> = self
            .areas
            .iter()
            .map(|&a| {
                let mut l = [a / 12.0; 9];
                for d in 0..3 {
                    l[4 * d] = a / 6.0;
                }
                l
            })
            .collect();
        self.scatter(&local)
    }

    fn phi_gradient(&self, k: usize, phi: &[f64]) -> Point {
        let t = self.mesh.triangles[k];
        let g = &self.grads[k];
        let mut out = [0.0; 2];
        for a in 0..3 {
            out[0] += g[a][0] * phi[t[a]];
            out[1] += g[a][1] * phi[t[a]];
        }
        out
    }

    pub fn stiffness(&self, phi: &LevelSet, p: &ModelParams) -> Result<SparseMatrix> {
        phi.check_mesh(self.mesh)?;
        let local: Vec<[f64; 9]> = (0..self.areas.len())
            .into_par_iter()
            .map(|k| {
                let t = self.mesh.triangles[k];
                let pq = midpoint_values(&phi.values, t);
                let int_delta: f64 = pq.iter().map(|&v| delta_eps(v, p.epsilon)).sum::<f64>() * self.areas[k] / 3.0;
                let coef = int_delta * diffusion_coeff(self.phi_gradient(k, &phi.values), p.mu);
                let g = &self.grads[k];
                let mut l = [0.0; 9];
                for a in 0..3 {
                    for b in 0..3 {
                        l[3 * a + b] = coef * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
                    }
                }
                l
            })
            .collect();
        Ok(self.scatter(&local))
    }

    pub fn rhs(&self, phi: &LevelSet, f: &[f64], c: RegionConstants, p: &ModelParams) -> Result<Vec<f64>> {
        phi.check_mesh(self.mesh)?;
        if f.len() != self.mesh.num_vertices() {
            return Err(Error::ShapeMismatch(format!(
                "intensity field has {} values for {} vertices",
                f.len(),
                self.mesh.num_vertices()
            )));
        }
        let local: Vec<[f64; 3]> = (0..self.areas.len())
            .into_par_iter()
            .map(|k| {
                let t = self.mesh.triangles[k];
                let pq = midpoint_values(&phi.values, t);
                let fq = midpoint_values(f, t);
                let w = self.areas[k] / 3.0;
                let mut l = [0.0; 3];
                for q in 0..3 {
                    let s = w * delta_eps(pq[q], p.epsilon) * force_term(fq[q], c, p);
                    for a in 0..3 {
                        l[a] += s * MIDPOINT_BASIS[q][a];
                    }
                }
                l
            })
            .collect();
        let mut b = vec![0.0; self.mesh.num_vertices()];
        for (t, l) in self.mesh.triangles.iter().zip(&local) {
            for a in 0..3 {
                b[t[a]] += l[a];
            }
        }
        Ok(b)
    }
}

pub fn assemble_mass(mesh: &TriMesh) -> Result<SparseMatrix> {
    Ok(FemSpace::new(mesh)?.mass())
}

pub fn assemble_stiffness(mesh: &TriMesh, phi: &LevelSet, p: &ModelParams) -> Result<SparseMatrix> {
    FemSpace::new(mesh)?.stiffness(phi, p)
}

pub fn assemble_rhs(
    mesh: &TriMesh,
    phi: &LevelSet,
    f: &[f64],
    c: RegionConstants,
    p: &ModelParams,
) -> Result<Vec<f64>> {
    FemSpace::new(mesh)?.rhs(phi, f, c, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::uniform_initial_mesh;
    use approx::assert_relative_eq;

    fn right_triangle() -> TriMesh {
        TriMesh::new(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[0, 1, 2]], (1.0, 1.0))
    }

    #[test]
    fn mass_sums_to_area() {
        let mesh = uniform_initial_mesh(7, 5, 30).unwrap();
        let m = assemble_mass(&mesh).unwrap();
        let total: f64 = m.row_sums().iter().sum();
        assert_relative_eq!(total, 24.0, epsilon = 1e-12);
        assert!(m.asymmetry() == 0.0);
    }

    #[test]
    fn stiffness_of_right_triangle() {
        let mesh = right_triangle();
        let p = ModelParams { mu: 2.0, nu: 0.0, lambda1: 1.0, lambda2: 1.0, epsilon: 1.0 };
        let a = assemble_stiffness(&mesh, &LevelSet::new(vec![0.0; 3]).unwrap(), &p).unwrap();
        let s = 2.0 * delta_eps(0.0, 1.0) * 0.5;
        let expect = [[2.0, -1.0, -1.0], [-1.0, 1.0, 0.0], [-1.0, 0.0, 1.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert_relative_eq!(a.get(i, j), s * expect[i][j], epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn rhs_zero_without_force() {
        let mesh = uniform_initial_mesh(6, 6, 20).unwrap();
        let n = mesh.num_vertices();
        let p = ModelParams { mu: 1.0, nu: 0.0, lambda1: 1.0, lambda2: 1.0, epsilon: 1.0 };
        let phi = LevelSet::new(mesh.vertices.iter().map(|v| v[0] - 2.5).collect()).unwrap();
        let b = assemble_rhs(&mesh, &phi, &vec![0.4; n], RegionConstants { c1: 0.4, c2: 0.4 }, &p).unwrap();
        assert!(b.iter().all(|v| v.abs() < 1e-15));
    }
}
