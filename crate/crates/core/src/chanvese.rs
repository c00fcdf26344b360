//! Terms of the two-phase piecewise-constant (Chan-Vese) model on a triangle mesh.
//!
//! All integrals use the edge-midpoint rule, exact for quadratics.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mesh::TriMesh;

/// Multiplier from 8-bit gray levels to unit intensities: length and area weights
/// calibrated on `[0, 255]` data are divided by this to act the same on `[0, 1]`.
pub const GRAY_LEVEL_SCALE: f64 = 255.0 * 255.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    pub mu: f64,
    pub nu: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub epsilon: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams::from_gray_levels(1e-4, 0.0, 1.0, 1.0, 1.0)
    }
}

impl ModelParams {
    /// Weights as used on `[0, 255]` intensities, converted for `[0, 1]` data.
    pub fn from_gray_levels(mu: f64, nu: f64, lambda1: f64, lambda2: f64, epsilon: f64) -> Self {
        ModelParams {
            mu: mu / GRAY_LEVEL_SCALE,
            nu: nu / GRAY_LEVEL_SCALE,
            lambda1,
            lambda2,
            epsilon,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.into()));
        if !(self.lambda1 > 0.0 && self.lambda2 > 0.0) {
            return bad("lambda1 and lambda2 must be positive");
        }
        if !(self.epsilon > 0.0) {
            return bad("epsilon must be positive");
        }
        if !(self.mu >= 0.0) {
            return bad("mu must be non-negative");
        }
        if !self.nu.is_finite() {
            return bad("nu must be finite");
        }
        Ok(())
    }
}

/// Nodal level-set values; positive inside the curve.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelSet {
    pub values: Vec<f64>,
}

impl LevelSet {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite level set value at {i}")));
        }
        Ok(LevelSet { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn check_mesh(&self, mesh: &TriMesh) -> Result<()> {
        if self.values.len() != mesh.num_vertices() {
            return Err(Error::ShapeMismatch(format!(
                "level set has {} values for {} vertices",
                self.values.len(),
                mesh.num_vertices()
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegionConstants {
    pub c1: f64,
    pub c2: f64,
}

/// Region constants plus which regions were empty and fell back to the global mean.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegionAverages {
    pub constants: RegionConstants,
    pub inside_empty: bool,
    pub outside_empty: bool,
}

pub fn heaviside_eps(phi: f64, epsilon: f64) -> f64 {
    0.5 * (1.0 + (2.0 / PI) * (phi / epsilon).atan())
}

pub fn delta_eps(phi: f64, epsilon: f64) -> f64 {
    epsilon / (PI * (epsilon * epsilon + phi * phi))
}

/// `-ν - λ1 (f - c1)² + λ2 (f - c2)²`.
pub fn force_term(f: f64, c: RegionConstants, p: &ModelParams) -> f64 {
    -p.nu - p.lambda1 * (f - c.c1).powi(2) + p.lambda2 * (f - c.c2).powi(2)
}

/// Regularized curvature diffusion `μ / (1 + |∇φ|)`.
pub fn diffusion_coeff(grad_phi: [f64; 2], mu: f64) -> f64 {
    mu / (1.0 + grad_phi[0].hypot(grad_phi[1]))
}

/// Values of a nodal field at the three edge midpoints of element `t`.
#[inline]
pub(crate) fn midpoint_values(v: &[f64], t: [usize; 3]) -> [f64; 3] {
    let (a, b, c) = (v[t[0]], v[t[1]], v[t[2]]);
    [0.5 * (a + b), 0.5 * (b + c), 0.5 * (c + a)]
}

fn check_sizes(mesh: &TriMesh, f: &[f64], phi: &LevelSet) -> Result<()> {
    phi.check_mesh(mesh)?;
    if f.len() != mesh.num_vertices() {
        return Err(Error::ShapeMismatch(format!(
            "intensity field has {} values for {} vertices",
            f.len(),
            mesh.num_vertices()
        )));
    }
    Ok(())
}

pub fn region_averages(f: &[f64], phi: &LevelSet, mesh: &TriMesh, epsilon: f64) -> Result<RegionAverages> {
    check_sizes(mesh, f, phi)?;
    let sums = (0..mesh.num_triangles())
        .into_par_iter()
        .map(|k| {
            let t = mesh.triangles[k];
            let w = mesh.area(k) / 3.0;
            let fq = midpoint_values(f, t);
            let pq = midpoint_values(&phi.values, t);
            let mut s = [0.0; 5];
            for q in 0..3 {
                let h = heaviside_eps(pq[q], epsilon);
                s[0] += w * fq[q] * h;
                s[1] += w * h;
                s[2] += w * fq[q] * (1.0 - h);
                s[3] += w * (1.0 - h);
                s[4] += w * fq[q];
            }
            s
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold([0.0; 5], |mut acc, s| {
            for i in 0..5 {
                acc[i] += s[i];
            }
            acc
        });
    let omega = mesh.total_area();
    let mean = sums[4] / omega;
    let floor = 1e-12 * omega;
    let inside_empty = sums[1] <= floor;
    let outside_empty = sums[3] <= floor;
    Ok(RegionAverages {
        constants: RegionConstants {
            c1: if inside_empty { mean } else { sums[0] / sums[1] },
            c2: if outside_empty { mean } else { sums[2] / sums[3] },
        },
        inside_empty,
        outside_empty,
    })
}

/// Diagnostic energy: length, area and the two fidelity terms.
pub fn energy(f: &[f64], phi: &LevelSet, mesh: &TriMesh, p: &ModelParams, c: RegionConstants) -> Result<f64> {
    check_sizes(mesh, f, phi)?;
    let parts: Vec<f64> = (0..mesh.num_triangles())
        .into_par_iter()
        .map(|k| {
            let t = mesh.triangles[k];
            let w = mesh.area(k) / 3.0;
            let g = mesh
                .basis_gradients(k)
                .map(|b| {
                    let v = &phi.values;
                    let gx = b[0][0] * v[t[0]] + b[1][0] * v[t[1]] + b[2][0] * v[t[2]];
                    let gy = b[0][1] * v[t[0]] + b[1][1] * v[t[1]] + b[2][1] * v[t[2]];
                    gx.hypot(gy)
                })
                .unwrap_or(0.0);
            let fq = midpoint_values(f, t);
            let pq = midpoint_values(&phi.values, t);
            let mut e = 0.0;
            for q in 0..3 {
                let h = heaviside_eps(pq[q], p.epsilon);
                e += w
                    * (p.mu * delta_eps(pq[q], p.epsilon) * g
                        + p.nu * h
                        + p.lambda1 * (fq[q] - c.c1).powi(2) * h
                        + p.lambda2 * (fq[q] - c.c2).powi(2) * (1.0 - h));
            }
            e
        })
        .collect();
    Ok(parts.iter().sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::uniform_initial_mesh;
    use approx::assert_relative_eq;

    #[test]
    fn heaviside_values() {
        assert_eq!(heaviside_eps(0.0, 1.0), 0.5);
        assert_relative_eq!(heaviside_eps(2.0, 2.0), 0.75, epsilon = 1e-15);
        assert!(1.0 - heaviside_eps(1e9, 1.0) < 1e-8);
    }

    #[test]
    fn delta_values() {
        assert_relative_eq!(delta_eps(0.0, 1.0), 1.0 / PI, epsilon = 1e-15);
        assert_relative_eq!(delta_eps(0.5, 0.5), 1.0 / PI, epsilon = 1e-15);
        assert_relative_eq!(delta_eps(3.0, 3.0), 1.0 / (6.0 * PI), epsilon = 1e-15);
    }

    #[test]
    fn force_values() {
        let c = RegionConstants { c1: 0.8, c2: 0.1 };
        let p = ModelParams { mu: 0.0, nu: 0.0, lambda1: 1.0, lambda2: 2.0, epsilon: 1.0 };
        assert_relative_eq!(force_term(0.8, c, &p), 2.0 * 0.49, epsilon = 1e-15);
        assert_relative_eq!(force_term(0.1, c, &p), -0.49, epsilon = 1e-15);
        let p = ModelParams { lambda2: 1.0, nu: 0.3, ..p };
        assert_relative_eq!(force_term(0.45, c, &p), -0.3, epsilon = 1e-15);
    }

    #[test]
    fn diffusion_values() {
        assert_eq!(diffusion_coeff([0.0, 0.0], 2.0), 2.0);
        assert_relative_eq!(diffusion_coeff([0.6, 0.8], 2.0), 1.0);
    }

    #[test]
    fn averages_constant_and_fallback() {
        let mesh = uniform_initial_mesh(9, 9, 40).unwrap();
        let n = mesh.num_vertices();
        let f = vec![0.3; n];
        let phi = LevelSet::new(mesh.vertices.iter().map(|p| p[0] - 4.0).collect()).unwrap();
        let r = region_averages(&f, &phi, &mesh, 1.0).unwrap();
        assert_relative_eq!(r.constants.c1, 0.3, epsilon = 1e-14);
        assert_relative_eq!(r.constants.c2, 0.3, epsilon = 1e-14);
        let f: Vec<f64> = mesh.vertices.iter().map(|p| p[1] / 8.0).collect();
        let phi = LevelSet::new(vec![1e20; n]).unwrap();
        let r = region_averages(&f, &phi, &mesh, 1.0).unwrap();
        assert!(r.outside_empty && !r.inside_empty);
        assert_relative_eq!(r.constants.c1, 0.5, epsilon = 1e-12);
        assert_relative_eq!(r.constants.c2, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn energy_zero_for_flat() {
        let mesh = uniform_initial_mesh(9, 9, 40).unwrap();
        let n = mesh.num_vertices();
        let p = ModelParams { mu: 1.0, nu: 0.0, lambda1: 1.0, lambda2: 1.0, epsilon: 1.0 };
        let c = RegionConstants { c1: 0.4, c2: 0.4 };
        let e = energy(&vec![0.4; n], &LevelSet::new(vec![2.0; n]).unwrap(), &mesh, &p, c).unwrap();
        assert!(e.abs() < 1e-15);
    }
}
