//! Semi-implicit finite element evolution of the level set on a fixed mesh.

mod assemble;
mod sparse;

pub use assemble::{assemble_mass, assemble_rhs, assemble_stiffness, FemSpace};
pub use sparse::{solve_linear, solve_linear_from, LinearSolve, SparseMatrix};

use std::fmt::Write as _;

use crate::chanvese::{energy, region_averages, LevelSet, ModelParams, RegionConstants};
use crate::error::{Error, Result};
use crate::mesh::TriMesh;

/// Change of `c1 + c2` below which the region constants count as settled.
pub const CONSTANTS_TOL: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverParams {
    pub dt: f64,
    pub max_iters: usize,
    /// Fraction of nodes allowed to change sign in a converged iteration.
    pub sign_change_tol: f64,
    pub linear_tol: f64,
    pub linear_max_iters: usize,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            dt: 1000.0,
            max_iters: 100,
            sign_change_tol: 1e-3,
            linear_tol: 1e-8,
            linear_max_iters: 10_000,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.into()));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt must be positive");
        }
        if self.max_iters == 0 || self.linear_max_iters == 0 {
            return bad("iteration limits must be positive");
        }
        if !(self.sign_change_tol > 0.0 && self.sign_change_tol < 1.0) {
            return bad("sign change tolerance must lie in (0, 1)");
        }
        if !(self.linear_tol > 0.0 && self.linear_tol < 1.0) {
            return bad("linear tolerance must lie in (0, 1)");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub c1: f64,
    pub c2: f64,
    pub energy: f64,
    pub sign_change_fraction: f64,
    pub linear_iterations: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct History {
    pub records: Vec<IterationRecord>,
    pub converged: bool,
    pub initial_energy: f64,
    pub constants: RegionConstants,
}

impl History {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    pub fn final_energy(&self) -> f64 {
        self.records.last().map_or(self.initial_energy, |r| r.energy)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("iteration,c1,c2,energy,sign_change_fraction,linear_iterations\n");
        for r in &self.records {
            let _ = writeln!(
                s,
                "{},{:.10e},{:.10e},{:.10e},{:.6e},{}",
                r.iteration, r.c1, r.c2, r.energy, r.sign_change_fraction, r.linear_iterations
            );
        }
        s
    }
}

/// Fraction of entries whose sign (with zero counted positive) differs.
pub fn sign_change_fraction(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    let n = a.iter().zip(b).filter(|(x, y)| (**x >= 0.0) != (**y >= 0.0)).count();
    n as f64 / a.len() as f64
}

/// One step of `(M + Δt A) φⁿ⁺¹ = M φⁿ + Δt b` with `A`, `b` lagged at `φⁿ`.
pub fn step_semi_implicit(
    space: &FemSpace,
    mass: &SparseMatrix,
    phi: &LevelSet,
    f: &[f64],
    c: RegionConstants,
    p: &ModelParams,
    s: &SolverParams,
) -> Result<(LevelSet, LinearSolve)> {
    let a = space.stiffness(phi, p)?;
    let b = space.rhs(phi, f, c, p)?;
    let system = mass.add_scaled(&a, s.dt)?;
    let mut rhs = mass.mul_vec(&phi.values);
    for (r, bi) in rhs.iter_mut().zip(&b) {
        *r += s.dt * bi;
    }
    let mut x = phi.values.clone();
    let info = solve_linear_from(&system, &rhs, &mut x, s.linear_tol, s.linear_max_iters)?;
    Ok((LevelSet { values: x }, info))
}

/// Evolves `phi0` until the sign pattern and region constants settle or `max_iters` is hit.
pub fn run_fem(
    mesh: &TriMesh,
    f: &[f64],
    phi0: &LevelSet,
    p: &ModelParams,
    s: &SolverParams,
) -> Result<(LevelSet, History)> {
    p.validate()?;
    s.validate()?;
    phi0.check_mesh(mesh)?;
    let space = FemSpace::new(mesh)?;
    let mass = space.mass();
    let mut phi = phi0.clone();
    let mut c = region_averages(f, &phi, mesh, p.epsilon)?.constants;
    let initial_energy = energy(f, &phi, mesh, p, c)?;
    let mut records = Vec::new();
    let mut converged = false;
    for it in 1..=s.max_iters {
        let (next, info) = step_semi_implicit(&space, &mass, &phi, f, c, p, s)?;
        let c_next = region_averages(f, &next, mesh, p.epsilon)?.constants;
        let frac = sign_change_fraction(&phi.values, &next.values);
        let dc = (c_next.c1 - c.c1).abs() + (c_next.c2 - c.c2).abs();
        records.push(IterationRecord {
            iteration: it,
            c1: c_next.c1,
            c2: c_next.c2,
            energy: energy(f, &next, mesh, p, c_next)?,
            sign_change_fraction: frac,
            linear_iterations: info.iterations,
        });
        phi = next;
        c = c_next;
        if frac < s.sign_change_tol && dc < CONSTANTS_TOL {
            converged = true;
            break;
        }
    }
    Ok((
        phi,
        History {
            records,
            converged,
            initial_energy,
            constants: c,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::uniform_initial_mesh;

    #[test]
    fn flat_image_converges_immediately() {
        let mesh = uniform_initial_mesh(16, 16, 100).unwrap();
        let n = mesh.num_vertices();
        let phi0 = LevelSet::new(mesh.vertices.iter().map(|v| (v[0] * 0.7).sin()).collect()).unwrap();
        let (_, h) = run_fem(&mesh, &vec![0.5; n], &phi0, &ModelParams::default(), &SolverParams::default()).unwrap();
        assert!(h.converged);
        assert_eq!(h.iterations(), 1);
        assert!((h.constants.c1 - 0.5).abs() < 1e-12 && (h.constants.c2 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn tiny_step_is_identity() {
        let mesh = uniform_initial_mesh(10, 10, 60).unwrap();
        let space = FemSpace::new(&mesh).unwrap();
        let mass = space.mass();
        let f: Vec<f64> = mesh.vertices.iter().map(|v| if v[0] > 4.5 { 1.0 } else { 0.0 }).collect();
        let phi = LevelSet::new(mesh.vertices.iter().map(|v| v[1] - 4.2).collect()).unwrap();
        let s = SolverParams { dt: 1e-14, linear_tol: 1e-13, ..SolverParams::default() };
        let c = RegionConstants { c1: 0.9, c2: 0.1 };
        let (next, _) = step_semi_implicit(&space, &mass, &phi, &f, c, &ModelParams::default(), &s).unwrap();
        for (a, b) in next.values.iter().zip(&phi.values) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}
