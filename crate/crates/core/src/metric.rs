//! Metric tensors built from image derivatives: the Hessian-based anisotropic
//! metric with its implicit regularization parameter, and the metric derived
//! from the inverse of an anisotropic diffusion tensor.

use crate::error::{Error, Result};
use crate::mesh::TriMesh;
use crate::raster::{PixelGrid, TensorField};
use crate::tensor::{Point, Sym2};

/// Eigenvalues replaced by their absolute values.
pub fn matrix_abs(s: &Sym2) -> Sym2 {
    s.map_eigenvalues(f64::abs)
}

fn regularized(h: &Sym2, alpha: f64) -> Sym2 {
    Sym2::identity() + matrix_abs(h) * (1.0 / alpha)
}

/// `‖I + |H|/α‖_F^{1/2} · det(I + |H|/α)^{1/4}`.
pub fn density_rho(h: &Sym2, alpha: f64) -> f64 {
    let a = regularized(h, alpha);
    a.frobenius().sqrt() * a.det().max(0.0).powf(0.25)
}

/// `ρ · det(I + |H|/α)^{-1/2} · (I + |H|/α)`.
pub fn metric_aniso(h: &Sym2, alpha: f64) -> Sym2 {
    let a = regularized(h, alpha);
    let det = a.det();
    a * (a.frobenius().sqrt() * det.powf(0.25) / det.sqrt())
}

/// Anisotropic diffusion tensor with eigenvalue `1/r` along `g` and `1` across it,
/// `r = 1 + |g|²`.
pub fn diffusion_dmp(g: Point) -> Sym2 {
    let g2 = g[0] * g[0] + g[1] * g[1];
    if g2 < 1e-12 {
        return Sym2::identity();
    }
    let r = 1.0 + g2;
    let k = 1.0 / (r * g2);
    Sym2::new(
        k * (g[0] * g[0] + r * g[1] * g[1]),
        -k * g2 * g[0] * g[1],
        k * (g[1] * g[1] + r * g[0] * g[0]),
    )
}

/// Inverse of [`diffusion_dmp`]: eigenvalue `r` along `g`, `1` across it.
pub fn metric_dmp(g: Point) -> Sym2 {
    let g2 = g[0] * g[0] + g[1] * g[1];
    if g2 < 1e-12 {
        return Sym2::identity();
    }
    let n = g2.sqrt();
    let u = [g[0] / n, g[1] / n];
    // I + |g|² u uᵀ
    Sym2::new(1.0 + g2 * u[0] * u[0], g2 * u[0] * u[1], 1.0 + g2 * u[1] * u[1])
}

/// Element metric from vertex gradients: average the diffusion tensors, then invert.
pub fn dmp_element_metric(grads: [Point; 3]) -> Sym2 {
    let d = (diffusion_dmp(grads[0]) + diffusion_dmp(grads[1]) + diffusion_dmp(grads[2])) * (1.0 / 3.0);
    d.inverse().unwrap_or_else(Sym2::identity)
}

/// Hessian of the image at each mesh vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct HessianField {
    pub tensors: Vec<Sym2>,
}

impl HessianField {
    pub fn new(tensors: Vec<Sym2>) -> Result<Self> {
        if let Some(v) = tensors
            .iter()
            .position(|h| !(h.xx.is_finite() && h.xy.is_finite() && h.yy.is_finite()))
        {
            return Err(Error::InvalidParameter(format!("non-finite Hessian at vertex {v}")));
        }
        Ok(HessianField { tensors })
    }

    /// Samples a per-pixel Hessian raster at the mesh vertices.
    pub fn sample(field: &TensorField, mesh: &TriMesh) -> Self {
        HessianField {
            tensors: mesh.vertices.iter().map(|&p| field.sample(p)).collect(),
        }
    }

    pub fn from_grid(grid: &PixelGrid, mesh: &TriMesh, presmooth_sigma: f64) -> Self {
        Self::sample(&grid.hessian(presmooth_sigma), mesh)
    }

    /// Vertex average over element `k`.
    pub fn element(&self, mesh: &TriMesh, k: usize) -> Sym2 {
        let [a, b, c] = mesh.triangles[k];
        (self.tensors[a] + self.tensors[b] + self.tensors[c]) * (1.0 / 3.0)
    }
}

/// Outcome of the α search.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AlphaH {
    Solved { value: f64, residual: f64 },
    /// The Hessian is negligible and no α exists; use a uniform metric.
    Uniform,
}

impl AlphaH {
    pub fn value(&self) -> Option<f64> {
        match self {
            AlphaH::Solved { value, .. } => Some(*value),
            AlphaH::Uniform => None,
        }
    }
}

const ALPHA_BISECTION_STEPS: usize = 200;
const ALPHA_REL_TOL: f64 = 1e-6;

/// Relative residual of `Σ_K ρ_K(α)|K| = 2|Ω|`.
pub fn alpha_residual(hk: &[Sym2], areas: &[f64], alpha: f64) -> f64 {
    let omega: f64 = areas.iter().sum();
    let s: f64 = hk.iter().zip(areas).map(|(h, a)| density_rho(h, alpha) * a).sum();
    (s - 2.0 * omega) / (2.0 * omega)
}

/// Solves for α so that about half the elements land where the Hessian is large.
pub fn solve_alpha_h(hessians: &HessianField, mesh: &TriMesh) -> Result<AlphaH> {
    if hessians.tensors.len() != mesh.num_vertices() {
        return Err(Error::ShapeMismatch(format!(
            "{} Hessians for {} vertices",
            hessians.tensors.len(),
            mesh.num_vertices()
        )));
    }
    let mut areas = Vec::with_capacity(mesh.num_triangles());
    for k in 0..mesh.num_triangles() {
        let a = mesh.signed_area(k);
        if a <= 0.0 {
            return Err(Error::DegenerateElement { element: k, area: a });
        }
        areas.push(a);
    }
    let hk: Vec<Sym2> = (0..mesh.num_triangles()).map(|k| hessians.element(mesh, k)).collect();
    Ok(solve_alpha_elements(&hk, &areas))
}

/// α search over element Hessians and areas.
pub fn solve_alpha_elements(hk: &[Sym2], areas: &[f64]) -> AlphaH {
    let hmax = hk.iter().map(Sym2::frobenius).fold(0.0, f64::max);
    if hmax < 1e-12 {
        return AlphaH::Uniform;
    }
    // residual decreases in α
    let (mut lo, mut hi) = ((1e-8 * hmax).ln(), (1e8 * hmax).ln());
    let (rlo, rhi) = (alpha_residual(hk, areas, lo.exp()), alpha_residual(hk, areas, hi.exp()));
    if !(rlo >= 0.0 && rhi <= 0.0) {
        return AlphaH::Uniform;
    }
    for _ in 0..ALPHA_BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        let r = alpha_residual(hk, areas, mid.exp());
        if r.abs() <= 1e-3 * ALPHA_REL_TOL || hi - lo < 1e-15 {
            lo = mid;
            hi = mid;
            break;
        }
        if r > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let value = (0.5 * (lo + hi)).exp();
    AlphaH::Solved {
        value,
        residual: alpha_residual(hk, areas, value).abs(),
    }
}

/// Per-pixel anisotropic metric; a uniform α sentinel yields the identity.
pub fn aniso_metric_raster(hessian: &TensorField, alpha: AlphaH) -> TensorField {
    match alpha {
        AlphaH::Solved { value, .. } => hessian.map(|h| metric_aniso(&h, value)),
        AlphaH::Uniform => hessian.map(|_| Sym2::identity()),
    }
}

/// Per-pixel DMP metric from a gradient raster scaled by `gradient_scale`.
pub fn dmp_metric_raster(gradient: &crate::raster::VectorField, gradient_scale: f64) -> TensorField {
    gradient.map(|g| metric_dmp([g[0] * gradient_scale, g[1] * gradient_scale]))
}
