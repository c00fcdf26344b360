//! Image representation on a metric-adapted mesh.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::mesh::{adapt_mesh_with, uniform_initial_mesh, AdaptOptions, AdaptReport, Locator, RasterMetric, TriMesh};
use crate::metric::{aniso_metric_raster, dmp_metric_raster, solve_alpha_h, AlphaH, HessianField};
use crate::raster::PixelGrid;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum MetricKind {
    #[default]
    Aniso,
    Dmp,
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MetricKind::Aniso => "aniso",
            MetricKind::Dmp => "dmp",
        })
    }
}

impl FromStr for MetricKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "aniso" => Ok(MetricKind::Aniso),
            "dmp" => Ok(MetricKind::Dmp),
            _ => Err(Error::InvalidParameter(format!("unknown metric '{s}'"))),
        }
    }
}

/// How intensities are transferred to mesh vertices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Sampling {
    /// Bilinear image value at the vertex.
    Nodal,
    /// Lumped L2 projection: pixel values averaged with the hat-function weights.
    #[default]
    Projected,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RepresentParams {
    /// Vertices per pixel.
    pub sd: f64,
    pub kind: MetricKind,
    pub passes: usize,
    /// Gaussian presmoothing applied before taking image derivatives.
    pub presmooth_sigma: f64,
    /// Length unit, in pixels, for the gradient entering the DMP metric;
    /// `None` uses the mean vertex spacing of the target mesh.
    pub gradient_scale: Option<f64>,
    pub sampling: Sampling,
}

impl Default for RepresentParams {
    fn default() -> Self {
        RepresentParams {
            sd: 0.002,
            kind: MetricKind::Aniso,
            passes: 4,
            presmooth_sigma: 2.0,
            gradient_scale: None,
            sampling: Sampling::Projected,
        }
    }
}

impl RepresentParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.sd > 0.0 && self.sd <= 1.0) {
            return Err(Error::InvalidParameter(format!("sd = {} must lie in (0, 1]", self.sd)));
        }
        if self.passes == 0 {
            return Err(Error::InvalidParameter("passes must be at least 1".into()));
        }
        if !(self.presmooth_sigma >= 0.0 && self.presmooth_sigma.is_finite()) {
            return Err(Error::InvalidParameter("presmooth sigma must be non-negative".into()));
        }
        if let Some(g) = self.gradient_scale {
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::InvalidParameter("gradient scale must be positive".into()));
            }
        }
        Ok(())
    }

    /// Requested vertex count for a `width × height` image.
    pub fn target_vertices(&self, width: usize, height: usize) -> usize {
        ((self.sd * (width * height) as f64).round() as usize).max(4)
    }

    /// Gradient length unit actually used for a `width × height` image.
    pub fn effective_gradient_scale(&self, width: usize, height: usize) -> f64 {
        self.gradient_scale
            .unwrap_or_else(|| ((width * height) as f64 / self.target_vertices(width, height) as f64).sqrt())
    }
}

#[derive(Clone, Debug)]
pub struct Representation {
    /// Last adaptation; its mesh is the representation mesh.
    pub adapt: AdaptReport,
    /// Intensity at each vertex.
    pub f: Vec<f64>,
    pub alpha: Option<AlphaH>,
    pub elapsed: Duration,
}

impl Representation {
    pub fn mesh(&self) -> &TriMesh {
        &self.adapt.mesh
    }
}

/// Spacing of the seed lattice in pixels.
const SEED_SPACING: f64 = 2.0;
const MAX_SEED_VERTICES: usize = 200_000;

/// Builds a mesh adapted to the image and carries the intensities onto it.
pub fn ama_represent(grid: &PixelGrid, params: &RepresentParams) -> Result<Representation> {
    params.validate()?;
    let start = Instant::now();
    let (w, h) = (grid.width(), grid.height());
    let n_vertices = params.target_vertices(w, h);
    let n_elements = 2 * n_vertices;
    let lattice = ((w as f64 / SEED_SPACING).ceil() * (h as f64 / SEED_SPACING).ceil()) as usize;
    let n_seed = lattice.min(MAX_SEED_VERTICES).max(4 * n_vertices).max(16);
    let mut mesh = uniform_initial_mesh(w, h, n_seed)?;

    let hessian = (params.kind == MetricKind::Aniso).then(|| grid.hessian(params.presmooth_sigma));
    let dmp = (params.kind == MetricKind::Dmp)
        .then(|| dmp_metric_raster(&grid.gradient(params.presmooth_sigma), params.effective_gradient_scale(w, h)));
    let mut calibration = 1.0;
    let mut alpha = None;
    let mut last = None;
    for _ in 0..params.passes {
        let field = match params.kind {
            MetricKind::Aniso => {
                let hess = hessian.as_ref().expect("computed for aniso");
                let a = solve_alpha_h(&HessianField::sample(hess, &mesh), &mesh)?;
                alpha = Some(a);
                aniso_metric_raster(hess, a)
            }
            MetricKind::Dmp => dmp.clone().expect("computed for dmp"),
        };
        let source = RasterMetric { field };
        let opts = AdaptOptions {
            passes: 2,
            calibration,
            ..AdaptOptions::default()
        };
        let report = adapt_mesh_with(&mesh, &source, n_elements, &opts)?;
        calibration = report.calibration;
        mesh = report.mesh.clone();
        last = Some(report);
    }
    let adapt = last.expect("at least one pass");
    let f = match params.sampling {
        Sampling::Nodal => adapt.mesh.vertices.iter().map(|&p| grid.sample_bilinear(p)).collect(),
        Sampling::Projected => project_lumped(grid, &adapt.mesh),
    };
    Ok(Representation {
        adapt,
        f,
        alpha,
        elapsed: start.elapsed(),
    })
}

/// `f_v = Σ_p ψ_v(p) f(p) / Σ_p ψ_v(p)` over pixel centers `p`.
pub fn project_lumped(grid: &PixelGrid, mesh: &TriMesh) -> Vec<f64> {
    let n = mesh.num_vertices();
    let mut num = vec![0.0; n];
    let mut den = vec![0.0; n];
    let locator = Locator::new(mesh);
    for j in 0..grid.height() {
        for i in 0..grid.width() {
            let (k, b, _) = locator.locate_or_nearest([i as f64, j as f64]);
            let v = grid.get(i, j);
            for (a, &vi) in mesh.triangles[k].iter().enumerate() {
                num[vi] += b[a] * v;
                den[vi] += b[a];
            }
        }
    }
    // vertices with no pixel support fall back to the point value
    (0..n)
        .map(|v| {
            if den[v] > 1e-9 {
                num[v] / den[v]
            } else {
                grid.sample_bilinear(mesh.vertices[v])
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_image_gives_isotropic_mesh() {
        let grid = PixelGrid::constant(64, 48, 0.4).unwrap();
        let rep = ama_represent(&grid, &RepresentParams { sd: 0.05, passes: 2, ..Default::default() }).unwrap();
        assert_eq!(rep.alpha, Some(AlphaH::Uniform));
        rep.mesh().validate().unwrap();
        assert!(rep.f.iter().all(|v| (v - 0.4).abs() < 1e-12));
    }

    #[test]
    fn metric_kind_parses() {
        assert_eq!("dmp".parse::<MetricKind>().unwrap(), MetricKind::Dmp);
        assert!("iso".parse::<MetricKind>().is_err());
    }
}
