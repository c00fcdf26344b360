//! Single- and multi-level segmentation runs.

use std::time::{Duration, Instant};

use rayon::prelude::*;

use super::represent::{ama_represent, RepresentParams};
use super::reconstruct::{extract_contour, mask_count, reconstruct, sign_mask, Mask, Polyline, Reconstruction};
use crate::chanvese::{LevelSet, ModelParams, RegionConstants};
use crate::error::Result;
use crate::fem::{run_fem, History, SolverParams};
use crate::mesh::{AdaptStatus, TriMesh};
use crate::metric::AlphaH;
use crate::raster::{PixelGrid, Raster, ScalarField};

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct SegmentParams {
    pub represent: RepresentParams,
    pub model: ModelParams,
    pub solver: SolverParams,
}

impl SegmentParams {
    pub fn validate(&self) -> Result<()> {
        self.represent.validate()?;
        self.model.validate()?;
        self.solver.validate()
    }
}

/// `sin(πx/4)·sin(πy/4)` at every vertex.
pub fn initial_levelset(mesh: &TriMesh) -> LevelSet {
    use std::f64::consts::FRAC_PI_4;
    LevelSet {
        values: mesh.vertices.iter().map(|p| (FRAC_PI_4 * p[0]).sin() * (FRAC_PI_4 * p[1]).sin()).collect(),
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Timings {
    pub represent: Duration,
    pub solve: Duration,
    pub reconstruct: Duration,
}

#[derive(Clone, Debug)]
pub struct LevelResult {
    pub mesh: TriMesh,
    pub f: Vec<f64>,
    pub phi: LevelSet,
    pub history: History,
    pub reconstruction: Reconstruction,
    pub contours: Vec<Polyline>,
    pub adapt_status: AdaptStatus,
    pub alpha: Option<AlphaH>,
    pub timings: Timings,
}

impl LevelResult {
    pub fn constants(&self) -> RegionConstants {
        self.history.constants
    }

    /// Pixels with `φ ≥ 0`.
    pub fn inside_mask(&self) -> Mask {
        sign_mask(&self.reconstruction.phi)
    }

    /// Pixels assigned to the brighter of the two constants.
    pub fn bright_mask(&self) -> Mask {
        let inside = self.inside_mask();
        let c = self.constants();
        if c.c1 >= c.c2 {
            inside
        } else {
            inside.map(|b| !b)
        }
    }
}

/// Represent, evolve, reconstruct.
pub fn segment_one_level(grid: &PixelGrid, params: &SegmentParams) -> Result<LevelResult> {
    params.validate()?;
    let rep = ama_represent(grid, &params.represent)?;
    let t0 = Instant::now();
    let mesh = rep.adapt.mesh;
    let phi0 = initial_levelset(&mesh);
    let (phi, history) = run_fem(&mesh, &rep.f, &phi0, &params.model, &params.solver)?;
    let solve = t0.elapsed();
    let t1 = Instant::now();
    let reconstruction = reconstruct(&mesh, &phi, history.constants, (grid.width(), grid.height()))?;
    let contours = extract_contour(&mesh, &phi)?;
    Ok(LevelResult {
        mesh,
        f: rep.f,
        phi,
        history,
        reconstruction,
        contours,
        adapt_status: rep.adapt.status,
        alpha: rep.alpha,
        timings: Timings {
            represent: rep.elapsed,
            solve,
            reconstruct: t1.elapsed(),
        },
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MultilevelParams {
    pub levels: usize,
    /// Regions below this fraction of the image are not split further.
    pub min_region_fraction: f64,
    /// Splits whose constants differ by less than this are rejected.
    pub min_contrast: f64,
}

impl Default for MultilevelParams {
    fn default() -> Self {
        MultilevelParams {
            levels: 1,
            min_region_fraction: 1e-3,
            min_contrast: 1e-2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BranchStatus {
    Split,
    TooSmall,
    /// The run converged to a single region or an indistinct split.
    NoNewContour,
}

#[derive(Clone, Debug)]
pub struct Branch {
    /// 1-based level.
    pub level: usize,
    /// Index among the branches of its level.
    pub index: usize,
    pub region: Mask,
    pub status: BranchStatus,
    pub result: Option<LevelResult>,
}

#[derive(Clone, Debug)]
pub struct MultilevelResult {
    pub branches: Vec<Branch>,
    /// Leaf region of every pixel.
    pub labels: Raster<u32>,
    pub num_labels: usize,
}

impl MultilevelResult {
    pub fn level(&self, level: usize) -> impl Iterator<Item = &Branch> {
        self.branches.iter().filter(move |b| b.level == level)
    }

    pub fn contours(&self) -> impl Iterator<Item = &Polyline> {
        self.branches.iter().filter_map(|b| b.result.as_ref()).flat_map(|r| r.contours.iter())
    }

    /// Segmented image and level set of one level, pieced together from its
    /// branches. Pixels of regions that stopped splitting keep their last values.
    pub fn composite(&self, level: usize) -> Option<(PixelGrid, ScalarField)> {
        let first = self.branches.iter().find_map(|b| b.result.as_ref())?;
        let (w, h) = (first.reconstruction.phi.width, first.reconstruction.phi.height);
        let mut seg = vec![0.0; w * h];
        let mut phi = vec![0.0; w * h];
        for l in 1..=level {
            for b in self.level(l) {
                let Some(r) = &b.result else { continue };
                let rs = r.reconstruction.segmented.values();
                for (k, _) in b.region.data.iter().enumerate().filter(|(_, &m)| m) {
                    seg[k] = rs[k];
                    phi[k] = r.reconstruction.phi.data[k];
                }
            }
        }
        let seg = PixelGrid::new(w, h, seg).ok()?;
        Some((seg, Raster { width: w, height: h, data: phi }))
    }

    pub fn all_converged(&self) -> bool {
        self.branches
            .iter()
            .filter_map(|b| b.result.as_ref())
            .all(|r| r.history.converged)
    }
}

/// Out-of-region pixels replaced by the region mean.
pub fn masked_image(grid: &PixelGrid, region: &Mask) -> Result<PixelGrid> {
    let (mut s, mut n) = (0.0, 0usize);
    for (v, &m) in grid.values().iter().zip(&region.data) {
        if m {
            s += v;
            n += 1;
        }
    }
    let mean = if n > 0 { s / n as f64 } else { grid.mean() };
    PixelGrid::from_fn(grid.width(), grid.height(), |i, j| if region.get(i, j) { grid.get(i, j) } else { mean })
}

/// Recursively re-segments the inside and outside of each level.
pub fn segment_multilevel(grid: &PixelGrid, ml: &MultilevelParams, params: &SegmentParams) -> Result<MultilevelResult> {
    if ml.levels == 0 {
        return Err(crate::Error::InvalidParameter("levels must be at least 1".into()));
    }
    params.validate()?;
    let total = grid.width() * grid.height();
    let min_pixels = (ml.min_region_fraction * total as f64).ceil() as usize;
    let mut frontier = vec![Raster::filled(grid.width(), grid.height(), true)];
    let mut leaves = Vec::new();
    let mut branches = Vec::new();
    for level in 1..=ml.levels {
        let runs: Vec<Result<Option<LevelResult>>> = frontier
            .par_iter()
            .map(|region| {
                if mask_count(region) < min_pixels {
                    return Ok(None);
                }
                let img = if level == 1 { grid.clone() } else { masked_image(grid, region)? };
                segment_one_level(&img, params).map(Some)
            })
            .collect();
        let mut next = Vec::new();
        for (index, (region, run)) in frontier.into_iter().zip(runs).enumerate() {
            let result = run?;
            let status = match &result {
                None => {
                    leaves.push(region.clone());
                    BranchStatus::TooSmall
                }
                Some(r) => {
                    let inside = r.inside_mask();
                    let a = Raster::from_fn(grid.width(), grid.height(), |i, j| region.get(i, j) && inside.get(i, j));
                    let b = Raster::from_fn(grid.width(), grid.height(), |i, j| region.get(i, j) && !inside.get(i, j));
                    let c = r.constants();
                    if mask_count(&a) >= min_pixels && mask_count(&b) >= min_pixels && (c.c1 - c.c2).abs() >= ml.min_contrast {
                        next.push(a);
                        next.push(b);
                        BranchStatus::Split
                    } else {
                        leaves.push(region.clone());
                        BranchStatus::NoNewContour
                    }
                }
            };
            branches.push(Branch {
                level,
                index,
                region,
                status,
                result,
            });
        }
        frontier = next;
    }
    leaves.extend(frontier);
    let mut labels = Raster::filled(grid.width(), grid.height(), 0u32);
    for (l, m) in leaves.iter().enumerate() {
        for (dst, &inside) in labels.data.iter_mut().zip(&m.data) {
            if inside {
                *dst = l as u32;
            }
        }
    }
    Ok(MultilevelResult {
        branches,
        labels,
        num_labels: leaves.len(),
    })
}
