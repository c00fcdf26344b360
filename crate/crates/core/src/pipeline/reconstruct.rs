//! Rasterizing nodal fields back onto the pixel grid, zero-level contours and masks.

use std::collections::HashMap;

use crate::chanvese::{LevelSet, RegionConstants};
use crate::error::{Error, Result};
use crate::mesh::{structured_mesh, Locator, TriMesh};
use crate::raster::{PixelGrid, Raster, ScalarField};
use crate::tensor::Point;

pub type Mask = Raster<bool>;

#[derive(Clone, Debug, PartialEq)]
pub struct Reconstruction {
    /// `c1` where `φ ≥ 0`, `c2` elsewhere.
    pub segmented: PixelGrid,
    pub phi: ScalarField,
    /// Pixels that no element covered and were assigned to the nearest element.
    pub fallback_pixels: usize,
}

/// Linear interpolation of nodal values at every pixel center.
pub fn interpolate_to_grid(mesh: &TriMesh, values: &[f64], width: usize, height: usize) -> Result<(ScalarField, usize)> {
    if values.len() != mesh.num_vertices() {
        return Err(Error::ShapeMismatch(format!(
            "{} values for {} vertices",
            values.len(),
            mesh.num_vertices()
        )));
    }
    let mut out = Raster::filled(width, height, f64::NAN);
    for (k, t) in mesh.triangles.iter().enumerate() {
        let c = mesh.corners(k);
        let x0 = c.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min).ceil().max(0.0) as usize;
        let x1 = c.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max).floor();
        let y0 = c.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min).ceil().max(0.0) as usize;
        let y1 = c.iter().map(|p| p[1]).fold(f64::NEG_INFINITY, f64::max).floor();
        if x1 < 0.0 || y1 < 0.0 {
            continue;
        }
        let x1 = (x1 as usize).min(width - 1);
        let y1 = (y1 as usize).min(height - 1);
        for j in y0..=y1 {
            for i in x0..=x1 {
                if !out.get(i, j).is_nan() {
                    continue;
                }
                let b = crate::mesh::barycentric(c, [i as f64, j as f64]);
                if b.iter().all(|&x| x >= -1e-10) {
                    out.set(i, j, b[0] * values[t[0]] + b[1] * values[t[1]] + b[2] * values[t[2]]);
                }
            }
        }
    }
    let mut fallback = 0;
    if out.data.iter().any(|v| v.is_nan()) {
        let locator = Locator::new(mesh);
        for j in 0..height {
            for i in 0..width {
                if out.get(i, j).is_nan() {
                    let (k, b, _) = locator.locate_or_nearest([i as f64, j as f64]);
                    let t = mesh.triangles[k];
                    out.set(i, j, b[0] * values[t[0]] + b[1] * values[t[1]] + b[2] * values[t[2]]);
                    fallback += 1;
                }
            }
        }
    }
    Ok((out, fallback))
}

pub fn reconstruct(
    mesh: &TriMesh,
    phi: &LevelSet,
    c: RegionConstants,
    shape: (usize, usize),
) -> Result<Reconstruction> {
    let (width, height) = shape;
    let (phi_r, fallback_pixels) = interpolate_to_grid(mesh, &phi.values, width, height)?;
    let segmented = segmented_image(&phi_r, c)?;
    Ok(Reconstruction {
        segmented,
        phi: phi_r,
        fallback_pixels,
    })
}

/// Two-valued image from a level-set raster.
pub fn segmented_image(phi: &ScalarField, c: RegionConstants) -> Result<PixelGrid> {
    PixelGrid::from_fn(phi.width, phi.height, |i, j| if phi.get(i, j) >= 0.0 { c.c1 } else { c.c2 })
}

pub fn sign_mask(phi: &ScalarField) -> Mask {
    phi.map(|v| v >= 0.0)
}

pub fn mask_count(m: &Mask) -> usize {
    m.data.iter().filter(|&&b| b).count()
}

/// `2|A∩B| / (|A|+|B|)`, and 1 when both masks are empty.
pub fn dice(a: &Mask, b: &Mask) -> Result<f64> {
    if a.width != b.width || a.height != b.height {
        return Err(Error::ShapeMismatch(format!(
            "masks {}x{} and {}x{}",
            a.width, a.height, b.width, b.height
        )));
    }
    let (mut both, mut na, mut nb) = (0usize, 0usize, 0usize);
    for (&x, &y) in a.data.iter().zip(&b.data) {
        na += x as usize;
        nb += y as usize;
        both += (x && y) as usize;
    }
    if na + nb == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * both as f64 / (na + nb) as f64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Polyline {
    pub points: Vec<Point>,
    /// The last point connects back to the first.
    pub closed: bool,
}

impl Polyline {
    pub fn length(&self) -> f64 {
        let mut l: f64 = self.points.windows(2).map(|w| crate::tensor::norm(crate::tensor::sub(w[1], w[0]))).sum();
        if self.closed && self.points.len() > 1 {
            l += crate::tensor::norm(crate::tensor::sub(self.points[0], *self.points.last().unwrap()));
        }
        l
    }
}

type EdgeKey = (usize, usize);

fn key(a: usize, b: usize) -> EdgeKey {
    (a.min(b), a.max(b))
}

/// Zero level set of a per-pixel field, traced on the pixel lattice.
pub fn extract_grid_contour(phi: &ScalarField) -> Result<Vec<Polyline>> {
    let (w, h) = (phi.width, phi.height);
    if w < 2 || h < 2 {
        return Err(Error::DegenerateImage { width: w, height: h });
    }
    let mesh = structured_mesh(w, h, ((w - 1) as f64, (h - 1) as f64));
    extract_contour(&mesh, &LevelSet { values: phi.data.clone() })
}

/// Zero level set of a nodal field as chained polylines.
pub fn extract_contour(mesh: &TriMesh, phi: &LevelSet) -> Result<Vec<Polyline>> {
    phi.check_mesh(mesh)?;
    let v: Vec<f64> = phi.values.iter().map(|&x| if x.abs() < 1e-12 { 1e-12 } else { x }).collect();
    let mut points: HashMap<EdgeKey, Point> = HashMap::new();
    let mut segs: Vec<(EdgeKey, EdgeKey)> = Vec::new();
    for t in &mesh.triangles {
        let s = t.map(|i| v[i] >= 0.0);
        if s[0] == s[1] && s[1] == s[2] {
            continue;
        }
        let mut ends = Vec::with_capacity(2);
        for e in 0..3 {
            let (a, b) = (t[e], t[(e + 1) % 3]);
            if (v[a] >= 0.0) != (v[b] >= 0.0) {
                let k = key(a, b);
                let (pa, pb) = (mesh.vertices[k.0], mesh.vertices[k.1]);
                let s = v[k.0] / (v[k.0] - v[k.1]);
                points.entry(k).or_insert([pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])]);
                ends.push(k);
            }
        }
        segs.push((ends[0], ends[1]));
    }
    let mut at: HashMap<EdgeKey, Vec<usize>> = HashMap::new();
    for (i, &(a, b)) in segs.iter().enumerate() {
        at.entry(a).or_default().push(i);
        at.entry(b).or_default().push(i);
    }
    let mut used = vec![false; segs.len()];
    let walk = |start: EdgeKey, used: &mut Vec<bool>| {
        let mut chain = vec![start];
        let mut cur = start;
        while let Some(&s) = at[&cur].iter().find(|&&s| !used[s]) {
            used[s] = true;
            cur = if segs[s].0 == cur { segs[s].1 } else { segs[s].0 };
            chain.push(cur);
        }
        chain
    };
    let mut lines = Vec::new();
    // open chains start at an endpoint of degree one
    let mut order: Vec<usize> = (0..segs.len()).filter(|&s| at[&segs[s].0].len() == 1 || at[&segs[s].1].len() == 1).collect();
    order.extend(0..segs.len());
    for s in order {
        if used[s] {
            continue;
        }
        let start = if at[&segs[s].0].len() == 1 { segs[s].0 } else { segs[s].1 };
        let chain = walk(start, &mut used);
        let closed = chain.len() > 2 && chain.first() == chain.last();
        let mut pts: Vec<Point> = chain.iter().map(|k| points[k]).collect();
        if closed {
            pts.pop();
        }
        lines.push(Polyline { points: pts, closed });
    }
    Ok(lines)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::uniform_initial_mesh;

    #[test]
    fn dice_examples() {
        let a = Raster::from_fn(4, 2, |i, _| i < 2);
        let b = Raster::from_fn(4, 2, |i, _| i >= 2);
        let c = Raster::from_fn(4, 2, |i, _| (1..3).contains(&i));
        assert_eq!(dice(&a, &a).unwrap(), 1.0);
        assert_eq!(dice(&a, &b).unwrap(), 0.0);
        assert_eq!(dice(&a, &c).unwrap(), 0.5);
        let e = Raster::filled(4, 2, false);
        assert_eq!(dice(&e, &e).unwrap(), 1.0);
        assert!(dice(&a, &Raster::filled(2, 2, false)).is_err());
    }

    #[test]
    fn linear_field_is_reproduced() {
        let mesh = uniform_initial_mesh(20, 15, 50).unwrap();
        let vals: Vec<f64> = mesh.vertices.iter().map(|p| 0.3 * p[0] - 0.7 * p[1] + 2.0).collect();
        let (r, fb) = interpolate_to_grid(&mesh, &vals, 20, 15).unwrap();
        assert_eq!(fb, 0);
        for j in 0..15 {
            for i in 0..20 {
                assert!((r.get(i, j) - (0.3 * i as f64 - 0.7 * j as f64 + 2.0)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn vertical_line_contour() {
        let mesh = uniform_initial_mesh(30, 20, 120).unwrap();
        let phi = LevelSet::new(mesh.vertices.iter().map(|p| p[0] - 11.3).collect()).unwrap();
        let lines = extract_contour(&mesh, &phi).unwrap();
        assert_eq!(lines.len(), 1);
        assert!(!lines[0].closed);
        assert!(lines[0].points.iter().all(|p| (p[0] - 11.3).abs() < 1e-9));
        assert!((lines[0].length() - 19.0).abs() < 1e-9);
    }

    #[test]
    fn positive_field_has_no_contour() {
        let mesh = uniform_initial_mesh(10, 10, 30).unwrap();
        let phi = LevelSet::new(vec![1.0; mesh.num_vertices()]).unwrap();
        assert!(extract_contour(&mesh, &phi).unwrap().is_empty());
    }
}
