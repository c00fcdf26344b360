//! Synthetic test images with known ground truth.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::reconstruct::Mask;
use crate::error::{Error, Result};
use crate::raster::{PixelGrid, Raster};
use crate::tensor::Point;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Circle {
    pub center: Point,
    pub radius: f64,
}

impl Circle {
    pub fn contains(&self, p: Point) -> bool {
        let (dx, dy) = (p[0] - self.center[0], p[1] - self.center[1]);
        dx * dx + dy * dy <= self.radius * self.radius
    }
}

pub const CIRCLES_FOREGROUND: f64 = 0.8;
pub const CIRCLES_BACKGROUND: f64 = 0.2;

/// Ten disjoint disks laid out on a 256-pixel design, scaled to `size`.
pub fn circles_layout(size: usize) -> Vec<Circle> {
    const DESIGN: [(f64, f64, f64); 10] = [
        (41.3, 38.6, 22.4),
        (109.1, 35.2, 16.3),
        (181.7, 49.4, 27.6),
        (227.3, 118.9, 14.2),
        (45.6, 117.3, 18.7),
        (121.4, 113.8, 29.5),
        (61.2, 198.7, 25.8),
        (139.3, 197.1, 20.6),
        (201.8, 195.4, 23.7),
        (194.6, 127.2, 10.3),
    ];
    let s = (size - 1) as f64 / 255.0;
    DESIGN
        .iter()
        .map(|&(x, y, r)| Circle {
            center: [x * s, y * s],
            radius: r * s,
        })
        .collect()
}

pub fn disk_mask(width: usize, height: usize, circles: &[Circle]) -> Mask {
    Raster::from_fn(width, height, |i, j| circles.iter().any(|c| c.contains([i as f64, j as f64])))
}

fn image_from_mask(m: &Mask, fg: f64, bg: f64) -> Result<PixelGrid> {
    PixelGrid::from_fn(m.width, m.height, |i, j| if m.get(i, j) { fg } else { bg })
}

/// Bright disks on a dark background; the disks are the ground-truth foreground.
pub fn circles_image(size: usize) -> Result<(PixelGrid, Vec<Circle>)> {
    let circles = circles_layout(size);
    let img = image_from_mask(&disk_mask(size, size, &circles), CIRCLES_FOREGROUND, CIRCLES_BACKGROUND)?;
    Ok((img, circles))
}

/// Adds seeded Gaussian intensity noise, clamped to `[0, 1]`.
pub fn add_noise(grid: &PixelGrid, sigma: f64, seed: u64) -> Result<PixelGrid> {
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::InvalidParameter(format!("noise sigma: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vals = grid.values().iter().map(|v| (v + normal.sample(&mut rng)).clamp(0.0, 1.0)).collect();
    PixelGrid::new(grid.width(), grid.height(), vals)
}

/// Gray level of each ring region, from the outside in.
pub const RING_LEVELS: [f64; 7] = [0.0, 2.0 / 3.0, 1.0 / 3.0, 1.0, 0.0, 2.0 / 3.0, 1.0 / 3.0];

/// Six concentric circles bounding seven regions of four gray levels.
pub fn rings_image(size: usize) -> Result<(PixelGrid, Vec<Circle>)> {
    let c = (size - 1) as f64 / 2.0;
    let s = (size - 1) as f64;
    let circles: Vec<Circle> = (0..6)
        .map(|k| Circle {
            center: [c, c],
            radius: s * (0.46 - 0.07 * k as f64),
        })
        .collect();
    let img = PixelGrid::from_fn(size, size, |i, j| {
        let inside = circles.iter().filter(|ci| ci.contains([i as f64, j as f64])).count();
        RING_LEVELS[inside]
    })?;
    Ok((img, circles))
}

/// A dim disk and a bright square on black; returns the image and its 3-region labels.
pub fn two_objects_image(size: usize) -> Result<(PixelGrid, Raster<u8>)> {
    let s = (size - 1) as f64;
    let disk = Circle {
        center: [0.3 * s, 0.35 * s],
        radius: 0.18 * s,
    };
    let labels = Raster::from_fn(size, size, |i, j| {
        let (x, y) = (i as f64, j as f64);
        if disk.contains([x, y]) {
            1u8
        } else if (0.55 * s..=0.85 * s).contains(&x) && (0.45 * s..=0.8 * s).contains(&y) {
            2
        } else {
            0
        }
    });
    let img = PixelGrid::from_fn(size, size, |i, j| [0.05, 0.5, 0.95][labels.get(i, j) as usize])?;
    Ok((img, labels))
}

/// Elongated, rotated ellipses resembling rod-shaped cells.
pub fn blobs_image(size: usize) -> Result<(PixelGrid, Mask)> {
    let s = (size - 1) as f64 / 255.0;
    let cells = [
        (60.0, 70.0, 34.0, 12.0, 0.4),
        (150.0, 60.0, 40.0, 10.0, -0.3),
        (90.0, 170.0, 30.0, 14.0, 1.2),
        (190.0, 160.0, 44.0, 12.0, 0.9),
        (200.0, 230.0, 24.0, 9.0, 0.0),
    ];
    let mask = Raster::from_fn(size, size, |i, j| {
        cells.iter().any(|&(cx, cy, a, b, th): &(f64, f64, f64, f64, f64)| {
            let (dx, dy) = (i as f64 - cx * s, j as f64 - cy * s);
            let (u, v) = (dx * th.cos() + dy * th.sin(), -dx * th.sin() + dy * th.cos());
            (u / (a * s)).powi(2) + (v / (b * s)).powi(2) <= 1.0
        })
    });
    let img = PixelGrid::from_fn(size, size, |i, j| {
        let shade = 0.02 * ((i as f64 * 0.05).sin() + (j as f64 * 0.04).cos());
        if mask.get(i, j) {
            0.3 + shade
        } else {
            0.75 + shade
        }
    })?;
    Ok((img, mask))
}

/// Polar deviation of a polyline from a circle: mean `| |p - c| - r |`.
pub fn mean_radial_deviation(points: &[Point], circle: &Circle) -> f64 {
    if points.is_empty() {
        return f64::INFINITY;
    }
    points
        .iter()
        .map(|p| (crate::tensor::norm(crate::tensor::sub(*p, circle.center)) - circle.radius).abs())
        .sum::<f64>()
        / points.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circles_are_disjoint_and_inside() {
        let cs = circles_layout(256);
        assert_eq!(cs.len(), 10);
        for (i, a) in cs.iter().enumerate() {
            assert!(a.center[0] - a.radius > 2.0 && a.center[0] + a.radius < 253.0);
            assert!(a.center[1] - a.radius > 2.0 && a.center[1] + a.radius < 253.0);
            for b in &cs[i + 1..] {
                let d = crate::tensor::norm(crate::tensor::sub(a.center, b.center));
                assert!(d > a.radius + b.radius + 4.0, "{a:?} {b:?}");
            }
        }
    }

    #[test]
    fn rings_are_nested() {
        let (img, cs) = rings_image(128).unwrap();
        for w in cs.windows(2) {
            assert!(w[0].radius > w[1].radius + 3.0);
        }
        assert!(cs[0].radius < 63.0);
        assert_eq!(img.get(0, 0), 0.0);
    }

    #[test]
    fn noise_is_seeded() {
        let (img, _) = circles_image(32).unwrap();
        assert_eq!(add_noise(&img, 0.2, 7).unwrap(), add_noise(&img, 0.2, 7).unwrap());
        assert_ne!(add_noise(&img, 0.2, 7).unwrap(), add_noise(&img, 0.2, 8).unwrap());
    }
}
