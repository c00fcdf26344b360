use std::f64::consts::PI;

use amaseg::chanvese::{energy, region_averages, LevelSet, ModelParams, RegionConstants};
use amaseg::fds::fds_step;
use amaseg::mesh::structured_mesh;
use amaseg::pipeline::fixtures::{circles_image, two_objects_image};
use amaseg::pipeline::{
    dice, segment_multilevel, segment_one_level, MetricKind, MultilevelParams, RepresentParams, SegmentParams,
};
use amaseg::raster::{PixelGrid, Raster};

fn coarse(kind: MetricKind) -> SegmentParams {
    SegmentParams {
        represent: RepresentParams {
            sd: 0.08,
            kind,
            ..RepresentParams::default()
        },
        ..SegmentParams::default()
    }
}

#[test]
fn inversion_swaps_the_phases() {
    let (grid, _) = circles_image(128).unwrap();
    let inverted = PixelGrid::new(128, 128, grid.values().iter().map(|v| 1.0 - v).collect()).unwrap();
    for kind in [MetricKind::Aniso, MetricKind::Dmp] {
        let a = segment_one_level(&grid, &coarse(kind)).unwrap();
        let b = segment_one_level(&inverted, &coarse(kind)).unwrap();
        let (ca, cb) = (a.constants(), b.constants());
        assert!((ca.c1 - (1.0 - cb.c1)).abs() < 0.02 && (ca.c2 - (1.0 - cb.c2)).abs() < 0.02);
        let dark_b = b.bright_mask().map(|x| !x);
        let d = dice(&a.bright_mask(), &dark_b).unwrap();
        assert!(d >= 0.97, "{kind:?}: dice {d}");
    }
}

#[test]
fn multilevel_labels_partition_pixels() {
    let (grid, _) = two_objects_image(128).unwrap();
    let ml = MultilevelParams {
        levels: 2,
        ..MultilevelParams::default()
    };
    let r = segment_multilevel(&grid, &ml, &coarse(MetricKind::Aniso)).unwrap();
    let mut seen = vec![0usize; r.num_labels];
    for &l in &r.labels.data {
        assert!((l as usize) < r.num_labels);
        seen[l as usize] += 1;
    }
    assert!(seen.iter().all(|&n| n > 0));
    assert_eq!(seen.iter().sum::<usize>(), 128 * 128);
    // regions of one level are disjoint and cover the image
    for level in 1..=2 {
        let mut cover = vec![0u8; 128 * 128];
        for b in r.level(level) {
            for (c, &inside) in cover.iter_mut().zip(&b.region.data) {
                *c += inside as u8;
            }
        }
        if r.level(level).count() > 0 {
            assert!(cover.iter().all(|&c| c <= 1));
        }
    }
    for level in 1..=2 {
        if let Some((seg, _)) = r.composite(level) {
            let mut vals: Vec<f64> = seg.values().to_vec();
            vals.sort_by(f64::total_cmp);
            vals.dedup();
            assert!(vals.len() <= 1 << level);
        }
    }
}

#[test]
fn fds_keeps_a_converged_configuration() {
    let (w, h) = (48, 40);
    let inside = |i: usize, j: usize| (i as f64 - 23.3).hypot(j as f64 - 19.6) < 11.0;
    let f = PixelGrid::from_fn(w, h, |i, j| if inside(i, j) { 0.9 } else { 0.2 }).unwrap();
    let phi = Raster::from_fn(w, h, |i, j| (11.0 - (i as f64 - 23.3).hypot(j as f64 - 19.6)).clamp(-5.0, 5.0));
    let c = RegionConstants { c1: 0.9, c2: 0.2 };
    let p = ModelParams::default();
    let next = fds_step(&phi, &f, c, &p, 1000.0).unwrap();
    let flipped = phi.data.iter().zip(&next.data).filter(|(a, b)| (**a >= 0.0) != (**b >= 0.0)).count();
    assert_eq!(flipped, 0);
}

#[test]
fn sharper_level_sets_recover_region_means() {
    let n = 21;
    let mesh = structured_mesh(n, n, (20.0, 20.0));
    let inside: Vec<bool> = mesh.vertices.iter().map(|p| p[0] + 0.5 * p[1] < 12.3).collect();
    let f: Vec<f64> = mesh.vertices.iter().map(|p| 0.5 + 0.4 * (0.3 * p[0]).sin() * (0.2 * p[1]).cos()).collect();
    let eps = 1.0;
    // exact piecewise means under the same midpoint rule, with a sharp indicator
    let (mut s1, mut a1, mut s2, mut a2) = (0.0, 0.0, 0.0, 0.0);
    for (k, t) in mesh.triangles.iter().enumerate() {
        let w = mesh.area(k) / 3.0;
        for (u, v) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
            let fq = 0.5 * (f[u] + f[v]);
            let side = (inside[u] as i32) + (inside[v] as i32);
            match side {
                2 => {
                    s1 += w * fq;
                    a1 += w;
                }
                0 => {
                    s2 += w * fq;
                    a2 += w;
                }
                _ => {
                    s1 += 0.5 * w * fq;
                    a1 += 0.5 * w;
                    s2 += 0.5 * w * fq;
                    a2 += 0.5 * w;
                }
            }
        }
    }
    let exact = (s1 / a1, s2 / a2);
    let mut last = f64::INFINITY;
    for scale in [10.0, 100.0, 1000.0] {
        let phi = LevelSet::new(inside.iter().map(|&b| if b { scale * eps } else { -scale * eps }).collect()).unwrap();
        let c = region_averages(&f, &phi, &mesh, eps).unwrap().constants;
        let err = (c.c1 - exact.0).abs() + (c.c2 - exact.1).abs();
        assert!(err < last, "scale {scale}: {err} !< {last}");
        last = err;
    }
    assert!(last < 1e-3);
}

#[test]
fn energy_shift_follows_heaviside() {
    use amaseg::chanvese::heaviside_eps;
    let mesh = structured_mesh(12, 10, (11.0, 9.0));
    let f: Vec<f64> = mesh.vertices.iter().map(|p| 0.5 + 0.5 * (p[0] * PI / 11.0).sin()).collect();
    let phi: Vec<f64> = mesh.vertices.iter().map(|p| (p[0] - 5.2) + 0.3 * (p[1] - 4.1)).collect();
    let p = ModelParams { mu: 0.0, nu: 0.3, lambda1: 1.0, lambda2: 2.0, epsilon: 1.5 };
    let c = RegionConstants { c1: 0.8, c2: 0.3 };
    let base = energy(&f, &LevelSet::new(phi.clone()).unwrap(), &mesh, &p, c).unwrap();
    for shift in [-2.0, 0.5, 3.0] {
        let shifted: Vec<f64> = phi.iter().map(|v| v + shift).collect();
        let e = energy(&f, &LevelSet::new(shifted).unwrap(), &mesh, &p, c).unwrap();
        let mut expected = 0.0;
        for (k, t) in mesh.triangles.iter().enumerate() {
            let w = mesh.area(k) / 3.0;
            for (u, v) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                let fq = 0.5 * (f[u] + f[v]);
                let pq = 0.5 * (phi[u] + phi[v]);
                let dh = heaviside_eps(pq + shift, p.epsilon) - heaviside_eps(pq, p.epsilon);
                expected += w * dh * (p.nu + p.lambda1 * (fq - c.c1).powi(2) - p.lambda2 * (fq - c.c2).powi(2));
            }
        }
        assert!((e - base - expected).abs() < 1e-10 * (1.0 + base.abs()), "shift {shift}");
    }
}
