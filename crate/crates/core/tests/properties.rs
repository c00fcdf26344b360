use amaseg::chanvese::{delta_eps, heaviside_eps, LevelSet, ModelParams, RegionConstants};
use amaseg::fem::{solve_linear, FemSpace, SparseMatrix};
use amaseg::mesh::{
    adapt_mesh, alignment_ratio, equidistribution_ratios, sigma_h, structured_mesh, MetricField, TriMesh,
};
use amaseg::metric::{diffusion_dmp, matrix_abs, metric_aniso, metric_dmp};
use amaseg::pipeline::{dice, interpolate_to_grid, segmented_image, Mask};
use amaseg::raster::{
    decode_image, encode_pgm, grid_gradient, grid_hessian, sample_bilinear, PgmEncoding, PixelGrid, Raster,
};
use amaseg::tensor::Sym2;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn sym() -> impl Strategy<Value = Sym2> {
    (-50.0..50.0f64, -50.0..50.0f64, -50.0..50.0f64).prop_map(|(a, b, c)| Sym2::new(a, b, c))
}

fn spd() -> impl Strategy<Value = Sym2> {
    (0.01..10.0f64, 0.01..10.0f64, 0.0..std::f64::consts::PI).prop_map(|(l1, l2, t)| {
        let (s, c) = t.sin_cos();
        Sym2::from_eigen([l1, l2], [[c, s], [-s, c]])
    })
}

fn rot_congruence(h: &Sym2, t: f64) -> Sym2 {
    // Rᵀ H R with R = [[c, -s], [s, c]]
    let (s, c) = t.sin_cos();
    let r = amaseg::tensor::Mat2([[c, -s], [s, c]]);
    r.transpose().congruence(h)
}

fn to_dense(m: &SparseMatrix) -> DMatrix<f64> {
    let n = m.dim();
    DMatrix::from_fn(n, n, |i, j| m.get(i, j))
}

fn jittered_mesh(n: usize, seed: &[f64]) -> TriMesh {
    let mut mesh = structured_mesh(n, n, ((n - 1) as f64, (n - 1) as f64));
    for (v, p) in mesh.vertices.iter_mut().enumerate() {
        let (i, j) = (v % n, v / n);
        if i > 0 && i < n - 1 && j > 0 && j < n - 1 {
            p[0] += 0.3 * seed[(2 * v) % seed.len()];
            p[1] += 0.3 * seed[(2 * v + 1) % seed.len()];
        }
    }
    mesh
}

fn params() -> ModelParams {
    ModelParams { mu: 0.01, nu: 0.0, lambda1: 1.0, lambda2: 1.0, epsilon: 1.0 }
}

proptest! {
    #[test]
    fn heaviside_is_antisymmetric(phi in -1e3..1e3f64, eps in 0.01..10.0f64) {
        prop_assert!((heaviside_eps(phi, eps) + heaviside_eps(-phi, eps) - 1.0).abs() <= 1e-15);
        prop_assert!(delta_eps(phi, eps) >= 0.0);
    }

    #[test]
    fn delta_is_derivative_of_heaviside(t in -10.0..10.0f64, eps in 0.1..10.0f64) {
        let phi = t * eps;
        let h = 1e-5 * eps;
        let fd = (heaviside_eps(phi + h, eps) - heaviside_eps(phi - h, eps)) / (2.0 * h);
        prop_assert!((fd - delta_eps(phi, eps)).abs() <= 1e-6);
    }

    #[test]
    fn pgm_round_trip(w in 2usize..12, h in 2usize..12, bytes in prop::collection::vec(any::<u8>(), 144), ascii in any::<bool>()) {
        let vals: Vec<f64> = bytes[..w * h].iter().map(|&b| b as f64 / 255.0).collect();
        let enc = if ascii { PgmEncoding::Ascii } else { PgmEncoding::Binary };
        let back = decode_image(&encode_pgm(w, h, &vals, enc)).unwrap();
        let got: Vec<u8> = back.values().iter().map(|v| (v * 255.0).round() as u8).collect();
        prop_assert_eq!(&got[..], &bytes[..w * h]);
    }

    #[test]
    fn bilinear_stays_in_support_range(vals in prop::collection::vec(0.0..1.0f64, 25), x in 0.0..4.0f64, y in 0.0..4.0f64) {
        let g = PixelGrid::new(5, 5, vals).unwrap();
        let (i, j) = ((x.floor() as usize).min(3), (y.floor() as usize).min(3));
        let s = [g.get(i, j), g.get(i + 1, j), g.get(i, j + 1), g.get(i + 1, j + 1)];
        let lo = s.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let v = sample_bilinear(&g, [x, y]);
        prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
    }

    #[test]
    fn derivatives_exact_on_quadratics(c in prop::collection::vec(-1.0..1.0f64, 5)) {
        // kept inside [0, 1] on the 9x7 grid so nothing is clamped
        let (a, b) = (1e-2, 1e-3);
        let q = |x: f64, y: f64| 0.5 + a * (c[0] * x + c[1] * y) + b * (c[2] * x * x + c[3] * x * y + c[4] * y * y);
        let g = PixelGrid::from_fn(9, 7, |i, j| q(i as f64, j as f64)).unwrap();
        let grad = grid_gradient(&g, 0.0);
        let hess = grid_hessian(&g, 0.0);
        for j in 1..6 {
            for i in 1..8 {
                let (x, y) = (i as f64, j as f64);
                let d = grad.get(i, j);
                prop_assert!((d[0] - (a * c[0] + b * (2.0 * c[2] * x + c[3] * y))).abs() < 1e-10);
                prop_assert!((d[1] - (a * c[1] + b * (c[3] * x + 2.0 * c[4] * y))).abs() < 1e-10);
                let h = hess.get(i, j);
                prop_assert!((h.xx - 2.0 * b * c[2]).abs() < 1e-10);
                prop_assert!((h.xy - b * c[3]).abs() < 1e-10);
                prop_assert!((h.yy - 2.0 * b * c[4]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn abs_is_psd_and_metrics_are_spd(h in sym(), alpha in 1e-3..10.0f64, g in prop::array::uniform2(-1e3..1e3f64)) {
        let a = matrix_abs(&h);
        prop_assert!(a.eigenvalues().iter().all(|&l| l >= -1e-9 * (1.0 + h.frobenius())));
        let m = metric_aniso(&h, alpha);
        prop_assert!(m.trace() > 0.0 && m.det() > 0.0);
        let d = metric_dmp(g);
        prop_assert!(d.trace() > 0.0 && d.det() > 0.0);
    }

    #[test]
    fn aniso_metric_commutes_with_rotation(h in sym(), alpha in 0.1..10.0f64, t in 0.0..6.3f64) {
        let lhs = metric_aniso(&rot_congruence(&h, t), alpha);
        let rhs = rot_congruence(&metric_aniso(&h, alpha), t);
        let scale = 1.0 + lhs.frobenius();
        prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-10 * scale);
    }

    #[test]
    fn dmp_diffusion_eigenstructure(mag in -6.0..3.0f64, t in 0.0..6.3f64) {
        let r = 10f64.powf(mag);
        let g = [r * t.cos(), r * t.sin()];
        let perp = [-g[1], g[0]];
        let d = diffusion_dmp(g);
        let s = 1.0 + r * r;
        let dg = d.apply(g);
        let dp = d.apply(perp);
        for k in 0..2 {
            prop_assert!((dg[k] - g[k] / s).abs() <= 1e-12 * (1.0 + r));
            prop_assert!((dp[k] - perp[k]).abs() <= 1e-12 * (1.0 + r));
        }
    }

    #[test]
    fn alignment_ratio_at_least_one(
        p in prop::array::uniform3(prop::array::uniform2(0.0..10.0f64)),
        m in spd(),
    ) {
        let area = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
        prop_assume!(area.abs() > 1e-2);
        let tri = if area > 0.0 { [0, 1, 2] } else { [0, 2, 1] };
        let mesh = TriMesh::new(p.to_vec(), vec![tri], (10.0, 10.0));
        let metric = MetricField::uniform(3, m);
        prop_assert!(alignment_ratio(&mesh, &metric, 0).unwrap() >= 1.0 - 1e-12);
    }

    #[test]
    fn equidistribution_mean_is_one(jit in prop::collection::vec(-1.0..1.0f64, 64), ms in prop::collection::vec(spd(), 36)) {
        let mesh = jittered_mesh(6, &jit);
        let metric = MetricField::new(ms).unwrap();
        let r = equidistribution_ratios(&mesh, &metric);
        let mean = r.iter().sum::<f64>() / r.len() as f64;
        prop_assert!((mean - 1.0).abs() < 1e-12);
        prop_assert!(sigma_h(&mesh, &metric) > 0.0);
    }

    #[test]
    fn fem_operators_have_expected_structure(
        jit in prop::collection::vec(-1.0..1.0f64, 64),
        phi in prop::collection::vec(-5.0..5.0f64, 36),
        dt in 1e-3..1e4f64,
    ) {
        let mesh = jittered_mesh(6, &jit);
        let space = FemSpace::new(&mesh).unwrap();
        let ls = LevelSet::new(phi).unwrap();
        let m = to_dense(&space.mass());
        let a = to_dense(&space.stiffness(&ls, &params()).unwrap());
        prop_assert!(m.clone().cholesky().is_some());
        prop_assert!((&a - a.transpose()).amax() < 1e-12 * (1.0 + a.amax()));
        let ones = DMatrix::from_element(36, 1, 1.0);
        prop_assert!((&a * &ones).amax() < 1e-10 * (1.0 + a.amax()));
        let min_a = a.clone().symmetric_eigenvalues().min();
        prop_assert!(min_a > -1e-9 * (1.0 + a.amax()));
        prop_assert!((m + a * dt).cholesky().is_some());
    }

    #[test]
    fn assembly_ignores_element_order(
        jit in prop::collection::vec(-1.0..1.0f64, 64),
        phi in prop::collection::vec(-5.0..5.0f64, 36),
        perm_seed in any::<u64>(),
    ) {
        let mesh = jittered_mesh(6, &jit);
        let mut shuffled = mesh.clone();
        let n = shuffled.triangles.len();
        let mut s = perm_seed | 1;
        for k in (1..n).rev() {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            shuffled.triangles.swap(k, (s % (k as u64 + 1)) as usize);
        }
        let ls = LevelSet::new(phi).unwrap();
        let f: Vec<f64> = (0..36).map(|v| (v % 5) as f64 / 4.0).collect();
        let c = RegionConstants { c1: 0.8, c2: 0.1 };
        let (s1, s2) = (FemSpace::new(&mesh).unwrap(), FemSpace::new(&shuffled).unwrap());
        let diff = |x: &DMatrix<f64>, y: &DMatrix<f64>| (x - y).amax();
        prop_assert!(diff(&to_dense(&s1.mass()), &to_dense(&s2.mass())) < 1e-10);
        prop_assert!(diff(
            &to_dense(&s1.stiffness(&ls, &params()).unwrap()),
            &to_dense(&s2.stiffness(&ls, &params()).unwrap()),
        ) < 1e-10);
        let (b1, b2) = (s1.rhs(&ls, &f, c, &params()).unwrap(), s2.rhs(&ls, &f, c, &params()).unwrap());
        prop_assert!(b1.iter().zip(&b2).all(|(x, y)| (x - y).abs() < 1e-10));
    }

    #[test]
    fn frozen_step_is_linear(
        phi in prop::collection::vec(-5.0..5.0f64, 36),
        u in prop::collection::vec(-1.0..1.0f64, 36),
        v in prop::collection::vec(-1.0..1.0f64, 36),
        a in -3.0..3.0f64,
    ) {
        let mesh = structured_mesh(6, 6, (5.0, 5.0));
        let space = FemSpace::new(&mesh).unwrap();
        let mass = space.mass();
        let stiff = space.stiffness(&LevelSet::new(phi).unwrap(), &params()).unwrap();
        let system = mass.add_scaled(&stiff, 1000.0).unwrap();
        let solve = |rhs: &[f64]| solve_linear(&system, rhs, 1e-14, 1000).unwrap();
        let combo: Vec<f64> = u.iter().zip(&v).map(|(x, y)| a * x + y).collect();
        let (xu, xv, xc) = (solve(&u), solve(&v), solve(&combo));
        for i in 0..36 {
            prop_assert!((xc[i] - (a * xu[i] + xv[i])).abs() < 1e-10);
        }
    }

    #[test]
    fn interpolation_exact_for_linear(jit in prop::collection::vec(-1.0..1.0f64, 64), c in prop::array::uniform3(-2.0..2.0f64)) {
        let mesh = jittered_mesh(6, &jit);
        let vals: Vec<f64> = mesh.vertices.iter().map(|p| c[0] + c[1] * p[0] + c[2] * p[1]).collect();
        let (r, _) = interpolate_to_grid(&mesh, &vals, 6, 6).unwrap();
        for j in 0..6 {
            for i in 0..6 {
                prop_assert!((r.get(i, j) - (c[0] + c[1] * i as f64 + c[2] * j as f64)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn dice_symmetric_and_bounded(a in prop::collection::vec(any::<bool>(), 30), b in prop::collection::vec(any::<bool>(), 30)) {
        let ma: Mask = Raster { width: 6, height: 5, data: a };
        let mb: Mask = Raster { width: 6, height: 5, data: b };
        let d = dice(&ma, &mb).unwrap();
        prop_assert!((0.0..=1.0).contains(&d));
        prop_assert_eq!(d, dice(&mb, &ma).unwrap());
        prop_assert_eq!(dice(&ma, &ma).unwrap(), 1.0);
    }

    #[test]
    fn segmented_image_is_two_valued(phi in prop::collection::vec(-1.0..1.0f64, 30), c1 in 0.0..1.0f64, c2 in 0.0..1.0f64) {
        let field = Raster { width: 6, height: 5, data: phi };
        let seg = segmented_image(&field, RegionConstants { c1, c2 }).unwrap();
        prop_assert!(seg.values().iter().all(|&v| v == c1 || v == c2));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn adaptation_keeps_mesh_valid(ms in prop::collection::vec(spd(), 121), target in 60usize..300) {
        let mesh = structured_mesh(11, 11, (30.0, 30.0));
        let metric = MetricField::new(ms).unwrap();
        let a = adapt_mesh(&mesh, &metric, target, 2).unwrap();
        a.mesh.validate().unwrap();
        prop_assert!((0..a.mesh.num_triangles()).all(|k| a.mesh.signed_area(k) > 0.0));
        prop_assert!((a.mesh.total_area() - 900.0).abs() <= 1e-6 * 900.0);
        let again = adapt_mesh(&mesh, &metric, target, 2).unwrap();
        prop_assert_eq!(&again.mesh.vertices, &a.mesh.vertices);
        prop_assert_eq!(&again.mesh.triangles, &a.mesh.triangles);
    }
}
