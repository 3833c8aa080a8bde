use diraclab_core::clifford::*;
use diraclab_core::data::{random_band_limited, rng};
use diraclab_core::experiments::algebra_suite;
use diraclab_core::{GridSpec, SpinorField3D, C64};
use std::f64::consts::PI;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[test]
fn standard_matrices_satisfy_every_identity_exactly() {
    let rep = verify_algebra(&DiracMatrices::standard());
    assert!(rep.passed());
    assert_eq!(rep.max_residual(), 0.0);
    // hermiticity (4), anticommutators (6), beta^2, beta-alpha (3)
    assert_eq!(rep.residuals.len(), 14);
}

#[test]
fn displayed_alpha_matrices() {
    let m = DiracMatrices::standard();
    let z = c(0.0, 0.0);
    let one = c(1.0, 0.0);
    let i = c(0.0, 1.0);
    let alpha1 = [[z, z, z, one], [z, z, one, z], [z, one, z, z], [one, z, z, z]];
    let alpha2 = [[z, z, z, -i], [z, z, i, z], [z, -i, z, z], [i, z, z, z]];
    let alpha3 = [[z, z, one, z], [z, z, z, -one], [one, z, z, z], [z, -one, z, z]];
    for (a, want) in m.alpha.iter().zip([alpha1, alpha2, alpha3]) {
        for r in 0..4 {
            for k in 0..4 {
                assert_eq!(a[(r, k)], want[r][k]);
            }
        }
    }
    for r in 0..4 {
        let d = if r < 2 { 1.0 } else { -1.0 };
        assert_eq!(m.beta[(r, r)], c(d, 0.0));
    }
}

#[test]
fn identity_as_alpha1_is_reported() {
    let mut m = DiracMatrices::standard();
    m.alpha[0] = Mat4::identity();
    let rep = verify_algebra(&m);
    assert!(!rep.passed());
    let r12 = rep
        .residuals
        .iter()
        .find(|r| r.identity.starts_with("{alpha1, alpha2}"))
        .unwrap();
    // {I, alpha2} = 2 alpha2, whose largest entry has modulus 2
    assert_eq!(r12.residual, 2.0);
    assert!(rep.failures().any(|f| f.identity.contains("beta, alpha1")));
}

#[test]
fn single_sign_flip_is_detected() {
    let mut m = DiracMatrices::standard();
    m.alpha[1][(0, 3)] = -m.alpha[1][(0, 3)];
    let rep = verify_algebra(&m);
    assert!(!rep.passed());
    assert!(rep.max_residual() >= 1.0);
}

#[test]
fn plane_wave_is_an_eigenfunction() {
    let grid = GridSpec::new(16, PI).unwrap();
    let xi0 = [2.0, -1.0, 3.0];
    let v = [c(1.0, 0.5), c(-0.2, 0.0), c(0.0, 1.0), c(0.3, -0.7)];
    let f = SpinorField3D::from_fn(grid, |x| {
        let ph = C64::from_polar(1.0, xi0[0] * x[0] + xi0[1] * x[1] + xi0[2] * x[2]);
        v.map(|z| z * ph)
    });
    let df = apply_dirac(&f);
    let av = alpha_dot_apply(xi0, &v);
    for idx in (0..grid.len()).step_by(97) {
        let x = grid.point(idx);
        let ph = C64::from_polar(1.0, xi0[0] * x[0] + xi0[1] * x[1] + xi0[2] * x[2]);
        for k in 0..4 {
            assert!((df.get(idx)[k] - av[k] * ph).norm() < 1e-12);
        }
    }
}

#[test]
fn constant_spinor_is_annihilated() {
    let grid = GridSpec::new(8, 2.0).unwrap();
    let f = SpinorField3D::from_fn(grid, |_| [c(1.0, 2.0), c(0.0, -1.0), c(3.0, 0.0), c(0.5, 0.5)]);
    assert!(apply_dirac(&f).sup_norm() < 1e-14);
}

#[test]
fn dirac_squares_to_minus_laplacian() {
    let s = algebra_suite(10, 16, 11).unwrap();
    assert!(s.dirac_square_residual < 1e-12, "{}", s.dirac_square_residual);
}

#[test]
fn dirac_is_hermitian() {
    let grid = GridSpec::new(16, 3.0).unwrap();
    let mut r = rng(4);
    for _ in 0..5 {
        let f = random_band_limited(&grid, 0.8, &mut r);
        let g = random_band_limited(&grid, 0.8, &mut r);
        let lhs = apply_dirac(&f).inner(&g).unwrap();
        let rhs = f.inner(&apply_dirac(&g)).unwrap();
        assert!((lhs - rhs).norm() <= 1e-12 * f.l2_norm() * g.l2_norm());
    }
}

#[test]
fn multiplier_identities() {
    let grid = GridSpec::new(16, 3.0).unwrap();
    let mut r = rng(8);
    let f = random_band_limited(&grid, 0.7, &mut r);
    let same = apply_multiplier(&f, |_| c(1.0, 0.0)).unwrap();
    assert!(same.relative_l2_distance(&f).unwrap() < 1e-15);
    let k2 = |xi: [f64; 3]| c(xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2], 0.0);
    let twice = apply_multiplier(&apply_multiplier(&f, k2).unwrap(), k2).unwrap();
    let once = apply_multiplier(&f, |xi| k2(xi) * k2(xi)).unwrap();
    assert!(twice.relative_l2_distance(&once).unwrap() < 1e-12);
    let unimodular = apply_multiplier(&f, symbols::half_wave(1.7)).unwrap();
    assert!((unimodular.l2_norm() / f.l2_norm() - 1.0).abs() < 1e-12);
    assert!(apply_multiplier(&f, |_| c(f64::NAN, 0.0)).is_err());
}

#[test]
fn riesz_transforms_are_contractions() {
    let grid = GridSpec::new(8, 2.0).unwrap();
    let mut r = rng(21);
    for _ in 0..100 {
        let f = random_band_limited(&grid, 1.0, &mut r);
        for rj in riesz_transform(&f) {
            assert!(rj.l2_norm() <= f.l2_norm() * (1.0 + 1e-13));
        }
    }
}

#[test]
fn sobolev_norms() {
    let grid = GridSpec::new(16, 3.0).unwrap();
    let mut r = rng(2);
    let f = random_band_limited(&grid, 0.8, &mut r);
    assert!((sobolev_norm(&f, 0.0, false) - f.l2_norm()).abs() < 1e-13 * f.l2_norm());

    let xi0 = [2.0 * PI / 6.0 * 2.0, 0.0, -2.0 * PI / 6.0];
    let v = [c(1.0, 0.0), c(0.0, 2.0), c(0.0, 0.0), c(-1.0, 1.0)];
    let pw = SpinorField3D::from_fn(grid, |x| v.map(|z| z * C64::from_polar(1.0, xi0[0] * x[0] + xi0[2] * x[2])));
    let vnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let k = (xi0[0] * xi0[0] + xi0[2] * xi0[2]).sqrt();
    let want = k * vnorm * 6f64.powf(1.5);
    assert!((sobolev_norm(&pw, 1.0, true) / want - 1.0).abs() < 1e-12);
}

#[test]
fn gaussian_h1_seminorm_matches_closed_form() {
    // g = exp(-r^2 / 2w^2): ||g||^2 = pi^{3/2} w^3, ||grad g||^2 = (3 / 2w^2) ||g||^2
    let w = 1.0;
    let grid = GridSpec::new(48, 10.0).unwrap();
    let f = SpinorField3D::from_scalar(
        grid,
        |x| c((-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / (2.0 * w * w)).exp(), 0.0),
        [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
    );
    let l2 = PI.powf(1.5) * w.powi(3);
    let want = (1.5 / (w * w) * l2).sqrt();
    assert!((sobolev_norm(&f, 1.0, true) / want - 1.0).abs() < 1e-6);
}
