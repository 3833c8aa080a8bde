use diraclab_core::clifford::Mat4;
use diraclab_core::data::{random_band_limited, rng};
use diraclab_core::potential::*;
use diraclab_core::GridSpec;
use nalgebra::SymmetricEigen;

fn classes() -> [PotentialClass; 3] {
    [PotentialClass::Vhp, PotentialClass::AssNablaV2, PotentialClass::AngularNablaAngV2]
}

fn eigenvalues(m: &Mat4) -> Vec<f64> {
    let mut e: Vec<f64> = SymmetricEigen::new(*m).eigenvalues.iter().cloned().collect();
    e.sort_by(f64::total_cmp);
    e
}

#[test]
fn zero_potential_is_admissible_everywhere() {
    let grid = GridSpec::new(16, 8.0).unwrap();
    for class in classes() {
        let rep = check_admissibility(&PotentialSpec::zero().with_class(class), &grid).unwrap();
        assert!(rep.passed);
        assert_eq!(rep.sup_ratio, 0.0);
        assert_eq!(rep.sup_gradient_ratio, 0.0);
    }
}

#[test]
fn saturating_profile_hits_delta_exactly() {
    let grid = GridSpec::new(16, 8.0).unwrap();
    let spec = PotentialSpec::radial(
        RadialProfile::SaturatingVhp { delta0: 0.04, sigma: 1.5, epsilon: 0.1 },
        RadialProfile::Zero,
    );
    let rep = check_admissibility(&spec, &grid).unwrap();
    assert!((rep.sup_ratio - 0.04).abs() < 1e-12, "{}", rep.sup_ratio);
    assert!(rep.size_passed());
    assert!(rep.origin_clamped);
}

#[test]
fn constant_potential_fails_and_worsens_with_the_box() {
    let spec = PotentialSpec::radial(RadialProfile::Constant { value: 0.01 }, RadialProfile::Zero);
    let mut last = 0.0;
    for l in [4.0, 8.0, 16.0] {
        let rep = check_admissibility(&spec, &GridSpec::new(16, l).unwrap()).unwrap();
        assert!(rep.sup_ratio > last);
        last = rep.sup_ratio;
    }
    assert!(last > 0.05);
    let rep = check_admissibility(&spec, &GridSpec::new(16, 16.0).unwrap()).unwrap();
    assert!(!rep.passed);
}

#[test]
fn structured_matrix_has_eigenvalues_v1_plus_minus_v2() {
    let spec = PotentialSpec::radial(
        RadialProfile::GaussianBump { amplitude: 0.3, width: 1.0, center: 0.2 },
        RadialProfile::OddGaussian { amplitude: -0.5, width: 1.4 },
    );
    for x in [[0.3, -0.2, 1.1], [2.0, 0.1, 0.0], [-0.4, -0.4, -0.4]] {
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) as f64;
        let (v1, v2) = spec.profiles_at(r.sqrt());
        let e = eigenvalues(&spec.matrix_at(x));
        let (lo, hi) = ((v1 - v2.abs()), (v1 + v2.abs()));
        for (k, want) in [lo, lo, hi, hi].iter().enumerate() {
            assert!((e[k] - want).abs() < 1e-14, "{e:?} vs {lo} {hi}");
        }
        assert!((hermitian_operator_norm(&spec.matrix_at(x)) - lo.abs().max(hi.abs())).abs() < 1e-14);
    }
}

#[test]
fn assembled_field_is_hermitian_with_real_expectation() {
    let grid = GridSpec::new(16, 6.0).unwrap();
    let spec = PotentialSpec::radial(
        RadialProfile::GaussianBump { amplitude: 0.2, width: 1.5, center: 0.0 },
        RadialProfile::OddGaussian { amplitude: 0.1, width: 1.5 },
    )
    .with_perturbation(AngularPerturbation {
        amplitude: 0.05,
        width: 1.5,
        axis: 2,
        generator: HermitianGenerator::IBetaAlpha3,
        band_limit: 1,
    });
    let field = PotentialField::assemble(&spec, &grid).unwrap();
    assert!(!field.is_structured());
    assert!(field.hermiticity_residual() < 1e-15);
    let u = random_band_limited(&grid, 0.7, &mut rng(5));
    let e = field.apply(&u).unwrap().inner(&u).unwrap();
    assert!(e.im.abs() <= 1e-14 * e.re.abs().max(u.l2_norm().powi(2)));
}

#[test]
fn potential_exponential_is_unitary() {
    let grid = GridSpec::new(8, 4.0).unwrap();
    let spec = PotentialSpec::radial(
        RadialProfile::GaussianBump { amplitude: 0.7, width: 1.0, center: 0.0 },
        RadialProfile::OddGaussian { amplitude: 0.4, width: 1.0 },
    )
    .with_perturbation(AngularPerturbation {
        amplitude: 0.2,
        width: 1.0,
        axis: 0,
        generator: HermitianGenerator::Beta,
        band_limit: 1,
    });
    let field = PotentialField::assemble(&spec, &grid).unwrap();
    let e = field.exponential(0.9);
    let mut u = random_band_limited(&grid, 0.9, &mut rng(2));
    let before = u.l2_norm();
    field.exp_apply(&e, &mut u).unwrap();
    assert!((u.l2_norm() / before - 1.0).abs() < 1e-14);
    let h = field.matrix(37);
    let m = hermitian_exp(&h, 0.9);
    assert!((m.adjoint() * m - Mat4::identity()).norm() < 1e-14);
}

#[test]
fn invalid_profiles_are_rejected() {
    let bad = PotentialSpec::radial(RadialProfile::GaussianBump { amplitude: 0.1, width: -1.0, center: 0.0 }, RadialProfile::Zero);
    assert!(bad.validate().is_err());
    let bad = PotentialSpec::radial(RadialProfile::Table { r: vec![0.0, 1.0], values: vec![1.0] }, RadialProfile::Zero);
    assert!(bad.validate().is_err());
}
