use std::f64::consts::PI;

use diraclab_core::data::rng;
use diraclab_core::interp::SamplingMethod;
use diraclab_core::norms::angular::*;
use diraclab_core::norms::estimates::*;
use diraclab_core::norms::maximal::{radial_halfwave_maximal_check, MaximalConfig};
use diraclab_core::norms::report::*;
use diraclab_core::partialwave::{build_basis, spinor_harmonics, QuantumNumbers};
use diraclab_core::potential::{PotentialSpec, RadialProfile};
use diraclab_core::sphere::{angular_symbol, sph_harm, SphereFunction, SphereGrid};
use diraclab_core::{Error, GridSpec, SpinorField3D, C64};
use rand::Rng;

#[test]
fn angular_operator_acts_diagonally_on_harmonics() {
    let sphere = SphereGrid::new(8);
    for (l, m) in [(0usize, 0i64), (1, -1), (3, 2), (6, 6)] {
        let y = SphereFunction::from_fn(sphere.clone(), |w| sph_harm(l, m, w));
        for s in [0.5, 1.0, 1.5] {
            let ly = angular_sobolev(&y, s).unwrap();
            let want = angular_symbol(l).powf(0.5 * s);
            assert!((ly.l2_norm() - want).abs() < 1e-12 * want);
            assert!((ly.inner(&y).re - want).abs() < 1e-12 * want);
        }
    }
}

#[test]
fn angular_operator_round_trip() {
    let sphere = SphereGrid::new(10);
    let mut r = rng(4);
    let coeffs: Vec<C64> = (0..sphere.n_coefficients())
        .map(|_| C64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)))
        .collect();
    let f = SphereFunction::new(sphere.clone(), sphere.synthesize(&coeffs)).unwrap();
    let back = angular_sobolev(&angular_sobolev(&f, 1.5).unwrap(), -1.5).unwrap();
    let diff: Vec<C64> = back.values.iter().zip(&f.values).map(|(a, b)| a - b).collect();
    let d = SphereFunction::new(sphere, diff).unwrap();
    assert!(d.l2_norm() < 1e-12 * f.l2_norm());
}

#[test]
fn shell_norms_of_sector_fields() {
    let sphere = SphereGrid::new(12);
    let qn = QuantumNumbers::new(1, -1, 1).unwrap();
    let radii = [0.5, 1.0, 2.0];
    let g = |r: f64| 3.0 * r * (-r * r).exp();
    let shells = ShellField::from_fn(&sphere, &radii, |x| {
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        let (p, _) = spinor_harmonics(&qn, [x[0] / r, x[1] / r, x[2] / r]);
        p.map(|z| z * g(r))
    });
    let (l2, residual) = shells.shell_norms(0.0);
    assert!(residual < 1e-12);
    let sup = shells.shell_sup();
    for (i, &r) in radii.iter().enumerate() {
        assert!((l2[i] - g(r)).abs() < 1e-13);
        assert!((sup[i] - g(r) / (4.0 * PI).sqrt()).abs() < 1e-13);
    }
    let pair = build_basis(qn, &sphere).unwrap();
    assert!(pair.orthonormality_residual() < 1e-13);
}

#[test]
fn radial_fields_have_sqrt_4pi_shell_norm() {
    let sphere = SphereGrid::new(6);
    let shells = ShellField::from_fn(&sphere, &[1.0, 2.0], |x| {
        let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
        [C64::new(2.0 * (-r2).exp(), 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)]
    });
    for (k, r) in [1.0f64, 2.0].iter().enumerate() {
        let want = 2.0 * (-r * r).exp() * (4.0 * PI).sqrt();
        assert!((shells.shell_norms(1.0).0[k] - want).abs() < 1e-13 * want.max(1.0));
        assert!((shells.shell_lp_norms(4.0)[k] - 2.0 * (-r * r).exp() * (4.0 * PI).powf(0.25)).abs() < 1e-13);
    }
}

#[test]
fn weighted_angular_l2_of_gaussian() {
    let grid = GridSpec::new(48, 8.0).unwrap();
    let w = 0.9;
    let u = SpinorField3D::from_fn(grid, |x| {
        let g = (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / (2.0 * w * w)).exp();
        [C64::new(g, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)]
    });
    let (n, _) = weighted_angular_l2(&u, &SphereGrid::new(6), 1.0, |_| 1.0, 7.0, 64, SamplingMethod::Spectral);
    let want = (PI.powf(1.5) * w.powi(3)).sqrt();
    assert!((n / want - 1.0).abs() < 1e-8, "{n} vs {want}");
}

#[test]
fn maximal_check_on_a_small_grid() {
    let cfg = MaximalConfig {
        grid_n: 48,
        half_width: 12.0,
        t_samples: vec![0.0, 1.0, 2.0],
        ensemble: 3,
        t_final: 20.0,
        ..MaximalConfig::default()
    };
    let rep = radial_halfwave_maximal_check(&cfg).unwrap();
    assert!((rep.c - 0.5).abs() < 1e-6, "c = {}", rep.c);
    assert!(rep.agreement < 1e-4, "{}", rep.agreement);
    assert_eq!(rep.value_at_zero, 0.0);
    assert!(rep.domination <= 1.0 + 1e-3);
    assert!(rep.passed);
}

fn quick_flow() -> FlowConfig {
    FlowConfig {
        radial_dr: 1.0 / 16.0,
        radial_t_final: 4.0,
        ..FlowConfig::default()
    }
}

fn quick_ensemble() -> EnsembleSpec {
    EnsembleSpec {
        size: 2,
        refine: false,
        ..EnsembleSpec::default()
    }
}

#[test]
fn homdir_without_dirac_part_has_equal_bounds() {
    let flow = FlowConfig { dirac_part: false, ..quick_flow() };
    let rep = verify_estimate(EstimateId::Homdir, &quick_ensemble(), &flow).unwrap();
    assert_eq!(rep.samples.len(), 2);
    for s in &rep.samples {
        let alt = s.ratio_alt.unwrap();
        assert!((s.ratio - alt).abs() <= 1e-12 * alt, "{s:?}");
    }
}

#[test]
fn end_v_with_zero_potential_reduces_to_homdir() {
    let flow = FlowConfig { potential: PotentialSpec::zero(), ..quick_flow() };
    let hom = verify_estimate(EstimateId::Homdir, &quick_ensemble(), &flow).unwrap();
    let endv = verify_estimate(EstimateId::EndV, &quick_ensemble(), &flow).unwrap();
    for (a, b) in hom.samples.iter().zip(&endv.samples) {
        assert_eq!(a.seed, b.seed);
        assert!((a.lhs - b.lhs).abs() <= 1e-14 * a.lhs);
        assert!((a.ratio - b.ratio_alt.unwrap()).abs() <= 1e-12 * a.ratio);
    }
}

#[test]
fn reports_are_deterministic_and_round_trip() {
    let flow = quick_flow();
    let a = verify_estimate(EstimateId::Homdir, &quick_ensemble(), &flow).unwrap();
    let b = verify_estimate(EstimateId::Homdir, &quick_ensemble(), &flow).unwrap();
    assert_eq!(a.summary_hash(), b.summary_hash());
    let dir = tempfile::tempdir().unwrap();
    let (sp, su) = (dir.path().join("samples.csv"), dir.path().join("summary.csv"));
    a.write(&sp, &su).unwrap();
    let (fp, rows) = read_samples(&sp).unwrap();
    assert_eq!(fp.as_deref(), Some(a.fingerprint.as_str()));
    assert_eq!(rows.len(), a.samples.len());
    for (x, y) in rows.iter().zip(&a.samples) {
        assert!((x.ratio - y.ratio).abs() <= 1e-12 * y.ratio);
    }
    let summary = read_summary(&su).unwrap();
    assert!(summary.iter().any(|(k, v)| k == "summary_hash" && *v == a.summary_hash()));
}

#[test]
fn unknown_and_inadmissible_requests_are_rejected() {
    assert!(matches!("nonsense".parse::<EstimateId>(), Err(Error::InvalidConfig(_))));
    assert_eq!("ENDV".parse::<EstimateId>().unwrap(), EstimateId::EndV);
    let flow = FlowConfig {
        potential: PotentialSpec::radial(RadialProfile::Constant { value: 0.5 }, RadialProfile::Zero),
        ..quick_flow()
    };
    let err = verify_estimate(EstimateId::EndV, &quick_ensemble(), &flow).unwrap_err();
    assert!(matches!(err, Error::InvalidConfig(_)), "{err}");
    let empty = EnsembleSpec { size: 0, ..quick_ensemble() };
    assert!(verify_estimate(EstimateId::Homdir, &empty, &quick_flow()).is_err());
}

#[test]
fn log_log_slope_recovers_power_laws() {
    let pts: Vec<(f64, f64)> = [2.0f64, 4.0, 8.0, 16.0].iter().map(|p| (*p, p.powf(-0.3))).collect();
    assert!((log_log_slope(&pts).unwrap() + 0.3).abs() < 1e-12);
}
