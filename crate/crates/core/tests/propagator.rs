use diraclab_core::clifford::{beta_form, spinor_norm_sq};
use diraclab_core::data::{complex_normal, random_band_limited, rng, DataRecipe, DataSpec};
use diraclab_core::experiments::{free_flow_suite, small_potential};
use diraclab_core::potential::PotentialField;
use diraclab_core::propagator::*;
use diraclab_core::{GridSpec, Spinor, SpinorField3D, C64};

fn bump(grid: GridSpec, w: f64) -> SpinorField3D {
    let mut r = rng(9);
    let a: Spinor = std::array::from_fn(|_| complex_normal(&mut r));
    SpinorField3D::from_fn(grid, |x| {
        let g = (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / (2.0 * w * w)).exp();
        a.map(|z| z * g * (1.0 + 0.3 * x[1]))
    })
}

#[test]
fn free_flow_identities() {
    let s = free_flow_suite(64, 16.0, &[0.1, 1.0, 3.0], 1).unwrap();
    assert!(s.unitarity_drift < 1e-12);
    assert!(s.group_law < 1e-12);
    assert!(s.wave_oracle < 1e-10);
    assert!(s.propagation_leakage < 1e-8, "{}", s.propagation_leakage);
}

#[test]
fn free_flow_rejects_times_past_the_causality_limit() {
    assert!(free_flow_suite(64, 16.0, &[7.0], 1).is_err());
}

#[test]
fn zero_time_is_identity() {
    let grid = GridSpec::new(16, 6.0).unwrap();
    let f = bump(grid, 1.0);
    assert!(free_propagate(&f, 0.0).relative_l2_distance(&f).unwrap() < 1e-15);
}

#[test]
fn duhamel_of_zero_source_vanishes() {
    let grid = GridSpec::new(8, 4.0).unwrap();
    let samples: Vec<_> = (0..=4).map(|k| (0.25 * k as f64, SpinorField3D::zeros(grid))).collect();
    let u = duhamel(&samples, 1.0, Quadrature::Simpson, DuhamelGenerator::Dirac).unwrap();
    assert_eq!(u.sup_norm(), 0.0);
}

#[test]
fn duhamel_with_zero_generator_is_i_t_f() {
    let grid = GridSpec::new(8, 4.0).unwrap();
    let f = bump(grid, 1.0);
    let samples: Vec<_> = (0..=6).map(|k| (0.2 * k as f64, f.clone())).collect();
    for rule in [Quadrature::Trapezoid, Quadrature::Simpson] {
        let u = duhamel(&samples, 1.2, rule, DuhamelGenerator::Zero).unwrap();
        let want = f.scaled(C64::new(0.0, 1.2));
        assert!(u.relative_l2_distance(&want).unwrap() < 1e-14);
    }
    assert!(duhamel(&samples, 0.7, Quadrature::Trapezoid, DuhamelGenerator::Zero).is_err());
}

#[test]
fn duhamel_of_free_flow_source() {
    // F(s) = e^{isD} g gives i t e^{itD} g exactly; both rules are exact because
    // e^{i(t-s)D} e^{isD} g does not depend on s.
    let grid = GridSpec::new(16, 8.0).unwrap();
    let g = bump(grid, 1.2);
    let t = 2.0;
    let samples: Vec<_> = (0..=8).map(|k| {
        let s = t * k as f64 / 8.0;
        (s, free_propagate(&g, s))
    }).collect();
    let want = free_propagate(&g, t).scaled(C64::new(0.0, t));
    for rule in [Quadrature::Trapezoid, Quadrature::Simpson] {
        let u = duhamel(&samples, t, rule, DuhamelGenerator::Dirac).unwrap();
        assert!(u.relative_l2_distance(&want).unwrap() < 1e-12);
    }
}

#[test]
fn trivial_step_equals_free_flow() {
    let grid = GridSpec::new(16, 6.0).unwrap();
    let f = bump(grid, 1.0);
    let u = step_nonlinear(&f, None, &CubicNonlinearity::None, 0.3, Scheme::Strang).unwrap();
    assert!(u.relative_l2_distance(&free_propagate(&f, 0.3)).unwrap() < 1e-14);
}

#[test]
fn pointwise_substep_preserves_modulus() {
    let grid = GridSpec::new(16, 6.0).unwrap();
    let f = bump(grid, 1.0).scaled(C64::new(2.0, 0.0));
    let v = PotentialField::assemble(&small_potential(0.5), &grid).unwrap();
    for nl in [CubicNonlinearity::beta_form(), CubicNonlinearity::None] {
        let u = pointwise_substep(&f, Some(&v), &nl, 0.4).unwrap();
        for idx in 0..grid.len() {
            let (a, b) = (spinor_norm_sq(&f.get(idx)), spinor_norm_sq(&u.get(idx)));
            assert!((a - b).abs() <= 1e-12 * a.max(1e-300));
        }
    }
}

#[test]
fn beta_form_nonlinearity_value() {
    let nl = CubicNonlinearity::beta_form();
    let u = [C64::new(1.0, 1.0), C64::new(0.0, 0.5), C64::new(0.3, 0.0), C64::new(0.0, -1.0)];
    let n = beta_form(&u);
    assert!((n - (2.0 + 0.25 - 0.09 - 1.0)).abs() < 1e-15);
    let p = nl.eval(&u);
    for c in 0..4 {
        assert!((p[c] - u[c] * n).norm() < 1e-15);
    }
}

#[test]
fn strang_splitting_is_second_order() {
    let grid = GridSpec::new(16, 8.0).unwrap();
    let f = bump(grid, 1.2).scaled(C64::new(0.8, 0.0));
    let v = PotentialField::assemble(&small_potential(0.3), &grid).unwrap();
    let nl = CubicNonlinearity::beta_form();
    let t = 0.4;
    let run = |dt: f64| {
        let cfg = EvolutionConfig::uniform(dt, t, Scheme::Strang, 1).with_snapshots();
        evolve(&f, Some(&v), &nl, &cfg).unwrap().snapshots.pop().unwrap().1
    };
    let dt = 0.1;
    let reference = run(dt / 64.0);
    let e1 = run(dt).sub(&reference).unwrap().l2_norm();
    let e2 = run(dt / 2.0).sub(&reference).unwrap().l2_norm();
    let order = (e1 / e2).log2();
    assert!(order >= 1.8, "observed order {order}");
}

#[test]
fn zero_data_stays_zero() {
    let grid = GridSpec::new(8, 6.0).unwrap();
    let v = PotentialField::assemble(&small_potential(0.1), &grid).unwrap();
    let cfg = EvolutionConfig::uniform(0.1, 1.0, Scheme::Strang, 4);
    let traj = evolve(&SpinorField3D::zeros(grid), Some(&v), &CubicNonlinearity::beta_form(), &cfg).unwrap();
    assert!(traj.records.iter().all(|r| r.l2 == 0.0 && r.h1 == 0.0 && r.linf == 0.0));
}

#[test]
fn free_run_keeps_h1_constant() {
    let grid = GridSpec::new(16, 6.0).unwrap();
    let f = random_band_limited(&grid, 0.6, &mut rng(3));
    let cfg = EvolutionConfig::uniform(0.05, 1.0, Scheme::Lie, 5);
    let traj = evolve(&f, None, &CubicNonlinearity::None, &cfg).unwrap();
    let h0 = traj.records[0].h1;
    assert!(traj.records.iter().all(|r| (r.h1 / h0 - 1.0).abs() < 1e-10));
}

#[test]
fn beta_form_conserves_l2_up_to_t10() {
    let grid = GridSpec::new(32, 24.0).unwrap();
    let data = DataSpec::new(DataRecipe::Gaussian {
        amplitude: 1.0,
        width: 1.5,
        center: [0.0; 3],
        spinor: None,
    })
    .with_h1_norm(0.1);
    let f = data.build_field(&grid).unwrap();
    let cfg = EvolutionConfig::uniform(0.05, 10.0, Scheme::Strang, 10).with_support_radius(data.support_radius().unwrap());
    let traj = evolve(&f, None, &CubicNonlinearity::beta_form(), &cfg).unwrap();
    let l0 = traj.records[0].l2;
    let drift = traj.records.iter().map(|r| (r.l2 / l0 - 1.0).abs()).fold(0.0, f64::max);
    assert!(drift < 1e-6, "{drift}");
}

#[test]
fn causality_guard_and_blowup_signal() {
    let grid = GridSpec::new(8, 4.0).unwrap();
    let f = bump(grid, 0.5);
    let cfg = EvolutionConfig::uniform(0.1, 3.0, Scheme::Strang, 1).with_support_radius(2.0);
    assert!(evolve(&f, None, &CubicNonlinearity::None, &cfg).is_err());
    let big = f.scaled(C64::new(1e3, 0.0));
    let cfg = EvolutionConfig::uniform(0.5, 2.0, Scheme::Strang, 1);
    let err = evolve(&big, None, &CubicNonlinearity::non_gauge_example(), &cfg).unwrap_err();
    assert!(err.is_blowup(), "{err}");
}
