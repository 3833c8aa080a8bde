//! Self-contained experiment drivers shared by the command line and the
//! acceptance suite: algebra and free-flow identities, partial-wave
//! structure, radial/3D cross-validation and the long-time small-data runs.

use std::f64::consts::PI;

use log::info;
use serde::{Deserialize, Serialize};

use crate::clifford::{apply_dirac, apply_multiplier, laplacian, symbols, verify_algebra, AlgebraReport, DiracMatrices};
use crate::data::{complex_normal, random_band_limited, rng, DataRecipe, DataSpec};
use crate::error::{Error, Result};
use crate::field::SpinorField3D;
use crate::grid::{norm3, GridSpec};
use crate::partialwave::{
    build_basis, dirac_action_check, evolve_radial, lift, reduce_nonlinearity, sector_potential, BoundaryClosure,
    QuantumNumbers, RadialConfig, RadialOperator, RadialProblem, RadialSpinorState, MAX_TWO_J,
};
use crate::potential::{check_admissibility, AdmissibilityReport, PotentialClass, PotentialField, PotentialSpec, RadialProfile};
use crate::propagator::{evolve_observed, free_propagate, CubicNonlinearity, EvolutionConfig, Scheme};
use crate::sphere::SphereGrid;
use crate::{Spinor, C64, I};

#[derive(Debug, Clone, Serialize)]
pub struct AlgebraSuite {
    pub algebra: AlgebraReport,
    /// `max ||D^2 f + Lap f|| / ||Lap f||` over the random fields.
    pub dirac_square_residual: f64,
    pub fields: usize,
}

/// Matrix identities plus `D^2 = -Lap` on `fields` random band-limited fields.
pub fn algebra_suite(fields: usize, n: usize, seed: u64) -> Result<AlgebraSuite> {
    let grid = GridSpec::new(n, PI)?;
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..fields {
        let f = random_band_limited(&grid, 0.9, &mut r);
        let lap = laplacian(&f);
        let mut dd = apply_dirac(&apply_dirac(&f));
        dd.axpy(C64::new(1.0, 0.0), &lap)?;
        worst = worst.max(dd.l2_norm() / lap.l2_norm());
    }
    Ok(AlgebraSuite {
        algebra: verify_algebra(&DiracMatrices::standard()),
        dirac_square_residual: worst,
        fields,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct FreeFlowSuite {
    /// `max_t | ||e^{itD} f|| / ||f|| - 1 |`.
    pub unitarity_drift: f64,
    /// `max ||e^{itD} e^{isD} f - e^{i(t+s)D} f|| / ||f||`.
    pub group_law: f64,
    /// Agreement with `cos(t|D|) f + sin(t|D|)/|D| (i D f)`, relative.
    pub wave_oracle: f64,
    /// Largest value outside `|x| <= R + t + 4h`, relative to the peak.
    pub propagation_leakage: f64,
    pub support_radius: f64,
}

/// Relative tail level defining the support radius of the free-flow data.
const FREE_FLOW_TAIL: f64 = 1e-12;

/// Free-flow identities on a random-spinor Gaussian with a degree-one tilt.
pub fn free_flow_suite(n: usize, half_width: f64, times: &[f64], seed: u64) -> Result<FreeFlowSuite> {
    let grid = GridSpec::new(n, half_width)?;
    let mut r = rng(seed);
    let a: Spinor = std::array::from_fn(|_| complex_normal(&mut r));
    let b: Spinor = std::array::from_fn(|_| complex_normal(&mut r));
    // Wide enough that the spectrum decays below the tail level at Nyquist.
    let w = 2.6 * grid.spacing();
    let f = SpinorField3D::from_fn(grid, |x| {
        let g = (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / (2.0 * w * w)).exp();
        std::array::from_fn(|c| (a[c] + b[c] * (x[0] / w)) * g)
    });
    // |1 + x/w| e^{-r^2/2w^2} <= (1 + r/w) e^{-r^2/2w^2}
    let support = (1..)
        .map(|k| k as f64 * 0.01 * w)
        .find(|r| (1.0 + r / w) * (-r * r / (2.0 * w * w)).exp() < FREE_FLOW_TAIL)
        .expect("Gaussian tail");
    let n0 = f.l2_norm();
    let peak = f.sup_norm();
    let df = apply_dirac(&f).scaled(I);
    let mut out = FreeFlowSuite {
        unitarity_drift: 0.0,
        group_law: 0.0,
        wave_oracle: 0.0,
        propagation_leakage: 0.0,
        support_radius: support,
    };
    for &t in times {
        if t + support >= half_width {
            return Err(Error::InvalidConfig(format!(
                "t = {t} with data radius {support:.3} violates the causality guard at L = {half_width}"
            )));
        }
        let u = free_propagate(&f, t);
        out.unitarity_drift = out.unitarity_drift.max((u.l2_norm() / n0 - 1.0).abs());
        let half = free_propagate(&free_propagate(&f, 0.5 * t), 0.5 * t);
        out.group_law = out.group_law.max(half.sub(&u)?.l2_norm() / n0);
        let mut wave = apply_multiplier(&f, symbols::cos_t(t))?;
        wave.axpy(C64::new(1.0, 0.0), &apply_multiplier(&df, symbols::sin_over_abs(t))?)?;
        out.wave_oracle = out.wave_oracle.max(wave.relative_l2_distance(&u)?);
        let radius = support + t + 4.0 * grid.spacing();
        let mut tail = 0.0f64;
        for idx in 0..grid.len() {
            if norm3(&grid.point(idx)) > radius {
                tail = tail.max(u.get(idx).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt());
            }
        }
        out.propagation_leakage = out.propagation_leakage.max(tail / peak);
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct PartialWaveSuite {
    pub sectors: usize,
    pub orthonormality: f64,
    /// Off-sector part of `D(g Phi+-)` over the `j = 1/2` sectors.
    pub dirac_leakage: f64,
    /// Fitted `(kappa, a, b)` per `j = 1/2` sector.
    pub fitted: Vec<(i32, f64, f64)>,
    /// Off-sector part of `V Phi+-` for a structured potential.
    pub potential_leakage: f64,
    /// Off-sector part of `<beta u, u> u` for random `j = 1/2` states.
    pub p3_leakage: f64,
    /// Angular fluctuation of `<beta u, u>` relative to its mean magnitude.
    pub beta_fluctuation: f64,
    /// `(c+, c-)` in `<beta u,u> = c+ |u+|^2 + c- |u-|^2`, per sector.
    pub beta_coefficients: Vec<(i32, f64, f64)>,
}

/// Basis, invariance and nonlinearity checks of the partial-wave sectors.
pub fn partial_wave_suite(seed: u64) -> Result<PartialWaveSuite> {
    let sphere = SphereGrid::new(16);
    let mut orth = 0.0f64;
    let mut sectors = 0;
    for two_j in (1..=MAX_TWO_J).step_by(2) {
        for qn in QuantumNumbers::all_for(two_j) {
            orth = orth.max(build_basis(qn, &sphere)?.orthonormality_residual());
            sectors += 1;
        }
    }
    let grid = GridSpec::new(48, 10.0)?;
    let small = SphereGrid::new(6);
    let radii: Vec<f64> = (1..20).map(|k| 0.2 * k as f64).collect();
    let spec = PotentialSpec::radial(
        RadialProfile::GaussianBump {
            amplitude: 0.3,
            width: 1.2,
            center: 0.5,
        },
        RadialProfile::OddGaussian {
            amplitude: 0.2,
            width: 1.0,
        },
    );
    let mut r = rng(seed);
    let mut out = PartialWaveSuite {
        sectors,
        orthonormality: orth,
        dirac_leakage: 0.0,
        fitted: Vec::new(),
        potential_leakage: 0.0,
        p3_leakage: 0.0,
        beta_fluctuation: 0.0,
        beta_coefficients: Vec::new(),
    };
    for qn in QuantumNumbers::all_for(1) {
        let pair = build_basis(qn, &small)?;
        let rep = dirac_action_check(&pair, &grid, 1.0, 1.0, &radii)?;
        out.dirac_leakage = out.dirac_leakage.max(rep.leakage);
        out.fitted.push((qn.kappa, rep.a, rep.b));
        let full = build_basis(qn, &sphere)?;
        for &rr in &radii {
            out.potential_leakage = out.potential_leakage.max(sector_potential(&full, &spec, rr).1);
        }
        let rs: Vec<f64> = (0..16).map(|k| 0.25 * (k + 1) as f64).collect();
        let up = rs.iter().map(|_| complex_normal(&mut r)).collect();
        let um = rs.iter().map(|_| complex_normal(&mut r)).collect();
        let state = RadialSpinorState::new(qn, rs, up, um)?;
        let red = reduce_nonlinearity(&state, &full)?;
        out.p3_leakage = out.p3_leakage.max(red.p3_leakage);
        for (i, fl) in red.fluctuation.iter().enumerate() {
            let mag = (state.u_plus[i].norm_sqr() + state.u_minus[i].norm_sqr()) / (4.0 * PI);
            out.beta_fluctuation = out.beta_fluctuation.max(fl / mag);
        }
        out.beta_coefficients.push((qn.kappa, red.coefficients.0, red.coefficients.1));
    }
    Ok(out)
}

/// Matched radial and 3D evolutions of `j = 1/2` sector data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CrossConfig {
    pub grid_n: usize,
    pub half_width: f64,
    pub radial_dr: f64,
    pub radial_r_max: f64,
    pub dt: f64,
    pub t_final: f64,
    pub records: usize,
    pub data: DataSpec,
    pub potential: PotentialSpec,
    pub nonlinearity: CubicNonlinearity,
    /// Grid of the radial-operator fit.
    pub fit_grid_n: usize,
    pub fit_half_width: f64,
}

impl Default for CrossConfig {
    fn default() -> Self {
        Self {
            grid_n: 64,
            half_width: 16.0,
            radial_dr: 1.0 / 64.0,
            radial_r_max: 24.0,
            dt: 0.005,
            t_final: 1.0,
            records: 4,
            data: DataSpec::new(DataRecipe::Sector {
                two_j: 1,
                two_m: 1,
                kappa: 1,
                amplitude_plus: 1.0,
                amplitude_minus: 0.5,
                width: 1.5,
            })
            .with_h1_norm(0.5),
            potential: small_potential(0.0025),
            nonlinearity: CubicNonlinearity::BetaForm { coupling: 1.0 },
            fit_grid_n: 48,
            fit_half_width: 10.0,
        }
    }
}

/// Structured Gaussian potential scaled to `amplitude`.
pub fn small_potential(amplitude: f64) -> PotentialSpec {
    PotentialSpec::radial(
        RadialProfile::GaussianBump {
            amplitude,
            width: 1.5,
            center: 0.0,
        },
        RadialProfile::OddGaussian {
            amplitude: 0.5 * amplitude,
            width: 1.5,
        },
    )
}

impl CrossConfig {
    /// Joint dyadic refinement of the 3D grid, the radial grid and the step.
    pub fn refined(&self) -> Self {
        Self {
            grid_n: 2 * self.grid_n,
            radial_dr: 0.5 * self.radial_dr,
            dt: 0.5 * self.dt,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CrossReport {
    /// `(t, ||lift(u_rad) - u_3d|| / ||u_3d||)`.
    pub rows: Vec<(f64, f64)>,
    pub fitted: (f64, f64),
    pub admissibility: AdmissibilityReport,
}

impl CrossReport {
    pub fn final_discrepancy(&self) -> f64 {
        self.rows.last().map(|r| r.1).unwrap_or(0.0)
    }

    pub fn max_discrepancy(&self) -> f64 {
        self.rows.iter().map(|r| r.1).fold(0.0, f64::max)
    }
}

/// Runs the radial solver (with the operator fitted from the 3D action) and
/// the 3D split-step solver from the same data and compares them.
pub fn cross_validate(cfg: &CrossConfig) -> Result<CrossReport> {
    let qn = cfg
        .data
        .sector()
        .ok_or_else(|| Error::InvalidConfig("cross-validation needs sector data".into()))?;
    if qn.two_j != 1 {
        return Err(Error::NotApplicable("cross-validation is defined for j = 1/2 sectors".into()));
    }
    let grid = GridSpec::new(cfg.grid_n, cfg.half_width)?;
    let admissibility = check_admissibility(&cfg.potential, &grid)?;
    let pair = build_basis(qn, &SphereGrid::new(16))?;
    let fit_grid = GridSpec::new(cfg.fit_grid_n, cfg.fit_half_width)?;
    let fit_radii: Vec<f64> = (1..20).map(|k| 0.2 * k as f64).collect();
    let fit = dirac_action_check(&build_basis(qn, &SphereGrid::new(6))?, &fit_grid, 1.0, 1.0, &fit_radii)?;
    let op = RadialOperator::from_fit(&fit, 1e-3)?;
    let rcfg = RadialConfig {
        dr: cfg.radial_dr,
        r_max: cfg.radial_r_max,
        closure: BoundaryClosure::ZeroExtension,
    };
    let problem = RadialProblem::new(&pair, op, rcfg, &cfg.potential, &cfg.nonlinearity)?;
    let state = cfg.data.build_radial(problem.radii().to_vec())?;
    let mut ecfg = EvolutionConfig::uniform(cfg.dt, cfg.t_final, Scheme::Strang, cfg.records).with_snapshots();
    if let Some(r) = cfg.data.support_radius() {
        ecfg = ecfg.with_support_radius(r);
    }
    let radial = evolve_radial(&state, &problem, &ecfg)?;
    let f = cfg.data.build_field(&grid)?;
    let field = PotentialField::assemble(&cfg.potential, &grid)?;
    let v = (!cfg.potential.is_zero()).then_some(&field);
    let mut rows = Vec::new();
    let mut k = 0;
    evolve_observed(&f, v, &cfg.nonlinearity, &ecfg, |t, u| {
        let lifted = lift(&radial.snapshots[k].1, &grid)?;
        k += 1;
        let n = u.l2_norm();
        let d = if n > 0.0 { lifted.sub(u)?.l2_norm() / n } else { lifted.l2_norm() };
        info!("cross-validation t = {t:.4}: discrepancy {d:.3e}");
        rows.push((t, d));
        Ok(())
    })?;
    Ok(CrossReport {
        rows,
        fitted: (fit.a, fit.b),
        admissibility,
    })
}

/// Long-time small-data runs in a `j = 1/2` sector and in 3D.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GlobalConfig {
    pub t_final: f64,
    pub h1_norm: f64,
    pub potential: PotentialSpec,
    pub nonlinearity: CubicNonlinearity,
    pub records: usize,
    pub radial_data: DataSpec,
    pub radial_dr: f64,
    pub radial_r_max: f64,
    pub angular_data: DataSpec,
    pub grid_n: usize,
    pub half_width: f64,
    pub dt: f64,
}

impl Default for GlobalConfig {
    fn default() -> Self {
        Self {
            t_final: 50.0,
            h1_norm: 1e-2,
            potential: small_potential(0.0025),
            nonlinearity: CubicNonlinearity::BetaForm { coupling: 1.0 },
            records: 100,
            radial_data: DataSpec::new(DataRecipe::Sector {
                two_j: 1,
                two_m: 1,
                kappa: 1,
                amplitude_plus: 1.0,
                amplitude_minus: 0.5,
                width: 1.5,
            }),
            radial_dr: 1.0 / 16.0,
            radial_r_max: 64.0,
            angular_data: DataSpec::new(DataRecipe::AngularGaussian {
                amplitude: 1.0,
                width: 3.0,
                tilt: 0.3,
            }),
            grid_n: 80,
            half_width: 80.0,
            dt: 0.1,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GlobalRun {
    pub initial_h1: f64,
    pub max_h1: f64,
    /// `(t, ||u(t)||_{H^1})`.
    pub h1: Vec<(f64, f64)>,
    /// `None` when the run completed, else the solver's blowup message.
    pub blowup: Option<String>,
}

impl GlobalRun {
    pub fn growth(&self) -> f64 {
        self.max_h1 / self.initial_h1
    }

    fn from_h1(h1: Vec<(f64, f64)>, blowup: Option<String>) -> Self {
        let initial_h1 = h1.first().map(|r| r.1).unwrap_or(0.0);
        let max_h1 = h1.iter().map(|r| r.1).fold(0.0, f64::max);
        Self {
            initial_h1,
            max_h1,
            h1,
            blowup,
        }
    }
}

fn catch_blowup<T>(r: Result<T>) -> Result<Option<String>> {
    match r {
        Ok(_) => Ok(None),
        Err(e @ Error::SolverBlowup { .. }) => Ok(Some(e.to_string())),
        Err(e) => Err(e),
    }
}

impl GlobalConfig {
    pub fn with_h1_norm(&self, n: f64) -> Self {
        Self {
            h1_norm: n,
            ..self.clone()
        }
    }

    pub fn radial_refined(&self) -> Self {
        Self {
            radial_dr: 0.5 * self.radial_dr,
            ..self.clone()
        }
    }

    pub fn dt_refined(&self) -> Self {
        Self {
            dt: 0.5 * self.dt,
            ..self.clone()
        }
    }
}

/// The sector run with the radial solver; RK4 at half the CFL limit.
pub fn global_radial(cfg: &GlobalConfig) -> Result<GlobalRun> {
    let data = cfg.radial_data.clone().with_h1_norm(cfg.h1_norm);
    let qn = data
        .sector()
        .ok_or_else(|| Error::InvalidConfig("the radial run needs sector data".into()))?;
    let pair = build_basis(qn, &SphereGrid::new(16))?;
    let rcfg = RadialConfig {
        dr: cfg.radial_dr,
        r_max: cfg.radial_r_max,
        closure: BoundaryClosure::ZeroExtension,
    };
    let problem = RadialProblem::new(&pair, RadialOperator::for_sector(&qn), rcfg, &cfg.potential, &cfg.nonlinearity)?;
    let state = data.build_radial(problem.radii().to_vec())?;
    let ecfg = EvolutionConfig::uniform(0.5 * cfg.radial_dr, cfg.t_final, Scheme::Strang, cfg.records);
    let mut h1 = Vec::new();
    let res = crate::partialwave::evolve_radial_observed(&state, &problem, &ecfg, |t, rec, _| {
        h1.push((t, rec.h1));
        Ok(())
    });
    let blowup = catch_blowup(res)?;
    Ok(GlobalRun::from_h1(h1, blowup))
}

/// The 3D run with angularly regular, non-radial data.
pub fn global_3d(cfg: &GlobalConfig) -> Result<GlobalRun> {
    let grid = GridSpec::new(cfg.grid_n, cfg.half_width)?;
    let data = cfg.angular_data.clone().with_h1_norm(cfg.h1_norm);
    let f = data.build_field(&grid)?;
    let field = PotentialField::assemble(&cfg.potential, &grid)?;
    let v = (!cfg.potential.is_zero()).then_some(&field);
    let mut ecfg = EvolutionConfig::uniform(cfg.dt, cfg.t_final, Scheme::Strang, cfg.records);
    if let Some(r) = data.support_radius() {
        ecfg = ecfg.with_support_radius(r);
    }
    let mut h1 = Vec::new();
    let res = evolve_observed(&f, v, &cfg.nonlinearity, &ecfg, |t, u| {
        h1.push((t, crate::clifford::sobolev_norm(u, 1.0, false)));
        Ok(())
    });
    let blowup = catch_blowup(res)?;
    Ok(GlobalRun::from_h1(h1, blowup))
}

/// Admissibility of the global-run potential in every class on the 3D grid.
pub fn global_admissibility(cfg: &GlobalConfig) -> Result<Vec<AdmissibilityReport>> {
    let grid = GridSpec::new(cfg.grid_n, cfg.half_width)?;
    [PotentialClass::Vhp, PotentialClass::AssNablaV2, PotentialClass::AngularNablaAngV2]
        .into_iter()
        .map(|c| check_admissibility(&cfg.potential.clone().with_class(c), &grid))
        .collect()
}
