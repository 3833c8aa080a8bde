//! Ensemble verification of the linear estimates.
//!
//! Each estimate `LHS <~ RHS` is turned into a bounded-ratio property: over
//! a seeded ensemble of data the ratio `LHS / RHS` must be finite, below a
//! declared cap, and grow by less than 25% when the worst samples are re-run
//! at one dyadic refinement of the space and time resolution.
//!
//! | id              | flow                     | LHS                                  | RHS                          |
//! |-----------------|--------------------------|--------------------------------------|------------------------------|
//! | `homdir`        | free, radial sectors     | `L^2_t L^inf_x`                      | `||f||_{H^1-dot}`            |
//! | `stdir`         | free + source, sectors   | `L^2_t L^inf_x` of the Duhamel term  | `||<x>^{1/2+}|D|F||_{L^2_tx}` |
//! | `endV`          | `D + V`, sectors         | `L^2_t L^inf_x`                      | `||f||_{H^1}`                |
//! | `smoothing`     | `D + V`, sectors         | `||w^{-1/2} u||_{L^2_tx}`            | `||f||_{L^2}`                |
//! | `smoothing_grad`| `D + V`, sectors         | `||w^{-1/2} grad u||_{L^2_tx}`       | `||f||_{H^1-dot}`            |
//! | `freedirac`     | free, 3D                 | `L^2_t L^inf_r L^2_w` of `Lambda^s u`| `||Lambda^s f||_{H^1-dot}`   |
//! | `non2`          | free + source, 3D        | as `freedirac`, Duhamel term         | `||<x>^{1/2+}|D|Lambda^s F||` |
//! | `enddiracV`     | `D + V`, 3D              | `L^2_t L^inf_r L^2_w`                | `||f||_{H^1}`                |
//! | `enddiracVang`  | `D + V`, 3D              | as `freedirac`                       | `||Lambda^s f||_{H^1}`       |
//! | `energyang`     | `D + V`, 3D              | `L^inf_t H^1` of `Lambda^s u`        | `||Lambda^s f||_{H^1}`       |
//! | `mnnop`         | `e^{it|D|}`, scalar 3D   | `L^2_t L^inf_r L^p_w`, per `p`       | `|| |D| f||_{L^2}`           |

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use log::{info, warn};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::angular::{sphere_lp, weighted_angular_l2};
use super::mixed::{spatial_norm, time_norm, NormContext, SpaceNorm, TimeExponent};
use super::report::{log_log_slope, max_ratio_by_param, NormReport, NormSample, REFINEMENT_GROWTH_LIMIT};
use super::weights::{w_sigma_half, DEFAULT_EPSILON, DEFAULT_SIGMA};
use crate::clifford::{alpha_dot_apply, apply_multiplier, sobolev_norm, spinor_inner, symbols};
use crate::data::{complex_normal, rng, RadialBump};
use crate::error::{Error, Result};
use crate::field::{ScalarField3D, SpinorField3D};
use crate::fingerprint::fingerprint;
use crate::grid::{norm3, GridSpec};
use crate::interp::{lagrange_eval_scalar, SamplingMethod};
use crate::partialwave::{
    build_basis, evolve_radial_observed, AngularBasisPair, BoundaryClosure, QuantumNumbers, RadialConfig,
    RadialOperator, RadialProblem, RadialSource, RadialSpinorState, TimeEnvelope,
};
use crate::potential::{
    check_admissibility, AngularPerturbation, HermitianGenerator, PotentialClass, PotentialField, PotentialSpec,
    RadialProfile,
};
use crate::propagator::{evolve_observed, same_step, free_propagate, CubicNonlinearity, EvolutionConfig, FreeFlow, Scheme};
use crate::sphere::{sph_harm, SphereGrid};
use crate::{Spinor, C64, I, ZERO};

/// Largest acceptable log-log slope of the max ratio against `p` for `mnnop`.
pub const MNNOP_SLOPE_LIMIT: f64 = 0.6;

/// Attempts per ensemble slot before a zero right side becomes an error.
const MAX_RESAMPLE: usize = 8;

/// Band limit of the sphere grid on which sector data is maximised.
const SUP_BAND_LIMIT: usize = 8;

/// Data radius, in widths, beyond which solid-harmonic Gaussians count as zero.
const SOLID_SUPPORT_WIDTHS: f64 = 7.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EstimateId {
    #[serde(rename = "homdir")]
    Homdir,
    #[serde(rename = "stdir")]
    Stdir,
    #[serde(rename = "endV")]
    EndV,
    #[serde(rename = "smoothing")]
    Smoothing,
    #[serde(rename = "smoothing_grad")]
    SmoothingGrad,
    #[serde(rename = "freedirac")]
    FreeDirac,
    #[serde(rename = "non2")]
    Non2,
    #[serde(rename = "enddiracV")]
    EndDiracV,
    #[serde(rename = "enddiracVang")]
    EndDiracVAng,
    #[serde(rename = "energyang")]
    EnergyAng,
    #[serde(rename = "mnnop")]
    Mnnop,
}

impl EstimateId {
    pub const ALL: [EstimateId; 11] = [
        EstimateId::Homdir,
        EstimateId::Stdir,
        EstimateId::EndV,
        EstimateId::Smoothing,
        EstimateId::SmoothingGrad,
        EstimateId::FreeDirac,
        EstimateId::Non2,
        EstimateId::EndDiracV,
        EstimateId::EndDiracVAng,
        EstimateId::EnergyAng,
        EstimateId::Mnnop,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EstimateId::Homdir => "homdir",
            EstimateId::Stdir => "stdir",
            EstimateId::EndV => "endV",
            EstimateId::Smoothing => "smoothing",
            EstimateId::SmoothingGrad => "smoothing_grad",
            EstimateId::FreeDirac => "freedirac",
            EstimateId::Non2 => "non2",
            EstimateId::EndDiracV => "enddiracV",
            EstimateId::EndDiracVAng => "enddiracVang",
            EstimateId::EnergyAng => "energyang",
            EstimateId::Mnnop => "mnnop",
        }
    }

    /// Hypothesis the potential must satisfy, for estimates with a potential.
    pub fn potential_class(self) -> Option<PotentialClass> {
        match self {
            EstimateId::EndV | EstimateId::Smoothing | EstimateId::SmoothingGrad => Some(PotentialClass::Vhp),
            EstimateId::EndDiracV => Some(PotentialClass::AssNablaV2),
            EstimateId::EndDiracVAng | EstimateId::EnergyAng => Some(PotentialClass::AngularNablaAngV2),
            _ => None,
        }
    }

    /// True for estimates evaluated with the partial-wave solver.
    pub fn is_radial(self) -> bool {
        matches!(
            self,
            EstimateId::Homdir | EstimateId::Stdir | EstimateId::EndV | EstimateId::Smoothing | EstimateId::SmoothingGrad
        )
    }
}

impl fmt::Display for EstimateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EstimateId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EstimateId::ALL
            .into_iter()
            .find(|id| id.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                let names: Vec<_> = EstimateId::ALL.iter().map(|i| i.name()).collect();
                Error::InvalidConfig(format!("unknown estimate {s:?}; expected one of {}", names.join(", ")))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnsembleSpec {
    pub size: usize,
    pub seed: u64,
    /// Declared bound on every ratio.
    pub cap: f64,
    pub refine: bool,
    /// Number of worst samples re-run at the refined resolution.
    pub refine_top: usize,
}

impl Default for EnsembleSpec {
    fn default() -> Self {
        Self {
            size: 20,
            seed: 1,
            cap: 100.0,
            refine: true,
            refine_top: 3,
        }
    }
}

impl EnsembleSpec {
    pub fn validate(&self) -> Result<()> {
        if self.size == 0 {
            return Err(Error::InvalidConfig("ensemble size must be positive".into()));
        }
        if !(self.cap > 0.0) {
            return Err(Error::InvalidConfig("ratio cap must be positive".into()));
        }
        if self.refine && self.refine_top == 0 {
            return Err(Error::InvalidConfig("refine_top must be positive when refining".into()));
        }
        Ok(())
    }
}

/// Resolution and physics of the flows behind each estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlowConfig {
    pub grid_n: usize,
    pub half_width: f64,
    pub dt: f64,
    pub record_dt: f64,
    pub radial_dr: f64,
    /// Horizon of the sector flows; 3D flows run to the causality limit.
    pub radial_t_final: f64,
    pub angular_order: f64,
    pub band_limit: usize,
    pub p_values: Vec<f64>,
    pub sigma: f64,
    pub epsilon: f64,
    /// Include the `D f2` part of sector data.
    pub dirac_part: bool,
    /// Structured potential used by every estimate with a potential.
    pub potential: PotentialSpec,
    /// Non-radial term added for the 3D estimates with a potential.
    pub angular_perturbation: Option<AngularPerturbation>,
    /// Grid for the weighted source norm of `stdir`.
    pub rhs_grid_n: usize,
    pub rhs_half_width: f64,
}

pub fn default_potential() -> PotentialSpec {
    PotentialSpec::radial(
        RadialProfile::GaussianBump {
            amplitude: 0.0025,
            width: 1.5,
            center: 0.0,
        },
        RadialProfile::OddGaussian {
            amplitude: 0.00125,
            width: 1.5,
        },
    )
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            grid_n: 32,
            half_width: 12.0,
            dt: 0.05,
            record_dt: 0.1,
            radial_dr: 1.0 / 32.0,
            radial_t_final: 12.0,
            angular_order: 1.5,
            band_limit: 10,
            p_values: vec![2.0, 4.0, 8.0, 16.0],
            sigma: DEFAULT_SIGMA,
            epsilon: DEFAULT_EPSILON,
            dirac_part: true,
            potential: default_potential(),
            angular_perturbation: Some(AngularPerturbation {
                amplitude: 0.0002,
                width: 1.5,
                axis: 0,
                generator: HermitianGenerator::Beta,
                band_limit: 1,
            }),
            rhs_grid_n: 64,
            rhs_half_width: 14.0,
        }
    }
}

impl FlowConfig {
    /// One dyadic refinement of every space and time resolution.
    pub fn refined(&self) -> Self {
        Self {
            grid_n: 2 * self.grid_n,
            dt: 0.5 * self.dt,
            record_dt: 0.5 * self.record_dt,
            radial_dr: 0.5 * self.radial_dr,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if self.grid_n < 8 || self.grid_n % 2 != 0 {
            return bad("grid_n must be even and at least 8");
        }
        if !(self.half_width > 0.0 && self.dt > 0.0 && self.record_dt > 0.0 && self.radial_dr > 0.0) {
            return bad("widths and steps must be positive");
        }
        if self.record_dt > 10.0 * self.dt {
            return bad("record_dt may be at most 10 dt");
        }
        if !(self.radial_t_final > 0.0) {
            return bad("radial_t_final must be positive");
        }
        if self.angular_order < 0.0 {
            return bad("angular_order must be nonnegative");
        }
        if self.p_values.iter().any(|p| !(*p >= 2.0 && p.is_finite())) {
            return bad("p_values must lie in [2, inf)");
        }
        if !(self.sigma > 1.0 && self.epsilon > 0.0) {
            return bad("weights need sigma > 1 and epsilon > 0");
        }
        if !self.potential.is_structured() {
            return bad("the flow potential must be structured; use angular_perturbation for the non-radial part");
        }
        Ok(())
    }

    fn grid(&self) -> Result<GridSpec> {
        GridSpec::new(self.grid_n, self.half_width)
    }

    fn norm_context(&self) -> NormContext {
        NormContext {
            sphere: SphereGrid::new(self.band_limit),
            method: SamplingMethod::Lagrange { order: 6 },
            shell_spacing: 0.5,
            radial_density: 2.0,
            sigma: self.sigma,
            epsilon: self.epsilon,
        }
    }

    /// The potential of estimate `id` with its target class, or `None`.
    pub fn potential_for(&self, id: EstimateId) -> Option<PotentialSpec> {
        let class = id.potential_class()?;
        let mut spec = self.potential.clone().with_class(class);
        spec.sigma = self.sigma;
        spec.epsilon = self.epsilon;
        if !id.is_radial() {
            if let Some(p) = &self.angular_perturbation {
                spec = spec.with_perturbation(p.clone());
            }
        }
        Some(spec)
    }
}

/// Rejects potentials that fail the hypothesis of `id` on the base grid.
pub fn admissibility_gate(id: EstimateId, flow: &FlowConfig) -> Result<Option<PotentialSpec>> {
    let Some(spec) = flow.potential_for(id) else {
        return Ok(None);
    };
    let report = check_admissibility(&spec, &flow.grid()?)?;
    if !report.passed {
        return Err(Error::InvalidConfig(format!(
            "potential is not admissible for {id}: sup ratio {:.3e} (bound {:.3e}), gradient ratio {:.3e} (bound {:.3e})",
            report.sup_ratio, report.delta, report.sup_gradient_ratio, report.gradient_bound
        )));
    }
    Ok(Some(spec))
}

/// Deterministic seed of ensemble slot `index`, attempt `attempt`.
fn sample_seed(seed: u64, index: usize, attempt: usize) -> u64 {
    seed.wrapping_mul(1_000_003)
        .wrapping_add(index as u64 * 64)
        .wrapping_add(attempt as u64)
}

struct Row {
    param: Option<f64>,
    lhs: f64,
    rhs: f64,
    rhs_alt: Option<f64>,
}

struct Outcome {
    rows: Vec<Row>,
    t_max: f64,
}

/// Runs the ensemble for estimate `id` and applies the pass rule.
pub fn verify_estimate(id: EstimateId, ensemble: &EnsembleSpec, flow: &FlowConfig) -> Result<NormReport> {
    ensemble.validate()?;
    flow.validate()?;
    let potential = admissibility_gate(id, flow)?;
    let fp = fingerprint(&(id, ensemble, flow));
    let base = Evaluator::new(id, flow, potential.as_ref())?;
    let mut samples = Vec::new();
    let mut notes = Vec::new();
    let mut worst: Vec<(usize, u64, f64)> = Vec::new();
    let mut t_max = f64::INFINITY;
    for index in 0..ensemble.size {
        let mut attempt = 0;
        let (seed, out) = loop {
            let seed = sample_seed(ensemble.seed, index, attempt);
            let out = base.evaluate(seed)?;
            if out.rows.iter().all(|r| r.rhs > 0.0 && r.rhs.is_finite()) {
                break (seed, out);
            }
            warn!("{id}: sample {index} (seed {seed}) has a vanishing right side; resampling");
            notes.push(format!("sample {index} seed {seed} resampled: zero RHS"));
            attempt += 1;
            if attempt >= MAX_RESAMPLE {
                return Err(Error::OutOfRange(format!(
                    "{id}: {MAX_RESAMPLE} consecutive samples with zero RHS"
                )));
            }
        };
        t_max = t_max.min(out.t_max);
        let rows = to_samples(0, index, seed, out.rows);
        let m = rows.iter().map(|s| s.ratio).fold(f64::NEG_INFINITY, f64::max);
        info!("{id}: sample {index} max ratio {m:.4e}");
        worst.push((index, seed, m));
        samples.extend(rows);
    }
    let finite = samples.iter().all(|s| s.ratio.is_finite());
    let max_ratio = samples.iter().map(|s| s.ratio).fold(0.0, f64::max);
    let alts: Vec<f64> = samples.iter().filter_map(|s| s.ratio_alt).collect();
    let max_ratio_alt = (!alts.is_empty()).then(|| alts.iter().cloned().fold(0.0, f64::max));

    let (refined_max_ratio, growth) = if ensemble.refine {
        let fine_flow = flow.refined();
        let fine = Evaluator::new(id, &fine_flow, potential.as_ref())?;
        worst.sort_by(|a, b| b.2.total_cmp(&a.2));
        let mut refined = 0.0f64;
        for &(index, seed, _) in worst.iter().take(ensemble.refine_top) {
            let out = fine.evaluate(seed)?;
            let rows = to_samples(1, index, seed, out.rows);
            refined = rows.iter().map(|s| s.ratio).fold(refined, f64::max);
            samples.extend(rows);
        }
        (Some(refined), Some(refined / max_ratio - 1.0))
    } else {
        (None, None)
    };
    let slope = if id == EstimateId::Mnnop {
        log_log_slope(&max_ratio_by_param(&samples))
    } else {
        None
    };
    let refined_ok = growth.is_none_or(|g| g.is_finite() && g < REFINEMENT_GROWTH_LIMIT);
    let slope_ok = id != EstimateId::Mnnop || slope.is_some_and(|s| s <= MNNOP_SLOPE_LIMIT);
    let all_finite = finite && samples.iter().all(|s| s.ratio.is_finite());
    if !id.is_radial() {
        notes.push(format!("time horizon truncated at the causality limit T = {t_max}"));
    }
    Ok(NormReport {
        estimate: id.name().to_string(),
        ensemble_size: ensemble.size,
        samples,
        max_ratio,
        max_ratio_alt,
        refined_max_ratio,
        growth,
        cap: ensemble.cap,
        t_max,
        slope,
        passed: all_finite && max_ratio <= ensemble.cap && refined_ok && slope_ok,
        fingerprint: fp,
        notes,
    })
}

fn to_samples(level: u32, index: usize, seed: u64, rows: Vec<Row>) -> Vec<NormSample> {
    rows.into_iter()
        .map(|r| NormSample {
            level,
            index,
            seed,
            param: r.param,
            lhs: r.lhs,
            rhs: r.rhs,
            ratio: r.lhs / r.rhs,
            rhs_alt: r.rhs_alt,
            ratio_alt: r.rhs_alt.map(|a| r.lhs / a),
        })
        .collect()
}

/// One `j = 1/2` sector: basis, radial problem and `Phi+-` on the sup grid.
struct Sector {
    pair: AngularBasisPair,
    problem: RadialProblem,
}

struct Evaluator<'a> {
    id: EstimateId,
    flow: &'a FlowConfig,
    sectors: Vec<Sector>,
    ctx: NormContext,
    grid: GridSpec,
    potential: Option<PotentialField>,
}

impl<'a> Evaluator<'a> {
    fn new(id: EstimateId, flow: &'a FlowConfig, potential: Option<&PotentialSpec>) -> Result<Self> {
        let grid = flow.grid()?;
        let mut sectors = Vec::new();
        let mut field = None;
        if id.is_radial() {
            let zero = PotentialSpec::zero();
            let spec = potential.unwrap_or(&zero);
            let sphere = SphereGrid::new(SUP_BAND_LIMIT);
            let r_max = flow.radial_t_final + max_bump_support() + 2.0;
            let cfg = RadialConfig {
                dr: flow.radial_dr,
                r_max,
                closure: BoundaryClosure::ZeroExtension,
            };
            for qn in QuantumNumbers::all_for(1) {
                let pair = build_basis(qn, &sphere)?;
                let problem = RadialProblem::new(
                    &pair,
                    RadialOperator::for_sector(&qn),
                    cfg,
                    spec,
                    &CubicNonlinearity::None,
                )?;
                sectors.push(Sector { pair, problem });
            }
        } else if let Some(spec) = potential {
            field = Some(PotentialField::assemble(spec, &grid)?);
        }
        Ok(Self {
            id,
            flow,
            sectors,
            ctx: flow.norm_context(),
            grid,
            potential: field,
        })
    }

    fn evaluate(&self, seed: u64) -> Result<Outcome> {
        let mut rng = rng(seed);
        match self.id {
            EstimateId::Homdir | EstimateId::EndV | EstimateId::Smoothing | EstimateId::SmoothingGrad => {
                self.sector_flow(&mut rng)
            }
            EstimateId::Stdir => self.sector_source(&mut rng),
            EstimateId::FreeDirac => self.free_angular(&mut rng),
            EstimateId::Non2 => self.duhamel_angular(&mut rng),
            EstimateId::EndDiracV | EstimateId::EndDiracVAng | EstimateId::EnergyAng => self.perturbed_3d(&mut rng),
            EstimateId::Mnnop => self.halfwave_lp(&mut rng),
        }
    }

    fn radial_records(&self, t_final: f64) -> EvolutionConfig {
        let n = (t_final / self.flow.record_dt).round().max(1.0) as usize;
        EvolutionConfig::uniform(0.5 * self.flow.radial_dr, t_final, Scheme::Strang, n)
    }

    /// Evolves every sector and returns, per record time, the sector states.
    fn evolve_sectors(
        &self,
        problems: &[&RadialProblem],
        initial: &[RadialSpinorState],
    ) -> Result<Vec<(f64, Vec<RadialSpinorState>)>> {
        let cfg = self.radial_records(self.flow.radial_t_final);
        let mut per_sector: Vec<Vec<(f64, RadialSpinorState)>> = Vec::new();
        for (problem, state) in problems.iter().zip(initial) {
            let mut recs = Vec::with_capacity(cfg.record_times.len());
            evolve_radial_observed(state, problem, &cfg, |t, _, s| {
                recs.push((t, s.clone()));
                Ok(())
            })?;
            per_sector.push(recs);
        }
        let n = per_sector[0].len();
        Ok((0..n)
            .map(|k| {
                (
                    per_sector[0][k].0,
                    per_sector.iter().map(|recs| recs[k].1.clone()).collect(),
                )
            })
            .collect())
    }

    /// `sup_x |sum_s u+_s Phi+_s + u-_s Phi-_s|` over the sup grid.
    fn sector_sup(&self, states: &[RadialSpinorState]) -> f64 {
        let amp = 1.0 / (4.0 * PI).sqrt();
        let m = states[0].r.len();
        let nq = self.sectors[0].pair.sphere.len();
        let mut best = 0.0f64;
        for i in 0..m {
            let bound: f64 = states.iter().map(|s| s.u_plus[i].norm() + s.u_minus[i].norm()).sum::<f64>() * amp;
            if bound <= best {
                continue;
            }
            for q in 0..nq {
                let mut v = [ZERO; 4];
                for (sec, s) in self.sectors.iter().zip(states) {
                    let (a, b) = (s.u_plus[i], s.u_minus[i]);
                    for (c, vc) in v.iter_mut().enumerate() {
                        *vc += a * sec.pair.phi_plus[q][c] + b * sec.pair.phi_minus[q][c];
                    }
                }
                best = best.max(v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt());
            }
        }
        best
    }

    /// `||w^{-1/2} u||_{L^2_x}` (or of `grad u`) of a sector decomposition.
    fn sector_smoothing(&self, states: &[RadialSpinorState], gradient: bool) -> Result<f64> {
        let dr = self.flow.radial_dr;
        let mut acc = 0.0;
        for (sec, s) in self.sectors.iter().zip(states) {
            let dens = sec.problem.shell_densities(s)?;
            for (i, (u2, g2)) in dens.iter().enumerate() {
                let r = s.r[i];
                let d = if gradient { g2 } else { u2 };
                acc += dr * r * r * d / w_sigma_half(r, self.flow.sigma).powi(2);
            }
        }
        Ok(acc.sqrt())
    }

    /// Sector data `f = f1 + D f2` with `f1 = g1(r) A1`, `f2 = g2(r) A2`;
    /// returns per-sector `f`, `f1`, `f2`.
    #[allow(clippy::type_complexity)]
    fn sector_data(
        &self,
        rng: &mut impl Rng,
    ) -> Result<(Vec<RadialSpinorState>, Vec<RadialSpinorState>, Vec<RadialSpinorState>)> {
        let b1 = RadialBump::random(rng, 0.5, 1.5, 3.0);
        let a1 = random_spinor(rng);
        let b2 = RadialBump::random(rng, 0.5, 1.5, 3.0);
        let a2 = random_spinor(rng);
        let scale2 = if self.flow.dirac_part { C64::new(1.0, 0.0) } else { ZERO };
        let (mut f, mut f1, mut f2) = (Vec::new(), Vec::new(), Vec::new());
        for sec in &self.sectors {
            let r = sec.problem.radii().to_vec();
            let qn = sec.pair.qn;
            let (p1, m1) = constant_coefficients(&sec.pair, |_| a1);
            let (p2, m2) = constant_coefficients(&sec.pair, |_| a2);
            let g1 = RadialSpinorState::from_fn(qn, r.clone(), |x| p1 * even_bump(&b1, x), |x| m1 * even_bump(&b1, x))?;
            let g2 = RadialSpinorState::from_fn(
                qn,
                r,
                |x| p2 * scale2 * even_bump(&b2, x),
                |x| m2 * scale2 * even_bump(&b2, x),
            )?;
            let d2 = sec.problem.apply_operator(&g2)?;
            let mut sum = g1.clone();
            for (z, w) in sum.u_plus.iter_mut().zip(&d2.u_plus).chain(sum.u_minus.iter_mut().zip(&d2.u_minus)) {
                *z += w;
            }
            f.push(sum);
            f1.push(g1);
            f2.push(g2);
        }
        Ok((f, f1, f2))
    }

    fn sector_flow(&self, rng: &mut impl Rng) -> Result<Outcome> {
        let (f, f1, f2) = self.sector_data(rng)?;
        let problems: Vec<&RadialProblem> = self.sectors.iter().map(|s| &s.problem).collect();
        let traj = self.evolve_sectors(&problems, &f)?;
        let mut norms = [0.0f64; 3];
        let (mut n1, mut n2) = (0.0f64, 0.0f64);
        for (k, sec) in self.sectors.iter().enumerate() {
            let (a, b, _) = sec.problem.dirac_norms(&f[k])?;
            norms[0] += a * a;
            norms[1] += b * b;
            n1 += sec.problem.dirac_norms(&f1[k])?.1.powi(2);
            n2 += sec.problem.dirac_norms(&f2[k])?.2.powi(2);
        }
        let (l2, hdot) = (norms[0].sqrt(), norms[1].sqrt());
        let h1 = (norms[0] + norms[1]).sqrt();
        let series = traj
            .iter()
            .map(|(t, states)| {
                let v = match self.id {
                    EstimateId::Smoothing => self.sector_smoothing(states, false)?,
                    EstimateId::SmoothingGrad => self.sector_smoothing(states, true)?,
                    _ => self.sector_sup(states),
                };
                Ok((*t, v))
            })
            .collect::<Result<Vec<_>>>()?;
        let lhs = time_norm(&series, TimeExponent::Two)?;
        let (rhs, rhs_alt) = match self.id {
            EstimateId::Homdir => (hdot, Some(n1.sqrt() + n2.sqrt())),
            EstimateId::EndV => (h1, Some(hdot)),
            EstimateId::Smoothing => (l2, None),
            _ => (hdot, None),
        };
        Ok(Outcome {
            rows: vec![Row {
                param: None,
                lhs,
                rhs,
                rhs_alt,
            }],
            t_max: self.flow.radial_t_final,
        })
    }

    /// Duhamel term of `F = chi(t) (F1(r) A + i (alpha . x_hat) F2(r) A)`.
    fn sector_source(&self, rng: &mut impl Rng) -> Result<Outcome> {
        let b1 = RadialBump::random(rng, 0.7, 1.5, 2.5);
        let b2 = RadialBump::random(rng, 0.7, 1.5, 2.5);
        let a = random_spinor(rng);
        let envelope = TimeEnvelope::Gaussian {
            center: rng.random_range(1.0..=3.0),
            width: rng.random_range(0.3..=0.8),
        };
        let f1 = move |r: f64| even_bump(&b1, r);
        let f2 = move |r: f64| r / b2.width * even_bump(&b2, r);
        let mut problems = Vec::new();
        let mut zeros = Vec::new();
        for sec in &self.sectors {
            let (p1, m1) = constant_coefficients(&sec.pair, |_| a);
            let (p2, m2) = constant_coefficients(&sec.pair, |w| i_alpha_dot(w, &a));
            let r = sec.problem.radii();
            // u_t = i D u + i chi G with G = -i F.
            let plus = r.iter().map(|&x| -I * (p1 * f1(x) + p2 * f2(x))).collect();
            let minus = r.iter().map(|&x| -I * (m1 * f1(x) + m2 * f2(x))).collect();
            problems.push(sec.problem.clone().with_source(RadialSource { envelope, plus, minus })?);
            zeros.push(RadialSpinorState::zeros(sec.pair.qn, r.to_vec()));
        }
        let refs: Vec<&RadialProblem> = problems.iter().collect();
        let traj = self.evolve_sectors(&refs, &zeros)?;
        let series: Vec<(f64, f64)> = traj.iter().map(|(t, s)| (*t, self.sector_sup(s))).collect();
        let lhs = time_norm(&series, TimeExponent::Two)?;
        let rgrid = GridSpec::new(self.flow.rhs_grid_n, self.flow.rhs_half_width)?;
        let field = SpinorField3D::from_fn(rgrid, |x| {
            let r = norm3(&x);
            let mut v = a.map(|z| z * f1(r));
            if r > 0.0 {
                let k = i_alpha_dot([x[0] / r, x[1] / r, x[2] / r], &a);
                for (vc, kc) in v.iter_mut().zip(k) {
                    *vc += kc * f2(r);
                }
            }
            v
        });
        let spatial = spatial_norm(&field, &SpaceNorm::WeightedDerivative { angular_order: 0.0 }, &self.ctx)?;
        let rhs = envelope.l2_norm(self.flow.radial_t_final) * spatial;
        Ok(Outcome {
            rows: vec![Row {
                param: None,
                lhs,
                rhs,
                rhs_alt: None,
            }],
            t_max: self.flow.radial_t_final,
        })
    }

    /// Record times `0..T` with `T` just inside the causality limit.
    fn horizon(&self, support: f64) -> Result<Vec<f64>> {
        let limit = self.grid.half_width - support;
        let t = ((limit * 10.0) - 1e-9).floor() / 10.0;
        if t <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "data radius {support} leaves no time inside the box of half-width {}",
                self.grid.half_width
            )));
        }
        let n = (t / self.flow.record_dt).ceil() as usize;
        Ok((0..=n).map(|k| t * k as f64 / n as f64).collect())
    }

    fn angular(&self) -> SpaceNorm {
        SpaceNorm::LinfRL2Omega {
            angular_order: self.flow.angular_order,
        }
    }

    fn free_angular(&self, rng: &mut impl Rng) -> Result<Outcome> {
        let (f, support) = solid_harmonic_spinor(&self.grid, rng);
        let times = self.horizon(support)?;
        let space = self.angular();
        let series = times
            .iter()
            .map(|&t| Ok((t, spatial_norm(&free_propagate(&f, t), &space, &self.ctx)?)))
            .collect::<Result<Vec<_>>>()?;
        let lhs = time_norm(&series, TimeExponent::Two)?;
        let df = apply_multiplier(&f, symbols::abs_pow(1.0))?;
        let rhs = self.angular_l2(&df)?;
        Ok(Outcome {
            rows: vec![Row {
                param: None,
                lhs,
                rhs,
                rhs_alt: None,
            }],
            t_max: *times.last().expect("nonempty"),
        })
    }

    /// `||Lambda^s u||_{L^2}` over the inscribed ball.
    fn angular_l2(&self, u: &SpinorField3D) -> Result<f64> {
        let (n, _) = weighted_angular_l2(
            u,
            &self.ctx.sphere,
            self.flow.angular_order,
            |_| 1.0,
            self.grid.half_width,
            self.grid.n,
            self.ctx.method,
        );
        Ok(n)
    }

    /// `u(t) = int_0^t e^{i(t-s)D} chi(s) G ds`, accumulated spectrally with
    /// Simpson's rule on each step.
    fn duhamel_angular(&self, rng: &mut impl Rng) -> Result<Outcome> {
        let (g, support) = solid_harmonic_spinor(&self.grid, rng);
        let envelope = TimeEnvelope::Gaussian {
            center: rng.random_range(0.5..=1.5),
            width: rng.random_range(0.3..=0.6),
        };
        let times = self.horizon(support)?;
        let t_final = *times.last().expect("nonempty");
        let cfg = EvolutionConfig {
            dt: self.flow.dt,
            t_final,
            scheme: Scheme::Strang,
            record_times: times.clone(),
            support_radius: Some(support),
            keep_snapshots: false,
        };
        let g_hat = g.to_spectrum();
        let space = self.angular();
        let mut acc = g_hat.clone();
        acc.map_modes(|_, _| [ZERO; 4]);
        let mut series = vec![(0.0, 0.0)];
        let mut cache: Option<(f64, FreeFlow, FreeFlow)> = None;
        let mut rec = times.iter().skip(1).peekable();
        for (t0, t1) in cfg.step_plan() {
            let h = t1 - t0;
            if cache.as_ref().is_none_or(|c| !same_step(c.0, h)) {
                cache = Some((h, FreeFlow::new(&self.grid, h), FreeFlow::new(&self.grid, 0.5 * h)));
            }
            let (_, full, half) = cache.as_ref().expect("set");
            full.apply_spectrum(&mut acc)?;
            let mut a = g_hat.clone();
            full.apply_spectrum(&mut a)?;
            let mut b = g_hat.clone();
            half.apply_spectrum(&mut b)?;
            let w = h / 6.0;
            acc.axpy(C64::new(w * envelope.eval(t0), 0.0), &a)?;
            acc.axpy(C64::new(4.0 * w * envelope.eval(t0 + 0.5 * h), 0.0), &b)?;
            acc.axpy(C64::new(w * envelope.eval(t1), 0.0), &g_hat)?;
            if let Some(&&t) = rec.peek() {
                if (t - t1).abs() <= 1e-12 * t.max(1.0) {
                    series.push((t, spatial_norm(&acc.to_field(), &space, &self.ctx)?));
                    rec.next();
                }
            }
        }
        let lhs = time_norm(&series, TimeExponent::Two)?;
        let spatial = spatial_norm(
            &g,
            &SpaceNorm::WeightedDerivative {
                angular_order: self.flow.angular_order,
            },
            &self.ctx,
        )?;
        let rhs = envelope.l2_norm(t_final) * spatial;
        Ok(Outcome {
            rows: vec![Row {
                param: None,
                lhs,
                rhs,
                rhs_alt: None,
            }],
            t_max: t_final,
        })
    }

    fn perturbed_3d(&self, rng: &mut impl Rng) -> Result<Outcome> {
        let (f, support) = solid_harmonic_spinor(&self.grid, rng);
        let times = self.horizon(support)?;
        let t_final = *times.last().expect("nonempty");
        let cfg = EvolutionConfig {
            dt: self.flow.dt,
            t_final,
            scheme: Scheme::Strang,
            record_times: times,
            support_radius: Some(support),
            keep_snapshots: false,
        };
        let s = self.flow.angular_order;
        let (space, time) = match self.id {
            EstimateId::EndDiracV => (SpaceNorm::LinfRL2Omega { angular_order: 0.0 }, TimeExponent::Two),
            EstimateId::EndDiracVAng => (SpaceNorm::LinfRL2Omega { angular_order: s }, TimeExponent::Two),
            _ => (SpaceNorm::AngularH1 { angular_order: s }, TimeExponent::Infinity),
        };
        let mut series = Vec::new();
        evolve_observed(&f, self.potential.as_ref(), &CubicNonlinearity::None, &cfg, |t, u| {
            series.push((t, spatial_norm(u, &space, &self.ctx)?));
            Ok(())
        })?;
        let lhs = time_norm(&series, time)?;
        let rhs = match self.id {
            EstimateId::EndDiracV => sobolev_norm(&f, 1.0, false),
            _ => spatial_norm(&f, &SpaceNorm::AngularH1 { angular_order: s }, &self.ctx)?,
        };
        Ok(Outcome {
            rows: vec![Row {
                param: None,
                lhs,
                rhs,
                rhs_alt: None,
            }],
            t_max: t_final,
        })
    }

    fn halfwave_lp(&self, rng: &mut impl Rng) -> Result<Outcome> {
        let (f, support) = solid_harmonic_scalar(&self.grid, rng);
        let times = self.horizon(support)?;
        let t_final = *times.last().expect("nonempty");
        let ps = &self.flow.p_values;
        let sphere = &self.ctx.sphere;
        let pts = sphere.points();
        let radii: Vec<f64> = {
            let dr = self.ctx.shell_spacing * self.grid.spacing();
            let n = (self.grid.half_width / dr).floor() as usize;
            (0..=n).map(|k| k as f64 * dr).collect()
        };
        let order = match self.ctx.method {
            SamplingMethod::Lagrange { order } => order,
            _ => 6,
        };
        let mut series: Vec<Vec<(f64, f64)>> = vec![Vec::new(); ps.len()];
        for &t in &times {
            let u = f.apply_multiplier(symbols::half_wave(t))?;
            let mut best = vec![0.0f64; ps.len()];
            for &r in &radii {
                let vals: Vec<f64> = pts
                    .iter()
                    .map(|w| lagrange_eval_scalar(&u, [r * w[0], r * w[1], r * w[2]], order).norm())
                    .collect();
                for (b, p) in best.iter_mut().zip(ps) {
                    *b = b.max(sphere_lp(sphere, vals.iter().cloned(), *p));
                }
            }
            for (s, b) in series.iter_mut().zip(best) {
                s.push((t, b));
            }
        }
        let rhs = f.weighted_spectral_norm(|xi| xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]);
        let rows = ps
            .iter()
            .zip(&series)
            .map(|(p, s)| {
                Ok(Row {
                    param: Some(*p),
                    lhs: time_norm(s, TimeExponent::Two)?,
                    rhs,
                    rhs_alt: None,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Outcome { rows, t_max: t_final })
    }
}

/// Largest support radius of the radial bumps drawn by the sector estimates.
fn max_bump_support() -> f64 {
    RadialBump {
        amplitude: 1.0,
        width: 1.5,
        center: 3.0,
    }
    .support_radius()
}

/// `g(r) + g(-r)`, smooth as a radial function.
fn even_bump(b: &RadialBump, r: f64) -> f64 {
    b.value(r) + b.value(-r)
}

fn random_spinor(rng: &mut impl Rng) -> Spinor {
    std::array::from_fn(|_| complex_normal(rng))
}

fn i_alpha_dot(w: [f64; 3], a: &Spinor) -> Spinor {
    alpha_dot_apply(w, a).map(|z| I * z)
}

/// `(<Phi+, v>, <Phi-, v>)` in `L^2(S^2)` for an angular spinor field `v`.
fn constant_coefficients(pair: &AngularBasisPair, v: impl Fn([f64; 3]) -> Spinor) -> (C64, C64) {
    let s = &pair.sphere;
    let (mut cp, mut cm) = (ZERO, ZERO);
    for q in 0..s.len() {
        let val = v(s.point(q));
        let w = s.weight(q);
        cp += spinor_inner(&pair.phi_plus[q], &val) * w;
        cm += spinor_inner(&pair.phi_minus[q], &val) * w;
    }
    (cp, cm)
}

/// `sum_{l <= 2, m} r^l Y_lm(x_hat) e^{-r^2/2w^2} B_lm` with complex normal
/// spinors `B_lm` and `w` uniform in `[1, 1.2]`; returns the field and its
/// support radius.
fn solid_harmonic_spinor(grid: &GridSpec, rng: &mut impl Rng) -> (SpinorField3D, f64) {
    let w: f64 = rng.random_range(1.0..=1.2);
    let terms: Vec<(usize, i64, Spinor)> = solid_indices().map(|(l, m)| (l, m, random_spinor(rng))).collect();
    let f = SpinorField3D::from_fn(*grid, |x| {
        let (r, e, om) = polar(x, w);
        let mut v = [ZERO; 4];
        for (l, m, b) in &terms {
            let y = sph_harm(*l, *m, om) * (r.powi(*l as i32) * e);
            for (vc, bc) in v.iter_mut().zip(b) {
                *vc += y * bc;
            }
        }
        v
    });
    (f, SOLID_SUPPORT_WIDTHS * w)
}

fn solid_harmonic_scalar(grid: &GridSpec, rng: &mut impl Rng) -> (ScalarField3D, f64) {
    let w: f64 = rng.random_range(1.0..=1.2);
    let terms: Vec<(usize, i64, C64)> = solid_indices().map(|(l, m)| (l, m, complex_normal(rng))).collect();
    let f = ScalarField3D::from_fn(*grid, |x| {
        let (r, e, om) = polar(x, w);
        terms
            .iter()
            .map(|(l, m, b)| sph_harm(*l, *m, om) * (r.powi(*l as i32) * e) * b)
            .sum()
    });
    (f, SOLID_SUPPORT_WIDTHS * w)
}

fn solid_indices() -> impl Iterator<Item = (usize, i64)> {
    (0..=2usize).flat_map(|l| (-(l as i64)..=l as i64).map(move |m| (l, m)))
}

fn polar(x: [f64; 3], w: f64) -> (f64, f64, [f64; 3]) {
    let r = norm3(&x);
    let e = (-r * r / (2.0 * w * w)).exp();
    let om = if r > 0.0 { [x[0] / r, x[1] / r, x[2] / r] } else { [0.0, 0.0, 1.0] };
    (r, e, om)
}
