//! Method-of-lines solver for the `j = 1/2` radial system
//!
//! ```text
//! u_t = i D_rad u + i V_rad(r) u - i g (c+ |u+|^2 + c- |u-|^2) u,
//! D_rad = [[0, -d/dr + a/r], [d/dr + b/r, 0]].
//! ```
//!
//! The unknowns are `v+- = r u+-` on the staggered grid `r_i = (i + 1/2) dr`,
//! where `D_rad` becomes `[[0, -d/dr + (a+1)/r], [d/dr + (b-1)/r, 0]]` on
//! `L^2(dr)`. Values at negative radii come from the parities of `v+-`. With
//! zero extension past `R` the discrete operator is exactly symmetric.

use serde::{Deserialize, Serialize};

use super::basis::{AngularBasisPair, QuantumNumbers};
use super::projection::{reduce_nonlinearity, sector_potential, DiracActionReport, RadialSpinorState};
use crate::error::{Error, Result};
use crate::potential::PotentialSpec;
use crate::propagator::{CubicNonlinearity, EvolutionConfig, BLOWUP_FACTOR};
use crate::{C64, I, ZERO};

/// Coefficients `a`, `b` of the radial Dirac operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialOperator {
    pub a: f64,
    pub b: f64,
}

impl RadialOperator {
    /// The operator of sector `qn`: `a = k_j - 1`, `b = k_j + 1`.
    pub fn for_sector(qn: &QuantumNumbers) -> Self {
        Self {
            a: (qn.kappa - 1) as f64,
            b: (qn.kappa + 1) as f64,
        }
    }

    /// Rounds fitted coefficients, refusing poor fits.
    pub fn from_fit(report: &DiracActionReport, tolerance: f64) -> Result<Self> {
        let (a, b) = report.rounded();
        if (report.a - a as f64).abs() > tolerance
            || (report.b - b as f64).abs() > tolerance
            || report.fit_residual_a > tolerance
            || report.fit_residual_b > tolerance
        {
            return Err(Error::OutOfRange(format!(
                "radial operator fit is not integral: a = {}, b = {} (misfit {:.2e}, {:.2e})",
                report.a, report.b, report.fit_residual_a, report.fit_residual_b
            )));
        }
        Ok(Self {
            a: a as f64,
            b: b as f64,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryClosure {
    /// Values beyond `R` are zero; keeps the operator symmetric.
    #[default]
    ZeroExtension,
    /// Fourth-order one-sided differences at the last two nodes.
    OneSided,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialConfig {
    pub dr: f64,
    /// Outer radius `R`; the grid has `round(R / dr)` nodes.
    pub r_max: f64,
    #[serde(default)]
    pub closure: BoundaryClosure,
}

impl RadialConfig {
    pub fn nodes(&self) -> usize {
        (self.r_max / self.dr).round() as usize
    }

    pub fn grid(&self) -> Vec<f64> {
        RadialSpinorState::staggered_grid(self.dr, self.nodes())
    }
}

/// Scalar time profile of a separable source `chi(t) G(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TimeEnvelope {
    Constant,
    Gaussian { center: f64, width: f64 },
}

impl TimeEnvelope {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            TimeEnvelope::Constant => 1.0,
            TimeEnvelope::Gaussian { center, width } => (-(t - center).powi(2) / (2.0 * width * width)).exp(),
        }
    }

    /// `||chi||_{L^2(0, T)}` by composite Simpson quadrature.
    pub fn l2_norm(&self, t_final: f64) -> f64 {
        let n = 2048;
        let h = t_final / n as f64;
        let mut acc = 0.0;
        for k in 0..=n {
            let w = if k == 0 || k == n {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            acc += w * self.eval(k as f64 * h).powi(2);
        }
        (acc * h / 3.0).sqrt()
    }
}

/// A source term `chi(t) (g+(r) Phi+ + g-(r) Phi-)` added to the radial system.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialSource {
    pub envelope: TimeEnvelope,
    /// Profiles `g+-` on the problem grid.
    pub plus: Vec<C64>,
    pub minus: Vec<C64>,
}

/// Everything the radial right-hand side needs, tabulated on the grid.
#[derive(Debug, Clone)]
pub struct RadialProblem {
    pub qn: QuantumNumbers,
    pub operator: RadialOperator,
    pub config: RadialConfig,
    r: Vec<f64>,
    potential: Vec<[[C64; 2]; 2]>,
    /// `g c+`, `g c-`.
    cubic: (f64, f64),
    parity_v: (f64, f64),
    /// Pointwise size `|Phi+-(omega)|`, constant for `j = 1/2`.
    amplitude: f64,
    /// Largest off-sector norm of `V Phi+-` over the grid.
    pub potential_leakage: f64,
    /// `chi(t)` and `r g+-(r)`.
    source: Option<(TimeEnvelope, Vec<C64>, Vec<C64>)>,
}

impl RadialProblem {
    pub fn new(
        pair: &AngularBasisPair,
        operator: RadialOperator,
        config: RadialConfig,
        potential: &PotentialSpec,
        nonlinearity: &CubicNonlinearity,
    ) -> Result<Self> {
        let qn = pair.qn;
        if qn.two_j != 1 {
            return Err(Error::NotApplicable(format!("radial dynamics are implemented for j = 1/2 only, got {qn}")));
        }
        if !(config.dr > 0.0 && config.r_max > 4.0 * config.dr) {
            return Err(Error::InvalidConfig("radial grid needs dr > 0 and R > 4 dr".into()));
        }
        potential.validate()?;
        let r = config.grid();
        let mut leak = 0.0f64;
        let table = if potential.is_zero() {
            vec![[[ZERO; 2]; 2]; r.len()]
        } else {
            r.iter()
                .map(|&ri| {
                    let (m, l) = sector_potential(pair, potential, ri);
                    leak = leak.max(l);
                    m
                })
                .collect()
        };
        let g = match nonlinearity {
            CubicNonlinearity::None => 0.0,
            CubicNonlinearity::BetaForm { coupling } => *coupling,
            CubicNonlinearity::GeneralPoly { .. } => {
                return Err(Error::NotApplicable(
                    "general cubic polynomials do not preserve a partial-wave sector".into(),
                ))
            }
        };
        let unit = RadialSpinorState::new(qn, vec![0.0, 1.0], vec![ZERO; 2], vec![ZERO; 2])?;
        let (cp, cm) = reduce_nonlinearity(&unit, pair)?.coefficients;
        let (pp, pm) = qn.parities();
        Ok(Self {
            qn,
            operator,
            config,
            r,
            potential: table,
            cubic: (g * cp, g * cm),
            parity_v: (-pp, -pm),
            amplitude: cp.abs().sqrt(),
            potential_leakage: leak,
            source: None,
        })
    }

    /// Adds `i chi(t) G` to the right-hand side, i.e. solves
    /// `u_t = i D u + i V u - i P(u) + i chi(t) G`.
    pub fn with_source(mut self, source: RadialSource) -> Result<Self> {
        if source.plus.len() != self.r.len() || source.minus.len() != self.r.len() {
            return Err(Error::GridMismatch("source profiles are not on the radial grid".into()));
        }
        let scale = |g: &[C64]| g.iter().zip(&self.r).map(|(g, r)| g * r).collect::<Vec<_>>();
        self.source = Some((source.envelope, scale(&source.plus), scale(&source.minus)));
        Ok(self)
    }

    fn state_to_v(&self, state: &RadialSpinorState) -> Result<(Vec<C64>, Vec<C64>)> {
        if state.r.len() != self.r.len()
            || state.r.iter().zip(&self.r).any(|(a, b)| (a - b).abs() > 1e-12 * b.max(1.0))
        {
            return Err(Error::GridMismatch("state is not on the problem's radial grid".into()));
        }
        let vp = state.u_plus.iter().zip(&self.r).map(|(u, r)| u * r).collect();
        let vm = state.u_minus.iter().zip(&self.r).map(|(u, r)| u * r).collect();
        Ok((vp, vm))
    }

    /// `(||u||, ||D_rad u||, ||D_rad^2 u||)` in `L^2(r^2 dr)`, i.e. the
    /// `L^2`, `H^1`-dot and `H^2`-dot norms of the lifted field.
    pub fn dirac_norms(&self, state: &RadialSpinorState) -> Result<(f64, f64, f64)> {
        let (vp, vm) = self.state_to_v(state)?;
        let m = vp.len();
        let norm = |a: &[C64], b: &[C64]| {
            (a.iter().zip(b).map(|(x, y)| x.norm_sqr() + y.norm_sqr()).sum::<f64>() * self.config.dr).sqrt()
        };
        let (mut ap, mut am) = (vec![ZERO; m], vec![ZERO; m]);
        self.apply_dirac(&vp, &vm, &mut ap, &mut am);
        let (mut bp, mut bm) = (vec![ZERO; m], vec![ZERO; m]);
        self.apply_dirac(&ap, &am, &mut bp, &mut bm);
        Ok((norm(&vp, &vm), norm(&ap, &am), norm(&bp, &bm)))
    }

    /// The discrete `D_rad` applied to a state on the problem grid.
    pub fn apply_operator(&self, state: &RadialSpinorState) -> Result<RadialSpinorState> {
        let (vp, vm) = self.state_to_v(state)?;
        let m = vp.len();
        let (mut ap, mut am) = (vec![ZERO; m], vec![ZERO; m]);
        self.apply_dirac(&vp, &vm, &mut ap, &mut am);
        Ok(self.to_state(&ap, &am))
    }

    /// Per node, `int_{S^2} |u(r w)|^2 dw` and `int_{S^2} |grad u(r w)|^2 dw`.
    pub fn shell_densities(&self, state: &RadialSpinorState) -> Result<Vec<(f64, f64)>> {
        let (vp, vm) = self.state_to_v(state)?;
        let m = vp.len();
        let (mut dp, mut dm) = (vec![ZERO; m], vec![ZERO; m]);
        self.derivative(&vp, self.parity_v.0, &mut dp);
        self.derivative(&vm, self.parity_v.1, &mut dm);
        let (lp, lm) = self.qn.orbital();
        let (cp, cm) = ((lp * (lp + 1)) as f64, (lm * (lm + 1)) as f64);
        Ok((0..m)
            .map(|i| {
                let r = self.r[i];
                let (up, um) = (vp[i] / r, vm[i] / r);
                let gp = (dp[i] - up) / r;
                let gm = (dm[i] - um) / r;
                let u2 = up.norm_sqr() + um.norm_sqr();
                let g2 = gp.norm_sqr() + gm.norm_sqr() + (cp * up.norm_sqr() + cm * um.norm_sqr()) / (r * r);
                (u2, g2)
            })
            .collect())
    }

    pub fn radii(&self) -> &[f64] {
        &self.r
    }

    /// Fourth-order `d/dr` of `v` with parity `p` at the origin.
    fn derivative(&self, v: &[C64], parity: f64, out: &mut [C64]) {
        let m = v.len();
        let h = self.config.dr;
        let at = |i: i64| -> C64 {
            if i < 0 {
                v[(-i - 1) as usize] * parity
            } else if (i as usize) < m {
                v[i as usize]
            } else {
                ZERO
            }
        };
        let c = 1.0 / (12.0 * h);
        for (i, o) in out.iter_mut().enumerate() {
            let i = i as i64;
            *o = (at(i - 2) - at(i - 1) * 8.0 + at(i + 1) * 8.0 - at(i + 2)) * c;
        }
        if self.config.closure == BoundaryClosure::OneSided {
            let k = m - 1;
            out[k] = (v[k] * 25.0 - v[k - 1] * 48.0 + v[k - 2] * 36.0 - v[k - 3] * 16.0 + v[k - 4] * 3.0) * c;
            out[k - 1] =
                (v[k] * 3.0 + v[k - 1] * 10.0 - v[k - 2] * 18.0 + v[k - 3] * 6.0 - v[k - 4]) * c;
        }
    }

    /// `(A v)` for the linear radial Dirac part.
    fn apply_dirac(&self, vp: &[C64], vm: &[C64], op: &mut [C64], om: &mut [C64]) {
        let mut dp = vec![ZERO; vp.len()];
        let mut dm = vec![ZERO; vm.len()];
        self.derivative(vp, self.parity_v.0, &mut dp);
        self.derivative(vm, self.parity_v.1, &mut dm);
        let (ka, kb) = (self.operator.a + 1.0, self.operator.b - 1.0);
        for i in 0..vp.len() {
            let r = self.r[i];
            op[i] = -dm[i] + vm[i] * (ka / r);
            om[i] = dp[i] + vp[i] * (kb / r);
        }
    }

    fn rhs(&self, t: f64, vp: &[C64], vm: &[C64], op: &mut [C64], om: &mut [C64]) {
        self.apply_dirac(vp, vm, op, om);
        if let Some((env, gp, gm)) = &self.source {
            let c = env.eval(t);
            for i in 0..vp.len() {
                op[i] += gp[i] * c;
                om[i] += gm[i] * c;
            }
        }
        for i in 0..vp.len() {
            let v = &self.potential[i];
            let r2 = self.r[i] * self.r[i];
            let n = (self.cubic.0 * vp[i].norm_sqr() + self.cubic.1 * vm[i].norm_sqr()) / r2;
            let a = op[i] + v[0][0] * vp[i] + v[0][1] * vm[i] - vp[i] * n;
            let b = om[i] + v[1][0] * vp[i] + v[1][1] * vm[i] - vm[i] * n;
            op[i] = I * a;
            om[i] = I * b;
        }
    }

    fn norms(&self, t: f64, vp: &[C64], vm: &[C64]) -> RadialNormRecord {
        let dr = self.config.dr;
        let l2 = vp.iter().zip(vm).map(|(a, b)| a.norm_sqr() + b.norm_sqr()).sum::<f64>() * dr;
        let mut ap = vec![ZERO; vp.len()];
        let mut am = vec![ZERO; vm.len()];
        self.apply_dirac(vp, vm, &mut ap, &mut am);
        let d2 = ap.iter().zip(&am).map(|(a, b)| a.norm_sqr() + b.norm_sqr()).sum::<f64>() * dr;
        let linf = vp
            .iter()
            .zip(vm)
            .zip(&self.r)
            .map(|((a, b), r)| (a.norm_sqr() + b.norm_sqr()).sqrt() / r)
            .fold(0.0, f64::max)
            * self.amplitude;
        RadialNormRecord {
            t,
            l2: l2.sqrt(),
            h1: (l2 + d2).sqrt(),
            linf,
        }
    }

    fn to_state(&self, vp: &[C64], vm: &[C64]) -> RadialSpinorState {
        RadialSpinorState {
            qn: self.qn,
            r: self.r.clone(),
            u_plus: vp.iter().zip(&self.r).map(|(v, r)| v / r).collect(),
            u_minus: vm.iter().zip(&self.r).map(|(v, r)| v / r).collect(),
        }
    }
}

/// Radial `L^2`, `H^1`-equivalent `(||u||^2 + ||D_rad u||^2)^{1/2}` and the
/// sup of the lifted field, `|Phi| (|u+|^2 + |u-|^2)^{1/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialNormRecord {
    pub t: f64,
    #[serde(rename = "L2")]
    pub l2: f64,
    #[serde(rename = "H1")]
    pub h1: f64,
    #[serde(rename = "Linf")]
    pub linf: f64,
}

#[derive(Debug, Clone, Default)]
pub struct RadialTrajectory {
    pub records: Vec<RadialNormRecord>,
    pub snapshots: Vec<(f64, RadialSpinorState)>,
}

impl RadialTrajectory {
    pub fn max_h1(&self) -> f64 {
        self.records.iter().map(|r| r.h1).fold(0.0, f64::max)
    }
}

/// RK4 in time, calling `observer` at each record time.
pub fn evolve_radial_observed(
    state: &RadialSpinorState,
    problem: &RadialProblem,
    cfg: &EvolutionConfig,
    mut observer: impl FnMut(f64, &RadialNormRecord, &RadialSpinorState) -> Result<()>,
) -> Result<()> {
    cfg.validate(None)?;
    let limit = 0.5 * problem.config.dr;
    if cfg.dt > limit {
        return Err(Error::CflViolation { dt: cfg.dt, limit });
    }
    if state.qn != problem.qn {
        return Err(Error::InvalidConfig("state and problem belong to different sectors".into()));
    }
    let m = problem.r.len();
    let (mut vp, mut vm) = problem.state_to_v(state)?;
    let sup0 = match &problem.source {
        Some((_, gp, gm)) => problem.norms(0.0, gp, gm).linf.max(problem.norms(0.0, &vp, &vm).linf),
        None => problem.norms(0.0, &vp, &vm).linf,
    };
    let eps = 1e-12 * cfg.t_final.max(1.0);
    let mut records = cfg.record_times.iter().peekable();
    while let Some(t) = records.peek() {
        if t.abs() > eps {
            break;
        }
        observer(0.0, &problem.norms(0.0, &vp, &vm), &problem.to_state(&vp, &vm))?;
        records.next();
    }
    let mut k = [(); 4].map(|_| (vec![ZERO; m], vec![ZERO; m]));
    let mut tp = vec![ZERO; m];
    let mut tm = vec![ZERO; m];
    for (step, (t0, t1)) in cfg.step_plan().into_iter().enumerate() {
        let h = t1 - t0;
        for stage in 0..4 {
            let c = match stage {
                0 => 0.0,
                3 => h,
                _ => 0.5 * h,
            };
            if stage == 0 {
                tp.copy_from_slice(&vp);
                tm.copy_from_slice(&vm);
            } else {
                let (pp, pm) = &k[stage - 1];
                for i in 0..m {
                    tp[i] = vp[i] + pp[i] * c;
                    tm[i] = vm[i] + pm[i] * c;
                }
            }
            let (op, om) = &mut k[stage];
            problem.rhs(t0 + c, &tp, &tm, op, om);
        }
        for i in 0..m {
            vp[i] += (k[0].0[i] + k[1].0[i] * 2.0 + k[2].0[i] * 2.0 + k[3].0[i]) * (h / 6.0);
            vm[i] += (k[0].1[i] + k[1].1[i] * 2.0 + k[2].1[i] * 2.0 + k[3].1[i]) * (h / 6.0);
        }
        let sup = vp
            .iter()
            .zip(&vm)
            .zip(&problem.r)
            .map(|((a, b), r)| (a.norm_sqr() + b.norm_sqr()).sqrt() / r)
            .fold(0.0, f64::max);
        if !sup.is_finite() {
            return Err(Error::SolverBlowup {
                step: step + 1,
                time: t1,
                reason: "non-finite radial profile".into(),
            });
        }
        if sup0 > 0.0 && sup > BLOWUP_FACTOR * sup0 {
            return Err(Error::SolverBlowup {
                step: step + 1,
                time: t1,
                reason: format!("sup norm {sup:.3e} exceeds {BLOWUP_FACTOR:e} x initial {sup0:.3e}"),
            });
        }
        while let Some(t) = records.peek() {
            if (**t - t1).abs() > eps {
                break;
            }
            observer(**t, &problem.norms(**t, &vp, &vm), &problem.to_state(&vp, &vm))?;
            records.next();
        }
    }
    Ok(())
}

/// [`evolve_radial_observed`] collecting norms and, if requested, snapshots.
pub fn evolve_radial(
    state: &RadialSpinorState,
    problem: &RadialProblem,
    cfg: &EvolutionConfig,
) -> Result<RadialTrajectory> {
    let mut traj = RadialTrajectory::default();
    evolve_radial_observed(state, problem, cfg, |t, rec, s| {
        traj.records.push(*rec);
        if cfg.keep_snapshots {
            traj.snapshots.push((t, s.clone()));
        }
        Ok(())
    })?;
    Ok(traj)
}
