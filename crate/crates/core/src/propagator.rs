//! Free Dirac flow, Duhamel integrals and the split-step solver for
//!
//! ```text
//! i u_t + D u + V u = P3(u),   i.e.   u_t = i D u + i V u - i P3(u).
//! ```
//!
//! The free flow is `exp(i t alpha.xi)` on the Fourier side, written as
//! `cos(t|xi|) + i sin(t|xi|) alpha.xi_hat`.

use log::{debug, log_enabled, Level};
use serde::{Deserialize, Serialize};

use crate::clifford::{alpha_dot_apply, beta_form, sobolev_norm_spectrum};
use crate::error::{Error, Result};
use crate::field::{SpinorField3D, SpinorSpectrum};
use crate::grid::{norm3, GridSpec};
use crate::potential::{PotentialExponential, PotentialField};
use crate::{Spinor, C64, I, ZERO};

/// Sup-norm growth factor that counts as blowup.
pub const BLOWUP_FACTOR: f64 = 1e6;

/// `exp(i t D)` for a fixed `t`, with the symbol tabulated once.
#[derive(Debug, Clone)]
pub struct FreeFlow {
    grid: GridSpec,
    t: f64,
    cos: Vec<f64>,
    sin: Vec<f64>,
    xi_hat: Vec<[f64; 3]>,
}

impl FreeFlow {
    pub fn new(grid: &GridSpec, t: f64) -> Self {
        let n = grid.len();
        let mut cos = Vec::with_capacity(n);
        let mut sin = Vec::with_capacity(n);
        let mut xi_hat = Vec::with_capacity(n);
        for idx in 0..n {
            let xi = grid.frequency(idx);
            let k = norm3(&xi);
            let (s, c) = (t * k).sin_cos();
            cos.push(c);
            sin.push(s);
            xi_hat.push(if k > 0.0 { [xi[0] / k, xi[1] / k, xi[2] / k] } else { [0.0; 3] });
        }
        Self {
            grid: *grid,
            t,
            cos,
            sin,
            xi_hat,
        }
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    #[inline]
    fn apply_mode(&self, idx: usize, v: &Spinor) -> Spinor {
        let a = alpha_dot_apply(self.xi_hat[idx], v);
        let (c, s) = (self.cos[idx], self.sin[idx]);
        [
            v[0] * c + I * s * a[0],
            v[1] * c + I * s * a[1],
            v[2] * c + I * s * a[2],
            v[3] * c + I * s * a[3],
        ]
    }

    pub fn apply_spectrum(&self, spec: &mut SpinorSpectrum) -> Result<()> {
        self.grid.check_same(spec.grid())?;
        for idx in 0..self.grid.len() {
            let v = self.apply_mode(idx, &spec.get(idx));
            spec.set(idx, v);
        }
        Ok(())
    }

    pub fn apply(&self, f: SpinorField3D) -> Result<SpinorField3D> {
        let mut spec = f.into_spectrum();
        self.apply_spectrum(&mut spec)?;
        Ok(spec.into_field())
    }
}

/// `exp(i t D) f`.
pub fn free_propagate(f: &SpinorField3D, t: f64) -> SpinorField3D {
    if t == 0.0 {
        return f.clone();
    }
    FreeFlow::new(f.grid(), t)
        .apply(f.clone())
        .expect("flow built on the field's own grid")
}

/// Quadrature rule for [`duhamel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quadrature {
    Trapezoid,
    Simpson,
}

/// Generator used inside the Duhamel integral; `Zero` is a test hook that
/// replaces `D` by the zero multiplier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DuhamelGenerator {
    Dirac,
    Zero,
}

/// `i int_0^t exp(i (t - s) D) F(s) ds` from samples `(s_k, F(s_k))` with
/// `s_0 = 0`.
///
/// `t` must coincide with one of the sample times; Simpson additionally
/// needs equally spaced nodes and an even number of intervals.
pub fn duhamel(
    samples: &[(f64, SpinorField3D)],
    t: f64,
    rule: Quadrature,
    generator: DuhamelGenerator,
) -> Result<SpinorField3D> {
    let first = samples
        .first()
        .ok_or_else(|| Error::OutOfRange("Duhamel integral needs at least one sample".into()))?;
    let grid = *first.1.grid();
    let tol = 1e-12 * t.abs().max(1.0);
    if first.0.abs() > tol {
        return Err(Error::OutOfRange(format!(
            "Duhamel samples start at {} instead of 0",
            first.0
        )));
    }
    if t == 0.0 {
        return Ok(SpinorField3D::zeros(grid));
    }
    let end = samples
        .iter()
        .position(|(s, _)| (s - t).abs() <= tol)
        .ok_or_else(|| Error::OutOfRange(format!("t = {t} is not a sampled time")))?;
    let nodes = &samples[..=end];
    if nodes.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::InvalidConfig("Duhamel sample times must increase".into()));
    }
    let weights = quadrature_weights(&nodes.iter().map(|(s, _)| *s).collect::<Vec<_>>(), rule)?;
    let mut acc = SpinorSpectrum::zeros(grid);
    for ((s, f), w) in nodes.iter().zip(weights) {
        let mut spec = f.to_spectrum();
        if generator == DuhamelGenerator::Dirac {
            FreeFlow::new(&grid, t - s).apply_spectrum(&mut spec)?;
        }
        acc.axpy(I * w, &spec)?;
    }
    Ok(acc.into_field())
}

/// Composite trapezoid (any nodes) or Simpson (uniform, even count) weights.
pub fn quadrature_weights(nodes: &[f64], rule: Quadrature) -> Result<Vec<f64>> {
    let n = nodes.len();
    let mut w = vec![0.0; n];
    if n < 2 {
        return Ok(w);
    }
    match rule {
        Quadrature::Trapezoid => {
            for k in 0..n - 1 {
                let h = nodes[k + 1] - nodes[k];
                w[k] += 0.5 * h;
                w[k + 1] += 0.5 * h;
            }
        }
        Quadrature::Simpson => {
            let h = (nodes[n - 1] - nodes[0]) / (n - 1) as f64;
            let uniform = nodes
                .iter()
                .enumerate()
                .all(|(k, s)| (s - nodes[0] - k as f64 * h).abs() <= 1e-9 * h);
            if !uniform || (n - 1) % 2 != 0 {
                return Err(Error::InvalidConfig(
                    "Simpson's rule needs equally spaced nodes and an even number of intervals".into(),
                ));
            }
            for (k, wk) in w.iter_mut().enumerate() {
                let c = if k == 0 || k == n - 1 {
                    1.0
                } else if k % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                *wk = c * h / 3.0;
            }
        }
    }
    Ok(w)
}

/// One monomial `coeff * prod factors` contributing to component `out`.
///
/// Factor indices `0..4` select `u_c`, indices `4..8` select `conj(u_{c-4})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CubicTerm {
    pub out: usize,
    pub coeff: (f64, f64),
    pub factors: [usize; 3],
}

impl CubicTerm {
    fn eval(&self, u: &Spinor) -> C64 {
        let f = |k: usize| if k < 4 { u[k] } else { u[k - 4].conj() };
        C64::new(self.coeff.0, self.coeff.1) * f(self.factors[0]) * f(self.factors[1]) * f(self.factors[2])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CubicNonlinearity {
    None,
    /// `g <beta u, u> u`
    BetaForm {
        #[serde(default = "unit")]
        coupling: f64,
    },
    /// Arbitrary homogeneous cubic in `(u, conj u)`.
    GeneralPoly { terms: Vec<CubicTerm> },
}

fn unit() -> f64 {
    1.0
}

impl Default for CubicNonlinearity {
    fn default() -> Self {
        CubicNonlinearity::None
    }
}

impl CubicNonlinearity {
    pub fn beta_form() -> Self {
        CubicNonlinearity::BetaForm { coupling: 1.0 }
    }

    /// A cubic that is not gauge invariant: `P3(u)_c = conj(u_c)^3 / 4`.
    pub fn non_gauge_example() -> Self {
        CubicNonlinearity::GeneralPoly {
            terms: (0..4)
                .map(|c| CubicTerm {
                    out: c,
                    coeff: (0.25, 0.0),
                    factors: [c + 4, c + 4, c + 4],
                })
                .collect(),
        }
    }

    pub fn is_none(&self) -> bool {
        match self {
            CubicNonlinearity::None => true,
            CubicNonlinearity::BetaForm { coupling } => *coupling == 0.0,
            CubicNonlinearity::GeneralPoly { terms } => terms.is_empty(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let CubicNonlinearity::GeneralPoly { terms } = self {
            for t in terms {
                if t.out > 3 || t.factors.iter().any(|f| *f > 7) {
                    return Err(Error::InvalidConfig(format!("bad cubic term {t:?}")));
                }
                if !(t.coeff.0.is_finite() && t.coeff.1.is_finite()) {
                    return Err(Error::NonFinite("cubic coefficient".into()));
                }
            }
        }
        Ok(())
    }

    /// `P3(u)` at a point.
    pub fn eval(&self, u: &Spinor) -> Spinor {
        match self {
            CubicNonlinearity::None => [ZERO; 4],
            CubicNonlinearity::BetaForm { coupling } => {
                let n = coupling * beta_form(u);
                [u[0] * n, u[1] * n, u[2] * n, u[3] * n]
            }
            CubicNonlinearity::GeneralPoly { terms } => {
                let mut out = [ZERO; 4];
                for t in terms {
                    out[t.out] += t.eval(u);
                }
                out
            }
        }
    }

    /// A constant with `|P3(u)| <= C |u|^3` for every `u`.
    pub fn bound_constant(&self) -> f64 {
        match self {
            CubicNonlinearity::None => 0.0,
            CubicNonlinearity::BetaForm { coupling } => coupling.abs(),
            CubicNonlinearity::GeneralPoly { terms } => {
                let mut per = [0.0f64; 4];
                for t in terms {
                    per[t.out] += t.coeff.0.hypot(t.coeff.1);
                }
                per.iter().map(|p| p * p).sum::<f64>().sqrt()
            }
        }
    }

    /// Exact (beta form) or RK4 (general) solution of `u' = -i P3(u)` over `tau`.
    pub fn flow(&self, u: &Spinor, tau: f64) -> Spinor {
        match self {
            CubicNonlinearity::None => *u,
            CubicNonlinearity::BetaForm { coupling } => {
                let ph = C64::from_polar(1.0, -tau * coupling * beta_form(u));
                [u[0] * ph, u[1] * ph, u[2] * ph, u[3] * ph]
            }
            CubicNonlinearity::GeneralPoly { .. } => {
                let rhs = |v: &Spinor| {
                    let p = self.eval(v);
                    [-I * p[0], -I * p[1], -I * p[2], -I * p[3]]
                };
                let add = |a: &Spinor, b: &Spinor, s: f64| {
                    [a[0] + b[0] * s, a[1] + b[1] * s, a[2] + b[2] * s, a[3] + b[3] * s]
                };
                let k1 = rhs(u);
                let k2 = rhs(&add(u, &k1, 0.5 * tau));
                let k3 = rhs(&add(u, &k2, 0.5 * tau));
                let k4 = rhs(&add(u, &k3, tau));
                let mut out = *u;
                for c in 0..4 {
                    out[c] += (k1[c] + k2[c] * 2.0 + k3[c] * 2.0 + k4[c]) * (tau / 6.0);
                }
                out
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Lie,
    Strang,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub dt: f64,
    pub t_final: f64,
    pub scheme: Scheme,
    /// Instants at which norms (and snapshots) are recorded.
    pub record_times: Vec<f64>,
    /// Radius containing the data's support, for the causality guard.
    pub support_radius: Option<f64>,
    #[serde(default)]
    pub keep_snapshots: bool,
}

impl EvolutionConfig {
    /// Records `n_records + 1` equally spaced times on `[0, T]`.
    pub fn uniform(dt: f64, t_final: f64, scheme: Scheme, n_records: usize) -> Self {
        let record_times = (0..=n_records)
            .map(|k| t_final * k as f64 / n_records.max(1) as f64)
            .collect();
        Self {
            dt,
            t_final,
            scheme,
            record_times,
            support_radius: None,
            keep_snapshots: false,
        }
    }

    pub fn with_support_radius(mut self, r: f64) -> Self {
        self.support_radius = Some(r);
        self
    }

    pub fn with_snapshots(mut self) -> Self {
        self.keep_snapshots = true;
        self
    }

    /// Checks the invariants and, when `grid` is given, the causality guard
    /// `T + R < L`.
    pub fn validate(&self, grid: Option<&GridSpec>) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidConfig(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(Error::InvalidConfig(format!("T must be >= 0, got {}", self.t_final)));
        }
        let eps = 1e-12 * self.t_final.max(1.0);
        if self
            .record_times
            .iter()
            .any(|t| !(*t >= -eps && *t <= self.t_final + eps))
        {
            return Err(Error::InvalidConfig("record_times must lie in [0, T]".into()));
        }
        if self.record_times.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidConfig("record_times must be sorted".into()));
        }
        if let (Some(grid), Some(r)) = (grid, self.support_radius) {
            if self.t_final + r >= grid.half_width {
                return Err(Error::InvalidConfig(format!(
                    "causality guard violated: T + R = {} >= L = {}",
                    self.t_final + r,
                    grid.half_width
                )));
            }
        }
        Ok(())
    }

    /// Step boundaries: every record time is hit exactly, and each gap is
    /// split into equal steps no longer than `dt`.
    pub fn step_plan(&self) -> Vec<(f64, f64)> {
        let mut stops: Vec<f64> = self.record_times.clone();
        stops.push(self.t_final);
        stops.retain(|t| *t > 0.0);
        stops.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs().max(1.0));
        let mut plan = Vec::new();
        let mut t0 = 0.0;
        for &t1 in &stops {
            let gap = t1 - t0;
            if gap <= 1e-12 * t1.max(1.0) {
                continue;
            }
            let n = (gap / self.dt - 1e-9).ceil().max(1.0) as usize;
            let h = gap / n as f64;
            for k in 0..n {
                let end = if k + 1 == n { t1 } else { t0 + (k + 1) as f64 * h };
                plan.push((t0 + k as f64 * h, end));
            }
            t0 = t1;
        }
        plan
    }
}

/// One line of the norm log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormRecord {
    pub t: f64,
    #[serde(rename = "L2")]
    pub l2: f64,
    #[serde(rename = "H1")]
    pub h1: f64,
    #[serde(rename = "Linf")]
    pub linf: f64,
}

impl NormRecord {
    pub fn of(t: f64, u: &SpinorField3D) -> Self {
        let spec = u.to_spectrum();
        Self {
            t,
            l2: u.l2_norm(),
            h1: sobolev_norm_spectrum(&spec, 1.0, false),
            linf: u.sup_norm(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub records: Vec<NormRecord>,
    pub snapshots: Vec<(f64, SpinorField3D)>,
}

impl Trajectory {
    pub fn max_h1(&self) -> f64 {
        self.records.iter().map(|r| r.h1).fold(0.0, f64::max)
    }
}

/// Split-step integrator with cached free-flow and potential tables.
pub struct SplitStepper<'a> {
    potential: Option<&'a PotentialField>,
    nonlinearity: &'a CubicNonlinearity,
    scheme: Scheme,
    cache: Option<(u64, FreeFlow, Option<PotentialExponential>)>,
}

/// Step lengths from a step plan differ from `dt` only by rounding.
pub(crate) fn same_step(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

impl<'a> SplitStepper<'a> {
    pub fn new(
        potential: Option<&'a PotentialField>,
        nonlinearity: &'a CubicNonlinearity,
        scheme: Scheme,
    ) -> Self {
        Self {
            potential,
            nonlinearity,
            scheme,
            cache: None,
        }
    }

    fn prepare(&mut self, grid: &GridSpec, dt: f64) {
        if matches!(&self.cache, Some((_, f, _)) if same_step(f.t, dt) && f.grid == *grid) {
            return;
        }
        let tau = match self.scheme {
            Scheme::Lie => dt,
            Scheme::Strang => 0.5 * dt,
        };
        let exp = self.potential.map(|v| v.exponential(0.5 * tau));
        self.cache = Some((dt.to_bits(), FreeFlow::new(grid, dt), exp));
    }

    fn pointwise(&self, u: &mut SpinorField3D) {
        let (_, _, exp) = self.cache.as_ref().expect("prepared");
        let nl = self.nonlinearity;
        let tau = match self.scheme {
            Scheme::Lie => self.cache.as_ref().map(|c| c.1.t).unwrap_or(0.0),
            Scheme::Strang => 0.5 * self.cache.as_ref().map(|c| c.1.t).unwrap_or(0.0),
        };
        let v = self.potential;
        u.map_points(|idx, mut s| {
            if let (Some(v), Some(e)) = (v, exp) {
                s = v.exp_apply_at(e, idx, &s);
            }
            s = nl.flow(&s, tau);
            if let (Some(v), Some(e)) = (v, exp) {
                s = v.exp_apply_at(e, idx, &s);
            }
            s
        });
    }

    /// One step of length `dt`.
    pub fn step(&mut self, u: SpinorField3D, dt: f64) -> Result<SpinorField3D> {
        let grid = *u.grid();
        if let Some(v) = self.potential {
            grid.check_same(v.grid())?;
        }
        self.prepare(&grid, dt);
        let trivial = self.potential.is_none() && self.nonlinearity.is_none();
        let free = &self.cache.as_ref().expect("prepared").1;
        if trivial {
            return free.apply(u);
        }
        match self.scheme {
            Scheme::Lie => {
                let mut u = free.apply(u)?;
                self.pointwise(&mut u);
                Ok(u)
            }
            Scheme::Strang => {
                let mut u = u;
                self.pointwise(&mut u);
                let free = &self.cache.as_ref().expect("prepared").1;
                let mut u = free.apply(u)?;
                self.pointwise(&mut u);
                Ok(u)
            }
        }
    }
}

/// Pointwise flow of `u_t = i V u - i P3(u)` over `tau`, as used inside a
/// split step: `exp(i tau/2 V)`, then the nonlinear flow, then
/// `exp(i tau/2 V)`.
pub fn pointwise_substep(
    u: &SpinorField3D,
    potential: Option<&PotentialField>,
    nonlinearity: &CubicNonlinearity,
    tau: f64,
) -> Result<SpinorField3D> {
    let exp = potential.map(|v| v.exponential(0.5 * tau));
    if let Some(v) = potential {
        u.grid().check_same(v.grid())?;
    }
    let mut out = u.clone();
    out.map_points(|idx, mut s| {
        if let (Some(v), Some(e)) = (potential, &exp) {
            s = v.exp_apply_at(e, idx, &s);
        }
        s = nonlinearity.flow(&s, tau);
        if let (Some(v), Some(e)) = (potential, &exp) {
            s = v.exp_apply_at(e, idx, &s);
        }
        s
    });
    Ok(out)
}

/// One Lie or Strang step of length `dt`.
pub fn step_nonlinear(
    u: &SpinorField3D,
    potential: Option<&PotentialField>,
    nonlinearity: &CubicNonlinearity,
    dt: f64,
    scheme: Scheme,
) -> Result<SpinorField3D> {
    let out = SplitStepper::new(potential, nonlinearity, scheme).step(u.clone(), dt)?;
    if !out.is_finite() {
        return Err(Error::SolverBlowup {
            step: 0,
            time: dt,
            reason: "non-finite value after one step".into(),
        });
    }
    Ok(out)
}

/// Repeated split steps, calling `observer(t, u)` at every record time.
pub fn evolve_observed(
    f: &SpinorField3D,
    potential: Option<&PotentialField>,
    nonlinearity: &CubicNonlinearity,
    cfg: &EvolutionConfig,
    mut observer: impl FnMut(f64, &SpinorField3D) -> Result<()>,
) -> Result<()> {
    cfg.validate(Some(f.grid()))?;
    nonlinearity.validate()?;
    f.ensure_finite("initial data")?;
    let sup0 = f.sup_norm();
    if log_enabled!(Level::Debug) {
        let vmax = potential.map(|v| v.sup_operator_norm()).unwrap_or(0.0);
        debug!(
            "split-step stability number dt (|V| + C |u|^2) = {:.3e}",
            cfg.dt * (vmax + nonlinearity.bound_constant() * sup0 * sup0)
        );
    }
    let eps = 1e-12 * cfg.t_final.max(1.0);
    let mut records = cfg.record_times.iter().peekable();
    let mut u = f.clone();
    while let Some(t) = records.peek() {
        if t.abs() > eps {
            break;
        }
        observer(0.0, &u)?;
        records.next();
    }
    let mut stepper = SplitStepper::new(potential, nonlinearity, cfg.scheme);
    for (step, (t0, t1)) in cfg.step_plan().into_iter().enumerate() {
        u = stepper.step(u, t1 - t0)?;
        if !u.is_finite() {
            return Err(Error::SolverBlowup {
                step: step + 1,
                time: t1,
                reason: "non-finite value".into(),
            });
        }
        let sup = u.sup_norm();
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
            observer(**t, &u)?;
            records.next();
        }
    }
    Ok(())
}

/// [`evolve_observed`] collecting the norm log and, if requested, snapshots.
pub fn evolve(
    f: &SpinorField3D,
    potential: Option<&PotentialField>,
    nonlinearity: &CubicNonlinearity,
    cfg: &EvolutionConfig,
) -> Result<Trajectory> {
    let mut traj = Trajectory::default();
    evolve_observed(f, potential, nonlinearity, cfg, |t, u| {
        traj.records.push(NormRecord::of(t, u));
        if cfg.keep_snapshots {
            traj.snapshots.push((t, u.clone()));
        }
        Ok(())
    })?;
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bump(grid: GridSpec) -> SpinorField3D {
        SpinorField3D::from_fn(grid, |x| {
            let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
            let g = (-r2).exp();
            [C64::new(g, 0.0), C64::new(0.0, 0.5 * g * x[0]), C64::new(0.3 * g, 0.0), ZERO]
        })
    }

    #[test]
    fn step_plan_hits_record_times() {
        let cfg = EvolutionConfig {
            dt: 0.3,
            t_final: 1.0,
            scheme: Scheme::Strang,
            record_times: vec![0.0, 0.5, 1.0],
            support_radius: None,
            keep_snapshots: false,
        };
        let plan = cfg.step_plan();
        assert_eq!(plan.len(), 4);
        assert!((plan[1].1 - 0.5).abs() < 1e-15);
        assert!((plan[3].1 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn causality_guard_rejects_long_runs() {
        let g = GridSpec::new(16, 4.0).unwrap();
        let cfg = EvolutionConfig::uniform(0.1, 3.0, Scheme::Strang, 3).with_support_radius(1.5);
        assert!(cfg.validate(Some(&g)).is_err());
    }

    #[test]
    fn trivial_step_is_free_flow() {
        let g = GridSpec::new(16, 4.0).unwrap();
        let f = bump(g);
        let a = step_nonlinear(&f, None, &CubicNonlinearity::None, 0.1, Scheme::Strang).unwrap();
        let b = free_propagate(&f, 0.1);
        assert!(a.relative_l2_distance(&b).unwrap() < 1e-15);
    }

    #[test]
    fn simpson_weights_integrate_cubics() {
        let nodes: Vec<f64> = (0..9).map(|k| k as f64 * 0.25).collect();
        let w = quadrature_weights(&nodes, Quadrature::Simpson).unwrap();
        let s: f64 = nodes.iter().zip(&w).map(|(x, w)| w * x.powi(3)).sum();
        assert!((s - 4.0).abs() < 1e-13);
        assert!(quadrature_weights(&nodes[..8], Quadrature::Simpson).is_err());
    }

    #[test]
    fn bound_constant_dominates() {
        let p = CubicNonlinearity::non_gauge_example();
        let u: Spinor = [C64::new(0.3, -0.2), C64::new(0.1, 0.9), C64::new(-0.5, 0.0), C64::new(0.2, 0.2)];
        let n = crate::clifford::spinor_norm_sq(&u).sqrt();
        let pn = crate::clifford::spinor_norm_sq(&p.eval(&u)).sqrt();
        assert!(pn <= p.bound_constant() * n.powi(3));
    }
}
