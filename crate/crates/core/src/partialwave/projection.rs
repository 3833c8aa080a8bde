use log::warn;
use serde::Serialize;

use super::basis::{spinor_harmonics, AngularBasisPair, QuantumNumbers};
use crate::clifford::{apply_dirac, beta_form, mat_apply, spinor_inner};
use crate::error::{Error, Result};
use crate::field::SpinorField3D;
use crate::grid::{norm3, GridSpec};
use crate::interp::{SamplingMethod, ShellSampler};
use crate::potential::PotentialSpec;
use crate::sphere::SphereGrid;
use crate::{Spinor, C64, ZERO};

const RADIAL_INTERP_ORDER: usize = 6;

/// `u(x) = u+(r) Phi+(x_hat) + u-(r) Phi-(x_hat)` sampled on a uniform radial
/// grid `r_i = r_0 + i dr` with `r_0 = 0` or `r_0 = dr / 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialSpinorState {
    pub qn: QuantumNumbers,
    pub r: Vec<f64>,
    pub u_plus: Vec<C64>,
    pub u_minus: Vec<C64>,
}

impl RadialSpinorState {
    pub fn new(qn: QuantumNumbers, r: Vec<f64>, u_plus: Vec<C64>, u_minus: Vec<C64>) -> Result<Self> {
        if r.len() != u_plus.len() || r.len() != u_minus.len() || r.len() < 2 {
            return Err(Error::GridMismatch("radial profiles and grid differ in length".into()));
        }
        if r[0] < 0.0 || r.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidConfig("radial grid must be increasing and nonnegative".into()));
        }
        if u_plus.iter().chain(&u_minus).any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite("radial profile".into()));
        }
        Ok(Self { qn, r, u_plus, u_minus })
    }

    /// Samples `(u+, u-)` from closures on `r_grid`.
    pub fn from_fn(
        qn: QuantumNumbers,
        r: Vec<f64>,
        f_plus: impl Fn(f64) -> C64,
        f_minus: impl Fn(f64) -> C64,
    ) -> Result<Self> {
        let up = r.iter().map(|&x| f_plus(x)).collect();
        let um = r.iter().map(|&x| f_minus(x)).collect();
        Self::new(qn, r, up, um)
    }

    pub fn zeros(qn: QuantumNumbers, r: Vec<f64>) -> Self {
        let n = r.len();
        Self {
            qn,
            r,
            u_plus: vec![ZERO; n],
            u_minus: vec![ZERO; n],
        }
    }

    /// `r_i = (i + 1/2) dr`, `i < n`.
    pub fn staggered_grid(dr: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| (i as f64 + 0.5) * dr).collect()
    }

    pub fn spacing(&self) -> f64 {
        self.r[1] - self.r[0]
    }

    fn is_staggered(&self) -> bool {
        (self.r[0] - 0.5 * self.spacing()).abs() <= 1e-9 * self.spacing()
    }

    fn check_uniform(&self) -> Result<()> {
        let dr = self.spacing();
        let r0 = self.r[0];
        if !(r0 == 0.0 || self.is_staggered()) {
            return Err(Error::InvalidConfig("radial grid must start at 0 or dr/2".into()));
        }
        if self
            .r
            .iter()
            .enumerate()
            .any(|(i, r)| (r - r0 - i as f64 * dr).abs() > 1e-9 * dr)
        {
            return Err(Error::InvalidConfig("radial grid must be uniform".into()));
        }
        Ok(())
    }

    /// Quadrature weights for `int ... r^2 dr` (midpoint on staggered grids,
    /// trapezoid otherwise).
    pub fn measure(&self) -> Vec<f64> {
        let n = self.r.len();
        let dr = self.spacing();
        (0..n)
            .map(|i| {
                let w = if self.is_staggered() || (i > 0 && i + 1 < n) { dr } else { 0.5 * dr };
                w * self.r[i] * self.r[i]
            })
            .collect()
    }

    /// `(int |u+|^2 + |u-|^2 r^2 dr)^{1/2}`, equal to the 3D `L^2` norm of the lift.
    pub fn l2_norm(&self) -> f64 {
        self.measure()
            .iter()
            .enumerate()
            .map(|(i, w)| w * (self.u_plus[i].norm_sqr() + self.u_minus[i].norm_sqr()))
            .sum::<f64>()
            .sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        self.u_plus
            .iter()
            .zip(&self.u_minus)
            .map(|(a, b)| (a.norm_sqr() + b.norm_sqr()).sqrt())
            .fold(0.0, f64::max)
    }

    /// Values at any `r >= 0` by local Lagrange interpolation, extending to
    /// negative radii with the sector parities; zero beyond the last node.
    pub fn interpolate(&self, r: f64) -> (C64, C64) {
        let n = self.r.len() as i64;
        let dr = self.spacing();
        let r0 = self.r[0];
        if r > self.r[n as usize - 1] + 0.5 * dr {
            return (ZERO, ZERO);
        }
        let (pp, pm) = self.qn.parities();
        let staggered = self.is_staggered();
        let fetch = |i: i64| -> (C64, C64) {
            if i >= n {
                (ZERO, ZERO)
            } else if i >= 0 {
                (self.u_plus[i as usize], self.u_minus[i as usize])
            } else {
                let m = if staggered { -i - 1 } else { -i };
                if m >= n {
                    return (ZERO, ZERO);
                }
                (self.u_plus[m as usize] * pp, self.u_minus[m as usize] * pm)
            }
        };
        let s = (r - r0) / dr;
        let order = RADIAL_INTERP_ORDER;
        let base = s.floor() as i64 - (order as i64 / 2 - 1);
        let t = s - base as f64;
        let (mut a, mut b) = (ZERO, ZERO);
        for j in 0..order {
            let mut w = 1.0;
            for m in 0..order {
                if m != j {
                    w *= (t - m as f64) / (j as f64 - m as f64);
                }
            }
            let (p, q) = fetch(base + j as i64);
            a += p * w;
            b += q * w;
        }
        (a, b)
    }
}

/// Result of [`project`].
#[derive(Debug, Clone)]
pub struct Projection {
    pub state: RadialSpinorState,
    /// `||u(r .)||_{L^2(S^2)}` per shell.
    pub shell_norm: Vec<f64>,
    /// `||u(r .) - u+ Phi+ - u- Phi-||_{L^2(S^2)}` per shell.
    pub residual: Vec<f64>,
    /// Shells lying outside the sphere inscribed in the box.
    pub truncated: usize,
}

impl Projection {
    /// `max_r residual / max_r shell norm` (0 for a vanishing field).
    pub fn leakage(&self) -> f64 {
        let scale = self.shell_norm.iter().cloned().fold(0.0, f64::max);
        let res = self.residual.iter().cloned().fold(0.0, f64::max);
        if scale > 0.0 {
            res / scale
        } else {
            res
        }
    }
}

/// Coefficients of a sphere-sampled spinor on `Phi+-`, the off-sector norm
/// and the total norm.
pub(crate) fn sphere_project(pair: &AngularBasisPair, values: &[Spinor]) -> (C64, C64, f64, f64) {
    let s = &pair.sphere;
    let mut cp = ZERO;
    let mut cm = ZERO;
    let mut total = 0.0;
    for (q, v) in values.iter().enumerate() {
        let w = s.weight(q);
        cp += spinor_inner(&pair.phi_plus[q], v) * w;
        cm += spinor_inner(&pair.phi_minus[q], v) * w;
        total += v.iter().map(|z| z.norm_sqr()).sum::<f64>() * w;
    }
    let mut res = 0.0;
    for (q, v) in values.iter().enumerate() {
        let mut d = 0.0;
        for c in 0..4 {
            d += (v[c] - cp * pair.phi_plus[q][c] - cm * pair.phi_minus[q][c]).norm_sqr();
        }
        res += d * s.weight(q);
    }
    (cp, cm, res.sqrt(), total.sqrt())
}

/// `u+-(r) = <u(r .), Phi+->_{L^2(S^2)}` on the shells `radii`.
pub fn project(
    u: &SpinorField3D,
    pair: &AngularBasisPair,
    radii: &[f64],
    method: SamplingMethod,
) -> Result<Projection> {
    let grid = u.grid();
    let truncated = radii.iter().filter(|r| **r > grid.half_width).count();
    if truncated > 0 {
        warn!(
            "{truncated} projection shells exceed the inscribed radius {}",
            grid.half_width
        );
    }
    let sampler = ShellSampler::new(pair.sphere.clone(), radii.to_vec(), method);
    let shells = sampler.sample(u);
    let mut up = Vec::with_capacity(radii.len());
    let mut um = Vec::with_capacity(radii.len());
    let mut shell_norm = Vec::with_capacity(radii.len());
    let mut residual = Vec::with_capacity(radii.len());
    for vals in &shells {
        let (a, b, res, tot) = sphere_project(pair, vals);
        up.push(a);
        um.push(b);
        residual.push(res);
        shell_norm.push(tot);
    }
    Ok(Projection {
        state: RadialSpinorState {
            qn: pair.qn,
            r: radii.to_vec(),
            u_plus: up,
            u_minus: um,
        },
        shell_norm,
        residual,
        truncated,
    })
}

/// Off-sector part of `u` relative to its size, over the given shells.
pub fn sector_leakage(
    u: &SpinorField3D,
    pair: &AngularBasisPair,
    radii: &[f64],
    method: SamplingMethod,
) -> Result<f64> {
    Ok(project(u, pair, radii, method)?.leakage())
}

/// The 3D field `u+(r) Phi+ + u-(r) Phi-`, zero beyond the last radius.
pub fn lift(state: &RadialSpinorState, grid: &GridSpec) -> Result<SpinorField3D> {
    state.check_uniform()?;
    let mut out = SpinorField3D::zeros(*grid);
    for idx in 0..grid.len() {
        let x = grid.point(idx);
        let r = norm3(&x);
        let (a, b) = state.interpolate(r);
        if a == ZERO && b == ZERO {
            continue;
        }
        let om = if r > 0.0 { [x[0] / r, x[1] / r, x[2] / r] } else { [0.0, 0.0, 1.0] };
        let (pp, pm) = spinor_harmonics(&state.qn, om);
        out.set(idx, std::array::from_fn(|c| a * pp[c] + b * pm[c]));
    }
    Ok(out)
}

/// Outcome of [`dirac_action_check`].
#[derive(Debug, Clone, Serialize)]
pub struct DiracActionReport {
    /// Off-sector part of `D(g Phi+-)`, relative, maximised over both embeddings.
    pub leakage: f64,
    /// `a` and `b` in `D_rad = [[0, -d/dr + a/r], [d/dr + b/r, 0]]`.
    pub a: f64,
    pub b: f64,
    /// Relative RMS misfit of each one-parameter fit.
    pub fit_residual_a: f64,
    pub fit_residual_b: f64,
    /// Size of the diagonal blocks (should vanish), relative.
    pub diagonal_residual: f64,
}

impl DiracActionReport {
    /// Nearest integers to the fitted coefficients.
    pub fn rounded(&self) -> (i32, i32) {
        (self.a.round() as i32, self.b.round() as i32)
    }
}

/// Embeds `g(r) Phi+` and `g(r) Phi-` with `g = A r^l exp(-r^2/(2 w^2))`,
/// applies the spectral `D`, projects back on the shells `radii` and fits the
/// induced radial operator.
pub fn dirac_action_check(
    pair: &AngularBasisPair,
    grid: &GridSpec,
    amplitude: f64,
    width: f64,
    radii: &[f64],
) -> Result<DiracActionReport> {
    let qn = pair.qn;
    let (lp, lm) = qn.orbital();
    let g = |l: usize, r: f64| amplitude * r.powi(l as i32) * (-r * r / (2.0 * width * width)).exp();
    let dg = |l: usize, r: f64| {
        let e = amplitude * (-r * r / (2.0 * width * width)).exp();
        let lead = if l == 0 { 0.0 } else { l as f64 * r.powi(l as i32 - 1) };
        e * (lead - r.powi(l as i32 + 1) / (width * width))
    };
    let embed = |plus: bool| {
        let l = if plus { lp } else { lm };
        SpinorField3D::from_fn(*grid, |x| {
            let r = norm3(&x);
            let om = if r > 0.0 { [x[0] / r, x[1] / r, x[2] / r] } else { [0.0, 0.0, 1.0] };
            let (pp, pm) = spinor_harmonics(&qn, om);
            let phi = if plus { pp } else { pm };
            let a = C64::new(g(l, r), 0.0);
            std::array::from_fn(|c| a * phi[c])
        })
    };
    let mut leakage = 0.0f64;
    let mut fits = [(0.0, 0.0); 2];
    let mut diagonal = 0.0f64;
    for (slot, plus) in [true, false].into_iter().enumerate() {
        let l = if plus { lp } else { lm };
        let du = apply_dirac(&embed(plus));
        let proj = project(&du, pair, radii, SamplingMethod::Spectral)?;
        leakage = leakage.max(proj.leakage());
        let (same, other) = if plus {
            (&proj.state.u_plus, &proj.state.u_minus)
        } else {
            (&proj.state.u_minus, &proj.state.u_plus)
        };
        // plus:  other = g' + b g/r ;  minus: other = -g' + a g/r
        let sign = if plus { 1.0 } else { -1.0 };
        let mut num = ZERO;
        let mut den = 0.0;
        let mut scale = 0.0f64;
        let mut diag = 0.0f64;
        for (i, &r) in radii.iter().enumerate() {
            if r <= 0.0 {
                continue;
            }
            let basis = g(l, r) / r;
            num += (other[i] - sign * dg(l, r)) * basis;
            den += basis * basis;
            scale = scale.max(other[i].norm());
            diag = diag.max(same[i].norm());
        }
        if den == 0.0 || scale == 0.0 {
            continue;
        }
        diagonal = diagonal.max(diag / scale);
        let coef = (num / den).re;
        let mut mis = 0.0;
        let mut tot = 0.0;
        for (i, &r) in radii.iter().enumerate() {
            if r <= 0.0 {
                continue;
            }
            let model = sign * dg(l, r) + coef * g(l, r) / r;
            mis += (other[i] - model).norm_sqr();
            tot += other[i].norm_sqr();
        }
        fits[slot] = (coef, (mis / tot).sqrt());
    }
    Ok(DiracActionReport {
        leakage,
        b: fits[0].0,
        fit_residual_b: fits[0].1,
        a: fits[1].0,
        fit_residual_a: fits[1].1,
        diagonal_residual: diagonal,
    })
}

/// Outcome of [`reduce_nonlinearity`].
#[derive(Debug, Clone, Serialize)]
pub struct NonlinearityReduction {
    /// Angular mean of `<beta u, u>` per radius.
    pub profile: Vec<f64>,
    /// `||<beta u,u> - mean||_{L^2(S^2)}` per radius.
    pub fluctuation: Vec<f64>,
    /// Relative off-sector part of `<beta u,u> u`.
    pub p3_leakage: f64,
    /// `(c+, c-)` with `<beta u, u> = c+ |u+|^2 + c- |u-|^2`.
    pub coefficients: (f64, f64),
}

impl NonlinearityReduction {
    pub fn max_fluctuation(&self) -> f64 {
        self.fluctuation.iter().cloned().fold(0.0, f64::max)
    }
}

/// Evaluates `<beta u, u>` and `<beta u, u> u` on the sphere for each radius
/// of a `j = 1/2` state.
pub fn reduce_nonlinearity(state: &RadialSpinorState, pair: &AngularBasisPair) -> Result<NonlinearityReduction> {
    if state.qn.two_j != 1 {
        return Err(Error::NotApplicable(format!(
            "the cubic term is sector-invariant only for j = 1/2, got {}",
            state.qn
        )));
    }
    if pair.qn != state.qn {
        return Err(Error::InvalidConfig("basis and state belong to different sectors".into()));
    }
    let s = &pair.sphere;
    let area = 4.0 * std::f64::consts::PI;
    let coeff = |plus: bool| {
        let phi = if plus { &pair.phi_plus } else { &pair.phi_minus };
        (0..s.len()).map(|q| beta_form(&phi[q]) * s.weight(q)).sum::<f64>() / area
    };
    let coefficients = (coeff(true), coeff(false));
    let mut profile = Vec::with_capacity(state.r.len());
    let mut fluctuation = Vec::with_capacity(state.r.len());
    let mut res_max = 0.0f64;
    let mut tot_max = 0.0f64;
    for i in 0..state.r.len() {
        let (a, b) = (state.u_plus[i], state.u_minus[i]);
        let u: Vec<Spinor> = (0..s.len())
            .map(|q| std::array::from_fn(|c| a * pair.phi_plus[q][c] + b * pair.phi_minus[q][c]))
            .collect();
        let n: Vec<f64> = u.iter().map(beta_form).collect();
        let mean = s.integrate_real(&n) / area;
        let fl = n
            .iter()
            .enumerate()
            .map(|(q, v)| (v - mean).powi(2) * s.weight(q))
            .sum::<f64>()
            .sqrt();
        let p3: Vec<Spinor> = u
            .iter()
            .zip(&n)
            .map(|(v, nn)| std::array::from_fn(|c| v[c] * *nn))
            .collect();
        let (_, _, res, tot) = sphere_project(pair, &p3);
        res_max = res_max.max(res);
        tot_max = tot_max.max(tot);
        profile.push(mean);
        fluctuation.push(fl);
    }
    Ok(NonlinearityReduction {
        profile,
        fluctuation,
        p3_leakage: if tot_max > 0.0 { res_max / tot_max } else { res_max },
        coefficients,
    })
}

/// The 2x2 matrix `<Phi^a, V(r .) Phi^b>_{L^2(S^2)}` and the off-sector norm
/// `max_+- ||(1 - P) V(r .) Phi^+-||`.
pub fn sector_potential(pair: &AngularBasisPair, spec: &PotentialSpec, r: f64) -> ([[C64; 2]; 2], f64) {
    let s: &SphereGrid = &pair.sphere;
    let mut m = [[ZERO; 2]; 2];
    let mut leak = 0.0f64;
    for (b, phi) in [&pair.phi_plus, &pair.phi_minus].into_iter().enumerate() {
        let vals: Vec<Spinor> = (0..s.len())
            .map(|q| {
                let p = s.point(q);
                mat_apply(&spec.matrix_at([r * p[0], r * p[1], r * p[2]]), &phi[q])
            })
            .collect();
        let (cp, cm, res, _) = sphere_project(pair, &vals);
        m[0][b] = cp;
        m[1][b] = cm;
        leak = leak.max(res);
    }
    (m, leak)
}
