//! The radial half-wave maximal estimate.
//!
//! For radial `f`,
//!
//! ```text
//! sin(t|D|)/|D| f (x) = (c/|x|) int_{||x|-t|}^{|x|+t} s f(s) ds <= M g(t),
//! ```
//!
//! with `g(s) = s f(s)` extended oddly and `M` the centred Hardy-Littlewood
//! maximal function. [`radial_halfwave_maximal_check`] evaluates the left
//! side spectrally in 3D and by the 1D formula, checks that they agree,
//! checks the domination and measures `||sup_x |.| ||_{L^2_t} / ||f||_{L^2}`
//! on an ensemble of radial bumps.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::clifford::symbols::sin_over;
use crate::data::{rng, RadialBump};
use crate::error::{Error, Result};
use crate::field::ScalarField3D;
use crate::grid::GridSpec;
use crate::sphere::gauss_legendre;
use crate::C64;

/// Panel width and order of the cumulative quadrature for `int_0^s g`.
const PANEL: f64 = 0.05;
const PANEL_ORDER: usize = 10;

/// `G(s) = int_0^s sigma f(sigma) d sigma` for a radial profile, by
/// panelwise Gauss-Legendre quadrature.
pub struct RadialPrimitive<F: Fn(f64) -> f64> {
    f: F,
    nodes: (Vec<f64>, Vec<f64>),
    /// `G` at the panel boundaries `k * PANEL`.
    table: Vec<f64>,
}

impl<F: Fn(f64) -> f64> RadialPrimitive<F> {
    pub fn new(f: F, s_max: f64) -> Self {
        let nodes = gauss_legendre(PANEL_ORDER);
        let panels = (s_max / PANEL).ceil() as usize + 1;
        let mut table = Vec::with_capacity(panels + 1);
        table.push(0.0);
        let mut acc = 0.0;
        let mut out = Self { f, nodes, table: Vec::new() };
        for k in 0..panels {
            acc += out.panel_integral(k as f64 * PANEL, (k + 1) as f64 * PANEL);
            table.push(acc);
        }
        out.table = table;
        out
    }

    fn panel_integral(&self, a: f64, b: f64) -> f64 {
        let h = 0.5 * (b - a);
        let m = 0.5 * (a + b);
        self.nodes
            .0
            .iter()
            .zip(&self.nodes.1)
            .map(|(x, w)| {
                let s = m + h * x;
                w * s * (self.f)(s)
            })
            .sum::<f64>()
            * h
    }

    /// `G(s)` for `s >= 0`; beyond the table `G` is taken as constant.
    pub fn eval(&self, s: f64) -> f64 {
        let k = ((s / PANEL).floor() as usize).min(self.table.len() - 1);
        let a = k as f64 * PANEL;
        if k + 1 >= self.table.len() {
            return self.table[k];
        }
        self.table[k] + self.panel_integral(a, s)
    }

    /// `(c / r) (G(r + t) - G(|r - t|))`, with the limit `2 c t f(t)` at `r = 0`.
    pub fn halfwave(&self, c: f64, t: f64, r: f64) -> f64 {
        if r < 1e-9 {
            return 2.0 * c * t * (self.f)(t);
        }
        c * (self.eval(r + t) - self.eval((r - t).abs())) / r
    }
}

/// The centred maximal function of the odd extension of `g(s) = s f(s)`,
/// `M g(t) = sup_rho (1/2rho) int_{t-rho}^{t+rho} |g|`, over windows
/// `rho = k ds`, `k = 1..`, up to `rho_max`.
pub fn odd_maximal_function(f: impl Fn(f64) -> f64, t: f64, rho_max: f64, ds: f64) -> f64 {
    let m = (rho_max / ds).ceil() as usize;
    let lo = t - m as f64 * ds;
    // Prefix sums of |g| by the trapezoid rule on the window grid.
    let g = |s: f64| (s * f(s.abs())).abs();
    let n = 2 * m;
    let mut prefix = vec![0.0; n + 1];
    let mut prev = g(lo);
    for k in 1..=n {
        let cur = g(lo + k as f64 * ds);
        prefix[k] = prefix[k - 1] + 0.5 * ds * (prev + cur);
        prev = cur;
    }
    (1..=m)
        .map(|k| (prefix[m + k] - prefix[m - k]) / (2.0 * k as f64 * ds))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MaximalConfig {
    pub grid_n: usize,
    pub half_width: f64,
    /// Times at which the two methods are compared.
    pub t_samples: Vec<f64>,
    /// Width of the calibration Gaussian and of the check Gaussian.
    pub reference_width: f64,
    pub check_width: f64,
    pub ensemble: usize,
    pub seed: u64,
    /// Horizon and step of the `L^2_t` norm in part (iv).
    pub t_final: f64,
    pub dt: f64,
    pub cap: f64,
    pub agreement_tolerance: f64,
}

impl Default for MaximalConfig {
    fn default() -> Self {
        Self {
            grid_n: 64,
            half_width: 12.0,
            t_samples: vec![0.0, 0.5, 1.0, 2.0, 3.0, 4.0],
            reference_width: 1.0,
            check_width: 1.3,
            ensemble: 20,
            seed: 2024,
            t_final: 80.0,
            dt: 0.1,
            cap: 100.0,
            agreement_tolerance: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MaximalReport {
    /// Fitted constant of the 1D formula.
    pub c: f64,
    /// Largest relative sup-norm disagreement between the 3D multiplier and
    /// the 1D formula, over the check Gaussian and all `t_samples`.
    pub agreement: f64,
    /// `sup_x |u(t)|` at `t = 0` (must vanish).
    pub value_at_zero: f64,
    /// Largest `sup_x |u(t)| / M g(t)` seen.
    pub domination: f64,
    pub l2_ratios: Vec<f64>,
    pub max_l2_ratio: f64,
    pub passed: bool,
}

fn gaussian(w: f64) -> impl Fn(f64) -> f64 + Copy {
    move |r: f64| (-r * r / (2.0 * w * w)).exp()
}

/// `sin(t|D|)/|D| f` on the grid for radial `f`.
fn spectral_halfwave(grid: &GridSpec, f: impl Fn(f64) -> f64, t: f64) -> Result<ScalarField3D> {
    let u = ScalarField3D::from_fn(*grid, |x| C64::new(f((x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()), 0.0));
    u.apply_multiplier(|xi| C64::new(sin_over(t, (xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]).sqrt()), 0.0))
}

/// Grid radii with their first index, deduplicated by `|k - N/2|^2`.
fn distinct_radii(grid: &GridSpec) -> Vec<(f64, Vec<usize>)> {
    let mut by_key: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    let c = grid.n / 2;
    for idx in 0..grid.len() {
        let (i, j, k) = grid.unindex(idx);
        let d = |a: usize| a.abs_diff(c).pow(2);
        by_key.entry(d(i) + d(j) + d(k)).or_default().push(idx);
    }
    let h = grid.spacing();
    by_key.into_iter().map(|(k, v)| (h * (k as f64).sqrt(), v)).collect()
}

/// Runs parts (i)-(iv) of the maximal-function check.
pub fn radial_halfwave_maximal_check(cfg: &MaximalConfig) -> Result<MaximalReport> {
    if cfg.ensemble == 0 || cfg.t_samples.is_empty() {
        return Err(Error::InvalidConfig("maximal check needs samples and times".into()));
    }
    let grid = GridSpec::new(cfg.grid_n, cfg.half_width)?;
    let radii = distinct_radii(&grid);
    let t_ref = cfg.t_samples.iter().cloned().fold(0.0, f64::max).max(1.0);
    let s_max = 3.0 * cfg.half_width + 2.0 * t_ref;

    // Calibrate c by least squares at t = 1 on the reference Gaussian.
    let fref = gaussian(cfg.reference_width);
    let g_ref = RadialPrimitive::new(fref, s_max);
    let spec = spectral_halfwave(&grid, fref, 1.0)?;
    let (mut num, mut den) = (0.0, 0.0);
    for (r, idx) in &radii {
        let b = g_ref.halfwave(1.0, 1.0, *r);
        for &i in idx {
            num += spec.values()[i].re * b;
            den += b * b;
        }
    }
    let c = num / den;

    // (i) versus (ii) with c frozen.
    let fchk = gaussian(cfg.check_width);
    let g_chk = RadialPrimitive::new(fchk, s_max);
    let mut agreement = 0.0f64;
    let mut value_at_zero = 0.0f64;
    let mut domination = 0.0f64;
    for &t in &cfg.t_samples {
        let spec = spectral_halfwave(&grid, fchk, t)?;
        let mut diff = 0.0f64;
        let mut scale = 0.0f64;
        for (r, idx) in &radii {
            let b = g_chk.halfwave(c, t, *r);
            for &i in idx {
                diff = diff.max((spec.values()[i] - b).norm());
                scale = scale.max(spec.values()[i].norm());
            }
        }
        if t == 0.0 {
            value_at_zero = value_at_zero.max(scale);
        } else {
            agreement = agreement.max(diff / scale);
            let m = odd_maximal_function(fchk, t, t + 12.0 * cfg.check_width, 1e-3);
            domination = domination.max(scale / m);
        }
    }

    // (iii) and (iv) on random bumps via the 1D formula.
    let mut rng = rng(cfg.seed);
    let steps = (cfg.t_final / cfg.dt).round() as usize;
    let mut l2_ratios = Vec::with_capacity(cfg.ensemble);
    for _ in 0..cfg.ensemble {
        let bump = RadialBump::random(&mut rng, 0.5, 1.5, 3.0);
        let f = move |r: f64| bump.value(r);
        let support = bump.support_radius();
        let prim = RadialPrimitive::new(f, support + cfg.t_final + 1.0);
        let f_norm = (4.0 * PI * (prim_sq(f, support))).sqrt();
        let dr = 0.02f64.min(bump.width / 20.0);
        let mut acc = 0.0;
        let mut prev = 0.0;
        for k in 0..=steps {
            let t = k as f64 * cfg.dt;
            let (lo, hi) = ((t - support).max(0.0), t + support);
            let nr = ((hi - lo) / dr).ceil() as usize;
            let sup = (0..=nr)
                .map(|i| prim.halfwave(c, t, lo + i as f64 * dr).abs())
                .fold(if lo > 0.0 { 0.0 } else { prim.halfwave(c, t, 0.0).abs() }, f64::max);
            if k > 0 {
                acc += 0.5 * cfg.dt * (prev * prev + sup * sup);
            }
            prev = sup;
            if k % 20 == 10 {
                let m = odd_maximal_function(f, t, t + support, 1e-3);
                if m > 1e-12 {
                    domination = domination.max(sup / m);
                }
            }
        }
        l2_ratios.push(acc.sqrt() / f_norm);
    }
    let max_l2_ratio = l2_ratios.iter().cloned().fold(0.0, f64::max);
    let passed = agreement <= cfg.agreement_tolerance
        && value_at_zero == 0.0
        && domination <= 1.0 + 1e-3
        && l2_ratios.iter().all(|r| r.is_finite())
        && max_l2_ratio <= cfg.cap;
    Ok(MaximalReport {
        c,
        agreement,
        value_at_zero,
        domination,
        l2_ratios,
        max_l2_ratio,
        passed,
    })
}

/// `int_0^R f(r)^2 r^2 dr` by composite Gauss-Legendre.
fn prim_sq(f: impl Fn(f64) -> f64, r_max: f64) -> f64 {
    let (x, w) = gauss_legendre(PANEL_ORDER);
    let panels = (r_max / PANEL).ceil() as usize;
    let mut acc = 0.0;
    for k in 0..panels {
        let (a, b) = (k as f64 * PANEL, (k + 1) as f64 * PANEL);
        let (h, m) = (0.5 * (b - a), 0.5 * (a + b));
        for (x, w) in x.iter().zip(&w) {
            let r = m + h * x;
            acc += w * h * r * r * f(r).powi(2);
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primitive_of_gaussian() {
        // int_0^s x e^{-x^2/2} dx = 1 - e^{-s^2/2}
        let p = RadialPrimitive::new(gaussian(1.0), 20.0);
        for s in [0.0, 0.3, 1.7, 4.0] {
            assert!((p.eval(s) - (1.0 - (-s * s / 2.0f64).exp())).abs() < 1e-13);
        }
    }

    #[test]
    fn maximal_function_of_constant_slope() {
        // f = 1 on [0, inf): g(s) = |s|, whose centred averages at t > 0 are
        // at least t and grow with the window.
        let m = odd_maximal_function(|_| 1.0, 1.0, 1.0, 1e-3);
        assert!((m - 1.0).abs() < 1e-3);
    }
}
