//! Quadrature and spherical harmonics on the unit sphere.
//!
//! The angular grid is Gauss-Legendre in `cos(theta)` times a uniform grid in
//! `phi`. With band limit `B` it has `B + 1` latitudes and `2B + 2`
//! longitudes, which integrates products of harmonics of degree `<= B`
//! exactly.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::{C64, ZERO};

/// Default angular band limit.
pub const DEFAULT_BAND_LIMIT: usize = 16;

/// Relative resynthesis residual above which a sampled function is deemed
/// not band-limited.
const BAND_LIMIT_TOLERANCE: f64 = 1e-9;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        dp = if d != 0.0 { d } else { dp };
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[inline]
pub fn lm_index(l: usize, m: i64) -> usize {
    ((l * l + l) as i64 + m) as usize
}

#[inline]
fn plm_index(l: usize, m: usize) -> usize {
    l * (l + 1) / 2 + m
}

/// Orthonormal associated Legendre functions `Pbar_l^m(x)`, `0 <= m <= l <= lmax`,
/// including the Condon-Shortley phase, indexed by `l(l+1)/2 + m`.
pub fn normalized_legendre(lmax: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; (lmax + 1) * (lmax + 2) / 2];
    let s = (1.0 - x * x).max(0.0).sqrt();
    let mut pmm = (1.0 / (4.0 * PI)).sqrt();
    for m in 0..=lmax {
        if m > 0 {
            pmm *= -((2 * m + 1) as f64 / (2 * m) as f64).sqrt() * s;
        }
        out[plm_index(m, m)] = pmm;
        if m < lmax {
            out[plm_index(m + 1, m)] = ((2 * m + 3) as f64).sqrt() * x * pmm;
        }
        for l in (m + 2)..=lmax {
            let (lf, mf) = (l as f64, m as f64);
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0)).sqrt();
            out[plm_index(l, m)] = a * (x * out[plm_index(l - 1, m)] - b * out[plm_index(l - 2, m)]);
        }
    }
    out
}

/// All `Y_l^m(omega)` for `l <= lmax`, indexed by [`lm_index`].
pub fn sph_harm_all(lmax: usize, omega: [f64; 3]) -> Vec<C64> {
    let r = (omega[0] * omega[0] + omega[1] * omega[1] + omega[2] * omega[2]).sqrt();
    let (ct, phi) = if r == 0.0 {
        (1.0, 0.0)
    } else {
        ((omega[2] / r).clamp(-1.0, 1.0), omega[1].atan2(omega[0]))
    };
    let p = normalized_legendre(lmax, ct);
    let mut out = vec![ZERO; (lmax + 1) * (lmax + 1)];
    for l in 0..=lmax {
        for m in 0..=l {
            let y = C64::from_polar(p[plm_index(l, m)], m as f64 * phi);
            out[lm_index(l, m as i64)] = y;
            if m > 0 {
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                out[lm_index(l, -(m as i64))] = y.conj() * sign;
            }
        }
    }
    out
}

/// A single `Y_l^m(omega)`; zero when `|m| > l`.
pub fn sph_harm(l: usize, m: i64, omega: [f64; 3]) -> C64 {
    if m.unsigned_abs() as usize > l {
        return ZERO;
    }
    sph_harm_all(l, omega)[lm_index(l, m)]
}

#[derive(Debug, Clone, PartialEq)]
pub struct SphereGrid {
    band_limit: usize,
    cos_theta: Vec<f64>,
    theta_weights: Vec<f64>,
    n_phi: usize,
    /// `Pbar_l^m(cos theta_i)` per latitude.
    plm: Vec<Vec<f64>>,
}

impl SphereGrid {
    pub fn new(band_limit: usize) -> Self {
        let n_theta = band_limit + 1;
        let (cos_theta, theta_weights) = gauss_legendre(n_theta);
        let plm = cos_theta
            .iter()
            .map(|&x| normalized_legendre(band_limit, x))
            .collect();
        Self {
            band_limit,
            cos_theta,
            theta_weights,
            n_phi: 2 * band_limit + 2,
            plm,
        }
    }

    pub fn band_limit(&self) -> usize {
        self.band_limit
    }

    pub fn n_theta(&self) -> usize {
        self.cos_theta.len()
    }

    pub fn n_phi(&self) -> usize {
        self.n_phi
    }

    pub fn len(&self) -> usize {
        self.n_theta() * self.n_phi
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn n_coefficients(&self) -> usize {
        (self.band_limit + 1) * (self.band_limit + 1)
    }

    pub fn cos_theta(&self, i: usize) -> f64 {
        self.cos_theta[i]
    }

    pub fn phi(&self, k: usize) -> f64 {
        2.0 * PI * k as f64 / self.n_phi as f64
    }

    /// Unit vector of quadrature point `q = i * n_phi + k`.
    pub fn point(&self, q: usize) -> [f64; 3] {
        let (i, k) = (q / self.n_phi, q % self.n_phi);
        let ct = self.cos_theta[i];
        let st = (1.0 - ct * ct).max(0.0).sqrt();
        let phi = self.phi(k);
        [st * phi.cos(), st * phi.sin(), ct]
    }

    pub fn points(&self) -> Vec<[f64; 3]> {
        (0..self.len()).map(|q| self.point(q)).collect()
    }

    pub fn weight(&self, q: usize) -> f64 {
        self.theta_weights[q / self.n_phi] * 2.0 * PI / self.n_phi as f64
    }

    pub fn weights(&self) -> Vec<f64> {
        (0..self.len()).map(|q| self.weight(q)).collect()
    }

    pub fn integrate(&self, values: &[C64]) -> C64 {
        values
            .iter()
            .enumerate()
            .map(|(q, v)| v * self.weight(q))
            .sum()
    }

    pub fn integrate_real(&self, values: &[f64]) -> f64 {
        values
            .iter()
            .enumerate()
            .map(|(q, v)| v * self.weight(q))
            .sum()
    }

    /// Spherical-harmonic coefficients `a_lm = int f conj(Y_l^m)`.
    pub fn analyze(&self, values: &[C64]) -> Vec<C64> {
        assert_eq!(values.len(), self.len());
        let b = self.band_limit;
        let dphi = 2.0 * PI / self.n_phi as f64;
        let mut coeffs = vec![ZERO; self.n_coefficients()];
        let mut gm = vec![ZERO; 2 * b + 1];
        for i in 0..self.n_theta() {
            let row = &values[i * self.n_phi..(i + 1) * self.n_phi];
            for (slot, m) in (-(b as i64)..=b as i64).enumerate() {
                let mut acc = ZERO;
                for (k, v) in row.iter().enumerate() {
                    acc += v * C64::from_polar(1.0, -(m as f64) * self.phi(k));
                }
                gm[slot] = acc * dphi;
            }
            let w = self.theta_weights[i];
            let p = &self.plm[i];
            for l in 0..=b {
                for m in -(l as i64)..=(l as i64) {
                    let ma = m.unsigned_abs() as usize;
                    let mut pl = p[plm_index(l, ma)];
                    if m < 0 && ma % 2 == 1 {
                        pl = -pl;
                    }
                    coeffs[lm_index(l, m)] += gm[(m + b as i64) as usize] * (w * pl);
                }
            }
        }
        coeffs
    }

    /// Inverse of [`analyze`](Self::analyze) on the quadrature points.
    pub fn synthesize(&self, coeffs: &[C64]) -> Vec<C64> {
        assert_eq!(coeffs.len(), self.n_coefficients());
        let b = self.band_limit;
        let mut out = vec![ZERO; self.len()];
        let mut gm = vec![ZERO; 2 * b + 1];
        for i in 0..self.n_theta() {
            let p = &self.plm[i];
            for (slot, m) in (-(b as i64)..=b as i64).enumerate() {
                let ma = m.unsigned_abs() as usize;
                let mut acc = ZERO;
                for l in ma..=b {
                    let mut pl = p[plm_index(l, ma)];
                    if m < 0 && ma % 2 == 1 {
                        pl = -pl;
                    }
                    acc += coeffs[lm_index(l, m)] * pl;
                }
                gm[slot] = acc;
            }
            for k in 0..self.n_phi {
                let phi = self.phi(k);
                let mut acc = ZERO;
                for (slot, m) in (-(b as i64)..=b as i64).enumerate() {
                    acc += gm[slot] * C64::from_polar(1.0, m as f64 * phi);
                }
                out[i * self.n_phi + k] = acc;
            }
        }
        out
    }
}

/// Eigenvalue of `1 - Delta_{S^2}` on degree `l`.
#[inline]
pub fn angular_symbol(l: usize) -> f64 {
    1.0 + (l * (l + 1)) as f64
}

/// Multiplies harmonic coefficients in place by `(1 + l(l+1))^{s/2}`.
pub fn scale_coefficients(coeffs: &mut [C64], band_limit: usize, s: f64) {
    for l in 0..=band_limit {
        let f = angular_symbol(l).powf(0.5 * s);
        for m in -(l as i64)..=(l as i64) {
            coeffs[lm_index(l, m)] *= f;
        }
    }
}

/// `sum_lm (1 + l(l+1))^s |a_lm|^2`, the squared `Lambda^s` norm on `L^2(S^2)`.
pub fn weighted_coefficient_norm_sq(coeffs: &[C64], band_limit: usize, s: f64) -> f64 {
    let mut acc = 0.0;
    for l in 0..=band_limit {
        let f = angular_symbol(l).powf(s);
        for m in -(l as i64)..=(l as i64) {
            acc += f * coeffs[lm_index(l, m)].norm_sqr();
        }
    }
    acc
}

/// A complex function sampled on a [`SphereGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct SphereFunction {
    pub grid: SphereGrid,
    pub values: Vec<C64>,
}

impl SphereFunction {
    pub fn new(grid: SphereGrid, values: Vec<C64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} samples on a sphere grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: SphereGrid, f: impl Fn([f64; 3]) -> C64) -> Self {
        let values = grid.points().into_iter().map(f).collect();
        Self { grid, values }
    }

    pub fn l2_norm(&self) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(q, v)| v.norm_sqr() * self.grid.weight(q))
            .sum::<f64>()
            .sqrt()
    }

    pub fn inner(&self, other: &SphereFunction) -> C64 {
        self.values
            .iter()
            .zip(&other.values)
            .enumerate()
            .map(|(q, (a, b))| a.conj() * b * self.grid.weight(q))
            .sum()
    }

    /// Harmonic coefficients, checking that the samples are band-limited.
    pub fn coefficients(&self) -> Result<Vec<C64>> {
        let coeffs = self.grid.analyze(&self.values);
        let back = self.grid.synthesize(&coeffs);
        let scale = self.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let residual = back
            .iter()
            .zip(&self.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        if scale > 0.0 && residual > BAND_LIMIT_TOLERANCE * scale {
            return Err(Error::BandLimitOverflow {
                band_limit: self.grid.band_limit,
                residual: residual / scale,
            });
        }
        Ok(coeffs)
    }
}
