//! The angular Sobolev operator `Lambda_w^s = (1 - Delta_{S^2})^{s/2}` and
//! norms of fields restricted to concentric spheres.

use crate::error::{Error, Result};
use crate::field::{ScalarField3D, SpinorField3D};
use crate::interp::{lagrange_eval_scalar, SamplingMethod, ShellSampler};
use crate::sphere::{gauss_legendre, scale_coefficients, weighted_coefficient_norm_sq, SphereFunction, SphereGrid};
use crate::{Spinor, C64};

/// Relative resynthesis residual tolerated for shells sampled from a grid
/// field, where interpolation error is not band-limited.
pub const SAMPLED_BAND_LIMIT_TOLERANCE: f64 = 1e-4;

/// `Lambda^s` of a function on the sphere.
pub fn angular_sobolev(f: &SphereFunction, s: f64) -> Result<SphereFunction> {
    let mut c = f.coefficients()?;
    scale_coefficients(&mut c, f.grid.band_limit(), s);
    SphereFunction::new(f.grid.clone(), f.grid.synthesize(&c))
}

/// A spinor field sampled on the quadrature points of concentric spheres.
#[derive(Debug, Clone, PartialEq)]
pub struct ShellField {
    pub sphere: SphereGrid,
    pub radii: Vec<f64>,
    /// `values[shell][point]`.
    pub values: Vec<Vec<Spinor>>,
}

impl ShellField {
    pub fn sample(u: &SpinorField3D, sphere: &SphereGrid, radii: &[f64], method: SamplingMethod) -> Self {
        let values = ShellSampler::new(sphere.clone(), radii.to_vec(), method).sample(u);
        Self {
            sphere: sphere.clone(),
            radii: radii.to_vec(),
            values,
        }
    }

    pub fn from_fn(sphere: &SphereGrid, radii: &[f64], f: impl Fn([f64; 3]) -> Spinor) -> Self {
        let pts = sphere.points();
        let values = radii
            .iter()
            .map(|&r| pts.iter().map(|p| f([r * p[0], r * p[1], r * p[2]])).collect())
            .collect();
        Self {
            sphere: sphere.clone(),
            radii: radii.to_vec(),
            values,
        }
    }

    fn component(&self, shell: usize, c: usize) -> Vec<C64> {
        self.values[shell].iter().map(|v| v[c]).collect()
    }

    /// Harmonic coefficients of each component on one shell, with the
    /// relative resynthesis residual.
    fn shell_coefficients(&self, shell: usize) -> ([Vec<C64>; 4], f64) {
        let mut residual = 0.0f64;
        let scale = self.values[shell]
            .iter()
            .map(|v| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        let coeffs = std::array::from_fn(|c| {
            let vals = self.component(shell, c);
            let a = self.sphere.analyze(&vals);
            let back = self.sphere.synthesize(&a);
            let r = back.iter().zip(&vals).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
            residual = residual.max(r);
            a
        });
        (coeffs, if scale > 0.0 { residual / scale } else { 0.0 })
    }

    /// `Lambda^s` applied shell by shell and component by component; fails if
    /// some shell is not resolved by the band limit to within `tolerance`.
    pub fn angular_sobolev(&self, s: f64, tolerance: f64) -> Result<ShellField> {
        let b = self.sphere.band_limit();
        let mut values = Vec::with_capacity(self.radii.len());
        for shell in 0..self.radii.len() {
            let (mut coeffs, residual) = self.shell_coefficients(shell);
            if residual > tolerance {
                return Err(Error::BandLimitOverflow {
                    band_limit: b,
                    residual,
                });
            }
            let comps: Vec<Vec<C64>> = coeffs
                .iter_mut()
                .map(|c| {
                    scale_coefficients(c, b, s);
                    self.sphere.synthesize(c)
                })
                .collect();
            values.push(
                (0..self.sphere.len())
                    .map(|q| std::array::from_fn(|c| comps[c][q]))
                    .collect(),
            );
        }
        Ok(ShellField {
            sphere: self.sphere.clone(),
            radii: self.radii.clone(),
            values,
        })
    }

    /// `||Lambda^s u(r .)||_{L^2(S^2)}` per shell, from the harmonic
    /// coefficients; also returns the worst relative band-limit residual.
    pub fn shell_norms(&self, s: f64) -> (Vec<f64>, f64) {
        let b = self.sphere.band_limit();
        let mut worst = 0.0f64;
        let norms = (0..self.radii.len())
            .map(|shell| {
                let (coeffs, residual) = self.shell_coefficients(shell);
                worst = worst.max(residual);
                coeffs
                    .iter()
                    .map(|c| weighted_coefficient_norm_sq(c, b, s))
                    .sum::<f64>()
                    .sqrt()
            })
            .collect();
        (norms, worst)
    }

    /// `||u(r .)||_{L^p(S^2)}` per shell, by quadrature.
    pub fn shell_lp_norms(&self, p: f64) -> Vec<f64> {
        self.values
            .iter()
            .map(|vals| sphere_lp(&self.sphere, vals.iter().map(spinor_abs), p))
            .collect()
    }

    /// Largest `|u|` over the quadrature points of each shell.
    pub fn shell_sup(&self) -> Vec<f64> {
        self.values
            .iter()
            .map(|vals| vals.iter().map(spinor_abs).fold(0.0, f64::max))
            .collect()
    }
}

fn spinor_abs(v: &Spinor) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `(sum_q w_q |f_q|^p)^{1/p}`.
pub fn sphere_lp(sphere: &SphereGrid, abs_values: impl Iterator<Item = f64>, p: f64) -> f64 {
    let m = abs_values.collect::<Vec<_>>();
    let peak = m.iter().cloned().fold(0.0, f64::max);
    if peak == 0.0 {
        return 0.0;
    }
    let acc: f64 = m
        .iter()
        .enumerate()
        .map(|(q, a)| sphere.weight(q) * (a / peak).powf(p))
        .sum();
    peak * acc.powf(1.0 / p)
}

/// Samples a scalar field on shells and returns `||u(r .)||_{L^p(S^2)}`
/// per shell (Lagrange interpolation of the given order).
pub fn scalar_shell_lp_norms(u: &ScalarField3D, sphere: &SphereGrid, radii: &[f64], p: f64, order: usize) -> Vec<f64> {
    let pts = sphere.points();
    radii
        .iter()
        .map(|&r| {
            let vals = pts
                .iter()
                .map(|w| lagrange_eval_scalar(u, [r * w[0], r * w[1], r * w[2]], order).norm());
            sphere_lp(sphere, vals, p)
        })
        .collect()
}

/// Gauss-Legendre nodes and weights on `[0, r_max]`.
pub fn radial_quadrature(r_max: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let h = 0.5 * r_max;
    (x.iter().map(|x| h * (x + 1.0)).collect(), w.iter().map(|w| w * h).collect())
}

/// `||Lambda^s (rho(|x|) u)||_{L^2(B_R)}` for a field, by Gauss-Legendre
/// quadrature in `r` over shells sampled with `method`.
///
/// Returns the norm and the worst relative band-limit residual seen.
pub fn weighted_angular_l2(
    u: &SpinorField3D,
    sphere: &SphereGrid,
    s: f64,
    radial_weight: impl Fn(f64) -> f64,
    r_max: f64,
    radial_nodes: usize,
    method: SamplingMethod,
) -> (f64, f64) {
    let (r, w) = radial_quadrature(r_max, radial_nodes);
    let shells = ShellField::sample(u, sphere, &r, method);
    let (norms, residual) = shells.shell_norms(s);
    let acc: f64 = norms
        .iter()
        .zip(r.iter().zip(&w))
        .map(|(n, (r, w))| w * r * r * (radial_weight(*r) * n).powi(2))
        .sum();
    (acc.sqrt(), residual)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::sph_harm;
    use std::f64::consts::PI;

    #[test]
    fn constants_are_fixed_points() {
        let g = SphereGrid::new(6);
        let f = SphereFunction::from_fn(g, |_| C64::new(2.5, -1.0));
        for s in [-1.0, 0.5, 3.0] {
            let out = angular_sobolev(&f, s).unwrap();
            for (a, b) in out.values.iter().zip(&f.values) {
                assert!((a - b).norm() < 1e-12 * b.norm());
            }
        }
    }

    #[test]
    fn degree_one_scales_by_three_to_the_half_s() {
        let g = SphereGrid::new(6);
        let f = SphereFunction::from_fn(g, |w| sph_harm(1, 0, w));
        let s = 1.3;
        let out = angular_sobolev(&f, s).unwrap();
        let k = 3f64.powf(0.5 * s);
        for (a, b) in out.values.iter().zip(&f.values) {
            assert!((a - b * k).norm() < 1e-13);
        }
    }

    #[test]
    fn lp_of_constant() {
        let g = SphereGrid::new(4);
        let v = sphere_lp(&g, std::iter::repeat(2.0).take(g.len()), 4.0);
        assert!((v - 2.0 * (4.0 * PI).powf(0.25)).abs() < 1e-12);
    }

    #[test]
    fn radial_quadrature_integrates_polynomials() {
        let (r, w) = radial_quadrature(3.0, 8);
        let got: f64 = r.iter().zip(&w).map(|(r, w)| w * r.powi(5)).sum();
        assert!((got - 3f64.powi(6) / 6.0).abs() < 1e-10);
    }
}
