//! Spinor- and scalar-valued fields sampled on a [`GridSpec`].

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::spectral;
use crate::{Spinor, C64, ZERO};

/// Four complex components sharing one grid, stored component-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinorField3D {
    grid: GridSpec,
    comps: [Vec<C64>; 4],
}

/// Unnormalised DFT of a [`SpinorField3D`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpinorSpectrum {
    grid: GridSpec,
    comps: [Vec<C64>; 4],
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField3D {
    grid: GridSpec,
    values: Vec<C64>,
}

fn check_len(grid: &GridSpec, len: usize) -> Result<()> {
    if len != grid.len() {
        return Err(Error::GridMismatch(format!(
            "buffer of length {len} on a grid with {} nodes",
            grid.len()
        )));
    }
    Ok(())
}

impl SpinorField3D {
    pub fn new(grid: GridSpec, comps: [Vec<C64>; 4]) -> Result<Self> {
        for c in &comps {
            check_len(&grid, c.len())?;
        }
        let f = Self { grid, comps };
        f.ensure_finite("field construction")?;
        Ok(f)
    }

    pub fn zeros(grid: GridSpec) -> Self {
        let z = vec![ZERO; grid.len()];
        Self {
            grid,
            comps: [z.clone(), z.clone(), z.clone(), z],
        }
    }

    /// Samples `f(x)` at every node.
    pub fn from_fn(grid: GridSpec, f: impl Fn([f64; 3]) -> Spinor) -> Self {
        let mut out = Self::zeros(grid);
        for idx in 0..grid.len() {
            out.set(idx, f(grid.point(idx)));
        }
        out
    }

    /// `profile(x) * spinor` at every node.
    pub fn from_scalar(grid: GridSpec, profile: impl Fn([f64; 3]) -> C64, spinor: Spinor) -> Self {
        Self::from_fn(grid, |x| {
            let p = profile(x);
            [p * spinor[0], p * spinor[1], p * spinor[2], p * spinor[3]]
        })
    }

    #[inline]
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    #[inline]
    pub fn component(&self, c: usize) -> &[C64] {
        &self.comps[c]
    }

    #[inline]
    pub fn component_mut(&mut self, c: usize) -> &mut [C64] {
        &mut self.comps[c]
    }

    pub fn components(&self) -> [&[C64]; 4] {
        [&self.comps[0], &self.comps[1], &self.comps[2], &self.comps[3]]
    }

    pub fn into_components(self) -> [Vec<C64>; 4] {
        self.comps
    }

    #[inline]
    pub fn get(&self, idx: usize) -> Spinor {
        [
            self.comps[0][idx],
            self.comps[1][idx],
            self.comps[2][idx],
            self.comps[3][idx],
        ]
    }

    #[inline]
    pub fn set(&mut self, idx: usize, v: Spinor) {
        for (c, value) in v.into_iter().enumerate() {
            self.comps[c][idx] = value;
        }
    }

    /// Applies `f` to the spinor at every node.
    pub fn map_points(&mut self, mut f: impl FnMut(usize, Spinor) -> Spinor) {
        for idx in 0..self.grid.len() {
            let v = f(idx, self.get(idx));
            self.set(idx, v);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.comps
            .iter()
            .all(|c| c.iter().all(|v| v.re.is_finite() && v.im.is_finite()))
    }

    pub fn ensure_finite(&self, context: &str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite(context.to_string()))
        }
    }

    /// Discrete `<self, other> = h^3 sum conj(self) . other`.
    pub fn inner(&self, other: &SpinorField3D) -> Result<C64> {
        self.grid.check_same(&other.grid)?;
        let mut acc = ZERO;
        for c in 0..4 {
            for (a, b) in self.comps[c].iter().zip(&other.comps[c]) {
                acc += a.conj() * b;
            }
        }
        Ok(acc * self.grid.cell_volume())
    }

    pub fn l2_norm(&self) -> f64 {
        let s: f64 = self
            .comps
            .iter()
            .map(|c| c.iter().map(|v| v.norm_sqr()).sum::<f64>())
            .sum();
        (s * self.grid.cell_volume()).sqrt()
    }

    /// Pointwise `|u(x)|^2`.
    pub fn density(&self) -> Vec<f64> {
        (0..self.grid.len())
            .map(|idx| self.comps.iter().map(|c| c[idx].norm_sqr()).sum())
            .collect()
    }

    /// Grid maximum of `|u(x)|`.
    pub fn sup_norm(&self) -> f64 {
        self.density().into_iter().fold(0.0, f64::max).sqrt()
    }

    pub fn scale(&mut self, s: C64) {
        for c in self.comps.iter_mut() {
            for v in c.iter_mut() {
                *v *= s;
            }
        }
    }

    pub fn scaled(&self, s: C64) -> Self {
        let mut out = self.clone();
        out.scale(s);
        out
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: C64, other: &SpinorField3D) -> Result<()> {
        self.grid.check_same(&other.grid)?;
        for c in 0..4 {
            for (x, y) in self.comps[c].iter_mut().zip(&other.comps[c]) {
                *x += a * y;
            }
        }
        Ok(())
    }

    pub fn sub(&self, other: &SpinorField3D) -> Result<SpinorField3D> {
        let mut out = self.clone();
        out.axpy(C64::new(-1.0, 0.0), other)?;
        Ok(out)
    }

    /// `||self - other|| / ||other||`, or the absolute difference when
    /// `other` vanishes.
    pub fn relative_l2_distance(&self, other: &SpinorField3D) -> Result<f64> {
        let d = self.sub(other)?.l2_norm();
        let r = other.l2_norm();
        Ok(if r > 0.0 { d / r } else { d })
    }

    /// Consumes the field, transforming in place.
    pub fn into_spectrum(mut self) -> SpinorSpectrum {
        let plan = spectral::plan(self.grid.n);
        for c in self.comps.iter_mut() {
            plan.forward(c);
        }
        SpinorSpectrum {
            grid: self.grid,
            comps: self.comps,
        }
    }

    pub fn to_spectrum(&self) -> SpinorSpectrum {
        let plan = spectral::plan(self.grid.n);
        let mut comps = self.comps.clone();
        for c in comps.iter_mut() {
            plan.forward(c);
        }
        SpinorSpectrum {
            grid: self.grid,
            comps,
        }
    }
}

impl SpinorSpectrum {
    pub fn zeros(grid: GridSpec) -> Self {
        let z = vec![ZERO; grid.len()];
        Self {
            grid,
            comps: [z.clone(), z.clone(), z.clone(), z],
        }
    }

    #[inline]
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    #[inline]
    pub fn get(&self, idx: usize) -> Spinor {
        [
            self.comps[0][idx],
            self.comps[1][idx],
            self.comps[2][idx],
            self.comps[3][idx],
        ]
    }

    #[inline]
    pub fn set(&mut self, idx: usize, v: Spinor) {
        for (c, value) in v.into_iter().enumerate() {
            self.comps[c][idx] = value;
        }
    }

    pub fn component(&self, c: usize) -> &[C64] {
        &self.comps[c]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [C64] {
        &mut self.comps[c]
    }

    /// Consumes the spectrum, transforming back in place.
    pub fn into_field(mut self) -> SpinorField3D {
        let plan = spectral::plan(self.grid.n);
        for c in self.comps.iter_mut() {
            plan.inverse(c);
        }
        SpinorField3D {
            grid: self.grid,
            comps: self.comps,
        }
    }

    /// Applies `f(xi, value)` at every discrete frequency.
    pub fn map_modes(&mut self, mut f: impl FnMut([f64; 3], Spinor) -> Spinor) {
        let grid = self.grid;
        let k = grid.wavenumbers();
        let n = grid.n;
        let mut idx = 0;
        for ix in 0..n {
            for iy in 0..n {
                for iz in 0..n {
                    let v = f([k[ix], k[iy], k[iz]], self.get(idx));
                    self.set(idx, v);
                    idx += 1;
                }
            }
        }
    }

    /// `sum_xi weight(xi) |f_hat(xi)|^2` normalised to the continuum.
    pub fn weighted_norm_sq(&self, weight: impl Fn([f64; 3]) -> f64) -> f64 {
        let grid = self.grid;
        let k = grid.wavenumbers();
        let n = grid.n;
        let mut acc = 0.0;
        let mut idx = 0;
        for ix in 0..n {
            for iy in 0..n {
                for iz in 0..n {
                    let w = weight([k[ix], k[iy], k[iz]]);
                    if w != 0.0 {
                        let s: f64 = self.comps.iter().map(|c| c[idx].norm_sqr()).sum();
                        acc += w * s;
                    }
                    idx += 1;
                }
            }
        }
        acc * grid.cell_volume() / grid.len() as f64
    }

    pub fn axpy(&mut self, a: C64, other: &SpinorSpectrum) -> Result<()> {
        self.grid.check_same(&other.grid)?;
        for c in 0..4 {
            for (x, y) in self.comps[c].iter_mut().zip(&other.comps[c]) {
                *x += a * y;
            }
        }
        Ok(())
    }

    pub fn to_field(&self) -> SpinorField3D {
        let plan = spectral::plan(self.grid.n);
        let mut comps = self.comps.clone();
        for c in comps.iter_mut() {
            plan.inverse(c);
        }
        SpinorField3D {
            grid: self.grid,
            comps,
        }
    }
}

impl ScalarField3D {
    pub fn new(grid: GridSpec, values: Vec<C64>) -> Result<Self> {
        check_len(&grid, values.len())?;
        if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::NonFinite("scalar field construction".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn([f64; 3]) -> C64) -> Self {
        let values = (0..grid.len()).map(|idx| f(grid.point(idx))).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [C64] {
        &mut self.values
    }

    pub fn l2_norm(&self) -> f64 {
        let s: f64 = self.values.iter().map(|v| v.norm_sqr()).sum();
        (s * self.grid.cell_volume()).sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Multiplies the DFT by `symbol(xi)`.
    pub fn apply_multiplier(&self, symbol: impl Fn([f64; 3]) -> C64) -> Result<ScalarField3D> {
        let grid = self.grid;
        let plan = spectral::plan(grid.n);
        let mut buf = self.values.clone();
        plan.forward(&mut buf);
        let k = grid.wavenumbers();
        let n = grid.n;
        let mut idx = 0;
        for ix in 0..n {
            for iy in 0..n {
                for iz in 0..n {
                    let s = symbol([k[ix], k[iy], k[iz]]);
                    if !(s.re.is_finite() && s.im.is_finite()) {
                        return Err(Error::NonFinite(format!(
                            "multiplier symbol at xi = ({}, {}, {})",
                            k[ix], k[iy], k[iz]
                        )));
                    }
                    buf[idx] *= s;
                    idx += 1;
                }
            }
        }
        plan.inverse(&mut buf);
        Ok(ScalarField3D { grid, values: buf })
    }

    /// `(sum_xi weight(xi) |f_hat|^2)^{1/2}` with continuum normalisation.
    pub fn weighted_spectral_norm(&self, weight: impl Fn([f64; 3]) -> f64) -> f64 {
        let grid = self.grid;
        let mut buf = self.values.clone();
        spectral::plan(grid.n).forward(&mut buf);
        let k = grid.wavenumbers();
        let n = grid.n;
        let mut acc = 0.0;
        let mut idx = 0;
        for ix in 0..n {
            for iy in 0..n {
                for iz in 0..n {
                    acc += weight([k[ix], k[iy], k[iz]]) * buf[idx].norm_sqr();
                    idx += 1;
                }
            }
        }
        (acc * grid.cell_volume() / grid.len() as f64).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_wrong_lengths_and_nan() {
        let g = GridSpec::new(8, 1.0).unwrap();
        let ok = vec![ZERO; g.len()];
        let short = vec![ZERO; 10];
        assert!(SpinorField3D::new(g, [ok.clone(), ok.clone(), ok.clone(), short]).is_err());
        let mut bad = ok.clone();
        bad[3] = C64::new(f64::NAN, 0.0);
        assert!(SpinorField3D::new(g, [ok.clone(), ok.clone(), ok, bad]).is_err());
    }

    #[test]
    fn spectrum_round_trip_and_plancherel() {
        let g = GridSpec::new(12, 2.0).unwrap();
        let f = SpinorField3D::from_fn(g, |x| {
            let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
            let e = (-r2).exp();
            [
                C64::new(e, 0.0),
                C64::new(0.0, x[0] * e),
                C64::new(x[1] * e, x[2]),
                ZERO,
            ]
        });
        let spec = f.to_spectrum();
        let back = spec.to_field();
        assert!(back.relative_l2_distance(&f).unwrap() < 1e-14);
        let plancherel = spec.weighted_norm_sq(|_| 1.0).sqrt();
        assert!((plancherel - f.l2_norm()).abs() < 1e-12 * f.l2_norm());
    }

    #[test]
    fn grid_mismatch_is_an_error() {
        let a = SpinorField3D::zeros(GridSpec::new(8, 1.0).unwrap());
        let b = SpinorField3D::zeros(GridSpec::new(8, 2.0).unwrap());
        assert!(a.inner(&b).is_err());
    }
}
