//! Uniform periodic grid on the box `[-L, L)^3`.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// `N` points per axis on `[-L, L)`, sampled at `x_k = (2L/N) k - L`.
///
/// The discrete wave numbers are `xi = (pi/L) m` with
/// `m in {-N/2, ..., N/2 - 1}`; the origin is the grid node `k = N/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n: usize,
    pub half_width: f64,
}

impl GridSpec {
    pub fn new(n: usize, half_width: f64) -> Result<Self> {
        if n < 8 || n % 2 != 0 {
            return Err(Error::InvalidConfig(format!(
                "grid needs an even number of points >= 8, got {n}"
            )));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "box half-width must be positive, got {half_width}"
            )));
        }
        Ok(Self { n, half_width })
    }

    /// The same box with twice the points per axis.
    pub fn refined(&self) -> Self {
        Self {
            n: 2 * self.n,
            half_width: self.half_width,
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    #[inline]
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(3)
    }

    /// Volume of the periodic box, `(2L)^3`.
    pub fn box_volume(&self) -> f64 {
        (2.0 * self.half_width).powi(3)
    }

    #[inline]
    pub fn coord(&self, k: usize) -> f64 {
        self.spacing() * k as f64 - self.half_width
    }

    /// Signed frequency index of FFT bin `k`.
    #[inline]
    pub fn mode(&self, k: usize) -> i64 {
        if k < self.n / 2 {
            k as i64
        } else {
            k as i64 - self.n as i64
        }
    }

    #[inline]
    pub fn wavenumber(&self, k: usize) -> f64 {
        PI / self.half_width * self.mode(k) as f64
    }

    /// Largest resolved wave number, `pi N / (2L)`.
    pub fn nyquist(&self) -> f64 {
        PI * self.n as f64 / (2.0 * self.half_width)
    }

    #[inline]
    pub fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (ix * self.n + iy) * self.n + iz
    }

    #[inline]
    pub fn unindex(&self, idx: usize) -> (usize, usize, usize) {
        let n = self.n;
        (idx / (n * n), (idx / n) % n, idx % n)
    }

    #[inline]
    pub fn point(&self, idx: usize) -> [f64; 3] {
        let (ix, iy, iz) = self.unindex(idx);
        [self.coord(ix), self.coord(iy), self.coord(iz)]
    }

    #[inline]
    pub fn frequency(&self, idx: usize) -> [f64; 3] {
        let (ix, iy, iz) = self.unindex(idx);
        [self.wavenumber(ix), self.wavenumber(iy), self.wavenumber(iz)]
    }

    /// Flat index of the origin node.
    pub fn origin_index(&self) -> usize {
        let c = self.n / 2;
        self.index(c, c, c)
    }

    /// All wave numbers along one axis, in FFT order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.wavenumber(k)).collect()
    }

    /// All coordinates along one axis.
    pub fn coords(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.coord(k)).collect()
    }

    /// Radius of every grid node.
    pub fn radii(&self) -> Vec<f64> {
        (0..self.len())
            .map(|idx| {
                let p = self.point(idx);
                (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt()
            })
            .collect()
    }

    pub fn check_same(&self, other: &GridSpec) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!(
                "N={} L={} vs N={} L={}",
                self.n, self.half_width, other.n, other.half_width
            )));
        }
        Ok(())
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            n: 64,
            half_width: 16.0,
        }
    }
}

#[inline]
pub(crate) fn norm3(v: &[f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_grids() {
        assert!(GridSpec::new(6, 1.0).is_err());
        assert!(GridSpec::new(9, 1.0).is_err());
        assert!(GridSpec::new(16, 0.0).is_err());
        assert!(GridSpec::new(16, f64::NAN).is_err());
        assert!(GridSpec::new(40, 3.0).is_ok());
    }

    #[test]
    fn origin_is_a_node() {
        let g = GridSpec::new(16, 4.0).unwrap();
        assert_eq!(g.point(g.origin_index()), [0.0, 0.0, 0.0]);
        assert_eq!(g.coord(0), -4.0);
    }

    #[test]
    fn modes_are_symmetric() {
        let g = GridSpec::new(8, 1.0).unwrap();
        let m: Vec<i64> = (0..8).map(|k| g.mode(k)).collect();
        assert_eq!(m, vec![0, 1, 2, 3, -4, -3, -2, -1]);
        assert!((g.wavenumber(4) + g.nyquist()).abs() < 1e-12);
    }

    #[test]
    fn index_round_trip() {
        let g = GridSpec::new(10, 1.0).unwrap();
        for idx in [0, 17, 345, 999] {
            let (a, b, c) = g.unindex(idx);
            assert_eq!(g.index(a, b, c), idx);
        }
    }
}
