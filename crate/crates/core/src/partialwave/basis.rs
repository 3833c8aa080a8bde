use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sphere::{lm_index, sph_harm_all, SphereGrid};
use crate::{Spinor, C64, I, ZERO};

/// Largest supported `2j`.
pub const MAX_TWO_J: u32 = 7;

/// `(j, m_j, k_j)` stored as integers `2j`, `2 m_j` and `k_j = +-(j + 1/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QuantumNumbers {
    pub two_j: u32,
    pub two_m: i32,
    pub kappa: i32,
}

impl QuantumNumbers {
    pub fn new(two_j: u32, two_m: i32, kappa: i32) -> Result<Self> {
        let qn = Self { two_j, two_m, kappa };
        qn.validate()?;
        Ok(qn)
    }

    /// From half-integer `j`, `m_j` given as floats.
    pub fn from_halves(j: f64, m: f64, kappa: i32) -> Result<Self> {
        let tj = 2.0 * j;
        let tm = 2.0 * m;
        if (tj - tj.round()).abs() > 1e-12 || (tm - tm.round()).abs() > 1e-12 {
            return Err(Error::InvalidConfig(format!("j = {j}, m = {m} are not half-integers")));
        }
        Self::new(tj.round() as u32, tm.round() as i32, kappa)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.two_j % 2 != 1 {
            return bad(format!("2j = {} must be odd", self.two_j));
        }
        if self.two_m.unsigned_abs() > self.two_j || (self.two_m - self.two_j as i32) % 2 != 0 {
            return bad(format!("m_j = {}/2 not in -j..j for j = {}/2", self.two_m, self.two_j));
        }
        if self.kappa.unsigned_abs() * 2 != self.two_j + 1 {
            return bad(format!("k_j = {} must be +-(j + 1/2)", self.kappa));
        }
        Ok(())
    }

    pub fn j(&self) -> f64 {
        self.two_j as f64 / 2.0
    }

    pub fn m(&self) -> f64 {
        self.two_m as f64 / 2.0
    }

    /// Orbital degrees `(l+, l-)` of the upper and lower spinor halves.
    pub fn orbital(&self) -> (usize, usize) {
        let hi = (self.two_j as usize + 1) / 2;
        let lo = (self.two_j as usize - 1) / 2;
        if self.kappa > 0 {
            (hi, lo)
        } else {
            (lo, hi)
        }
    }

    /// Radial parities `(-1)^{l+}`, `(-1)^{l-}` of `u+` and `u-`.
    pub fn parities(&self) -> (f64, f64) {
        let (lp, lm) = self.orbital();
        let p = |l: usize| if l % 2 == 0 { 1.0 } else { -1.0 };
        (p(lp), p(lm))
    }

    /// Every admissible `(m_j, k_j)` for a given `j`; there are `4j + 2`.
    pub fn all_for(two_j: u32) -> Vec<QuantumNumbers> {
        let k = (two_j as i32 + 1) / 2;
        let mut out = Vec::new();
        for kappa in [-k, k] {
            let mut m = -(two_j as i32);
            while m <= two_j as i32 {
                out.push(QuantumNumbers { two_j, two_m: m, kappa });
                m += 2;
            }
        }
        out
    }
}

impl fmt::Display for QuantumNumbers {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(j={}/2, m={}/2, k={})", self.two_j, self.two_m, self.kappa)
    }
}

/// Two-component spherical spinor of total angular momentum `j`, projection
/// `m` and orbital degree `l = j -+ 1/2`.
fn two_spinor(two_j: u32, two_m: i32, l: usize, y: &[C64]) -> [C64; 2] {
    let j = two_j as f64 / 2.0;
    let m = two_m as f64 / 2.0;
    // Y_l^{m -+ 1/2}, zero when out of range.
    let ylm = |mm: i32| -> C64 {
        if mm.unsigned_abs() as usize > l {
            ZERO
        } else {
            y[lm_index(l, mm as i64)]
        }
    };
    let m_lo = (two_m - 1) / 2;
    let m_hi = (two_m + 1) / 2;
    if 2 * l + 1 == two_j as usize {
        let n = (2.0 * j).sqrt();
        [ylm(m_lo) * ((j + m).sqrt() / n), ylm(m_hi) * ((j - m).sqrt() / n)]
    } else {
        let n = (2.0 * j + 2.0).sqrt();
        [ylm(m_lo) * ((j + 1.0 - m).sqrt() / n), ylm(m_hi) * (-(j + 1.0 + m).sqrt() / n)]
    }
}

/// `(Phi+(omega), Phi-(omega))` for a unit vector `omega`.
///
/// `Phi+ = (i Psi_{l+}, 0)` and `Phi- = (0, Psi_{l-})` with `Psi` the
/// two-component spherical spinors.
pub fn spinor_harmonics(qn: &QuantumNumbers, omega: [f64; 3]) -> (Spinor, Spinor) {
    let (lp, lm) = qn.orbital();
    let y = sph_harm_all(lp.max(lm), omega);
    let a = two_spinor(qn.two_j, qn.two_m, lp, &y);
    let b = two_spinor(qn.two_j, qn.two_m, lm, &y);
    ([I * a[0], I * a[1], ZERO, ZERO], [ZERO, ZERO, b[0], b[1]])
}

/// `Phi+`, `Phi-` sampled on an angular quadrature grid.
#[derive(Debug, Clone)]
pub struct AngularBasisPair {
    pub qn: QuantumNumbers,
    pub sphere: SphereGrid,
    pub phi_plus: Vec<Spinor>,
    pub phi_minus: Vec<Spinor>,
}

impl AngularBasisPair {
    /// Gram matrix `[[<P+,P+>, <P+,P->], [<P-,P+>, <P-,P->]]` under quadrature.
    pub fn gram(&self) -> [[C64; 2]; 2] {
        let fs = [&self.phi_plus, &self.phi_minus];
        let mut g = [[ZERO; 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                g[a][b] = (0..self.sphere.len())
                    .map(|q| crate::clifford::spinor_inner(&fs[a][q], &fs[b][q]) * self.sphere.weight(q))
                    .sum();
            }
        }
        g
    }

    /// `max |Gram - I|`.
    pub fn orthonormality_residual(&self) -> f64 {
        let g = self.gram();
        let mut r = 0.0f64;
        for (a, row) in g.iter().enumerate() {
            for (b, v) in row.iter().enumerate() {
                let e = if a == b { 1.0 } else { 0.0 };
                r = r.max((v - e).norm());
            }
        }
        r
    }
}

/// Builds the basis pair of sector `qn` on `sphere`.
///
/// Requires `2j <= 7` and a band limit of at least `2j + 2`.
pub fn build_basis(qn: QuantumNumbers, sphere: &SphereGrid) -> Result<AngularBasisPair> {
    qn.validate()?;
    if qn.two_j > MAX_TWO_J {
        return Err(Error::NotImplemented(format!(
            "spinor harmonics are tabulated up to j = {}/2, requested {qn}",
            MAX_TWO_J
        )));
    }
    if sphere.band_limit() < qn.two_j as usize + 2 {
        return Err(Error::InvalidConfig(format!(
            "band limit {} does not resolve {qn}",
            sphere.band_limit()
        )));
    }
    let (phi_plus, phi_minus) = sphere
        .points()
        .into_iter()
        .map(|p| spinor_harmonics(&qn, p))
        .unzip();
    Ok(AngularBasisPair {
        qn,
        sphere: sphere.clone(),
        phi_plus,
        phi_minus,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn counts_sectors() {
        for tj in [1, 3, 5, 7] {
            assert_eq!(QuantumNumbers::all_for(tj).len(), 2 * tj as usize + 2);
        }
    }

    #[test]
    fn rejects_bad_numbers() {
        assert!(QuantumNumbers::new(2, 0, 1).is_err());
        assert!(QuantumNumbers::new(1, 3, 1).is_err());
        assert!(QuantumNumbers::new(1, 1, 2).is_err());
        let s = SphereGrid::new(16);
        assert!(matches!(
            build_basis(QuantumNumbers::new(9, 1, 5).unwrap(), &s),
            Err(Error::NotImplemented(_))
        ));
    }

    #[test]
    fn lowest_sector_closed_form() {
        let qn = QuantumNumbers::new(1, 1, 1).unwrap();
        let c = 1.0 / (2.0 * PI.sqrt());
        for (th, ph) in [(0.3_f64, 1.1_f64), (2.0, -0.4), (1.2, 3.0)] {
            let om = [th.sin() * f64::cos(ph), th.sin() * f64::sin(ph), th.cos()];
            let (p, m) = spinor_harmonics(&qn, om);
            let ep = [I * c * th.cos(), I * c * C64::from_polar(th.sin(), ph), ZERO, ZERO];
            let em = [ZERO, ZERO, C64::new(c, 0.0), ZERO];
            for k in 0..4 {
                assert!((p[k] - ep[k]).norm() < 1e-15, "{p:?}");
                assert!((m[k] - em[k]).norm() < 1e-15);
            }
        }
    }
}
