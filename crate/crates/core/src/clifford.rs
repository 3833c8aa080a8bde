//! The Dirac matrices and the Fourier-multiplier calculus built on them.
//!
//! `D = -i (alpha . grad)` has symbol `alpha . xi`; every other operator here
//! (`|D|^s`, `cos(t|D|)`, Riesz transforms, Sobolev weights) is a scalar
//! multiplier applied componentwise.

use nalgebra::Matrix4;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{SpinorField3D, SpinorSpectrum};
use crate::grid::norm3;
use crate::{Spinor, C64, I, ZERO};

pub type Mat4 = Matrix4<C64>;

/// Tolerance for the algebra identities; the standard matrices have
/// entries in `{0, +-1, +-i}` so every residual is exactly zero.
pub const ALGEBRA_TOLERANCE: f64 = 1e-15;

/// `alpha_1, alpha_2, alpha_3` and `beta`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiracMatrices {
    pub alpha: [Mat4; 3],
    pub beta: Mat4,
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

impl DiracMatrices {
    /// The Dirac representation: off-diagonal Pauli blocks for the alphas and
    /// `beta = diag(1, 1, -1, -1)`.
    pub fn standard() -> Self {
        let o = c(0.0, 0.0);
        let one = c(1.0, 0.0);
        let i = c(0.0, 1.0);
        #[rustfmt::skip]
        let a1 = Mat4::new(
            o, o, o, one,
            o, o, one, o,
            o, one, o, o,
            one, o, o, o,
        );
        #[rustfmt::skip]
        let a2 = Mat4::new(
            o, o, o, -i,
            o, o, i, o,
            o, -i, o, o,
            i, o, o, o,
        );
        #[rustfmt::skip]
        let a3 = Mat4::new(
            o, o, one, o,
            o, o, o, -one,
            one, o, o, o,
            o, -one, o, o,
        );
        let beta = Mat4::from_diagonal(&nalgebra::Vector4::new(one, one, -one, -one));
        Self {
            alpha: [a1, a2, a3],
            beta,
        }
    }

    /// Conjugates every matrix by a unitary `u`: `u m u^dagger`.
    pub fn conjugated(&self, u: &Mat4) -> Self {
        let ud = u.adjoint();
        Self {
            alpha: [
                u * self.alpha[0] * ud,
                u * self.alpha[1] * ud,
                u * self.alpha[2] * ud,
            ],
            beta: u * self.beta * ud,
        }
    }

    pub fn alpha_dot(&self, v: [f64; 3]) -> Mat4 {
        self.alpha[0] * c(v[0], 0.0) + self.alpha[1] * c(v[1], 0.0) + self.alpha[2] * c(v[2], 0.0)
    }
}

impl Default for DiracMatrices {
    fn default() -> Self {
        Self::standard()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentityResidual {
    pub identity: String,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AlgebraReport {
    pub residuals: Vec<IdentityResidual>,
    pub tolerance: f64,
}

impl AlgebraReport {
    pub fn passed(&self) -> bool {
        self.residuals.iter().all(|r| r.residual <= self.tolerance)
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().map(|r| r.residual).fold(0.0, f64::max)
    }

    pub fn failures(&self) -> impl Iterator<Item = &IdentityResidual> {
        self.residuals.iter().filter(|r| r.residual > self.tolerance)
    }
}

fn max_abs(m: &Mat4) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Residuals of hermiticity, involutivity, `{alpha_j, alpha_k} = 2 delta_jk`
/// and `{beta, alpha_j} = 0`, each as an entrywise max-norm.
pub fn verify_algebra(m: &DiracMatrices) -> AlgebraReport {
    let id = Mat4::identity();
    let mut residuals = Vec::new();
    let mut push = |identity: String, residual: f64| {
        residuals.push(IdentityResidual { identity, residual })
    };
    let names = ["alpha1", "alpha2", "alpha3"];
    for (j, a) in m.alpha.iter().enumerate() {
        push(format!("{} hermitian", names[j]), max_abs(&(a - a.adjoint())));
    }
    push("beta hermitian".into(), max_abs(&(m.beta - m.beta.adjoint())));
    for j in 0..3 {
        for k in j..3 {
            let anti = m.alpha[j] * m.alpha[k] + m.alpha[k] * m.alpha[j];
            let target = if j == k { id * c(2.0, 0.0) } else { Mat4::zeros() };
            push(
                format!("{{alpha{}, alpha{}}} = {}", j + 1, k + 1, if j == k { "2I" } else { "0" }),
                max_abs(&(anti - target)),
            );
        }
    }
    push("beta^2 = I".into(), max_abs(&(m.beta * m.beta - id)));
    for j in 0..3 {
        let anti = m.beta * m.alpha[j] + m.alpha[j] * m.beta;
        push(format!("{{beta, alpha{}}} = 0", j + 1), max_abs(&anti));
    }
    AlgebraReport {
        residuals,
        tolerance: ALGEBRA_TOLERANCE,
    }
}

/// `(alpha . xi) v` in the standard representation, using the Pauli block
/// structure `alpha_k = [[0, sigma_k], [sigma_k, 0]]`.
#[inline]
pub fn alpha_dot_apply(xi: [f64; 3], v: &Spinor) -> Spinor {
    let a = c(xi[0], -xi[1]);
    let b = c(xi[0], xi[1]);
    let z = xi[2];
    [
        v[2] * z + a * v[3],
        b * v[2] - v[3] * z,
        v[0] * z + a * v[1],
        b * v[0] - v[1] * z,
    ]
}

/// `beta v` for `beta = diag(1, 1, -1, -1)`.
#[inline]
pub fn beta_apply(v: &Spinor) -> Spinor {
    [v[0], v[1], -v[2], -v[3]]
}

/// `<beta v, v>`, real for hermitian beta.
#[inline]
pub fn beta_form(v: &Spinor) -> f64 {
    v[0].norm_sqr() + v[1].norm_sqr() - v[2].norm_sqr() - v[3].norm_sqr()
}

#[inline]
pub fn mat_apply(m: &Mat4, v: &Spinor) -> Spinor {
    let mut out = [ZERO; 4];
    for (r, o) in out.iter_mut().enumerate() {
        *o = m[(r, 0)] * v[0] + m[(r, 1)] * v[1] + m[(r, 2)] * v[2] + m[(r, 3)] * v[3];
    }
    out
}

#[inline]
pub fn spinor_inner(a: &Spinor, b: &Spinor) -> C64 {
    a[0].conj() * b[0] + a[1].conj() * b[1] + a[2].conj() * b[2] + a[3].conj() * b[3]
}

#[inline]
pub fn spinor_norm_sq(a: &Spinor) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

/// `D f` in the standard representation.
pub fn apply_dirac(f: &SpinorField3D) -> SpinorField3D {
    let mut spec = f.to_spectrum();
    spec.map_modes(|xi, v| alpha_dot_apply(xi, &v));
    spec.to_field()
}

/// `D f` for an arbitrary set of matrices (slow path, used in tests).
pub fn apply_dirac_with(m: &DiracMatrices, f: &SpinorField3D) -> SpinorField3D {
    let mut spec = f.to_spectrum();
    spec.map_modes(|xi, v| mat_apply(&m.alpha_dot(xi), &v));
    spec.to_field()
}

/// `D` applied on the Fourier side.
pub fn apply_dirac_spectrum(spec: &mut SpinorSpectrum) {
    spec.map_modes(|xi, v| alpha_dot_apply(xi, &v));
}

/// Componentwise Fourier multiplication by `symbol(xi)`.
///
/// Symbols with removable singularities must return their limit at `xi = 0`;
/// any non-finite value is an error.
pub fn apply_multiplier(
    f: &SpinorField3D,
    symbol: impl Fn([f64; 3]) -> C64,
) -> Result<SpinorField3D> {
    let mut spec = f.to_spectrum();
    let mut bad: Option<[f64; 3]> = None;
    spec.map_modes(|xi, v| {
        let s = symbol(xi);
        if !(s.re.is_finite() && s.im.is_finite()) {
            bad.get_or_insert(xi);
            return v;
        }
        [s * v[0], s * v[1], s * v[2], s * v[3]]
    });
    if let Some(xi) = bad {
        return Err(Error::NonFinite(format!(
            "multiplier symbol at xi = ({}, {}, {})",
            xi[0], xi[1], xi[2]
        )));
    }
    Ok(spec.to_field())
}

/// Spectral Laplacian, symbol `-|xi|^2`.
pub fn laplacian(f: &SpinorField3D) -> SpinorField3D {
    apply_multiplier(f, |xi| c(-(xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]), 0.0))
        .expect("polynomial symbol is finite")
}

/// Riesz transforms `|D|^{-1} d_j f`, with the zero mode mapped to zero.
pub fn riesz_transform(f: &SpinorField3D) -> [SpinorField3D; 3] {
    let component = |j: usize| {
        apply_multiplier(f, move |xi| {
            let k = norm3(&xi);
            if k == 0.0 {
                ZERO
            } else {
                I * (xi[j] / k)
            }
        })
        .expect("bounded symbol")
    };
    [component(0), component(1), component(2)]
}

/// Spectral gradient `d_j f` for `j = 0, 1, 2`.
pub fn gradient(f: &SpinorField3D) -> [SpinorField3D; 3] {
    let component = |j: usize| apply_multiplier(f, move |xi| I * xi[j]).expect("finite symbol");
    [component(0), component(1), component(2)]
}

/// Common scalar symbols.
pub mod symbols {
    use super::*;

    /// `|xi|^s`; for `s < 0` the zero mode is dropped.
    pub fn abs_pow(s: f64) -> impl Fn([f64; 3]) -> C64 {
        move |xi| {
            let k = norm3(&xi);
            if k == 0.0 {
                if s == 0.0 {
                    c(1.0, 0.0)
                } else {
                    ZERO
                }
            } else {
                c(k.powf(s), 0.0)
            }
        }
    }

    /// `<xi>^s = (1 + |xi|^2)^{s/2}`.
    pub fn japanese_pow(s: f64) -> impl Fn([f64; 3]) -> C64 {
        move |xi| {
            let k2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
            c((1.0 + k2).powf(0.5 * s), 0.0)
        }
    }

    pub fn cos_t(t: f64) -> impl Fn([f64; 3]) -> C64 {
        move |xi| c((t * norm3(&xi)).cos(), 0.0)
    }

    /// `sin(t|xi|)/|xi|`, equal to `t` at the origin.
    pub fn sin_over_abs(t: f64) -> impl Fn([f64; 3]) -> C64 {
        move |xi| c(sin_over(t, norm3(&xi)), 0.0)
    }

    /// `e^{i t |xi|}`, the half-wave propagator.
    pub fn half_wave(t: f64) -> impl Fn([f64; 3]) -> C64 {
        move |xi| C64::from_polar(1.0, t * norm3(&xi))
    }

    /// `sin(t k)/k` with its limit `t` at `k = 0`.
    #[inline]
    pub fn sin_over(t: f64, k: f64) -> f64 {
        let x = t * k;
        if x.abs() < 1e-8 {
            t * (1.0 - x * x / 6.0)
        } else {
            x.sin() / k
        }
    }
}

/// Sobolev norm `(sum w(xi) |f_hat|^2)^{1/2}` with `w = <xi>^{2s}` or, when
/// `homogeneous`, `w = |xi|^{2s}`.
///
/// Homogeneous norms of negative order drop the zero mode; the continuum
/// norm only exists for mean-zero data.
pub fn sobolev_norm(f: &SpinorField3D, s: f64, homogeneous: bool) -> f64 {
    sobolev_norm_spectrum(&f.to_spectrum(), s, homogeneous)
}

pub fn sobolev_norm_spectrum(spec: &SpinorSpectrum, s: f64, homogeneous: bool) -> f64 {
    spec.weighted_norm_sq(|xi| {
        let k2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
        if homogeneous {
            if k2 == 0.0 {
                if s == 0.0 {
                    1.0
                } else {
                    0.0
                }
            } else {
                k2.powf(s)
            }
        } else {
            (1.0 + k2).powf(s)
        }
    })
    .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    #[test]
    fn standard_matrices_pass_exactly() {
        let report = verify_algebra(&DiracMatrices::standard());
        assert!(report.passed());
        assert_eq!(report.max_residual(), 0.0);
        assert_eq!(report.residuals.len(), 14);
    }

    #[test]
    fn identity_as_alpha1_fails() {
        let mut m = DiracMatrices::standard();
        m.alpha[0] = Mat4::identity();
        let report = verify_algebra(&m);
        assert!(!report.passed());
        let r12 = report
            .residuals
            .iter()
            .find(|r| r.identity.starts_with("{alpha1, alpha2}"))
            .unwrap();
        // {I, alpha2} = 2 alpha2, whose largest entry has modulus 1
        assert_eq!(r12.residual, 2.0);
    }

    #[test]
    fn single_sign_flip_is_detected() {
        let mut m = DiracMatrices::standard();
        m.alpha[2][(0, 2)] = c(-1.0, 0.0);
        let report = verify_algebra(&m);
        assert!(!report.passed());
        // hermiticity of alpha3 now fails by |1 - (-1)| = 2
        assert_eq!(report.residuals[2].residual, 2.0);
    }

    #[test]
    fn fast_alpha_dot_matches_matrices() {
        let m = DiracMatrices::standard();
        let xi = [0.3, -1.7, 2.2];
        let v = [c(1.0, 0.5), c(-0.2, 0.1), c(0.0, 2.0), c(0.7, -0.4)];
        let fast = alpha_dot_apply(xi, &v);
        let slow = mat_apply(&m.alpha_dot(xi), &v);
        for k in 0..4 {
            assert!((fast[k] - slow[k]).norm() < 1e-15);
        }
        let b = beta_apply(&v);
        let bm = mat_apply(&m.beta, &v);
        assert_eq!(b, bm);
    }

    #[test]
    fn dirac_kills_constants() {
        let g = GridSpec::new(8, 2.0).unwrap();
        let v = [c(1.0, 0.0), c(0.0, 1.0), c(2.0, 0.0), c(-1.0, 1.0)];
        let f = SpinorField3D::from_scalar(g, |_| c(1.0, 0.0), v);
        assert!(apply_dirac(&f).sup_norm() < 1e-14);
    }

    #[test]
    fn multiplier_rejects_nan() {
        let g = GridSpec::new(8, 2.0).unwrap();
        let f = SpinorField3D::zeros(g);
        let r = apply_multiplier(&f, |xi| c(1.0 / norm3(&xi), 0.0));
        assert!(matches!(r, Err(Error::NonFinite(_))));
    }

    #[test]
    fn sin_over_limit() {
        assert_eq!(symbols::sin_over(2.5, 0.0), 2.5);
        assert!((symbols::sin_over(2.0, 1.0) - 2f64.sin()).abs() < 1e-15);
    }
}
