//! Numerical laboratory for the three-dimensional cubic massless Dirac
//! equation with a matrix potential,
//!
//! ```text
//! i u_t + D u + V u = P3(u),      D = -i (alpha . grad),
//! ```
//!
//! on a periodic box that emulates free space through a causality guard.
//!
//! The crate is organised bottom-up:
//!
//! * [`grid`], [`spectral`], [`field`]: the periodic grid, FFT plumbing and
//!   spinor-valued fields.
//! * [`clifford`]: the Dirac matrices and every Fourier multiplier built on
//!   them (`D`, `|D|^s`, Riesz transforms, Sobolev norms).
//! * [`propagator`]: exact free flow, Duhamel integrals and the split-step
//!   nonlinear solver.
//! * [`sphere`], [`interp`]: quadrature on the unit sphere, spherical
//!   harmonics and Cartesian-to-shell sampling.
//! * [`partialwave`]: spherical spinor bases, sector projection/lifting, the
//!   fitted radial Dirac operator and the 1+1D radial solver.
//! * [`potential`]: potential profiles, assembly, admissibility checks.
//! * [`norms`]: mixed space-time norms, angular Sobolev operators, the radial
//!   maximal-function check and the estimate-verification harness.
//! * [`io`]: snapshot and CSV persistence.

pub mod clifford;
pub mod data;
pub mod experiments;
pub mod error;
pub mod field;
pub mod fingerprint;
pub mod grid;
pub mod interp;
pub mod io;
pub mod norms;
pub mod partialwave;
pub mod potential;
pub mod propagator;
pub mod spectral;
pub mod sphere;

pub use rustfft::num_complex::Complex64;

pub use error::{Error, Result};
pub use field::{ScalarField3D, SpinorField3D};
pub use grid::GridSpec;

/// Shorthand used across the crate.
pub type C64 = Complex64;

/// A spinor at a single point.
pub type Spinor = [C64; 4];

pub(crate) const I: C64 = C64::new(0.0, 1.0);
pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
