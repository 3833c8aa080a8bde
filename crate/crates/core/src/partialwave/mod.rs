//! Partial-wave sectors of the Dirac operator.
//!
//! A sector is labelled by `(j, m_j, k_j)` and spanned, at each radius, by two
//! spinor-valued functions `Phi+` and `Phi-` on the unit sphere. Fields of the
//! form `u+(r) Phi+ + u-(r) Phi-` are invariant under `D` and under potentials
//! `V1 I + i beta (alpha . x_hat) V2`, which reduces the dynamics to a 1+1D
//! system in `r`.

mod basis;
mod projection;
mod radial;

pub use basis::{build_basis, spinor_harmonics, AngularBasisPair, QuantumNumbers, MAX_TWO_J};
pub use projection::{
    dirac_action_check, lift, project, reduce_nonlinearity, sector_leakage, sector_potential,
    DiracActionReport, NonlinearityReduction, Projection, RadialSpinorState,
};
pub use radial::{
    evolve_radial, evolve_radial_observed, BoundaryClosure, RadialConfig, RadialNormRecord,
    RadialOperator, RadialProblem, RadialSource, RadialTrajectory, TimeEnvelope,
};
