//! Mixed space-time norms `L^p_t X` of sampled trajectories.
//!
//! Only the combinations used by the estimates are constructible:
//!
//! | time | space                                          |
//! |------|------------------------------------------------|
//! | 2    | `L^inf_x`                                      |
//! | 2    | `L^inf_r L^2_w` of `Lambda^s u`                |
//! | 2    | `L^inf_r L^p_w`, `2 <= p < inf`                |
//! | 2    | `w_sigma^{-1/2} u`, `w_sigma^{-1/2} grad u` in `L^2_x` |
//! | 2    | `<x>^{1/2+eps} |D| Lambda^s u` in `L^2_x`      |
//! | inf  | `Lambda^s u` in `H^1`                          |

use serde::{Deserialize, Serialize};

use super::angular::{weighted_angular_l2, ShellField};
use super::weights::{jap_half_plus, origin_cell_average_inv_w, w_sigma_half, DEFAULT_EPSILON, DEFAULT_SIGMA};
use crate::clifford::{apply_multiplier, gradient, sobolev_norm, symbols};
use crate::error::{Error, Result};
use crate::field::SpinorField3D;
use crate::grid::norm3;
use crate::interp::SamplingMethod;
use crate::sphere::SphereGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeExponent {
    Two,
    Infinity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpaceNorm {
    /// Grid maximum of `|u|`.
    Linf,
    /// `sup_r ||Lambda^s u(r .)||_{L^2(S^2)}`.
    LinfRL2Omega { angular_order: f64 },
    /// `sup_r ||u(r .)||_{L^p(S^2)}`.
    LinfRLpOmega { p: f64 },
    /// `||w_sigma^{-1/2} u||_{L^2}`, or of `grad u`.
    Smoothing { gradient: bool },
    /// `||<x>^{1/2+eps} |D| Lambda^s u||_{L^2}`.
    WeightedDerivative { angular_order: f64 },
    /// `||Lambda^s u||_{H^1}`.
    AngularH1 { angular_order: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixedNormSpec {
    pub time: TimeExponent,
    pub space: SpaceNorm,
}

impl MixedNormSpec {
    pub fn new(time: TimeExponent, space: SpaceNorm) -> Result<Self> {
        let ok = match (time, space) {
            (TimeExponent::Two, SpaceNorm::Linf) => true,
            (TimeExponent::Two, SpaceNorm::LinfRL2Omega { angular_order }) => angular_order >= 0.0,
            (TimeExponent::Two, SpaceNorm::LinfRLpOmega { p }) => (2.0..f64::INFINITY).contains(&p),
            (TimeExponent::Two, SpaceNorm::Smoothing { .. }) => true,
            (TimeExponent::Two, SpaceNorm::WeightedDerivative { angular_order }) => angular_order >= 0.0,
            (TimeExponent::Infinity, SpaceNorm::AngularH1 { angular_order }) => angular_order >= 0.0,
            _ => false,
        };
        if !ok {
            return Err(Error::InvalidConfig(format!(
                "the norm L^{} of {space:?} is not one of the supported combinations",
                match time {
                    TimeExponent::Two => "2",
                    TimeExponent::Infinity => "inf",
                }
            )));
        }
        Ok(Self { time, space })
    }
}

/// Discretisation choices for the spatial norms.
#[derive(Debug, Clone)]
pub struct NormContext {
    pub sphere: SphereGrid,
    pub method: SamplingMethod,
    /// Spacing of the shells used for `sup_r`, in units of the grid spacing.
    pub shell_spacing: f64,
    /// Gauss-Legendre nodes in `r` per grid point along the half-width.
    pub radial_density: f64,
    pub sigma: f64,
    pub epsilon: f64,
}

impl Default for NormContext {
    fn default() -> Self {
        Self {
            sphere: SphereGrid::new(10),
            method: SamplingMethod::Lagrange { order: 6 },
            shell_spacing: 0.5,
            radial_density: 2.0,
            sigma: DEFAULT_SIGMA,
            epsilon: DEFAULT_EPSILON,
        }
    }
}

impl NormContext {
    /// Shell radii `0, dr, 2 dr, ...` up to the inscribed radius.
    pub fn shell_radii(&self, u: &SpinorField3D) -> Vec<f64> {
        let g = u.grid();
        let dr = self.shell_spacing * g.spacing();
        let n = (g.half_width / dr).floor() as usize;
        (0..=n).map(|k| k as f64 * dr).collect()
    }

    fn radial_nodes(&self, u: &SpinorField3D) -> usize {
        ((self.radial_density * u.grid().n as f64 / 2.0).ceil() as usize).max(8)
    }
}

/// `sum_x |g(x)|^2 / w_sigma(x) dV`, with the origin cell averaged.
fn smoothing_sum(density: &[f64], u: &SpinorField3D, sigma: f64) -> f64 {
    let g = u.grid();
    let origin = g.origin_index();
    let dv = g.cell_volume();
    density
        .iter()
        .enumerate()
        .map(|(idx, d)| {
            let inv_w = if idx == origin {
                origin_cell_average_inv_w(sigma, dv)
            } else {
                w_sigma_half(norm3(&g.point(idx)), sigma).powi(-2)
            };
            d * inv_w
        })
        .sum::<f64>()
        * dv
}

/// The spatial part of a mixed norm at one instant.
pub fn spatial_norm(u: &SpinorField3D, space: &SpaceNorm, ctx: &NormContext) -> Result<f64> {
    let g = *u.grid();
    Ok(match *space {
        SpaceNorm::Linf => u.sup_norm(),
        SpaceNorm::LinfRL2Omega { angular_order } => {
            let shells = ShellField::sample(u, &ctx.sphere, &ctx.shell_radii(u), ctx.method);
            shells.shell_norms(angular_order).0.into_iter().fold(0.0, f64::max)
        }
        SpaceNorm::LinfRLpOmega { p } => {
            let shells = ShellField::sample(u, &ctx.sphere, &ctx.shell_radii(u), ctx.method);
            shells.shell_lp_norms(p).into_iter().fold(0.0, f64::max)
        }
        SpaceNorm::Smoothing { gradient: false } => smoothing_sum(&u.density(), u, ctx.sigma).sqrt(),
        SpaceNorm::Smoothing { gradient: true } => {
            let grads = gradient(u);
            let mut dens = vec![0.0; g.len()];
            for d in &grads {
                for (acc, v) in dens.iter_mut().zip(d.density()) {
                    *acc += v;
                }
            }
            smoothing_sum(&dens, u, ctx.sigma).sqrt()
        }
        SpaceNorm::WeightedDerivative { angular_order } => {
            let du = apply_multiplier(u, symbols::abs_pow(1.0))?;
            let eps = ctx.epsilon;
            if angular_order == 0.0 {
                let dv = g.cell_volume();
                (du.density()
                    .iter()
                    .enumerate()
                    .map(|(idx, d)| d * jap_half_plus(norm3(&g.point(idx)), eps).powi(2))
                    .sum::<f64>()
                    * dv)
                    .sqrt()
            } else {
                weighted_angular_l2(
                    &du,
                    &ctx.sphere,
                    angular_order,
                    |r| jap_half_plus(r, eps),
                    g.half_width,
                    ctx.radial_nodes(u),
                    ctx.method,
                )
                .0
            }
        }
        SpaceNorm::AngularH1 { angular_order } => {
            if angular_order == 0.0 {
                sobolev_norm(u, 1.0, false)
            } else {
                let jd = apply_multiplier(u, symbols::japanese_pow(1.0))?;
                weighted_angular_l2(
                    &jd,
                    &ctx.sphere,
                    angular_order,
                    |_| 1.0,
                    g.half_width,
                    ctx.radial_nodes(u),
                    ctx.method,
                )
                .0
            }
        }
    })
}

/// `L^2` (composite trapezoid) or `L^inf` norm of sampled `(t, value)` pairs.
pub fn time_norm(samples: &[(f64, f64)], time: TimeExponent) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InvalidConfig("cannot take a time norm of an empty trajectory".into()));
    }
    if samples.iter().any(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFinite("time series of a spatial norm".into()));
    }
    Ok(match time {
        TimeExponent::Infinity => samples.iter().map(|s| s.1).fold(0.0, f64::max),
        TimeExponent::Two => samples
            .windows(2)
            .map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 * w[0].1 + w[1].1 * w[1].1))
            .sum::<f64>()
            .sqrt(),
    })
}

/// The mixed norm of a trajectory given as `(t, u(t))` snapshots.
pub fn mixed_norm(snapshots: &[(f64, SpinorField3D)], spec: &MixedNormSpec, ctx: &NormContext) -> Result<f64> {
    if snapshots.is_empty() {
        return Err(Error::InvalidConfig("cannot take a mixed norm of an empty trajectory".into()));
    }
    let values = snapshots
        .iter()
        .map(|(t, u)| Ok((*t, spatial_norm(u, &spec.space, ctx)?)))
        .collect::<Result<Vec<_>>>()?;
    time_norm(&values, spec.time)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn whitelist_rejects_foreign_combinations() {
        assert!(MixedNormSpec::new(TimeExponent::Infinity, SpaceNorm::Linf).is_err());
        assert!(MixedNormSpec::new(TimeExponent::Two, SpaceNorm::AngularH1 { angular_order: 1.0 }).is_err());
        assert!(MixedNormSpec::new(TimeExponent::Two, SpaceNorm::LinfRLpOmega { p: f64::INFINITY }).is_err());
        assert!(MixedNormSpec::new(TimeExponent::Two, SpaceNorm::LinfRLpOmega { p: 4.0 }).is_ok());
    }

    #[test]
    fn constant_series() {
        let s: Vec<(f64, f64)> = (0..=10).map(|k| (0.3 * k as f64, 2.0)).collect();
        assert!((time_norm(&s, TimeExponent::Two).unwrap() - 2.0 * 3f64.sqrt()).abs() < 1e-14);
        assert_eq!(time_norm(&s[..1], TimeExponent::Infinity).unwrap(), 2.0);
        assert!(time_norm(&[], TimeExponent::Two).is_err());
    }
}
