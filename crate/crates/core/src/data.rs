//! Initial-data families and seeded random generators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::clifford::sobolev_norm;
use crate::error::{Error, Result};
use crate::field::{SpinorField3D, SpinorSpectrum};
use crate::grid::{norm3, GridSpec};
use crate::partialwave::{lift, QuantumNumbers, RadialSpinorState};
use crate::{Spinor, C64, ZERO};

/// Relative level below which a Gaussian tail counts as outside the support.
pub const SUPPORT_TOLERANCE: f64 = 1e-8;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A complex standard normal.
pub fn complex_normal(rng: &mut impl Rng) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// A named family of initial data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum DataRecipe {
    Zero,
    /// `A exp(-|x - c|^2 / (2 w^2)) v` with a unit spinor `v` (default `e_1`).
    Gaussian {
        amplitude: f64,
        width: f64,
        #[serde(default)]
        center: [f64; 3],
        #[serde(default)]
        spinor: Option<[f64; 8]>,
    },
    /// Partial-wave data `u+ = A r^{l+} e^{-r^2/2w^2}`, `u- = B r^{l-} e^{-r^2/2w^2}`.
    Sector {
        two_j: u32,
        two_m: i32,
        kappa: i32,
        amplitude_plus: f64,
        amplitude_minus: f64,
        width: f64,
    },
    /// A Gaussian with a degree-one angular tilt, `A e^{-r^2/2w^2}(1 + t x_1/w) v`.
    AngularGaussian { amplitude: f64, width: f64, tilt: f64 },
    /// Random Fourier coefficients on `|xi| <= cutoff * nyquist`.
    RandomBandLimited { amplitude: f64, cutoff: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSpec {
    #[serde(flatten)]
    pub recipe: DataRecipe,
    /// Rescale to this inhomogeneous `H^1` norm when set.
    #[serde(default)]
    pub h1_norm: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

impl DataSpec {
    pub fn new(recipe: DataRecipe) -> Self {
        Self {
            recipe,
            h1_norm: None,
            seed: 0,
        }
    }

    pub fn with_h1_norm(mut self, n: f64) -> Self {
        self.h1_norm = Some(n);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Radius outside which the data is below [`SUPPORT_TOLERANCE`] relative to
    /// its peak; `None` for data that fills the box.
    pub fn support_radius(&self) -> Option<f64> {
        let tail = (2.0 * (1.0 / SUPPORT_TOLERANCE).ln()).sqrt();
        match &self.recipe {
            DataRecipe::Zero => Some(0.0),
            DataRecipe::Gaussian { width, center, .. } => Some(norm3(center) + tail * width * 1.1),
            DataRecipe::Sector { width, .. } | DataRecipe::AngularGaussian { width, .. } => {
                Some(tail * width * 1.25)
            }
            DataRecipe::RandomBandLimited { .. } => None,
        }
    }

    pub fn sector(&self) -> Option<QuantumNumbers> {
        match &self.recipe {
            DataRecipe::Sector { two_j, two_m, kappa, .. } => QuantumNumbers::new(*two_j, *two_m, *kappa).ok(),
            _ => None,
        }
    }

    /// The unnormalised radial profiles of a sector recipe.
    fn sector_state(&self, r: Vec<f64>) -> Result<RadialSpinorState> {
        match &self.recipe {
            DataRecipe::Sector {
                two_j,
                two_m,
                kappa,
                amplitude_plus,
                amplitude_minus,
                width,
            } => {
                let qn = QuantumNumbers::new(*two_j, *two_m, *kappa)?;
                let (lp, lm) = qn.orbital();
                let w2 = width * width;
                let (a, b) = (*amplitude_plus, *amplitude_minus);
                RadialSpinorState::from_fn(
                    qn,
                    r,
                    |x| C64::new(a * x.powi(lp as i32) * (-x * x / (2.0 * w2)).exp(), 0.0),
                    |x| C64::new(b * x.powi(lm as i32) * (-x * x / (2.0 * w2)).exp(), 0.0),
                )
            }
            _ => Err(Error::NotApplicable("radial data needs a sector recipe".into())),
        }
    }

    fn validate(&self) -> Result<()> {
        let positive = |w: f64| {
            if w > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidConfig("data width must be positive".into()))
            }
        };
        match &self.recipe {
            DataRecipe::Gaussian { width, .. }
            | DataRecipe::Sector { width, .. }
            | DataRecipe::AngularGaussian { width, .. } => positive(*width)?,
            DataRecipe::RandomBandLimited { cutoff, .. } => {
                if !(*cutoff > 0.0 && *cutoff <= 1.0) {
                    return Err(Error::InvalidConfig("cutoff must lie in (0, 1]".into()));
                }
            }
            DataRecipe::Zero => {}
        }
        if let Some(n) = self.h1_norm {
            if !(n >= 0.0 && n.is_finite()) {
                return Err(Error::InvalidConfig("h1_norm must be finite and nonnegative".into()));
            }
        }
        Ok(())
    }

    /// Samples the data on `grid`.
    pub fn build_field(&self, grid: &GridSpec) -> Result<SpinorField3D> {
        self.validate()?;
        let mut f = match &self.recipe {
            DataRecipe::Zero => SpinorField3D::zeros(*grid),
            DataRecipe::Gaussian {
                amplitude,
                width,
                center,
                spinor,
            } => {
                let v = unit_spinor(spinor.as_ref())?;
                let w2 = width * width;
                SpinorField3D::from_scalar(
                    *grid,
                    |x| {
                        let d = [x[0] - center[0], x[1] - center[1], x[2] - center[2]];
                        C64::new(amplitude * (-(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]) / (2.0 * w2)).exp(), 0.0)
                    },
                    v,
                )
            }
            DataRecipe::Sector { width, .. } => {
                let dr = (grid.spacing() / 8.0).min(width / 32.0);
                let n = (grid.half_width * 3f64.sqrt() / dr).ceil() as usize + 8;
                let state = self.sector_state((0..n).map(|i| i as f64 * dr).collect())?;
                lift(&state, grid)?
            }
            DataRecipe::AngularGaussian { amplitude, width, tilt } => {
                let w2 = width * width;
                let s = 0.5f64.sqrt();
                SpinorField3D::from_fn(*grid, |x| {
                    let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
                    let g = amplitude * (-r2 / (2.0 * w2)).exp();
                    let a = C64::new(g * s, 0.0);
                    let b = C64::new(0.0, g * s * tilt * x[0] / width);
                    [a, b, ZERO, a * 0.5 + b]
                })
            }
            DataRecipe::RandomBandLimited { amplitude, cutoff } => {
                random_band_limited(grid, *cutoff, &mut rng(self.seed)).scaled(C64::new(*amplitude, 0.0))
            }
        };
        if let Some(target) = self.h1_norm {
            let h1 = sobolev_norm(&f, 1.0, false);
            if h1 > 0.0 {
                f.scale(C64::new(target / h1, 0.0));
            }
        }
        Ok(f)
    }

    /// Radial profiles on `r` (sector recipes only), scaled like
    /// [`build_field`](Self::build_field) would be on `reference` when an
    /// `H^1` target is set.
    pub fn build_radial(&self, r: Vec<f64>) -> Result<RadialSpinorState> {
        self.validate()?;
        let mut state = self.sector_state(r)?;
        if let Some(target) = self.h1_norm {
            let h1 = sector_h1_norm(&self.recipe)?;
            if h1 > 0.0 {
                let s = target / h1;
                for z in state.u_plus.iter_mut().chain(state.u_minus.iter_mut()) {
                    *z *= s;
                }
            }
        }
        Ok(state)
    }
}

/// Closed-form `H^1` norm of a `j = 1/2` Gaussian sector recipe,
/// `||u||^2 + ||grad u||^2` computed by one-dimensional quadrature.
pub fn sector_h1_norm(recipe: &DataRecipe) -> Result<f64> {
    let DataRecipe::Sector {
        two_j,
        two_m,
        kappa,
        amplitude_plus,
        amplitude_minus,
        width,
    } = recipe
    else {
        return Err(Error::NotApplicable("not a sector recipe".into()));
    };
    let qn = QuantumNumbers::new(*two_j, *two_m, *kappa)?;
    let (lp, lm) = qn.orbital();
    // |grad (g(r) Phi)|^2 integrates to g'^2 + l(l+1) g^2 / r^2 on each
    // orbital component, since Phi+- carry pure orbital degree l+-.
    let w2 = width * width;
    let n = 20000;
    let rmax = 14.0 * width;
    let h = rmax / n as f64;
    let mut acc = 0.0;
    for (amp, l) in [(*amplitude_plus, lp), (*amplitude_minus, lm)] {
        if amp == 0.0 {
            continue;
        }
        for k in 1..=n {
            let r = k as f64 * h;
            let e = amp * (-r * r / (2.0 * w2)).exp();
            let g = e * r.powi(l as i32);
            let lead = if l == 0 { 0.0 } else { l as f64 * r.powi(l as i32 - 1) };
            let dg = e * (lead - r.powi(l as i32 + 1) / w2);
            let w = if k == n { 0.5 * h } else { h };
            acc += w * r * r * (g * g + dg * dg + (l * (l + 1)) as f64 * g * g / (r * r));
        }
    }
    Ok(acc.sqrt())
}

fn unit_spinor(v: Option<&[f64; 8]>) -> Result<Spinor> {
    let Some(v) = v else {
        return Ok([C64::new(1.0, 0.0), ZERO, ZERO, ZERO]);
    };
    let s: Spinor = std::array::from_fn(|c| C64::new(v[2 * c], v[2 * c + 1]));
    let n = s.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if n == 0.0 || !n.is_finite() {
        return Err(Error::InvalidConfig("data spinor must be nonzero and finite".into()));
    }
    Ok(s.map(|z| z / n))
}

/// A field with independent complex normal Fourier coefficients on
/// `|xi| <= cutoff * nyquist`, normalised to unit `L^2` norm.
pub fn random_band_limited(grid: &GridSpec, cutoff: f64, rng: &mut impl Rng) -> SpinorField3D {
    let kmax = cutoff * grid.nyquist();
    let mut spec = SpinorSpectrum::zeros(*grid);
    spec.map_modes(|xi, _| {
        let z: Spinor = std::array::from_fn(|_| complex_normal(rng));
        if norm3(&xi) <= kmax {
            z
        } else {
            [ZERO; 4]
        }
    });
    let mut f = spec.into_field();
    let n = f.l2_norm();
    if n > 0.0 {
        f.scale(C64::new(1.0 / n, 0.0));
    }
    f
}

/// A random radial Gaussian bump `A exp(-(r - c)^2 / (2 w^2))` profile with
/// width in `[w_lo, w_hi]` and centre in `[0, c_hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialBump {
    pub amplitude: f64,
    pub width: f64,
    pub center: f64,
}

impl RadialBump {
    pub fn random(rng: &mut impl Rng, w_lo: f64, w_hi: f64, c_hi: f64) -> Self {
        Self {
            amplitude: 1.0,
            width: rng.random_range(w_lo..=w_hi),
            center: if c_hi > 0.0 { rng.random_range(0.0..=c_hi) } else { 0.0 },
        }
    }

    pub fn value(&self, r: f64) -> f64 {
        let d = r - self.center;
        self.amplitude * (-d * d / (2.0 * self.width * self.width)).exp()
    }

    pub fn support_radius(&self) -> f64 {
        self.center + self.width * (2.0 * (1.0 / SUPPORT_TOLERANCE).ln()).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_fields_are_reproducible() {
        let g = GridSpec::new(8, 2.0).unwrap();
        let spec = DataSpec::new(DataRecipe::RandomBandLimited { amplitude: 1.0, cutoff: 0.5 }).with_seed(7);
        assert_eq!(spec.build_field(&g).unwrap(), spec.build_field(&g).unwrap());
        let other = spec.clone().with_seed(8);
        assert_ne!(spec.build_field(&g).unwrap(), other.build_field(&g).unwrap());
    }

    #[test]
    fn h1_rescaling_hits_target() {
        let g = GridSpec::new(32, 8.0).unwrap();
        let spec = DataSpec::new(DataRecipe::Gaussian {
            amplitude: 1.0,
            width: 1.0,
            center: [0.0; 3],
            spinor: None,
        })
        .with_h1_norm(0.01);
        let f = spec.build_field(&g).unwrap();
        assert!((sobolev_norm(&f, 1.0, false) - 0.01).abs() < 1e-14);
    }
}
