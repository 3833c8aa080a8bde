//! Matrix potentials `V(x) = V1(|x|) I + i beta (alpha . x_hat) V2(|x|)`,
//! optionally plus a small non-radial hermitian perturbation, together with
//! the admissibility checks for the supported hypothesis classes.

use std::path::Path;

use log::warn;
use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};

use crate::clifford::{alpha_dot_apply, beta_apply, mat_apply, DiracMatrices, Mat4};
use crate::error::{Error, Result};
use crate::field::SpinorField3D;
use crate::grid::{norm3, GridSpec};
use crate::norms::weights::{v_of_x, vhp_weight, DEFAULT_EPSILON, DEFAULT_SIGMA};
use crate::sphere::{scale_coefficients, SphereGrid, DEFAULT_BAND_LIMIT};
use crate::{Spinor, C64, I, ZERO};

pub const DEFAULT_DELTA: f64 = 0.05;
pub const DEFAULT_GRADIENT_CAP: f64 = 1.0;
pub const DEFAULT_ANGULAR_ORDER: f64 = 1.5;

/// Which hypothesis an admissibility check targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialClass {
    /// `|V|, |grad V| <= delta / (<x>^{1/2+} w_sigma^{1/2})`
    Vhp,
    /// `|V| <= delta / v(x)`, `|grad V| <= C / v(x)`
    #[serde(rename = "assnabla_v2")]
    AssNablaV2,
    /// shell norms `||Lambda^s V(r .)||_{L^2(S^2)} <= delta / v(r)` and the
    /// gradient analogue with `C`
    #[serde(rename = "angular_nablaang_v2")]
    AngularNablaAngV2,
}

/// A real radial profile `r -> V(r)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RadialProfile {
    Zero,
    Constant {
        value: f64,
    },
    /// `a exp(-(r - c)^2 / (2 w^2))`
    GaussianBump {
        amplitude: f64,
        width: f64,
        #[serde(default)]
        center: f64,
    },
    /// `a (r / w) exp(-r^2 / (2 w^2))`; smooth as a `V2` because `r x_hat = x`.
    OddGaussian { amplitude: f64, width: f64 },
    /// `delta0 / (<r>^{1/2+eps} r (1 + |ln r|)^sigma)`, saturating the (Vhp)
    /// size bound with ratio exactly `delta0`.
    SaturatingVhp {
        delta0: f64,
        #[serde(default = "default_sigma")]
        sigma: f64,
        #[serde(default = "default_epsilon")]
        epsilon: f64,
    },
    /// Smooth compactly supported shell `a exp(1 - 1/(1 - ((r - R)/w)^2))`.
    Shell {
        amplitude: f64,
        radius: f64,
        width: f64,
    },
    /// Monotone cubic (PCHIP) interpolation of samples; constant extension
    /// outside the table.
    Table { r: Vec<f64>, values: Vec<f64> },
}

fn default_sigma() -> f64 {
    DEFAULT_SIGMA
}
fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

impl RadialProfile {
    pub fn value(&self, r: f64) -> f64 {
        self.eval(r).0
    }

    pub fn derivative(&self, r: f64) -> f64 {
        self.eval(r).1
    }

    /// Value and derivative at `r > 0`.
    pub fn eval(&self, r: f64) -> (f64, f64) {
        match self {
            RadialProfile::Zero => (0.0, 0.0),
            RadialProfile::Constant { value } => (*value, 0.0),
            RadialProfile::GaussianBump {
                amplitude,
                width,
                center,
            } => {
                let d = r - center;
                let g = amplitude * (-d * d / (2.0 * width * width)).exp();
                (g, -g * d / (width * width))
            }
            RadialProfile::OddGaussian { amplitude, width } => {
                let e = (-r * r / (2.0 * width * width)).exp();
                let v = amplitude * r / width * e;
                (v, amplitude / width * e * (1.0 - r * r / (width * width)))
            }
            RadialProfile::SaturatingVhp {
                delta0,
                sigma,
                epsilon,
            } => {
                if r <= 0.0 {
                    return (f64::INFINITY, f64::NEG_INFINITY);
                }
                let p = 0.5 + epsilon;
                let jap = (1.0 + r * r).powf(0.5 * p);
                let l = r.ln();
                let lg = 1.0 + l.abs();
                let v = delta0 / (jap * r * lg.powf(*sigma));
                // d/dr ln v = -p r/(1+r^2) - 1/r - sigma sign(ln r)/(r lg)
                let dlog = -p * r / (1.0 + r * r) - 1.0 / r - sigma * l.signum() / (r * lg);
                (v, v * dlog)
            }
            RadialProfile::Shell {
                amplitude,
                radius,
                width,
            } => {
                let s = (r - radius) / width;
                if s.abs() >= 1.0 {
                    return (0.0, 0.0);
                }
                let q = 1.0 - s * s;
                let v = amplitude * (1.0 - 1.0 / q).exp();
                (v, v * (-2.0 * s / (q * q)) / width)
            }
            RadialProfile::Table { r: rs, values } => pchip_eval(rs, values, r),
        }
    }

    /// Finite limit at `r -> 0`, if any.
    pub fn origin_limit(&self) -> Option<f64> {
        match self {
            RadialProfile::SaturatingVhp { delta0, .. } if *delta0 != 0.0 => None,
            RadialProfile::SaturatingVhp { .. } => Some(0.0),
            RadialProfile::Table { values, .. } => values.first().copied(),
            _ => Some(self.value(0.0)),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            RadialProfile::Zero => true,
            RadialProfile::Constant { value } => *value == 0.0,
            RadialProfile::GaussianBump { amplitude, .. }
            | RadialProfile::OddGaussian { amplitude, .. }
            | RadialProfile::Shell { amplitude, .. } => *amplitude == 0.0,
            RadialProfile::SaturatingVhp { delta0, .. } => *delta0 == 0.0,
            RadialProfile::Table { values, .. } => values.iter().all(|v| *v == 0.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        match self {
            RadialProfile::GaussianBump { width, .. } | RadialProfile::OddGaussian { width, .. }
                if *width <= 0.0 =>
            {
                bad("profile width must be positive")
            }
            RadialProfile::Shell { width, .. } if *width <= 0.0 => bad("shell width must be positive"),
            RadialProfile::SaturatingVhp { sigma, epsilon, .. } if *sigma <= 1.0 || *epsilon <= 0.0 => {
                bad("saturating profile needs sigma > 1 and epsilon > 0")
            }
            RadialProfile::Table { r, values } => {
                if r.len() < 2 || r.len() != values.len() {
                    return bad("radial table needs at least two rows of equal length");
                }
                if r.windows(2).any(|w| w[1] <= w[0]) {
                    return bad("radial table must be strictly increasing in r");
                }
                if r.iter().chain(values).any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite("radial table entry".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let del: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
    let mut d = vec![0.0; n];
    if n == 2 {
        d[0] = del[0];
        d[1] = del[0];
        return d;
    }
    for k in 1..n - 1 {
        if del[k - 1] * del[k] > 0.0 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / del[k - 1] + w2 / del[k]);
        }
    }
    let end = |h0: f64, h1: f64, d0: f64, d1: f64| {
        let mut s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if s.signum() != d0.signum() {
            s = 0.0;
        } else if d0.signum() != d1.signum() && s.abs() > 3.0 * d0.abs() {
            s = 3.0 * d0;
        }
        s
    };
    d[0] = end(h[0], h[1], del[0], del[1]);
    d[n - 1] = end(h[n - 2], h[n - 3], del[n - 2], del[n - 3]);
    d
}

fn pchip_eval(x: &[f64], y: &[f64], t: f64) -> (f64, f64) {
    let n = x.len();
    if t <= x[0] {
        return (y[0], 0.0);
    }
    if t >= x[n - 1] {
        return (y[n - 1], 0.0);
    }
    let k = x.partition_point(|v| *v <= t) - 1;
    let d = pchip_slopes(x, y);
    let h = x[k + 1] - x[k];
    let s = (t - x[k]) / h;
    let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
    let h10 = s * (1.0 - s) * (1.0 - s);
    let h01 = s * s * (3.0 - 2.0 * s);
    let h11 = s * s * (s - 1.0);
    let v = h00 * y[k] + h10 * h * d[k] + h01 * y[k + 1] + h11 * h * d[k + 1];
    let dh00 = 6.0 * s * s - 6.0 * s;
    let dh10 = 3.0 * s * s - 4.0 * s + 1.0;
    let dh01 = -dh00;
    let dh11 = 3.0 * s * s - 2.0 * s;
    let dv = (dh00 * y[k] + dh01 * y[k + 1]) / h + dh10 * d[k] + dh11 * d[k + 1];
    (v, dv)
}

/// Reads a `r, V1, V2` table (header row required) into two profiles.
pub fn read_profile_table(path: &Path) -> Result<(RadialProfile, RadialProfile)> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)?;
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::Format(format!("{}: missing column {name}", path.display())))
    };
    let (ir, i1, i2) = (col("r")?, col("V1")?, col("V2")?);
    let (mut r, mut v1, mut v2) = (Vec::new(), Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec?;
        let parse = |i: usize| -> Result<f64> {
            rec.get(i)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::Format(format!("{}: bad number in row {:?}", path.display(), rec)))
        };
        r.push(parse(ir)?);
        v1.push(parse(i1)?);
        v2.push(parse(i2)?);
    }
    let a = RadialProfile::Table { r: r.clone(), values: v1 };
    let b = RadialProfile::Table { r, values: v2 };
    a.validate()?;
    b.validate()?;
    Ok((a, b))
}

/// Named hermitian 4x4 matrices usable as the angular generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HermitianGenerator {
    Beta,
    Alpha1,
    Alpha2,
    Alpha3,
    /// `i beta alpha_3`
    IBetaAlpha3,
}

impl HermitianGenerator {
    pub fn matrix(&self) -> Mat4 {
        let m = DiracMatrices::standard();
        match self {
            HermitianGenerator::Beta => m.beta,
            HermitianGenerator::Alpha1 => m.alpha[0],
            HermitianGenerator::Alpha2 => m.alpha[1],
            HermitianGenerator::Alpha3 => m.alpha[2],
            HermitianGenerator::IBetaAlpha3 => m.beta * m.alpha[2] * I,
        }
    }
}

/// Non-radial term `q(x) H` with `q(x) = A (x_axis / w) exp(-|x|^2 / (2 w^2))`,
/// of angular degree one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngularPerturbation {
    pub amplitude: f64,
    pub width: f64,
    #[serde(default = "default_axis")]
    pub axis: usize,
    pub generator: HermitianGenerator,
    /// Declared angular band limit of `q`.
    #[serde(default = "default_pert_band")]
    pub band_limit: usize,
}

fn default_axis() -> usize {
    0
}
fn default_pert_band() -> usize {
    1
}

impl AngularPerturbation {
    pub fn q(&self, x: [f64; 3]) -> f64 {
        let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
        self.amplitude * x[self.axis] / self.width * (-r2 / (2.0 * self.width * self.width)).exp()
    }

    pub fn grad_q(&self, x: [f64; 3]) -> [f64; 3] {
        let w2 = self.width * self.width;
        let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
        let e = self.amplitude / self.width * (-r2 / (2.0 * w2)).exp();
        let mut g = [0.0; 3];
        for (k, gk) in g.iter_mut().enumerate() {
            let delta = if k == self.axis { 1.0 } else { 0.0 };
            *gk = e * (delta - x[self.axis] * x[k] / w2);
        }
        g
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PotentialSpec {
    pub v1: RadialProfile,
    pub v2: RadialProfile,
    pub delta: f64,
    pub sigma: f64,
    pub epsilon: f64,
    pub target_class: PotentialClass,
    /// Constant `C` in the gradient bounds of the `v(x)` classes.
    pub gradient_cap: f64,
    /// Order `s` of `Lambda_omega^s` for the angular class.
    pub angular_order: f64,
    pub angular_perturbation: Option<AngularPerturbation>,
}

impl Default for PotentialSpec {
    fn default() -> Self {
        Self::zero()
    }
}

impl PotentialSpec {
    pub fn zero() -> Self {
        Self::radial(RadialProfile::Zero, RadialProfile::Zero)
    }

    pub fn radial(v1: RadialProfile, v2: RadialProfile) -> Self {
        Self {
            v1,
            v2,
            delta: DEFAULT_DELTA,
            sigma: DEFAULT_SIGMA,
            epsilon: DEFAULT_EPSILON,
            target_class: PotentialClass::Vhp,
            gradient_cap: DEFAULT_GRADIENT_CAP,
            angular_order: DEFAULT_ANGULAR_ORDER,
            angular_perturbation: None,
        }
    }

    pub fn with_class(mut self, class: PotentialClass) -> Self {
        self.target_class = class;
        self
    }

    pub fn with_perturbation(mut self, p: AngularPerturbation) -> Self {
        self.angular_perturbation = Some(p);
        self
    }

    pub fn is_zero(&self) -> bool {
        self.v1.is_zero()
            && self.v2.is_zero()
            && self.angular_perturbation.as_ref().is_none_or(|p| p.amplitude == 0.0)
    }

    /// True when `V` has the structured form (no angular perturbation).
    pub fn is_structured(&self) -> bool {
        self.angular_perturbation.as_ref().is_none_or(|p| p.amplitude == 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        self.v1.validate()?;
        self.v2.validate()?;
        if self.delta <= 0.0 || self.sigma <= 1.0 || self.epsilon <= 0.0 {
            return Err(Error::InvalidConfig(
                "potential needs delta > 0, sigma > 1, epsilon > 0".into(),
            ));
        }
        if let Some(p) = &self.angular_perturbation {
            if p.width <= 0.0 || p.axis > 2 {
                return Err(Error::InvalidConfig(
                    "angular perturbation needs width > 0 and axis in 0..3".into(),
                ));
            }
        }
        Ok(())
    }

    /// `(V1, V2)` at radius `r > 0`.
    pub fn profiles_at(&self, r: f64) -> (f64, f64) {
        (self.v1.value(r), self.v2.value(r))
    }

    /// The full matrix `V(x)` (not clamped at the origin).
    pub fn matrix_at(&self, x: [f64; 3]) -> Mat4 {
        let r = norm3(&x);
        let m = DiracMatrices::standard();
        let mut v = Mat4::identity() * C64::new(self.v1.value(r), 0.0);
        if r > 0.0 {
            let xh = [x[0] / r, x[1] / r, x[2] / r];
            v += m.beta * m.alpha_dot(xh) * (I * self.v2.value(r));
        }
        if let Some(p) = &self.angular_perturbation {
            v += p.generator.matrix() * C64::new(p.q(x), 0.0);
        }
        v
    }

    /// `d_k V(x)` for `k = 0, 1, 2`, by the chain rule.
    pub fn gradient_at(&self, x: [f64; 3]) -> [Mat4; 3] {
        let r = norm3(&x);
        let m = DiracMatrices::standard();
        let (_, d1) = self.v1.eval(r);
        let (v2, d2) = self.v2.eval(r);
        let xh = [x[0] / r, x[1] / r, x[2] / r];
        let k = m.beta * m.alpha_dot(xh) * I;
        let mut out = [Mat4::zeros(); 3];
        for (j, o) in out.iter_mut().enumerate() {
            let mut e = [0.0; 3];
            for (i, ei) in e.iter_mut().enumerate() {
                let delta = if i == j { 1.0 } else { 0.0 };
                *ei = (delta - xh[j] * xh[i]) / r;
            }
            *o = Mat4::identity() * C64::new(d1 * xh[j], 0.0)
                + k * C64::new(d2 * xh[j], 0.0)
                + m.beta * m.alpha_dot(e) * (I * v2);
        }
        if let Some(p) = &self.angular_perturbation {
            let g = p.grad_q(x);
            let h = p.generator.matrix();
            for j in 0..3 {
                out[j] += h * C64::new(g[j], 0.0);
            }
        }
        out
    }

    /// Operator norm `|V(x)|`.
    pub fn operator_norm_at(&self, x: [f64; 3]) -> f64 {
        if self.is_structured() {
            let r = norm3(&x);
            let (a, b) = self.profiles_at(r);
            return a.abs() + if r > 0.0 { b.abs() } else { 0.0 };
        }
        hermitian_operator_norm(&self.matrix_at(x))
    }

    /// `|grad V(x)| = (sum_k |d_k V(x)|^2)^{1/2}`, `x != 0`.
    pub fn gradient_norm_at(&self, x: [f64; 3]) -> f64 {
        let r = norm3(&x);
        if self.is_structured() {
            let (_, d1) = self.v1.eval(r);
            let (v2, d2) = self.v2.eval(r);
            // a I + M with M^2 scalar: norm |a| + sqrt(M^2).
            let mut acc = 0.0;
            for &xk in &x {
                let c = xk / r;
                let n = (d1 * c).abs() + ((d2 * c).powi(2) + (v2 / r).powi(2) * (1.0 - c * c)).sqrt();
                acc += n * n;
            }
            return acc.sqrt();
        }
        self.gradient_at(x)
            .iter()
            .map(|g| hermitian_operator_norm(g).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

/// Largest absolute eigenvalue of a hermitian matrix.
pub fn hermitian_operator_norm(m: &Mat4) -> f64 {
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    SymmetricEigen::new(h)
        .eigenvalues
        .iter()
        .fold(0.0f64, |a, v| a.max(v.abs()))
}

/// Pointwise exponential `exp(i theta V(x))` for a fixed `theta`.
#[derive(Debug, Clone)]
pub enum PotentialExponential {
    Structured { theta: f64 },
    Cached { theta: f64, matrices: Vec<Mat4> },
}

impl PotentialExponential {
    pub fn theta(&self) -> f64 {
        match self {
            PotentialExponential::Structured { theta } | PotentialExponential::Cached { theta, .. } => *theta,
        }
    }
}

/// A potential assembled on a grid.
#[derive(Debug, Clone)]
pub struct PotentialField {
    grid: GridSpec,
    v1: Vec<f64>,
    v2: Vec<f64>,
    x_hat: Vec<[f64; 3]>,
    angular: Option<(Vec<f64>, Mat4)>,
    origin_clamped: bool,
}

impl PotentialField {
    /// Samples `spec` on `grid`.
    ///
    /// At the origin node `x_hat = 0`, so only `V1` contributes; a singular
    /// `V1` is clamped to its value at the nearest off-origin radius.
    pub fn assemble(spec: &PotentialSpec, grid: &GridSpec) -> Result<Self> {
        spec.validate()?;
        let n = grid.len();
        let mut v1 = vec![0.0; n];
        let mut v2 = vec![0.0; n];
        let mut x_hat = vec![[0.0; 3]; n];
        let mut origin_clamped = false;
        for idx in 0..n {
            let x = grid.point(idx);
            let r = norm3(&x);
            if r == 0.0 {
                v1[idx] = match spec.v1.origin_limit() {
                    Some(v) if v.is_finite() => v,
                    _ => {
                        origin_clamped = true;
                        let v = spec.v1.value(grid.spacing());
                        warn!("V1 is singular at the origin; clamped to V1(h) = {v:.6e}");
                        v
                    }
                };
                continue;
            }
            let (a, b) = spec.profiles_at(r);
            if !a.is_finite() || !b.is_finite() {
                return Err(Error::NonFinite(format!("potential profile at r = {r}")));
            }
            v1[idx] = a;
            v2[idx] = b;
            x_hat[idx] = [x[0] / r, x[1] / r, x[2] / r];
        }
        let angular = spec
            .angular_perturbation
            .as_ref()
            .filter(|p| p.amplitude != 0.0)
            .map(|p| {
                let q: Vec<f64> = (0..n).map(|idx| p.q(grid.point(idx))).collect();
                (q, p.generator.matrix())
            });
        Ok(Self {
            grid: *grid,
            v1,
            v2,
            x_hat,
            angular,
            origin_clamped,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn origin_clamped(&self) -> bool {
        self.origin_clamped
    }

    pub fn is_structured(&self) -> bool {
        self.angular.is_none()
    }

    /// The 4x4 matrix at node `idx`.
    pub fn matrix(&self, idx: usize) -> Mat4 {
        let m = DiracMatrices::standard();
        let mut v = Mat4::identity() * C64::new(self.v1[idx], 0.0)
            + m.beta * m.alpha_dot(self.x_hat[idx]) * (I * self.v2[idx]);
        if let Some((q, h)) = &self.angular {
            v += h * C64::new(q[idx], 0.0);
        }
        v
    }

    /// `V(x) v` at node `idx`.
    #[inline]
    pub fn apply_at(&self, idx: usize, v: &Spinor) -> Spinor {
        let k = k_apply(self.x_hat[idx], v);
        let (a, b) = (self.v1[idx], self.v2[idx]);
        let mut out = [ZERO; 4];
        for c in 0..4 {
            out[c] = v[c] * a + k[c] * b;
        }
        if let Some((q, h)) = &self.angular {
            let w = mat_apply(h, v);
            for c in 0..4 {
                out[c] += w[c] * q[idx];
            }
        }
        out
    }

    /// `V u`.
    pub fn apply(&self, u: &SpinorField3D) -> Result<SpinorField3D> {
        self.grid.check_same(u.grid())?;
        let mut out = u.clone();
        out.map_points(|idx, v| self.apply_at(idx, &v));
        Ok(out)
    }

    /// `max_x ||V(x) - V(x)^*||`.
    pub fn hermiticity_residual(&self) -> f64 {
        (0..self.grid.len())
            .map(|idx| {
                let m = self.matrix(idx);
                (m - m.adjoint()).iter().fold(0.0f64, |a, z| a.max(z.norm()))
            })
            .fold(0.0, f64::max)
    }

    /// `max_x |V(x)|` (operator norm).
    pub fn sup_operator_norm(&self) -> f64 {
        if self.is_structured() {
            return (0..self.grid.len())
                .map(|i| self.v1[i].abs() + self.v2[i].abs())
                .fold(0.0, f64::max);
        }
        (0..self.grid.len())
            .map(|i| hermitian_operator_norm(&self.matrix(i)))
            .fold(0.0, f64::max)
    }

    /// Prepares `exp(i theta V)`; per-node matrices are cached when `V` is
    /// not of the structured form.
    pub fn exponential(&self, theta: f64) -> PotentialExponential {
        if self.is_structured() {
            return PotentialExponential::Structured { theta };
        }
        let matrices = (0..self.grid.len())
            .map(|idx| {
                hermitian_exp(&self.matrix(idx), theta)
            })
            .collect();
        PotentialExponential::Cached { theta, matrices }
    }

    /// `exp(i theta V(x)) v` at node `idx`.
    #[inline]
    pub fn exp_apply_at(&self, e: &PotentialExponential, idx: usize, v: &Spinor) -> Spinor {
        match e {
            PotentialExponential::Structured { theta } => {
                // exp(i t (a + b K)) = e^{i t a} (cos(t b) + i sin(t b) K),  K^2 = I
                let ph = C64::from_polar(1.0, theta * self.v1[idx]);
                let (s, c) = (theta * self.v2[idx]).sin_cos();
                let k = k_apply(self.x_hat[idx], v);
                let mut out = [ZERO; 4];
                for i in 0..4 {
                    out[i] = ph * (v[i] * c + I * s * k[i]);
                }
                out
            }
            PotentialExponential::Cached { matrices, .. } => mat_apply(&matrices[idx], v),
        }
    }

    /// `exp(i theta V) u`.
    pub fn exp_apply(&self, e: &PotentialExponential, u: &mut SpinorField3D) -> Result<()> {
        self.grid.check_same(u.grid())?;
        u.map_points(|idx, v| self.exp_apply_at(e, idx, &v));
        Ok(())
    }
}

/// `exp(i theta H)` by scaling and squaring of the Taylor series.
pub fn hermitian_exp(h: &Mat4, theta: f64) -> Mat4 {
    let a = h * C64::new(0.0, theta);
    let nrm = a.norm();
    let squarings = if nrm > 0.25 { (nrm / 0.25).log2().ceil() as i32 } else { 0 };
    let b = a / C64::new(2f64.powi(squarings), 0.0);
    let mut out = Mat4::identity();
    let mut term = Mat4::identity();
    for k in 1..=30 {
        term = term * b / C64::new(k as f64, 0.0);
        out += term;
        if term.norm() < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        out = out * out;
    }
    out
}

/// `K v = i beta (alpha . x_hat) v`.
#[inline]
pub fn k_apply(x_hat: [f64; 3], v: &Spinor) -> Spinor {
    let w = beta_apply(&alpha_dot_apply(x_hat, v));
    [I * w[0], I * w[1], I * w[2], I * w[3]]
}

/// Outcome of [`check_admissibility`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdmissibilityReport {
    pub class: PotentialClass,
    pub delta: f64,
    /// Bound used for the gradient: `delta` for (Vhp), `C` otherwise.
    pub gradient_bound: f64,
    /// `sup_x |V(x)| * weight(x)` (shell-norm version for the angular class).
    pub sup_ratio: f64,
    pub sup_gradient_ratio: f64,
    /// Radii at which the two sups are attained.
    pub argmax_radius: f64,
    pub argmax_gradient_radius: f64,
    pub origin_clamped: bool,
    pub passed: bool,
}

impl AdmissibilityReport {
    pub fn size_passed(&self) -> bool {
        self.sup_ratio <= self.delta
    }

    pub fn gradient_passed(&self) -> bool {
        self.sup_gradient_ratio <= self.gradient_bound
    }
}

/// Checks the hypothesis of `spec.target_class` at every off-origin node of
/// `grid` (pointwise classes) or on shells of radius `k h`, `1 <= k <= N/2`
/// (angular class).
///
/// The origin node carries zero weight in every class.
pub fn check_admissibility(spec: &PotentialSpec, grid: &GridSpec) -> Result<AdmissibilityReport> {
    spec.validate()?;
    let origin_clamped = spec.v1.origin_limit().is_none_or(|v| !v.is_finite());
    let gradient_bound = match spec.target_class {
        PotentialClass::Vhp => spec.delta,
        _ => spec.gradient_cap,
    };
    let mut sup = (0.0f64, 0.0);
    let mut sup_g = (0.0f64, 0.0);
    let bump = |slot: &mut (f64, f64), v: f64, r: f64| {
        if v > slot.0 || v.is_nan() {
            *slot = (v, r);
        }
    };
    match spec.target_class {
        PotentialClass::Vhp | PotentialClass::AssNablaV2 => {
            let weight = |r: f64| match spec.target_class {
                PotentialClass::Vhp => vhp_weight(r, spec.sigma, spec.epsilon),
                _ => v_of_x(r, spec.epsilon),
            };
            for idx in 0..grid.len() {
                let x = grid.point(idx);
                let r = norm3(&x);
                if r == 0.0 {
                    continue;
                }
                let w = weight(r);
                bump(&mut sup, spec.operator_norm_at(x) * w, r);
                bump(&mut sup_g, spec.gradient_norm_at(x) * w, r);
            }
        }
        PotentialClass::AngularNablaAngV2 => {
            let sphere = SphereGrid::new(DEFAULT_BAND_LIMIT);
            let pts = sphere.points();
            let h = grid.spacing();
            for k in 1..=grid.n / 2 {
                let r = k as f64 * h;
                let w = v_of_x(r, spec.epsilon);
                let at = |p: &[f64; 3]| [r * p[0], r * p[1], r * p[2]];
                let mats: Vec<Mat4> = pts.iter().map(|p| spec.matrix_at(at(p))).collect();
                bump(&mut sup, shell_norm(&sphere, &mats, spec.angular_order)? * w, r);
                let grads: Vec<[Mat4; 3]> = pts.iter().map(|p| spec.gradient_at(at(p))).collect();
                let mut acc = 0.0;
                for j in 0..3 {
                    let comp: Vec<Mat4> = grads.iter().map(|g| g[j]).collect();
                    acc += shell_norm(&sphere, &comp, spec.angular_order)?.powi(2);
                }
                bump(&mut sup_g, acc.sqrt() * w, r);
            }
        }
    }
    let passed = sup.0.is_finite()
        && sup_g.0.is_finite()
        && sup.0 <= spec.delta
        && sup_g.0 <= gradient_bound;
    Ok(AdmissibilityReport {
        class: spec.target_class,
        delta: spec.delta,
        gradient_bound,
        sup_ratio: sup.0,
        sup_gradient_ratio: sup_g.0,
        argmax_radius: sup.1,
        argmax_gradient_radius: sup_g.1,
        origin_clamped,
        passed,
    })
}

/// `||Lambda^s M||_{L^2(S^2)}` for a matrix field on the sphere, with the
/// Hilbert-Schmidt norm on entries.
pub fn shell_norm(sphere: &SphereGrid, mats: &[Mat4], s: f64) -> Result<f64> {
    let mut acc = 0.0;
    for r in 0..4 {
        for c in 0..4 {
            let vals: Vec<C64> = mats.iter().map(|m| m[(r, c)]).collect();
            if vals.iter().all(|v| *v == ZERO) {
                continue;
            }
            let f = crate::sphere::SphereFunction::new(sphere.clone(), vals)?;
            let mut coeffs = f.coefficients()?;
            scale_coefficients(&mut coeffs, sphere.band_limit(), s);
            acc += coeffs.iter().map(|z| z.norm_sqr()).sum::<f64>();
        }
    }
    Ok(acc.sqrt())
}
