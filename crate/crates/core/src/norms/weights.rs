//! Spatial weights appearing in the smoothing estimates and in the potential
//! hypotheses.

use serde::{Deserialize, Serialize};

/// Default exponent of the logarithmic weight.
pub const DEFAULT_SIGMA: f64 = 1.5;
/// Default value of the "+" in exponents such as `1/2+`.
pub const DEFAULT_EPSILON: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightId {
    /// `w_sigma^{1/2}(x) = |x| (1 + |log|x||)^sigma`
    WSigmaHalf,
    /// `<x>^{1/2+eps} = (1 + |x|^2)^{(1/2+eps)/2}`
    JapHalfPlus,
    /// `v(x) = |x|^{1/2} |log|x||^{1/2+eps} + |x|^{1+eps}`
    VOfX,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightFunction {
    pub id: WeightId,
    pub sigma: f64,
    pub epsilon: f64,
}

impl WeightFunction {
    pub fn new(id: WeightId) -> Self {
        Self {
            id,
            sigma: DEFAULT_SIGMA,
            epsilon: DEFAULT_EPSILON,
        }
    }

    pub fn with_params(id: WeightId, sigma: f64, epsilon: f64) -> Self {
        Self { id, sigma, epsilon }
    }

    /// Value at radius `r = |x|`.
    pub fn eval(&self, r: f64) -> f64 {
        match self.id {
            WeightId::WSigmaHalf => w_sigma_half(r, self.sigma),
            WeightId::JapHalfPlus => jap_half_plus(r, self.epsilon),
            WeightId::VOfX => v_of_x(r, self.epsilon),
        }
    }
}

pub fn w_sigma_half(r: f64, sigma: f64) -> f64 {
    if r == 0.0 {
        return 0.0;
    }
    r * (1.0 + r.ln().abs()).powf(sigma)
}

pub fn jap_half_plus(r: f64, epsilon: f64) -> f64 {
    (1.0 + r * r).powf(0.5 * (0.5 + epsilon))
}

pub fn v_of_x(r: f64, epsilon: f64) -> f64 {
    if r == 0.0 {
        return 0.0;
    }
    r.sqrt() * r.ln().abs().powf(0.5 + epsilon) + r.powf(1.0 + epsilon)
}

/// The (Vhp) bound denominator `<x>^{1/2+eps} w_sigma^{1/2}(x)`.
pub fn vhp_weight(r: f64, sigma: f64, epsilon: f64) -> f64 {
    jap_half_plus(r, epsilon) * w_sigma_half(r, sigma)
}

/// Average of `w_sigma^{-1}` (the square of the smoothing weight) over a
/// ball of volume `cell_volume` centred at the origin.
///
/// Used in place of the singular nodal value at the origin.
pub fn origin_cell_average_inv_w(sigma: f64, cell_volume: f64) -> f64 {
    let rho = (3.0 * cell_volume / (4.0 * std::f64::consts::PI)).cbrt();
    // (3/rho^3) int_0^rho r^{-2} (1+|ln r|)^{-2 sigma} r^2 dr, by substitution
    // r = rho * s^4 to tame the logarithmic endpoint.
    let n = 400;
    let mut acc = 0.0;
    for k in 0..n {
        let s = (k as f64 + 0.5) / n as f64;
        let r = rho * s.powi(4);
        let jac = 4.0 * rho * s.powi(3);
        acc += jac * (1.0 + r.ln().abs()).powf(-2.0 * sigma);
    }
    acc /= n as f64;
    3.0 * acc / rho.powi(3)
}

/// Comparability constants between `v(x)` and `<x>^{1/2+eps} w_sigma^{1/2}`
/// on `[r_min, r_max]`: the minimum and maximum of their ratio.
pub fn comparability_constants(sigma: f64, epsilon: f64, r_min: f64, r_max: f64) -> (f64, f64) {
    let n = 2000;
    let (lo, hi) = (r_min.ln(), r_max.ln());
    let mut min = f64::INFINITY;
    let mut max = 0.0f64;
    for k in 0..=n {
        let r = (lo + (hi - lo) * k as f64 / n as f64).exp();
        let q = v_of_x(r, epsilon) / vhp_weight(r, sigma, epsilon);
        min = min.min(q);
        max = max.max(q);
    }
    (min, max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_are_positive_off_origin() {
        for id in [WeightId::WSigmaHalf, WeightId::JapHalfPlus, WeightId::VOfX] {
            let w = WeightFunction::new(id);
            for r in [1e-6, 0.1, 0.5, 1.0, 2.0, 10.0, 100.0] {
                assert!(w.eval(r) > 0.0, "{id:?} at {r}");
            }
        }
    }

    #[test]
    fn closed_forms() {
        assert!((w_sigma_half(1.0, 1.5) - 1.0).abs() < 1e-15);
        let e = std::f64::consts::E;
        assert!((w_sigma_half(e, 2.0) - e * 4.0).abs() < 1e-12);
        assert!((jap_half_plus(0.0, 0.1) - 1.0).abs() < 1e-15);
        assert!((v_of_x(1.0, 0.1) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn origin_average_is_finite_and_shrinks() {
        let a = origin_cell_average_inv_w(1.5, 0.125);
        let b = origin_cell_average_inv_w(1.5, 0.125 / 8.0);
        assert!(a.is_finite() && b.is_finite());
        assert!(b * (0.125f64 / 8.0) < a * 0.125);
    }

    #[test]
    fn comparability_is_finite_on_an_annulus() {
        let (lo, hi) = comparability_constants(1.5, 0.1, 0.25, 30.0);
        assert!(lo > 0.0 && hi.is_finite() && hi >= lo);
    }
}
