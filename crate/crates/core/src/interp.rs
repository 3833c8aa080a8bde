//! Sampling grid fields at off-grid points, in particular on spherical
//! shells.
//!
//! Two methods are provided. Spectral evaluation sums the trigonometric
//! interpolant exactly (separably, sharing the `z` contraction between all
//! points of a latitude ring). Lagrange interpolation uses a local tensor
//! stencil with periodic indexing and is much cheaper per point.

use serde::{Deserialize, Serialize};

use crate::field::{ScalarField3D, SpinorField3D, SpinorSpectrum};
use crate::grid::GridSpec;
use crate::sphere::SphereGrid;
use crate::{Spinor, C64, ZERO};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum SamplingMethod {
    Spectral,
    Lagrange { order: usize },
}

impl Default for SamplingMethod {
    fn default() -> Self {
        SamplingMethod::Spectral
    }
}

/// Per-axis factors `exp(i xi_k (x + L))`; the Nyquist mode uses the cosine
/// so the interpolant of real data is real.
fn phases(grid: &GridSpec, x: f64) -> Vec<C64> {
    let n = grid.n;
    let s = x + grid.half_width;
    (0..n)
        .map(|k| {
            let xi = grid.wavenumber(k);
            if k == n / 2 {
                C64::new((xi * s).cos(), 0.0)
            } else {
                C64::from_polar(1.0, xi * s)
            }
        })
        .collect()
}

/// Exact evaluation of the trigonometric interpolant of a field.
pub struct SpectralEvaluator {
    grid: GridSpec,
    spec: SpinorSpectrum,
}

impl SpectralEvaluator {
    pub fn new(u: &SpinorField3D) -> Self {
        Self {
            grid: *u.grid(),
            spec: u.to_spectrum(),
        }
    }

    pub fn from_spectrum(spec: SpinorSpectrum) -> Self {
        Self {
            grid: *spec.grid(),
            spec,
        }
    }

    /// `sum_z S(., ., z) pz(z)` for every component, flattened over `(x, y)`.
    fn contract_z(&self, pz: &[C64]) -> [Vec<C64>; 4] {
        let n = self.grid.n;
        let mut out: [Vec<C64>; 4] = std::array::from_fn(|_| vec![ZERO; n * n]);
        for (c, o) in out.iter_mut().enumerate() {
            let s = self.spec.component(c);
            for (xy, slot) in o.iter_mut().enumerate() {
                let line = &s[xy * n..(xy + 1) * n];
                let mut acc = ZERO;
                for (a, b) in line.iter().zip(pz) {
                    acc += a * b;
                }
                *slot = acc;
            }
        }
        out
    }

    fn contract_xy(&self, g: &[Vec<C64>; 4], px: &[C64], py: &[C64]) -> Spinor {
        let n = self.grid.n;
        let norm = 1.0 / self.grid.len() as f64;
        let mut out = [ZERO; 4];
        for (c, o) in out.iter_mut().enumerate() {
            let mut acc = ZERO;
            for ix in 0..n {
                let row = &g[c][ix * n..(ix + 1) * n];
                let mut inner = ZERO;
                for (a, b) in row.iter().zip(py) {
                    inner += a * b;
                }
                acc += inner * px[ix];
            }
            *o = acc * norm;
        }
        out
    }

    /// Value at an arbitrary point (cost `O(N^3)`).
    pub fn eval(&self, x: [f64; 3]) -> Spinor {
        let g = self.contract_z(&phases(&self.grid, x[2]));
        self.contract_xy(&g, &phases(&self.grid, x[0]), &phases(&self.grid, x[1]))
    }

    /// Values at the quadrature points of `sphere` scaled to radius `r`.
    pub fn eval_shell(&self, sphere: &SphereGrid, r: f64) -> Vec<Spinor> {
        let mut out = Vec::with_capacity(sphere.len());
        for i in 0..sphere.n_theta() {
            let ct = sphere.cos_theta(i);
            let st = (1.0 - ct * ct).max(0.0).sqrt();
            let g = self.contract_z(&phases(&self.grid, r * ct));
            for k in 0..sphere.n_phi() {
                let phi = sphere.phi(k);
                let px = phases(&self.grid, r * st * phi.cos());
                let py = phases(&self.grid, r * st * phi.sin());
                out.push(self.contract_xy(&g, &px, &py));
            }
        }
        out
    }
}

/// Lagrange weights for a stencil of `order` nodes around fractional index `s`.
fn lagrange_stencil(s: f64, order: usize) -> (i64, Vec<f64>) {
    let base = s.floor() as i64 - (order as i64 / 2 - 1);
    let t = s - base as f64;
    let w = (0..order)
        .map(|j| {
            let mut p = 1.0;
            for m in 0..order {
                if m != j {
                    p *= (t - m as f64) / (j as f64 - m as f64);
                }
            }
            p
        })
        .collect();
    (base, w)
}

/// Flattened tensor stencil `(node index, weight)` around `x`, with periodic
/// wrap-around.
pub fn lagrange_stencil_3d(grid: &GridSpec, x: [f64; 3], order: usize) -> Vec<(usize, f64)> {
    let n = grid.n as i64;
    let h = grid.spacing();
    let st: Vec<(i64, Vec<f64>)> = x
        .iter()
        .map(|&xi| lagrange_stencil((xi + grid.half_width) / h, order))
        .collect();
    let wrap = |i: i64| i.rem_euclid(n) as usize;
    let mut out = Vec::with_capacity(order * order * order);
    for (a, wa) in st[0].1.iter().enumerate() {
        let ix = wrap(st[0].0 + a as i64);
        for (b, wb) in st[1].1.iter().enumerate() {
            let iy = wrap(st[1].0 + b as i64);
            let wab = wa * wb;
            for (c, wc) in st[2].1.iter().enumerate() {
                let iz = wrap(st[2].0 + c as i64);
                out.push((grid.index(ix, iy, iz), wab * wc));
            }
        }
    }
    out
}

/// Local tensor Lagrange interpolation with periodic wrap-around.
pub fn lagrange_eval(u: &SpinorField3D, x: [f64; 3], order: usize) -> Spinor {
    let comps = u.components();
    let mut out = [ZERO; 4];
    for (idx, w) in lagrange_stencil_3d(u.grid(), x, order) {
        for (o, c) in out.iter_mut().zip(comps.iter()) {
            *o += c[idx] * w;
        }
    }
    out
}

/// Scalar counterpart of [`lagrange_eval`].
pub fn lagrange_eval_scalar(u: &ScalarField3D, x: [f64; 3], order: usize) -> C64 {
    let v = u.values();
    lagrange_stencil_3d(u.grid(), x, order)
        .into_iter()
        .map(|(idx, w)| v[idx] * w)
        .sum()
}

/// Samples fields on a family of concentric shells.
#[derive(Debug, Clone)]
pub struct ShellSampler {
    pub sphere: SphereGrid,
    pub radii: Vec<f64>,
    pub method: SamplingMethod,
}

impl ShellSampler {
    pub fn new(sphere: SphereGrid, radii: Vec<f64>, method: SamplingMethod) -> Self {
        Self { sphere, radii, method }
    }

    /// `values[shell][point]`.
    pub fn sample(&self, u: &SpinorField3D) -> Vec<Vec<Spinor>> {
        match self.method {
            SamplingMethod::Spectral => {
                let ev = SpectralEvaluator::new(u);
                self.radii.iter().map(|&r| ev.eval_shell(&self.sphere, r)).collect()
            }
            SamplingMethod::Lagrange { order } => {
                let pts = self.sphere.points();
                self.radii
                    .iter()
                    .map(|&r| {
                        pts.iter()
                            .map(|p| lagrange_eval(u, [r * p[0], r * p[1], r * p[2]], order))
                            .collect()
                    })
                    .collect()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn smooth(grid: GridSpec) -> SpinorField3D {
        SpinorField3D::from_fn(grid, |x| {
            let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
            let g = (-r2 / 2.0).exp();
            [C64::new(g, 0.0), C64::new(0.0, x[1] * g), C64::new(x[2] * x[0] * g, 0.0), ZERO]
        })
    }

    #[test]
    fn spectral_reproduces_nodes_and_smooth_values() {
        let g = GridSpec::new(48, 8.0).unwrap();
        let u = smooth(g);
        let ev = SpectralEvaluator::new(&u);
        let idx = g.index(13, 17, 20);
        let at = ev.eval(g.point(idx));
        for c in 0..4 {
            assert!((at[c] - u.component(c)[idx]).norm() < 1e-12);
        }
        let x = [0.37, -0.81, 0.52];
        let r2: f64 = x.iter().map(|v| v * v).sum();
        let e = (-r2 / 2.0).exp();
        let got = ev.eval(x);
        assert!((got[0] - e).norm() < 1e-10);
        assert!((got[2] - x[2] * x[0] * e).norm() < 1e-10);
    }

    #[test]
    fn shell_matches_pointwise_spectral() {
        let g = GridSpec::new(16, 6.0).unwrap();
        let u = smooth(g);
        let ev = SpectralEvaluator::new(&u);
        let s = SphereGrid::new(3);
        let shell = ev.eval_shell(&s, 1.3);
        for (q, v) in shell.iter().enumerate() {
            let p = s.point(q);
            let w = ev.eval([1.3 * p[0], 1.3 * p[1], 1.3 * p[2]]);
            for c in 0..4 {
                assert!((v[c] - w[c]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn lagrange_is_accurate_for_smooth_data() {
        let g = GridSpec::new(64, 8.0).unwrap();
        let u = smooth(g);
        let x = [0.33, -0.41, 1.02];
        let r2: f64 = x.iter().map(|v| v * v).sum();
        let got = lagrange_eval(&u, x, 6);
        assert!((got[0] - (-r2 / 2.0).exp()).norm() < 1e-5);
    }
}
