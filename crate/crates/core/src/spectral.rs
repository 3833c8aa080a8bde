//! Three-dimensional FFTs on the periodic grid.
//!
//! The forward transform is the plain DFT `F_m = sum_k f_k e^{-2 pi i m.k/N}`;
//! the inverse carries the `1/N^3`. Norms elsewhere fold in the cell volume so
//! that discrete Plancherel matches the continuum `L^2` norm on the box.
//!
//! Plans are cached per thread.

use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::C64;

/// Number of lines gathered per strided pass.
const LINE_BLOCK: usize = 16;

pub struct Plan3 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

thread_local! {
    static PLANS: RefCell<HashMap<usize, Rc<Plan3>>> = RefCell::new(HashMap::new());
}

/// The cached plan for `n` points per axis on the current thread.
pub fn plan(n: usize) -> Rc<Plan3> {
    PLANS.with(|cache| {
        cache
            .borrow_mut()
            .entry(n)
            .or_insert_with(|| {
                let mut planner = FftPlanner::new();
                Rc::new(Plan3 {
                    n,
                    forward: planner.plan_fft_forward(n),
                    inverse: planner.plan_fft_inverse(n),
                })
            })
            .clone()
    })
}

impl Plan3 {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn forward(&self, data: &mut [C64]) {
        self.run(self.forward.as_ref(), data);
    }

    /// Inverse transform including the `1/N^3` normalisation.
    pub fn inverse(&self, data: &mut [C64]) {
        self.run(self.inverse.as_ref(), data);
        let scale = 1.0 / (self.n * self.n * self.n) as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }

    fn run(&self, fft: &dyn Fft<f64>, data: &mut [C64]) {
        let n = self.n;
        let n2 = n * n;
        assert_eq!(data.len(), n2 * n, "buffer does not match plan size");
        let mut scratch = vec![C64::default(); fft.get_inplace_scratch_len()];
        let mut lines = vec![C64::default(); LINE_BLOCK * n];

        // z: contiguous rows
        fft.process_with_scratch(data, &mut scratch);

        // y: stride n inside each x-slab
        for slab in data.chunks_exact_mut(n2) {
            for c0 in (0..n).step_by(LINE_BLOCK) {
                let w = LINE_BLOCK.min(n - c0);
                for b in 0..n {
                    for k in 0..w {
                        lines[k * n + b] = slab[b * n + c0 + k];
                    }
                }
                fft.process_with_scratch(&mut lines[..w * n], &mut scratch);
                for b in 0..n {
                    for k in 0..w {
                        slab[b * n + c0 + k] = lines[k * n + b];
                    }
                }
            }
        }

        // x: stride n^2
        for c0 in (0..n2).step_by(LINE_BLOCK) {
            let w = LINE_BLOCK.min(n2 - c0);
            for a in 0..n {
                for k in 0..w {
                    lines[k * n + a] = data[a * n2 + c0 + k];
                }
            }
            fft.process_with_scratch(&mut lines[..w * n], &mut scratch);
            for a in 0..n {
                for k in 0..w {
                    data[a * n2 + c0 + k] = lines[k * n + a];
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dft(data: &[C64], n: usize) -> Vec<C64> {
        let mut out = vec![C64::default(); data.len()];
        let w = -2.0 * std::f64::consts::PI / n as f64;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let mut acc = C64::default();
                    for x in 0..n {
                        for y in 0..n {
                            for z in 0..n {
                                let ph = w * ((a * x + b * y + c * z) as f64);
                                acc += data[(x * n + y) * n + z] * C64::from_polar(1.0, ph);
                            }
                        }
                    }
                    out[(a * n + b) * n + c] = acc;
                }
            }
        }
        out
    }

    #[test]
    fn matches_naive_dft() {
        let n = 6;
        let data: Vec<C64> = (0..n * n * n)
            .map(|k| C64::new((k as f64 * 0.37).sin(), (k as f64 * 0.11).cos()))
            .collect();
        let expected = naive_dft(&data, n);
        let mut got = data.clone();
        plan(n).forward(&mut got);
        for (a, b) in got.iter().zip(&expected) {
            assert!((a - b).norm() < 1e-10);
        }
        plan(n).inverse(&mut got);
        for (a, b) in got.iter().zip(&data) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn non_block_multiple_sizes_round_trip() {
        for n in [10usize, 18, 40] {
            let data: Vec<C64> = (0..n * n * n)
                .map(|k| C64::new((k as f64).sqrt().sin(), 0.5))
                .collect();
            let mut buf = data.clone();
            let p = plan(n);
            p.forward(&mut buf);
            p.inverse(&mut buf);
            let err = buf
                .iter()
                .zip(&data)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            assert!(err < 1e-12, "n={n} err={err}");
        }
    }
}
