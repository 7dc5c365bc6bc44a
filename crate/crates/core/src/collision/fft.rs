//! Zero-padded FFT convolution on the velocity lattice.
//!
//! A discrete convolution `sum_{v'} K(v - v') u(v')` over an `n^3` grid only
//! involves offsets in `[-(n-1), n-1]^3`, so a circulant of period `m = 2n`
//! per axis reproduces it without wrap-around. Transforms are pruned: the
//! forward pass skips lines that are entirely zero padding and the inverse
//! pass only finishes lines that land back on the grid.

use crate::velocity::C64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

#[derive(Clone)]
pub struct PaddedConvolver {
    n: usize,
    m: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for PaddedConvolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PaddedConvolver").field("n", &self.n).field("m", &self.m).finish()
    }
}

/// Which lines of a pass carry data: `(limit on slowest index, limit on the other index)`.
#[derive(Clone, Copy)]
struct Limits {
    outer: usize,
    inner: usize,
}

impl PaddedConvolver {
    pub fn new(n: usize) -> Self {
        let m = 2 * n;
        let mut planner = FftPlanner::new();
        Self { n, m, forward: planner.plan_fft_forward(m), inverse: planner.plan_fft_inverse(m) }
    }

    pub fn padded_len(&self) -> usize {
        self.m * self.m * self.m
    }

    /// Transforms an `n^3` field (zero padded to `m^3`) to the frequency domain.
    pub fn forward(&self, input: &[C64]) -> Vec<C64> {
        let (n, m) = (self.n, self.m);
        let mut buf = vec![C64::new(0.0, 0.0); m * m * m];
        for i in 0..n {
            for j in 0..n {
                let src = (i * n + j) * n;
                let dst = (i * m + j) * m;
                buf[dst..dst + n].copy_from_slice(&input[src..src + n]);
            }
        }
        let fft = &self.forward;
        self.pass_last(&mut buf, fft, Limits { outer: n, inner: n });
        self.pass_middle(&mut buf, fft, n);
        self.pass_first(&mut buf, fft);
        buf
    }

    /// Inverse transform restricted back to the `n^3` grid, normalized.
    pub fn inverse(&self, mut spectrum: Vec<C64>) -> Vec<C64> {
        let (n, m) = (self.n, self.m);
        let fft = &self.inverse;
        self.pass_first(&mut spectrum, fft);
        self.pass_middle(&mut spectrum, fft, n);
        self.pass_last(&mut spectrum, fft, Limits { outer: n, inner: n });
        let scale = 1.0 / (m * m * m) as f64;
        let mut out = Vec::with_capacity(n * n * n);
        for i in 0..n {
            for j in 0..n {
                let src = (i * m + j) * m;
                out.extend(spectrum[src..src + n].iter().map(|x| x * scale));
            }
        }
        out
    }

    /// Spectrum of a real kernel given on lattice offsets `d` with `|d_i| <= n - 1`.
    ///
    /// The kernels used here are even, so the spectrum is real and returned as such.
    pub fn kernel_spectrum(&self, kernel: impl Fn([i64; 3]) -> f64) -> Vec<f64> {
        let (n, m) = (self.n as i64, self.m);
        let mut buf = vec![C64::new(0.0, 0.0); m * m * m];
        let wrap = |d: i64| if d < 0 { (d + m as i64) as usize } else { d as usize };
        for a in -(n - 1)..n {
            for b in -(n - 1)..n {
                for c in -(n - 1)..n {
                    let idx = (wrap(a) * m + wrap(b)) * m + wrap(c);
                    buf[idx] = C64::new(kernel([a, b, c]), 0.0);
                }
            }
        }
        let fft = &self.forward;
        let full = Limits { outer: m, inner: m };
        self.pass_last(&mut buf, fft, full);
        self.pass_middle(&mut buf, fft, m);
        self.pass_first(&mut buf, fft);
        buf.into_iter().map(|z| z.re).collect()
    }

    /// Transforms along the contiguous axis for lines with `i < outer`, `j < inner`.
    fn pass_last(&self, buf: &mut [C64], fft: &Arc<dyn Fft<f64>>, lim: Limits) {
        let m = self.m;
        let mut scratch = vec![C64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        for i in 0..lim.outer {
            let start = i * m * m;
            let block = &mut buf[start..start + lim.inner * m];
            fft.process_with_scratch(block, &mut scratch);
        }
    }

    /// Transforms along the middle axis for planes `i < outer`.
    fn pass_middle(&self, buf: &mut [C64], fft: &Arc<dyn Fft<f64>>, outer: usize) {
        let m = self.m;
        let mut scratch = vec![C64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        let mut tmp = vec![C64::new(0.0, 0.0); m * m];
        for i in 0..outer {
            let plane = &mut buf[i * m * m..(i + 1) * m * m];
            for j in 0..m {
                for l in 0..m {
                    tmp[l * m + j] = plane[j * m + l];
                }
            }
            fft.process_with_scratch(&mut tmp, &mut scratch);
            for j in 0..m {
                for l in 0..m {
                    plane[j * m + l] = tmp[l * m + j];
                }
            }
        }
    }

    /// Transforms along the slowest axis for every `(j, l)` line.
    fn pass_first(&self, buf: &mut [C64], fft: &Arc<dyn Fft<f64>>) {
        let m = self.m;
        let mut scratch = vec![C64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        let mut tmp = vec![C64::new(0.0, 0.0); m * m];
        for j in 0..m {
            for i in 0..m {
                let src = (i * m + j) * m;
                for l in 0..m {
                    tmp[l * m + i] = buf[src + l];
                }
            }
            fft.process_with_scratch(&mut tmp, &mut scratch);
            for i in 0..m {
                let dst = (i * m + j) * m;
                for l in 0..m {
                    buf[dst + l] = tmp[l * m + i];
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_direct_convolution() {
        let n = 4usize;
        let conv = PaddedConvolver::new(n);
        let kernel = |d: [i64; 3]| {
            let r2 = (d[0] * d[0] + 2 * d[1] * d[1] + 3 * d[2] * d[2]) as f64;
            1.0 / (1.0 + r2)
        };
        let input: Vec<C64> =
            (0..n * n * n).map(|k| C64::new((k as f64).sin(), (k as f64 * 0.3).cos())).collect();
        let spec = conv.kernel_spectrum(kernel);
        let mut u = conv.forward(&input);
        u.iter_mut().zip(&spec).for_each(|(a, b)| *a *= b);
        let out = conv.inverse(u);
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let mut direct = C64::new(0.0, 0.0);
                    for x in 0..n {
                        for y in 0..n {
                            for z in 0..n {
                                let d = [
                                    a as i64 - x as i64,
                                    b as i64 - y as i64,
                                    c as i64 - z as i64,
                                ];
                                direct += input[(x * n + y) * n + z] * kernel(d);
                            }
                        }
                    }
                    let got = out[(a * n + b) * n + c];
                    assert!((got - direct).norm() < 1e-12, "{got} vs {direct}");
                }
            }
        }
    }
}
