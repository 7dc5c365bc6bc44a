//! Maxwellian convolution tensors and the precomputed kernel spectra that
//! every collision operator application reuses.

use super::fft::PaddedConvolver;
use super::kernel::{phi_kernel_sym, smooth_cutoff, sym_index, Sym3};
use crate::error::{invalid, Result};
use crate::velocity::{AxisStencil, VelocityGrid, C64};

/// Cutoffs of the A/K splitting: large-velocity radius and mollifier width.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SplitParams {
    pub r_cut: f64,
    pub eps: f64,
}

impl Default for SplitParams {
    fn default() -> Self {
        Self { r_cut: 5.0, eps: 0.5 }
    }
}

/// Kernel family selector for the convolution `Phi[u] = sum h^3 phi(v - v') u(v')`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelPart {
    /// The whole kernel.
    Full,
    /// `phi * chi`, concentrated near the diagonal `v = v'`.
    Near,
    /// `phi * (1 - chi)`.
    Far,
}

/// Landau tensors on a velocity grid for a fixed `gamma`.
#[derive(Debug, Clone)]
pub struct CollisionTensors {
    pub gamma: f64,
    pub split: SplitParams,
    /// `sigma^{ij} = phi^{ij} * mu` per node.
    pub sigma_ij: Vec<Sym3>,
    /// `sigma^i = sum_j phi^{ij} * (v_j mu / 2)` per node.
    pub sigma_i: Vec<[f64; 3]>,
    /// `sum_i d_{v_i} sigma^{ij}` per node.
    pub div_sigma_ij: Vec<[f64; 3]>,
    /// `sum_i d_{v_i} sigma^i` per node.
    pub div_sigma_i: Vec<f64>,
    pub(crate) n: usize,
    pub(crate) convolver: PaddedConvolver,
    pub(crate) gradient: AxisStencil,
    spectra_full: [Vec<f64>; 6],
    spectra_near: [Vec<f64>; 6],
    spectra_far: [Vec<f64>; 6],
}

impl CollisionTensors {
    pub fn build(grid: &VelocityGrid, gamma: f64, split: SplitParams) -> Result<Self> {
        if !(-2.0..=1.0).contains(&gamma) {
            return Err(invalid("gamma", format!("must lie in [-2, 1], got {gamma}")));
        }
        if !(split.r_cut > 0.0) {
            return Err(invalid("r_cut", format!("must be positive, got {}", split.r_cut)));
        }
        if !(split.eps > 0.0) {
            return Err(invalid("eps", format!("must be positive, got {}", split.eps)));
        }
        let n = grid.n_per_axis();
        let h = grid.spacing();
        let w = grid.weight();
        let convolver = PaddedConvolver::new(n);
        let spectra = |part: KernelPart| -> [Vec<f64>; 6] {
            std::array::from_fn(|c| {
                convolver.kernel_spectrum(|d| {
                    let u = [d[0] as f64 * h, d[1] as f64 * h, d[2] as f64 * h];
                    let r = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
                    let cut = match part {
                        KernelPart::Full => 1.0,
                        KernelPart::Near => smooth_cutoff(r, split.eps),
                        KernelPart::Far => 1.0 - smooth_cutoff(r, split.eps),
                    };
                    w * cut * phi_kernel_sym(u, gamma)[c]
                })
            })
        };
        let spectra_full = spectra(KernelPart::Full);
        let spectra_near = spectra(KernelPart::Near);
        let spectra_far = spectra(KernelPart::Far);
        let gradient = AxisStencil::gaussian_conjugated(grid);

        let mut tensors = Self {
            gamma,
            split,
            sigma_ij: Vec::new(),
            sigma_i: Vec::new(),
            div_sigma_ij: Vec::new(),
            div_sigma_i: Vec::new(),
            n,
            convolver,
            gradient,
            spectra_full,
            spectra_near,
            spectra_far,
        };

        let mu: Vec<C64> = grid.mu().iter().map(|&m| C64::new(m, 0.0)).collect();
        let sigma = tensors.convolve_scalar(&mu, KernelPart::Full);
        tensors.sigma_ij = (0..grid.len()).map(|p| std::array::from_fn(|c| sigma[c][p].re)).collect();

        let half_v_mu: [Vec<C64>; 3] = std::array::from_fn(|j| {
            grid.nodes().iter().zip(grid.mu()).map(|(v, &m)| C64::new(0.5 * v[j] * m, 0.0)).collect()
        });
        let si = tensors.convolve_vector(&half_v_mu, KernelPart::Full);
        tensors.sigma_i = (0..grid.len()).map(|p| std::array::from_fn(|i| si[i][p].re)).collect();

        let plain = AxisStencil::plain(grid);
        let mut div_ij = vec![[0.0; 3]; grid.len()];
        let mut scratch = vec![C64::new(0.0, 0.0); grid.len()];
        for j in 0..3 {
            for i in 0..3 {
                let comp: Vec<C64> =
                    tensors.sigma_ij.iter().map(|s| C64::new(s[sym_index(i, j)], 0.0)).collect();
                plain.apply(i, &comp, &mut scratch);
                for (d, s) in div_ij.iter_mut().zip(&scratch) {
                    d[j] += s.re;
                }
            }
        }
        tensors.div_sigma_ij = div_ij;
        let mut div_i = vec![0.0; grid.len()];
        for i in 0..3 {
            let comp: Vec<C64> = tensors.sigma_i.iter().map(|s| C64::new(s[i], 0.0)).collect();
            plain.apply(i, &comp, &mut scratch);
            for (d, s) in div_i.iter_mut().zip(&scratch) {
                *d += s.re;
            }
        }
        tensors.div_sigma_i = div_i;
        Ok(tensors)
    }

    pub fn n_per_axis(&self) -> usize {
        self.n
    }

    /// Gaussian-conjugated gradient stencil `mu^{1/2} D mu^{-1/2}`.
    pub fn weighted_gradient(&self) -> &AxisStencil {
        &self.gradient
    }

    fn spectra(&self, part: KernelPart) -> &[Vec<f64>; 6] {
        match part {
            KernelPart::Full => &self.spectra_full,
            KernelPart::Near => &self.spectra_near,
            KernelPart::Far => &self.spectra_far,
        }
    }

    /// `Phi^{ij}[s]` for a scalar density: the six packed tensor components.
    pub fn convolve_scalar(&self, s: &[C64], part: KernelPart) -> [Vec<C64>; 6] {
        let spec = self.spectra(part);
        let u = self.convolver.forward(s);
        std::array::from_fn(|c| {
            let prod: Vec<C64> = u.iter().zip(&spec[c]).map(|(a, &k)| a * k).collect();
            self.convolver.inverse(prod)
        })
    }

    /// `sum_j Phi^{ij}[u_j]` for a vector density.
    pub fn convolve_vector(&self, u: &[Vec<C64>; 3], part: KernelPart) -> [Vec<C64>; 3] {
        let spec = self.spectra(part);
        let hat: Vec<Vec<C64>> = u.iter().map(|c| self.convolver.forward(c)).collect();
        std::array::from_fn(|i| {
            let len = hat[0].len();
            let mut acc = vec![C64::new(0.0, 0.0); len];
            for (j, uj) in hat.iter().enumerate() {
                let k = &spec[sym_index(i, j)];
                for ((a, b), &kk) in acc.iter_mut().zip(uj).zip(k) {
                    *a += b * kk;
                }
            }
            self.convolver.inverse(acc)
        })
    }
}

/// Reference `sigma^{ij}(v) = sum_{v'} h^3 phi(v - v') mu(v')` at an arbitrary point.
pub fn sigma_direct(grid: &VelocityGrid, gamma: f64, v: [f64; 3]) -> Sym3 {
    let w = grid.weight();
    let mut acc = [0.0; 6];
    for (vp, &m) in grid.nodes().iter().zip(grid.mu()) {
        let k = phi_kernel_sym([v[0] - vp[0], v[1] - vp[1], v[2] - vp[2]], gamma);
        for c in 0..6 {
            acc[c] += w * m * k[c];
        }
    }
    acc
}
