//! Linearized collision operator `L`, its `-A + K` splitting and the bilinear
//! collision term `Gamma`, all in conservative weak form.
//!
//! With `Dw = mu^{1/2} D mu^{-1/2}` (the conjugated stencil) and `Dw^T` its
//! exact transpose,
//!
//! ```text
//! L_a f      = -2 Dw^T(sigma Dw f_a) + Dw^T( mu^{1/2} Phi[mu^{1/2} (Dw f_+ + Dw f_-)] )
//! Gamma_a(f,g) = -Dw^T( Phi[mu^{1/2} F] Dw g_a - g_a Phi[mu^{1/2} Dw F] ),  F = f_+ + f_-
//! ```
//!
//! The transpose structure makes `L` exactly symmetric and nonpositive, and
//! the kernel identity `phi(u) u = 0` makes the collision invariants exact.

use super::kernel::sym_index;
use super::tensors::{CollisionTensors, KernelPart};
use crate::error::{check_len, Error, Result};
use crate::velocity::{VelocityField, VelocityGrid, C64};

fn check(t: &CollisionTensors, grid: &VelocityGrid, f: &VelocityField) -> Result<()> {
    if t.n_per_axis() != grid.n_per_axis() {
        return Err(Error::SizeMismatch { expected: t.n_per_axis(), found: grid.n_per_axis() });
    }
    check_len(2 * grid.len(), f.values.len())
}

pub(crate) fn zeros(len: usize) -> Vec<C64> {
    vec![C64::new(0.0, 0.0); len]
}

/// `sigma * u` per node for a vector field `u`.
pub(crate) fn sigma_times(t: &CollisionTensors, u: &[Vec<C64>; 3]) -> [Vec<C64>; 3] {
    let len = u[0].len();
    let mut out = [zeros(len), zeros(len), zeros(len)];
    for p in 0..len {
        let s = &t.sigma_ij[p];
        for i in 0..3 {
            out[i][p] = u[0][p] * s[sym_index(i, 0)]
                + u[1][p] * s[sym_index(i, 1)]
                + u[2][p] * s[sym_index(i, 2)];
        }
    }
    out
}

/// Diffusion part `-2 Dw^T(sigma Dw g)` for one species.
pub fn diffusion(t: &CollisionTensors, g: &[C64]) -> Vec<C64> {
    let d = t.weighted_gradient();
    let grad = d.gradient(g);
    let flux = sigma_times(t, &grad);
    let mut out = d.divergence_transpose(&flux);
    out.iter_mut().for_each(|x| *x *= -2.0);
    out
}

/// Exchange part `Dw^T(mu^{1/2} Phi[mu^{1/2} S])` for a species-summed gradient `S`.
pub(crate) fn exchange(
    t: &CollisionTensors,
    grid: &VelocityGrid,
    summed_gradient: &[Vec<C64>; 3],
    part: KernelPart,
) -> Vec<C64> {
    let sm = grid.sqrt_mu();
    let weighted: [Vec<C64>; 3] =
        std::array::from_fn(|i| summed_gradient[i].iter().zip(sm).map(|(a, &s)| a * s).collect());
    let mut conv = t.convolve_vector(&weighted, part);
    for c in conv.iter_mut() {
        c.iter_mut().zip(sm).for_each(|(a, &s)| *a *= s);
    }
    t.weighted_gradient().divergence_transpose(&conv)
}

/// Species-summed conjugated gradient of a pair.
pub(crate) fn summed_gradient(t: &CollisionTensors, f: &VelocityField) -> [Vec<C64>; 3] {
    let d = t.weighted_gradient();
    let mut g = d.gradient(f.plus());
    let gm = d.gradient(f.minus());
    for i in 0..3 {
        g[i].iter_mut().zip(&gm[i]).for_each(|(a, b)| *a += b);
    }
    g
}

/// Exchange part of `L` applied to a pair; identical for both species.
pub fn exchange_term(t: &CollisionTensors, grid: &VelocityGrid, f: &VelocityField) -> Vec<C64> {
    exchange(t, grid, &summed_gradient(t, f), KernelPart::Full)
}

/// Linearized collision operator on a pair.
pub fn apply_l(t: &CollisionTensors, grid: &VelocityGrid, f: &VelocityField) -> Result<VelocityField> {
    check(t, grid, f)?;
    let x = exchange_term(t, grid, f);
    let mut plus = diffusion(t, f.plus());
    let mut minus = diffusion(t, f.minus());
    plus.iter_mut().zip(&x).for_each(|(a, b)| *a += b);
    minus.iter_mut().zip(&x).for_each(|(a, b)| *a += b);
    VelocityField::pair(&plus, &minus)
}

/// The two pieces of `L = -A + K`.
#[derive(Debug, Clone)]
pub struct SplitParts {
    /// `A f` (note the sign: `L f = -A f + K f`).
    pub a_part: VelocityField,
    pub k_part: VelocityField,
}

/// Splits `L` into a coercive part and a velocity-compact part.
///
/// With `T g = 2 (div sigma^i) g`, the ball indicator `1_R` and the kernel
/// halves `phi chi` / `phi (1 - chi)` defining exchange terms `X_near`, `X_far`:
///
/// ```text
/// K f  = 1_R T f + 1_R X_far[1_R f]
/// -A f = (Diff f - T f) + (1 - 1_R) T f + X_near[f] + (X_far[f] - 1_R X_far[1_R f])
/// ```
pub fn apply_a_and_k(t: &CollisionTensors, grid: &VelocityGrid, f: &VelocityField) -> Result<SplitParts> {
    check(t, grid, f)?;
    let len = grid.len();
    let r2 = t.split.r_cut * t.split.r_cut;
    let inside: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|v| if v[0] * v[0] + v[1] * v[1] + v[2] * v[2] <= r2 { 1.0 } else { 0.0 })
        .collect();
    let mut cut = f.clone();
    {
        let (p, m) = cut.split_mut();
        for q in 0..len {
            p[q] *= inside[q];
            m[q] *= inside[q];
        }
    }
    let near = exchange(t, grid, &summed_gradient(t, f), KernelPart::Near);
    let far = exchange(t, grid, &summed_gradient(t, f), KernelPart::Far);
    let far_cut = exchange(t, grid, &summed_gradient(t, &cut), KernelPart::Far);

    let mut a_vals = Vec::with_capacity(2 * len);
    let mut k_vals = Vec::with_capacity(2 * len);
    for s in 0..2 {
        let g = f.component(s);
        let diff = diffusion(t, g);
        for q in 0..len {
            let tg = g[q] * (2.0 * t.div_sigma_i[q]);
            let k = inside[q] * tg + inside[q] * far_cut[q];
            let minus_a = (diff[q] - tg)
                + (1.0 - inside[q]) * tg
                + near[q]
                + (far[q] - inside[q] * far_cut[q]);
            k_vals.push(k);
            a_vals.push(-minus_a);
        }
    }
    let a_part = VelocityField { species: crate::velocity::Species::Pair, values: a_vals };
    let k_part = VelocityField { species: crate::velocity::Species::Pair, values: k_vals };
    Ok(SplitParts { a_part, k_part })
}

/// Convolutions of the first argument of `Gamma`, reusable across many second arguments.
#[derive(Debug, Clone)]
pub struct GammaSource {
    /// `Phi^{ij}[mu^{1/2} F]`, packed symmetric.
    pub tensor: [Vec<C64>; 6],
    /// `sum_j Phi^{ij}[mu^{1/2} (Dw F)_j]`.
    pub vector: [Vec<C64>; 3],
}

impl GammaSource {
    pub fn new(t: &CollisionTensors, grid: &VelocityGrid, f: &VelocityField) -> Self {
        let sm = grid.sqrt_mu();
        let sum = f.species_sum();
        let weighted: Vec<C64> = sum.iter().zip(sm).map(|(a, &s)| a * s).collect();
        let tensor = t.convolve_scalar(&weighted, KernelPart::Full);
        let grad = t.weighted_gradient().gradient(&sum);
        let wgrad: [Vec<C64>; 3] =
            std::array::from_fn(|i| grad[i].iter().zip(sm).map(|(a, &s)| a * s).collect());
        let vector = t.convolve_vector(&wgrad, KernelPart::Full);
        Self { tensor, vector }
    }

    /// `flux += Phi[mu^{1/2}F] grad_g - g Phi[mu^{1/2} Dw F]` for one species of `g`.
    pub fn accumulate_flux(&self, grad_g: &[Vec<C64>; 3], g: &[C64], flux: &mut [Vec<C64>; 3]) {
        let t = &self.tensor;
        for p in 0..g.len() {
            for i in 0..3 {
                flux[i][p] += t[sym_index(i, 0)][p] * grad_g[0][p]
                    + t[sym_index(i, 1)][p] * grad_g[1][p]
                    + t[sym_index(i, 2)][p] * grad_g[2][p]
                    - g[p] * self.vector[i][p];
            }
        }
    }
}

/// Bilinear collision term `Gamma(f, g)` on pairs.
pub fn apply_gamma(
    t: &CollisionTensors,
    grid: &VelocityGrid,
    f: &VelocityField,
    g: &VelocityField,
) -> Result<VelocityField> {
    check(t, grid, f)?;
    check(t, grid, g)?;
    let src = GammaSource::new(t, grid, f);
    let d = t.weighted_gradient();
    let len = grid.len();
    let mut values = Vec::with_capacity(2 * len);
    for s in 0..2 {
        let gs = g.component(s);
        let grad = d.gradient(gs);
        let mut flux = [zeros(len), zeros(len), zeros(len)];
        src.accumulate_flux(&grad, gs, &mut flux);
        let div = d.divergence_transpose(&flux);
        values.extend(div.into_iter().map(|x| -x));
    }
    Ok(VelocityField { species: crate::velocity::Species::Pair, values })
}

/// `Gamma(f, g)` with the kernel convolutions done as direct double sums over
/// the grid, `O(N^2)` in the node count. A reference for [`apply_gamma`] on
/// small grids.
pub fn apply_gamma_direct(grid: &VelocityGrid, gamma: f64, f: &VelocityField, g: &VelocityField) -> Result<VelocityField> {
    check_len(2 * grid.len(), f.values.len())?;
    check_len(2 * grid.len(), g.values.len())?;
    let d = crate::velocity::AxisStencil::gaussian_conjugated(grid);
    let len = grid.len();
    let sm = grid.sqrt_mu();
    let sum = f.species_sum();
    let weighted: Vec<C64> = sum.iter().zip(sm).map(|(a, &s)| a * s).collect();
    let grad_f = d.gradient(&sum);
    let mut tensor = vec![[[C64::new(0.0, 0.0); 3]; 3]; len];
    let mut vector = vec![[C64::new(0.0, 0.0); 3]; len];
    for (p, v) in grid.nodes().iter().enumerate() {
        for (q, w) in grid.nodes().iter().enumerate() {
            let k = super::kernel::phi_kernel([v[0] - w[0], v[1] - w[1], v[2] - w[2]], gamma);
            for i in 0..3 {
                for j in 0..3 {
                    tensor[p][i][j] += weighted[q] * k[i][j];
                    vector[p][i] += grad_f[j][q] * sm[q] * k[i][j];
                }
            }
        }
        for i in 0..3 {
            vector[p][i] *= grid.weight();
            for j in 0..3 {
                tensor[p][i][j] *= grid.weight();
            }
        }
    }
    let mut values = Vec::with_capacity(2 * len);
    for s in 0..2 {
        let gs = g.component(s);
        let grad = d.gradient(gs);
        let flux: [Vec<C64>; 3] = std::array::from_fn(|i| {
            (0..len)
                .map(|p| (0..3).map(|j| tensor[p][i][j] * grad[j][p]).sum::<C64>() - gs[p] * vector[p][i])
                .collect()
        });
        values.extend(d.divergence_transpose(&flux).into_iter().map(|x| -x));
    }
    Ok(VelocityField { species: crate::velocity::Species::Pair, values })
}
