//! Truncated Cartesian velocity lattice, Maxwellian values, Gaussian moment
//! oracle, velocity fields and the finite-difference gradient stencils shared
//! by the collision operators.
//!
//! Nodes are cell centers of a uniform partition of `[-v_max, v_max]^3`, so
//! every node has uniform weight `h^3` and the node set is closed under each
//! axis reflection. Node `(i, j, l)` lives at flat index `(i * n + j) * n + l`.

use crate::error::{check_len, invalid, Result};
use num_complex::Complex64;
use std::f64::consts::PI;

pub type C64 = Complex64;

/// Uniform cell-centered velocity grid with Maxwellian tables.
#[derive(Debug, Clone)]
pub struct VelocityGrid {
    n: usize,
    v_max: f64,
    h: f64,
    axis: Vec<f64>,
    nodes: Vec<[f64; 3]>,
    mu: Vec<f64>,
    sqrt_mu: Vec<f64>,
}

impl VelocityGrid {
    /// Builds the grid with `n_per_axis` cells per axis on `[-v_max, v_max]`.
    pub fn new(n_per_axis: usize, v_max: f64) -> Result<Self> {
        if n_per_axis < 4 || n_per_axis % 2 != 0 {
            return Err(invalid(
                "n_per_axis",
                format!("must be even and at least 4, got {n_per_axis}"),
            ));
        }
        if !(v_max > 0.0) || !v_max.is_finite() {
            return Err(invalid("v_max", format!("must be positive and finite, got {v_max}")));
        }
        let n = n_per_axis;
        let h = 2.0 * v_max / n as f64;
        // Build the positive half and mirror it so v and -v are exact negatives.
        let half = n / 2;
        let mut axis = vec![0.0; n];
        for m in 0..half {
            let v = (m as f64 + 0.5) * h;
            axis[half + m] = v;
            axis[half - 1 - m] = -v;
        }
        let norm = (2.0 * PI).powf(-1.5);
        let mut nodes = Vec::with_capacity(n * n * n);
        let mut mu = Vec::with_capacity(n * n * n);
        let mut sqrt_mu = Vec::with_capacity(n * n * n);
        for &v1 in &axis {
            for &v2 in &axis {
                for &v3 in &axis {
                    let r2 = v1 * v1 + v2 * v2 + v3 * v3;
                    nodes.push([v1, v2, v3]);
                    mu.push(norm * (-0.5 * r2).exp());
                    sqrt_mu.push(norm.sqrt() * (-0.25 * r2).exp());
                }
            }
        }
        Ok(Self { n, v_max, h, axis, nodes, mu, sqrt_mu })
    }

    pub fn n_per_axis(&self) -> usize {
        self.n
    }

    pub fn v_max(&self) -> f64 {
        self.v_max
    }

    /// Cell width along each axis.
    pub fn spacing(&self) -> f64 {
        self.h
    }

    /// Uniform quadrature weight `h^3` carried by every node.
    pub fn weight(&self) -> f64 {
        self.h * self.h * self.h
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// One-dimensional node coordinates (identical on every axis).
    pub fn axis(&self) -> &[f64] {
        &self.axis
    }

    pub fn nodes(&self) -> &[[f64; 3]] {
        &self.nodes
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn sqrt_mu(&self) -> &[f64] {
        &self.sqrt_mu
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, l: usize) -> usize {
        (i * self.n + j) * self.n + l
    }

    /// Inverse of [`index`](Self::index).
    #[inline]
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let n = self.n;
        [idx / (n * n), (idx / n) % n, idx % n]
    }

    /// Index of the node obtained by flipping the sign of velocity component `axis`.
    #[inline]
    pub fn reflect(&self, idx: usize, axis: usize) -> usize {
        let mut c = self.coords(idx);
        c[axis] = self.n - 1 - c[axis];
        self.index(c[0], c[1], c[2])
    }

    /// Quadrature `sum_v h^3 g(v)` of a real function of the node coordinates.
    pub fn integrate(&self, g: impl Fn([f64; 3]) -> f64) -> f64 {
        self.weight() * self.nodes.iter().map(|&v| g(v)).sum::<f64>()
    }

    /// Discrete mass of the Maxwellian, ideally 1.
    pub fn maxwellian_mass(&self) -> f64 {
        self.weight() * self.mu.iter().sum::<f64>()
    }

    /// Tabulates `g(v) * sqrt(mu(v))` on the nodes.
    pub fn times_sqrt_mu(&self, g: impl Fn([f64; 3]) -> f64) -> Vec<C64> {
        self.nodes
            .iter()
            .zip(&self.sqrt_mu)
            .map(|(&v, &s)| C64::new(g(v) * s, 0.0))
            .collect()
    }
}

/// Analytic Gaussian moment `int v^p exp(-v^2/2) dv = (p-1)!! sqrt(2 pi)`.
pub fn gaussian_moment_1d(p: i64) -> Result<f64> {
    if p < 0 || p % 2 != 0 {
        return Err(invalid("p", format!("must be even and nonnegative, got {p}")));
    }
    let mut double_factorial = 1.0;
    let mut m = p - 1;
    while m > 1 {
        double_factorial *= m as f64;
        m -= 2;
    }
    Ok(double_factorial * (2.0 * PI).sqrt())
}

/// Normalized one-dimensional Gaussian moment `(p-1)!!` (zero for odd `p`).
pub fn normalized_moment_1d(p: u32) -> f64 {
    if p % 2 == 1 {
        0.0
    } else {
        gaussian_moment_1d(p as i64).expect("even") / (2.0 * PI).sqrt()
    }
}

/// Discrete moment `sum_v h^3 v1^p1 v2^p2 v3^p3 mu(v)`.
///
/// The sum is evaluated as a product of one-dimensional sums whose terms are
/// paired `v <-> -v`, so any odd exponent yields exactly zero.
pub fn discrete_moment(grid: &VelocityGrid, exponents: [u32; 3]) -> f64 {
    let norm = (2.0 * PI).powf(-1.5);
    let factor: f64 = exponents.iter().map(|&p| axis_moment(grid, p)).product();
    norm * factor
}

/// `sum_i h v_i^p exp(-v_i^2/2)` with mirrored terms added pairwise.
fn axis_moment(grid: &VelocityGrid, p: u32) -> f64 {
    let n = grid.n;
    let h = grid.h;
    let half = n / 2;
    let mut total = 0.0;
    for m in 0..half {
        let hi = grid.axis[half + m];
        let lo = grid.axis[half - 1 - m];
        let g = (-0.5 * hi * hi).exp();
        total += hi.powi(p as i32) * g + lo.powi(p as i32) * g;
    }
    total * h
}

/// Species content of a [`VelocityField`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Species {
    Plus,
    Minus,
    Pair,
}

/// Complex values on the velocity grid, either one species or the `(f+, f-)` pair.
///
/// Pairs store the `+` component first, then the `-` component.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityField {
    pub species: Species,
    pub values: Vec<C64>,
}

impl VelocityField {
    pub fn zeros_pair(len: usize) -> Self {
        Self { species: Species::Pair, values: vec![C64::new(0.0, 0.0); 2 * len] }
    }

    pub fn single(species: Species, values: Vec<C64>) -> Self {
        assert!(species != Species::Pair, "single-species constructor");
        Self { species, values }
    }

    pub fn pair(plus: &[C64], minus: &[C64]) -> Result<Self> {
        check_len(plus.len(), minus.len())?;
        let mut values = Vec::with_capacity(2 * plus.len());
        values.extend_from_slice(plus);
        values.extend_from_slice(minus);
        Ok(Self { species: Species::Pair, values })
    }

    /// Pair `(g, g)` from a single profile.
    pub fn symmetric_pair(profile: &[C64]) -> Self {
        Self::pair(profile, profile).expect("equal lengths")
    }

    /// Number of velocity nodes per species.
    pub fn nodes(&self) -> usize {
        match self.species {
            Species::Pair => self.values.len() / 2,
            _ => self.values.len(),
        }
    }

    pub fn plus(&self) -> &[C64] {
        let n = self.nodes();
        &self.values[..n]
    }

    pub fn minus(&self) -> &[C64] {
        let n = self.nodes();
        &self.values[self.values.len() - n..]
    }

    pub fn component(&self, sign: usize) -> &[C64] {
        if sign == 0 {
            self.plus()
        } else {
            self.minus()
        }
    }

    pub fn split_mut(&mut self) -> (&mut [C64], &mut [C64]) {
        let n = self.nodes();
        self.values.split_at_mut(n)
    }

    /// Sum `f+ + f-` of a pair.
    pub fn species_sum(&self) -> Vec<C64> {
        self.plus().iter().zip(self.minus()).map(|(a, b)| a + b).collect()
    }

    /// Difference `f+ - f-` of a pair.
    pub fn species_difference(&self) -> Vec<C64> {
        self.plus().iter().zip(self.minus()).map(|(a, b)| a - b).collect()
    }

    pub fn scale(&mut self, s: f64) {
        self.values.iter_mut().for_each(|x| *x *= s);
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: C64, other: &VelocityField) {
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += s * b;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }
}

/// Weighted inner product `sum_v h^3 f conj(g)`, summed over species for pairs.
pub fn l2v_inner(grid: &VelocityGrid, f: &VelocityField, g: &VelocityField) -> Result<C64> {
    check_len(f.values.len(), g.values.len())?;
    if f.nodes() != grid.len() {
        return Err(crate::error::Error::SizeMismatch { expected: grid.len(), found: f.nodes() });
    }
    Ok(inner(grid.weight(), &f.values, &g.values))
}

/// `w * sum f conj(g)` over raw slices.
#[inline]
pub fn inner(weight: f64, f: &[C64], g: &[C64]) -> C64 {
    let s: C64 = f.iter().zip(g).map(|(a, b)| a * b.conj()).sum();
    s * weight
}

/// `w * sum |f|^2` over a raw slice.
#[inline]
pub fn norm_sq(weight: f64, f: &[C64]) -> f64 {
    weight * f.iter().map(|a| a.norm_sqr()).sum::<f64>()
}

/// One-dimensional derivative stencil applied along a chosen axis of the grid.
///
/// Interior rows are centered differences; the first and last rows use the
/// second-order one-sided formulas, so the stencil differentiates quadratics
/// exactly. With Gaussian conjugation each row computes
/// `mu^{1/2} d/dv (mu^{-1/2} f)` through ratios `exp((v_s^2 - v_i^2)/4)`,
/// which never overflow in the tails.
#[derive(Debug, Clone)]
pub struct AxisStencil {
    n: usize,
    rows: Vec<[(usize, f64); 3]>,
}

impl AxisStencil {
    pub fn plain(grid: &VelocityGrid) -> Self {
        Self::build(grid, false)
    }

    pub fn gaussian_conjugated(grid: &VelocityGrid) -> Self {
        Self::build(grid, true)
    }

    fn build(grid: &VelocityGrid, conjugated: bool) -> Self {
        let n = grid.n;
        let v = &grid.axis;
        let inv = 1.0 / (2.0 * grid.h);
        let ratio = |i: usize, s: usize| {
            if conjugated {
                ((v[s] * v[s] - v[i] * v[i]) / 4.0).exp()
            } else {
                1.0
            }
        };
        let mut rows = Vec::with_capacity(n);
        for i in 0..n {
            let row = if i == 0 {
                [(0, -3.0 * inv), (1, 4.0 * inv * ratio(0, 1)), (2, -inv * ratio(0, 2))]
            } else if i == n - 1 {
                [
                    (n - 1, 3.0 * inv),
                    (n - 2, -4.0 * inv * ratio(n - 1, n - 2)),
                    (n - 3, inv * ratio(n - 1, n - 3)),
                ]
            } else {
                [(i - 1, -inv * ratio(i, i - 1)), (i, 0.0), (i + 1, inv * ratio(i, i + 1))]
            };
            rows.push(row);
        }
        Self { n, rows }
    }

    /// Stencil row for axis position `i`: `(position, coefficient)` triples.
    pub fn row(&self, i: usize) -> &[(usize, f64); 3] {
        &self.rows[i]
    }

    #[inline]
    fn stride(&self, axis: usize) -> usize {
        match axis {
            0 => self.n * self.n,
            1 => self.n,
            _ => 1,
        }
    }

    /// `out = D_axis f`.
    pub fn apply(&self, axis: usize, f: &[C64], out: &mut [C64]) {
        let n = self.n;
        let stride = self.stride(axis);
        for (idx, o) in out.iter_mut().enumerate() {
            let pos = (idx / stride) % n;
            let base = idx - pos * stride;
            let mut acc = C64::new(0.0, 0.0);
            for &(s, c) in &self.rows[pos] {
                acc += f[base + s * stride] * c;
            }
            *o = acc;
        }
    }

    /// `out += D_axis^T f`, the exact matrix transpose of [`apply`](Self::apply).
    pub fn apply_transpose_add(&self, axis: usize, f: &[C64], out: &mut [C64]) {
        let n = self.n;
        let stride = self.stride(axis);
        for (idx, &x) in f.iter().enumerate() {
            if x == C64::new(0.0, 0.0) {
                continue;
            }
            let pos = (idx / stride) % n;
            let base = idx - pos * stride;
            for &(s, c) in &self.rows[pos] {
                out[base + s * stride] += x * c;
            }
        }
    }

    /// Gradient `[D_0 f, D_1 f, D_2 f]`.
    pub fn gradient(&self, f: &[C64]) -> [Vec<C64>; 3] {
        let zero = || vec![C64::new(0.0, 0.0); f.len()];
        let mut g = [zero(), zero(), zero()];
        for (axis, out) in g.iter_mut().enumerate() {
            self.apply(axis, f, out);
        }
        g
    }

    /// Divergence-type adjoint `sum_i D_i^T u_i`.
    pub fn divergence_transpose(&self, u: &[Vec<C64>; 3]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); u[0].len()];
        for (axis, comp) in u.iter().enumerate() {
            self.apply_transpose_add(axis, comp, &mut out);
        }
        out
    }
}
