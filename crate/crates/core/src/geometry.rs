//! Spatial discretizations: Fourier modes on the torus `[-pi, pi]^d`, and the
//! channel `[-1, 1] x T^2` as a cell-centered `x1` grid times transverse modes.
//! Also the Poisson solvers and the one-dimensional elliptic problems used
//! by the macroscopic test functions.
//!
//! Fourier coefficients are normalized so that `f(x) = sum_k f_k e^{i k.x}`;
//! spatial integrals are reported as averages over the periodic directions.

use crate::error::{invalid, Error, Result};
use crate::velocity::C64;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

const ZERO: C64 = C64::new(0.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// Retained integer wave vectors of a `dim`-dimensional torus.
#[derive(Debug, Clone)]
pub struct TorusModes {
    dim: usize,
    k_max: i64,
    modes: Vec<[i64; 3]>,
    lookup: HashMap<[i64; 3], usize>,
    negated: Vec<usize>,
}

impl TorusModes {
    /// All `k` with `|k_i| <= k_max` on the first `dim` axes and `k_i = 0` on the rest.
    pub fn new(dim: usize, k_max: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(invalid("dim", format!("must be 1, 2 or 3, got {dim}")));
        }
        if k_max == 0 {
            return Err(invalid("k_max", "must be at least 1"));
        }
        let km = k_max as i64;
        let range = |axis: usize| if axis < dim { -km..=km } else { 0..=0 };
        let mut modes = Vec::new();
        for a in range(0) {
            for b in range(1) {
                for c in range(2) {
                    modes.push([a, b, c]);
                }
            }
        }
        let lookup: HashMap<[i64; 3], usize> = modes.iter().enumerate().map(|(i, &k)| (k, i)).collect();
        let negated = modes.iter().map(|k| lookup[&[-k[0], -k[1], -k[2]]]).collect();
        Ok(Self { dim, k_max: km, modes, lookup, negated })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn k_max(&self) -> usize {
        self.k_max as usize
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn modes(&self) -> &[[i64; 3]] {
        &self.modes
    }

    pub fn wavevector(&self, idx: usize) -> [f64; 3] {
        let k = self.modes[idx];
        [k[0] as f64, k[1] as f64, k[2] as f64]
    }

    pub fn wavevectors(&self) -> Vec<[f64; 3]> {
        (0..self.len()).map(|i| self.wavevector(i)).collect()
    }

    pub fn k_squared(&self, idx: usize) -> f64 {
        let k = self.modes[idx];
        (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64
    }

    pub fn index_of(&self, k: [i64; 3]) -> Option<usize> {
        self.lookup.get(&k).copied()
    }

    pub fn zero_index(&self) -> usize {
        self.lookup[&[0, 0, 0]]
    }

    /// Index of `-k`.
    pub fn negated(&self, idx: usize) -> usize {
        self.negated[idx]
    }

    /// Whether `k` is the representative of its `{k, -k}` pair: `k = 0`, or
    /// its first nonzero component is positive.
    pub fn is_representative(&self, idx: usize) -> bool {
        let k = self.modes[idx];
        match k.iter().find(|&&c| c != 0) {
            None => true,
            Some(&c) => c > 0,
        }
    }

    /// Indices of the representatives.
    pub fn half_set(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.is_representative(i)).collect()
    }

    /// Index pairs `(p, q)` with `k_p + k_q = k_target`, both retained.
    pub fn convolution_pairs(&self, target: usize) -> Vec<(usize, usize)> {
        let t = self.modes[target];
        let mut out = Vec::new();
        for (p, kp) in self.modes.iter().enumerate() {
            if let Some(q) = self.index_of([t[0] - kp[0], t[1] - kp[1], t[2] - kp[2]]) {
                out.push((p, q));
            }
        }
        out
    }

    /// Evaluates `sum_k c_k e^{i k.x}` at a point.
    pub fn evaluate(&self, coeffs: &[C64], x: [f64; 3]) -> C64 {
        self.modes
            .iter()
            .zip(coeffs)
            .map(|(k, c)| {
                let phase = k[0] as f64 * x[0] + k[1] as f64 * x[1] + k[2] as f64 * x[2];
                c * C64::from_polar(1.0, phase)
            })
            .sum()
    }

    /// Largest violation of `c_{-k} = conj(c_k)`.
    pub fn conjugate_symmetry_defect(&self, coeffs: &[C64]) -> f64 {
        (0..self.len()).map(|i| (coeffs[self.negated(i)] - coeffs[i].conj()).norm()).fold(0.0, f64::max)
    }
}

/// Potential and field of one torus mode set.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FieldState {
    pub phi: Vec<C64>,
    pub field: Vec<[C64; 3]>,
}

impl FieldState {
    /// `sum_k |E_k|^2`, the spatial average of `|E|^2`.
    pub fn energy(&self) -> f64 {
        self.field.iter().map(|e| e.iter().map(|x| x.norm_sqr()).sum::<f64>()).sum()
    }
}

/// `phi_k = rho_k / |k|^2` for `k != 0`, `phi_0 = 0`, `E_k = -i k phi_k`.
pub fn poisson_torus(modes: &TorusModes, rho: &[C64]) -> Result<FieldState> {
    if rho.len() != modes.len() {
        return Err(Error::SizeMismatch { expected: modes.len(), found: rho.len() });
    }
    let mut phi = vec![ZERO; modes.len()];
    let mut field = vec![[ZERO; 3]; modes.len()];
    for idx in 0..modes.len() {
        let k2 = modes.k_squared(idx);
        if k2 == 0.0 {
            continue;
        }
        phi[idx] = rho[idx] / k2;
        let k = modes.wavevector(idx);
        field[idx] = std::array::from_fn(|a| -I * k[a] * phi[idx]);
    }
    Ok(FieldState { phi, field })
}

/// Largest `|i k.E_k - rho_k|` over nonzero modes.
pub fn gauss_law_defect(modes: &TorusModes, state: &FieldState, rho: &[C64]) -> f64 {
    (0..modes.len())
        .filter(|&i| modes.k_squared(i) > 0.0)
        .map(|i| {
            let k = modes.wavevector(i);
            let div: C64 = (0..3).map(|a| I * k[a] * state.field[i][a]).sum();
            (div - rho[i]).norm()
        })
        .fold(0.0, f64::max)
}

/// Cell-centered grid on `[-1, 1]` times transverse modes `kbar in Z^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelGrid {
    n_x1: usize,
    kbar: Vec<[i64; 2]>,
    nodes: Vec<f64>,
}

impl ChannelGrid {
    pub fn new(n_x1: usize, kbar_max: usize) -> Result<Self> {
        if n_x1 < 4 || n_x1 % 2 != 0 {
            return Err(invalid("n_x1", format!("must be even and at least 4, got {n_x1}")));
        }
        if kbar_max > 2 {
            return Err(invalid("kbar_max", format!("must not exceed 2, got {kbar_max}")));
        }
        let dx = 2.0 / n_x1 as f64;
        let half = n_x1 / 2;
        // Built mirrored so that x and -x are exact negatives.
        let positive: Vec<f64> = (0..half).map(|i| (i as f64 + 0.5) * dx).collect();
        let mut nodes: Vec<f64> = positive.iter().rev().map(|x| -x).collect();
        nodes.extend_from_slice(&positive);
        let km = kbar_max as i64;
        let mut kbar = Vec::new();
        for a in -km..=km {
            for b in -km..=km {
                kbar.push([a, b]);
            }
        }
        Ok(Self { n_x1, kbar, nodes })
    }

    pub fn n_x1(&self) -> usize {
        self.n_x1
    }

    pub fn spacing(&self) -> f64 {
        2.0 / self.n_x1 as f64
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn transverse_modes(&self) -> &[[i64; 2]] {
        &self.kbar
    }

    pub fn transverse_len(&self) -> usize {
        self.kbar.len()
    }

    pub fn kbar_squared(&self, m: usize) -> f64 {
        let k = self.kbar[m];
        (k[0] * k[0] + k[1] * k[1]) as f64
    }

    pub fn transverse_index(&self, k: [i64; 2]) -> Option<usize> {
        self.kbar.iter().position(|&x| x == k)
    }

    /// Index of `(x1 node, kbar mode)` in site order (mode-major).
    pub fn site(&self, node: usize, mode: usize) -> usize {
        mode * self.n_x1 + node
    }

    pub fn sites(&self) -> usize {
        self.n_x1 * self.kbar.len()
    }

    /// Midpoint-rule average over `x1`, i.e. `1/2 int_{-1}^{1} u dx1`.
    pub fn average(&self, u: &[C64]) -> C64 {
        u.iter().sum::<C64>() / self.n_x1 as f64
    }
}

/// Boundary condition at both walls `x1 = +-1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryCondition {
    Dirichlet,
    Neumann,
}

/// Solves `-u'' + kbar2 u = s` on the cell-centered grid.
///
/// Walls are imposed through ghost cells: `u_ghost = -u_edge` (Dirichlet) or
/// `u_ghost = u_edge` (Neumann). The pure Neumann problem at `kbar2 = 0`
/// requires a zero-mean source and returns the zero-mean solution.
pub fn elliptic_solve_1d(grid: &ChannelGrid, kbar2: f64, source: &[C64], bc: BoundaryCondition) -> Result<Vec<C64>> {
    let n = grid.n_x1();
    if source.len() != n {
        return Err(Error::SizeMismatch { expected: n, found: source.len() });
    }
    if !(kbar2 >= 0.0) {
        return Err(invalid("kbar2", format!("must be nonnegative, got {kbar2}")));
    }
    let h2 = grid.spacing() * grid.spacing();
    let singular = bc == BoundaryCondition::Neumann && kbar2 == 0.0;
    if singular {
        let scale = source.iter().map(|s| s.norm()).fold(0.0, f64::max);
        let mean = grid.average(source);
        if mean.norm() > 1e-12 * scale.max(1e-300) && mean.norm() > 1e-300 {
            return Err(Error::Incompatible(format!(
                "pure Neumann problem needs a zero-mean source, mean is {:.3e}",
                mean.norm()
            )));
        }
    }
    let edge = match bc {
        BoundaryCondition::Dirichlet => 3.0,
        BoundaryCondition::Neumann => 1.0,
    };
    let mut lower = vec![-1.0 / h2; n];
    let mut diag = vec![2.0 / h2 + kbar2; n];
    let mut upper = vec![-1.0 / h2; n];
    diag[0] = edge / h2 + kbar2;
    diag[n - 1] = edge / h2 + kbar2;
    let mut rhs = source.to_vec();
    if singular {
        // Pin the first value; the zero mean is restored afterwards.
        diag[0] = 1.0;
        upper[0] = 0.0;
        rhs[0] = ZERO;
    }
    lower[0] = 0.0;
    upper[n - 1] = 0.0;
    let mut u = thomas(&lower, &diag, &upper, &rhs);
    if singular {
        let mean = grid.average(&u);
        u.iter_mut().for_each(|x| *x -= mean);
    }
    Ok(u)
}

/// Tridiagonal solve with real coefficients and complex right-hand side.
pub fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[C64]) -> Vec<C64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![ZERO; n];
    c[0] = upper[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - lower[i] * c[i - 1];
        c[i] = upper[i] / m;
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / m;
    }
    let mut x = vec![ZERO; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

/// Potential of the channel Poisson problem `-phi'' + |kbar|^2 phi = rho` with
/// `phi' = 0` at both walls, for each transverse mode. `rho` is site-ordered.
pub fn poisson_channel(grid: &ChannelGrid, rho: &[C64]) -> Result<Vec<C64>> {
    let n = grid.n_x1();
    if rho.len() != grid.sites() {
        return Err(Error::SizeMismatch { expected: grid.sites(), found: rho.len() });
    }
    let mut phi = Vec::with_capacity(rho.len());
    for m in 0..grid.transverse_len() {
        let slice = &rho[m * n..(m + 1) * n];
        phi.extend(elliptic_solve_1d(grid, grid.kbar_squared(m), slice, BoundaryCondition::Neumann)?);
    }
    Ok(phi)
}

/// Discrete norms entering the elliptic estimate
/// `|u''| + |kbar| |u'| + |kbar|^2 |u| <= C |s|`, returned as the realized `C`.
pub fn elliptic_bound_ratio(grid: &ChannelGrid, kbar2: f64, u: &[C64], source: &[C64], bc: BoundaryCondition) -> f64 {
    let n = grid.n_x1();
    let h = grid.spacing();
    let ghost_sign = match bc {
        BoundaryCondition::Dirichlet => -1.0,
        BoundaryCondition::Neumann => 1.0,
    };
    let at = |i: isize| -> C64 {
        if i < 0 {
            u[0] * ghost_sign
        } else if i as usize >= n {
            u[n - 1] * ghost_sign
        } else {
            u[i as usize]
        }
    };
    let l2 = |vals: &mut dyn Iterator<Item = C64>| -> f64 { (vals.map(|x| x.norm_sqr()).sum::<f64>() * h).sqrt() };
    let second = l2(&mut (0..n as isize).map(|i| (at(i + 1) - 2.0 * at(i) + at(i - 1)) / (h * h)));
    let first = l2(&mut (0..=n as isize).map(|i| (at(i) - at(i - 1)) / h));
    let zeroth = l2(&mut u.iter().copied());
    let src = l2(&mut source.iter().copied());
    if src == 0.0 {
        return 0.0;
    }
    (second + kbar2.sqrt() * first + kbar2 * zeroth) / src
}

/// Which derivative `partial` is applied to the macroscopic field in the
/// channel test-function problems; it selects the boundary conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeKind {
    Identity,
    Normal,
    Transverse,
}

/// Boundary conditions of the channel test potentials.
///
/// | potential      | `partial = d/dx1` | `partial = I, d/dx2, d/dx3` |
/// |----------------|-------------------|-----------------------------|
/// | `phi_c`        | Dirichlet         | Neumann                     |
/// | `phi_b`, j = 1 | Neumann           | Dirichlet                   |
/// | `phi_b`, j = 2,3 | Dirichlet       | Neumann                     |
/// | `phi_a+-`      | Dirichlet         | Neumann                     |
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryTable;

impl BoundaryTable {
    pub fn temperature(d: DerivativeKind) -> BoundaryCondition {
        match d {
            DerivativeKind::Normal => BoundaryCondition::Dirichlet,
            _ => BoundaryCondition::Neumann,
        }
    }

    pub fn velocity(d: DerivativeKind, j: usize) -> BoundaryCondition {
        let normal = d == DerivativeKind::Normal;
        match (j, normal) {
            (0, true) | (1..=2, false) => BoundaryCondition::Neumann,
            _ => BoundaryCondition::Dirichlet,
        }
    }

    pub fn density(d: DerivativeKind) -> BoundaryCondition {
        Self::temperature(d)
    }
}

/// Test potentials of one mode or one transverse slice.
#[derive(Debug, Clone, PartialEq)]
pub struct TestPotentials {
    pub phi_c: Vec<C64>,
    pub phi_b: [Vec<C64>; 3],
    pub phi_a_plus: Vec<C64>,
    pub phi_a_minus: Vec<C64>,
}

/// Torus test potentials: division of `c`, `b_j`, `a_+ + a_-` by `|k|^2`.
pub fn torus_test_potentials(k: [f64; 3], c: C64, b: [C64; 3], a_sum: C64) -> Result<TestPotentials> {
    let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
    if k2 == 0.0 {
        return Err(invalid("k", "the zero mode is controlled by conservation laws, not test functions"));
    }
    Ok(TestPotentials {
        phi_c: vec![c / k2],
        phi_b: std::array::from_fn(|j| vec![b[j] / k2]),
        phi_a_plus: vec![a_sum / k2],
        phi_a_minus: vec![a_sum / k2],
    })
}

/// Channel test potentials for one transverse mode.
///
/// Sources are `partial c`, `partial b_j` and the charge `partial (a_+ - a_-)`;
/// the density potentials solve the difference problem so `phi_a- = -phi_a+`.
pub fn channel_test_potentials(
    grid: &ChannelGrid,
    kbar2: f64,
    d: DerivativeKind,
    dc: &[C64],
    db: [&[C64]; 3],
    dcharge: &[C64],
) -> Result<TestPotentials> {
    let phi_c = elliptic_solve_1d(grid, kbar2, dc, BoundaryTable::temperature(d))?;
    let phi_b = [
        elliptic_solve_1d(grid, kbar2, db[0], BoundaryTable::velocity(d, 0))?,
        elliptic_solve_1d(grid, kbar2, db[1], BoundaryTable::velocity(d, 1))?,
        elliptic_solve_1d(grid, kbar2, db[2], BoundaryTable::velocity(d, 2))?,
    ];
    let phi_a_plus = elliptic_solve_1d(grid, kbar2, dcharge, BoundaryTable::density(d))?;
    let phi_a_minus = phi_a_plus.iter().map(|x| -x).collect();
    Ok(TestPotentials { phi_c, phi_b, phi_a_plus, phi_a_minus })
}
