//! Landau kernel and the smooth cutoff used by the A/K splitting.

/// Symmetric 3x3 tensor stored as `[xx, xy, xz, yy, yz, zz]`.
pub type Sym3 = [f64; 6];

/// Position of entry `(i, j)` in a [`Sym3`].
#[inline]
pub const fn sym_index(i: usize, j: usize) -> usize {
    match (i, j) {
        (0, 0) => 0,
        (0, 1) | (1, 0) => 1,
        (0, 2) | (2, 0) => 2,
        (1, 1) => 3,
        (1, 2) | (2, 1) => 4,
        _ => 5,
    }
}

/// `(delta_ij - u_i u_j / |u|^2) |u|^{gamma + 2}`; zero at `u = 0`.
pub fn phi_kernel(u: [f64; 3], gamma: f64) -> [[f64; 3]; 3] {
    let r2 = u[0] * u[0] + u[1] * u[1] + u[2] * u[2];
    let mut out = [[0.0; 3]; 3];
    if r2 == 0.0 {
        return out;
    }
    let scale = r2.powf(0.5 * (gamma + 2.0));
    for i in 0..3 {
        for j in 0..3 {
            let delta = if i == j { 1.0 } else { 0.0 };
            out[i][j] = (delta - u[i] * u[j] / r2) * scale;
        }
    }
    out
}

/// Same as [`phi_kernel`] in packed symmetric form.
pub fn phi_kernel_sym(u: [f64; 3], gamma: f64) -> Sym3 {
    let k = phi_kernel(u, gamma);
    [k[0][0], k[0][1], k[0][2], k[1][1], k[1][2], k[2][2]]
}

/// Smooth radial cutoff: 1 for `r <= eps`, 0 for `r >= 2 eps`, C-infinity in between.
pub fn smooth_cutoff(r: f64, eps: f64) -> f64 {
    let t = (2.0 * eps - r) / eps;
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let a = (-1.0 / t).exp();
    let b = (-1.0 / (1.0 - t)).exp();
    a / (a + b)
}

/// `sigma * x` for a packed symmetric tensor.
#[inline]
pub fn sym_mul(s: &Sym3, x: [f64; 3]) -> [f64; 3] {
    [
        s[0] * x[0] + s[1] * x[1] + s[2] * x[2],
        s[1] * x[0] + s[3] * x[1] + s[4] * x[2],
        s[2] * x[0] + s[4] * x[1] + s[5] * x[2],
    ]
}

/// Eigenvalues of a packed symmetric tensor, ascending.
pub fn sym_eigenvalues(s: &Sym3) -> [f64; 3] {
    let m = nalgebra::Matrix3::new(s[0], s[1], s[2], s[1], s[3], s[4], s[2], s[4], s[5]);
    let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    [ev[0], ev[1], ev[2]]
}
