//! Sparse assembly of the velocity diffusion `M = Dw^T sigma Dw` and a
//! preconditioned conjugate-gradient solver for `(I + alpha M) x = b`.

use super::kernel::sym_index;
use super::tensors::CollisionTensors;
use crate::error::{Error, Result};
use crate::velocity::{VelocityGrid, C64};

/// Symmetric positive semidefinite matrix `Dw^T sigma Dw` in CSR form.
///
/// `-2 M` is the diffusion part of the linearized operator.
#[derive(Debug, Clone)]
pub struct DiffusionMatrix {
    row_start: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    diag: Vec<f64>,
}

impl DiffusionMatrix {
    pub fn assemble(t: &CollisionTensors, grid: &VelocityGrid) -> Self {
        let n = grid.n_per_axis();
        let len = grid.len();
        let d = t.weighted_gradient();
        let strides = [n * n, n, 1];
        let mut triplets: Vec<(usize, usize, f64)> = Vec::with_capacity(len * 81);
        for p in 0..len {
            let c = grid.coords(p);
            let s = &t.sigma_ij[p];
            for i in 0..3 {
                let base_i = p - c[i] * strides[i];
                for j in 0..3 {
                    let sij = s[sym_index(i, j)];
                    if sij == 0.0 {
                        continue;
                    }
                    let base_j = p - c[j] * strides[j];
                    for &(a, ca) in d.row(c[i]) {
                        if ca == 0.0 {
                            continue;
                        }
                        for &(b, cb) in d.row(c[j]) {
                            if cb == 0.0 {
                                continue;
                            }
                            triplets.push((base_i + a * strides[i], base_j + b * strides[j], ca * sij * cb));
                        }
                    }
                }
            }
        }
        triplets.sort_unstable_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
        let mut row_start = vec![0usize; len + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *vals.last_mut().expect("entry") += v;
            } else {
                cols.push(c);
                vals.push(v);
                row_start[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..len {
            row_start[r + 1] += row_start[r];
        }
        let mut diag = vec![0.0; len];
        for r in 0..len {
            for k in row_start[r]..row_start[r + 1] {
                if cols[k] == r {
                    diag[r] = vals[k];
                }
            }
        }
        Self { row_start, cols, vals, diag }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// `out = M x`.
    pub fn apply(&self, x: &[C64], out: &mut [C64]) {
        for (r, o) in out.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.row_start[r]..self.row_start[r + 1] {
                acc += x[self.cols[k]] * self.vals[k];
            }
            *o = acc;
        }
    }

    /// Solves `(I + alpha M) x = rhs` by Jacobi-preconditioned CG, starting from `rhs`.
    ///
    /// Returns the solution and the iteration count.
    pub fn solve_shifted(&self, alpha: f64, rhs: &[C64], rel_tol: f64, max_iter: usize) -> Result<(Vec<C64>, usize)> {
        let len = self.len();
        let op = |x: &[C64], out: &mut [C64]| {
            self.apply(x, out);
            for (o, xi) in out.iter_mut().zip(x) {
                *o = xi + *o * alpha;
            }
        };
        let precond: Vec<f64> = self.diag.iter().map(|d| 1.0 / (1.0 + alpha * d)).collect();
        let dot = |a: &[C64], b: &[C64]| -> C64 { a.iter().zip(b).map(|(x, y)| x.conj() * y).sum() };
        let rhs_norm = rhs.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        let mut x = rhs.to_vec();
        if rhs_norm == 0.0 {
            return Ok((x, 0));
        }
        let mut ax = vec![C64::new(0.0, 0.0); len];
        op(&x, &mut ax);
        let mut r: Vec<C64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let mut z: Vec<C64> = r.iter().zip(&precond).map(|(a, &m)| a * m).collect();
        let mut p = z.clone();
        let mut rz = dot(&r, &z).re;
        let mut ap = vec![C64::new(0.0, 0.0); len];
        for iter in 0..max_iter {
            let res = r.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            if res <= rel_tol * rhs_norm {
                return Ok((x, iter));
            }
            op(&p, &mut ap);
            let alpha_k = rz / dot(&p, &ap).re;
            for k in 0..len {
                x[k] += p[k] * alpha_k;
                r[k] -= ap[k] * alpha_k;
            }
            for k in 0..len {
                z[k] = r[k] * precond[k];
            }
            let rz_new = dot(&r, &z).re;
            let beta = rz_new / rz;
            rz = rz_new;
            for k in 0..len {
                p[k] = z[k] + p[k] * beta;
            }
        }
        let res = r.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if res <= rel_tol * rhs_norm {
            Ok((x, max_iter))
        } else {
            Err(Error::NonConvergence { iterations: max_iter, residual: res / rhs_norm })
        }
    }
}
