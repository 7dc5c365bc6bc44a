//! Collision sub-step: ARS(2,2,2) IMEX with implicit diffusion, followed by
//! removal of the collision-invariant part of the increment.

use super::{Nonlinearity, Solver, SpectralState};
use crate::collision::operator::{diffusion, exchange_term, GammaSource};
use crate::error::Result;
use crate::velocity::{inner, C64};
use rayon::prelude::*;

const ZERO: C64 = C64::new(0.0, 0.0);

impl Solver {
    /// Explicit collision terms: the exchange part of `L` and, for full runs,
    /// `Gamma(f, f)` convolved over sites. Returned on representative sites.
    pub(crate) fn explicit_collision(&self, sites: &[Vec<C64>]) -> Vec<Vec<C64>> {
        let len = self.grid.len();
        let mut out: Vec<Vec<C64>> = vec![Vec::new(); sites.len()];
        let computed: Vec<(usize, Vec<C64>)> = self
            .reps
            .par_iter()
            .map(|&s| {
                let x = exchange_term(&self.tensors, &self.grid, &super::as_pair(&sites[s]));
                let mut v = Vec::with_capacity(2 * len);
                v.extend_from_slice(&x);
                v.extend_from_slice(&x);
                (s, v)
            })
            .collect();
        for (s, v) in computed {
            out[s] = v;
        }
        if self.config.nonlinearity == Nonlinearity::Full {
            let gamma = self.gamma_convolution(sites);
            for &s in &self.reps {
                for (o, g) in out[s].iter_mut().zip(&gamma[s]) {
                    *o += g;
                }
            }
        }
        out
    }

    /// `sum_{p+q=t} Gamma(f_p, f_q)` on representative sites.
    pub fn gamma_convolution(&self, sites: &[Vec<C64>]) -> Vec<Vec<C64>> {
        let len = self.grid.len();
        let d = self.tensors.weighted_gradient();
        // Sources and gradients are computed on representatives; partners are conjugates.
        let rep_data: Vec<(usize, GammaSource, [[Vec<C64>; 3]; 2])> = self
            .reps
            .par_iter()
            .map(|&s| {
                let f = super::as_pair(&sites[s]);
                let src = GammaSource::new(&self.tensors, &self.grid, &f);
                let grads = [d.gradient(f.plus()), d.gradient(f.minus())];
                (s, src, grads)
            })
            .collect();
        let mut slot: Vec<Option<usize>> = vec![None; sites.len()];
        for (i, (s, _, _)) in rep_data.iter().enumerate() {
            slot[*s] = Some(i);
        }
        let conj3 = |a: &[Vec<C64>; 3]| -> [Vec<C64>; 3] {
            std::array::from_fn(|i| a[i].iter().map(|x| x.conj()).collect())
        };
        let partner_data: Vec<Option<(GammaSource, [[Vec<C64>; 3]; 2])>> = (0..sites.len())
            .map(|s| {
                if slot[s].is_some() {
                    return None;
                }
                let (_, src, grads) = &rep_data[slot[self.layout.partner(s)].expect("partner is representative")];
                let tensor = std::array::from_fn(|i| src.tensor[i].iter().map(|x| x.conj()).collect());
                let vector = conj3(&src.vector);
                Some((GammaSource { tensor, vector }, [conj3(&grads[0]), conj3(&grads[1])]))
            })
            .collect();
        let lookup = |s: usize| -> (&GammaSource, &[[Vec<C64>; 3]; 2]) {
            match slot[s] {
                Some(i) => (&rep_data[i].1, &rep_data[i].2),
                None => {
                    let (src, g) = partner_data[s].as_ref().expect("partner data");
                    (src, g)
                }
            }
        };
        let results: Vec<(usize, Vec<C64>)> = self
            .reps
            .par_iter()
            .map(|&t| {
                let mut values = vec![ZERO; 2 * len];
                if self.config.dealias && self.layout.dealiased_out(t) {
                    return (t, values);
                }
                for species in 0..2 {
                    let mut flux = [vec![ZERO; len], vec![ZERO; len], vec![ZERO; len]];
                    for &(p, q) in &self.pairs[t] {
                        let (src, _) = lookup(p);
                        let (_, grads) = lookup(q);
                        let g = &sites[q][species * len..(species + 1) * len];
                        src.accumulate_flux(&grads[species], g, &mut flux);
                    }
                    let div = d.divergence_transpose(&flux);
                    for (o, x) in values[species * len..(species + 1) * len].iter_mut().zip(div) {
                        *o = -x;
                    }
                }
                (t, values)
            })
            .collect();
        let mut out = vec![Vec::new(); sites.len()];
        for (t, v) in results {
            out[t] = v;
        }
        out
    }

    /// Solves `(I + alpha M) x = rhs` for both species of a pair.
    fn implicit_solve(&self, alpha: f64, rhs: &[C64]) -> Result<Vec<C64>> {
        let m = self.diffusion.as_ref().expect("collision matrix assembled");
        let len = self.grid.len();
        let tol = &self.config.tolerances;
        let (p, _) = m.solve_shifted(alpha, &rhs[..len], tol.cg_rel, tol.cg_max_iter)?;
        let (q, _) = m.solve_shifted(alpha, &rhs[len..], tol.cg_rel, tol.cg_max_iter)?;
        let mut out = p;
        out.extend(q);
        Ok(out)
    }

    /// Advances `f' = L f + Gamma(f, f)` over `tau`.
    pub(crate) fn collision_step(&self, state: &mut SpectralState, tau: f64) -> Result<()> {
        let g = 1.0 - std::f64::consts::FRAC_1_SQRT_2;
        let d = 1.0 - 1.0 / (2.0 * g);
        let alpha = 2.0 * g * tau;
        let y0 = &state.sites;
        let f0 = self.explicit_collision(y0);

        // Stage 1: (I + 2 g tau M) Y1 = y0 + g tau F0.
        let stage1: Vec<(usize, Vec<C64>)> = self
            .reps
            .par_iter()
            .map(|&s| {
                let rhs: Vec<C64> = y0[s].iter().zip(&f0[s]).map(|(y, f)| y + f * (g * tau)).collect();
                self.implicit_solve(alpha, &rhs).map(|x| (s, x))
            })
            .collect::<Result<_>>()?;
        let mut y1 = y0.clone();
        for (s, x) in stage1 {
            y1[s] = x;
        }
        self.fill_partners(&mut y1);
        let f1 = self.explicit_collision(&y1);

        // Stage 2: Y2 = y0 + tau (d F0 + (1-d) F1) + tau (1-g) G(Y1) + tau g G(Y2),
        // with G(Y1) = (Y1 - y0 - g tau F0) / (g tau) from stage 1.
        let stage2: Vec<(usize, Vec<C64>)> = self
            .reps
            .par_iter()
            .map(|&s| {
                let rhs: Vec<C64> = (0..y0[s].len())
                    .map(|q| {
                        y0[s][q]
                            + (f0[s][q] * d + f1[s][q] * (1.0 - d)) * tau
                            + (y1[s][q] - y0[s][q] - f0[s][q] * (g * tau)) * ((1.0 - g) / g)
                    })
                    .collect();
                self.implicit_solve(alpha, &rhs).map(|x| (s, x))
            })
            .collect::<Result<_>>()?;
        let mut y2 = y0.clone();
        for (s, x) in stage2 {
            let mut inc: Vec<C64> = x.iter().zip(&y0[s]).map(|(a, b)| a - b).collect();
            self.remove_invariants(&mut inc);
            y2[s] = y0[s].iter().zip(&inc).map(|(a, b)| a + b).collect();
        }
        self.fill_partners(&mut y2);
        state.sites = y2;
        Ok(())
    }

    /// Projects out the collision-invariant components of a pair in place.
    pub(crate) fn remove_invariants(&self, values: &mut [C64]) {
        let w = self.grid.weight();
        for e in self.invariant_basis() {
            let c = inner(w, values, &e.values);
            for (x, b) in values.iter_mut().zip(&e.values) {
                *x -= c * b;
            }
        }
    }

    /// `L f` on every representative site.
    pub fn apply_linearized(&self, sites: &[Vec<C64>]) -> Vec<Vec<C64>> {
        let len = self.grid.len();
        let mut out = vec![Vec::new(); sites.len()];
        let computed: Vec<(usize, Vec<C64>)> = self
            .reps
            .par_iter()
            .map(|&s| {
                let f = &sites[s];
                let x = exchange_term(&self.tensors, &self.grid, &super::as_pair(f));
                let mut v = diffusion(&self.tensors, &f[..len]);
                v.extend(diffusion(&self.tensors, &f[len..]));
                for q in 0..len {
                    v[q] += x[q];
                    v[len + q] += x[q];
                }
                (s, v)
            })
            .collect();
        for (s, v) in computed {
            out[s] = v;
        }
        out
    }
}
