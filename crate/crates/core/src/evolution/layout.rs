//! Site bookkeeping shared by both geometries.
//!
//! A site is one torus mode `k`, or one `(x1 cell, kbar)` pair of the channel
//! (stored mode-major). Every site has a conjugate partner (`-k` or
//! `(x1, -kbar)`); only representatives are evolved and partners are filled
//! by complex conjugation, which keeps physical fields real.

use crate::error::Result;
use crate::geometry::{ChannelGrid, FieldState, TorusModes};
use crate::velocity::C64;

const ZERO: C64 = C64::new(0.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Clone)]
pub enum Layout {
    Torus(TorusModes),
    Channel(ChannelGrid),
}

impl Layout {
    pub fn sites(&self) -> usize {
        match self {
            Layout::Torus(m) => m.len(),
            Layout::Channel(c) => c.sites(),
        }
    }

    /// Conjugate partner of a site.
    pub fn partner(&self, site: usize) -> usize {
        match self {
            Layout::Torus(m) => m.negated(site),
            Layout::Channel(c) => {
                let n = c.n_x1();
                let (mode, node) = (site / n, site % n);
                let k = c.transverse_modes()[mode];
                let neg = c.transverse_index([-k[0], -k[1]]).expect("symmetric mode set");
                c.site(node, neg)
            }
        }
    }

    pub fn is_representative(&self, site: usize) -> bool {
        match self {
            Layout::Torus(m) => m.is_representative(site),
            Layout::Channel(c) => {
                let k = c.transverse_modes()[site / c.n_x1()];
                match [k[0], k[1]].iter().find(|&&x| x != 0) {
                    None => true,
                    Some(&x) => x > 0,
                }
            }
        }
    }

    pub fn representatives(&self) -> Vec<usize> {
        (0..self.sites()).filter(|&s| self.is_representative(s)).collect()
    }

    /// Periodic wave vector of a site: `k` on the torus, `(0, kbar)` on the channel.
    pub fn wavevector(&self, site: usize) -> [f64; 3] {
        match self {
            Layout::Torus(m) => m.wavevector(site),
            Layout::Channel(c) => {
                let k = c.transverse_modes()[site / c.n_x1()];
                [0.0, k[0] as f64, k[1] as f64]
            }
        }
    }

    /// Sites carrying the spatial mean (the `k = 0` mode, or all cells at `kbar = 0`).
    pub fn mean_sites(&self) -> Vec<usize> {
        match self {
            Layout::Torus(m) => vec![m.zero_index()],
            Layout::Channel(c) => {
                let m0 = c.transverse_index([0, 0]).expect("zero mode");
                (0..c.n_x1()).map(|i| c.site(i, m0)).collect()
            }
        }
    }

    /// Pairs `(p, q)` whose product contributes to `target`.
    pub fn convolution_pairs(&self, target: usize) -> Vec<(usize, usize)> {
        match self {
            Layout::Torus(m) => m.convolution_pairs(target),
            Layout::Channel(c) => {
                let n = c.n_x1();
                let (mode, node) = (target / n, target % n);
                let t = c.transverse_modes()[mode];
                let mut out = Vec::new();
                for (p, kp) in c.transverse_modes().iter().enumerate() {
                    if let Some(q) = c.transverse_index([t[0] - kp[0], t[1] - kp[1]]) {
                        out.push((c.site(node, p), c.site(node, q)));
                    }
                }
                out
            }
        }
    }

    /// Whether the 2/3 rule removes quadratic contributions at this site.
    pub fn dealiased_out(&self, site: usize) -> bool {
        let (k, k_max) = match self {
            Layout::Torus(m) => (m.modes()[site], m.k_max() as i64),
            Layout::Channel(c) => {
                let kb = c.transverse_modes()[site / c.n_x1()];
                let km = c.transverse_modes().iter().map(|x| x[0].abs()).max().unwrap_or(0);
                ([0, kb[0], kb[1]], km)
            }
        };
        k.iter().any(|&x| 3 * x.abs() > 2 * k_max)
    }

    /// Velocity axes along which the field can be nonzero.
    pub fn active_axes(&self) -> Vec<usize> {
        match self {
            Layout::Torus(m) => (0..m.dim()).collect(),
            Layout::Channel(c) => {
                if c.transverse_len() > 1 {
                    vec![0, 1, 2]
                } else {
                    vec![0]
                }
            }
        }
    }

    /// Solves the Poisson problem for a site-ordered charge density.
    pub fn poisson(&self, rho: &[C64]) -> Result<FieldState> {
        match self {
            Layout::Torus(m) => crate::geometry::poisson_torus(m, rho),
            Layout::Channel(c) => {
                let phi = channel_potential(c, rho);
                let field = channel_field(c, &phi);
                Ok(FieldState { phi, field })
            }
        }
    }

    /// Field energy: the spatial average of `|E|^2` (face gradients on the channel).
    pub fn field_energy(&self, field: &FieldState) -> f64 {
        match self {
            Layout::Torus(_) => field.energy(),
            Layout::Channel(c) => {
                let n = c.n_x1();
                let dx = c.spacing();
                let mut total = 0.0;
                for m in 0..c.transverse_len() {
                    let phi = &field.phi[m * n..(m + 1) * n];
                    for i in 0..n - 1 {
                        total += ((phi[i + 1] - phi[i]) / dx).norm_sqr() * dx;
                    }
                    total += c.kbar_squared(m) * phi.iter().map(|x| x.norm_sqr()).sum::<f64>() * dx;
                }
                0.5 * total
            }
        }
    }
}

/// Neumann potential per transverse mode. The `kbar = 0` problem is solved
/// with the first value pinned and then shifted to zero mean.
fn channel_potential(c: &ChannelGrid, rho: &[C64]) -> Vec<C64> {
    let n = c.n_x1();
    let h2 = c.spacing() * c.spacing();
    let mut phi = Vec::with_capacity(rho.len());
    for m in 0..c.transverse_len() {
        let k2 = c.kbar_squared(m);
        let src = &rho[m * n..(m + 1) * n];
        let singular = k2 == 0.0;
        let mut lower = vec![-1.0 / h2; n];
        let mut diag = vec![2.0 / h2 + k2; n];
        let mut upper = vec![-1.0 / h2; n];
        diag[0] = 1.0 / h2 + k2;
        diag[n - 1] = 1.0 / h2 + k2;
        lower[0] = 0.0;
        upper[n - 1] = 0.0;
        let mut rhs = src.to_vec();
        if singular {
            // Remove round-off in the total charge before pinning.
            let mean = c.average(&rhs);
            rhs.iter_mut().for_each(|x| *x -= mean);
            diag[0] = 1.0;
            upper[0] = 0.0;
            rhs[0] = ZERO;
        }
        let mut u = crate::geometry::thomas(&lower, &diag, &upper, &rhs);
        if singular {
            let mean = c.average(&u);
            u.iter_mut().for_each(|x| *x -= mean);
        }
        phi.extend(u);
    }
    phi
}

/// Cell field `E = -grad phi`: the `x1` component averages the two face
/// gradients (zero at the walls), the transverse ones are `-i kbar phi`.
fn channel_field(c: &ChannelGrid, phi: &[C64]) -> Vec<[C64; 3]> {
    let n = c.n_x1();
    let dx = c.spacing();
    let mut out = vec![[ZERO; 3]; phi.len()];
    for m in 0..c.transverse_len() {
        let kb = c.transverse_modes()[m];
        let p = &phi[m * n..(m + 1) * n];
        for i in 0..n {
            let left = if i == 0 { ZERO } else { (p[i] - p[i - 1]) / dx };
            let right = if i == n - 1 { ZERO } else { (p[i + 1] - p[i]) / dx };
            out[m * n + i] = [-(left + right) * 0.5, -I * kb[0] as f64 * p[i], -I * kb[1] as f64 * p[i]];
        }
    }
    out
}
