//! Transport and field sub-step.

use super::{Layout, Nonlinearity, Solver, SpectralState, TransportScheme};
use crate::error::{Error, Result};
use crate::geometry::{ChannelGrid, FieldState};
use crate::velocity::C64;

const ZERO: C64 = C64::new(0.0, 0.0);

type M2 = [[C64; 2]; 2];

fn m2_scale(a: &M2, s: C64) -> M2 {
    [[a[0][0] * s, a[0][1] * s], [a[1][0] * s, a[1][1] * s]]
}

fn m2_add(a: &M2, b: &M2) -> M2 {
    [[a[0][0] + b[0][0], a[0][1] + b[0][1]], [a[1][0] + b[1][0], a[1][1] + b[1][1]]]
}

fn m2_mul(a: &M2, b: &M2) -> M2 {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

fn m2_vec(a: &M2, x: [C64; 2]) -> [C64; 2] {
    [a[0][0] * x[0] + a[0][1] * x[1], a[1][0] * x[0] + a[1][1] * x[1]]
}

fn m2_inv(a: &M2) -> M2 {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let inv = 1.0 / det;
    [[a[1][1] * inv, -a[0][1] * inv], [-a[1][0] * inv, a[0][0] * inv]]
}

fn real(m: [[f64; 2]; 2]) -> M2 {
    [[C64::new(m[0][0], 0.0), C64::new(m[0][1], 0.0)], [C64::new(m[1][0], 0.0), C64::new(m[1][1], 0.0)]]
}

const ID: [[f64; 2]; 2] = [[1.0, 0.0], [0.0, 1.0]];

/// Specular boundary checks of one channel state.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WallReport {
    /// Difference between the wall flux and the face flux with a mirrored ghost.
    pub mirror_defect: f64,
    /// Largest `|F(v) + F(Rv)|` through either wall, relative to the largest pair flux.
    pub flux_balance: f64,
}

/// Block-tridiagonal `x1` transport operator for one mirror pair `(v, Rv)`,
/// unknowns `x_i = (f_i(v), f_i(Rv))` with `v_1 = w > 0`.
struct PairTransport {
    lower: Vec<M2>,
    diag: Vec<M2>,
    upper: Vec<M2>,
    /// Face flux matrices `(A, B, right wall, left wall)`, already divided by `dx`.
    faces: [M2; 4],
}

impl PairTransport {
    fn new(n: usize, dx: f64, w: f64, kappa: f64, scheme: TransportScheme) -> Self {
        // Face flux F = A x_left + B x_right (interior), F = W x_cell (walls).
        let s = [[w, 0.0], [0.0, -w]];
        let (a, b, wall_right, wall_left) = match scheme {
            TransportScheme::Centered => {
                let half = [[0.5 * w, 0.0], [0.0, -0.5 * w]];
                // S (I + P) / 2 with the swap P.
                let wall = [[0.5 * s[0][0], 0.5 * s[0][0]], [0.5 * s[1][1], 0.5 * s[1][1]]];
                (half, half, wall, wall)
            }
            TransportScheme::Upwind => {
                let a = [[w, 0.0], [0.0, 0.0]];
                let b = [[0.0, 0.0], [0.0, -w]];
                let right = [[w, 0.0], [-w, 0.0]];
                let left = [[0.0, w], [0.0, -w]];
                (a, b, right, left)
            }
        };
        let inv = 1.0 / dx;
        let (a, b) = (m2_scale(&real(a), C64::new(inv, 0.0)), m2_scale(&real(b), C64::new(inv, 0.0)));
        let wall_right = m2_scale(&real(wall_right), C64::new(inv, 0.0));
        let wall_left = m2_scale(&real(wall_left), C64::new(inv, 0.0));
        let rotation = m2_scale(&real(ID), C64::new(0.0, kappa));
        let mut lower = vec![[[ZERO; 2]; 2]; n];
        let mut diag = vec![rotation; n];
        let mut upper = vec![[[ZERO; 2]; 2]; n];
        for i in 0..n {
            // Right face of cell i.
            if i + 1 < n {
                diag[i] = m2_add(&diag[i], &a);
                upper[i] = b;
            } else {
                diag[i] = m2_add(&diag[i], &wall_right);
            }
            // Left face of cell i (subtracted).
            if i > 0 {
                diag[i] = m2_add(&diag[i], &m2_scale(&b, C64::new(-1.0, 0.0)));
                lower[i] = m2_scale(&a, C64::new(-1.0, 0.0));
            } else {
                diag[i] = m2_add(&diag[i], &m2_scale(&wall_left, C64::new(-1.0, 0.0)));
            }
        }
        Self { lower, diag, upper, faces: [a, b, wall_right, wall_left] }
    }

    /// Largest entry of the difference between the wall flux matrices and the
    /// interior face flux evaluated on the mirrored ghost cell.
    fn mirror_defect(&self) -> f64 {
        let [a, b, right, left] = &self.faces;
        let swap = real([[0.0, 1.0], [1.0, 0.0]]);
        let ghost_right = m2_add(a, &m2_mul(b, &swap));
        let ghost_left = m2_add(&m2_mul(a, &swap), b);
        let mut worst: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                worst = worst.max((right[i][j] - ghost_right[i][j]).norm()).max((left[i][j] - ghost_left[i][j]).norm());
            }
        }
        worst
    }

    /// Outgoing fluxes of the pair through the right and left walls.
    fn wall_fluxes(&self, first: [C64; 2], last: [C64; 2]) -> [[C64; 2]; 2] {
        [m2_vec(&self.faces[2], last), m2_vec(&self.faces[3], first)]
    }

    /// `y = x + theta T x`.
    fn apply(&self, theta: f64, x: &[[C64; 2]]) -> Vec<[C64; 2]> {
        let n = x.len();
        let th = C64::new(theta, 0.0);
        (0..n)
            .map(|i| {
                let mut t = m2_vec(&self.diag[i], x[i]);
                if i > 0 {
                    let l = m2_vec(&self.lower[i], x[i - 1]);
                    t = [t[0] + l[0], t[1] + l[1]];
                }
                if i + 1 < n {
                    let u = m2_vec(&self.upper[i], x[i + 1]);
                    t = [t[0] + u[0], t[1] + u[1]];
                }
                [x[i][0] + th * t[0], x[i][1] + th * t[1]]
            })
            .collect()
    }

    /// Solves `(I + theta T) y = r` by block elimination.
    fn solve(&self, theta: f64, r: &[[C64; 2]]) -> Vec<[C64; 2]> {
        let n = r.len();
        let th = C64::new(theta, 0.0);
        let id = real(ID);
        let d: Vec<M2> = self.diag.iter().map(|m| m2_add(&id, &m2_scale(m, th))).collect();
        let l: Vec<M2> = self.lower.iter().map(|m| m2_scale(m, th)).collect();
        let u: Vec<M2> = self.upper.iter().map(|m| m2_scale(m, th)).collect();
        let mut c = vec![[[ZERO; 2]; 2]; n];
        let mut g = vec![[ZERO; 2]; n];
        let inv0 = m2_inv(&d[0]);
        c[0] = m2_mul(&inv0, &u[0]);
        g[0] = m2_vec(&inv0, r[0]);
        for i in 1..n {
            let m = m2_add(&d[i], &m2_scale(&m2_mul(&l[i], &c[i - 1]), C64::new(-1.0, 0.0)));
            let minv = m2_inv(&m);
            c[i] = m2_mul(&minv, &u[i]);
            let lg = m2_vec(&l[i], g[i - 1]);
            g[i] = m2_vec(&minv, [r[i][0] - lg[0], r[i][1] - lg[1]]);
        }
        let mut y = vec![[ZERO; 2]; n];
        y[n - 1] = g[n - 1];
        for i in (0..n - 1).rev() {
            let cy = m2_vec(&c[i], y[i + 1]);
            y[i] = [g[i][0] - cy[0], g[i][1] - cy[1]];
        }
        y
    }
}

impl Solver {
    /// Advances transport and field terms over `tau`.
    pub(crate) fn vlasov_step(&self, state: &mut SpectralState, tau: f64) -> Result<()> {
        if !self.config.field_coupling {
            match &self.layout {
                Layout::Torus(_) => self.exact_streaming(&mut state.sites, tau),
                Layout::Channel(_) => {
                    let base = self.transport_map(&state.sites, tau, false);
                    state.sites = self.transport_map(&base, tau, true);
                    self.fill_partners(&mut state.sites);
                }
            }
            state.field = self.solve_field(&state.sites)?;
            return Ok(());
        }
        let old = &state.sites;
        let base = self.transport_map(old, tau, false);
        let mut new = old.clone();
        let tol = self.config.tolerances.fixed_point;
        let mut previous = f64::INFINITY;
        let mut converged = false;
        let mut delta = 0.0;
        for _ in 0..self.config.tolerances.fixed_point_max_iter {
            let mid: Vec<Vec<C64>> =
                old.iter().zip(&new).map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x + y) * 0.5).collect()).collect();
            let field = self.layout.poisson(&self.charge(&mid))?;
            let forcing = self.field_forcing(&mid, &field, true);
            let mut rhs = base.clone();
            for &s in &self.reps {
                for (r, f) in rhs[s].iter_mut().zip(&forcing[s]) {
                    *r += f * tau;
                }
            }
            let mut next = self.transport_map(&rhs, tau, true);
            self.fill_partners(&mut next);
            delta = next
                .iter()
                .zip(&new)
                .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).norm()))
                .fold(0.0, f64::max);
            let scale = next.iter().flat_map(|s| s.iter()).map(|x| x.norm()).fold(0.0, f64::max);
            new = next;
            if delta <= tol * scale || (delta >= previous && delta <= 1e3 * tol * scale) {
                converged = true;
                break;
            }
            previous = delta;
        }
        if !converged {
            return Err(Error::NonConvergence { iterations: self.config.tolerances.fixed_point_max_iter, residual: delta });
        }
        state.field = self.layout.poisson(&self.charge(&new))?;
        state.sites = new;
        Ok(())
    }

    /// `f <- exp(-i tau v.k) f` on every torus site.
    fn exact_streaming(&self, sites: &mut [Vec<C64>], tau: f64) {
        let len = self.grid.len();
        for (s, f) in sites.iter_mut().enumerate() {
            let k = self.layout.wavevector(s);
            if k == [0.0; 3] {
                continue;
            }
            for (q, v) in self.grid.nodes().iter().enumerate() {
                let phase = C64::from_polar(1.0, -tau * (v[0] * k[0] + v[1] * k[1] + v[2] * k[2]));
                f[q] *= phase;
                f[len + q] *= phase;
            }
        }
    }

    /// `(I - tau/2 T) f` (`implicit = false`) or `(I + tau/2 T)^{-1} f` on representative sites.
    pub(crate) fn transport_map(&self, sites: &[Vec<C64>], tau: f64, implicit: bool) -> Vec<Vec<C64>> {
        let mut out = sites.to_vec();
        match &self.layout {
            Layout::Torus(_) => {
                let len = self.grid.len();
                for &s in &self.reps {
                    let k = self.layout.wavevector(s);
                    if k == [0.0; 3] {
                        continue;
                    }
                    let f = &mut out[s];
                    for (q, v) in self.grid.nodes().iter().enumerate() {
                        let rot = C64::new(0.0, 0.5 * tau * (v[0] * k[0] + v[1] * k[1] + v[2] * k[2]));
                        let factor = if implicit { 1.0 / (1.0 + rot) } else { 1.0 - rot };
                        f[q] *= factor;
                        f[len + q] *= factor;
                    }
                }
            }
            Layout::Channel(c) => self.channel_transport(c, sites, &mut out, tau, implicit),
        }
        out
    }

    fn channel_transport(&self, c: &ChannelGrid, sites: &[Vec<C64>], out: &mut [Vec<C64>], tau: f64, implicit: bool) {
        let n = c.n_x1();
        let len = self.grid.len();
        let theta = 0.5 * tau;
        for m in 0..c.transverse_len() {
            if !self.layout.is_representative(m * n) {
                continue;
            }
            let kb = c.transverse_modes()[m];
            for &(p, rp) in &self.mirror_pairs {
                let v = self.grid.nodes()[p];
                let kappa = v[1] * kb[0] as f64 + v[2] * kb[1] as f64;
                let op = PairTransport::new(n, c.spacing(), v[0], kappa, self.config.transport);
                for offset in [0, len] {
                    let x: Vec<[C64; 2]> =
                        (0..n).map(|i| [sites[m * n + i][offset + p], sites[m * n + i][offset + rp]]).collect();
                    let y = if implicit { op.solve(theta, &x) } else { op.apply(-theta, &x) };
                    for (i, yi) in y.iter().enumerate() {
                        out[m * n + i][offset + p] = yi[0];
                        out[m * n + i][offset + rp] = yi[1];
                    }
                }
            }
        }
    }

    /// Specular-wall checks of a channel state; `None` on the torus.
    ///
    /// Every collision invariant takes equal values at `v` and `Rv`, so the
    /// wall flux of an invariant moment is the sum of the two pair fluxes.
    pub fn wall_report(&self, state: &SpectralState) -> Option<WallReport> {
        let Layout::Channel(c) = &self.layout else {
            return None;
        };
        let n = c.n_x1();
        let len = self.grid.len();
        let mut report = WallReport::default();
        let mut scale: f64 = 0.0;
        for m in 0..c.transverse_len() {
            if !self.layout.is_representative(m * n) {
                continue;
            }
            let kb = c.transverse_modes()[m];
            for &(p, rp) in &self.mirror_pairs {
                let v = self.grid.nodes()[p];
                let kappa = v[1] * kb[0] as f64 + v[2] * kb[1] as f64;
                let op = PairTransport::new(n, c.spacing(), v[0], kappa, self.config.transport);
                report.mirror_defect = report.mirror_defect.max(op.mirror_defect());
                for offset in [0, len] {
                    let first = [state.sites[m * n][offset + p], state.sites[m * n][offset + rp]];
                    let last = [state.sites[m * n + n - 1][offset + p], state.sites[m * n + n - 1][offset + rp]];
                    for f in op.wall_fluxes(first, last) {
                        scale = scale.max(f[0].norm()).max(f[1].norm());
                        report.flux_balance = report.flux_balance.max((f[0] + f[1]).norm());
                    }
                }
            }
        }
        if scale > 0.0 {
            report.flux_balance /= scale;
        }
        Some(report)
    }

    /// Field source `s E.v mu^{1/2}` (when `with_source`) plus, for full runs,
    /// the drift `s E.Dw^T f` convolved over sites, on representative sites.
    /// Entries of non-representative sites are left empty.
    pub fn field_forcing(&self, sites: &[Vec<C64>], field: &FieldState, with_source: bool) -> Vec<Vec<C64>> {
        let len = self.grid.len();
        let axes = self.layout.active_axes();
        let full = self.config.nonlinearity == Nonlinearity::Full;
        let stencil = self.tensors.weighted_gradient();
        // Dw^T_axis f for every site, species and active axis.
        let transposed: Vec<Vec<Vec<C64>>> = if full {
            sites
                .iter()
                .map(|f| {
                    axes.iter()
                        .map(|&a| {
                            let mut out = vec![ZERO; 2 * len];
                            let (lo, hi) = out.split_at_mut(len);
                            stencil.apply_transpose_add(a, &f[..len], lo);
                            stencil.apply_transpose_add(a, &f[len..], hi);
                            out
                        })
                        .collect()
                })
                .collect()
        } else {
            Vec::new()
        };
        let mut out = vec![Vec::new(); sites.len()];
        for &t in &self.reps {
            let mut acc = vec![ZERO; 2 * len];
            let e = field.field[t];
            if with_source {
                for (q, (v, &sm)) in self.grid.nodes().iter().zip(self.grid.sqrt_mu()).enumerate() {
                    let ev = (e[0] * v[0] + e[1] * v[1] + e[2] * v[2]) * sm;
                    acc[q] += ev;
                    acc[len + q] -= ev;
                }
            }
            if full && !(self.config.dealias && self.layout.dealiased_out(t)) {
                for &(p, q) in &self.pairs[t] {
                    for (ai, &a) in axes.iter().enumerate() {
                        let ep = field.field[p][a];
                        if ep == ZERO {
                            continue;
                        }
                        let tq = &transposed[q][ai];
                        for x in 0..len {
                            acc[x] += ep * tq[x];
                            acc[len + x] -= ep * tq[len + x];
                        }
                    }
                }
            }
            out[t] = acc;
        }
        out
    }
}
