//! Initial data, the conservation-law normalization and moment snapshots.

use super::{InitialCondition, Layout, Nonlinearity, Solver, SpectralState};
use crate::error::{invalid, Result};
use crate::macroscopic::{MomentSnapshot, SourceMoments};
use crate::velocity::{inner, VelocityGrid, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Velocity profiles of the cosine family: each species mixes density,
/// velocity, temperature and a shear moment, with opposite charge content.
fn cosine_profiles(grid: &VelocityGrid) -> [Vec<C64>; 2] {
    let r2 = |v: [f64; 3]| v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
    [
        grid.times_sqrt_mu(|v| 1.0 + v[0] + 0.5 * (r2(v) - 3.0) + 0.5 * v[0] * v[1]),
        grid.times_sqrt_mu(|v| -1.0 + 0.5 * v[0] + 0.5 * (r2(v) - 3.0) - 0.5 * v[0] * v[1]),
    ]
}

/// Hermite-type building blocks of the random family.
fn random_basis(grid: &VelocityGrid) -> Vec<Vec<C64>> {
    let r2 = |v: [f64; 3]| v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
    vec![
        grid.times_sqrt_mu(|_| 1.0),
        grid.times_sqrt_mu(|v| v[0]),
        grid.times_sqrt_mu(|v| v[1]),
        grid.times_sqrt_mu(|v| v[2]),
        grid.times_sqrt_mu(|v| r2(v) - 3.0),
        grid.times_sqrt_mu(|v| v[0] * v[1]),
        grid.times_sqrt_mu(|v| v[0] * v[0] - 1.0),
        grid.times_sqrt_mu(|v| (r2(v) - 5.0) * v[0]),
    ]
}

impl Solver {
    /// Initial data after the conservation-law normalization.
    pub fn initial_state(&self) -> Result<SpectralState> {
        let mut state = self.raw_initial_state()?;
        self.normalize(&mut state)?;
        Ok(state)
    }

    /// Initial data exactly as the configured family prescribes.
    pub fn raw_initial_state(&self) -> Result<SpectralState> {
        let mut state = self.zero_state();
        let len = self.grid.len();
        match &self.config.initial {
            InitialCondition::Zero => {}
            InitialCondition::Cosine { amplitude, wavenumber } => {
                let prof = cosine_profiles(&self.grid);
                let write = |site: &mut Vec<C64>, scale: f64| {
                    for q in 0..len {
                        site[q] += prof[0][q] * scale;
                        site[len + q] += prof[1][q] * scale;
                    }
                };
                match &self.layout {
                    Layout::Torus(m) => {
                        let k = *wavenumber;
                        let plus = m.index_of(k).ok_or_else(|| invalid("wavenumber", "mode not retained"))?;
                        let minus = m.negated(plus);
                        if plus == minus {
                            write(&mut state.sites[plus], *amplitude);
                        } else {
                            write(&mut state.sites[plus], 0.5 * amplitude);
                            write(&mut state.sites[minus], 0.5 * amplitude);
                        }
                    }
                    Layout::Channel(c) => {
                        let [m, k1, k2] = *wavenumber;
                        let plus = c.transverse_index([k1, k2]).ok_or_else(|| invalid("wavenumber", "mode not retained"))?;
                        let minus = c.transverse_index([-k1, -k2]).expect("symmetric");
                        let share = if plus == minus { 1.0 } else { 0.5 };
                        for (i, &x) in c.nodes().iter().enumerate() {
                            let profile = amplitude * (std::f64::consts::PI * m as f64 * x).cos() * share;
                            write(&mut state.sites[c.site(i, plus)], profile);
                            if plus != minus {
                                write(&mut state.sites[c.site(i, minus)], profile);
                            }
                        }
                    }
                }
            }
            InitialCondition::Random { amplitude, seed, k_init } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let basis = random_basis(&self.grid);
                let mut draw = |real_only: bool, scale: f64| -> Vec<C64> {
                    let mut f = vec![ZERO; 2 * len];
                    for species in 0..2 {
                        for b in &basis {
                            let re: f64 = rng.random_range(-1.0..1.0);
                            let im: f64 = if real_only { 0.0 } else { rng.random_range(-1.0..1.0) };
                            let c = C64::new(re, im) * scale;
                            for q in 0..len {
                                f[species * len + q] += c * b[q];
                            }
                        }
                    }
                    f
                };
                let k_init = *k_init as i64;
                match &self.layout {
                    Layout::Torus(m) => {
                        for &s in &self.reps.clone() {
                            let k = m.modes()[s];
                            if k.iter().any(|x| x.abs() > k_init) {
                                continue;
                            }
                            let k2 = m.k_squared(s);
                            let real_only = m.negated(s) == s;
                            state.sites[s] = draw(real_only, amplitude / (1.0 + k2));
                        }
                    }
                    Layout::Channel(c) => {
                        let n = c.n_x1();
                        for mode in 0..c.transverse_len() {
                            let kb = c.transverse_modes()[mode];
                            if !self.layout.is_representative(mode * n) || kb.iter().any(|x| x.abs() > k_init) {
                                continue;
                            }
                            let real_only = c.transverse_index([-kb[0], -kb[1]]) == Some(mode);
                            for wave in 0..=k_init {
                                let scale = amplitude / (1.0 + (wave * wave + kb[0] * kb[0] + kb[1] * kb[1]) as f64);
                                let f = draw(real_only, scale);
                                for (i, &x) in c.nodes().iter().enumerate() {
                                    let shape = (std::f64::consts::FRAC_PI_2 * wave as f64 * (x + 1.0)).cos();
                                    let site = &mut state.sites[c.site(i, mode)];
                                    for (a, b) in site.iter_mut().zip(&f) {
                                        *a += b * shape;
                                    }
                                }
                            }
                        }
                    }
                }
                self.fill_partners(&mut state.sites);
            }
        }
        state.field = self.solve_field(&state.sites)?;
        Ok(state)
    }

    /// Enforces the conservation constraints at `t = 0`: zero mass per
    /// species, zero momentum (transverse only on the channel) and zero
    /// combined kinetic plus field energy.
    pub fn normalize(&self, state: &mut SpectralState) -> Result<()> {
        let w = self.grid.weight();
        let basis = self.invariant_basis();
        // Basis order: two masses, three momenta, energy.
        let constrained: Vec<usize> = match self.layout {
            Layout::Torus(_) => (0..basis.len()).collect(),
            Layout::Channel(_) => (0..basis.len()).filter(|&i| i != 2).collect(),
        };
        let mean = self.layout.mean_sites();
        let count = mean.len() as f64;
        for &i in &constrained {
            let e = &basis[i];
            let c: C64 = mean.iter().map(|&s| inner(w, &state.sites[s], &e.values)).sum::<C64>() / count;
            for &s in &mean {
                for (x, b) in state.sites[s].iter_mut().zip(&e.values) {
                    *x -= c * b;
                }
            }
        }
        state.field = self.solve_field(&state.sites)?;
        let energy = basis.last().expect("energy element");
        let sum_sq = self.grid.times_sqrt_mu(|v| v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
        let len = self.grid.len();
        let per_unit = inner(w, &energy.values[..len], &sum_sq).re + inner(w, &energy.values[len..], &sum_sq).re;
        let moments = self.global_moments(state);
        let kappa = -(moments.kinetic + moments.field) / per_unit;
        for &s in &mean {
            for (x, b) in state.sites[s].iter_mut().zip(&energy.values) {
                *x += b * kappa;
            }
        }
        Ok(())
    }

    /// Per-site inputs of the moment-system residuals, on representative sites.
    pub fn moment_snapshots(&self, state: &SpectralState) -> Result<Vec<MomentSnapshot>> {
        let len = self.grid.len();
        let is_torus = matches!(self.layout, Layout::Torus(_));
        let (nonlinear, lf) = if is_torus {
            let nonlinear = if self.config.nonlinearity == Nonlinearity::Full {
                let mut g = self.field_forcing(&state.sites, &state.field, false);
                if self.config.collisions {
                    let gamma = self.gamma_convolution(&state.sites);
                    for &s in &self.reps {
                        g[s].iter_mut().zip(&gamma[s]).for_each(|(a, b)| *a += b);
                    }
                }
                Some(g)
            } else {
                None
            };
            let lf = self.config.collisions.then(|| self.apply_linearized(&state.sites));
            (nonlinear, lf)
        } else {
            (None, None)
        };
        let mut out = Vec::with_capacity(self.reps.len());
        for &s in &self.reps {
            let f = super::as_pair(&state.sites[s]);
            let coeffs = self.weights.coefficients(&f);
            let mut micro = f.clone();
            micro.axpy(C64::new(-1.0, 0.0), &self.weights.reconstruct(&coeffs));
            let functionals = self.weights.functionals_of_micro(&micro);
            let sources = if is_torus {
                let k = self.layout.wavevector(s);
                let zeros = super::as_pair(&vec![ZERO; 2 * len]);
                let g = nonlinear.as_ref().map_or_else(|| zeros.clone(), |g| super::as_pair(&g[s]));
                let lfs = lf.as_ref().map_or_else(|| zeros.clone(), |l| super::as_pair(&l[s]));
                let mut h = lfs.clone();
                for species in 0..2 {
                    for (q, v) in self.grid.nodes().iter().enumerate() {
                        let vk = v[0] * k[0] + v[1] * k[1] + v[2] * k[2];
                        h.values[species * len + q] -= C64::new(0.0, vk) * micro.values[species * len + q];
                    }
                }
                SourceMoments::from_fields(&self.weights, &g, &h, &lfs)
            } else {
                SourceMoments::default()
            };
            out.push(MomentSnapshot { coeffs, functionals, field: state.field.field[s], sources });
        }
        Ok(out)
    }
}
