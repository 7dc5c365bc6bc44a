//! Time integration of the perturbation system in both geometries.
//!
//! One step is the Strang composition `V(dt/2) C(dt) V(dt/2)`:
//!
//! * `V` evolves transport, the field source `+-E.v mu^{1/2}` and the field
//!   drift with the implicit midpoint rule (transport inverted exactly, the
//!   field terms by fixed-point iteration). The rule preserves the combined
//!   kinetic and field energy of the discrete system.
//! * `C` evolves `L f + Gamma(f, f)` with the two-stage ARS IMEX scheme, the
//!   stiff diffusion being implicit. The increment is then stripped of its
//!   collision-invariant components so mass, momentum and energy are exact.

mod collide;
mod config;
mod init;
mod layout;
mod vlasov;

pub use config::{GeometryConfig, InitialCondition, Nonlinearity, SolverConfig, Tolerances, TransportScheme};
pub use layout::Layout;
pub use vlasov::WallReport;

use crate::collision::{CollisionTensors, DiffusionMatrix};
use crate::diagnostics::{DiagnosticsSeries, FunctionalRecord};
use crate::error::{Error, Result};
use crate::geometry::{ChannelGrid, FieldState, TorusModes};
use crate::macroscopic::{invariant_basis, MacroCoeffs, MomentSnapshot, MomentWeights};
use crate::velocity::{VelocityField, VelocityGrid, C64};
use serde::{Deserialize, Serialize};

/// Perturbation at one instant: one velocity pair per site plus the field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralState {
    pub t: f64,
    /// Site-ordered `(f_+, f_-)` values, each `2 * grid.len()` long.
    pub sites: Vec<Vec<C64>>,
    pub field: FieldState,
}

impl SpectralState {
    pub fn pair(&self, site: usize) -> VelocityField {
        VelocityField { species: crate::velocity::Species::Pair, values: self.sites[site].clone() }
    }

    pub fn is_finite(&self) -> bool {
        self.sites.iter().all(|s| s.iter().all(|x| x.re.is_finite() && x.im.is_finite()))
    }

    pub fn max_abs(&self) -> f64 {
        self.sites.iter().flat_map(|s| s.iter()).map(|x| x.norm()).fold(0.0, f64::max)
    }
}

/// Global conserved quantities (spatial averages).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GlobalMoments {
    pub mass_plus: f64,
    pub mass_minus: f64,
    pub momentum: [f64; 3],
    /// `int (f_+ + f_-) |v|^2 mu^{1/2}`.
    pub kinetic: f64,
    /// Average of `|E|^2`.
    pub field: f64,
}

impl GlobalMoments {
    pub fn energy(&self) -> f64 {
        self.kinetic + self.field
    }
}

/// Result of a completed run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub series: DiagnosticsSeries,
    pub final_state: SpectralState,
    /// Per recorded frame, one snapshot per representative site.
    pub moment_frames: Vec<Vec<MomentSnapshot>>,
    pub initial_state: SpectralState,
}

/// A run stopped by a numerical failure, with the last accepted state.
#[derive(Debug, Clone)]
pub struct Aborted {
    pub error: Error,
    pub last_good: Box<SpectralState>,
    pub series: DiagnosticsSeries,
}

impl std::fmt::Display for Aborted {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "run aborted at t = {}: {}", self.last_good.t, self.error)
    }
}

impl std::error::Error for Aborted {}

/// Precomputed operators of one configuration.
#[derive(Debug, Clone)]
pub struct Solver {
    pub config: SolverConfig,
    pub grid: VelocityGrid,
    pub tensors: CollisionTensors,
    pub layout: Layout,
    pub weights: MomentWeights,
    diffusion: Option<DiffusionMatrix>,
    basis: Vec<VelocityField>,
    reps: Vec<usize>,
    pairs: Vec<Vec<(usize, usize)>>,
    /// `(v, Rv)` index pairs with `v_1 > 0`.
    mirror_pairs: Vec<(usize, usize)>,
}

impl Solver {
    pub fn new(config: SolverConfig) -> Result<Self> {
        config.validate()?;
        let grid = VelocityGrid::new(config.n_per_axis, config.v_max)?;
        let tensors = CollisionTensors::build(&grid, config.gamma, config.split)?;
        let layout = match &config.geometry {
            GeometryConfig::Torus { dim, k_max } => Layout::Torus(TorusModes::new(*dim, *k_max)?),
            GeometryConfig::Channel { n_x1, kbar_max } => Layout::Channel(ChannelGrid::new(*n_x1, *kbar_max)?),
        };
        let diffusion = config.collisions.then(|| DiffusionMatrix::assemble(&tensors, &grid));
        let weights = MomentWeights::new(&grid);
        let basis = invariant_basis(&grid);
        let reps = layout.representatives();
        let pairs = (0..layout.sites()).map(|s| layout.convolution_pairs(s)).collect();
        let mirror_pairs = (0..grid.len())
            .filter(|&p| grid.nodes()[p][0] > 0.0)
            .map(|p| (p, grid.reflect(p, 0)))
            .collect();
        Ok(Self { config, grid, tensors, layout, weights, diffusion, basis, reps, pairs, mirror_pairs })
    }

    pub fn is_channel(&self) -> bool {
        matches!(self.layout, Layout::Channel(_))
    }

    pub fn representatives(&self) -> &[usize] {
        &self.reps
    }

    pub fn sites(&self) -> usize {
        self.layout.sites()
    }

    /// Orthonormal discrete basis of the collision invariants.
    pub fn invariant_basis(&self) -> &[VelocityField] {
        &self.basis
    }

    fn nodes(&self) -> usize {
        self.grid.len()
    }

    /// Overwrites every non-representative site with the conjugate of its partner.
    pub(crate) fn fill_partners(&self, sites: &mut [Vec<C64>]) {
        for s in 0..sites.len() {
            if !self.layout.is_representative(s) {
                let p = self.layout.partner(s);
                let conj: Vec<C64> = sites[p].iter().map(|x| x.conj()).collect();
                sites[s] = conj;
            }
        }
    }

    /// Charge `a_+ - a_-` per site.
    pub fn charge(&self, sites: &[Vec<C64>]) -> Vec<C64> {
        let len = self.nodes();
        let sm = self.grid.sqrt_mu();
        let w = self.grid.weight();
        sites
            .iter()
            .map(|f| {
                let mut acc = C64::new(0.0, 0.0);
                for q in 0..len {
                    acc += (f[q] - f[len + q]) * sm[q];
                }
                acc * w
            })
            .collect()
    }

    pub fn solve_field(&self, sites: &[Vec<C64>]) -> Result<FieldState> {
        if self.config.field_coupling {
            self.layout.poisson(&self.charge(sites))
        } else {
            let n = sites.len();
            Ok(FieldState { phi: vec![C64::new(0.0, 0.0); n], field: vec![[C64::new(0.0, 0.0); 3]; n] })
        }
    }

    /// Macroscopic coefficients of every site.
    pub fn macro_coeffs(&self, state: &SpectralState) -> Vec<MacroCoeffs> {
        state.sites.iter().map(|f| self.weights.coefficients(&as_pair(f))).collect()
    }

    /// Spatially averaged conserved quantities.
    pub fn global_moments(&self, state: &SpectralState) -> GlobalMoments {
        let mean = self.layout.mean_sites();
        let count = mean.len() as f64;
        let len = self.nodes();
        let w = self.grid.weight();
        let mut g = GlobalMoments::default();
        for &s in &mean {
            let f = &state.sites[s];
            for (q, (v, &sm)) in self.grid.nodes().iter().zip(self.grid.sqrt_mu()).enumerate() {
                let (p, m) = (f[q].re, f[len + q].re);
                g.mass_plus += p * sm;
                g.mass_minus += m * sm;
                for a in 0..3 {
                    g.momentum[a] += (p + m) * v[a] * sm;
                }
                g.kinetic += (p + m) * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]) * sm;
            }
        }
        let scale = w / count;
        g.mass_plus *= scale;
        g.mass_minus *= scale;
        g.momentum.iter_mut().for_each(|x| *x *= scale);
        g.kinetic *= scale;
        g.field = self.layout.field_energy(&state.field);
        g
    }

    /// One Strang step of length `dt`.
    pub fn step(&self, state: &mut SpectralState) -> Result<()> {
        let dt = self.config.dt;
        self.vlasov_step(state, 0.5 * dt)?;
        if self.config.collisions {
            self.collision_step(state, dt)?;
        }
        self.vlasov_step(state, 0.5 * dt)?;
        state.t += dt;
        if !state.is_finite() {
            return Err(Error::NonFinite { time: state.t });
        }
        Ok(())
    }

    /// Integrates from the normalized initial data to `t_end`.
    pub fn run(&self) -> std::result::Result<RunOutput, Aborted> {
        let initial = self.initial_state().map_err(|e| Aborted {
            error: e,
            last_good: Box::new(self.zero_state()),
            series: DiagnosticsSeries::new(self.is_channel()),
        })?;
        self.run_from(initial, |_, _| Ok(()))
    }

    /// Integrates an explicit initial state, calling `observer` after every step.
    pub fn run_from(
        &self,
        initial: SpectralState,
        mut observer: impl FnMut(usize, &SpectralState) -> Result<()>,
    ) -> std::result::Result<RunOutput, Aborted> {
        let mut series = DiagnosticsSeries::new(self.is_channel());
        let mut frames = Vec::new();
        let mut state = initial.clone();
        let abort = |error: Error, last: &SpectralState, series: &DiagnosticsSeries| Aborted {
            error,
            last_good: Box::new(last.clone()),
            series: series.clone(),
        };
        let record = |state: &SpectralState, series: &mut DiagnosticsSeries, frames: &mut Vec<Vec<MomentSnapshot>>| {
            series.push(FunctionalRecord::measure(self, state)?);
            if self.config.record_moments {
                frames.push(self.moment_snapshots(state)?);
            }
            Ok::<(), Error>(())
        };
        if let Err(e) = record(&state, &mut series, &mut frames) {
            return Err(abort(e, &state, &series));
        }
        let steps = self.config.steps();
        for n in 1..=steps {
            let last_good = state.clone();
            if let Err(e) = self.step(&mut state) {
                return Err(abort(e, &last_good, &series));
            }
            if n % self.config.diag_every == 0 || n == steps {
                if let Err(e) = record(&state, &mut series, &mut frames) {
                    return Err(abort(e, &last_good, &series));
                }
            }
            if let Err(e) = observer(n, &state) {
                return Err(abort(e, &state, &series));
            }
        }
        Ok(RunOutput { series, final_state: state, moment_frames: frames, initial_state: initial })
    }

    pub fn zero_state(&self) -> SpectralState {
        let n = self.sites();
        SpectralState {
            t: 0.0,
            sites: vec![vec![C64::new(0.0, 0.0); 2 * self.nodes()]; n],
            field: FieldState { phi: vec![C64::new(0.0, 0.0); n], field: vec![[C64::new(0.0, 0.0); 3]; n] },
        }
    }
}

pub(crate) fn as_pair(values: &[C64]) -> VelocityField {
    VelocityField { species: crate::velocity::Species::Pair, values: values.to_vec() }
}
