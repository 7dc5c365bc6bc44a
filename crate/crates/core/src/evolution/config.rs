//! Run configuration of the time integrator.

use crate::collision::{SplitParams, WeightParams};
use crate::error::{invalid, Result};
use serde::{Deserialize, Serialize};

/// Spatial domain and its truncation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeometryConfig {
    /// Periodic `[-pi, pi]^dim` with modes `|k_i| <= k_max`.
    Torus { dim: usize, k_max: usize },
    /// `[-1, 1] x T^2` with `n_x1` cells and transverse modes `|kbar_i| <= kbar_max`.
    Channel { n_x1: usize, kbar_max: usize },
}

/// Whether the quadratic terms (field drift and `Gamma`) are evolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Nonlinearity {
    Full,
    Linearized,
}

/// Flux of the `x1` transport in the channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransportScheme {
    /// Skew-symmetric centered fluxes; keeps the combined kinetic and field
    /// energy exactly balanced.
    Centered,
    /// First-order upwind fluxes.
    Upwind,
}

/// Initial perturbation before the conservation-law normalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialCondition {
    Zero,
    /// `amplitude * cos(k.x) * profile(v)` on the torus; on the channel
    /// `amplitude * cos(pi m x1) * cos(kbar.xbar) * profile(v)` with
    /// `wavenumber = [m, kbar_1, kbar_2]`.
    Cosine { amplitude: f64, wavenumber: [i64; 3] },
    /// Random Hermite-type coefficients on low modes, reproducible from the seed.
    Random { amplitude: f64, seed: u64, k_init: usize },
}

/// Iteration controls of the inner solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Relative residual of the implicit diffusion solves.
    pub cg_rel: f64,
    pub cg_max_iter: usize,
    /// Relative update size that ends the implicit-midpoint fixed point.
    pub fixed_point: f64,
    pub fixed_point_max_iter: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { cg_rel: 1e-12, cg_max_iter: 2000, fixed_point: 1e-14, fixed_point_max_iter: 60 }
    }
}

/// Everything the integrator needs for one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub geometry: GeometryConfig,
    pub n_per_axis: usize,
    pub v_max: f64,
    pub gamma: f64,
    pub dt: f64,
    pub t_end: f64,
    pub weight: WeightParams,
    pub split: SplitParams,
    pub nonlinearity: Nonlinearity,
    /// Evolve the collision operator.
    pub collisions: bool,
    /// Couple the Poisson field (source and drift).
    pub field_coupling: bool,
    pub transport: TransportScheme,
    /// Apply the 2/3 rule to the quadratic terms.
    pub dealias: bool,
    pub initial: InitialCondition,
    pub tolerances: Tolerances,
    /// Diagnostics are recorded every this many steps.
    pub diag_every: usize,
    /// Record the per-site moment snapshots needed by the residual tables.
    pub record_moments: bool,
}

impl SolverConfig {
    /// Small-data torus defaults: 1D, `k_max = 8`, `n = 16`, `v_max = 6`.
    pub fn torus_default(gamma: f64) -> Self {
        Self {
            geometry: GeometryConfig::Torus { dim: 1, k_max: 8 },
            n_per_axis: 16,
            v_max: 6.0,
            gamma,
            dt: 0.1,
            t_end: 10.0,
            weight: WeightParams::unweighted(),
            split: SplitParams::default(),
            nonlinearity: Nonlinearity::Full,
            collisions: true,
            field_coupling: true,
            transport: TransportScheme::Centered,
            dealias: false,
            initial: InitialCondition::Cosine { amplitude: 1e-3, wavenumber: [1, 0, 0] },
            tolerances: Tolerances::default(),
            diag_every: 1,
            record_moments: false,
        }
    }

    /// Quasi-1D channel defaults: `n_x1 = 16`, `kbar = 0`, `n = 12`.
    pub fn channel_default(gamma: f64) -> Self {
        Self {
            geometry: GeometryConfig::Channel { n_x1: 16, kbar_max: 0 },
            n_per_axis: 12,
            ..Self::torus_default(gamma)
        }
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt - 1e-9).ceil().max(0.0) as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(invalid("dt", format!("must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= self.dt) {
            return Err(invalid("t_end", format!("must be at least dt, got {}", self.t_end)));
        }
        if !(-2.0..=1.0).contains(&self.gamma) {
            return Err(invalid("gamma", format!("must lie in [-2, 1], got {}", self.gamma)));
        }
        WeightParams::new(self.weight.q, self.weight.theta, self.weight.decay)?;
        if self.n_per_axis < 4 || self.n_per_axis % 2 != 0 {
            return Err(invalid("n_per_axis", format!("must be even and at least 4, got {}", self.n_per_axis)));
        }
        if !(self.v_max > 0.0) {
            return Err(invalid("v_max", format!("must be positive, got {}", self.v_max)));
        }
        if self.diag_every == 0 {
            return Err(invalid("diag_every", "must be at least 1"));
        }
        match &self.geometry {
            GeometryConfig::Torus { dim, k_max } => {
                if !(1..=3).contains(dim) {
                    return Err(invalid("dim", format!("must be 1, 2 or 3, got {dim}")));
                }
                if *k_max == 0 {
                    return Err(invalid("k_max", "must be at least 1"));
                }
            }
            GeometryConfig::Channel { n_x1, kbar_max } => {
                if *n_x1 < 4 || n_x1 % 2 != 0 {
                    return Err(invalid("n_x1", format!("must be even and at least 4, got {n_x1}")));
                }
                if *kbar_max > 2 {
                    return Err(invalid("kbar_max", format!("must not exceed 2, got {kbar_max}")));
                }
            }
        }
        match &self.initial {
            InitialCondition::Cosine { amplitude, .. } | InitialCondition::Random { amplitude, .. } => {
                if !amplitude.is_finite() {
                    return Err(invalid("amplitude", "must be finite"));
                }
            }
            InitialCondition::Zero => {}
        }
        Ok(())
    }
}
