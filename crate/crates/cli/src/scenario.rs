//! Scenario files: TOML text with nested sections, validated into a solver
//! configuration. Unknown keys are rejected everywhere.

use crate::CliError;
use serde::{Deserialize, Serialize};
use std::path::Path;
use vpl_core::collision::{SplitParams, WeightParams};
use vpl_core::evolution::{GeometryConfig, InitialCondition, Nonlinearity, SolverConfig, Tolerances, TransportScheme};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Physics {
    pub gamma: f64,
    #[serde(default)]
    pub q: f64,
    /// Defaults to `-gamma` for `gamma < -1` and to 2 otherwise.
    #[serde(default)]
    pub theta: Option<f64>,
    /// Time-decay exponent `N` of the weight.
    #[serde(default = "default_decay")]
    pub decay: f64,
}

fn default_decay() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Discretization {
    pub n_per_axis: usize,
    #[serde(default = "default_v_max")]
    pub v_max: f64,
    pub dt: f64,
    pub t_end: f64,
}

fn default_v_max() -> f64 {
    6.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Model {
    pub nonlinearity: Nonlinearity,
    pub collisions: bool,
    pub field_coupling: bool,
    pub transport: TransportScheme,
    pub dealias: bool,
}

impl Default for Model {
    fn default() -> Self {
        Self {
            nonlinearity: Nonlinearity::Full,
            collisions: true,
            field_coupling: true,
            transport: TransportScheme::Centered,
            dealias: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Diagnostics {
    /// Record functionals every this many steps.
    pub every: usize,
    pub record_moments: bool,
    /// Rate inside the `e^{delta t}` factors of the time-folded functionals.
    pub delta: f64,
    /// Decay-fit window; defaults to `[0.2 t_end, t_end]`.
    pub fit_window: Option<[f64; 2]>,
    /// Write a checkpoint every this many steps (0 disables intermediate ones).
    pub checkpoint_every: usize,
}

impl Default for Diagnostics {
    fn default() -> Self {
        Self { every: 1, record_moments: false, delta: 0.0, fit_window: None, checkpoint_every: 0 }
    }
}

/// Invariant checks whose outcome sets the exit status of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Checks {
    /// Largest admissible relative drift of any conservation law.
    pub conservation: f64,
    /// Require a positive fitted decay rate.
    pub decay: bool,
    pub min_r_squared: f64,
    /// Require weighted functionals to dominate the unweighted ones.
    pub weighted_ordering: bool,
    pub poisson: f64,
}

impl Default for Checks {
    fn default() -> Self {
        Self { conservation: 1e-6, decay: false, min_r_squared: 0.98, weighted_ordering: true, poisson: 1e-12 }
    }
}

/// Parameters of the `sweep` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Sweep {
    /// Amplitudes of the initial data, one run each.
    pub amplitudes: Vec<f64>,
    /// Also run the two-point refinement study `(dt, n) -> (dt/2, 2n)`.
    pub refinement: bool,
}

impl Default for Sweep {
    fn default() -> Self {
        Self { amplitudes: Vec::new(), refinement: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub output_dir: Option<String>,
    pub geometry: GeometryConfig,
    pub physics: Physics,
    pub discretization: Discretization,
    #[serde(default)]
    pub model: Model,
    #[serde(default)]
    pub split: SplitParams,
    pub initial: InitialCondition,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub diagnostics: Diagnostics,
    #[serde(default)]
    pub checks: Checks,
    #[serde(default)]
    pub sweep: Sweep,
}

/// Names accepted by [`Scenario::preset`].
pub const PRESETS: [&str; 7] = [
    "torus-gamma-neg2-smalldata",
    "torus-gamma-neg1-smalldata",
    "torus-gamma0-smalldata",
    "torus-linearized-single-mode",
    "channel-quasi1d",
    "torus-amplitude-sweep",
    "torus-refinement",
];

impl Scenario {
    fn torus(name: &str, gamma: f64, q: f64) -> Self {
        Self {
            name: name.to_string(),
            output_dir: None,
            geometry: GeometryConfig::Torus { dim: 1, k_max: 8 },
            physics: Physics { gamma, q, theta: None, decay: 1.0 },
            discretization: Discretization { n_per_axis: 16, v_max: 6.0, dt: 0.1, t_end: 20.0 },
            model: Model::default(),
            split: SplitParams::default(),
            initial: InitialCondition::Cosine { amplitude: 1e-3, wavenumber: [1, 0, 0] },
            tolerances: Tolerances::default(),
            diagnostics: Diagnostics::default(),
            checks: Checks { decay: true, ..Checks::default() },
            sweep: Sweep::default(),
        }
    }

    /// Built-in scenarios covering the three analytical regimes plus the
    /// linearized, sweep and refinement studies.
    pub fn preset(name: &str) -> Result<Self, CliError> {
        let s = match name {
            "torus-gamma-neg2-smalldata" => Self::torus(name, -2.0, 0.05),
            "torus-gamma-neg1-smalldata" => Self::torus(name, -1.0, 0.0),
            "torus-gamma0-smalldata" => Self::torus(name, 0.0, 0.0),
            "torus-linearized-single-mode" => {
                let mut s = Self::torus(name, -1.0, 0.0);
                s.geometry = GeometryConfig::Torus { dim: 1, k_max: 1 };
                s.discretization = Discretization { n_per_axis: 8, v_max: 6.0, dt: 0.1, t_end: 60.0 };
                s.model.nonlinearity = Nonlinearity::Linearized;
                s
            }
            "channel-quasi1d" => {
                let mut s = Self::torus(name, -1.0, 0.0);
                s.geometry = GeometryConfig::Channel { n_x1: 16, kbar_max: 0 };
                s.discretization.n_per_axis = 12;
                s.checks.conservation = 1e-5;
                s
            }
            "torus-amplitude-sweep" => {
                let mut s = Self::torus(name, -1.0, 0.0);
                s.discretization.n_per_axis = 12;
                s.discretization.t_end = 10.0;
                s.sweep.amplitudes = vec![1e-3, 1e-2, 1e-1, 1.0];
                s
            }
            "torus-refinement" => {
                let mut s = Self::torus(name, -1.0, 0.0);
                s.discretization = Discretization { n_per_axis: 8, v_max: 6.0, dt: 0.1, t_end: 2.0 };
                s.diagnostics.record_moments = true;
                s.checks.decay = false;
                s.sweep.refinement = true;
                s
            }
            other => {
                return Err(CliError::Usage(format!("unknown preset `{other}`; known presets: {}", PRESETS.join(", "))))
            }
        };
        Ok(s)
    }

    /// Parses and validates scenario text.
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let s: Scenario = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        s.solver_config()?;
        Ok(s)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("scenario serializes")
    }

    /// Resolved weight parameters.
    pub fn weight(&self) -> Result<WeightParams, CliError> {
        let p = &self.physics;
        let theta = p.theta.unwrap_or(if p.gamma < -1.0 { -p.gamma } else { 2.0 });
        WeightParams::new(p.q, theta, p.decay).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Fully validated solver configuration.
    pub fn solver_config(&self) -> Result<SolverConfig, CliError> {
        let cfg = SolverConfig {
            geometry: self.geometry.clone(),
            n_per_axis: self.discretization.n_per_axis,
            v_max: self.discretization.v_max,
            gamma: self.physics.gamma,
            dt: self.discretization.dt,
            t_end: self.discretization.t_end,
            weight: self.weight()?,
            split: self.split,
            nonlinearity: self.model.nonlinearity,
            collisions: self.model.collisions,
            field_coupling: self.model.field_coupling,
            transport: self.model.transport,
            dealias: self.model.dealias,
            initial: self.initial.clone(),
            tolerances: self.tolerances,
            diag_every: self.diagnostics.every,
            record_moments: self.diagnostics.record_moments,
        };
        cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
        if let Some([a, b]) = self.diagnostics.fit_window {
            if !(0.0 <= a && a < b && b <= cfg.t_end) {
                return Err(CliError::Config(format!("diagnostics.fit_window: must satisfy 0 <= t0 < t1 <= t_end, got [{a}, {b}]")));
            }
        }
        if self.sweep.amplitudes.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
            return Err(CliError::Config("sweep.amplitudes: must be finite and nonnegative".into()));
        }
        Ok(cfg)
    }

    pub fn fit_window(&self) -> (f64, f64) {
        match self.diagnostics.fit_window {
            Some([a, b]) => (a, b),
            None => vpl_core::diagnostics::default_window(self.discretization.t_end),
        }
    }

    /// Replaces the seed of random initial data.
    pub fn with_seed(mut self, seed: u64) -> Self {
        if let InitialCondition::Random { seed: s, .. } = &mut self.initial {
            *s = seed;
        }
        self
    }

    /// Replaces the amplitude of the initial data.
    pub fn with_amplitude(mut self, amp: f64) -> Self {
        match &mut self.initial {
            InitialCondition::Cosine { amplitude, .. } | InitialCondition::Random { amplitude, .. } => *amplitude = amp,
            InitialCondition::Zero => {}
        }
        self
    }
}

/// Reads a scenario file.
pub fn parse_config(path: &Path) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    Scenario::from_toml(&text).map_err(|e| match e {
        CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}
