//! Amplitude sweeps for the empirical smallness threshold and the two-point
//! refinement study of the moment-system residuals.

use crate::runner::{run_scenario, save_summary};
use crate::scenario::Scenario;
use crate::CliError;
use serde::{Deserialize, Serialize};
use std::path::Path;
use vpl_core::diagnostics::Functional;
use vpl_core::evolution::{Layout, Solver};
use vpl_core::macroscopic::{moment_residuals, ModeDerivative, RESIDUAL_EQUATIONS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub amplitude: f64,
    pub passed: bool,
    pub aborted: bool,
    pub delta_hat: Option<f64>,
    pub r_squared: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub scenario: String,
    pub entries: Vec<SweepEntry>,
    /// Largest amplitude below which every swept run passed its checks.
    pub threshold: Option<f64>,
}

/// One run per amplitude in ascending order, each in `out/amplitude_<i>`.
pub fn amplitude_sweep(scenario: &Scenario, out: Option<&Path>) -> Result<SweepReport, CliError> {
    let mut amplitudes = scenario.sweep.amplitudes.clone();
    if amplitudes.is_empty() {
        return Err(CliError::Config("sweep.amplitudes: at least one amplitude is required".into()));
    }
    amplitudes.sort_by(f64::total_cmp);
    let mut entries = Vec::new();
    for (i, &amp) in amplitudes.iter().enumerate() {
        let dir = out.map(|d| d.join(format!("amplitude_{i:02}")));
        let run = run_scenario(&scenario.clone().with_amplitude(amp), dir.as_deref());
        let entry = match run {
            Ok(art) => {
                let fit = art.summary.fits.iter().find(|f| f.functional_id == Functional::Total.id());
                SweepEntry {
                    amplitude: amp,
                    passed: art.summary.passed,
                    aborted: false,
                    delta_hat: fit.map(|f| f.delta_hat),
                    r_squared: fit.map(|f| f.r_squared),
                }
            }
            Err(CliError::Aborted(_)) => {
                SweepEntry { amplitude: amp, passed: false, aborted: true, delta_hat: None, r_squared: None }
            }
            Err(e) => return Err(e),
        };
        entries.push(entry);
    }
    let threshold = entries.iter().take_while(|e| e.passed).last().map(|e| e.amplitude);
    let report = SweepReport { scenario: scenario.name.clone(), entries, threshold };
    if let Some(dir) = out {
        save_summary(&dir.join("sweep.json"), &report)?;
    }
    Ok(report)
}

/// Residual levels of one resolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualLevel {
    pub dt: f64,
    pub n_per_axis: usize,
    pub h: f64,
    /// `(equation, max residual, residual / (dt^2 + h^2))`.
    pub residuals: Vec<(String, f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementReport {
    pub coarse: ResidualLevel,
    pub fine: ResidualLevel,
    /// Per equation: fine constant over coarse constant.
    pub constant_ratios: Vec<(String, f64)>,
    /// Largest admissible constant ratio.
    pub tolerance: f64,
    pub passed: bool,
}

/// Admissible growth of the residual constant from the coarse to the fine level.
pub const REFINEMENT_TOLERANCE: f64 = 1.5;

fn residual_level(scenario: &Scenario) -> Result<ResidualLevel, CliError> {
    let mut config = scenario.solver_config()?;
    config.record_moments = true;
    config.diag_every = 1;
    let solver = Solver::new(config.clone()).map_err(|e| CliError::Config(e.to_string()))?;
    let Layout::Torus(modes) = &solver.layout else {
        return Err(CliError::Usage("the refinement study needs torus geometry".into()));
    };
    let output = solver.run().map_err(|e| CliError::Aborted(e.to_string()))?;
    let wavevectors: Vec<[f64; 3]> = solver.representatives().iter().map(|&s| modes.wavevector(s)).collect();
    let rows = moment_residuals(&output.moment_frames, 0.0, config.dt, &ModeDerivative { wavevectors: &wavevectors })
        .map_err(|e| CliError::Aborted(e.to_string()))?;
    let h = solver.grid.spacing();
    let scale = config.dt * config.dt + h * h;
    let residuals = RESIDUAL_EQUATIONS
        .iter()
        .map(|&eq| {
            let r = rows.iter().filter(|row| row.equation == eq).map(|row| row.residual).fold(0.0, f64::max);
            (eq.to_string(), r, r / scale)
        })
        .collect();
    Ok(ResidualLevel { dt: config.dt, n_per_axis: config.n_per_axis, h, residuals })
}

/// Runs `(dt, n)` and `(dt/2, 2n)` and compares the residual constants.
///
/// Equations whose residual sits at rounding level on both grids (the
/// Poisson identity holds exactly) are compared only when above `1e-13`.
pub fn refinement_study(scenario: &Scenario, out: Option<&Path>) -> Result<RefinementReport, CliError> {
    let coarse = residual_level(scenario)?;
    let mut fine_scenario = scenario.clone();
    fine_scenario.discretization.dt *= 0.5;
    fine_scenario.discretization.n_per_axis *= 2;
    let fine = residual_level(&fine_scenario)?;
    let constant_ratios: Vec<(String, f64)> = coarse
        .residuals
        .iter()
        .zip(&fine.residuals)
        .map(|(c, f)| {
            let ratio = if c.1 < 1e-13 && f.1 < 1e-13 { 0.0 } else { f.2 / c.2 };
            (c.0.clone(), ratio)
        })
        .collect();
    let passed = constant_ratios.iter().all(|(_, r)| *r <= REFINEMENT_TOLERANCE);
    let report = RefinementReport { coarse, fine, constant_ratios, tolerance: REFINEMENT_TOLERANCE, passed };
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(e.to_string()))?;
        save_summary(&dir.join("refinement.json"), &report)?;
    }
    Ok(report)
}
