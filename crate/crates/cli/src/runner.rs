//! Executes one scenario and writes its artifacts.

use crate::scenario::Scenario;
use crate::CliError;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;
use vpl_core::diagnostics::{
    conservation_report, fit_decay, macro_report, ConservationReport, DecayFit, DiagnosticsSeries, Functional,
    MacroReport,
};
use vpl_core::evolution::{Nonlinearity, RunOutput, Solver, SolverConfig};
use vpl_core::io::write_checkpoint;

/// Outcome of one named invariant check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CheckOutcome {
    /// Passes when `value <= tolerance`.
    pub fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self { name: name.into(), value, tolerance, passed: value <= tolerance }
    }

    /// Passes when `value >= tolerance`.
    pub fn at_least(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self { name: name.into(), value, tolerance, passed: value >= tolerance }
    }
}

/// Machine-readable summary of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub library_version: String,
    pub scenario: Scenario,
    pub config: SolverConfig,
    pub steps: usize,
    pub final_time: f64,
    pub aborted: Option<String>,
    pub fits: Vec<DecayFit>,
    pub conservation: ConservationReport,
    pub macro_report: MacroReport,
    /// `(delta, energy functional, dissipation functional)` at `delta = 0` and the configured rate.
    pub functionals: Vec<(f64, f64, f64)>,
    pub weighted_functionals: Vec<(f64, f64, f64)>,
    pub checks: Vec<CheckOutcome>,
    pub passed: bool,
}

/// A completed run together with its summary.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub summary: RunSummary,
    pub output: RunOutput,
}

fn evaluate(scenario: &Scenario, series: &DiagnosticsSeries) -> (Vec<DecayFit>, Vec<CheckOutcome>) {
    let checks_cfg = &scenario.checks;
    let mut checks = Vec::new();
    let report = conservation_report(series);
    // The linearized system drops the quadratic drift, so kinetic plus field
    // energy (and with it the mean temperature identity) is not invariant.
    let linearized = scenario.model.nonlinearity == Nonlinearity::Linearized;
    for law in report.laws.iter().filter(|l| !(linearized && matches!(l.law.as_str(), "energy" | "c0_identity"))) {
        checks.push(CheckOutcome::at_most(format!("conservation.{}", law.law), law.relative, checks_cfg.conservation));
    }
    let poisson = series.records.iter().map(|r| r.poisson_defect).fold(0.0, f64::max);
    checks.push(CheckOutcome::at_most("poisson_defect", poisson, checks_cfg.poisson));

    let mut functionals = vec![Functional::Total, Functional::TotalWeighted];
    if series.channel {
        functionals.push(Functional::H1Total);
    }
    let window = scenario.fit_window();
    let fits: Vec<DecayFit> = functionals.iter().filter_map(|&f| fit_decay(series, f, window).ok()).collect();
    if checks_cfg.decay {
        for f in &functionals {
            match fits.iter().find(|fit| fit.functional_id == f.id()) {
                Some(fit) => {
                    checks.push(CheckOutcome::at_least(format!("decay.{}.delta_hat", f.id()), fit.delta_hat, f64::MIN_POSITIVE));
                    checks.push(CheckOutcome::at_least(format!("decay.{}.r_squared", f.id()), fit.r_squared, checks_cfg.min_r_squared));
                }
                None => checks.push(CheckOutcome { name: format!("decay.{}", f.id()), value: f64::NAN, tolerance: 0.0, passed: false }),
            }
        }
    }
    if checks_cfg.weighted_ordering && scenario.physics.q > 0.0 {
        let gap = |w: f64, u: f64| (u - w) / u.max(f64::MIN_POSITIVE);
        let worst = series
            .records
            .iter()
            .map(|r| gap(r.l1k_l2v_weighted, r.l1k_l2v).max(gap(r.l1k_l2d_weighted, r.l1k_l2d)))
            .fold(f64::NEG_INFINITY, f64::max);
        checks.push(CheckOutcome::at_most("weighted_ordering.deficit", worst, 1e-14));
    }
    (fits, checks)
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("summary serializes");
    fs::write(path, text + "\n").map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn write_checkpoint_file(path: &Path, state: &vpl_core::SpectralState) -> Result<(), CliError> {
    let file = fs::File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    write_checkpoint(state, std::io::BufWriter::new(file)).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn write_series(path: &Path, series: &DiagnosticsSeries) -> Result<(), CliError> {
    let file = fs::File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    series.write_csv(std::io::BufWriter::new(file)).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Runs `scenario`; when `out` is given, writes `series.csv`, `summary.json`
/// and checkpoints there.
///
/// A numerical abort still writes the partial series, a summary naming the
/// failure and the last accepted state before returning [`CliError::Aborted`].
pub fn run_scenario(scenario: &Scenario, out: Option<&Path>) -> Result<RunArtifacts, CliError> {
    let config = scenario.solver_config()?;
    if let Some(dir) = out {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    }
    let solver = Solver::new(config.clone()).map_err(|e| CliError::Config(e.to_string()))?;
    let initial = solver.initial_state().map_err(|e| CliError::Aborted(e.to_string()))?;
    let every = scenario.diagnostics.checkpoint_every;
    let observer = |n: usize, state: &vpl_core::SpectralState| -> vpl_core::Result<()> {
        if let (Some(dir), true) = (out, every > 0 && n % every.max(1) == 0) {
            write_checkpoint_file(&dir.join(format!("checkpoint_{n:06}.bin")), state)
                .map_err(|e| vpl_core::Error::Format(e.to_string()))?;
        }
        Ok(())
    };
    let summary_of = |series: &DiagnosticsSeries, final_time: f64, aborted: Option<String>| {
        let (fits, mut checks) = evaluate(scenario, series);
        if let Some(msg) = &aborted {
            checks.push(CheckOutcome { name: format!("completed: {msg}"), value: final_time, tolerance: config.t_end, passed: false });
        }
        let delta = scenario.diagnostics.delta;
        let folds = |weighted: bool| {
            let mut rates = vec![0.0];
            if delta != 0.0 {
                rates.push(delta);
            }
            rates
                .into_iter()
                .map(|d| (d, series.energy_functional(d, weighted), series.dissipation_functional(d, weighted)))
                .collect()
        };
        RunSummary {
            library_version: env!("CARGO_PKG_VERSION").to_string(),
            scenario: scenario.clone(),
            config: config.clone(),
            steps: config.steps(),
            final_time,
            aborted,
            conservation: conservation_report(series),
            macro_report: macro_report(series),
            functionals: folds(false),
            weighted_functionals: folds(true),
            passed: checks.iter().all(|c| c.passed),
            fits,
            checks,
        }
    };
    match solver.run_from(initial, observer) {
        Ok(output) => {
            let summary = summary_of(&output.series, output.final_state.t, None);
            if let Some(dir) = out {
                write_series(&dir.join("series.csv"), &output.series)?;
                write_json(&dir.join("summary.json"), &summary)?;
                write_checkpoint_file(&dir.join("checkpoint_final.bin"), &output.final_state)?;
            }
            Ok(RunArtifacts { summary, output })
        }
        Err(aborted) => {
            let summary = summary_of(&aborted.series, aborted.last_good.t, Some(aborted.error.to_string()));
            if let Some(dir) = out {
                write_series(&dir.join("series.csv"), &aborted.series)?;
                write_json(&dir.join("summary.json"), &summary)?;
                write_checkpoint_file(&dir.join("checkpoint_last_good.bin"), &aborted.last_good)?;
            }
            Err(CliError::Aborted(aborted.to_string()))
        }
    }
}

/// Writes a summary as pretty JSON.
pub fn save_summary(path: &Path, summary: &impl Serialize) -> Result<(), CliError> {
    write_json(path, summary)
}
