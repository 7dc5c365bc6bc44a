use clap::{Args, Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use vpl_cli::sweep::{amplitude_sweep, refinement_study};
use vpl_cli::verify::verify_scenario;
use vpl_cli::{exit, parse_config, run_scenario, CheckOutcome, CliError, Scenario};

/// Vlasov-Poisson-Landau perturbation runs and invariant checks.
///
/// Every flag can also be set through an environment variable with the
/// `VPL_` prefix (`VPL_CONFIG`, `VPL_PRESET`, `VPL_SEED`, `VPL_OUT`,
/// `VPL_THREADS`); command-line values take precedence.
#[derive(Parser)]
#[command(name = "vpl", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one scenario and write its series, summary and checkpoints.
    Run(Common),
    /// Run the invariant suites without time evolution.
    Verify(Common),
    /// Amplitude sweep and, when configured, the refinement study.
    Sweep(Common),
    /// Print a preset as scenario TOML.
    Preset {
        name: String,
    },
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML).
    #[arg(long, env = "VPL_CONFIG", conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in scenario name.
    #[arg(long, env = "VPL_PRESET")]
    preset: Option<String>,
    /// Seed of random initial data.
    #[arg(long, env = "VPL_SEED")]
    seed: Option<u64>,
    /// Output directory (overrides the scenario's `output_dir`).
    #[arg(long, env = "VPL_OUT")]
    out: Option<PathBuf>,
    /// Worker threads for per-mode parallelism.
    #[arg(long, env = "VPL_THREADS")]
    threads: Option<usize>,
}

impl Common {
    fn scenario(&self) -> Result<Scenario, CliError> {
        let scenario = match (&self.config, &self.preset) {
            (Some(path), _) => parse_config(path)?,
            (None, Some(name)) => Scenario::preset(name)?,
            (None, None) => return Err(CliError::Usage("one of --config or --preset is required".into())),
        };
        Ok(match self.seed {
            Some(seed) => scenario.with_seed(seed),
            None => scenario,
        })
    }

    fn out_dir(&self, scenario: &Scenario) -> Option<PathBuf> {
        self.out.clone().or_else(|| scenario.output_dir.as_ref().map(PathBuf::from))
    }

    fn init_threads(&self) -> Result<(), CliError> {
        if let Some(n) = self.threads {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| CliError::Usage(format!("--threads: {e}")))?;
        }
        Ok(())
    }
}

fn report(checks: &[CheckOutcome]) -> i32 {
    for c in checks {
        let status = if c.passed { "PASS" } else { "FAIL" };
        println!("{status}  {:<48} value {:>12.4e}  tolerance {:>10.3e}", c.name, c.value, c.tolerance);
    }
    if checks.iter().all(|c| c.passed) {
        exit::PASS
    } else {
        exit::CHECK_FAILED
    }
}

fn execute(command: Command) -> Result<i32, CliError> {
    match command {
        Command::Preset { name } => {
            print!("{}", Scenario::preset(&name)?.to_toml());
            Ok(exit::PASS)
        }
        Command::Run(common) => {
            common.init_threads()?;
            let scenario = common.scenario()?;
            let out = common.out_dir(&scenario);
            let artifacts = run_scenario(&scenario, out.as_deref())?;
            if let Some(dir) = &out {
                println!("wrote {}", dir.display());
            }
            for fit in &artifacts.summary.fits {
                println!("fit {:<18} delta_hat {:.4e}  r^2 {:.4}", fit.functional_id, fit.delta_hat, fit.r_squared);
            }
            Ok(report(&artifacts.summary.checks))
        }
        Command::Verify(common) => {
            common.init_threads()?;
            Ok(report(&verify_scenario(&common.scenario()?)?))
        }
        Command::Sweep(common) => {
            common.init_threads()?;
            let scenario = common.scenario()?;
            let out = common.out_dir(&scenario);
            let mut status = exit::PASS;
            if !scenario.sweep.amplitudes.is_empty() {
                let sweep = amplitude_sweep(&scenario, out.as_deref())?;
                for e in &sweep.entries {
                    println!(
                        "amplitude {:.3e}  passed {}  aborted {}  delta_hat {}",
                        e.amplitude,
                        e.passed,
                        e.aborted,
                        e.delta_hat.map_or("-".into(), |d| format!("{d:.4e}"))
                    );
                }
                match sweep.threshold {
                    Some(t) => println!("empirical smallness threshold: {t:.3e}"),
                    None => println!("no swept amplitude passed"),
                }
            }
            if scenario.sweep.refinement {
                let study = refinement_study(&scenario, out.as_deref().map(Path::new))?;
                for (eq, ratio) in &study.constant_ratios {
                    println!("refinement {eq:<24} constant ratio {ratio:.3}");
                }
                if !study.passed {
                    status = exit::CHECK_FAILED;
                }
            }
            if scenario.sweep.amplitudes.is_empty() && !scenario.sweep.refinement {
                return Err(CliError::Config("sweep: set sweep.amplitudes or sweep.refinement".into()));
            }
            Ok(status)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::USAGE as u8 } else { exit::PASS as u8 });
        }
    };
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("vpl: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
