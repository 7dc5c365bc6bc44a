//! Invariant suites that need no time evolution.

use crate::runner::CheckOutcome;
use crate::scenario::Scenario;
use crate::CliError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use vpl_core::collision::{apply_a_and_k, apply_l, CollisionTensors, WeightParams};
use vpl_core::geometry::{elliptic_bound_ratio, elliptic_solve_1d, poisson_torus, gauss_law_defect, BoundaryCondition, ChannelGrid, TorusModes};
use vpl_core::macroscopic::{invariant_basis, PairingConstants};
use vpl_core::velocity::{discrete_moment, norm_sq, normalized_moment_1d};
use vpl_core::{VelocityField, VelocityGrid, C64};

/// Largest relative error of the even one-dimensional moments `p <= p_max`.
pub fn moment_table_error(grid: &VelocityGrid, p_max: u32) -> f64 {
    (0..=p_max)
        .step_by(2)
        .map(|p| {
            let exact = normalized_moment_1d(p);
            (discrete_moment(grid, [p, 0, 0]) - exact).abs() / exact
        })
        .fold(0.0, f64::max)
}

/// Largest relative error of the pairing constants against their exact values.
pub fn pairing_error(grid: &VelocityGrid) -> f64 {
    let measured = PairingConstants::measure(grid).as_array();
    let exact = PairingConstants::exact().as_array();
    measured
        .iter()
        .zip(&exact)
        .map(|(m, e)| if *e == 0.0 { m.abs() } else { (m - e).abs() / e.abs() })
        .fold(0.0, f64::max)
}

/// Random pair with entries uniform in `[-1, 1] + i[-1, 1]`, damped by `mu^{1/4}`
/// so it is representative of a perturbation.
pub fn random_pair(grid: &VelocityGrid, rng: &mut impl Rng) -> VelocityField {
    let values = (0..2 * grid.len())
        .map(|q| {
            let s = grid.sqrt_mu()[q % grid.len()].sqrt();
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * s
        })
        .collect();
    VelocityField { species: vpl_core::velocity::Species::Pair, values }
}

fn l2(grid: &VelocityGrid, f: &VelocityField) -> f64 {
    norm_sq(grid.weight(), &f.values).sqrt()
}

/// Lower estimate of `|L|` from the largest ratio `|L f| / |f|` over samples.
pub fn operator_scale(t: &CollisionTensors, grid: &VelocityGrid, samples: usize, seed: u64) -> vpl_core::Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: f64 = 0.0;
    for _ in 0..samples {
        let f = random_pair(grid, &mut rng);
        best = best.max(l2(grid, &apply_l(t, grid, &f)?) / l2(grid, &f));
    }
    Ok(best)
}

/// Largest `|L e| / (|L| |e|)` over the orthonormal invariant basis.
pub fn kernel_defect(t: &CollisionTensors, grid: &VelocityGrid) -> vpl_core::Result<f64> {
    let scale = operator_scale(t, grid, 4, 7)?;
    let mut worst: f64 = 0.0;
    for e in invariant_basis(grid) {
        worst = worst.max(l2(grid, &apply_l(t, grid, &e)?) / (scale * l2(grid, &e)));
    }
    Ok(worst)
}

/// Largest relative defect of `-A + K = L` over random inputs.
pub fn splitting_defect(t: &CollisionTensors, grid: &VelocityGrid, samples: usize, seed: u64) -> vpl_core::Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let f = random_pair(grid, &mut rng);
        let lf = apply_l(t, grid, &f)?;
        let parts = apply_a_and_k(t, grid, &f)?;
        let mut diff = parts.k_part.clone();
        diff.axpy(C64::new(-1.0, 0.0), &parts.a_part);
        diff.axpy(C64::new(-1.0, 0.0), &lf);
        worst = worst.max(l2(grid, &diff) / l2(grid, &lf));
    }
    Ok(worst)
}

/// The four wall configurations: both boundary conditions, with and without
/// a transverse wavenumber.
pub const ELLIPTIC_CONFIGS: [(BoundaryCondition, f64); 4] = [
    (BoundaryCondition::Dirichlet, 0.0),
    (BoundaryCondition::Dirichlet, 1.0),
    (BoundaryCondition::Neumann, 0.0),
    (BoundaryCondition::Neumann, 1.0),
];

/// Manufactured solution compatible with `bc`: `sin(pi x)` or `cos(pi x)`.
pub fn manufactured(bc: BoundaryCondition, x: f64) -> f64 {
    match bc {
        BoundaryCondition::Dirichlet => (PI * x).sin(),
        BoundaryCondition::Neumann => (PI * x).cos(),
    }
}

/// Max-norm errors of the manufactured problem on each grid.
pub fn elliptic_errors(bc: BoundaryCondition, kbar2: f64, sizes: &[usize]) -> vpl_core::Result<Vec<f64>> {
    sizes
        .iter()
        .map(|&n| {
            let grid = ChannelGrid::new(n, 0)?;
            let exact: Vec<f64> = grid.nodes().iter().map(|&x| manufactured(bc, x)).collect();
            let source: Vec<C64> = exact.iter().map(|u| C64::new((PI * PI + kbar2) * u, 0.0)).collect();
            let u = elliptic_solve_1d(&grid, kbar2, &source, bc)?;
            Ok(u.iter().zip(&exact).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
        })
        .collect()
}

/// Observed orders `log2(e_n / e_{2n})` between consecutive grids.
pub fn observed_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|e| (e[0] / e[1]).log2()).collect()
}

/// Elliptic-estimate constants of the manufactured problem per grid size.
pub fn elliptic_constants(bc: BoundaryCondition, kbar2: f64, sizes: &[usize]) -> vpl_core::Result<Vec<f64>> {
    sizes
        .iter()
        .map(|&n| {
            let grid = ChannelGrid::new(n, 0)?;
            let source: Vec<C64> = grid.nodes().iter().map(|&x| C64::new((PI * PI + kbar2) * manufactured(bc, x), 0.0)).collect();
            let u = elliptic_solve_1d(&grid, kbar2, &source, bc)?;
            Ok(elliptic_bound_ratio(&grid, kbar2, &u, &source, bc))
        })
        .collect()
}

/// Whether the pure Neumann problem rejects a source with nonzero mean.
pub fn rejects_incompatible_neumann() -> bool {
    let grid = ChannelGrid::new(16, 0).expect("valid grid");
    let source = vec![C64::new(1.0, 0.0); 16];
    matches!(elliptic_solve_1d(&grid, 0.0, &source, BoundaryCondition::Neumann), Err(vpl_core::Error::Incompatible(_)))
}

/// Whether `w(t, v)` is nonincreasing in `t` at every node for the given times.
pub fn weight_monotone(params: &WeightParams, grid: &VelocityGrid, times: &[f64]) -> bool {
    let tables: Vec<Vec<f64>> = times.iter().map(|&t| params.on_grid(grid, t)).collect();
    tables.windows(2).all(|w| w[0].iter().zip(&w[1]).all(|(a, b)| a >= b && *b >= 1.0))
}

/// Runs the static invariant suite at the scenario's velocity grid and potential.
pub fn verify_scenario(scenario: &Scenario) -> Result<Vec<CheckOutcome>, CliError> {
    let config = scenario.solver_config()?;
    let core = |e: vpl_core::Error| CliError::Config(e.to_string());
    let grid = VelocityGrid::new(config.n_per_axis, config.v_max).map_err(core)?;
    let tensors = CollisionTensors::build(&grid, config.gamma, config.split).map_err(core)?;
    let mut checks = vec![
        CheckOutcome::at_most("moment_table.max_relative_error", moment_table_error(&grid, 10), 1e-4),
        CheckOutcome::at_most("pairing_constants.max_relative_error", pairing_error(&grid), 1e-4),
        CheckOutcome::at_most("collision.kernel_defect", kernel_defect(&tensors, &grid).map_err(core)?, 1e-8),
        CheckOutcome::at_most("collision.splitting_defect", splitting_defect(&tensors, &grid, 4, 11).map_err(core)?, 1e-10),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst_dissipation = f64::INFINITY;
    for _ in 0..8 {
        let f = random_pair(&grid, &mut rng);
        let lf = apply_l(&tensors, &grid, &f).map_err(core)?;
        let form: f64 = f.values.iter().zip(&lf.values).map(|(a, b)| (a.conj() * b).re).sum::<f64>() * grid.weight();
        worst_dissipation = worst_dissipation.min(-form);
    }
    checks.push(CheckOutcome::at_least("collision.dissipation_sign", worst_dissipation, 0.0));
    let sizes = [32, 64, 128];
    for (bc, kbar2) in ELLIPTIC_CONFIGS {
        let orders = observed_orders(&elliptic_errors(bc, kbar2, &sizes).map_err(core)?);
        let worst = orders.iter().map(|o| (o - 2.0).abs()).fold(0.0, f64::max);
        checks.push(CheckOutcome::at_most(format!("elliptic.{bc:?}.kbar2={kbar2}.order_deviation").to_lowercase(), worst, 0.1));
    }
    checks.push(CheckOutcome::at_least(
        "elliptic.neumann_incompatible_rejected",
        f64::from(u8::from(rejects_incompatible_neumann())),
        1.0,
    ));
    let modes = TorusModes::new(3, 2).map_err(core)?;
    let rho: Vec<C64> = (0..modes.len())
        .map(|i| if modes.k_squared(i) == 0.0 { C64::new(0.0, 0.0) } else { C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) })
        .collect();
    let field = poisson_torus(&modes, &rho).map_err(core)?;
    checks.push(CheckOutcome::at_most("poisson.gauss_law_defect", gauss_law_defect(&modes, &field, &rho), 1e-13));
    let t_end = config.t_end;
    let monotone = weight_monotone(&config.weight, &grid, &[0.0, 0.5 * t_end, t_end]);
    checks.push(CheckOutcome::at_least("weight.monotone_in_time", f64::from(u8::from(monotone)), 1.0));
    Ok(checks)
}
