use proptest::prelude::*;
use vpl_core::diagnostics::{
    conservation_report, default_window, fit_decay, fit_exponential, macro_report, running_max, trapezoid,
    DiagnosticsSeries, Functional, FunctionalRecord,
};
use vpl_core::evolution::{GeometryConfig, InitialCondition};
use vpl_core::{Solver, SolverConfig};

fn synthetic(rates: &[f64], times: &[f64]) -> DiagnosticsSeries {
    let mut series = DiagnosticsSeries::new(false);
    for &t in times {
        let modes: Vec<f64> = rates.iter().map(|r| (-r * t).exp()).collect();
        series.push(FunctionalRecord {
            t,
            l1k_l2v: modes.iter().sum(),
            mode_l2v: modes.clone(),
            mode_l2v_weighted: modes.iter().map(|m| 2.0 * m).collect(),
            mode_l2d: modes.clone(),
            mode_l2d_weighted: modes.clone(),
            mode_field: vec![0.0; modes.len()],
            mode_macro: vec![0.0; modes.len()],
            ..FunctionalRecord::default()
        });
    }
    series
}

fn grid_times(t_end: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| t_end * i as f64 / n as f64).collect()
}

#[test]
fn quadrature_helpers() {
    assert_eq!(trapezoid(&[0.0, 1.0, 3.0], &[1.0, 3.0, 7.0]), 2.0 + 10.0);
    assert_eq!(trapezoid(&[0.0], &[5.0]), 0.0);
    assert_eq!(running_max(&[1.0, 3.0, 2.0, 5.0]), vec![1.0, 3.0, 3.0, 5.0]);
    assert_eq!(default_window(20.0), (4.0, 20.0));
}

#[test]
fn exponential_fit_recovers_a_clean_rate() {
    let pts: Vec<(f64, f64)> = grid_times(10.0, 50).into_iter().map(|t| (t, 3.0 * (-0.4 * t).exp())).collect();
    let fit = fit_exponential("x", &pts, (0.0, 10.0)).unwrap();
    assert!((fit.delta_hat - 0.4).abs() < 1e-12);
    assert!(fit.r_squared > 1.0 - 1e-12);
    assert_eq!(fit.samples, 51);
}

#[test]
fn exponential_fit_rejects_degenerate_input() {
    assert!(fit_exponential("x", &[(0.0, 1.0)], (0.0, 1.0)).is_err());
    assert!(fit_exponential("x", &[(0.0, 1.0), (1.0, 0.0)], (0.0, 1.0)).is_err());
    assert!(fit_exponential("x", &[(1.0, 1.0), (1.0, 2.0)], (0.0, 1.0)).is_err());
    // A constant series has a zero rate and a perfect fit.
    let flat = fit_exponential("x", &[(0.0, 2.0), (1.0, 2.0), (2.0, 2.0)], (0.0, 2.0)).unwrap();
    assert_eq!(flat.delta_hat, 0.0);
    assert_eq!(flat.r_squared, 1.0);
}

#[test]
fn fit_window_selects_samples() {
    let series = synthetic(&[0.5], &grid_times(10.0, 100));
    let fit = fit_decay(&series, Functional::L1kL2v, (2.0, 10.0)).unwrap();
    assert_eq!(fit.samples, 81);
    assert!((fit.delta_hat - 0.5).abs() < 1e-12);
}

#[test]
fn sup_fold_sums_per_mode_maxima() {
    let series = synthetic(&[1.0, 0.25], &grid_times(8.0, 800));
    // delta = 0: maxima at t = 0 give 1 + 1 plus twice that for the weighted copy.
    assert!((series.energy_functional(0.0, false) - 2.0).abs() < 1e-14);
    assert!((series.energy_functional(0.0, true) - 4.0).abs() < 1e-14);
    // delta = 0.5: e^{-0.5 t} peaks at 0, e^{0.25 t} peaks at t = 8.
    let expected = 1.0 + 2f64.exp();
    assert!((series.energy_functional(0.5, false) - expected).abs() < 1e-12);
}

#[test]
fn l2_fold_matches_closed_form() {
    let t_end = 4.0;
    let series = synthetic(&[1.0], &grid_times(t_end, 4000));
    // Dissipation: sqrt(int_0^T e^{2 (delta - 1) t} dt) for the single micro mode.
    let delta = 0.3;
    let a = 2.0 * (delta - 1.0);
    let exact = (((a * t_end).exp() - 1.0) / a).sqrt();
    assert!((series.dissipation_functional(delta, false) - exact).abs() < 1e-6);
    let history = series.functional_history(delta, false);
    assert_eq!(history.len(), series.len());
    assert!(history.windows(2).all(|w| w[1].1 >= w[0].1 && w[1].2 >= w[0].2));
}

#[test]
fn functional_ids_round_trip() {
    for f in Functional::ALL {
        assert_eq!(f.id().parse::<Functional>().unwrap(), f);
    }
    assert!("nope".parse::<Functional>().is_err());
}

#[test]
fn csv_is_long_format() {
    let series = synthetic(&[1.0], &[0.0, 1.0]);
    let mut buf = Vec::new();
    series.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,functional_id,value");
    assert_eq!(lines.len(), 1 + 2 * Functional::ALL.len());
    assert!(lines[1].split(',').nth(1) == Some("l1k_l2v"));
}

fn measured_run(geometry: GeometryConfig) -> DiagnosticsSeries {
    let config = SolverConfig {
        geometry,
        n_per_axis: 8,
        t_end: 0.4,
        dt: 0.1,
        weight: vpl_core::collision::WeightParams { q: 0.05, theta: 2.0, decay: 1.0 },
        initial: InitialCondition::Random { amplitude: 0.05, seed: 3, k_init: 2 },
        ..SolverConfig::torus_default(-1.0)
    };
    Solver::new(config).unwrap().run().unwrap().series
}

#[test]
fn measured_records_are_consistent() {
    let series = measured_run(GeometryConfig::Torus { dim: 1, k_max: 2 });
    assert_eq!(series.len(), 5);
    for r in &series.records {
        let sum: f64 = r.mode_l2v.iter().sum();
        assert!((sum - r.l1k_l2v).abs() <= 1e-14 * sum);
        assert!((r.mode_field.iter().sum::<f64>() - r.l1k_e).abs() <= 1e-14 * r.l1k_e.max(1e-300));
        assert!(r.l1k_l2v_weighted >= r.l1k_l2v && r.l1k_l2d_weighted >= r.l1k_l2d);
        assert!(r.l1k_h1_l2v >= r.l1k_l2v);
        assert!(r.poisson_defect <= 1e-14);
    }
    let report = conservation_report(&series);
    assert_eq!(report.laws.len(), 7);
    assert!(report.max_relative() < 1e-10, "{report:?}");
    let m = macro_report(&series);
    assert!(m.lhs > 0.0 && m.rhs > 0.0 && m.ratio.is_finite());
}

#[test]
fn channel_report_omits_the_normal_momentum() {
    let series = measured_run(GeometryConfig::Channel { n_x1: 8, kbar_max: 0 });
    assert!(series.channel);
    let report = conservation_report(&series);
    assert!(report.get("momentum_1").is_none());
    assert!(report.get("momentum_2").is_some());
    assert!(report.max_relative() < 1e-10, "{report:?}");
    assert!(series.records.iter().all(|r| r.l1k_h1_l2v >= r.l1k_l2v));
}

#[test]
fn empty_series_gives_empty_reports() {
    let series = DiagnosticsSeries::new(false);
    assert!(conservation_report(&series).laws.is_empty());
    assert_eq!(macro_report(&series).ratio, 0.0);
}

proptest! {
    #[test]
    fn fit_recovers_any_rate(amplitude in 1e-6f64..1e3, rate in -1.0f64..2.0, t_end in 1.0f64..30.0) {
        let pts: Vec<(f64, f64)> = grid_times(t_end, 40).into_iter().map(|t| (t, amplitude * (-rate * t).exp())).collect();
        let fit = fit_exponential("x", &pts, (0.0, t_end)).unwrap();
        prop_assert!((fit.delta_hat - rate).abs() <= 1e-9 * (1.0 + rate.abs()));
    }

    #[test]
    fn folds_grow_with_delta(rate in 0.1f64..2.0, d1 in 0.0f64..0.5, extra in 0.0f64..0.5) {
        let series = synthetic(&[rate], &grid_times(5.0, 200));
        prop_assert!(series.energy_functional(d1 + extra, false) >= series.energy_functional(d1, false));
        prop_assert!(series.dissipation_functional(d1 + extra, false) >= series.dissipation_functional(d1, false));
    }
}
