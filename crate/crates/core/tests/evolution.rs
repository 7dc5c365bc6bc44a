use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::sync::OnceLock;
use vpl_core::collision::apply_l;
use vpl_core::evolution::{GeometryConfig, InitialCondition, Layout, Nonlinearity};
use vpl_core::geometry::FieldState;
use vpl_core::io::{decode_checkpoint, encode_checkpoint, read_checkpoint, write_checkpoint};
use vpl_core::velocity::{norm_sq, AxisStencil};
use vpl_core::{Solver, SolverConfig, SpectralState, VelocityField, C64};

const ZERO: C64 = C64::new(0.0, 0.0);

fn torus(k_max: usize, n: usize) -> SolverConfig {
    SolverConfig {
        geometry: GeometryConfig::Torus { dim: 1, k_max },
        n_per_axis: n,
        dt: 0.1,
        t_end: 0.5,
        ..SolverConfig::torus_default(-1.0)
    }
}

fn random_initial(amplitude: f64, seed: u64) -> InitialCondition {
    InitialCondition::Random { amplitude, seed, k_init: 2 }
}

fn max_diff(a: &[Vec<C64>], b: &[Vec<C64>]) -> f64 {
    a.iter().zip(b).flat_map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q).norm())).fold(0.0, f64::max)
}

fn torus_modes(s: &Solver) -> &vpl_core::geometry::TorusModes {
    match &s.layout {
        Layout::Torus(m) => m,
        Layout::Channel(_) => panic!("torus layout expected"),
    }
}

#[test]
fn zero_data_stays_zero() {
    for geometry in [GeometryConfig::Torus { dim: 1, k_max: 2 }, GeometryConfig::Channel { n_x1: 8, kbar_max: 0 }] {
        let config = SolverConfig { geometry, n_per_axis: 8, initial: InitialCondition::Zero, ..torus(2, 8) };
        let out = Solver::new(config).unwrap().run().unwrap();
        assert_eq!(out.final_state.max_abs(), 0.0);
        assert!(out.series.records.iter().all(|r| r.l1k_l2v == 0.0));
    }
}

#[test]
fn free_streaming_matches_the_exact_phase_rotation() {
    let config = SolverConfig {
        collisions: false,
        field_coupling: false,
        nonlinearity: Nonlinearity::Linearized,
        initial: random_initial(0.1, 4),
        ..torus(3, 8)
    };
    let solver = Solver::new(config).unwrap();
    let initial = solver.initial_state().unwrap();
    let modes = torus_modes(&solver);
    let mut state = initial.clone();
    let len = solver.grid.len();
    for step in 1..=5 {
        solver.step(&mut state).unwrap();
        let t = step as f64 * 0.1;
        for s in 0..modes.len() {
            let k = modes.wavevector(s);
            for q in 0..2 * len {
                let v = solver.grid.nodes()[q % len];
                let exact = initial.sites[s][q] * C64::from_polar(1.0, -t * (v[0] * k[0] + v[1] * k[1] + v[2] * k[2]));
                assert!((state.sites[s][q] - exact).norm() <= 1e-10 * (1.0 + exact.norm()));
            }
        }
    }
}

#[test]
fn drift_convolution_matches_physical_space_product() {
    // Collocation on 3 k_max + 1 points reproduces the Galerkin-truncated
    // product without aliasing into the retained modes.
    let k_max = 2usize;
    let config = SolverConfig { n_per_axis: 6, ..torus(k_max, 6) };
    let solver = Solver::new(config).unwrap();
    let modes = torus_modes(&solver);
    let len = solver.grid.len();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut z = || C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    let mut sites = vec![vec![ZERO; 2 * len]; modes.len()];
    let mut field = FieldState { phi: vec![ZERO; modes.len()], field: vec![[ZERO; 3]; modes.len()] };
    for s in modes.half_set() {
        let p = modes.negated(s);
        let values: Vec<C64> = (0..2 * len).map(|_| z()).collect();
        let e = z();
        if s == p {
            sites[s] = values.iter().map(|x| C64::new(x.re, 0.0)).collect();
        } else {
            sites[p] = values.iter().map(|x| x.conj()).collect();
            sites[s] = values;
            field.field[s][0] = e;
            field.field[p][0] = e.conj();
        }
    }
    let convolved = solver.field_forcing(&sites, &field, false);

    let points = 3 * k_max + 1;
    let xs: Vec<f64> = (0..points).map(|j| 2.0 * PI * j as f64 / points as f64).collect();
    let stencil = AxisStencil::gaussian_conjugated(&solver.grid);
    let mut physical = vec![vec![ZERO; 2 * len]; points];
    for (j, &x) in xs.iter().enumerate() {
        let at = |s: usize| C64::from_polar(1.0, modes.modes()[s][0] as f64 * x);
        let e: C64 = (0..modes.len()).map(|s| field.field[s][0] * at(s)).sum();
        let f: Vec<C64> = (0..2 * len).map(|q| (0..modes.len()).map(|s| sites[s][q] * at(s)).sum()).collect();
        let mut dt_plus = vec![ZERO; len];
        let mut dt_minus = vec![ZERO; len];
        stencil.apply_transpose_add(0, &f[..len], &mut dt_plus);
        stencil.apply_transpose_add(0, &f[len..], &mut dt_minus);
        for q in 0..len {
            physical[j][q] = e * dt_plus[q];
            physical[j][len + q] = -e * dt_minus[q];
        }
    }
    for s in solver.representatives().iter().copied() {
        let k = modes.modes()[s][0] as f64;
        for q in 0..2 * len {
            let coeff: C64 = xs
                .iter()
                .enumerate()
                .map(|(j, &x)| physical[j][q] * C64::from_polar(1.0, -k * x))
                .sum::<C64>()
                / points as f64;
            assert!((coeff - convolved[s][q]).norm() < 1e-12, "mode {k}, node {q}");
        }
    }
}

/// Dense matrix of `L` at `n = 8`, `gamma = -1` with its symmetric eigensystem.
struct DenseL {
    solver: Solver,
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<f64>,
    scale: f64,
    asymmetry: f64,
}

fn dense_l() -> &'static DenseL {
    static CELL: OnceLock<DenseL> = OnceLock::new();
    CELL.get_or_init(|| {
        let config = SolverConfig {
            field_coupling: false,
            nonlinearity: Nonlinearity::Linearized,
            t_end: 30.0,
            dt: 0.5,
            ..torus(1, 8)
        };
        let solver = Solver::new(config).unwrap();
        let grid = &solver.grid;
        let m = 2 * grid.len();
        let columns: Vec<VelocityField> = (0..m)
            .map(|j| {
                let mut e = VelocityField::zeros_pair(grid.len());
                e.values[j] = C64::new(1.0, 0.0);
                apply_l(&solver.tensors, grid, &e).unwrap()
            })
            .collect();
        let l = DMatrix::from_fn(m, m, |i, j| columns[j].values[i].re);
        let asymmetry = (&l - l.transpose()).abs().max();
        let scale = l.abs().max();
        let eig = l.symmetric_eigen();
        DenseL { solver, eigenvalues: eig.eigenvalues.iter().copied().collect(), eigenvectors: eig.eigenvectors, scale, asymmetry }
    })
}

#[test]
fn linearized_generator_has_nonpositive_hermitian_part() {
    // The transport part i v.k is skew, so the spectrum of -i v.k + L lies in the
    // closed left half-plane exactly when the symmetric matrix of L is nonpositive.
    let d = dense_l();
    assert!(d.asymmetry <= 1e-12 * d.scale);
    let mut eig = d.eigenvalues.clone();
    eig.sort_by(f64::total_cmp);
    let m = eig.len();
    assert!(eig[m - 1] <= 1e-10 * d.scale, "largest eigenvalue {}", eig[m - 1]);
    // Six invariants of the pair (two masses, three momenta, energy) sit at
    // rounding level. Every other eigenvalue is strictly negative, although the
    // odd-even modes of the centered stencil are only weakly damped.
    let null = eig.iter().filter(|x| x.abs() <= 1e-10 * d.scale).count();
    assert_eq!(null, 6, "{:?}", &eig[m - 8..]);
    assert!(eig[m - 7] < -1e-9 * d.scale, "{:?}", &eig[m - 8..]);
}

#[test]
fn linearized_run_is_nonexpansive_per_mode() {
    let config = SolverConfig {
        field_coupling: false,
        nonlinearity: Nonlinearity::Linearized,
        initial: random_initial(0.1, 12),
        t_end: 1.0,
        ..torus(2, 8)
    };
    let solver = Solver::new(config).unwrap();
    let mut state = solver.initial_state().unwrap();
    let w = solver.grid.weight();
    let mut previous: Vec<f64> = state.sites.iter().map(|f| norm_sq(w, f)).collect();
    for _ in 0..10 {
        solver.step(&mut state).unwrap();
        for (s, f) in state.sites.iter().enumerate() {
            let now = norm_sq(w, f);
            assert!(now <= previous[s] * (1.0 + 1e-12), "site {s}: {} -> {now}", previous[s]);
            previous[s] = now;
        }
    }
}

#[test]
fn collisions_damp_everything_outside_the_slow_subspace() {
    let d = dense_l();
    let solver = &d.solver;
    let grid = &solver.grid;
    let zero = torus_modes(solver).zero_index();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    // Macroscopic base plus a smooth microscopic part built from a few
    // Hermite-like profiles with random weights.
    let base = VelocityField::symmetric_pair(&grid.times_sqrt_mu(|v| v[0]));
    let c: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
    let micro = grid.times_sqrt_mu(|v| c[0] * v[0] * v[1] + c[1] * (v[2] * v[2] * v[2] - 3.0 * v[2]) + c[2] * v[0] * v[0] * v[1] * v[1] + c[3]);
    let start: Vec<f64> = (0..2 * grid.len())
        .map(|q| base.values[q].re + 1e-4 * micro[q % grid.len()].re * if q < grid.len() { 1.0 } else { -0.5 })
        .collect();
    let mut state = solver.zero_state();
    state.sites[zero] = start.iter().map(|&x| C64::new(x, 0.0)).collect();
    let out = solver.run_from(state, |_, _| Ok(())).unwrap();
    let end: Vec<f64> = out.final_state.sites[zero].iter().map(|x| x.re).collect();

    // Split both states into the slow subspace (invariants and odd-even modes,
    // |lambda| < 1e-3) and its complement.
    let slow: Vec<usize> = (0..d.eigenvalues.len()).filter(|&k| d.eigenvalues[k].abs() < 1e-3).collect();
    assert_eq!(slow.len(), 20);
    let split = |f: &[f64]| {
        let f = nalgebra::DVector::from_column_slice(f);
        let mut slow_part = nalgebra::DVector::zeros(f.len());
        for &k in &slow {
            let e = d.eigenvectors.column(k);
            slow_part += e * e.dot(&f);
        }
        let fast = &f - &slow_part;
        (slow_part, fast)
    };
    let (slow0, fast0) = split(&start);
    let (slow1, fast1) = split(&end);
    assert!(fast0.norm() > 1e-5);
    assert!(fast1.norm() <= 1e-6 * fast0.norm(), "{} of {}", fast1.norm(), fast0.norm());
    // The slowest nontrivial rate is about 1.4e-5, so over t = 30 the slow
    // component may move by at most a few parts in 1e4.
    assert!((&slow1 - &slow0).norm() <= 1e-3 * slow0.norm());
}

#[test]
fn normalization_enforces_the_conservation_constraints() {
    for geometry in [GeometryConfig::Torus { dim: 1, k_max: 3 }, GeometryConfig::Channel { n_x1: 8, kbar_max: 0 }] {
        let channel = matches!(geometry, GeometryConfig::Channel { .. });
        let config = SolverConfig { geometry, initial: random_initial(0.3, 21), ..torus(3, 8) };
        let solver = Solver::new(config).unwrap();
        let raw = solver.raw_initial_state().unwrap();
        let before = solver.global_moments(&raw);
        assert!(before.mass_plus.abs() > 1e-6 || before.kinetic.abs() > 1e-6);
        let state = solver.initial_state().unwrap();
        let g = solver.global_moments(&state);
        let scale = state.max_abs();
        assert!(g.mass_plus.abs() <= 1e-13 * scale && g.mass_minus.abs() <= 1e-13 * scale);
        let checked = if channel { 1..3 } else { 0..3 };
        for a in checked {
            assert!(g.momentum[a].abs() <= 1e-13 * scale, "axis {a}: {}", g.momentum[a]);
        }
        assert!(g.energy().abs() <= 1e-13 * scale.max(g.field));
        if !channel {
            // Mean temperature coefficient equals minus one twelfth of the field energy.
            let modes = torus_modes(&solver);
            let c0 = solver.macro_coeffs(&state)[modes.zero_index()].c.re;
            assert!((c0 + g.field / 12.0).abs() <= 1e-13 * scale.max(g.field));
        }
    }
}

fn short_run(geometry: GeometryConfig, seed: u64) -> (Solver, vpl_core::evolution::RunOutput) {
    let config = SolverConfig { geometry, initial: random_initial(0.05, seed), t_end: 0.5, ..torus(3, 8) };
    let solver = Solver::new(config).unwrap();
    let out = solver.run().unwrap();
    (solver, out)
}

#[test]
fn full_torus_run_conserves_mass_momentum_and_energy() {
    let (solver, out) = short_run(GeometryConfig::Torus { dim: 1, k_max: 3 }, 31);
    let a = solver.global_moments(&out.initial_state);
    let b = solver.global_moments(&out.final_state);
    let scale = out.initial_state.max_abs();
    assert!((a.mass_plus - b.mass_plus).abs() <= 1e-13 * scale);
    assert!((a.mass_minus - b.mass_minus).abs() <= 1e-13 * scale);
    for i in 0..3 {
        assert!((a.momentum[i] - b.momentum[i]).abs() <= 1e-13 * scale);
    }
    assert!((a.energy() - b.energy()).abs() <= 1e-12 * scale);
    let modes = torus_modes(&solver);
    for s in 0..modes.len() {
        let p = modes.negated(s);
        let conj: Vec<Vec<C64>> = vec![out.final_state.sites[p].iter().map(|x| x.conj()).collect()];
        assert!(max_diff(&[out.final_state.sites[s].clone()], &conj) <= 1e-15 * scale);
    }
    let rho = solver.charge(&out.final_state.sites);
    assert!(vpl_core::geometry::gauss_law_defect(modes, &out.final_state.field, &rho) <= 1e-15);
    let c0 = solver.macro_coeffs(&out.final_state)[modes.zero_index()].c.re;
    assert!((c0 + b.field / 12.0).abs() <= 1e-13 * scale);
}

#[test]
fn channel_run_conserves_mass_and_transverse_momentum() {
    let (solver, out) = short_run(GeometryConfig::Channel { n_x1: 8, kbar_max: 1 }, 37);
    let a = solver.global_moments(&out.initial_state);
    let b = solver.global_moments(&out.final_state);
    let scale = out.initial_state.max_abs();
    assert!((a.mass_plus - b.mass_plus).abs() <= 1e-13 * scale);
    assert!((a.mass_minus - b.mass_minus).abs() <= 1e-13 * scale);
    for i in 1..3 {
        assert!((a.momentum[i] - b.momentum[i]).abs() <= 1e-13 * scale);
    }
    assert!((a.energy() - b.energy()).abs() <= 1e-12 * scale);
    assert!(out.final_state.is_finite());
}

#[test]
fn checkpoints_round_trip_and_reject_corruption() {
    let (_, out) = short_run(GeometryConfig::Torus { dim: 1, k_max: 2 }, 41);
    let state: SpectralState = out.final_state;
    let bytes = encode_checkpoint(&state);
    assert_eq!(&bytes[..8], b"VPLCKPT\0");
    assert_eq!(decode_checkpoint(&bytes).unwrap(), state);
    let mut buf = Vec::new();
    write_checkpoint(&state, &mut buf).unwrap();
    assert_eq!(read_checkpoint(buf.as_slice()).unwrap(), state);
    assert!(decode_checkpoint(&bytes[..bytes.len() - 1]).is_err());
    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert!(decode_checkpoint(&bad).is_err());
    let mut future = bytes;
    future[8] = 99;
    assert!(decode_checkpoint(&future).is_err());
}

#[test]
fn invalid_configurations_are_rejected() {
    let bad = [
        SolverConfig { dt: 0.0, ..torus(2, 8) },
        SolverConfig { t_end: 0.05, ..torus(2, 8) },
        SolverConfig { gamma: -3.0, ..torus(2, 8) },
        SolverConfig { n_per_axis: 7, ..torus(2, 8) },
        SolverConfig { geometry: GeometryConfig::Torus { dim: 4, k_max: 1 }, ..torus(2, 8) },
        SolverConfig { geometry: GeometryConfig::Channel { n_x1: 9, kbar_max: 0 }, ..torus(2, 8) },
        SolverConfig { diag_every: 0, ..torus(2, 8) },
        SolverConfig {
            weight: vpl_core::collision::WeightParams { q: 0.2, theta: 2.0, decay: 1.0 },
            ..torus(2, 8)
        },
        SolverConfig { initial: InitialCondition::Cosine { amplitude: f64::NAN, wavenumber: [1, 0, 0] }, ..torus(2, 8) },
    ];
    for config in bad {
        assert!(Solver::new(config.clone()).is_err(), "{config:?}");
    }
}
