use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use vpl_core::geometry::{
    channel_test_potentials, elliptic_bound_ratio, elliptic_solve_1d, gauss_law_defect, poisson_channel, poisson_torus,
    torus_test_potentials, BoundaryCondition, BoundaryTable, ChannelGrid, DerivativeKind, TorusModes,
};
use vpl_core::{VelocityGrid, C64};

const ZERO: C64 = C64::new(0.0, 0.0);

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn max_err(a: &[C64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Dense assembly of the same ghost-cell operator, solved by LU.
fn dense_solve(grid: &ChannelGrid, kbar2: f64, source: &[f64], bc: BoundaryCondition) -> Vec<f64> {
    let n = grid.n_x1();
    let h2 = grid.spacing().powi(2);
    let ghost = match bc {
        BoundaryCondition::Dirichlet => -1.0,
        BoundaryCondition::Neumann => 1.0,
    };
    let mut a = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        a[(i, i)] = 2.0 / h2 + kbar2;
        if i > 0 {
            a[(i, i - 1)] = -1.0 / h2;
        } else {
            a[(i, i)] -= ghost / h2;
        }
        if i + 1 < n {
            a[(i, i + 1)] = -1.0 / h2;
        } else {
            a[(i, i)] -= ghost / h2;
        }
    }
    let x = a.lu().solve(&DVector::from_column_slice(source)).expect("nonsingular");
    x.iter().copied().collect()
}

/// Smooth source built from a few random sine modes, the same function at every resolution.
fn smooth_source(seed: u64) -> impl Fn(f64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amps: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
    move |x| amps.iter().enumerate().map(|(m, a)| a * ((m + 1) as f64 * PI * x).sin()).sum()
}

#[test]
fn torus_poisson_examples() {
    let modes = TorusModes::new(1, 3).unwrap();
    let zero = poisson_torus(&modes, &vec![ZERO; modes.len()]).unwrap();
    assert!(zero.field.iter().flatten().all(|x| *x == ZERO));
    let mut rho = vec![ZERO; modes.len()];
    let k1 = modes.index_of([1, 0, 0]).unwrap();
    rho[k1] = c(1.0);
    let s = poisson_torus(&modes, &rho).unwrap();
    assert_eq!(s.phi[k1], c(1.0));
    assert_eq!(s.field[k1], [C64::new(0.0, -1.0), ZERO, ZERO]);
    assert_eq!(s.phi[modes.zero_index()], ZERO);
    assert!(poisson_torus(&modes, &rho[1..]).is_err());
}

#[test]
fn torus_test_potential_examples() {
    let p = torus_test_potentials([2.0, 0.0, 0.0], c(4.0), [c(4.0), c(8.0), ZERO], c(-2.0)).unwrap();
    assert_eq!(p.phi_c, vec![c(1.0)]);
    assert_eq!(p.phi_b[1], vec![c(2.0)]);
    assert_eq!(p.phi_a_plus, vec![c(-0.5)]);
    assert!(torus_test_potentials([0.0; 3], c(1.0), [ZERO; 3], ZERO).is_err());
}

#[test]
fn channel_boundary_table() {
    use BoundaryCondition::{Dirichlet, Neumann};
    assert_eq!(BoundaryTable::velocity(DerivativeKind::Normal, 0), Neumann);
    assert_eq!(BoundaryTable::velocity(DerivativeKind::Normal, 1), Dirichlet);
    assert_eq!(BoundaryTable::velocity(DerivativeKind::Normal, 2), Dirichlet);
    for d in [DerivativeKind::Identity, DerivativeKind::Transverse] {
        assert_eq!(BoundaryTable::velocity(d, 0), Dirichlet);
        assert_eq!(BoundaryTable::velocity(d, 1), Neumann);
        assert_eq!(BoundaryTable::temperature(d), Neumann);
        assert_eq!(BoundaryTable::density(d), Neumann);
    }
    assert_eq!(BoundaryTable::temperature(DerivativeKind::Normal), Dirichlet);
    assert_eq!(BoundaryTable::density(DerivativeKind::Normal), Dirichlet);
}

#[test]
fn channel_density_potentials_are_antisymmetric() {
    let grid = ChannelGrid::new(16, 0).unwrap();
    let src: Vec<C64> = grid.nodes().iter().map(|&x| c((PI * x).sin())).collect();
    let p = channel_test_potentials(&grid, 1.0, DerivativeKind::Normal, &src, [&src, &src, &src], &src).unwrap();
    for (a, b) in p.phi_a_plus.iter().zip(&p.phi_a_minus) {
        assert_eq!(*a, -b);
    }
}

#[test]
fn neumann_eigenfunction() {
    let grid = ChannelGrid::new(64, 0).unwrap();
    let src: Vec<C64> = grid.nodes().iter().map(|&x| c((PI * x).cos())).collect();
    let u = elliptic_solve_1d(&grid, 0.0, &src, BoundaryCondition::Neumann).unwrap();
    let exact: Vec<f64> = grid.nodes().iter().map(|&x| (PI * x).cos() / (PI * PI)).collect();
    assert!(max_err(&u, &exact) < 2e-4);
    assert!(grid.average(&u).norm() < 1e-15);
}

#[test]
fn dirichlet_manufactured_solution() {
    let grid = ChannelGrid::new(64, 0).unwrap();
    let src: Vec<C64> = grid.nodes().iter().map(|&x| c((PI * PI + 1.0) * (PI * x).sin())).collect();
    let u = elliptic_solve_1d(&grid, 1.0, &src, BoundaryCondition::Dirichlet).unwrap();
    let exact: Vec<f64> = grid.nodes().iter().map(|&x| (PI * x).sin()).collect();
    assert!(max_err(&u, &exact) < 2e-3);
}

#[test]
fn second_order_convergence_in_all_configurations() {
    let configs = [
        (BoundaryCondition::Dirichlet, 0.0),
        (BoundaryCondition::Dirichlet, 1.0),
        (BoundaryCondition::Neumann, 0.0),
        (BoundaryCondition::Neumann, 4.0),
    ];
    for (bc, kbar2) in configs {
        let exact = |x: f64| match bc {
            BoundaryCondition::Dirichlet => (PI * x).sin(),
            BoundaryCondition::Neumann => (PI * x).cos(),
        };
        let errors: Vec<f64> = [32, 64, 128, 256]
            .iter()
            .map(|&n| {
                let grid = ChannelGrid::new(n, 0).unwrap();
                let src: Vec<C64> = grid.nodes().iter().map(|&x| c((PI * PI + kbar2) * exact(x))).collect();
                let u = elliptic_solve_1d(&grid, kbar2, &src, bc).unwrap();
                let want: Vec<f64> = grid.nodes().iter().map(|&x| exact(x)).collect();
                max_err(&u, &want)
            })
            .collect();
        for w in errors.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!((order - 2.0).abs() < 0.1, "{bc:?} kbar2 = {kbar2}: {errors:?}");
        }
    }
}

#[test]
fn tridiagonal_solver_matches_dense_factorization() {
    let f = smooth_source(3);
    for bc in [BoundaryCondition::Dirichlet, BoundaryCondition::Neumann] {
        let grid = ChannelGrid::new(40, 0).unwrap();
        let src: Vec<f64> = grid.nodes().iter().map(|&x| f(x)).collect();
        let csrc: Vec<C64> = src.iter().map(|&x| c(x)).collect();
        let u = elliptic_solve_1d(&grid, 2.0, &csrc, bc).unwrap();
        let dense = dense_solve(&grid, 2.0, &src, bc);
        assert!(max_err(&u, &dense) < 1e-12);
    }
}

#[test]
fn elliptic_constant_is_stable_under_refinement() {
    let f = smooth_source(7);
    for kbar2 in [0.0, 1.0, 4.0] {
        let constant = |n: usize| {
            let grid = ChannelGrid::new(n, 0).unwrap();
            let src: Vec<C64> = grid.nodes().iter().map(|&x| c(f(x))).collect();
            let u: Vec<C64> = dense_solve(&grid, kbar2, &src.iter().map(|x| x.re).collect::<Vec<_>>(), BoundaryCondition::Dirichlet)
                .into_iter()
                .map(c)
                .collect();
            elliptic_bound_ratio(&grid, kbar2, &u, &src, BoundaryCondition::Dirichlet)
        };
        let grid = ChannelGrid::new(32, 0).unwrap();
        let src: Vec<C64> = grid.nodes().iter().map(|&x| c(f(x))).collect();
        let u = elliptic_solve_1d(&grid, kbar2, &src, BoundaryCondition::Dirichlet).unwrap();
        let coarse = elliptic_bound_ratio(&grid, kbar2, &u, &src, BoundaryCondition::Dirichlet);
        let reference = constant(128);
        assert!((coarse - reference).abs() < 0.05 * reference, "kbar2 = {kbar2}: {coarse} vs {reference}");
    }
}

#[test]
fn incompatible_neumann_source_is_rejected() {
    let grid = ChannelGrid::new(16, 0).unwrap();
    let src = vec![c(1.0); 16];
    assert!(matches!(
        elliptic_solve_1d(&grid, 0.0, &src, BoundaryCondition::Neumann),
        Err(vpl_core::Error::Incompatible(_))
    ));
    // A transverse wavenumber makes the problem coercive again.
    assert!(elliptic_solve_1d(&grid, 1.0, &src, BoundaryCondition::Neumann).is_ok());
    assert!(elliptic_solve_1d(&grid, -1.0, &src, BoundaryCondition::Dirichlet).is_err());
}

#[test]
fn channel_poisson_solves_each_transverse_mode() {
    let grid = ChannelGrid::new(32, 1).unwrap();
    let mut rho = Vec::new();
    for m in 0..grid.transverse_len() {
        let k2 = grid.kbar_squared(m);
        rho.extend(grid.nodes().iter().map(|&x| c((PI * PI + k2) * (PI * x).cos())));
    }
    let phi = poisson_channel(&grid, &rho).unwrap();
    let exact: Vec<f64> = grid.nodes().iter().map(|&x| (PI * x).cos()).collect();
    for m in 0..grid.transverse_len() {
        assert!(max_err(&phi[m * 32..(m + 1) * 32], &exact) < 5e-3);
    }
    assert!(ChannelGrid::new(7, 0).is_err());
    assert!(ChannelGrid::new(16, 3).is_err());
}

#[test]
fn channel_nodes_avoid_the_walls_and_are_mirrored() {
    let grid = ChannelGrid::new(10, 0).unwrap();
    let x = grid.nodes();
    for i in 0..10 {
        assert_eq!(x[i], -x[9 - i]);
        assert!(x[i].abs() < 1.0);
    }
}

#[test]
fn specular_reflection_carries_no_wall_flux() {
    // sum_v v1 (|f(v)|^2 + |f(R v)|^2) = 0 for any edge profile: the reflected
    // ghost returns exactly the outgoing flux.
    let g = VelocityGrid::new(10, 5.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let f: Vec<C64> = (0..g.len()).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    let mut flux = 0.0;
    let mut scale = 0.0;
    for q in 0..g.len() {
        let v1 = g.nodes()[q][0];
        let ghost = f[g.reflect(q, 0)];
        flux += v1 * (f[q].norm_sqr() + ghost.norm_sqr());
        scale += v1.abs() * f[q].norm_sqr();
    }
    assert!(flux.abs() <= 1e-14 * scale);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn gauss_law_holds_for_random_charges(dim in 1usize..4, k_max in 1usize..4, seed in any::<u64>()) {
        let modes = TorusModes::new(dim, k_max).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho: Vec<C64> = (0..modes.len()).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let s = poisson_torus(&modes, &rho).unwrap();
        prop_assert!(gauss_law_defect(&modes, &s, &rho) <= 1e-15);
        prop_assert_eq!(s.phi[modes.zero_index()], ZERO);
    }

    #[test]
    fn conjugate_symmetric_data_is_real(dim in 1usize..4, k_max in 1usize..3, seed in any::<u64>(), x in prop::array::uniform3(-3.0f64..3.0)) {
        let modes = TorusModes::new(dim, k_max).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut coeffs = vec![ZERO; modes.len()];
        for i in modes.half_set() {
            let z = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let j = modes.negated(i);
            if i == j {
                coeffs[i] = c(z.re);
            } else {
                coeffs[i] = z;
                coeffs[j] = z.conj();
            }
        }
        prop_assert_eq!(modes.conjugate_symmetry_defect(&coeffs), 0.0);
        let value = modes.evaluate(&coeffs, x);
        prop_assert!(value.im.abs() <= 1e-13 * (1.0 + value.re.abs()));
        for i in 0..modes.len() {
            prop_assert_eq!(modes.negated(modes.negated(i)), i);
        }
    }
}
