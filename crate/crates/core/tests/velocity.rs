use proptest::prelude::*;
use std::f64::consts::PI;
use vpl_core::velocity::{discrete_moment, gaussian_moment_1d, l2v_inner, normalized_moment_1d};
use vpl_core::{VelocityField, VelocityGrid, C64};

// Reference sums from tools/oracles.py (numpy, independent of this crate).
const MASS_N16: f64 = 0.9999999972968283;
const MASS_N4: f64 = 0.46946243914243624;
const MOMENTS_N16: [f64; 6] =
    [0.9999999972968283, 0.999999961520655, 2.999998501059393, 14.999939125757416, 104.99751929911314, 944.8988027929822];

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn profile(grid: &VelocityGrid, g: impl Fn([f64; 3]) -> f64) -> VelocityField {
    VelocityField::symmetric_pair(&grid.times_sqrt_mu(g))
}

fn plus_only(grid: &VelocityGrid, g: impl Fn([f64; 3]) -> f64) -> VelocityField {
    let p = grid.times_sqrt_mu(g);
    VelocityField::pair(&p, &vec![C64::new(0.0, 0.0); p.len()]).unwrap()
}

#[test]
fn fine_grid_mass_matches_reference() {
    let g = VelocityGrid::new(16, 6.0).unwrap();
    assert_eq!(g.len(), 4096);
    assert!(rel(g.maxwellian_mass(), MASS_N16) < 1e-13);
    assert!((g.maxwellian_mass() - 1.0).abs() < 1e-6);
}

#[test]
fn coarse_grid_mass_matches_reference() {
    // Four cells of width 3 resolve the Gaussian poorly: the sum is far from 1.
    let g = VelocityGrid::new(4, 6.0).unwrap();
    assert_eq!(g.len(), 64);
    assert!(rel(g.maxwellian_mass(), MASS_N4) < 1e-13);
}

#[test]
fn odd_and_degenerate_grids_are_rejected() {
    assert!(VelocityGrid::new(5, 6.0).is_err());
    assert!(VelocityGrid::new(2, 6.0).is_err());
    assert!(VelocityGrid::new(16, 0.0).is_err());
    assert!(VelocityGrid::new(16, -1.0).is_err());
    assert!(VelocityGrid::new(16, f64::NAN).is_err());
}

#[test]
fn analytic_gaussian_moments() {
    let s = (2.0 * PI).sqrt();
    assert_eq!(gaussian_moment_1d(0).unwrap(), s);
    assert_eq!(gaussian_moment_1d(2).unwrap(), s);
    assert_eq!(gaussian_moment_1d(4).unwrap(), 3.0 * s);
    assert_eq!(gaussian_moment_1d(10).unwrap(), 945.0 * s);
    assert!(gaussian_moment_1d(3).is_err());
    assert!(gaussian_moment_1d(-2).is_err());
}

#[test]
fn discrete_moments_match_reference_sums() {
    let g = VelocityGrid::new(16, 6.0).unwrap();
    for (i, &want) in MOMENTS_N16.iter().enumerate() {
        let got = discrete_moment(&g, [2 * i as u32, 0, 0]);
        assert!(rel(got, want) < 1e-12, "p = {}: {got} vs {want}", 2 * i);
    }
}

#[test]
fn moment_identities_of_the_macroscopic_step() {
    let g = VelocityGrid::new(16, 6.0).unwrap();
    let m = |p: [u32; 3]| discrete_moment(&g, p);
    // int v_m^2 v_j^2 |v|^2 mu = 7 for m != j
    let seven = m([4, 2, 0]) + m([2, 4, 0]) + m([2, 2, 2]);
    assert!(rel(seven, 7.0) < 1e-4);
    // int v_m^2 (v_m^2 - 1) mu = 2
    assert!(rel(m([4, 0, 0]) - m([2, 0, 0]), 2.0) < 1e-4);
    // int v_m^2 (v_j^2 - 1) mu = 0
    assert!((m([2, 2, 0]) - m([2, 0, 0])).abs() < 1e-6);
}

#[test]
fn inner_product_examples() {
    let g = VelocityGrid::new(16, 6.0).unwrap();
    let root = plus_only(&g, |_| 1.0);
    let v1 = plus_only(&g, |v| v[0]);
    let v2 = plus_only(&g, |v| v[1]);
    assert!((l2v_inner(&g, &root, &root).unwrap() - 1.0).norm() < 1e-6);
    assert!(l2v_inner(&g, &v1, &v2).unwrap().norm() < 1e-15);
    assert!((l2v_inner(&g, &v1, &v1).unwrap() - 1.0).norm() < 1e-4);
    // Pairs sum over species.
    let pair = profile(&g, |_| 1.0);
    assert!((l2v_inner(&g, &pair, &pair).unwrap() - 2.0).norm() < 2e-6);
    let other = VelocityGrid::new(8, 6.0).unwrap();
    assert!(l2v_inner(&other, &pair, &pair).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn odd_moments_vanish_exactly(half in 2usize..16, v_max in 3.0f64..9.0, p in 0u32..6, q in 0u32..6, r in 0u32..6) {
        let g = VelocityGrid::new(2 * half, v_max).unwrap();
        let p1 = 2 * p + 1;
        prop_assert_eq!(discrete_moment(&g, [p1, 2 * q, 2 * r]), 0.0);
        prop_assert_eq!(discrete_moment(&g, [2 * q, p1, r]), 0.0);
        prop_assert_eq!(discrete_moment(&g, [q, r, p1]), 0.0);
    }

    #[test]
    fn even_moments_up_to_eight_within_1e4(half in 8usize..20, v_max in 6.0f64..8.0, p in 0u32..5) {
        let g = VelocityGrid::new(2 * half, v_max).unwrap();
        let exact = normalized_moment_1d(2 * p);
        let got = discrete_moment(&g, [2 * p, 0, 0]);
        prop_assert!(rel(got, exact) <= 1e-4, "n = {}, v_max = {}, p = {}: {}", 2 * half, v_max, 2 * p, got);
    }

    #[test]
    fn inner_product_is_hermitian_and_positive(seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let g = VelocityGrid::new(6, 4.0).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut draw = || VelocityField::symmetric_pair(
            &(0..g.len()).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect::<Vec<_>>(),
        );
        let (f, h) = (draw(), draw());
        let fh = l2v_inner(&g, &f, &h).unwrap();
        let hf = l2v_inner(&g, &h, &f).unwrap();
        prop_assert!((fh - hf.conj()).norm() <= 1e-12 * fh.norm().max(1.0));
        let ff = l2v_inner(&g, &f, &f).unwrap();
        prop_assert!(ff.re >= 0.0 && ff.im == 0.0);
    }
}
