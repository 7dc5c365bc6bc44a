use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vpl_core::macroscopic::{
    moment_functionals, moment_residuals, project, reconstruct, transport_pairing, MacroCoeffs, ModeDerivative,
    MomentSnapshot, MomentWeights, PairingConstants, TestFunction, RESIDUAL_EQUATIONS,
};
use vpl_core::velocity::l2v_inner;
use vpl_core::{VelocityField, VelocityGrid, C64};

const ZERO: C64 = C64::new(0.0, 0.0);

fn grid() -> VelocityGrid {
    VelocityGrid::new(16, 6.0).unwrap()
}

fn r2(v: [f64; 3]) -> f64 {
    v[0] * v[0] + v[1] * v[1] + v[2] * v[2]
}

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn random_coeffs(rng: &mut impl Rng) -> MacroCoeffs {
    let mut z = || C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    MacroCoeffs { a_plus: z(), a_minus: z(), b: [z(), z(), z()], c: z() }
}

fn random_field(g: &VelocityGrid, rng: &mut impl Rng) -> VelocityField {
    let values = (0..2 * g.len())
        .map(|q| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * g.sqrt_mu()[q % g.len()].sqrt())
        .collect();
    VelocityField { species: vpl_core::velocity::Species::Pair, values }
}

fn close(a: C64, b: f64, tol: f64) -> bool {
    (a - b).norm() <= tol
}

#[test]
fn projection_examples() {
    let g = grid();
    let zero = vec![ZERO; g.len()];
    let root = g.times_sqrt_mu(|_| 1.0);
    let (k, _) = project(&g, &VelocityField::pair(&root, &zero).unwrap()).unwrap();
    assert!(close(k.a_plus, 1.0, 1e-6) && k.a_minus == ZERO && k.b.iter().all(|x| x.norm() < 1e-15) && k.c.norm() < 1e-6);

    let (k, _) = project(&g, &VelocityField::symmetric_pair(&g.times_sqrt_mu(|v| v[0]))).unwrap();
    assert!(close(k.b[0], 1.0, 1e-4));
    assert!(k.a_plus.norm() < 1e-15 && k.a_minus.norm() < 1e-15 && k.c.norm() < 1e-15);
    assert!(k.b[1].norm() < 1e-15 && k.b[2].norm() < 1e-15);

    // c = 2 int (|v|^2 - 3)^2 mu / 12 with int (|v|^2 - 3)^2 mu = 6.
    let (k, _) = project(&g, &VelocityField::symmetric_pair(&g.times_sqrt_mu(|v| r2(v) - 3.0))).unwrap();
    assert!(close(k.c, 1.0, 1e-4));
    assert!(k.a_plus.norm() < 1e-6 && k.a_minus.norm() < 1e-6);
}

#[test]
fn heat_flux_functional_is_normalized() {
    let g = grid();
    let f = VelocityField::symmetric_pair(&g.times_sqrt_mu(|v| v[0] * (r2(v) - 5.0)));
    let m = moment_functionals(&g, &f).unwrap();
    for s in 0..2 {
        assert!(close(m.lambda[s][0], 1.0, 1e-4), "{:?}", m.lambda[s]);
        assert!(m.lambda[s][1].norm() < 1e-12 && m.lambda[s][2].norm() < 1e-12);
    }
    assert!(m.flux.iter().all(|x| x.norm() < 1e-15));
}

#[test]
fn functionals_vanish_on_macroscopic_states() {
    let g = grid();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..4 {
        let k = random_coeffs(&mut rng);
        let m = moment_functionals(&g, &reconstruct(&g, &k)).unwrap();
        let scale = k.magnitude();
        for s in 0..2 {
            assert!(m.theta[s].iter().flatten().all(|x| x.norm() < 1e-5 * scale));
            assert!(m.lambda[s].iter().all(|x| x.norm() < 1e-5 * scale));
        }
        assert!(m.flux.iter().all(|x| x.norm() < 1e-5 * scale));
    }
}

#[test]
fn pairing_constants_at_sixteen_cells() {
    let g = grid();
    let measured = PairingConstants::measure(&g).as_array();
    let exact = PairingConstants::exact().as_array();
    for (m, e) in measured.iter().zip(exact) {
        let err = if e == 0.0 { m.abs() } else { (m - e).abs() / e };
        assert!(err <= 1e-4, "{m} vs {e}");
    }
}

#[test]
fn transport_pairings_isolate_single_coefficients() {
    let g = grid();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let k = [1.0, -2.0, 0.5];
    for _ in 0..3 {
        let coeffs = random_coeffs(&mut rng);
        let t = transport_pairing(&g, k, &coeffs, TestFunction::Temperature).unwrap();
        assert!((t - 10.0).norm() < 1e-3, "{t}");
        for which in [TestFunction::DensitySum, TestFunction::DensityDifference] {
            let d = transport_pairing(&g, k, &coeffs, which).unwrap();
            assert!((d + 5.0).norm() < 1e-3, "{d}");
        }
    }
    assert!(transport_pairing(&g, [0.0; 3], &random_coeffs(&mut rng), TestFunction::Temperature).is_err());
}

#[test]
fn residuals_reject_short_series_and_vanish_for_zero() {
    let wave = [[1.0, 0.0, 0.0]];
    let d = ModeDerivative { wavevectors: &wave };
    let frames = vec![vec![MomentSnapshot::default()]; 2];
    assert!(moment_residuals(&frames, 0.0, 0.1, &d).is_err());
    let frames = vec![vec![MomentSnapshot::default()]; 5];
    let rows = moment_residuals(&frames, 0.0, 0.1, &d).unwrap();
    assert_eq!(rows.len(), 5 * RESIDUAL_EQUATIONS.len());
    assert!(rows.iter().all(|r| r.residual == 0.0));
}

#[test]
fn gauss_law_residual_vanishes_for_a_consistent_field() {
    let k = [2.0, 0.0, 0.0];
    let wave = [k];
    let d = ModeDerivative { wavevectors: &wave };
    let frames: Vec<Vec<MomentSnapshot>> = (0..4)
        .map(|n| {
            let charge = C64::new(0.3, -0.1) * (n as f64 + 1.0);
            let coeffs = MacroCoeffs { a_plus: charge, ..MacroCoeffs::default() };
            // i k . E = a_+ - a_-  with E parallel to k.
            let e1 = charge / C64::new(0.0, k[0]);
            vec![MomentSnapshot { coeffs, field: [e1, ZERO, ZERO], ..MomentSnapshot::default() }]
        })
        .collect();
    let rows = moment_residuals(&frames, 0.0, 0.1, &d).unwrap();
    assert!(rows.iter().filter(|r| r.equation == "poisson").all(|r| r.residual < 1e-15));
}

/// Continuity residual of the exact free-streaming solution `exp(-i v.k t) f0`.
fn free_streaming_continuity(dt: f64) -> f64 {
    let g = VelocityGrid::new(12, 6.0).unwrap();
    let w = MomentWeights::new(&g);
    let k = [1.0, 0.0, 0.0];
    let f0 = VelocityField::symmetric_pair(&g.times_sqrt_mu(|v| 1.0 + v[0] + 0.5 * (r2(v) - 3.0)));
    let frames: Vec<Vec<MomentSnapshot>> = (0..=10)
        .map(|n| {
            let t = n as f64 * dt;
            let mut f = f0.clone();
            let len = g.len();
            for (q, x) in f.values.iter_mut().enumerate() {
                let v = g.nodes()[q % len];
                *x *= C64::from_polar(1.0, -(v[0] * k[0] + v[1] * k[1] + v[2] * k[2]) * t);
            }
            vec![MomentSnapshot { coeffs: w.coefficients(&f), functionals: w.functionals(&f), ..MomentSnapshot::default() }]
        })
        .collect();
    let wave = [k];
    let rows = moment_residuals(&frames, 0.0, dt, &ModeDerivative { wavevectors: &wave }).unwrap();
    rows.iter().filter(|r| r.equation == "continuity_sum").map(|r| r.residual).fold(0.0, f64::max)
}

#[test]
fn free_streaming_continuity_residual_is_second_order() {
    let coarse = free_streaming_continuity(0.02);
    let fine = free_streaming_continuity(0.01);
    let order = (coarse / fine).log2();
    assert!((order - 2.0).abs() < 0.1, "{coarse} -> {fine}: order {order}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn remainder_is_orthogonal_to_invariants_and_projection_is_idempotent(seed in any::<u64>()) {
        let g = VelocityGrid::new(12, 6.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_field(&g, &mut rng);
        let (k, micro) = project(&g, &f).unwrap();
        let zero = vec![ZERO; g.len()];
        let root = g.times_sqrt_mu(|_| 1.0);
        let mut invariants = vec![VelocityField::pair(&root, &zero).unwrap(), VelocityField::pair(&zero, &root).unwrap()];
        invariants.extend((0..3).map(|j| VelocityField::symmetric_pair(&g.times_sqrt_mu(move |v| v[j]))));
        invariants.push(VelocityField::symmetric_pair(&g.times_sqrt_mu(r2)));
        let scale = l2v_inner(&g, &f, &f).unwrap().re.sqrt();
        for e in &invariants {
            let norm_e = l2v_inner(&g, e, e).unwrap().re.sqrt();
            prop_assert!(l2v_inner(&g, &micro, e).unwrap().norm() <= 1e-5 * scale * norm_e);
        }
        let (again, _) = project(&g, &micro).unwrap();
        prop_assert!(again.magnitude() <= 1e-5 * k.magnitude().max(scale));
    }

    #[test]
    fn species_swap_exchanges_densities(seed in any::<u64>()) {
        let g = VelocityGrid::new(8, 6.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_field(&g, &mut rng);
        let swapped = VelocityField::pair(f.minus(), f.plus()).unwrap();
        let (a, _) = project(&g, &f).unwrap();
        let (b, _) = project(&g, &swapped).unwrap();
        prop_assert_eq!(a.a_plus, b.a_minus);
        prop_assert_eq!(a.a_minus, b.a_plus);
        for j in 0..3 {
            prop_assert!((a.b[j] - b.b[j]).norm() <= 1e-15 * a.magnitude());
        }
        prop_assert!((a.c - b.c).norm() <= 1e-15 * a.magnitude());
        let _ = c(0.0);
    }
}
