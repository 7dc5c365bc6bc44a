//! Macroscopic projection onto the collision invariants, the moment
//! functionals of the microscopic part, closure constants of the
//! test-function method, and residuals of the fluid-type moment systems.

use crate::error::{Error, Result};
use crate::velocity::{inner, VelocityField, VelocityGrid, C64};
use serde::{Deserialize, Serialize};

const ZERO: C64 = C64::new(0.0, 0.0);

/// Coefficients of `P f = (a_pm + v.b + (|v|^2 - 3) c) mu^{1/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MacroCoeffs {
    pub a_plus: C64,
    pub a_minus: C64,
    pub b: [C64; 3],
    pub c: C64,
}

impl MacroCoeffs {
    /// Euclidean size of `(a_+, a_-, b, c)`.
    pub fn magnitude(&self) -> f64 {
        (self.a_plus.norm_sqr()
            + self.a_minus.norm_sqr()
            + self.b.iter().map(|x| x.norm_sqr()).sum::<f64>()
            + self.c.norm_sqr())
        .sqrt()
    }
}

/// Moment functionals of the microscopic part `{I - P} f`, kept per species.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MomentFunctionals {
    /// `Theta_jm = (g, (v_j v_m - delta_jm) mu^{1/2})` for `g = {I-P} f_+` and `{I-P} f_-`.
    pub theta: [[[C64; 3]; 3]; 2],
    /// `Lambda_j = (g, (|v|^2 - 5) v_j mu^{1/2}) / 10` per species.
    pub lambda: [[C64; 3]; 2],
    /// `G = ({I-P} f . [1, -1], v mu^{1/2})`.
    pub flux: [C64; 3],
}

impl MomentFunctionals {
    /// `Theta({I-P} f . [1, 1])`.
    pub fn theta_sum(&self) -> [[C64; 3]; 3] {
        std::array::from_fn(|j| std::array::from_fn(|m| self.theta[0][j][m] + self.theta[1][j][m]))
    }

    /// `Theta({I-P} f . [1, -1])`.
    pub fn theta_difference(&self) -> [[C64; 3]; 3] {
        std::array::from_fn(|j| std::array::from_fn(|m| self.theta[0][j][m] - self.theta[1][j][m]))
    }

    /// `Lambda({I-P} f . [1, 1])`.
    pub fn lambda_sum(&self) -> [C64; 3] {
        std::array::from_fn(|j| self.lambda[0][j] + self.lambda[1][j])
    }
}

/// Tabulated moment weights (each already multiplied by `mu^{1/2}`).
#[derive(Debug, Clone)]
pub struct MomentWeights {
    pub sqrt_mu: Vec<C64>,
    pub velocity: [Vec<C64>; 3],
    pub energy: Vec<C64>,
    pub theta: [[Vec<C64>; 3]; 3],
    pub lambda: [Vec<C64>; 3],
    weight: f64,
}

impl MomentWeights {
    pub fn new(grid: &VelocityGrid) -> Self {
        let r2 = |v: [f64; 3]| v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
        Self {
            sqrt_mu: grid.times_sqrt_mu(|_| 1.0),
            velocity: std::array::from_fn(|j| grid.times_sqrt_mu(move |v| v[j])),
            energy: grid.times_sqrt_mu(|v| r2(v) - 3.0),
            theta: std::array::from_fn(|j| {
                std::array::from_fn(|m| {
                    let delta = if j == m { 1.0 } else { 0.0 };
                    grid.times_sqrt_mu(move |v| v[j] * v[m] - delta)
                })
            }),
            lambda: std::array::from_fn(|j| grid.times_sqrt_mu(move |v| (r2(v) - 5.0) * v[j])),
            weight: grid.weight(),
        }
    }

    /// `(f, weight)` for a single-species slice; weights are real so no conjugation is needed.
    #[inline]
    pub fn pair_with(&self, f: &[C64], weight: &[C64]) -> C64 {
        inner(self.weight, f, weight)
    }

    pub fn coefficients(&self, f: &VelocityField) -> MacroCoeffs {
        let (p, m) = (f.plus(), f.minus());
        let sum = f.species_sum();
        MacroCoeffs {
            a_plus: self.pair_with(p, &self.sqrt_mu),
            a_minus: self.pair_with(m, &self.sqrt_mu),
            b: std::array::from_fn(|j| 0.5 * self.pair_with(&sum, &self.velocity[j])),
            c: self.pair_with(&sum, &self.energy) / 12.0,
        }
    }

    /// `P f` for the given coefficients.
    pub fn reconstruct(&self, coeffs: &MacroCoeffs) -> VelocityField {
        let len = self.sqrt_mu.len();
        let mut values = Vec::with_capacity(2 * len);
        for a in [coeffs.a_plus, coeffs.a_minus] {
            for q in 0..len {
                let mut x = a * self.sqrt_mu[q] + coeffs.c * self.energy[q];
                for j in 0..3 {
                    x += coeffs.b[j] * self.velocity[j][q];
                }
                values.push(x);
            }
        }
        VelocityField { species: crate::velocity::Species::Pair, values }
    }

    /// Moment functionals of `{I - P} f`.
    pub fn functionals(&self, f: &VelocityField) -> MomentFunctionals {
        let coeffs = self.coefficients(f);
        let mut micro = f.clone();
        micro.axpy(C64::new(-1.0, 0.0), &self.reconstruct(&coeffs));
        self.functionals_of_micro(&micro)
    }

    /// Moment functionals of a field that is already microscopic.
    pub fn functionals_of_micro(&self, micro: &VelocityField) -> MomentFunctionals {
        let mut out = MomentFunctionals::default();
        for s in 0..2 {
            let g = micro.component(s);
            for j in 0..3 {
                for m in j..3 {
                    let v = self.pair_with(g, &self.theta[j][m]);
                    out.theta[s][j][m] = v;
                    out.theta[s][m][j] = v;
                }
                out.lambda[s][j] = self.pair_with(g, &self.lambda[j]) / 10.0;
            }
        }
        let diff = micro.species_difference();
        out.flux = std::array::from_fn(|j| self.pair_with(&diff, &self.velocity[j]));
        out
    }
}

/// Splits `f` into macroscopic coefficients and the microscopic remainder `f - P f`.
pub fn project(grid: &VelocityGrid, f: &VelocityField) -> Result<(MacroCoeffs, VelocityField)> {
    if f.nodes() != grid.len() || f.values.len() != 2 * grid.len() {
        return Err(Error::SizeMismatch { expected: 2 * grid.len(), found: f.values.len() });
    }
    let w = MomentWeights::new(grid);
    let coeffs = w.coefficients(f);
    let mut rem = f.clone();
    rem.axpy(C64::new(-1.0, 0.0), &w.reconstruct(&coeffs));
    Ok((coeffs, rem))
}

/// `P f` from coefficients.
pub fn reconstruct(grid: &VelocityGrid, coeffs: &MacroCoeffs) -> VelocityField {
    MomentWeights::new(grid).reconstruct(coeffs)
}

/// Moment functionals `Theta`, `Lambda`, `G` of `{I - P} f`.
pub fn moment_functionals(grid: &VelocityGrid, f: &VelocityField) -> Result<MomentFunctionals> {
    let (_, micro) = project(grid, f)?;
    Ok(MomentWeights::new(grid).functionals_of_micro(&micro))
}

/// Orthonormal basis (in the discrete pair inner product) of the five
/// collision invariants `[1,0] mu^{1/2}`, `[0,1] mu^{1/2}`, `[1,1] v_j mu^{1/2}`,
/// `[1,1] |v|^2 mu^{1/2}`.
pub fn invariant_basis(grid: &VelocityGrid) -> Vec<VelocityField> {
    let len = grid.len();
    let zero = vec![ZERO; len];
    let s = grid.times_sqrt_mu(|_| 1.0);
    let mut raw = vec![
        VelocityField::pair(&s, &zero).expect("len"),
        VelocityField::pair(&zero, &s).expect("len"),
    ];
    for j in 0..3 {
        raw.push(VelocityField::symmetric_pair(&grid.times_sqrt_mu(move |v| v[j])));
    }
    raw.push(VelocityField::symmetric_pair(
        &grid.times_sqrt_mu(|v| v[0] * v[0] + v[1] * v[1] + v[2] * v[2]),
    ));
    gram_schmidt(grid.weight(), raw)
}

/// Modified Gram-Schmidt in the pair inner product.
pub fn gram_schmidt(weight: f64, raw: Vec<VelocityField>) -> Vec<VelocityField> {
    let mut basis: Vec<VelocityField> = Vec::with_capacity(raw.len());
    for mut f in raw {
        for _ in 0..2 {
            for e in &basis {
                let c = inner(weight, &f.values, &e.values);
                f.axpy(-c, e);
            }
        }
        let norm = inner(weight, &f.values, &f.values).re.sqrt();
        if norm > 1e-12 {
            f.scale(1.0 / norm);
            basis.push(f);
        }
    }
    basis
}

/// Closure constants of the test-function method, evaluated by quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairingConstants {
    /// `int v_m^2 (v_m^2 - 1) mu`, ideally 2.
    pub diagonal_theta: f64,
    /// `int v_m^2 (v_j^2 - 1) mu` for `m != j`, ideally 0.
    pub off_diagonal_theta: f64,
    /// `int v_m^2 v_j^2 |v|^2 mu` for `m != j`, ideally 7.
    pub velocity_pairing: f64,
    /// `int (|v|^2 - 3)(|v|^2 - 5) v_j^2 mu`, ideally 10.
    pub temperature_pairing: f64,
    /// `-int v_j^2 (|v|^2 - 10) mu`, ideally 5.
    pub density_pairing: f64,
    /// `int v_1^2 (|v|^2 - 5)^2 mu / 10`, the normalization of `Lambda`, ideally 1.
    pub lambda_normalization: f64,
    /// `2 int (|v|^2 - 3)^2 mu / 12`, the normalization of `c`, ideally 1.
    pub temperature_normalization: f64,
}

impl PairingConstants {
    pub fn measure(grid: &VelocityGrid) -> Self {
        let r2 = |v: [f64; 3]| v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
        let mu_int = |g: &dyn Fn([f64; 3]) -> f64| {
            grid.weight() * grid.nodes().iter().zip(grid.mu()).map(|(&v, &m)| g(v) * m).sum::<f64>()
        };
        Self {
            diagonal_theta: mu_int(&|v| v[0] * v[0] * (v[0] * v[0] - 1.0)),
            off_diagonal_theta: mu_int(&|v| v[0] * v[0] * (v[1] * v[1] - 1.0)),
            velocity_pairing: mu_int(&|v| v[0] * v[0] * v[1] * v[1] * r2(v)),
            temperature_pairing: mu_int(&|v| (r2(v) - 3.0) * (r2(v) - 5.0) * v[0] * v[0]),
            density_pairing: -mu_int(&|v| v[0] * v[0] * (r2(v) - 10.0)),
            lambda_normalization: mu_int(&|v| v[0] * v[0] * (r2(v) - 5.0).powi(2)) / 10.0,
            temperature_normalization: 2.0 * mu_int(&|v| (r2(v) - 3.0).powi(2)) / 12.0,
        }
    }

    /// Exact continuum values in the same order as the fields.
    pub fn exact() -> Self {
        Self {
            diagonal_theta: 2.0,
            off_diagonal_theta: 0.0,
            velocity_pairing: 7.0,
            temperature_pairing: 10.0,
            density_pairing: 5.0,
            lambda_normalization: 1.0,
            temperature_normalization: 1.0,
        }
    }

    pub fn as_array(&self) -> [f64; 7] {
        [
            self.diagonal_theta,
            self.off_diagonal_theta,
            self.velocity_pairing,
            self.temperature_pairing,
            self.density_pairing,
            self.lambda_normalization,
            self.temperature_normalization,
        ]
    }
}

/// Test functions whose transport pairing isolates one macroscopic coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestFunction {
    /// `(|v|^2 - 5) (i v.k) phi_c mu^{1/2}` with `|k|^2 phi_c = c`, paired with the species average.
    Temperature,
    /// `(|v|^2 - 10) (i v.k) phi_a mu^{1/2}` with `|k|^2 phi_a = a_+ + a_-`, paired with `f . [1, 1]`.
    DensitySum,
    /// Same weight with `|k|^2 phi_a = a_+ - a_-`, paired with `f . [1, -1]`.
    DensityDifference,
}

/// Assembles `sum_pm s_pm (i v.k P f_pm, Phi)` by quadrature, divided by the
/// squared modulus of the isolated coefficient.
///
/// Exact continuum values: 10 for the temperature function and -5 for both
/// density functions; the other macroscopic components drop out.
pub fn transport_pairing(grid: &VelocityGrid, k: [f64; 3], coeffs: &MacroCoeffs, which: TestFunction) -> Result<C64> {
    let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
    if k2 == 0.0 {
        return Err(crate::error::invalid("k", "test functions need a nonzero mode"));
    }
    let (target, shift, signs) = match which {
        TestFunction::Temperature => (coeffs.c, 5.0, [0.5, 0.5]),
        TestFunction::DensitySum => (coeffs.a_plus + coeffs.a_minus, 10.0, [1.0, 1.0]),
        TestFunction::DensityDifference => (coeffs.a_plus - coeffs.a_minus, 10.0, [1.0, -1.0]),
    };
    if target.norm() == 0.0 {
        return Err(crate::error::invalid("coeffs", "isolated coefficient vanishes"));
    }
    let potential = target / k2;
    let pf = reconstruct(grid, coeffs);
    let i = C64::new(0.0, 1.0);
    let mut total = ZERO;
    for (q, v) in grid.nodes().iter().enumerate() {
        let vk = v[0] * k[0] + v[1] * k[1] + v[2] * k[2];
        let r2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
        let phi = (r2 - shift) * i * vk * potential * grid.sqrt_mu()[q];
        for s in 0..2 {
            let transported = i * vk * pf.component(s)[q];
            total += signs[s] * transported * phi.conj();
        }
    }
    Ok(total * grid.weight() / target.norm_sqr())
}

/// Moments of the source terms entering the right-hand sides of the moment systems.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SourceMoments {
    /// `1/2 sum_pm (g_pm, v_j mu^{1/2})`.
    pub momentum: [C64; 3],
    /// `1/12 sum_pm (g_pm, (|v|^2 - 3) mu^{1/2})`.
    pub energy: C64,
    /// `1/2 sum_pm Theta_jm(g_pm + h_pm)`.
    pub theta: [[C64; 3]; 3],
    /// `1/2 sum_pm Lambda_j(g_pm + h_pm)`.
    pub lambda: [C64; 3],
    /// `((g + L f) . [1, -1], v_j mu^{1/2})`.
    pub difference_momentum: [C64; 3],
}

impl SourceMoments {
    /// Moments of `g` (nonlinear terms) and `h = -i v.k {I-P} f + L f` (per-mode torus form).
    pub fn from_fields(w: &MomentWeights, g: &VelocityField, h: &VelocityField, lf: &VelocityField) -> Self {
        let gsum = g.species_sum();
        let mut gh = g.clone();
        gh.axpy(C64::new(1.0, 0.0), h);
        let ghsum = gh.species_sum();
        let mut gl = g.clone();
        gl.axpy(C64::new(1.0, 0.0), lf);
        let gldiff = gl.species_difference();
        Self {
            momentum: std::array::from_fn(|j| 0.5 * w.pair_with(&gsum, &w.velocity[j])),
            energy: w.pair_with(&gsum, &w.energy) / 12.0,
            theta: std::array::from_fn(|j| std::array::from_fn(|m| 0.5 * w.pair_with(&ghsum, &w.theta[j][m]))),
            lambda: std::array::from_fn(|j| 0.05 * w.pair_with(&ghsum, &w.lambda[j])),
            difference_momentum: std::array::from_fn(|j| w.pair_with(&gldiff, &w.velocity[j])),
        }
    }
}

/// Everything the moment-system residuals need at one spatial site and time.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MomentSnapshot {
    pub coeffs: MacroCoeffs,
    pub functionals: MomentFunctionals,
    pub field: [C64; 3],
    pub sources: SourceMoments,
}

/// Identifiers of the residual equations, in table order.
pub const RESIDUAL_EQUATIONS: [&str; 8] = [
    "continuity_sum",
    "momentum",
    "energy",
    "theta",
    "lambda",
    "continuity_difference",
    "flux_difference",
    "poisson",
];

/// One row of the residual table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualRow {
    pub t: f64,
    pub site: usize,
    pub equation: &'static str,
    pub residual: f64,
}

/// Spatial derivative acting on a per-site complex quantity.
pub trait SiteDerivative {
    /// `d/dx_axis` of the per-site values.
    fn derivative(&self, values: &[C64], axis: usize) -> Vec<C64>;
}

/// Torus derivative: multiplication by `i k` per mode.
pub struct ModeDerivative<'a> {
    pub wavevectors: &'a [[f64; 3]],
}

impl SiteDerivative for ModeDerivative<'_> {
    fn derivative(&self, values: &[C64], axis: usize) -> Vec<C64> {
        values.iter().zip(self.wavevectors).map(|(v, k)| v * C64::new(0.0, k[axis])).collect()
    }
}

/// Residuals of the moment systems on a uniform time series of frames.
///
/// `frames[n][site]` is the snapshot at `t0 + n dt`. Time derivatives use
/// centered differences (one-sided second order at the ends). Each row holds
/// the largest modulus over the components of one equation at one site.
pub fn moment_residuals(
    frames: &[Vec<MomentSnapshot>],
    t0: f64,
    dt: f64,
    derivative: &dyn SiteDerivative,
) -> Result<Vec<ResidualRow>> {
    if frames.len() < 3 {
        return Err(crate::error::invalid("series", "need at least three frames"));
    }
    if !(dt > 0.0) {
        return Err(crate::error::invalid("dt", "must be positive"));
    }
    let sites = frames[0].len();
    if frames.iter().any(|f| f.len() != sites) {
        return Err(crate::error::invalid("series", "frames disagree on site count"));
    }
    let steps = frames.len();
    // Quantities that appear under a time derivative, per frame and site.
    let tracked = |s: &MomentSnapshot| -> Vec<C64> {
        let c = &s.coeffs;
        let th = s.functionals.theta_sum();
        let la = s.functionals.lambda_sum();
        let mut q = vec![0.5 * (c.a_plus + c.a_minus)];
        q.extend_from_slice(&c.b);
        q.push(c.c);
        for j in 0..3 {
            for m in 0..3 {
                let delta = if j == m { 2.0 * c.c } else { ZERO };
                q.push(0.5 * th[j][m] + delta);
            }
        }
        q.extend(la.iter().map(|x| 0.5 * x));
        q.push(c.a_plus - c.a_minus);
        q.extend_from_slice(&s.functionals.flux);
        q
    };
    let series: Vec<Vec<Vec<C64>>> = frames.iter().map(|f| f.iter().map(tracked).collect()).collect();
    let time_derivative = |n: usize, site: usize, q: usize| -> C64 {
        let x = |m: usize| series[m][site][q];
        if n == 0 {
            (-3.0 * x(0) + 4.0 * x(1) - x(2)) / (2.0 * dt)
        } else if n == steps - 1 {
            (3.0 * x(n) - 4.0 * x(n - 1) + x(n - 2)) / (2.0 * dt)
        } else {
            (x(n + 1) - x(n - 1)) / (2.0 * dt)
        }
    };

    let mut rows = Vec::new();
    for (n, frame) in frames.iter().enumerate() {
        let t = t0 + n as f64 * dt;
        let per_site = |get: &dyn Fn(&MomentSnapshot) -> C64| -> Vec<C64> { frame.iter().map(get).collect() };
        let d = |get: &dyn Fn(&MomentSnapshot) -> C64, axis: usize| derivative.derivative(&per_site(get), axis);
        let div = |get: &dyn Fn(&MomentSnapshot, usize) -> C64| -> Vec<C64> {
            let mut acc = vec![ZERO; sites];
            for axis in 0..3 {
                let da = d(&|s| get(s, axis), axis);
                acc.iter_mut().zip(da).for_each(|(a, b)| *a += b);
            }
            acc
        };
        let div_b = div(&|s, j| s.coeffs.b[j]);
        let div_g = div(&|s, j| s.functionals.flux[j]);
        let div_lambda = div(&|s, j| s.functionals.lambda_sum()[j]);
        let div_e = div(&|s, j| s.field[j]);
        let grad_a_sum: [Vec<C64>; 3] = std::array::from_fn(|j| {
            d(&|s| 0.5 * (s.coeffs.a_plus + s.coeffs.a_minus) + 2.0 * s.coeffs.c, j)
        });
        let grad_a_diff: [Vec<C64>; 3] = std::array::from_fn(|j| d(&|s| s.coeffs.a_plus - s.coeffs.a_minus, j));
        let grad_c: [Vec<C64>; 3] = std::array::from_fn(|j| d(&|s| s.coeffs.c, j));
        let grad_b: [[Vec<C64>; 3]; 3] = std::array::from_fn(|m| std::array::from_fn(|j| d(&|s| s.coeffs.b[m], j)));
        // sum_m d_m Theta_jm for the species sum and difference
        let theta_div = |diff: bool| -> [Vec<C64>; 3] {
            std::array::from_fn(|j| {
                let mut acc = vec![ZERO; sites];
                for m in 0..3 {
                    let dm = d(
                        &|s| {
                            let th = if diff { s.functionals.theta_difference() } else { s.functionals.theta_sum() };
                            th[j][m]
                        },
                        m,
                    );
                    acc.iter_mut().zip(dm).for_each(|(a, b)| *a += b);
                }
                acc
            })
        };
        let theta_sum_div = theta_div(false);
        let theta_diff_div = theta_div(true);

        for (site, snap) in frame.iter().enumerate() {
            let dtq = |q: usize| time_derivative(n, site, q);
            let src = &snap.sources;
            let mut push = |equation: &'static str, values: &[C64]| {
                let residual = values.iter().map(|x| x.norm()).fold(0.0, f64::max);
                rows.push(ResidualRow { t, site, equation, residual });
            };
            push("continuity_sum", &[dtq(0) + div_b[site]]);
            let momentum: Vec<C64> = (0..3)
                .map(|j| dtq(1 + j) + grad_a_sum[j][site] + 0.5 * theta_sum_div[j][site] - src.momentum[j])
                .collect();
            push("momentum", &momentum);
            push("energy", &[dtq(4) + div_b[site] / 3.0 + div_lambda[site] * (5.0 / 6.0) - src.energy]);
            let mut theta = Vec::with_capacity(9);
            for j in 0..3 {
                for m in 0..3 {
                    theta.push(dtq(5 + 3 * j + m) + grad_b[m][j][site] + grad_b[j][m][site] - src.theta[j][m]);
                }
            }
            push("theta", &theta);
            let lambda: Vec<C64> = (0..3).map(|j| dtq(14 + j) + grad_c[j][site] - src.lambda[j]).collect();
            push("lambda", &lambda);
            push("continuity_difference", &[dtq(17) + div_g[site]]);
            let flux: Vec<C64> = (0..3)
                .map(|j| {
                    dtq(18 + j) + grad_a_diff[j][site] - 2.0 * snap.field[j] + theta_diff_div[j][site]
                        - src.difference_momentum[j]
                })
                .collect();
            push("flux_difference", &flux);
            let charge = snap.coeffs.a_plus - snap.coeffs.a_minus;
            push("poisson", &[div_e[site] - charge]);
        }
    }
    Ok(rows)
}
