//! Dissipation norm of the Landau operator and the time-dependent velocity weight.

use super::kernel::sym_index;
use super::tensors::CollisionTensors;
use crate::error::{check_len, invalid, Result};
use crate::velocity::{AxisStencil, VelocityField, VelocityGrid, C64};

/// Parameters of `w(t, v) = exp(q <v>^theta / (1 + t)^N)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct WeightParams {
    pub q: f64,
    pub theta: f64,
    /// Time-decay exponent `N`.
    pub decay: f64,
}

impl WeightParams {
    pub fn new(q: f64, theta: f64, decay: f64) -> Result<Self> {
        if !(1.0..=2.0).contains(&theta) {
            return Err(invalid("theta", format!("must lie in [1, 2], got {theta}")));
        }
        if !(decay >= 0.0) {
            return Err(invalid("N", format!("must be nonnegative, got {decay}")));
        }
        if !(q >= 0.0) {
            return Err(invalid("q", format!("must be nonnegative, got {q}")));
        }
        if theta == 2.0 && q >= 0.125 {
            return Err(invalid("q", format!("must satisfy q < 1/8 when theta = 2, got {q}")));
        }
        Ok(Self { q, theta, decay })
    }

    /// The trivial weight `w = 1`.
    pub fn unweighted() -> Self {
        Self { q: 0.0, theta: 2.0, decay: 0.0 }
    }

    /// Weight regime by potential: `theta = -gamma` for `gamma < -1`, no weight otherwise.
    pub fn for_gamma(gamma: f64, q: f64, decay: f64) -> Result<Self> {
        if gamma < -1.0 {
            Self::new(q, -gamma, decay)
        } else {
            Ok(Self::unweighted())
        }
    }

    pub fn is_trivial(&self) -> bool {
        self.q == 0.0
    }

    pub fn value(&self, t: f64, v: [f64; 3]) -> f64 {
        weight_w(t, v, self)
    }

    /// Weight tabulated on the grid at time `t`.
    pub fn on_grid(&self, grid: &VelocityGrid, t: f64) -> Vec<f64> {
        grid.nodes().iter().map(|&v| weight_w(t, v, self)).collect()
    }
}

/// `exp(q <v>^theta / (1 + t)^N)` with `<v> = sqrt(1 + |v|^2)`.
pub fn weight_w(t: f64, v: [f64; 3], p: &WeightParams) -> f64 {
    if p.q == 0.0 {
        return 1.0;
    }
    let bracket = (1.0 + v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    (p.q * bracket.powf(p.theta) / (1.0 + t).powf(p.decay)).exp()
}

/// Potential exponent and optional per-node weight for the dissipation norm.
#[derive(Debug, Clone, PartialEq)]
pub struct DissipationNormSpec {
    pub gamma: f64,
    pub weight: Option<Vec<f64>>,
}

impl DissipationNormSpec {
    pub fn unweighted(gamma: f64) -> Self {
        Self { gamma, weight: None }
    }
}

fn bracket_sq(v: &[f64; 3]) -> f64 {
    1.0 + v[0] * v[0] + v[1] * v[1] + v[2] * v[2]
}

/// Squared dissipation norm
/// `|w <v>^{g/2} P_v grad f|^2 + |w <v>^{(g+2)/2} (I - P_v) grad f|^2 + |w <v>^{(g+2)/2} f|^2`,
/// summed over species. `P_v` is the projection onto `v/|v|`, taken as zero at `v = 0`.
pub fn l2d_norm_sq(spec: &DissipationNormSpec, grid: &VelocityGrid, f: &VelocityField) -> Result<f64> {
    check_len(grid.len(), f.nodes())?;
    if let Some(w) = &spec.weight {
        check_len(grid.len(), w.len())?;
    }
    let d = AxisStencil::plain(grid);
    let species: Vec<&[C64]> = match f.species {
        crate::velocity::Species::Pair => vec![f.plus(), f.minus()],
        _ => vec![&f.values[..]],
    };
    let g = spec.gamma;
    let mut total = 0.0;
    for comp in species {
        let grad = d.gradient(comp);
        for (p, v) in grid.nodes().iter().enumerate() {
            let w2 = spec.weight.as_ref().map_or(1.0, |w| w[p] * w[p]);
            let b2 = bracket_sq(v);
            let r2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
            let gr = [grad[0][p], grad[1][p], grad[2][p]];
            let grad_sq = gr.iter().map(|x| x.norm_sqr()).sum::<f64>();
            let radial_sq = if r2 > 0.0 {
                let proj = (gr[0] * v[0] + gr[1] * v[1] + gr[2] * v[2]) / r2.sqrt();
                proj.norm_sqr()
            } else {
                0.0
            };
            let tangential_sq = (grad_sq - radial_sq).max(0.0);
            total += w2
                * (b2.powf(0.5 * g) * radial_sq
                    + b2.powf(0.5 * (g + 2.0)) * (tangential_sq + comp[p].norm_sqr()));
        }
    }
    Ok(total * grid.weight())
}

/// Squared `sigma`-form of the dissipation:
/// `sum w^2 (sigma^{ij} d_i f conj(d_j f) + sigma^{ij} (v_i/2)(v_j/2) |f|^2)`.
pub fn sigma_form_sq(
    t: &CollisionTensors,
    grid: &VelocityGrid,
    weight: Option<&[f64]>,
    f: &VelocityField,
) -> Result<f64> {
    check_len(grid.len(), f.nodes())?;
    let d = AxisStencil::plain(grid);
    let species: Vec<&[C64]> = match f.species {
        crate::velocity::Species::Pair => vec![f.plus(), f.minus()],
        _ => vec![&f.values[..]],
    };
    let mut total = 0.0;
    for comp in species {
        let grad = d.gradient(comp);
        for (p, v) in grid.nodes().iter().enumerate() {
            let w2 = weight.map_or(1.0, |w| w[p] * w[p]);
            let s = &t.sigma_ij[p];
            let mut acc = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    let sij = s[sym_index(i, j)];
                    acc += sij * (grad[i][p] * grad[j][p].conj()).re;
                    acc += sij * 0.25 * v[i] * v[j] * comp[p].norm_sqr();
                }
            }
            total += w2 * acc;
        }
    }
    Ok(total * grid.weight())
}
