//! Norms and functionals of a run, their time folds, decay-rate fits and the
//! conservation and macroscopic verification reports.
//!
//! A "mode" is a Fourier site on the torus and a transverse wavenumber on the
//! channel; channel per-mode norms are `L^2` over the `x_1` cells. Every `L^1_k`
//! quantity is the sum of per-mode magnitudes over all modes (partners
//! included), so they match the Wiener-type norms of the continuous setting.

use crate::collision::{l2d_norm_sq, DissipationNormSpec};
use crate::error::{invalid, Result};
use crate::evolution::{GlobalMoments, Layout, Solver, SpectralState};
use crate::velocity::{norm_sq, VelocityField, C64};
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Instantaneous norms of one state.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FunctionalRecord {
    pub t: f64,
    /// `sum_k |f(k)|_{L^2_v}`.
    pub l1k_l2v: f64,
    /// `sum_k |E(k)|`.
    pub l1k_e: f64,
    /// `sum_k |w f(k)|_{L^2_v}` with `w = w(t, v)`.
    pub l1k_l2v_weighted: f64,
    /// `sum_k |{I-P} f(k)|_{L^2_D}`.
    pub l1k_l2d: f64,
    pub l1k_l2d_weighted: f64,
    /// Same as `l1k_l2v` with one spatial derivative included (`|alpha| <= 1`).
    pub l1k_h1_l2v: f64,
    pub l1k_h1_e: f64,
    pub mode_l2v: Vec<f64>,
    pub mode_l2v_weighted: Vec<f64>,
    pub mode_l2d: Vec<f64>,
    pub mode_l2d_weighted: Vec<f64>,
    pub mode_field: Vec<f64>,
    /// `|(a_+, a_-, b, c)|` per mode.
    pub mode_macro: Vec<f64>,
    pub moments: GlobalMoments,
    /// Spatial mean of the temperature coefficient `c`.
    pub c0: f64,
    /// Largest deviation of the stored potential from a fresh Poisson solve.
    pub poisson_defect: f64,
}

/// Modes as groups of sites with the quadrature weight of each site.
fn mode_groups(layout: &Layout) -> Vec<(Vec<usize>, f64)> {
    match layout {
        Layout::Torus(m) => (0..m.len()).map(|s| (vec![s], 1.0)).collect(),
        Layout::Channel(c) => (0..c.transverse_len())
            .map(|mode| ((0..c.n_x1()).map(|i| c.site(i, mode)).collect(), c.spacing()))
            .collect(),
    }
}

/// Per-site norms computed once per state.
struct SiteNorms {
    l2v: f64,
    l2v_w: f64,
    l2d: f64,
    l2d_w: f64,
    field: f64,
    macro_sq: f64,
}

impl FunctionalRecord {
    /// Measures every functional of `state` at weight parameters of the solver.
    pub fn measure(solver: &Solver, state: &SpectralState) -> Result<Self> {
        let grid = &solver.grid;
        let len = grid.len();
        let w = grid.weight();
        let weight = solver.config.weight.on_grid(grid, state.t);
        let weight_pair: Vec<f64> = weight.iter().chain(weight.iter()).copied().collect();
        let plain = DissipationNormSpec::unweighted(solver.config.gamma);
        let weighted = DissipationNormSpec { gamma: solver.config.gamma, weight: Some(weight.clone()) };
        let layout = &solver.layout;

        let mut per_site: Vec<Option<SiteNorms>> = (0..state.sites.len()).map(|_| None).collect();
        for s in 0..state.sites.len() {
            if !layout.is_representative(s) {
                continue;
            }
            let f = &state.sites[s];
            let coeffs = solver.weights.coefficients(&VelocityField {
                species: crate::velocity::Species::Pair,
                values: f.clone(),
            });
            let mut micro =
                VelocityField { species: crate::velocity::Species::Pair, values: f.clone() };
            micro.axpy(C64::new(-1.0, 0.0), &solver.weights.reconstruct(&coeffs));
            let wf: Vec<C64> = f.iter().zip(&weight_pair).map(|(x, &a)| x * a).collect();
            let e = state.field.field[s];
            per_site[s] = Some(SiteNorms {
                l2v: norm_sq(w, f).sqrt(),
                l2v_w: norm_sq(w, &wf).sqrt(),
                l2d: l2d_norm_sq(&plain, grid, &micro)?.sqrt(),
                l2d_w: l2d_norm_sq(&weighted, grid, &micro)?.sqrt(),
                field: e.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt(),
                macro_sq: coeffs.magnitude().powi(2),
            });
            debug_assert_eq!(f.len(), 2 * len);
        }
        let norms = |s: usize| -> &SiteNorms {
            per_site[s].as_ref().or(per_site[layout.partner(s)].as_ref()).expect("representative measured")
        };

        let mut rec = FunctionalRecord { t: state.t, ..Default::default() };
        for (sites, dx) in mode_groups(layout) {
            let sum = |g: &dyn Fn(&SiteNorms) -> f64| sites.iter().map(|&s| g(norms(s)).powi(2) * dx).sum::<f64>().sqrt();
            let l2v = sum(&|n| n.l2v);
            let l2v_w = sum(&|n| n.l2v_w);
            let l2d = sum(&|n| n.l2d);
            let l2d_w = sum(&|n| n.l2d_w);
            let field = sum(&|n| n.field);
            let mac = sites.iter().map(|&s| norms(s).macro_sq * dx).sum::<f64>().sqrt();
            let k2 = {
                let k = layout.wavevector(sites[0]);
                k[0] * k[0] + k[1] * k[1] + k[2] * k[2]
            };
            // Derivative part: wavenumber factor plus, on the channel, x_1 differences.
            let (grad_f, grad_e) = if sites.len() > 1 {
                let mut gf = 0.0;
                let mut ge = 0.0;
                for pair in sites.windows(2) {
                    let (a, b) = (&state.sites[pair[0]], &state.sites[pair[1]]);
                    let diff: Vec<C64> = b.iter().zip(a).map(|(x, y)| (x - y) / dx).collect();
                    gf += norm_sq(w, &diff) * dx;
                    let (ea, eb) = (state.field.field[pair[0]], state.field.field[pair[1]]);
                    ge += (0..3).map(|i| ((eb[i] - ea[i]) / dx).norm_sqr()).sum::<f64>() * dx;
                }
                (gf, ge)
            } else {
                (0.0, 0.0)
            };
            rec.l1k_l2v += l2v;
            rec.l1k_l2v_weighted += l2v_w;
            rec.l1k_l2d += l2d;
            rec.l1k_l2d_weighted += l2d_w;
            rec.l1k_e += field;
            rec.l1k_h1_l2v += ((1.0 + k2) * l2v * l2v + grad_f).sqrt();
            rec.l1k_h1_e += ((1.0 + k2) * field * field + grad_e).sqrt();
            rec.mode_l2v.push(l2v);
            rec.mode_l2v_weighted.push(l2v_w);
            rec.mode_l2d.push(l2d);
            rec.mode_l2d_weighted.push(l2d_w);
            rec.mode_field.push(field);
            rec.mode_macro.push(mac);
        }

        rec.moments = solver.global_moments(state);
        let mean = layout.mean_sites();
        rec.c0 = mean
            .iter()
            .map(|&s| solver.weights.coefficients(&state.pair(s)).c.re)
            .sum::<f64>()
            / mean.len() as f64;
        let fresh = solver.solve_field(&state.sites)?;
        rec.poisson_defect =
            fresh.phi.iter().zip(&state.field.phi).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        Ok(rec)
    }
}

/// Scalar series addressable by name (CSV ids and decay fits).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Functional {
    L1kL2v,
    L1kE,
    /// `l1k_l2v + l1k_e`, the quantity whose exponential decay is fitted.
    Total,
    L1kL2vWeighted,
    /// `l1k_l2v_weighted + l1k_e`.
    TotalWeighted,
    L1kL2d,
    L1kL2dWeighted,
    /// `l1k_h1_l2v + l1k_h1_e`.
    H1Total,
    Kinetic,
    FieldEnergy,
    MassPlus,
    MassMinus,
    Momentum1,
    Momentum2,
    Momentum3,
    C0,
    PoissonDefect,
}

impl Functional {
    pub const ALL: [Functional; 17] = [
        Self::L1kL2v,
        Self::L1kE,
        Self::Total,
        Self::L1kL2vWeighted,
        Self::TotalWeighted,
        Self::L1kL2d,
        Self::L1kL2dWeighted,
        Self::H1Total,
        Self::Kinetic,
        Self::FieldEnergy,
        Self::MassPlus,
        Self::MassMinus,
        Self::Momentum1,
        Self::Momentum2,
        Self::Momentum3,
        Self::C0,
        Self::PoissonDefect,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Self::L1kL2v => "l1k_l2v",
            Self::L1kE => "l1k_e",
            Self::Total => "total",
            Self::L1kL2vWeighted => "l1k_l2v_weighted",
            Self::TotalWeighted => "total_weighted",
            Self::L1kL2d => "l1k_l2d",
            Self::L1kL2dWeighted => "l1k_l2d_weighted",
            Self::H1Total => "h1_total",
            Self::Kinetic => "kinetic",
            Self::FieldEnergy => "field_energy",
            Self::MassPlus => "mass_plus",
            Self::MassMinus => "mass_minus",
            Self::Momentum1 => "momentum_1",
            Self::Momentum2 => "momentum_2",
            Self::Momentum3 => "momentum_3",
            Self::C0 => "c0",
            Self::PoissonDefect => "poisson_defect",
        }
    }

    pub fn value(self, r: &FunctionalRecord) -> f64 {
        match self {
            Self::L1kL2v => r.l1k_l2v,
            Self::L1kE => r.l1k_e,
            Self::Total => r.l1k_l2v + r.l1k_e,
            Self::L1kL2vWeighted => r.l1k_l2v_weighted,
            Self::TotalWeighted => r.l1k_l2v_weighted + r.l1k_e,
            Self::L1kL2d => r.l1k_l2d,
            Self::L1kL2dWeighted => r.l1k_l2d_weighted,
            Self::H1Total => r.l1k_h1_l2v + r.l1k_h1_e,
            Self::Kinetic => r.moments.kinetic,
            Self::FieldEnergy => r.moments.field,
            Self::MassPlus => r.moments.mass_plus,
            Self::MassMinus => r.moments.mass_minus,
            Self::Momentum1 => r.moments.momentum[0],
            Self::Momentum2 => r.moments.momentum[1],
            Self::Momentum3 => r.moments.momentum[2],
            Self::C0 => r.c0,
            Self::PoissonDefect => r.poisson_defect,
        }
    }
}

impl std::str::FromStr for Functional {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.id() == s)
            .ok_or_else(|| invalid("functional", format!("unknown functional id `{s}`")))
    }
}

/// Trapezoid rule on possibly nonuniform samples.
pub fn trapezoid(times: &[f64], values: &[f64]) -> f64 {
    times.windows(2).zip(values.windows(2)).map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1])).sum()
}

/// Running maximum of a sequence.
pub fn running_max(values: &[f64]) -> Vec<f64> {
    values
        .iter()
        .scan(f64::NEG_INFINITY, |m, &v| {
            *m = m.max(v);
            Some(*m)
        })
        .collect()
}

/// Recorded functionals of one run, in time order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsSeries {
    /// Specular-wall runs do not conserve the normal momentum.
    pub channel: bool,
    pub records: Vec<FunctionalRecord>,
}

impl DiagnosticsSeries {
    pub fn new(channel: bool) -> Self {
        Self { channel, records: Vec::new() }
    }

    pub fn push(&mut self, r: FunctionalRecord) {
        self.records.push(r);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.t).collect()
    }

    pub fn values(&self, f: Functional) -> Vec<f64> {
        self.records.iter().map(|r| f.value(r)).collect()
    }

    fn modes(&self) -> usize {
        self.records.first().map_or(0, |r| r.mode_l2v.len())
    }

    fn mode_series(&self, pick: impl Fn(&FunctionalRecord) -> &[f64], mode: usize) -> Vec<f64> {
        self.records.iter().map(|r| pick(r)[mode]).collect()
    }

    /// `sum_k sup_t e^{delta t} |f(k)|`: the norm order `L^1_k L^inf_T`.
    fn sup_fold(&self, delta: f64, pick: impl Fn(&FunctionalRecord) -> &[f64]) -> f64 {
        let times = self.times();
        (0..self.modes())
            .map(|m| {
                let series = self.mode_series(&pick, m);
                times.iter().zip(&series).map(|(t, v)| (delta * t).exp() * v).fold(0.0, f64::max)
            })
            .sum()
    }

    /// `sum_k ( int e^{2 delta t} |f(k)|^2 dt )^{1/2}`: the norm order `L^1_k L^2_T`.
    fn l2_fold(&self, delta: f64, pick: impl Fn(&FunctionalRecord) -> &[f64]) -> f64 {
        let times = self.times();
        (0..self.modes())
            .map(|m| {
                let sq: Vec<f64> = self
                    .mode_series(&pick, m)
                    .iter()
                    .zip(&times)
                    .map(|(v, t)| (2.0 * delta * t).exp() * v * v)
                    .collect();
                trapezoid(&times, &sq).sqrt()
            })
            .sum()
    }

    /// Energy functional `|e^{delta t} f|_{L^1_k L^inf_T L^2_v} + |e^{delta t} E|_{L^1_k L^inf_T}`.
    pub fn energy_functional(&self, delta: f64, weighted: bool) -> f64 {
        let f = if weighted {
            self.sup_fold(delta, |r| &r.mode_l2v_weighted)
        } else {
            self.sup_fold(delta, |r| &r.mode_l2v)
        };
        f + self.sup_fold(delta, |r| &r.mode_field)
    }

    /// Dissipation functional: microscopic dissipation, macroscopic part and
    /// field, each in `L^1_k L^2_T` with the factor `e^{delta t}`.
    pub fn dissipation_functional(&self, delta: f64, weighted: bool) -> f64 {
        let micro = if weighted {
            self.l2_fold(delta, |r| &r.mode_l2d_weighted)
        } else {
            self.l2_fold(delta, |r| &r.mode_l2d)
        };
        micro + self.l2_fold(delta, |r| &r.mode_macro) + self.l2_fold(delta, |r| &r.mode_field)
    }

    /// Running energy and dissipation functionals at every recorded instant.
    pub fn functional_history(&self, delta: f64, weighted: bool) -> Vec<(f64, f64, f64)> {
        (1..=self.len())
            .map(|n| {
                let head = DiagnosticsSeries { channel: self.channel, records: self.records[..n].to_vec() };
                (self.records[n - 1].t, head.energy_functional(delta, weighted), head.dissipation_functional(delta, weighted))
            })
            .collect()
    }

    /// Long-format CSV `t,functional_id,value`.
    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "t,functional_id,value")?;
        for r in &self.records {
            for f in Functional::ALL {
                writeln!(out, "{:.12e},{},{:.17e}", r.t, f.id(), f.value(r))?;
            }
        }
        Ok(())
    }
}

/// Least-squares exponential rate of one functional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub functional_id: String,
    pub delta_hat: f64,
    pub window: (f64, f64),
    pub r_squared: f64,
    pub samples: usize,
}

/// Fit window skipping the initial transient.
pub fn default_window(t_end: f64) -> (f64, f64) {
    (0.2 * t_end, t_end)
}

/// Fits `log y = log A - delta t` on the samples inside `window`.
pub fn fit_decay(series: &DiagnosticsSeries, functional: Functional, window: (f64, f64)) -> Result<DecayFit> {
    let slack = 1e-9 * window.1.abs().max(1.0);
    let pts: Vec<(f64, f64)> = series
        .records
        .iter()
        .filter(|r| r.t >= window.0 - slack && r.t <= window.1 + slack)
        .map(|r| (r.t, functional.value(r)))
        .collect();
    fit_exponential(functional.id(), &pts, window)
}

/// Exponential fit of raw `(t, y)` samples.
pub fn fit_exponential(id: &str, pts: &[(f64, f64)], window: (f64, f64)) -> Result<DecayFit> {
    if pts.len() < 2 {
        return Err(invalid("window", format!("needs at least two samples, found {}", pts.len())));
    }
    if let Some(&(t, y)) = pts.iter().find(|p| !(p.1 > 0.0)) {
        return Err(invalid("functional", format!("nonpositive sample {y} at t = {t}")));
    }
    let n = pts.len() as f64;
    let mean_t = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = pts.iter().map(|p| p.1.ln()).sum::<f64>() / n;
    let stt: f64 = pts.iter().map(|p| (p.0 - mean_t).powi(2)).sum();
    let sty: f64 = pts.iter().map(|p| (p.0 - mean_t) * (p.1.ln() - mean_y)).sum();
    if stt == 0.0 {
        return Err(invalid("window", "samples share a single time"));
    }
    let slope = sty / stt;
    let ss_tot: f64 = pts.iter().map(|p| (p.1.ln() - mean_y).powi(2)).sum();
    let ss_res: f64 =
        pts.iter().map(|p| (p.1.ln() - mean_y - slope * (p.0 - mean_t)).powi(2)).sum();
    let scale = pts.iter().map(|p| p.1.ln().abs()).fold(1.0, f64::max);
    let r_squared = if ss_tot <= (1e-13 * scale).powi(2) * n {
        1.0
    } else {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    };
    Ok(DecayFit { functional_id: id.to_string(), delta_hat: -slope, window, r_squared, samples: pts.len() })
}

/// Drift of one conservation law over a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LawDrift {
    pub law: String,
    pub initial: f64,
    pub max_drift: f64,
    /// Magnitude against which the drift is measured.
    pub scale: f64,
    pub relative: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ConservationReport {
    pub laws: Vec<LawDrift>,
}

impl ConservationReport {
    pub fn max_relative(&self) -> f64 {
        self.laws.iter().map(|l| l.relative).fold(0.0, f64::max)
    }

    pub fn get(&self, law: &str) -> Option<&LawDrift> {
        self.laws.iter().find(|l| l.law == law)
    }
}

/// Per-law maximal drift relative to the initial magnitude scale.
///
/// Each law is a linear functional `(f, psi)` of the mean mode, so its natural
/// scale is `|psi|_{L^2_v} * sum_k |f(0, k)|`. The energy law adds the initial
/// field energy and the temperature identity divides the energy scale by 12.
/// Channel runs omit the normal momentum.
pub fn conservation_report(series: &DiagnosticsSeries) -> ConservationReport {
    let Some(first) = series.records.first() else {
        return ConservationReport::default();
    };
    let size = first.l1k_l2v;
    let energy_scale = 30f64.sqrt() * size + first.moments.field;
    type Law = (&'static str, f64, fn(&FunctionalRecord) -> f64);
    let mut laws: Vec<Law> = vec![
        ("mass_plus", size, |r| r.moments.mass_plus),
        ("mass_minus", size, |r| r.moments.mass_minus),
        ("momentum_1", 2f64.sqrt() * size, |r| r.moments.momentum[0]),
        ("momentum_2", 2f64.sqrt() * size, |r| r.moments.momentum[1]),
        ("momentum_3", 2f64.sqrt() * size, |r| r.moments.momentum[2]),
        ("energy", energy_scale, |r| r.moments.energy()),
        ("c0_identity", energy_scale / 12.0, |r| r.c0 + r.moments.field / 12.0),
    ];
    if series.channel {
        laws.retain(|l| l.0 != "momentum_1");
    }
    let laws = laws
        .into_iter()
        .map(|(name, base, value)| {
            let initial = value(first);
            let max_drift = series.records.iter().map(|r| (value(r) - initial).abs()).fold(0.0, f64::max);
            let scale = base.max(initial.abs());
            let relative = if max_drift == 0.0 { 0.0 } else { max_drift / scale };
            LawDrift { law: name.to_string(), initial, max_drift, scale, relative }
        })
        .collect();
    ConservationReport { laws }
}

/// Both sides of the macroscopic dissipation estimate and of the `k = 0`
/// temperature estimate for one run.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MacroReport {
    /// `|(a_+, a_-, b, c)|_{L^1_k L^2_T} + |E|_{L^1_k L^2_T}`.
    pub lhs: f64,
    /// Energy functional, initial data, microscopic dissipation and the
    /// quadratic products `E_T * D_T`-type terms.
    pub rhs: f64,
    pub ratio: f64,
    /// `int |c(k=0)|^2 dt`.
    pub k0_lhs: f64,
    /// `|E|_{L^1_k L^inf_T} |E|_{L^1_k L^2_T}`.
    pub k0_rhs: f64,
    pub k0_ratio: f64,
}

fn ratio(a: f64, b: f64) -> f64 {
    if a == 0.0 && b == 0.0 {
        0.0
    } else {
        a / b
    }
}

pub fn macro_report(series: &DiagnosticsSeries) -> MacroReport {
    if series.is_empty() {
        return MacroReport::default();
    }
    let macro_l2 = series.l2_fold(0.0, |r| &r.mode_macro);
    let field_l2 = series.l2_fold(0.0, |r| &r.mode_field);
    let field_sup = series.sup_fold(0.0, |r| &r.mode_field);
    let f_sup = series.sup_fold(0.0, |r| &r.mode_l2v);
    let micro_l2 = series.l2_fold(0.0, |r| &r.mode_l2d);
    let initial = series.records[0].l1k_l2v;
    let lhs = macro_l2 + field_l2;
    let energy = f_sup + field_sup;
    let dissipation = micro_l2 + lhs;
    let rhs = energy + initial + micro_l2 + energy * dissipation;
    let times = series.times();
    let c0_sq: Vec<f64> = series.records.iter().map(|r| r.c0 * r.c0).collect();
    let k0_lhs = trapezoid(&times, &c0_sq);
    let k0_rhs = field_sup * field_l2;
    MacroReport { lhs, rhs, ratio: ratio(lhs, rhs), k0_lhs, k0_rhs, k0_ratio: ratio(k0_lhs, k0_rhs) }
}
