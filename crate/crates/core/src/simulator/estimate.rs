//! Estimators over a [`PathEnsemble`], with Richardson extrapolation across
//! the refinement levels.

use serde::Serialize;

use super::{simulate, EventKind, EventRecord, PathEnsemble, SimConfig};
use crate::drawdown_identities::DrawdownFunction;
use crate::error::{Error, Result};
use crate::levy_model::LevyModel;

/// Fewest records of the requested kind accepted by [`estimate_transform`].
pub const MIN_EVENTS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

impl Estimate {
    pub fn z_score(&self, target: f64) -> f64 {
        if self.se > 0.0 {
            (self.mean - target) / self.se
        } else if self.mean == target {
            0.0
        } else {
            f64::INFINITY.copysign(self.mean - target)
        }
    }
}

/// One estimate per refinement level plus their extrapolated combination.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelEstimates {
    pub dt_levels: Vec<f64>,
    pub per_level: Vec<Estimate>,
    pub weights: Vec<f64>,
    pub extrapolated: Estimate,
}

/// Record kinds an estimator averages over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    UpExit,
    /// Draw-down by a jump or by creeping.
    Drawdown,
    Creep,
    Jump,
    Hit,
    LowerExit,
    Censored,
}

impl Selection {
    pub fn matches(self, kind: EventKind) -> bool {
        use EventKind as K;
        match self {
            Selection::UpExit => kind == K::UpExit,
            Selection::Drawdown => matches!(kind, K::DrawdownJump | K::DrawdownCreep),
            Selection::Creep => kind == K::DrawdownCreep,
            Selection::Jump => kind == K::DrawdownJump,
            Selection::Hit => kind == K::Hit,
            Selection::LowerExit => kind == K::LowerExit,
            Selection::Censored => kind == K::Censored,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Selection::UpExit => "up_exit",
            Selection::Drawdown => "drawdown",
            Selection::Creep => "creep",
            Selection::Jump => "jump",
            Selection::Hit => "hit",
            Selection::LowerExit => "lower_exit",
            Selection::Censored => "censored",
        }
    }
}

/// Integrand `exp(-u time + v x_at + r max_at)` on the selected records.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransformParams {
    pub u: f64,
    pub v: f64,
    pub r: f64,
}

impl TransformParams {
    pub fn killed(q: f64) -> Self {
        Self { u: q, v: 0.0, r: 0.0 }
    }

    fn eval(&self, rec: &EventRecord) -> f64 {
        (-self.u * rec.time + self.v * rec.x_at + self.r * rec.max_at).exp()
    }
}

/// Weights `w` with `sum w_i h_i^{k/2} = [k == 0]` for `k < n`, cancelling
/// error terms in powers of `sqrt(dt)` up to order `(n-1)/2`.
pub fn extrapolation_weights(levels: &[f64]) -> Vec<f64> {
    let n = levels.len();
    let scale = levels.iter().cloned().fold(0.0, f64::max);
    // Augmented system: rows k, columns i.
    let mut a: Vec<Vec<f64>> = (0..n)
        .map(|k| {
            let mut row: Vec<f64> = levels.iter().map(|h| (h / scale).powf(0.5 * k as f64)).collect();
            row.push(if k == 0 { 1.0 } else { 0.0 });
            row
        })
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .expect("non-empty");
        a.swap(col, piv);
        for row in 0..n {
            if row != col {
                let f = a[row][col] / a[col][col];
                for c in col..=n {
                    a[row][c] -= f * a[col][c];
                }
            }
        }
    }
    (0..n).map(|i| a[i][n] / a[i][i]).collect()
}

fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 32 {
        return v.iter().sum();
    }
    let (l, r) = v.split_at(v.len() / 2);
    pairwise_sum(l) + pairwise_sum(r)
}

fn mean_se(values: &[f64]) -> Estimate {
    let n = values.len() as f64;
    let mean = pairwise_sum(values) / n;
    if values.len() < 2 {
        return Estimate { mean, se: 0.0 };
    }
    let dev: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    Estimate { mean, se: (pairwise_sum(&dev) / (n - 1.0) / n).sqrt() }
}

/// Per-path values `f(level, record)` combined into level and extrapolated
/// estimates; the extrapolated standard error uses the per-path combination.
fn combine<F>(ens: &PathEnsemble, f: F) -> LevelEstimates
where
    F: Fn(&EventRecord) -> f64,
{
    let dt_levels: Vec<f64> = ens.levels.iter().map(|l| l.dt).collect();
    let weights = extrapolation_weights(&dt_levels);
    let per_vals: Vec<Vec<f64>> = ens.levels.iter().map(|l| l.records.iter().map(&f).collect()).collect();
    let per_level = per_vals.iter().map(|v| mean_se(v)).collect();
    let combined: Vec<f64> = (0..ens.n_paths())
        .map(|i| weights.iter().zip(&per_vals).map(|(w, v)| w * v[i]).sum())
        .collect();
    LevelEstimates {
        dt_levels,
        per_level,
        weights,
        extrapolated: mean_se(&combined),
    }
}

/// `E[exp(-u time + v X + r max X); kind in selection]`; other records,
/// including censored ones, contribute 0.
pub fn estimate_transform(ens: &PathEnsemble, which: Selection, params: TransformParams) -> Result<LevelEstimates> {
    let found = ens.finest().iter().filter(|r| which.matches(r.kind)).count();
    if found < MIN_EVENTS {
        return Err(Error::InsufficientEvents {
            kind: which.name().into(),
            found,
            required: MIN_EVENTS,
        });
    }
    Ok(combine(ens, |r| if which.matches(r.kind) { params.eval(r) } else { 0.0 }))
}

/// `E[e^{-q tau_xi}; draw-down by creeping]`, identically 0 without a
/// Gaussian part.
pub fn creep_fraction(ens: &PathEnsemble, q: f64) -> Result<LevelEstimates> {
    if !ens.has_gaussian() {
        return Ok(combine(ens, |_| 0.0));
    }
    estimate_transform(ens, Selection::Creep, TransformParams::killed(q))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinEstimate {
    pub lo: f64,
    pub hi: f64,
    /// Estimates `P(X(e_q) in [lo, hi), e_q < first exit)`.
    pub mass: LevelEstimates,
}

/// Kills paths at an independent `Exp(q)` time and bins the position of
/// the surviving ones by consecutive `edges`. Each bin mass estimates
/// `q` times the potential density integrated over the bin.
pub fn estimate_potential_histogram(
    model: &LevyModel,
    xi: &DrawdownFunction,
    x: f64,
    b: f64,
    q: f64,
    config: &SimConfig,
    edges: &[f64],
) -> Result<Vec<BinEstimate>> {
    if edges.len() < 2 || edges.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Config("bin edges must be at least two increasing values".into()));
    }
    let mut cfg = config.clone();
    cfg.q_killing = Some(q);
    cfg.horizon = f64::INFINITY;
    let ens = simulate(model, xi, x, b, &cfg)?;
    Ok(edges
        .windows(2)
        .map(|w| {
            let (lo, hi) = (w[0], w[1]);
            BinEstimate {
                lo,
                hi,
                mass: combine(&ens, |r| {
                    (r.kind == EventKind::Censored && r.x_at >= lo && r.x_at < hi) as u8 as f64
                }),
            }
        })
        .collect())
}

/// Kolmogorov-Smirnov distance between the empirical law of `samples` and
/// a continuous `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter().enumerate().fold(0.0, |acc, (i, &v)| {
        let f = cdf(v);
        acc.max(f - i as f64 / n).max((i + 1) as f64 / n - f)
    })
}

/// Asymptotic critical value of the one-sample KS statistic at level
/// `alpha`, with Stephens' finite-sample adjustment.
pub fn ks_critical_value(n: usize, alpha: f64) -> f64 {
    let c = (-0.5 * (0.5 * alpha).ln()).sqrt();
    let rn = (n as f64).sqrt();
    c / (rn + 0.12 + 0.11 / rn)
}
