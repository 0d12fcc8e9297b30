//! Monte Carlo paths of the catalog processes with draw-down event detection.
//!
//! Jumps are placed exactly (exponential inter-arrival times, exact sizes);
//! the Gaussian part is advanced on a grid. All requested grid sizes observe
//! one path simulated on the finest grid, so the per-level estimates are
//! coupled and their Richardson combination has small variance.

mod estimate;

pub use estimate::{
    creep_fraction, estimate_potential_histogram, estimate_transform, extrapolation_weights, ks_critical_value,
    ks_statistic, BinEstimate, Estimate, LevelEstimates, Selection, TransformParams, MIN_EVENTS,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::drawdown_identities::DrawdownFunction;
use crate::error::{Error, Result};
use crate::levy_model::LevyModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    UpExit,
    DrawdownJump,
    DrawdownCreep,
    Hit,
    LowerExit,
    Censored,
}

impl EventKind {
    pub fn name(self) -> &'static str {
        match self {
            EventKind::UpExit => "up_exit",
            EventKind::DrawdownJump => "drawdown_jump",
            EventKind::DrawdownCreep => "drawdown_creep",
            EventKind::Hit => "hit",
            EventKind::LowerExit => "lower_exit",
            EventKind::Censored => "censored",
        }
    }
}

/// First event of one path at one grid size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EventRecord {
    pub kind: EventKind,
    pub time: f64,
    pub x_at: f64,
    pub max_at: f64,
    /// Distance below the barrier after a crossing jump, 0 otherwise.
    pub overshoot: f64,
}

/// Which first event ends a path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Mode {
    /// Stop at `tau_b^+`, at the draw-down time, or below `lower` if given.
    Drawdown { lower: Option<f64> },
    /// Stop at `tau_b^+`, below `lower`, or when `X` meets `xi(max X)`;
    /// jumps below the barrier do not stop the path.
    Hitting { lower: f64 },
}

impl Default for Mode {
    fn default() -> Self {
        Mode::Drawdown { lower: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Grid sizes, strictly decreasing; each must be an integer multiple
    /// of the last one.
    pub refinement_levels: Vec<f64>,
    pub n_paths: usize,
    pub seed: u64,
    /// Kill each path at an independent `Exp(q)` time.
    #[serde(default)]
    pub q_killing: Option<f64>,
    /// Paths still running at this time are censored.
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default)]
    pub mode: Mode,
    /// Worker threads; `None` uses the global pool.
    #[serde(default, skip_serializing)]
    pub threads: Option<usize>,
}

fn default_horizon() -> f64 {
    1e4
}

impl SimConfig {
    pub fn new(dt: f64, n_paths: usize, seed: u64) -> Self {
        Self::with_levels(vec![dt], n_paths, seed)
    }

    pub fn with_levels(refinement_levels: Vec<f64>, n_paths: usize, seed: u64) -> Self {
        Self {
            refinement_levels,
            n_paths,
            seed,
            q_killing: None,
            horizon: default_horizon(),
            mode: Mode::default(),
            threads: None,
        }
    }

    /// The finest grid size.
    pub fn dt(&self) -> f64 {
        *self.refinement_levels.last().unwrap_or(&f64::NAN)
    }

    pub fn validate(&self) -> Result<()> {
        let lv = &self.refinement_levels;
        if lv.is_empty() {
            return Err(Error::Config("refinement_levels must not be empty".into()));
        }
        if self.n_paths == 0 {
            return Err(Error::Config("n_paths must be >= 1".into()));
        }
        if lv.iter().any(|&h| !(h > 0.0 && h.is_finite())) {
            return Err(Error::Config("every dt must be finite and > 0".into()));
        }
        if lv.windows(2).any(|w| !(w[0] > w[1])) {
            return Err(Error::Config("refinement_levels must be strictly decreasing".into()));
        }
        let fine = self.dt();
        for &h in lv {
            let m = h / fine;
            if (m - m.round()).abs() > 1e-9 * m {
                return Err(Error::Config(format!("dt {h} is not an integer multiple of the finest dt {fine}")));
            }
        }
        if let Some(q) = self.q_killing {
            if !(q > 0.0 && q.is_finite()) {
                return Err(Error::Config(format!("killing rate must be > 0, got {q}")));
            }
        }
        if !(self.horizon > 0.0) {
            return Err(Error::Config("horizon must be > 0".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be >= 1".into()));
        }
        Ok(())
    }

    fn multiples(&self) -> Vec<u64> {
        let fine = self.dt();
        self.refinement_levels.iter().map(|h| (h / fine).round() as u64).collect()
    }
}

/// Records of every path at one grid size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelRecords {
    pub dt: f64,
    pub records: Vec<EventRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathEnsemble {
    pub config: SimConfig,
    x: f64,
    b: f64,
    has_gaussian: bool,
    /// One entry per refinement level, in the order of the config.
    pub levels: Vec<LevelRecords>,
}

impl PathEnsemble {
    pub fn start(&self) -> f64 {
        self.x
    }

    pub fn upper(&self) -> f64 {
        self.b
    }

    pub fn has_gaussian(&self) -> bool {
        self.has_gaussian
    }

    pub fn n_paths(&self) -> usize {
        self.config.n_paths
    }

    /// Records at the finest grid.
    pub fn finest(&self) -> &[EventRecord] {
        &self.levels.last().expect("at least one level").records
    }

    /// Fraction of paths of each kind at the finest grid.
    pub fn kind_fractions(&self) -> Vec<(EventKind, f64)> {
        use EventKind::*;
        let n = self.n_paths() as f64;
        [UpExit, DrawdownJump, DrawdownCreep, Hit, LowerExit, Censored]
            .into_iter()
            .map(|k| (k, self.finest().iter().filter(|r| r.kind == k).count() as f64 / n))
            .collect()
    }
}

struct Path<'a> {
    model: &'a LevyModel,
    xi: &'a DrawdownFunction,
    b: f64,
    mode: Mode,
}

/// Per-level observer state.
#[derive(Clone, Copy)]
struct Level {
    every: u64,
    t0: f64,
    x0: f64,
    max: f64,
    /// `X < xi(max)`; only possible in hitting mode.
    below: bool,
    done: Option<EventRecord>,
}

impl<'a> Path<'a> {
    fn lower(&self) -> Option<f64> {
        match self.mode {
            Mode::Drawdown { lower } => lower,
            Mode::Hitting { lower } => Some(lower),
        }
    }

    fn hitting(&self) -> bool {
        matches!(self.mode, Mode::Hitting { .. })
    }

    /// Continuous move of one observer from `(t0, x0)` to `(t1, x1)`.
    fn observe_diffusion(&self, lv: &mut Level, t1: f64, x1: f64) {
        let (t0, x0) = (lv.t0, lv.x0);
        let max1 = lv.max.max(x1);
        let mut best: Option<(f64, EventKind)> = None;
        let mut take = |f: f64, k: EventKind| {
            if best.map_or(true, |(g, _)| f < g) {
                best = Some((f, k));
            }
        };
        if x1 >= self.b {
            take((self.b - x0) / (x1 - x0), EventKind::UpExit);
        }
        let g0 = x0 - self.xi.eval(lv.max);
        let g1 = x1 - self.xi.eval(max1);
        if self.hitting() {
            if (g0 < 0.0) != (g1 < 0.0) {
                take(g0 / (g0 - g1), EventKind::Hit);
            }
        } else if g1 < 0.0 {
            take(g0 / (g0 - g1), EventKind::DrawdownCreep);
        }
        if let Some(c) = self.lower() {
            if x1 < c {
                take((x0 - c) / (x0 - x1), EventKind::LowerExit);
            }
        }
        if let Some((f, kind)) = best {
            let f = f.clamp(0.0, 1.0);
            let time = t0 + f * (t1 - t0);
            let (x_at, max_at) = match kind {
                EventKind::UpExit => (self.b, self.b),
                _ => {
                    let xa = x0 + f * (x1 - x0);
                    (xa, lv.max.max(xa))
                }
            };
            lv.done = Some(EventRecord { kind, time, x_at, max_at, overshoot: 0.0 });
            return;
        }
        lv.t0 = t1;
        lv.x0 = x1;
        lv.max = max1;
        lv.below = g1 < 0.0;
    }

    /// A downward jump to `x1` at time `t`.
    fn observe_jump(&self, lv: &mut Level, t: f64, x1: f64) {
        let level = self.xi.eval(lv.max);
        if !self.hitting() && x1 < level {
            lv.done = Some(EventRecord {
                kind: EventKind::DrawdownJump,
                time: t,
                x_at: x1,
                max_at: lv.max,
                overshoot: level - x1,
            });
            return;
        }
        if let Some(c) = self.lower() {
            if x1 < c {
                lv.done = Some(EventRecord {
                    kind: EventKind::LowerExit,
                    time: t,
                    x_at: x1,
                    max_at: lv.max,
                    overshoot: c - x1,
                });
                return;
            }
        }
        lv.t0 = t;
        lv.x0 = x1;
        lv.below = x1 < level;
    }

    fn jump_size<R: Rng>(&self, rng: &mut R) -> f64 {
        let parts = self.model.jump_parts();
        let total: f64 = parts.iter().map(|p| p.0).sum();
        let mut u = rng.random::<f64>() * total;
        let mut alpha = parts[parts.len() - 1].1;
        for &(rate, a) in parts {
            if u < rate {
                alpha = a;
                break;
            }
            u -= rate;
        }
        rng.sample::<f64, _>(Exp::new(alpha).expect("alpha > 0"))
    }

    fn run_gaussian(&self, x: f64, cfg: &SimConfig, rng: &mut ChaCha8Rng) -> Vec<EventRecord> {
        let fine = cfg.dt();
        let (mu, sigma) = (self.model.mu(), self.model.sigma());
        let rate = self.model.jump_rate();
        let arrival = (rate > 0.0).then(|| Exp::new(rate).expect("rate > 0"));
        let kill = cfg.q_killing.map(|q| rng.sample::<f64, _>(Exp::new(q).expect("q > 0")));
        let stop = kill.unwrap_or(f64::INFINITY).min(cfg.horizon);
        let mut next_jump = arrival.map_or(f64::INFINITY, |e| rng.sample::<f64, _>(e));
        let mut levels: Vec<Level> = cfg
            .multiples()
            .into_iter()
            .map(|every| Level { every, t0: 0.0, x0: x, max: x, below: false, done: None })
            .collect();
        let (mut t, mut now, mut k) = (0.0f64, x, 0u64);
        loop {
            let grid = (k + 1) as f64 * fine;
            let te = grid.min(next_jump).min(stop);
            let h = te - t;
            if h > 0.0 {
                let z: f64 = StandardNormal.sample(rng);
                now += mu * h + sigma * h.sqrt() * z;
            }
            let on_grid = te == grid;
            let at_jump = te == next_jump && !on_grid;
            let at_stop = te == stop;
            if on_grid {
                k += 1;
            }
            for lv in levels.iter_mut().filter(|l| l.done.is_none()) {
                if at_jump || at_stop || (on_grid && k % lv.every == 0) {
                    self.observe_diffusion(lv, te, now);
                }
            }
            if at_stop {
                for lv in levels.iter_mut().filter(|l| l.done.is_none()) {
                    lv.done = Some(EventRecord {
                        kind: EventKind::Censored,
                        time: te,
                        x_at: lv.x0,
                        max_at: lv.max,
                        overshoot: 0.0,
                    });
                }
            } else if at_jump {
                now -= self.jump_size(rng);
                for lv in levels.iter_mut().filter(|l| l.done.is_none()) {
                    self.observe_jump(lv, te, now);
                }
                next_jump = te + arrival.map_or(f64::INFINITY, |e| rng.sample::<f64, _>(e));
            }
            t = te;
            if levels.iter().all(|l| l.done.is_some()) {
                break;
            }
        }
        levels.into_iter().map(|l| l.done.expect("finished")).collect()
    }

    /// Without a Gaussian part the path is piecewise linear with slope
    /// `mu > 0`, so every event time is exact and all levels coincide.
    fn run_drift(&self, x: f64, cfg: &SimConfig, rng: &mut ChaCha8Rng) -> EventRecord {
        let mu = self.model.mu();
        let rate = self.model.jump_rate();
        let arrival = (rate > 0.0).then(|| Exp::new(rate).expect("rate > 0"));
        let kill = cfg.q_killing.map(|q| rng.sample::<f64, _>(Exp::new(q).expect("q > 0")));
        let stop = kill.unwrap_or(f64::INFINITY).min(cfg.horizon);
        let mut next_jump = arrival.map_or(f64::INFINITY, |e| rng.sample::<f64, _>(e));
        let (mut t, mut now, mut max) = (0.0f64, x, x);
        let mut below = false;
        loop {
            let t_up = t + (self.b - now) / mu;
            let t_hit = if below { t + (self.xi.eval(max) - now) / mu } else { f64::INFINITY };
            let te = next_jump.min(stop).min(t_up).min(t_hit);
            let moved = now + mu * (te - t);
            if te == t_up {
                return EventRecord { kind: EventKind::UpExit, time: te, x_at: self.b, max_at: self.b, overshoot: 0.0 };
            }
            if te == t_hit {
                return EventRecord { kind: EventKind::Hit, time: te, x_at: moved, max_at: max, overshoot: 0.0 };
            }
            now = moved;
            max = max.max(now);
            t = te;
            if te == stop {
                return EventRecord { kind: EventKind::Censored, time: te, x_at: now, max_at: max, overshoot: 0.0 };
            }
            now -= self.jump_size(rng);
            let level = self.xi.eval(max);
            if !self.hitting() && now < level {
                return EventRecord {
                    kind: EventKind::DrawdownJump,
                    time: te,
                    x_at: now,
                    max_at: max,
                    overshoot: level - now,
                };
            }
            if let Some(c) = self.lower() {
                if now < c {
                    return EventRecord { kind: EventKind::LowerExit, time: te, x_at: now, max_at: max, overshoot: c - now };
                }
            }
            below = now < level;
            next_jump = te + arrival.map_or(f64::INFINITY, |e| rng.sample::<f64, _>(e));
        }
    }
}

/// Simulates `config.n_paths` paths started at `x` until the first event.
///
/// Path `i` draws from the ChaCha8 stream `i` of `config.seed`, so the
/// ensemble does not depend on the number of worker threads.
pub fn simulate(
    model: &LevyModel,
    xi: &DrawdownFunction,
    x: f64,
    b: f64,
    config: &SimConfig,
) -> Result<PathEnsemble> {
    config.validate()?;
    xi.validate_on(x, b)?;
    let lower = match config.mode {
        Mode::Drawdown { lower } => lower,
        Mode::Hitting { lower } => Some(lower),
    };
    if let Some(c) = lower {
        if !(c < xi.range_on(x, b).0) || !c.is_finite() {
            return Err(Error::Config(format!("lower barrier {c} must lie below xi on [x, b]")));
        }
    }
    if model.sigma() == 0.0 && !(model.mu() > 0.0) {
        return Err(Error::Config("a path without Gaussian part needs mu > 0".into()));
    }
    let path = Path { model, xi, b, mode: config.mode };
    let n_levels = config.refinement_levels.len();
    let run = |i: usize| -> Vec<EventRecord> {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(i as u64);
        if x >= b {
            let r = EventRecord { kind: EventKind::UpExit, time: 0.0, x_at: b, max_at: b, overshoot: 0.0 };
            return vec![r; n_levels];
        }
        if model.sigma() == 0.0 {
            vec![path.run_drift(x, config, &mut rng); n_levels]
        } else {
            path.run_gaussian(x, config, &mut rng)
        }
    };
    let per_path: Vec<Vec<EventRecord>> = match config.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(|| (0..config.n_paths).into_par_iter().map(run).collect()),
        None => (0..config.n_paths).into_par_iter().map(run).collect(),
    };
    let levels = config
        .refinement_levels
        .iter()
        .enumerate()
        .map(|(j, &dt)| LevelRecords { dt, records: per_path.iter().map(|p| p[j]).collect() })
        .collect();
    Ok(PathEnsemble {
        config: config.clone(),
        x,
        b,
        has_gaussian: model.sigma() > 0.0,
        levels,
    })
}

#[cfg(test)]
mod tests;
