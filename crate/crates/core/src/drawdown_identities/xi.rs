//! Draw-down functions `xi` and the allowed draw-down `t - xi(t)`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::roots::bisect;

/// Grid resolution used for margin checks and level-crossing scans.
const SCAN_POINTS: usize = 1000;

/// Relative margin: `t - xi(t)` must stay above `MARGIN * (b - x)`.
pub const MARGIN: f64 = 1e-8;

type Callable = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A draw-down barrier `t -> xi(t)` on running-maximum levels.
#[derive(Clone)]
pub enum DrawdownFunction {
    /// `xi(t) = c`.
    Constant(f64),
    /// `xi(t) = slope * t - d`. Slope 1 is the reflected case.
    Linear { slope: f64, d: f64 },
    /// Continuous, piecewise linear through `points` (sorted by `t`),
    /// constant beyond the first and last point.
    PiecewiseLinear(Vec<(f64, f64)>),
    /// An arbitrary function, C^1 between the declared breakpoints.
    Callable { f: Callable, breakpoints: Vec<f64> },
}

impl fmt::Debug for DrawdownFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(c) => write!(f, "Constant({c})"),
            Self::Linear { slope, d } => write!(f, "Linear {{ slope: {slope}, d: {d} }}"),
            Self::PiecewiseLinear(p) => write!(f, "PiecewiseLinear({p:?})"),
            Self::Callable { breakpoints, .. } => {
                write!(f, "Callable {{ breakpoints: {breakpoints:?} }}")
            }
        }
    }
}

/// JSON form of a draw-down function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum XiDoc {
    Constant { c: f64 },
    Linear { slope: f64, d: f64 },
    Reflected { d: f64 },
    PiecewiseLinear { points: Vec<(f64, f64)> },
}

impl DrawdownFunction {
    pub fn constant(c: f64) -> Self {
        Self::Constant(c)
    }

    pub fn linear(slope: f64, d: f64) -> Self {
        Self::Linear { slope, d }
    }

    /// `xi(t) = t - d`: draw-down of the process reflected at its maximum.
    pub fn reflected(d: f64) -> Self {
        Self::Linear { slope: 1.0, d }
    }

    pub fn piecewise_linear(mut points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Config("piecewise-linear xi needs at least one point".into()));
        }
        if points.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) {
            return Err(Error::Config("piecewise-linear xi has non-finite points".into()));
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        if points.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::Config("piecewise-linear xi has repeated abscissae".into()));
        }
        Ok(Self::PiecewiseLinear(points))
    }

    /// A general barrier; quadrature cells never straddle `breakpoints`.
    pub fn callable<F>(f: F, breakpoints: Vec<f64>) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::Callable {
            f: Arc::new(f),
            breakpoints,
        }
    }

    pub fn from_doc(doc: &XiDoc) -> Result<Self> {
        let finite = |v: f64, name: &str| {
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::Config(format!("xi parameter {name} must be finite")))
            }
        };
        Ok(match doc {
            XiDoc::Constant { c } => Self::Constant(finite(*c, "c")?),
            XiDoc::Linear { slope, d } => Self::Linear {
                slope: finite(*slope, "slope")?,
                d: finite(*d, "d")?,
            },
            XiDoc::Reflected { d } => Self::reflected(finite(*d, "d")?),
            XiDoc::PiecewiseLinear { points } => Self::piecewise_linear(points.clone())?,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: XiDoc = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_doc(&doc)
    }

    /// The JSON form, if this barrier has one.
    pub fn to_doc(&self) -> Option<XiDoc> {
        match self {
            Self::Constant(c) => Some(XiDoc::Constant { c: *c }),
            Self::Linear { slope, d } => Some(XiDoc::Linear {
                slope: *slope,
                d: *d,
            }),
            Self::PiecewiseLinear(p) => Some(XiDoc::PiecewiseLinear { points: p.clone() }),
            Self::Callable { .. } => None,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Self::Constant(c) => *c,
            Self::Linear { slope, d } => slope * t - d,
            Self::PiecewiseLinear(p) => {
                let n = p.len();
                if t <= p[0].0 {
                    return p[0].1;
                }
                if t >= p[n - 1].0 {
                    return p[n - 1].1;
                }
                let i = p.partition_point(|k| k.0 <= t) - 1;
                let (t0, x0) = p[i];
                let (t1, x1) = p[i + 1];
                x0 + (x1 - x0) * (t - t0) / (t1 - t0)
            }
            Self::Callable { f, .. } => f(t),
        }
    }

    /// `xi_bar(t) = t - xi(t)`.
    pub fn bar(&self, t: f64) -> f64 {
        match self {
            Self::Linear { slope, d } => (1.0 - slope) * t + d,
            Self::Constant(c) => t - c,
            _ => t - self.eval(t),
        }
    }

    /// Slope 1.
    pub fn is_reflected(&self) -> bool {
        matches!(self, Self::Linear { slope, .. } if *slope == 1.0)
    }

    /// Kinks of `xi` strictly inside `(a, b)`, sorted.
    pub fn breakpoints_in(&self, a: f64, b: f64) -> Vec<f64> {
        let mut out: Vec<f64> = match self {
            Self::Constant(_) | Self::Linear { .. } => Vec::new(),
            Self::PiecewiseLinear(p) => p.iter().map(|k| k.0).collect(),
            Self::Callable { breakpoints, .. } => breakpoints.clone(),
        };
        out.retain(|&t| t > a && t < b);
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    fn scan_grid(&self, a: f64, b: f64) -> Vec<f64> {
        let mut g: Vec<f64> = (0..=SCAN_POINTS)
            .map(|i| a + (b - a) * i as f64 / SCAN_POINTS as f64)
            .collect();
        g.extend(self.breakpoints_in(a, b));
        g.sort_by(f64::total_cmp);
        g.dedup();
        g
    }

    /// Checks `t - xi(t) >= MARGIN * (b - x)` on a dense grid plus the
    /// breakpoints of `[x, b]`.
    pub fn validate_on(&self, x: f64, b: f64) -> Result<()> {
        if !(x.is_finite() && b.is_finite()) || b < x {
            return Err(Error::Domain(format!("need finite x <= b, got x = {x}, b = {b}")));
        }
        if let Self::Linear { slope, d } = self {
            if *slope == 1.0 && !(*d > 0.0) {
                return Err(Error::DrawdownDegenerate {
                    t: x,
                    gap: *d,
                    margin: 0.0,
                });
            }
        }
        let margin = MARGIN * (b - x);
        let grid: Vec<f64> = match self {
            // Affine gaps are extremal at the ends.
            Self::Constant(_) | Self::Linear { .. } => vec![x, b],
            _ => self.scan_grid(x, b),
        };
        for t in grid {
            let gap = self.bar(t);
            if !(gap > margin) {
                return Err(Error::DrawdownDegenerate { t, gap, margin });
            }
        }
        Ok(())
    }

    /// Lower and upper bounds of `xi` on `[a, b]`. Exact for the affine and
    /// piecewise-linear variants, a grid estimate otherwise.
    pub fn range_on(&self, a: f64, b: f64) -> (f64, f64) {
        let pts: Vec<f64> = match self {
            Self::Constant(_) | Self::Linear { .. } => vec![a, b],
            Self::PiecewiseLinear(_) => {
                let mut v = self.breakpoints_in(a, b);
                v.push(a);
                v.push(b);
                v
            }
            Self::Callable { .. } => self.scan_grid(a, b),
        };
        pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &t| {
            let v = self.eval(t);
            (lo.min(v), hi.max(v))
        })
    }

    /// Points `t` in `(a, b)` where `xi(t) = level`, i.e. where the sign of
    /// `xi(t) - level` changes.
    pub fn level_crossings(&self, level: f64, a: f64, b: f64) -> Vec<f64> {
        let mut out = Vec::new();
        match self {
            Self::Constant(_) => {}
            Self::Linear { slope, d } => {
                if *slope != 0.0 {
                    let t = (level + d) / slope;
                    if t > a && t < b {
                        out.push(t);
                    }
                }
            }
            _ => {
                let grid = match self {
                    Self::PiecewiseLinear(_) => {
                        let mut v = self.breakpoints_in(a, b);
                        v.insert(0, a);
                        v.push(b);
                        v
                    }
                    _ => self.scan_grid(a, b),
                };
                for w in grid.windows(2) {
                    let (f0, f1) = (self.eval(w[0]) - level, self.eval(w[1]) - level);
                    if f0 == 0.0 && w[0] > a {
                        out.push(w[0]);
                    } else if f0 * f1 < 0.0 {
                        if let Ok(t) = bisect(|t| self.eval(t) - level, w[0], w[1], 200) {
                            out.push(t);
                        }
                    }
                }
            }
        }
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }
}
