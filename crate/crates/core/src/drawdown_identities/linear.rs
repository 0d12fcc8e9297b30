//! Closed forms for linear barriers `xi(t) = slope * t - d` with slope
//! different from 1, started at `x = 0`.
//!
//! With `xi_bar(t) = (1 - slope) t + d` the hazard integrates exactly:
//! `exp(-H(t)) = (W(d)/W(xi_bar(t)))^{1/(1-slope)}`.

use crate::error::{Error, Result};
use crate::levy_model::LevyModel;
use crate::quadrature::{integrate, QuadOptions};
use crate::scale_functions::{Method, ScaleFunction};

use super::IdentityResult;

/// Barrier `slope * t - d` on maximum levels `[0, b]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearBarrier {
    pub slope: f64,
    pub d: f64,
    pub b: f64,
}

impl LinearBarrier {
    /// Requires `slope != 1`, `d > 0`, `b >= 0` and `(1 - slope) b + d > 0`.
    pub fn new(slope: f64, d: f64, b: f64) -> Result<Self> {
        if !(slope.is_finite() && d.is_finite() && b.is_finite()) {
            return Err(Error::Domain("linear barrier parameters must be finite".into()));
        }
        if slope == 1.0 {
            return Err(Error::Domain("slope 1 is the reflected case".into()));
        }
        if !(b >= 0.0) {
            return Err(Error::Domain(format!("need b >= 0, got {b}")));
        }
        let end = (1.0 - slope) * b + d;
        if !(d > 0.0 && end > 0.0) {
            return Err(Error::DrawdownDegenerate {
                t: if d > 0.0 { b } else { 0.0 },
                gap: d.min(end),
                margin: 0.0,
            });
        }
        Ok(Self { slope, d, b })
    }

    pub fn gap(&self, t: f64) -> f64 {
        (1.0 - self.slope) * t + self.d
    }

    /// Interval outside of which the potential density vanishes.
    pub fn support(&self) -> (f64, f64) {
        (-self.d + self.slope.min(0.0) * self.b, self.b)
    }

    fn survival(&self, sf: &ScaleFunction, t: f64) -> Result<f64> {
        let lr = sf.w(self.d)?.ln() - sf.w(self.gap(t))?.ln();
        Ok((lr / (1.0 - self.slope)).exp())
    }
}

/// `(W(d)/W((1-slope) b + d))^{1/(1-slope)}`.
pub fn up_exit(sf: &ScaleFunction, lin: &LinearBarrier) -> Result<f64> {
    lin.survival(sf, lin.b)
}

/// `E[e^{-u tau_xi + v X(tau_xi)}; tau_xi < tau_b^+]`
/// `= Z_v(d) - Z_v(gap(b)) S_v(b) - p slope int_0^b S_v(t) W_v(gap(t)) dt`,
/// with `S_v` the survival factor of the tilted scale function.
pub fn triple(model: &LevyModel, u: f64, v: f64, lin: &LinearBarrier, method: Method, tol: f64) -> Result<IdentityResult> {
    if !(u >= 0.0 && v >= 0.0) {
        return Err(Error::Domain(format!("need u, v >= 0, got u = {u}, v = {v}")));
    }
    let p = u - model.laplace_exponent(v);
    if p < 0.0 {
        return Err(Error::Domain(format!("p = u - psi(v) = {p} < 0")));
    }
    let sv = ScaleFunction::tilted_from(model, v, p, method)?;
    let head = sv.z(lin.d)? - sv.z(lin.gap(lin.b))? * lin.survival(&sv, lin.b)?;
    let (tail, err) = if p * lin.slope != 0.0 && lin.b > 0.0 {
        let r = integrate(
            |t| Ok(lin.survival(&sv, t)? * sv.w(lin.gap(t))?),
            0.0,
            lin.b,
            &[],
            QuadOptions::abs(tol),
        )?;
        (p * lin.slope * r.value, (p * lin.slope).abs() * r.error)
    } else {
        (0.0, 0.0)
    };
    Ok(IdentityResult::new(
        head - tail,
        err,
        &[("slope", lin.slope), ("d", lin.d), ("b", lin.b), ("u", u), ("v", v), ("p", p)],
    ))
}

/// `sigma^2/2 (W'(d) - W'(gap(b)) S(b) - slope int_0^b S(t) W''(gap(t)) dt)`.
pub fn creeping(sf: &ScaleFunction, lin: &LinearBarrier, tol: f64) -> Result<IdentityResult> {
    let s2 = sf.model().sigma() * sf.model().sigma();
    if s2 == 0.0 {
        return Err(Error::Unsupported("creeping needs sigma > 0".into()));
    }
    let head = sf.w_prime(lin.d)? - sf.w_prime(lin.gap(lin.b))? * lin.survival(sf, lin.b)?;
    let (tail, err) = if lin.slope != 0.0 && lin.b > 0.0 {
        let r = integrate(
            |t| Ok(lin.survival(sf, t)? * sf.w_second(lin.gap(t))?),
            0.0,
            lin.b,
            &[],
            QuadOptions::abs(tol),
        )?;
        (lin.slope * r.value, lin.slope.abs() * r.error)
    } else {
        (0.0, 0.0)
    };
    Ok(IdentityResult::new(
        0.5 * s2 * (head - tail),
        0.5 * s2 * err,
        &[("slope", lin.slope), ("d", lin.d), ("b", lin.b), ("q", sf.q())],
    ))
}

/// Potential density at `y` (both the absolutely continuous part and the
/// time spent at the maximum). For `slope >= 0` the maximum levels where
/// `y` lies above the barrier end at `b ^ (d + y)/slope`; for `slope < 0`
/// they start at `0 v (d + y)/slope`.
pub fn potential_density(sf: &ScaleFunction, lin: &LinearBarrier, y: f64) -> Result<f64> {
    let (lo, hi) = lin.support();
    if !(y > lo && y < hi) {
        return Ok(0.0);
    }
    let s = lin.slope;
    if s >= 0.0 {
        let cap = if s == 0.0 { lin.b } else { lin.b.min((lin.d + y) / s) };
        Ok(sf.w(cap - y)? * lin.survival(sf, cap)? - sf.w(-y)?)
    } else {
        let start = 0f64.max((lin.d + y) / s);
        Ok(sf.w(lin.b - y)? * lin.survival(sf, lin.b)? - sf.w(start - y)? * lin.survival(sf, start)?)
    }
}
