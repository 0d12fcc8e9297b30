//! Closed forms for the reflected barrier `xi(t) = t - d`, i.e. the first
//! time `Y = max X - X` exceeds `d`, started at `x = 0`.
//!
//! The gap is constant, so the maximum at the draw-down time (or at an
//! independent exponential time) is exponential with rate `W'(d)/W(d)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::levy_model::LevyModel;
use crate::scale_functions::{Method, ScaleFunction};

fn check(d: f64, b: f64) -> Result<()> {
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::DrawdownDegenerate { t: 0.0, gap: d, margin: 0.0 });
    }
    if !(b >= 0.0) {
        return Err(Error::Domain(format!("need b >= 0, got {b}")));
    }
    Ok(())
}

fn tilted(model: &LevyModel, u: f64, v: f64, method: Method) -> Result<(ScaleFunction, f64)> {
    if !(u >= 0.0 && v >= 0.0) {
        return Err(Error::Domain(format!("need u, v >= 0, got u = {u}, v = {v}")));
    }
    let p = u - model.laplace_exponent(v);
    if p < 0.0 {
        return Err(Error::Domain(format!("p = u - psi(v) = {p} < 0")));
    }
    Ok((ScaleFunction::tilted_from(model, v, p, method)?, p))
}

/// Rate `W'(d)/W(d)` of the exponential law of the maximum.
pub fn max_rate(sf: &ScaleFunction, d: f64) -> Result<f64> {
    check(d, 0.0)?;
    Ok(sf.w_prime(d)? / sf.w(d)?)
}

/// `exp(-b W'(d)/W(d))`.
pub fn up_exit(sf: &ScaleFunction, d: f64, b: f64) -> Result<f64> {
    check(d, b)?;
    Ok((-max_rate(sf, d)? * b).exp())
}

/// `E[e^{-u kappa + v X(kappa) + r max X(kappa)}; kappa < tau_b^+]`
/// `= (k Z_v(d) - p W_v(d)) (1 - e^{(r-k) b})/(k - r)`, `k = W_v'(d)/W_v(d)`.
pub fn triple(model: &LevyModel, u: f64, v: f64, r: f64, d: f64, b: f64, method: Method) -> Result<f64> {
    check(d, b)?;
    let (sv, p) = tilted(model, u, v, method)?;
    let k = max_rate(&sv, d)?;
    let lead = k * sv.z(d)? - p * sv.w(d)?;
    let g = r - k;
    // (1 - e^{g b}) / (-g), with the g -> 0 limit b.
    let factor = if g.abs() * b < 1e-8 {
        b * (1.0 + 0.5 * g * b)
    } else {
        -(g * b).exp_m1() / -g
    };
    Ok(lead * factor)
}

/// `b -> infinity` limit of [`triple`] at `r = -v`, in the form
/// `Z_v(d) - W_v(d) (p W_v(d) + v Z_v(d)) / (W_v'(d) + v W_v(d))`.
pub fn unbounded_transform(model: &LevyModel, u: f64, v: f64, d: f64, method: Method) -> Result<f64> {
    check(d, 0.0)?;
    let (sv, p) = tilted(model, u, v, method)?;
    let (w, z) = (sv.w(d)?, sv.z(d)?);
    Ok(z - w * (p * w + v * z) / (sv.w_prime(d)? + v * w))
}

/// `sigma^2/2 (W'(d) - W(d) W''(d)/W'(d)) (1 - e^{-b W'(d)/W(d)})`.
pub fn creeping(sf: &ScaleFunction, d: f64, b: f64) -> Result<f64> {
    check(d, b)?;
    let s2 = sf.model().sigma() * sf.model().sigma();
    if s2 == 0.0 {
        return Err(Error::Unsupported("creeping needs sigma > 0".into()));
    }
    let w1 = sf.w_prime(d)?;
    let k = w1 / sf.w(d)?;
    Ok(0.5 * s2 * (w1 - sf.w(d)? * sf.w_second(d)? / w1) * -(-k * b).exp_m1())
}

/// Potential density at `y`: `W(d ^ (b - y)) e^{-k ((y + d) ^ b)} - W(-y)`
/// on `(-d, b)`.
pub fn potential_density(sf: &ScaleFunction, d: f64, b: f64, y: f64) -> Result<f64> {
    check(d, b)?;
    if !(y > -d && y < b) {
        return Ok(0.0);
    }
    let k = max_rate(sf, d)?;
    Ok(sf.w(d.min(b - y))? * (-k * (y + d).min(b)).exp() - sf.w(-y)?)
}

/// Law of `Y` at an independent exponential time `e_q`, on `{e_q < kappa}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReflectedAtExpTime {
    /// Mass at `Y = 0`: `q W(0) W(d)/W'(d)`.
    pub atom: f64,
    /// `P(kappa < e_q) = Z(d) - q W(d)^2/W'(d)`.
    pub exit_probability: f64,
}

/// Density of `Y_{e_q}` at `z` in `(0, d)`: `q (W(d) W'(z)/W'(d) - W(z))`.
pub fn reflected_density(sf: &ScaleFunction, d: f64, z: f64) -> Result<f64> {
    check(d, 0.0)?;
    if !(z > 0.0 && z < d) {
        return Ok(0.0);
    }
    Ok(sf.q() * (sf.w(d)? * sf.w_prime(z)? / sf.w_prime(d)? - sf.w(z)?))
}

pub fn reflected_at_exp_time(sf: &ScaleFunction, d: f64) -> Result<ReflectedAtExpTime> {
    check(d, 0.0)?;
    let q = sf.q();
    if !(q > 0.0) {
        return Err(Error::Domain(format!("need q > 0, got {q}")));
    }
    let (w, w1) = (sf.w(d)?, sf.w_prime(d)?);
    Ok(ReflectedAtExpTime {
        atom: q * sf.w_at_zero() * w / w1,
        exit_probability: sf.z(d)? - q * w * w / w1,
    })
}

/// Every reflected-barrier quantity for one parameter set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReflectedSuite {
    pub max_rate: f64,
    pub up_exit: f64,
    pub triple: f64,
    pub creeping: Option<f64>,
    pub unbounded_transform: f64,
    pub atom: f64,
    pub exit_probability: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReflectedParams {
    pub q: f64,
    pub u: f64,
    pub v: f64,
    pub r: f64,
    pub d: f64,
    pub b: f64,
}

pub fn reflected_suite(model: &LevyModel, p: &ReflectedParams, method: Method) -> Result<ReflectedSuite> {
    let sf = match method {
        Method::ClosedForm => ScaleFunction::new(model, p.q)?,
        Method::Inversion => ScaleFunction::with_method(model, p.q, method)?,
    };
    let at_exp = reflected_at_exp_time(&sf, p.d)?;
    Ok(ReflectedSuite {
        max_rate: max_rate(&sf, p.d)?,
        up_exit: up_exit(&sf, p.d, p.b)?,
        triple: triple(model, p.u, p.v, p.r, p.d, p.b, method)?,
        creeping: if model.sigma() > 0.0 { Some(creeping(&sf, p.d, p.b)?) } else { None },
        unbounded_transform: unbounded_transform(model, p.u, p.v, p.d, method)?,
        atom: at_exp.atom,
        exit_probability: at_exp.exit_probability,
    })
}
