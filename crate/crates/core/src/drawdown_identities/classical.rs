//! Two-sided exit from a fixed interval `[c, b]`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::levy_model::LevyModel;
use crate::quadrature::{integrate, QuadOptions};
use crate::scale_functions::{Method, ScaleFunction};

fn check_interval(x: f64, b: f64, c: f64) -> Result<()> {
    if !(c <= x && x <= b) || !(c < b) {
        return Err(Error::Domain(format!("need c <= x <= b and c < b, got c = {c}, x = {x}, b = {b}")));
    }
    Ok(())
}

/// `E_x[e^{-q tau_b^+}; tau_b^+ < tau_c^-] = W(x-c)/W(b-c)`.
pub fn up_exit(sf: &ScaleFunction, x: f64, b: f64, c: f64) -> Result<f64> {
    check_interval(x, b, c)?;
    Ok(sf.w(x - c)? / sf.w(b - c)?)
}

/// `E_x[e^{-u tau_c^- + v X(tau_c^-)}; tau_c^- < tau_b^+]`
/// `= e^{vx} (Z_v(x-c) - W_v(x-c)/W_v(b-c) Z_v(b-c))` with `p = u - psi(v)`.
pub fn down_exit(model: &LevyModel, u: f64, v: f64, x: f64, b: f64, c: f64, method: Method) -> Result<f64> {
    check_interval(x, b, c)?;
    if !(u >= 0.0 && v >= 0.0) {
        return Err(Error::Domain(format!("need u, v >= 0, got u = {u}, v = {v}")));
    }
    let p = u - model.laplace_exponent(v);
    let sv = ScaleFunction::tilted_from(model, v, p, method)?;
    Ok((v * x).exp() * (sv.z(x - c)? - sv.w(x - c)? / sv.w(b - c)? * sv.z(b - c)?))
}

/// `E_x[e^{-q tau_c^-}; X(tau_c^-) = c, tau_c^- < tau_b^+]`
/// `= sigma^2/2 (W'(x-c) - W(x-c) W'(b-c)/W(b-c))`.
pub fn creeping(sf: &ScaleFunction, x: f64, b: f64, c: f64) -> Result<f64> {
    check_interval(x, b, c)?;
    let s2 = sf.model().sigma() * sf.model().sigma();
    if s2 == 0.0 {
        return Err(Error::Unsupported("creeping needs sigma > 0".into()));
    }
    let (wx, wb) = (sf.w(x - c)?, sf.w(b - c)?);
    Ok(0.5 * s2 * (sf.w_prime_right(x - c)? - wx * sf.w_prime(b - c)? / wb))
}

/// Density at `y` of the `q`-resolvent killed on leaving `[c, b]`:
/// `W(x-c)/W(b-c) W(b-y) - W(x-y)` for `y` in `(c, b)`.
pub fn resolvent_density(sf: &ScaleFunction, x: f64, b: f64, c: f64, y: f64) -> Result<f64> {
    check_interval(x, b, c)?;
    if !(y > c && y < b) {
        return Ok(0.0);
    }
    Ok(sf.w(x - c)? / sf.w(b - c)? * sf.w(b - y)? - sf.w(x - y)?)
}

/// `int_c^b` of [`resolvent_density`] by adaptive quadrature, with the kink
/// at `y = x` as a breakpoint.
pub fn resolvent_mass(sf: &ScaleFunction, x: f64, b: f64, c: f64, tol: f64) -> Result<(f64, f64)> {
    let r = integrate(
        |y| resolvent_density(sf, x, b, c, y),
        c,
        b,
        &[x],
        QuadOptions::abs(tol),
    )?;
    Ok((r.value, r.error))
}

/// `E_x[e^{-q tau^{a}}; tau^{a} < tau_b^+ ^ tau_c^-]` for `x, a` in `[c, b]`:
/// `W(x-c)/W(a-c) - W(x-a) W(b-c) / (W(b-a) W(a-c))`.
pub fn hitting(sf: &ScaleFunction, x: f64, a: f64, b: f64, c: f64) -> Result<f64> {
    check_interval(x, b, c)?;
    if !(c < a && a < b) {
        return Err(Error::Domain(format!("need c < a < b, got c = {c}, a = {a}, b = {b}")));
    }
    let wac = sf.w(a - c)?;
    Ok(sf.w(x - c)? / wac - sf.w(x - a)? * sf.w(b - c)? / (sf.w(b - a)? * wac))
}

/// All fixed-interval quantities for one parameter set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassicalSuite {
    pub up_exit: f64,
    pub down_exit: f64,
    /// `None` without a Gaussian part.
    pub creeping: Option<f64>,
    /// Total mass `int_c^b` of the killed resolvent density.
    pub resolvent_mass: f64,
    /// Hitting of level `a`.
    pub hitting: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalParams {
    pub q: f64,
    pub u: f64,
    pub v: f64,
    pub c: f64,
    pub b: f64,
    pub x: f64,
    pub a: f64,
}

pub fn classical_suite(model: &LevyModel, p: &ClassicalParams, method: Method) -> Result<ClassicalSuite> {
    let sf = if method == Method::ClosedForm {
        ScaleFunction::new(model, p.q)?
    } else {
        ScaleFunction::with_method(model, p.q, method)?
    };
    let creeping = if model.sigma() > 0.0 {
        Some(creeping(&sf, p.x, p.b, p.c)?)
    } else {
        None
    };
    Ok(ClassicalSuite {
        up_exit: up_exit(&sf, p.x, p.b, p.c)?,
        down_exit: down_exit(model, p.u, p.v, p.x, p.b, p.c, method)?,
        creeping,
        resolvent_mass: resolvent_mass(&sf, p.x, p.b, p.c, 1e-12)?.0,
        hitting: hitting(&sf, p.x, p.a, p.b, p.c)?,
    })
}
