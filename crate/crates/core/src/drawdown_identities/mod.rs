//! Exit identities for draw-down times `tau_xi = inf{t : X_t < xi(max X)}`.
//!
//! General barriers are handled by quadrature in the maximum level `t`:
//! the survival factor `exp(-H(t))`, `H(t) = int_x^t W'/W(xi_bar)`, and the
//! outer integral are advanced together by
//! [`integrate_coupled`](crate::quadrature::integrate_coupled). Closed forms
//! for constant, linear and reflected barriers live in the submodules.

pub mod classical;
pub mod excursion;
pub mod linear;
pub mod reflected;
mod xi;

use std::collections::BTreeMap;

use serde::Serialize;

pub use xi::{DrawdownFunction, XiDoc, MARGIN};

use crate::error::{Error, Result};
use crate::levy_model::LevyModel;
use crate::quadrature::{integrate, integrate_coupled, CoupledIntegral, QuadOptions};
use crate::scale_functions::{Method, ScaleFunction};
use excursion::{creeping_functional, hitting_functional, killing_rate, occupation_density, overshoot_functional};

/// Default absolute quadrature tolerance per identity.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Contribution of one quadrature cell `[start, end]` of the maximum level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Contribution {
    pub start: f64,
    pub end: f64,
    pub value: f64,
}

/// A computed transform or density together with its error estimate and
/// the parameters that produced it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityResult {
    pub value: f64,
    pub abs_error_estimate: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub breakdown: Option<Vec<Contribution>>,
    pub params: BTreeMap<String, f64>,
}

impl IdentityResult {
    pub fn new(value: f64, abs_error_estimate: f64, params: &[(&str, f64)]) -> Self {
        Self {
            value,
            abs_error_estimate,
            breakdown: None,
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }

    fn with_cells(mut self, c: &CoupledIntegral, scale: f64) -> Self {
        self.breakdown = Some(
            c.cells
                .iter()
                .map(|k| Contribution {
                    start: k.start,
                    end: k.end,
                    value: k.value * scale,
                })
                .collect(),
        );
        self
    }
}

/// Both sides of the total-mass identity
/// `q * (potential mass) = 1 - E_x[e^{-q (tau_b^+ ^ tau_xi)}]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MassCheck {
    pub potential_side: f64,
    pub potential_error: f64,
    pub exit_side: f64,
    pub exit_error: f64,
}

impl MassCheck {
    pub fn discrepancy(&self) -> f64 {
        (self.potential_side - self.exit_side).abs()
    }
}

/// Start level `x`, upper level `b` and barrier `xi` for one model.
#[derive(Debug, Clone)]
pub struct ExitQuery {
    pub model: LevyModel,
    pub xi: DrawdownFunction,
    pub x: f64,
    pub b: f64,
    pub tol: f64,
    pub method: Method,
}

fn nonneg(name: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be finite and >= 0, got {v}")))
    }
}

impl ExitQuery {
    /// Validates `x <= b` and the draw-down margin on `[x, b]`.
    pub fn new(model: LevyModel, xi: DrawdownFunction, x: f64, b: f64) -> Result<Self> {
        xi.validate_on(x, b)?;
        Ok(Self {
            model,
            xi,
            x,
            b,
            tol: DEFAULT_TOL,
            method: Method::ClosedForm,
        })
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    /// Scale functions by `method`; closed forms still fall back to
    /// inversion when their check fails.
    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn scale_function(&self, q: f64) -> Result<ScaleFunction> {
        match self.method {
            Method::ClosedForm => ScaleFunction::new(&self.model, q),
            Method::Inversion => ScaleFunction::with_method(&self.model, q, Method::Inversion),
        }
    }

    fn opts(&self) -> QuadOptions {
        QuadOptions::abs(self.tol)
    }

    fn breaks(&self) -> Vec<f64> {
        self.xi.breakpoints_in(self.x, self.b)
    }

    fn hazard<'a>(&'a self, sf: &'a ScaleFunction) -> impl FnMut(f64) -> Result<f64> + 'a {
        move |t| killing_rate(sf, self.xi.bar(t))
    }

    fn base_params(&self) -> Vec<(&'static str, f64)> {
        vec![("x", self.x), ("b", self.b)]
    }

    /// `E_x[e^{-q tau_b^+}; tau_b^+ < tau_xi] = exp(-int_x^b W'/W(xi_bar(t)) dt)`.
    pub fn up_exit(&self, q: f64) -> Result<IdentityResult> {
        nonneg("q", q)?;
        let mut params = self.base_params();
        params.push(("q", q));
        if self.x == self.b {
            return Ok(IdentityResult::new(1.0, 0.0, &params));
        }
        let sf = self.scale_function(q)?;
        let h = integrate(self.hazard(&sf), self.x, self.b, &self.breaks(), self.opts())?;
        let value = (-h.value).exp();
        Ok(IdentityResult::new(value, value * h.error, &params))
    }

    /// `E_x[e^{-u tau_xi + v X(tau_xi) + r max X(tau_xi)}; tau_xi < tau_b^+]`
    /// for `u, v >= 0` with `p = u - psi(v) >= 0`.
    pub fn triple(&self, u: f64, v: f64, r: f64) -> Result<IdentityResult> {
        nonneg("u", u)?;
        nonneg("v", v)?;
        if !r.is_finite() {
            return Err(Error::Domain(format!("r must be finite, got {r}")));
        }
        let p = u - self.model.laplace_exponent(v);
        if p < 0.0 {
            return Err(Error::Domain(format!(
                "p = u - psi(v) = {p} < 0 is outside the implemented range"
            )));
        }
        let mut params = self.base_params();
        params.extend([("u", u), ("v", v), ("r", r), ("p", p)]);
        if self.x == self.b {
            return Ok(IdentityResult::new(0.0, 0.0, &params));
        }
        let sv = match self.method {
            Method::ClosedForm => ScaleFunction::tilted_from(&self.model, v, p, Method::ClosedForm)?,
            Method::Inversion => ScaleFunction::tilted_from(&self.model, v, p, Method::Inversion)?,
        };
        let xi = &self.xi;
        let c = integrate_coupled(
            self.hazard(&sv),
            |t, h| Ok((r * t - h).exp() * overshoot_functional(&sv, xi.bar(t))?),
            self.x,
            self.b,
            &self.breaks(),
            self.opts(),
        )?;
        let scale = (v * self.x).exp();
        Ok(IdentityResult::new(c.value * scale, c.value_error * scale, &params).with_cells(&c, scale))
    }

    /// Creeping part `E_x[e^{-q tau_xi}; X(tau_xi) = xi(max X), tau_xi < tau_b^+]`.
    ///
    /// Without a Gaussian part creeping is impossible; the value 0 is then
    /// returned only if `zero_without_gaussian` is set, otherwise the call
    /// fails with [`Error::Unsupported`].
    pub fn creeping(&self, q: f64, zero_without_gaussian: bool) -> Result<IdentityResult> {
        nonneg("q", q)?;
        let mut params = self.base_params();
        params.push(("q", q));
        if self.model.sigma() == 0.0 {
            if zero_without_gaussian {
                return Ok(IdentityResult::new(0.0, 0.0, &params));
            }
            return Err(Error::Unsupported(
                "creeping transform needs sigma > 0 (pass the zero flag to accept 0)".into(),
            ));
        }
        if self.x == self.b {
            return Ok(IdentityResult::new(0.0, 0.0, &params));
        }
        let sf = self.scale_function(q)?;
        let xi = &self.xi;
        let c = integrate_coupled(
            self.hazard(&sf),
            |t, h| Ok((-h).exp() * creeping_functional(&sf, xi.bar(t))?),
            self.x,
            self.b,
            &self.breaks(),
            self.opts(),
        )?;
        Ok(IdentityResult::new(c.value, c.value_error, &params).with_cells(&c, 1.0))
    }

    /// `E_x[e^{-q tau^{xi}}; tau^{xi} < tau_c^- ^ tau_b^+]`, the first time
    /// `X` equals `xi(max X)`, for a constant `c` below `xi` on `[x, b]`.
    pub fn hitting(&self, q: f64, c: f64) -> Result<IdentityResult> {
        nonneg("q", q)?;
        let (lo, _) = self.xi.range_on(self.x, self.b);
        if !(c < lo) {
            return Err(Error::Precondition(format!(
                "lower level c = {c} must lie below xi on [x, b] (min {lo})"
            )));
        }
        let mut params = self.base_params();
        params.extend([("q", q), ("c", c)]);
        if self.x == self.b {
            return Ok(IdentityResult::new(0.0, 0.0, &params));
        }
        let sf = self.scale_function(q)?;
        let xi = &self.xi;
        let r = integrate_coupled(
            self.hazard(&sf),
            |t, h| {
                let f = hitting_functional(&sf, xi.bar(t), t - c)?;
                Ok((-h).exp() * f)
            },
            self.x,
            self.b,
            &self.breaks(),
            self.opts(),
        )?;
        Ok(IdentityResult::new(r.value, r.value_error, &params).with_cells(&r, 1.0))
    }

    /// Density at `y` of `int_0^inf e^{-qt} P_x(X_t in dy, t < tau_b^+ ^ tau_xi) dt`,
    /// including the part `W(0) exp(-H(y))` carried by time at the maximum.
    pub fn potential_density(&self, q: f64, y: f64) -> Result<IdentityResult> {
        if !(q > 0.0) || !q.is_finite() {
            return Err(Error::Domain(format!("potential density needs q > 0, got {q}")));
        }
        let sf = self.scale_function(q)?;
        self.density_with(&sf, y)
    }

    fn density_with(&self, sf: &ScaleFunction, y: f64) -> Result<IdentityResult> {
        let mut params = self.base_params();
        params.extend([("q", sf.q()), ("y", y)]);
        let (lo, _) = self.xi.range_on(self.x, self.b);
        if !(y > lo && y < self.b) || self.x == self.b {
            return Ok(IdentityResult::new(0.0, 0.0, &params));
        }
        let mut breaks = self.breaks();
        breaks.push(y);
        breaks.extend(self.xi.level_crossings(y, self.x, self.b));
        let xi = &self.xi;
        let c = integrate_coupled(
            self.hazard(sf),
            |t, h| {
                if t <= y {
                    return Ok(0.0);
                }
                let gap = xi.bar(t);
                Ok((-h).exp() * occupation_density(sf, gap, t - y)?)
            },
            self.x,
            self.b,
            &breaks,
            self.opts(),
        )?;
        let mut value = c.value;
        let mut err = c.value_error;
        let w0 = sf.w_at_zero();
        if w0 > 0.0 && y > self.x {
            let h_y = c
                .cells
                .iter()
                .find(|k| k.end == y)
                .map(|k| k.hazard_end)
                .ok_or_else(|| Error::Quadrature("level y missing from the partition".into()))?;
            let ridge = w0 * (-h_y).exp();
            value += ridge;
            err += ridge * c.hazard_error;
        }
        Ok(IdentityResult::new(value, err, &params).with_cells(&c, 1.0))
    }

    fn level_breaks(&self) -> Vec<f64> {
        let mut v = vec![self.x, self.xi.eval(self.x), self.xi.eval(self.b)];
        for t in self.breaks() {
            v.push(self.xi.eval(t));
        }
        v
    }

    /// Potential density integrated over `[lo, hi]`; `q` times the value is
    /// `P_x(X(e_q) in [lo, hi], e_q < tau_b^+ ^ tau_xi)`.
    pub fn potential_mass_on(&self, q: f64, lo: f64, hi: f64) -> Result<IdentityResult> {
        if !(q > 0.0) || !q.is_finite() {
            return Err(Error::Domain(format!("potential mass needs q > 0, got {q}")));
        }
        if !(lo <= hi) {
            return Err(Error::Domain(format!("need lo <= hi, got [{lo}, {hi}]")));
        }
        let sf = self.scale_function(q)?;
        let (inf, _) = self.xi.range_on(self.x, self.b);
        let (a, c) = (lo.max(inf), hi.min(self.b));
        let mut params = self.base_params();
        params.extend([("q", q), ("lo", lo), ("hi", hi)]);
        if !(a < c) {
            return Ok(IdentityResult::new(0.0, 0.0, &params));
        }
        let mut worst = 0.0f64;
        let mass = integrate(
            |y| {
                let d = self.density_with(&sf, y)?;
                worst = worst.max(d.abs_error_estimate);
                Ok(d.value)
            },
            a,
            c,
            &self.level_breaks(),
            self.opts(),
        )?;
        Ok(IdentityResult::new(mass.value, mass.error + (c - a) * worst, &params))
    }

    /// Computes both sides of the total-mass identity independently: the
    /// potential density integrated over its support, and one minus the
    /// exit transforms.
    pub fn potential_mass_check(&self, q: f64) -> Result<MassCheck> {
        if !(q > 0.0) || !q.is_finite() {
            return Err(Error::Domain(format!("mass check needs q > 0, got {q}")));
        }
        let (lo, _) = self.xi.range_on(self.x, self.b);
        let mass = self.potential_mass_on(q, lo, self.b)?;
        let up = self.up_exit(q)?;
        let down = self.triple(q, 0.0, 0.0)?;
        Ok(MassCheck {
            potential_side: q * mass.value,
            potential_error: q * mass.abs_error_estimate,
            exit_side: 1.0 - up.value - down.value,
            exit_error: up.abs_error_estimate + down.abs_error_estimate,
        })
    }
}
