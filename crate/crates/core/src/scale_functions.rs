//! Scale functions `W^(q)`, their derivatives, and `Z^(q)`.
//!
//! For every catalog model `1/(psi(l) - q)` is rational with real, simple
//! poles (apart from a possible double pole at the minimiser of `psi`), so
//! `W^(q)` is a finite exponential sum over the roots of `psi(l) = q`. That
//! closed form is checked against numerical inversion before it is used;
//! inversion is also available on its own.
//!
//! The tilted family `W_v^(p)` is the `p`-scale function of the tilted model,
//! whose exponent is `psi(l + v) - psi(v)`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::inversion::{invert, InversionOptions};
use crate::levy_model::LevyModel;
use crate::roots::{newton_bracketed, RootOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    ClosedForm,
    Inversion,
}

/// Points at which a closed form is compared with inversion before use.
const CHECK_POINTS: [f64; 3] = [0.5, 1.0, 2.0];
const CHECK_TOL: f64 = 1e-7;

/// Roots closer than this (relative) are treated as numerically coincident.
const MIN_ROOT_GAP: f64 = 1e-4;

/// `(e^z - 1)/z`.
fn exprel(z: f64) -> f64 {
    if z.abs() < 1e-5 {
        1.0 + z * (0.5 + z / 6.0)
    } else {
        z.exp_m1() / z
    }
}

/// `int_0^1 s e^{z s} ds`.
fn exprel2(z: f64) -> f64 {
    if z.abs() < 0.1 {
        let mut term = 1.0;
        let mut sum = 0.5;
        for k in 1..14 {
            term *= z / k as f64;
            sum += term / (k + 2) as f64;
        }
        sum
    } else {
        (z.exp() * (z - 1.0) + 1.0) / (z * z)
    }
}

/// One summand `(a + b x) e^{r x}`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct ExpTerm {
    a: f64,
    b: f64,
    r: f64,
}

/// `W(x) = w0 + sum_k [a_k (e^{r_k x} - 1) + b_k x e^{r_k x}]`, written so
/// that the cancellation near `x = 0` happens analytically.
#[derive(Debug, Clone, PartialEq)]
struct ExpSum {
    w0: f64,
    terms: Vec<ExpTerm>,
}

impl ExpSum {
    fn value(&self, x: f64) -> (f64, f64) {
        let mut v = self.w0;
        let mut mag = self.w0.abs();
        for t in &self.terms {
            let e = (t.r * x).exp();
            let s = t.a * (t.r * x).exp_m1() + t.b * x * e;
            v += s;
            mag += (t.a * e).abs() + (t.b * x * e).abs();
        }
        (v, 8.0 * f64::EPSILON * mag)
    }

    fn d1(&self, x: f64) -> (f64, f64) {
        let mut v = 0.0;
        let mut mag = 0.0;
        for t in &self.terms {
            let e = (t.r * x).exp();
            let s = (t.b + t.r * (t.a + t.b * x)) * e;
            v += s;
            mag += s.abs();
        }
        (v, 8.0 * f64::EPSILON * mag)
    }

    fn d2(&self, x: f64) -> (f64, f64) {
        let mut v = 0.0;
        let mut mag = 0.0;
        for t in &self.terms {
            let e = (t.r * x).exp();
            let s = (2.0 * t.b * t.r + t.r * t.r * (t.a + t.b * x)) * e;
            v += s;
            mag += s.abs();
        }
        (v, 8.0 * f64::EPSILON * mag)
    }

    /// `int_0^x W(y) dy`.
    fn integral(&self, x: f64) -> (f64, f64) {
        let mut v = self.w0 * x;
        let mut mag = v.abs();
        for t in &self.terms {
            let z = t.r * x;
            // int_0^x (e^{ry} - 1) dy = x (exprel(z) - 1)
            let s = t.a * x * (exprel(z) - 1.0) + t.b * x * x * exprel2(z);
            v += s;
            mag += s.abs() + (t.a * x).abs();
        }
        (v, 8.0 * f64::EPSILON * mag)
    }
}

/// Real roots of `psi(l) = q`, increasing. A double root is reported once
/// in `double`.
#[derive(Debug, Clone, PartialEq)]
struct RootSet {
    simple: Vec<f64>,
    double: Option<f64>,
    largest: f64,
}

/// Minimiser of `psi` on the branch right of the first pole, where `psi` is
/// convex. `None` when `psi` is linear (no jumps, `sigma = 0`).
fn branch_minimizer(model: &LevyModel) -> Result<Option<f64>> {
    let s2 = model.sigma() * model.sigma();
    let parts = model.jump_parts();
    if parts.is_empty() {
        return Ok((s2 > 0.0).then(|| -model.mu() / s2));
    }
    let lo = model.abscissa();
    let mut hi = lo.max(0.0) + 1.0;
    let mut guard = 0;
    while model.laplace_exponent_d1(hi) <= 0.0 {
        hi = lo + 2.0 * (hi - lo);
        guard += 1;
        if guard > 1100 {
            return Err(Error::RootFinding {
                iterations: guard,
                context: "psi' never turns positive".into(),
            });
        }
    }
    newton_bracketed(
        |l| (model.laplace_exponent_d1(l), model.laplace_exponent_d2(l)),
        lo,
        hi,
        -1.0,
        0.5 * (lo + hi),
        RootOptions {
            f_tol: 0.0,
            max_iter: 400,
        },
    )
    .map(Some)
}

fn exponent_roots(model: &LevyModel, q: f64) -> Result<RootSet> {
    let f = |l: f64| (model.laplace_exponent(l) - q, model.laplace_exponent_d1(l));
    let opts = RootOptions::default();
    let s2 = model.sigma() * model.sigma();
    let parts = model.jump_parts();

    let Some(m) = branch_minimizer(model)? else {
        // psi(l) = mu l.
        let r = q / model.mu();
        return Ok(RootSet {
            simple: vec![r],
            double: None,
            largest: r,
        });
    };

    let mut simple = Vec::new();
    // Left of the last pole, only with a Gaussian part.
    if s2 > 0.0 && !parts.is_empty() {
        let pole = -parts.last().expect("nonempty").1;
        let mut lo = pole - 1.0;
        let mut guard = 0;
        while f(lo).0 <= 0.0 {
            lo = pole - 2.0 * (pole - lo);
            guard += 1;
            if guard > 1100 {
                return Err(Error::RootFinding {
                    iterations: guard,
                    context: "no sign change left of the last pole".into(),
                });
            }
        }
        simple.push(newton_bracketed(f, lo, pole, 1.0, 0.5 * (lo + pole), opts)?);
    }
    // One root between each pair of adjacent poles.
    for w in parts.windows(2).rev() {
        let (lo, hi) = (-w[1].1, -w[0].1);
        simple.push(newton_bracketed(f, lo, hi, 1.0, 0.5 * (lo + hi), opts)?);
    }

    let fmin = model.laplace_exponent(m) - q;
    let scale = 1.0 + q.abs();
    if fmin > 1e-12 * scale {
        return Err(Error::Domain(format!(
            "q = {q} lies below the minimum {} of the Laplace exponent",
            fmin + q
        )));
    }
    let d2 = model.laplace_exponent_d2(m);
    if fmin >= 0.0 {
        simple.sort_by(f64::total_cmp);
        return Ok(RootSet {
            simple,
            double: Some(m),
            largest: m,
        });
    }
    let half_gap = (2.0 * -fmin / d2).sqrt();
    if half_gap < MIN_ROOT_GAP * (1.0 + m.abs()) {
        return Err(Error::Unsupported(
            "roots of psi(l) = q nearly coincide; closed form is ill-conditioned".into(),
        ));
    }

    // Left root on the convex branch.
    let (left_lo, left_start) = if parts.is_empty() {
        (f64::NEG_INFINITY, m - half_gap)
    } else {
        let lo = model.abscissa();
        (lo, 0.5 * (lo + m))
    };
    let left = if left_lo.is_finite() {
        newton_bracketed(f, left_lo, m, 1.0, left_start, opts)?
    } else {
        // Brownian motion: psi is a quadratic.
        let disc = (model.mu() * model.mu() + 2.0 * q * s2).sqrt();
        -(model.mu() + disc) / s2
    };
    simple.push(left);

    // Right root by Newton from the tangent-line bound, which converges
    // monotonically on the convex branch.
    let probe = m + half_gap.max(1.0);
    let (fp, dp) = f(probe);
    let hi = if fp >= 0.0 { probe } else { probe - fp / dp };
    let largest = if parts.is_empty() {
        let disc = (model.mu() * model.mu() + 2.0 * q * s2).sqrt();
        (disc - model.mu()) / s2
    } else {
        newton_bracketed(f, m, hi + 1e-9 * (hi - m) + 1e-12, -1.0, hi, opts)?
    };
    simple.push(largest);
    simple.sort_by(f64::total_cmp);
    Ok(RootSet {
        simple,
        double: None,
        largest,
    })
}

fn closed_form(model: &LevyModel, roots: &RootSet) -> ExpSum {
    let mut terms: Vec<ExpTerm> = roots
        .simple
        .iter()
        .map(|&r| ExpTerm {
            a: 1.0 / model.laplace_exponent_d1(r),
            b: 0.0,
            r,
        })
        .collect();
    if let Some(m) = roots.double {
        // psi(l) - q = c2 (l-m)^2 + c3 (l-m)^3 + ... near the double root.
        let d2 = model.laplace_exponent_d2(m);
        let d3 = model.laplace_exponent_d3(m);
        terms.push(ExpTerm {
            a: -2.0 * d3 / (3.0 * d2 * d2),
            b: 2.0 / d2,
            r: m,
        });
    }
    ExpSum {
        w0: model.w_at_zero(),
        terms,
    }
}

/// Precomputed samples on `(0, x_max]` for cubic Hermite interpolation.
#[derive(Debug, Clone, PartialEq)]
struct Cache {
    x: Vec<f64>,
    w: Vec<f64>,
    w1: Vec<f64>,
    w2: Vec<f64>,
}

fn hermite(x0: f64, x1: f64, f0: f64, f1: f64, d0: f64, d1: f64, x: f64) -> f64 {
    let h = x1 - x0;
    let t = (x - x0) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    f0 * (2.0 * t3 - 3.0 * t2 + 1.0)
        + h * d0 * (t3 - 2.0 * t2 + t)
        + f1 * (-2.0 * t3 + 3.0 * t2)
        + h * d1 * (t3 - t2)
}

impl Cache {
    /// Index `i` with `x[i] <= x < x[i+1]`, if `x` is covered.
    fn locate(&self, x: f64) -> Option<usize> {
        let n = self.x.len();
        if n < 2 || x < self.x[0] || x > self.x[n - 1] {
            return None;
        }
        let i = self.x.partition_point(|&g| g <= x);
        Some(i.saturating_sub(1).min(n - 2))
    }

    fn w(&self, x: f64) -> Option<f64> {
        let i = self.locate(x)?;
        Some(hermite(
            self.x[i],
            self.x[i + 1],
            self.w[i],
            self.w[i + 1],
            self.w1[i],
            self.w1[i + 1],
            x,
        ))
    }

    fn w1(&self, x: f64) -> Option<f64> {
        let i = self.locate(x)?;
        Some(hermite(
            self.x[i],
            self.x[i + 1],
            self.w1[i],
            self.w1[i + 1],
            self.w2[i],
            self.w2[i + 1],
            x,
        ))
    }
}

/// Evaluator of `W^(q)` and friends for one `(model, q)`.
///
/// Construction and [`ScaleFunction::warm`] need exclusive access; all
/// evaluations take `&self` and may run concurrently.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleFunction {
    model: LevyModel,
    q: f64,
    phi: f64,
    w0: f64,
    w1_0: f64,
    method: Method,
    closed: Option<ExpSum>,
    cache: Option<Cache>,
    opts: InversionOptions,
}

impl ScaleFunction {
    /// Uses the closed form when it passes the inversion check, otherwise
    /// inversion.
    pub fn new(model: &LevyModel, q: f64) -> Result<Self> {
        if !(q >= 0.0) || !q.is_finite() {
            return Err(Error::Domain(format!("scale function needs q >= 0, got {q}")));
        }
        Self::build(model.clone(), q, Method::ClosedForm, true)
    }

    /// Forces `method`. A closed form that fails its inversion check is an
    /// error here rather than a silent fallback.
    pub fn with_method(model: &LevyModel, q: f64, method: Method) -> Result<Self> {
        if !(q >= 0.0) || !q.is_finite() {
            return Err(Error::Domain(format!("scale function needs q >= 0, got {q}")));
        }
        Self::build(model.clone(), q, method, false)
    }

    /// `W_v^(p)(x) = e^{-v x} W^(p + psi(v))(x)` and the matching
    /// `Z_v^(p)(x) = 1 + p int_0^x W_v^(p)`, built from the model of `self`
    /// with the same method.
    pub fn tilted(&self, v: f64, p: f64) -> Result<Self> {
        Self::tilted_from(&self.model, v, p, self.method)
    }

    /// As [`ScaleFunction::tilted`], starting from a model.
    pub fn tilted_from(model: &LevyModel, v: f64, p: f64, method: Method) -> Result<Self> {
        if !(v >= 0.0) || !v.is_finite() || !p.is_finite() {
            return Err(Error::Domain(format!("tilt needs v >= 0 and finite p, got v = {v}, p = {p}")));
        }
        let shifted = p + model.laplace_exponent(v);
        if shifted < 0.0 {
            return Err(Error::Domain(format!(
                "p + psi(v) = {shifted} is negative (v = {v}, p = {p})"
            )));
        }
        let tilted = model.tilt(v)?;
        Self::build(tilted, p, method, method == Method::ClosedForm)
    }

    fn build(model: LevyModel, q: f64, method: Method, fallback: bool) -> Result<Self> {
        let w0 = model.w_at_zero();
        let w1_0 = if model.has_bounded_variation() {
            (model.jump_rate() + q) / (model.mu() * model.mu())
        } else {
            2.0 / (model.sigma() * model.sigma())
        };
        let roots = exponent_roots(&model, q);
        let phi = match &roots {
            Ok(r) => r.largest,
            Err(_) => largest_root(&model, q)?,
        };
        let mut sf = Self {
            model,
            q,
            phi,
            w0,
            w1_0,
            method: Method::Inversion,
            closed: None,
            cache: None,
            opts: InversionOptions::default(),
        };
        if method == Method::Inversion {
            return Ok(sf);
        }
        let closed = match roots {
            Ok(r) => Some(closed_form(&sf.model, &r)),
            Err(e) if !fallback => return Err(e),
            Err(_) => None,
        };
        if let Some(c) = closed {
            let mut agree = true;
            for &x in &CHECK_POINTS {
                let reference = sf.invert_w(x)?.0;
                let (value, _) = c.value(x);
                if (value - reference).abs() > CHECK_TOL * reference.abs() {
                    agree = false;
                    break;
                }
            }
            if agree {
                sf.closed = Some(c);
                sf.method = Method::ClosedForm;
            } else if !fallback {
                return Err(Error::Precondition(
                    "closed-form scale function disagrees with inversion".into(),
                ));
            }
        }
        Ok(sf)
    }

    pub fn model(&self) -> &LevyModel {
        &self.model
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// The method actually in use.
    pub fn method(&self) -> Method {
        self.method
    }

    /// Largest root of `psi(l) = q`; the transform converges right of it.
    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn w_at_zero(&self) -> f64 {
        self.w0
    }

    /// `W'(0+)`: `2/sigma^2`, or `(jump rate + q)/mu^2` for bounded variation.
    pub fn w_prime_at_zero(&self) -> f64 {
        self.w1_0
    }

    /// `1/(psi(l) - q)` for `l > phi`.
    pub fn transform(&self, lambda: f64) -> f64 {
        1.0 / (self.model.laplace_exponent(lambda) - self.q)
    }

    fn transform_complex(&self, z: Complex64) -> Complex64 {
        1.0 / (self.model.laplace_exponent_complex(z) - self.q)
    }

    /// Scale below which derivative errors are judged absolutely: derivatives
    /// may decay to zero while the transform's growth rate stays `phi`.
    fn derivative_floor(&self, x: f64) -> f64 {
        1e-3 * self.w1_0 * (self.phi * x).exp()
    }

    fn invert_w(&self, x: f64) -> Result<(f64, f64)> {
        let r = invert(|s| self.transform_complex(s), x, self.phi, 0.0, self.opts)?;
        Ok((r.value, r.error))
    }

    fn invert_w1(&self, x: f64) -> Result<(f64, f64)> {
        let w0 = self.w0;
        let r = invert(
            |s| s * self.transform_complex(s) - w0,
            x,
            self.phi,
            self.derivative_floor(x),
            self.opts,
        )?;
        Ok((r.value, r.error))
    }

    fn invert_w2(&self, x: f64) -> Result<(f64, f64)> {
        let (w0, w1) = (self.w0, self.w1_0);
        let floor = (1.0 + self.phi.abs()) * self.derivative_floor(x);
        let r = invert(
            |s| s * s * self.transform_complex(s) - s * w0 - w1,
            x,
            self.phi,
            floor,
            self.opts,
        )?;
        Ok((r.value, r.error))
    }

    fn invert_integral(&self, x: f64) -> Result<(f64, f64)> {
        let r = invert(
            |s| self.transform_complex(s) / s,
            x,
            self.phi.max(0.0),
            0.0,
            self.opts,
        )?;
        Ok((r.value, r.error))
    }

    /// `W^(q)(x)` with an absolute error estimate; zero for `x < 0`.
    pub fn w_with_error(&self, x: f64) -> Result<(f64, f64)> {
        if x.is_nan() {
            return Err(Error::Domain("W evaluated at NaN".into()));
        }
        if x < 0.0 {
            return Ok((0.0, 0.0));
        }
        if x == 0.0 {
            return Ok((self.w0, 0.0));
        }
        if let Some(c) = &self.closed {
            return Ok(c.value(x));
        }
        if let Some(v) = self.cache.as_ref().and_then(|c| c.w(x)) {
            return Ok((v, 1e-10 * v.abs()));
        }
        self.invert_w(x)
    }

    pub fn w(&self, x: f64) -> Result<f64> {
        self.w_with_error(x).map(|r| r.0)
    }

    /// `W^(q)'(x)` for `x > 0`.
    pub fn w_prime_with_error(&self, x: f64) -> Result<(f64, f64)> {
        if !(x > 0.0) {
            return Err(Error::Domain(format!("W' needs x > 0, got {x}")));
        }
        if let Some(c) = &self.closed {
            return Ok(c.d1(x));
        }
        if let Some(v) = self.cache.as_ref().and_then(|c| c.w1(x)) {
            return Ok((v, 1e-10 * v.abs()));
        }
        self.invert_w1(x)
    }

    pub fn w_prime(&self, x: f64) -> Result<f64> {
        self.w_prime_with_error(x).map(|r| r.0)
    }

    /// `W'(x)` extended to `x = 0` by the right limit `W'(0+)`.
    pub fn w_prime_right(&self, x: f64) -> Result<f64> {
        if x == 0.0 {
            Ok(self.w1_0)
        } else {
            self.w_prime(x)
        }
    }

    /// `W^(q)''(x)` for `x > 0`; needs a Gaussian part.
    pub fn w_second_with_error(&self, x: f64) -> Result<(f64, f64)> {
        if self.model.has_bounded_variation() {
            return Err(Error::Unsupported(
                "W'' is only provided when sigma > 0".into(),
            ));
        }
        self.w_second_any(x)
    }

    pub fn w_second(&self, x: f64) -> Result<f64> {
        self.w_second_with_error(x).map(|r| r.0)
    }

    fn w_second_any(&self, x: f64) -> Result<(f64, f64)> {
        if !(x > 0.0) {
            return Err(Error::Domain(format!("W'' needs x > 0, got {x}")));
        }
        if let Some(c) = &self.closed {
            return Ok(c.d2(x));
        }
        self.invert_w2(x)
    }

    /// `Z^(q)(x) = 1 + q int_0^x W^(q)`; one for `x <= 0`.
    pub fn z_with_error(&self, x: f64) -> Result<(f64, f64)> {
        if x.is_nan() {
            return Err(Error::Domain("Z evaluated at NaN".into()));
        }
        if x <= 0.0 || self.q == 0.0 {
            return Ok((1.0, 0.0));
        }
        let (i, e) = match &self.closed {
            Some(c) => c.integral(x),
            None => self.invert_integral(x)?,
        };
        Ok((1.0 + self.q * i, self.q.abs() * e))
    }

    pub fn z(&self, x: f64) -> Result<f64> {
        self.z_with_error(x).map(|r| r.0)
    }

    /// Fills the interpolation cache on `(0, x_max]`. Only the inversion
    /// method uses it; closed forms are evaluated directly.
    pub fn warm(&mut self, x_max: f64) -> Result<()> {
        if !(x_max > 0.0) || !x_max.is_finite() {
            return Err(Error::Domain(format!("cache range must be positive, got {x_max}")));
        }
        if self.closed.is_some() {
            return Ok(());
        }
        let fastest = match exponent_roots(&self.model, self.q) {
            Ok(r) => r
                .simple
                .iter()
                .chain(r.double.iter())
                .fold(0.0f64, |m, v| m.max(v.abs())),
            Err(_) => self.phi.abs() + self.model.abscissa().abs().min(1e6),
        };
        let h_min = 0.01 / (1.0 + fastest);
        let h_max = 0.01 / (1.0 + self.phi.abs());
        let mut xs = vec![h_min];
        while *xs.last().expect("nonempty") < x_max {
            let last = *xs.last().expect("nonempty");
            let step = (0.05 * last).clamp(h_min, h_max);
            xs.push((last + step).min(x_max));
        }
        let mut cache = Cache {
            x: Vec::with_capacity(xs.len()),
            w: Vec::with_capacity(xs.len()),
            w1: Vec::with_capacity(xs.len()),
            w2: Vec::with_capacity(xs.len()),
        };
        for &x in &xs {
            cache.w.push(self.invert_w(x)?.0);
            cache.w1.push(self.invert_w1(x)?.0);
            cache.w2.push(self.invert_w2(x)?.0);
            cache.x.push(x);
        }
        self.cache = Some(cache);
        Ok(())
    }
}

/// Largest root of `psi(l) = q` for any `q` above the minimum of `psi`.
fn largest_root(model: &LevyModel, q: f64) -> Result<f64> {
    if q >= 0.0 {
        return model.phi(q);
    }
    let m = branch_minimizer(model)?.unwrap_or(0.0).max(model.abscissa());
    let probe = m.max(0.0) + 1.0;
    let (fp, dp) = (model.laplace_exponent(probe) - q, model.laplace_exponent_d1(probe));
    let hi = if fp >= 0.0 { probe } else { probe - fp / dp };
    newton_bracketed(
        |l| (model.laplace_exponent(l) - q, model.laplace_exponent_d1(l)),
        m,
        hi + 1e-9 * (hi - m) + 1e-12,
        -1.0,
        hi,
        RootOptions::default(),
    )
}
