//! Safeguarded Newton iteration on a sign-changing bracket.
//!
//! The end points of the bracket are never evaluated, so they may sit on
//! poles of the target function as long as the sign on each side is known.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct RootOptions {
    /// Absolute tolerance on the residual `|f(x)|`.
    pub f_tol: f64,
    pub max_iter: usize,
}

impl Default for RootOptions {
    fn default() -> Self {
        Self {
            f_tol: 1e-12,
            max_iter: 200,
        }
    }
}

/// Finds a root of `f` in the open interval `(lo, hi)`.
///
/// `f` returns the pair `(f(x), f'(x))`. `sign_lo` is the sign of `f` just to
/// the right of `lo`; the sign just left of `hi` must be the opposite one.
/// Newton steps that leave the current bracket are replaced by bisection.
pub fn newton_bracketed<F>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    sign_lo: f64,
    start: f64,
    opts: RootOptions,
) -> Result<f64>
where
    F: FnMut(f64) -> (f64, f64),
{
    if !(lo < hi) {
        return Err(Error::Domain(format!("empty bracket [{lo}, {hi}]")));
    }
    let mut x = if start > lo && start < hi {
        start
    } else {
        0.5 * (lo + hi)
    };
    for _ in 0..opts.max_iter {
        let (fx, dfx) = f(x);
        if !fx.is_finite() {
            return Err(Error::RootFinding {
                iterations: 0,
                context: format!("non-finite residual at {x}"),
            });
        }
        if fx.abs() <= opts.f_tol {
            return Ok(x);
        }
        if fx.signum() == sign_lo.signum() {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - fx / dfx;
        let next = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let scale = x.abs().max(next.abs()).max(f64::MIN_POSITIVE);
        if (next - x).abs() <= 2.0 * f64::EPSILON * scale || hi - lo <= 4.0 * f64::EPSILON * scale
        {
            return Ok(next);
        }
        x = next;
    }
    Err(Error::RootFinding {
        iterations: opts.max_iter,
        context: format!("bracket [{lo}, {hi}] did not collapse"),
    })
}

/// Locates a sign change of `f` on `[lo, hi]` by bisection, for functions
/// without a usable derivative.
pub fn bisect<F>(mut f: F, mut lo: f64, mut hi: f64, max_iter: usize) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::Domain(format!("no sign change on [{lo}, {hi}]")));
    }
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn newton_finds_sqrt_two() {
        let r = newton_bracketed(|x| (x * x - 2.0, 2.0 * x), 0.0, 10.0, -1.0, 9.0, RootOptions::default())
            .unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn newton_survives_pole_at_bracket_end() {
        // 1/(x+1) - 2 has a pole at -1 and a root at -0.5.
        let f = |x: f64| (1.0 / (x + 1.0) - 2.0, -1.0 / ((x + 1.0) * (x + 1.0)));
        let r = newton_bracketed(f, -1.0, 5.0, 1.0, 4.0, RootOptions::default()).unwrap();
        assert!((r + 0.5).abs() < 1e-13);
    }

    #[test]
    fn bisect_rejects_missing_sign_change() {
        assert!(bisect(|x| x * x + 1.0, -1.0, 1.0, 100).is_err());
        let r = bisect(|x| x.cos(), 0.0, 3.0, 200).unwrap();
        assert!((r - std::f64::consts::FRAC_PI_2).abs() < 1e-14);
    }
}
