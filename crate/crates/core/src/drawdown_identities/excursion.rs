//! Excursion-measure functionals of the reflected process, expressed through
//! scale functions. Each takes excursion heights measured from the current
//! maximum; they are the local integrands of the general draw-down formulas.

use crate::error::{Error, Result};
use crate::scale_functions::ScaleFunction;

/// Rate at which excursions either exceed height `h` or are killed at rate
/// `q`: `W'(h)/W(h)`.
pub fn killing_rate(sf: &ScaleFunction, h: f64) -> Result<f64> {
    Ok(sf.w_prime(h)? / sf.w(h)?)
}

/// Laplace transform of the first passage above height `h` on excursions
/// that do exceed it: `W'(h)/W(h) Z(h) - q W(h)`.
pub fn overshoot_functional(sf: &ScaleFunction, h: f64) -> Result<f64> {
    let w = sf.w(h)?;
    Ok(sf.w_prime(h)? / w * sf.z(h)? - sf.q() * w)
}

/// Excursions that first pass height `h` continuously:
/// `sigma^2/2 (W'(h)^2/W(h) - W''(h))`.
pub fn creeping_functional(sf: &ScaleFunction, h: f64) -> Result<f64> {
    let s2 = sf.model().sigma() * sf.model().sigma();
    let w1 = sf.w_prime(h)?;
    Ok(0.5 * s2 * (w1 * w1 / sf.w(h)? - sf.w_second(h)?))
}

/// Excursions that hit depth `h_hit` before exceeding `h_kill > h_hit`:
/// `W(h_kill)/W(h_kill - h_hit) (W'(h_hit)/W(h_hit) - W'(h_kill)/W(h_kill))`.
pub fn hitting_functional(sf: &ScaleFunction, h_hit: f64, h_kill: f64) -> Result<f64> {
    if !(h_kill > h_hit) {
        return Err(Error::Precondition(format!(
            "hitting depth {h_hit} must be below the killing depth {h_kill}"
        )));
    }
    let wk = sf.w(h_kill)?;
    Ok(wk / sf.w(h_kill - h_hit)?
        * (sf.w_prime(h_hit)? / sf.w(h_hit)? - sf.w_prime(h_kill)? / wk))
}

/// Density at depth `s` of the `q`-potential of an excursion killed on
/// exceeding `h`, for `0 < s < h`: `W'(s) - W'(h)/W(h) W(s)`. The local-time
/// part carries an additional atom `W(0)` at depth 0, see
/// [`occupation_atom`].
pub fn occupation_density(sf: &ScaleFunction, h: f64, s: f64) -> Result<f64> {
    if !(s > 0.0 && s < h) {
        return Ok(0.0);
    }
    Ok(sf.w_prime(s)? - killing_rate(sf, h)? * sf.w(s)?)
}

/// Weight `W(0)` of time spent at the running maximum.
pub fn occupation_atom(sf: &ScaleFunction) -> f64 {
    sf.w_at_zero()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drawdown_identities::classical;
    use crate::levy_model::LevyModel;

    #[test]
    fn quadratic_exponent_values() {
        let m = LevyModel::brownian(0.0, 2f64.sqrt()).unwrap();
        let sf = ScaleFunction::new(&m, 0.0).unwrap();
        for h in [0.5, 1.0, 3.0] {
            assert!((killing_rate(&sf, h).unwrap() - 1.0 / h).abs() < 1e-13);
            assert!((overshoot_functional(&sf, h).unwrap() - 1.0 / h).abs() < 1e-13);
            // W = x: W'' = 0, so creeping is sigma^2/2 * 1/h.
            assert!((creeping_functional(&sf, h).unwrap() - 1.0 / h).abs() < 1e-12);
        }
    }

    #[test]
    fn hitting_functional_is_derivative_of_two_sided_hitting() {
        // Symmetric heights b - a = a - c.
        let m = LevyModel::exp_jumps(1.0, 0.8, 1.0, 2.0).unwrap();
        let sf = ScaleFunction::new(&m, 0.6).unwrap();
        let (a, c) = (-0.7, -1.4);
        let b = 0.7;
        let g = |b: f64| classical::hitting(&sf, 0.0, a, b, c).unwrap();
        let h = 1e-4;
        let fd = (g(b + h) - g(b - h)) / (2.0 * h);
        let expected = sf.w(-a).unwrap() / sf.w(b - a).unwrap()
            * hitting_functional(&sf, b - a, b - c).unwrap();
        assert!((fd - expected).abs() < 1e-7 * expected.abs(), "{fd} vs {expected}");
    }

    #[test]
    fn occupation_density_is_zero_outside() {
        let sf = ScaleFunction::new(&LevyModel::brownian(1.0, 1.0).unwrap(), 1.0).unwrap();
        assert_eq!(occupation_density(&sf, 1.0, 1.5).unwrap(), 0.0);
        assert_eq!(occupation_density(&sf, 1.0, -0.1).unwrap(), 0.0);
        assert!(occupation_density(&sf, 1.0, 0.5).unwrap() > 0.0);
        assert_eq!(occupation_atom(&sf), 0.0);
    }
}
