//! Catalog of spectrally negative Lévy processes.
//!
//! A model is a drift `mu`, a Gaussian coefficient `sigma` and a compound
//! Poisson part with (mixed) exponential negative jumps. Its Laplace exponent
//!
//! ```text
//! psi(l) = mu*l + sigma^2*l^2/2 + sum_k rate_k * (alpha_k/(alpha_k + l) - 1)
//! ```
//!
//! is finite on `(-min alpha, inf)`, convex on `[0, inf)`, and closed under
//! exponential tilting, which maps an `Exp(alpha)` jump law to `Exp(alpha + c)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::roots::{newton_bracketed, RootOptions};

/// One component of an exponential mixture jump law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpComponent {
    pub weight: f64,
    pub alpha: f64,
}

/// Description of the Lévy measure restricted to the implemented catalog.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum JumpSpec {
    None,
    /// Jumps of size `-E` with `E ~ Exp(alpha)` arriving at `rate`.
    Exp { rate: f64, alpha: f64 },
    /// Jumps whose magnitude is a finite mixture of exponentials.
    MixedExp {
        rate: f64,
        components: Vec<ExpComponent>,
    },
}

impl Default for JumpSpec {
    fn default() -> Self {
        JumpSpec::None
    }
}

impl JumpSpec {
    pub fn rate(&self) -> f64 {
        match self {
            JumpSpec::None => 0.0,
            JumpSpec::Exp { rate, .. } | JumpSpec::MixedExp { rate, .. } => *rate,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            JumpSpec::None => Ok(()),
            JumpSpec::Exp { rate, alpha } => {
                check_nonneg("jump rate", *rate)?;
                check_pos("alpha", *alpha)
            }
            JumpSpec::MixedExp { rate, components } => {
                check_nonneg("jump rate", *rate)?;
                if components.is_empty() {
                    return Err(Error::InvalidModel("mixture has no components".into()));
                }
                let mut total = 0.0;
                for c in components {
                    check_pos("mixture weight", c.weight)?;
                    check_pos("alpha", c.alpha)?;
                    total += c.weight;
                }
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidModel(format!(
                        "mixture weights sum to {total}, expected 1"
                    )));
                }
                Ok(())
            }
        }
    }

    /// `(rate_k, alpha_k)` pairs with distinct alphas in increasing order.
    fn parts(&self) -> Vec<(f64, f64)> {
        let mut parts: Vec<(f64, f64)> = match self {
            JumpSpec::None => Vec::new(),
            JumpSpec::Exp { rate, alpha } => vec![(*rate, *alpha)],
            JumpSpec::MixedExp { rate, components } => components
                .iter()
                .map(|c| (rate * c.weight, c.alpha))
                .collect(),
        };
        parts.retain(|&(r, _)| r > 0.0);
        parts.sort_by(|a, b| a.1.total_cmp(&b.1));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(parts.len());
        for (r, a) in parts {
            match merged.last_mut() {
                Some(last) if last.1 == a => last.0 += r,
                _ => merged.push((r, a)),
            }
        }
        merged
    }
}

fn check_nonneg(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidModel(format!("{name} must be finite and >= 0, got {v}")))
    }
}

fn check_pos(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidModel(format!("{name} must be finite and > 0, got {v}")))
    }
}

#[derive(Debug, Clone, Deserialize)]
struct ModelDoc {
    mu: f64,
    #[serde(default)]
    sigma: f64,
    #[serde(default)]
    jumps: JumpSpec,
}

impl TryFrom<ModelDoc> for LevyModel {
    type Error = Error;

    fn try_from(doc: ModelDoc) -> Result<Self> {
        LevyModel::new(doc.mu, doc.sigma, doc.jumps)
    }
}

/// A spectrally negative Lévy process from the catalog. Immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelDoc")]
pub struct LevyModel {
    mu: f64,
    sigma: f64,
    jumps: JumpSpec,
    #[serde(skip)]
    parts: Vec<(f64, f64)>,
}

impl LevyModel {
    pub fn new(mu: f64, sigma: f64, jumps: JumpSpec) -> Result<Self> {
        if !mu.is_finite() {
            return Err(Error::InvalidModel(format!("drift must be finite, got {mu}")));
        }
        check_nonneg("sigma", sigma)?;
        jumps.validate()?;
        if sigma == 0.0 && mu <= 0.0 {
            return Err(Error::InvalidModel(
                "with sigma = 0 the drift must be > 0 (otherwise -X is a subordinator)".into(),
            ));
        }
        let parts = jumps.parts();
        Ok(Self {
            mu,
            sigma,
            jumps,
            parts,
        })
    }

    /// Brownian motion with drift.
    pub fn brownian(mu: f64, sigma: f64) -> Result<Self> {
        Self::new(mu, sigma, JumpSpec::None)
    }

    /// Drift plus Gaussian part plus `Exp(alpha)` jumps at `rate`.
    pub fn exp_jumps(mu: f64, sigma: f64, rate: f64, alpha: f64) -> Result<Self> {
        Self::new(mu, sigma, JumpSpec::Exp { rate, alpha })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn jumps(&self) -> &JumpSpec {
        &self.jumps
    }

    /// Jump components as `(rate, alpha)` with distinct, increasing alphas.
    pub fn jump_parts(&self) -> &[(f64, f64)] {
        &self.parts
    }

    pub fn jump_rate(&self) -> f64 {
        self.parts.iter().map(|p| p.0).sum()
    }

    pub fn has_bounded_variation(&self) -> bool {
        self.sigma == 0.0
    }

    /// `W(0) = lim l/psi(l)`: `1/mu` for bounded variation, else 0.
    pub fn w_at_zero(&self) -> f64 {
        if self.has_bounded_variation() {
            1.0 / self.mu
        } else {
            0.0
        }
    }

    /// Left end of the half-line on which `psi` is finite.
    pub fn abscissa(&self) -> f64 {
        self.parts.first().map_or(f64::NEG_INFINITY, |p| -p.1)
    }

    pub fn laplace_exponent(&self, lambda: f64) -> f64 {
        let s2 = self.sigma * self.sigma;
        let mut v = self.mu * lambda + 0.5 * s2 * lambda * lambda;
        for &(rate, alpha) in &self.parts {
            v -= rate * lambda / (alpha + lambda);
        }
        v
    }

    pub fn laplace_exponent_d1(&self, lambda: f64) -> f64 {
        let mut v = self.mu + self.sigma * self.sigma * lambda;
        for &(rate, alpha) in &self.parts {
            let d = alpha + lambda;
            v -= rate * alpha / (d * d);
        }
        v
    }

    pub fn laplace_exponent_d2(&self, lambda: f64) -> f64 {
        let mut v = self.sigma * self.sigma;
        for &(rate, alpha) in &self.parts {
            let d = alpha + lambda;
            v += 2.0 * rate * alpha / (d * d * d);
        }
        v
    }

    pub fn laplace_exponent_d3(&self, lambda: f64) -> f64 {
        let mut v = 0.0;
        for &(rate, alpha) in &self.parts {
            let d = alpha + lambda;
            v -= 6.0 * rate * alpha / (d * d * d * d);
        }
        v
    }

    /// `psi` continued to the complex plane (used on inversion contours).
    pub fn laplace_exponent_complex(&self, z: Complex64) -> Complex64 {
        let s2 = self.sigma * self.sigma;
        let mut v = z * self.mu + z * z * (0.5 * s2);
        for &(rate, alpha) in &self.parts {
            v -= z * rate / (z + alpha);
        }
        v
    }

    /// Minimiser of `psi` on `[0, inf)`.
    pub fn psi_minimizer(&self) -> Result<f64> {
        if self.laplace_exponent_d1(0.0) >= 0.0 {
            return Ok(0.0);
        }
        let mut hi = 1.0;
        let mut guard = 0;
        while self.laplace_exponent_d1(hi) <= 0.0 {
            hi *= 2.0;
            guard += 1;
            if guard > 1100 {
                return Err(Error::RootFinding {
                    iterations: guard,
                    context: "psi' never turns positive".into(),
                });
            }
        }
        newton_bracketed(
            |l| (self.laplace_exponent_d1(l), self.laplace_exponent_d2(l)),
            0.0,
            hi,
            -1.0,
            hi,
            RootOptions {
                f_tol: 0.0,
                max_iter: 200,
            },
        )
    }

    /// Right inverse `Phi(q) = sup{l >= 0 : psi(l) = q}`.
    pub fn phi(&self, q: f64) -> Result<f64> {
        if !(q >= 0.0) || !q.is_finite() {
            return Err(Error::Domain(format!("phi needs q >= 0, got {q}")));
        }
        let lo = self.psi_minimizer()?;
        if q == 0.0 && lo == 0.0 {
            return Ok(0.0);
        }
        // Any point right of the minimiser gives an upper bound through its
        // tangent line, by convexity.
        let probe = lo + 1.0;
        let psi_probe = self.laplace_exponent(probe);
        let hi = if psi_probe >= q {
            probe
        } else {
            probe + (q - psi_probe) / self.laplace_exponent_d1(probe)
        };
        let hi_open = hi + 1e-9 * (hi - lo) + 1e-12;
        newton_bracketed(
            |l| (self.laplace_exponent(l) - q, self.laplace_exponent_d1(l)),
            lo,
            hi_open,
            -1.0,
            hi,
            RootOptions::default(),
        )
    }

    /// The model under the Esscher measure `P^(c)`, whose exponent is
    /// `psi(c + s) - psi(c)`.
    pub fn tilt(&self, c: f64) -> Result<Self> {
        if !(c >= 0.0) || !c.is_finite() {
            return Err(Error::Domain(format!("tilt needs c >= 0, got {c}")));
        }
        if c == 0.0 {
            return Ok(self.clone());
        }
        let jumps = match &self.jumps {
            JumpSpec::None => JumpSpec::None,
            JumpSpec::Exp { rate, alpha } => JumpSpec::Exp {
                rate: rate * alpha / (alpha + c),
                alpha: alpha + c,
            },
            JumpSpec::MixedExp { rate, components } => {
                let scaled: Vec<(f64, f64)> = components
                    .iter()
                    .map(|k| (rate * k.weight * k.alpha / (k.alpha + c), k.alpha + c))
                    .collect();
                let total: f64 = scaled.iter().map(|s| s.0).sum();
                JumpSpec::MixedExp {
                    rate: total,
                    components: scaled
                        .into_iter()
                        .map(|(r, a)| ExpComponent {
                            weight: r / total,
                            alpha: a,
                        })
                        .collect(),
                }
            }
        };
        Self::new(self.mu + self.sigma * self.sigma * c, self.sigma, jumps)
    }
}
