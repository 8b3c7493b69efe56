//! Catalog of vertex-weight laws on (0,1]: exact sampling, moments, tail
//! functions and maximum-domain-of-attraction classification.

use rand::Rng;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quad;

#[derive(Debug, Error, PartialEq)]
pub enum LawError {
    #[error("invalid law parameter: {0}")]
    InvalidParameter(String),
    #[error("argument out of domain: {0}")]
    Domain(String),
    #[error("no MDA classification for this law: {0}")]
    Unclassified(String),
}

/// Continuous base law for the mixture component of `AtomMix`, supported
/// on (0,1). Restricted to closed-form-samplable families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BaseLaw {
    Constant { value: f64 },
    Beta { alpha: f64, beta: f64 },
}

impl BaseLaw {
    fn validate(&self) -> Result<(), LawError> {
        match *self {
            BaseLaw::Constant { value } => {
                if !(value > 0.0 && value < 1.0) {
                    return Err(LawError::InvalidParameter(format!(
                        "AtomMix base constant must lie in (0,1), got {value}"
                    )));
                }
            }
            BaseLaw::Beta { alpha, beta } => {
                if !(alpha > 0.0 && beta > 0.0) {
                    return Err(LawError::InvalidParameter(format!(
                        "beta base needs alpha, beta > 0, got ({alpha}, {beta})"
                    )));
                }
            }
        }
        Ok(())
    }

    fn mean(&self) -> f64 {
        match *self {
            BaseLaw::Constant { value } => value,
            BaseLaw::Beta { alpha, beta } => alpha / (alpha + beta),
        }
    }

    /// P(base > x)
    fn tail(&self, x: f64) -> f64 {
        match *self {
            BaseLaw::Constant { value } => {
                if x < value {
                    1.0
                } else {
                    0.0
                }
            }
            BaseLaw::Beta { alpha, beta } => beta_tail(alpha, beta, x),
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            BaseLaw::Constant { value } => value,
            BaseLaw::Beta { alpha, beta } => {
                rand_distr::Beta::new(alpha, beta).unwrap().sample(rng)
            }
        }
    }

    fn expect<F: Fn(f64) -> f64>(&self, f: &F, rel_tol: f64) -> f64 {
        match *self {
            BaseLaw::Constant { value } => f(value),
            BaseLaw::Beta { alpha, beta } => beta_expect(alpha, beta, f, rel_tol),
        }
    }
}

/// A vertex-weight distribution from the catalog.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightLaw {
    /// Point mass at `value` in (0,1].
    Constant { value: f64 },
    /// Mass `q0` at one, mass `1-q0` spread over (0,1) by `base`.
    AtomMix { q0: f64, base: Option<BaseLaw> },
    /// Beta(alpha, beta) on (0,1).
    Beta { alpha: f64, beta: f64 },
    /// Tail P(W >= x) = (1-x)^{-b} e^{-x/(c1(1-x))}, requires b*c1 <= 1.
    GammaFraction { b: f64, c1: f64 },
}

/// Maximum-domain-of-attraction class of the weight distribution near its
/// upper endpoint 1; determines the centering regime downstream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MdaTag {
    Atom { q0: f64 },
    Weibull { alpha_minus_one: f64 },
    GumbelRv { tau: f64, c1: f64, b: f64 },
}

impl WeightLaw {
    pub fn constant(value: f64) -> Result<Self, LawError> {
        let law = WeightLaw::Constant { value };
        law.validate()?;
        Ok(law)
    }

    pub fn atom_mix(q0: f64, base: Option<BaseLaw>) -> Result<Self, LawError> {
        let law = WeightLaw::AtomMix { q0, base };
        law.validate()?;
        Ok(law)
    }

    pub fn beta(alpha: f64, beta: f64) -> Result<Self, LawError> {
        let law = WeightLaw::Beta { alpha, beta };
        law.validate()?;
        Ok(law)
    }

    pub fn gamma_fraction(b: f64, c1: f64) -> Result<Self, LawError> {
        let law = WeightLaw::GammaFraction { b, c1 };
        law.validate()?;
        Ok(law)
    }

    /// Supremum of the support: 1 for every law except a constant below 1.
    /// The geometric lower bound on p_k only applies when this equals 1.
    pub fn upper_endpoint(&self) -> f64 {
        match self {
            WeightLaw::Constant { value } => *value,
            _ => 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), LawError> {
        match self {
            WeightLaw::Constant { value } => {
                if !(*value > 0.0 && *value <= 1.0) {
                    return Err(LawError::InvalidParameter(format!(
                        "constant weight must lie in (0,1], got {value}"
                    )));
                }
            }
            WeightLaw::AtomMix { q0, base } => {
                if !(*q0 > 0.0 && *q0 <= 1.0) {
                    return Err(LawError::InvalidParameter(format!(
                        "atom mass q0 must lie in (0,1], got {q0}"
                    )));
                }
                match base {
                    Some(b) => b.validate()?,
                    None => {
                        if *q0 < 1.0 {
                            return Err(LawError::InvalidParameter(
                                "q0 < 1 requires a base law for the remaining mass".into(),
                            ));
                        }
                    }
                }
            }
            WeightLaw::Beta { alpha, beta } => {
                if !(*alpha > 0.0 && *beta > 0.0) {
                    return Err(LawError::InvalidParameter(format!(
                        "beta law needs alpha, beta > 0, got ({alpha}, {beta})"
                    )));
                }
            }
            WeightLaw::GammaFraction { b, c1 } => {
                if !(*c1 > 0.0) {
                    return Err(LawError::InvalidParameter(format!(
                        "gamma-fraction law needs c1 > 0, got {c1}"
                    )));
                }
                if b * c1 > 1.0 {
                    return Err(LawError::InvalidParameter(format!(
                        "gamma-fraction law needs b*c1 <= 1, got b={b}, c1={c1}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Exact draw from the law.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            WeightLaw::Constant { value } => *value,
            WeightLaw::AtomMix { q0, base } => {
                if *q0 >= 1.0 || rng.gen::<f64>() < *q0 {
                    1.0
                } else {
                    base.as_ref().expect("validated").sample(rng)
                }
            }
            WeightLaw::Beta { alpha, beta } => rand_distr::Beta::new(*alpha, *beta)
                .unwrap()
                .sample(rng),
            WeightLaw::GammaFraction { b, c1 } => {
                let u: f64 = rng.gen();
                gamma_fraction_inverse_tail(*b, *c1, u)
            }
        }
    }

    /// Exact mean E[W].
    pub fn mean(&self) -> f64 {
        match self {
            WeightLaw::Constant { value } => *value,
            WeightLaw::AtomMix { q0, base } => {
                q0 + (1.0 - q0) * base.as_ref().map_or(0.0, |b| b.mean())
            }
            WeightLaw::Beta { alpha, beta } => alpha / (alpha + beta),
            WeightLaw::GammaFraction { b, c1 } => {
                let (b, c1) = (*b, *c1);
                quad::integrate(|x| x * gamma_fraction_density(b, c1, x), 0.0, 1.0, 1e-10)
            }
        }
    }

    /// theta = 1 + E[W], the base of the geometric degree-tail decay.
    pub fn theta(&self) -> f64 {
        1.0 + self.mean()
    }

    /// P(W > x) for x in [0,1).
    pub fn tail(&self, x: f64) -> Result<f64, LawError> {
        if !(0.0..1.0).contains(&x) {
            return Err(LawError::Domain(format!("tail requires x in [0,1), got {x}")));
        }
        Ok(match self {
            WeightLaw::Constant { value } => {
                if x < *value {
                    1.0
                } else {
                    0.0
                }
            }
            WeightLaw::AtomMix { q0, base } => {
                q0 + (1.0 - q0) * base.as_ref().map_or(0.0, |b| b.tail(x))
            }
            WeightLaw::Beta { alpha, beta } => beta_tail(*alpha, *beta, x),
            WeightLaw::GammaFraction { b, c1 } => gamma_fraction_tail(*b, *c1, x),
        })
    }

    /// P(W = 1), the atom mass at the upper endpoint.
    pub fn atom_mass(&self) -> f64 {
        match self {
            WeightLaw::Constant { value } => {
                if *value >= 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            WeightLaw::AtomMix { q0, .. } => *q0,
            _ => 0.0,
        }
    }

    /// E[f(W)]: atom contributions exactly, continuous parts by quadrature.
    pub fn expect<F: Fn(f64) -> f64>(&self, f: F, rel_tol: f64) -> f64 {
        match self {
            WeightLaw::Constant { value } => f(*value),
            WeightLaw::AtomMix { q0, base } => {
                q0 * f(1.0)
                    + (1.0 - q0) * base.as_ref().map_or(0.0, |b| b.expect(&f, rel_tol))
            }
            WeightLaw::Beta { alpha, beta } => beta_expect(*alpha, *beta, &f, rel_tol),
            WeightLaw::GammaFraction { b, c1 } => {
                let (b, c1) = (*b, *c1);
                quad::integrate(|x| f(x) * gamma_fraction_density(b, c1, x), 0.0, 1.0, rel_tol)
            }
        }
    }

    /// MDA classification; `Constant` below one has no class.
    pub fn mda_class(&self) -> Result<MdaTag, LawError> {
        match self {
            WeightLaw::Constant { value } => {
                if *value >= 1.0 {
                    Ok(MdaTag::Atom { q0: 1.0 })
                } else {
                    Err(LawError::Unclassified(format!(
                        "constant weight {value} has upper endpoint below 1"
                    )))
                }
            }
            WeightLaw::AtomMix { q0, .. } => Ok(MdaTag::Atom { q0: *q0 }),
            WeightLaw::Beta { beta, .. } => Ok(MdaTag::Weibull { alpha_minus_one: *beta }),
            WeightLaw::GammaFraction { b, c1 } => Ok(MdaTag::GumbelRv {
                tau: 1.0,
                c1: *c1,
                b: *b,
            }),
        }
    }
}

fn beta_log_norm(alpha: f64, beta: f64) -> f64 {
    use crate::specfun::log_gamma;
    log_gamma(alpha + beta).unwrap() - log_gamma(alpha).unwrap() - log_gamma(beta).unwrap()
}

/// Integral of g(w) w^{alpha-1} (1-w)^{beta-1} over [lo, 1], with the
/// endpoint singularities removed by substitution: w = t^{1/alpha} on
/// [lo, 1/2] and 1 - w = u^{1/beta} on [1/2, 1], each of which turns the
/// singular factor into the Jacobian exactly.
fn beta_kernel_integral<F: Fn(f64) -> f64>(alpha: f64, beta: f64, lo: f64, g: &F, rel_tol: f64) -> f64 {
    let mut total = 0.0;
    if lo < 0.5 {
        total += quad::integrate(
            |t: f64| {
                let w = t.powf(1.0 / alpha);
                g(w) * (1.0 - w).powf(beta - 1.0) / alpha
            },
            lo.powf(alpha),
            0.5f64.powf(alpha),
            rel_tol,
        );
    }
    let hi_edge = 1.0 - lo.max(0.5);
    total += quad::integrate(
        |u: f64| {
            let w = 1.0 - u.powf(1.0 / beta);
            g(w) * w.powf(alpha - 1.0) / beta
        },
        0.0,
        hi_edge.powf(beta),
        rel_tol,
    );
    total
}

fn beta_expect<F: Fn(f64) -> f64>(alpha: f64, beta: f64, f: &F, rel_tol: f64) -> f64 {
    let c = beta_log_norm(alpha, beta).exp();
    c * beta_kernel_integral(alpha, beta, 0.0, f, rel_tol)
}

fn beta_tail(alpha: f64, beta: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let c = beta_log_norm(alpha, beta).exp();
    (c * beta_kernel_integral(alpha, beta, x, &|_| 1.0, 1e-12)).clamp(0.0, 1.0)
}

/// P(W >= x) = (1-x)^{-b} e^{-x/(c1(1-x))}
pub fn gamma_fraction_tail(b: f64, c1: f64, x: f64) -> f64 {
    let one_minus = 1.0 - x;
    (-b * one_minus.ln() - x / (c1 * one_minus)).exp()
}

/// Density of the gamma-fraction law; nonnegative on [0,1) when b*c1 <= 1.
pub fn gamma_fraction_density(b: f64, c1: f64, x: f64) -> f64 {
    let one_minus = 1.0 - x;
    let prefactor = 1.0 / c1 - b * one_minus;
    prefactor * (-(b + 2.0) * one_minus.ln() - x / (c1 * one_minus)).exp()
}

/// Inverse of the gamma-fraction tail by bisection: the x with
/// P(W >= x) = u, to absolute tolerance 1e-12 (60 iterations).
fn gamma_fraction_inverse_tail(b: f64, c1: f64, u: f64) -> f64 {
    let mut lo = 0.0_f64; // tail(lo) = 1 >= u
    let mut hi = 1.0 - 1e-15; // tail(hi) ~ 0 < u
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if gamma_fraction_tail(b, c1, mid) >= u {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
