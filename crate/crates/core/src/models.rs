//! Generative statistical models with seeded, reproducible samplers.
//!
//! Three model kinds: i.i.d. draws from one of four dominated parametric
//! families, i.i.d. draws from an arbitrary discrete law, and the linear
//! process `X_n = sum_k a^k Z_{n-k}` with centered innovations. Sampling
//! is deterministic given `(model, n, seed)`; see [`crate::rng`] for the
//! stream layout.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::measures::{DiscreteMeasure, MeasureError};
use crate::rng::{SeedSpec, SplitMix64};
use crate::special::normal_cdf;

/// Innovation burn-in is chosen so the discarded tail of the moving-average
/// representation is below this fraction of the stationary scale.
const BURN_IN_TAIL: f64 = 1e-12;
/// Hard cap on the burn-in length.
const BURN_IN_CAP: usize = 100_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("parameter {theta} outside the family's range")]
    ThetaOutOfRange { theta: f64 },
    #[error("observation {x} outside the family's support")]
    ObservationOutOfSupport { x: f64 },
    #[error("linear-process coefficient {a} outside (-1, 1)")]
    CoefficientOutOfRange { a: f64 },
    #[error("invalid innovation law: {0}")]
    InvalidInnovation(String),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

/// A dominated one-parameter family; the Normal family carries its known
/// variance as a fixed hyperparameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ParametricFamily {
    /// Success probability `theta` in (0, 1).
    Bernoulli,
    /// Rate `theta` in (0, inf).
    Poisson,
    /// Rate parametrization: density `theta * exp(-theta x)`, theta in (0, inf).
    Exponential,
    /// Location `theta` in R, known variance `sigma2 > 0`.
    Normal { sigma2: f64 },
}

impl ParametricFamily {
    pub fn theta_in_range(&self, theta: f64) -> bool {
        if !theta.is_finite() {
            return false;
        }
        match *self {
            ParametricFamily::Bernoulli => theta > 0.0 && theta < 1.0,
            ParametricFamily::Poisson | ParametricFamily::Exponential => theta > 0.0,
            ParametricFamily::Normal { sigma2 } => sigma2.is_finite() && sigma2 > 0.0,
        }
    }

    fn check_theta(&self, theta: f64) -> Result<(), ModelError> {
        if self.theta_in_range(theta) {
            Ok(())
        } else {
            Err(ModelError::ThetaOutOfRange { theta })
        }
    }

    pub fn in_support(&self, x: f64) -> bool {
        if !x.is_finite() {
            return false;
        }
        match self {
            ParametricFamily::Bernoulli => x == 0.0 || x == 1.0,
            ParametricFamily::Poisson => x >= 0.0 && x.fract() == 0.0,
            ParametricFamily::Exponential => x >= 0.0,
            ParametricFamily::Normal { .. } => true,
        }
    }

    pub fn sample_one(&self, theta: f64, rng: &mut SplitMix64) -> f64 {
        match *self {
            ParametricFamily::Bernoulli => {
                if rng.next_f64() < theta {
                    1.0
                } else {
                    0.0
                }
            }
            ParametricFamily::Poisson => rng.next_poisson(theta),
            ParametricFamily::Exponential => rng.next_exponential(theta),
            ParametricFamily::Normal { sigma2 } => theta + sigma2.sqrt() * rng.next_normal(),
        }
    }

    /// Log-density of a single observation.
    pub fn log_density(&self, theta: f64, x: f64) -> Result<f64, ModelError> {
        self.check_theta(theta)?;
        if !self.in_support(x) {
            return Err(ModelError::ObservationOutOfSupport { x });
        }
        Ok(match *self {
            ParametricFamily::Bernoulli => {
                if x == 1.0 {
                    theta.ln()
                } else {
                    (1.0 - theta).ln()
                }
            }
            ParametricFamily::Poisson => x * theta.ln() - theta - ln_factorial(x as u64),
            ParametricFamily::Exponential => theta.ln() - theta * x,
            ParametricFamily::Normal { sigma2 } => {
                -0.5 * (std::f64::consts::TAU * sigma2).ln()
                    - (x - theta) * (x - theta) / (2.0 * sigma2)
            }
        })
    }

    /// Score `d/d theta log L_1(x; theta)` in closed form.
    pub fn score(&self, theta: f64, x: f64) -> f64 {
        match *self {
            ParametricFamily::Bernoulli => x / theta - (1.0 - x) / (1.0 - theta),
            ParametricFamily::Poisson => x / theta - 1.0,
            ParametricFamily::Exponential => 1.0 / theta - x,
            ParametricFamily::Normal { sigma2 } => (x - theta) / sigma2,
        }
    }

    /// Single-observation Fisher information `I_1(theta)`.
    pub fn fisher_info(&self, theta: f64) -> Result<f64, ModelError> {
        self.check_theta(theta)?;
        Ok(match *self {
            ParametricFamily::Bernoulli => 1.0 / (theta * (1.0 - theta)),
            ParametricFamily::Poisson => 1.0 / theta,
            ParametricFamily::Exponential => 1.0 / (theta * theta),
            ParametricFamily::Normal { sigma2 } => 1.0 / sigma2,
        })
    }

    /// Mean of one observation as a function of theta; the aspect estimated
    /// by the natural sufficient statistic (the sample mean).
    pub fn mean_aspect(&self, theta: f64) -> f64 {
        match *self {
            ParametricFamily::Bernoulli | ParametricFamily::Poisson => theta,
            ParametricFamily::Exponential => 1.0 / theta,
            ParametricFamily::Normal { .. } => theta,
        }
    }

    /// Derivative of [`Self::mean_aspect`] in theta.
    pub fn mean_aspect_derivative(&self, theta: f64) -> f64 {
        match *self {
            ParametricFamily::Bernoulli | ParametricFamily::Poisson => 1.0,
            ParametricFamily::Exponential => -1.0 / (theta * theta),
            ParametricFamily::Normal { .. } => 1.0,
        }
    }

    /// L1 distance between the single-observation densities at two
    /// parameters, in closed form via the unique density crossing point.
    pub fn l1_density_distance(&self, theta1: f64, theta2: f64) -> Result<f64, ModelError> {
        self.check_theta(theta1)?;
        self.check_theta(theta2)?;
        if theta1 == theta2 {
            return Ok(0.0);
        }
        Ok(match *self {
            ParametricFamily::Bernoulli => 2.0 * (theta1 - theta2).abs(),
            ParametricFamily::Poisson => {
                let (lo, hi) = if theta1 < theta2 {
                    (theta1, theta2)
                } else {
                    (theta2, theta1)
                };
                // pmf ratio crosses one at k* = (hi - lo) / ln(hi / lo).
                let k_star = ((hi - lo) / (hi / lo).ln()).floor();
                2.0 * (poisson_cdf(lo, k_star) - poisson_cdf(hi, k_star))
            }
            ParametricFamily::Exponential => {
                let (lo, hi) = if theta1 < theta2 {
                    (theta1, theta2)
                } else {
                    (theta2, theta1)
                };
                let x_star = (hi / lo).ln() / (hi - lo);
                2.0 * ((-lo * x_star).exp() - (-hi * x_star).exp())
            }
            ParametricFamily::Normal { sigma2 } => {
                let half = 0.5 * (theta1 - theta2).abs() / sigma2.sqrt();
                2.0 * (2.0 * normal_cdf(half) - 1.0)
            }
        })
    }
}

fn ln_factorial(k: u64) -> f64 {
    (2..=k).map(|i| (i as f64).ln()).sum()
}

fn poisson_cdf(theta: f64, k_max: f64) -> f64 {
    if k_max < 0.0 {
        return 0.0;
    }
    let mut pmf = (-theta).exp();
    let mut cdf = pmf;
    let mut k = 0.0;
    while k < k_max {
        k += 1.0;
        pmf *= theta / k;
        cdf += pmf;
    }
    cdf.min(1.0)
}

/// Product log-likelihood of an i.i.d. sample.
pub fn log_likelihood(
    family: &ParametricFamily,
    theta: f64,
    xs: &[f64],
) -> Result<f64, ModelError> {
    let mut total = 0.0;
    for &x in xs {
        total += family.log_density(theta, x)?;
    }
    Ok(total)
}

/// Fisher information of one observation; see [`ParametricFamily::fisher_info`].
pub fn fisher_info(family: &ParametricFamily, theta: f64) -> Result<f64, ModelError> {
    family.fisher_info(theta)
}

pub fn l1_density_distance(
    family: &ParametricFamily,
    theta1: f64,
    theta2: f64,
) -> Result<f64, ModelError> {
    family.l1_density_distance(theta1, theta2)
}

/// Centered innovation law of a linear process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InnovationLaw {
    /// Centered normal with variance `sigma2`.
    Normal { sigma2: f64 },
    /// Uniform on `[-half_width, half_width]`.
    Uniform { half_width: f64 },
    /// An arbitrary discrete law with mean zero.
    Discrete { measure: DiscreteMeasure },
    /// Draws from `base` with probability `1 - eps`, otherwise an equal
    /// mixture of the atoms at `-magnitude` and `+magnitude`. Keeps the
    /// mean at zero while inflating the tails.
    Contaminated {
        base: Box<InnovationLaw>,
        eps: f64,
        magnitude: f64,
    },
}

impl InnovationLaw {
    pub fn validate(&self) -> Result<(), ModelError> {
        match self {
            InnovationLaw::Normal { sigma2 } => {
                if !(sigma2.is_finite() && *sigma2 > 0.0) {
                    return Err(ModelError::InvalidInnovation(format!(
                        "normal variance {sigma2} must be positive"
                    )));
                }
            }
            InnovationLaw::Uniform { half_width } => {
                if !(half_width.is_finite() && *half_width > 0.0) {
                    return Err(ModelError::InvalidInnovation(format!(
                        "uniform half-width {half_width} must be positive"
                    )));
                }
            }
            InnovationLaw::Discrete { measure } => {
                if measure.dim() != 1 {
                    return Err(ModelError::InvalidInnovation(
                        "discrete innovation must be univariate".into(),
                    ));
                }
                let mean = crate::functionals::mean(measure);
                if mean.abs() > 1e-12 {
                    return Err(ModelError::InvalidInnovation(format!(
                        "innovation mean {mean} not zero"
                    )));
                }
                if self.variance() <= 0.0 {
                    return Err(ModelError::InvalidInnovation(
                        "innovation variance must be positive".into(),
                    ));
                }
            }
            InnovationLaw::Contaminated {
                base,
                eps,
                magnitude,
            } => {
                base.validate()?;
                if !((0.0..=1.0).contains(eps) && eps.is_finite()) {
                    return Err(ModelError::InvalidInnovation(format!(
                        "contamination rate {eps} outside [0, 1]"
                    )));
                }
                if !(magnitude.is_finite() && *magnitude >= 0.0) {
                    return Err(ModelError::InvalidInnovation(format!(
                        "contamination magnitude {magnitude} invalid"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn variance(&self) -> f64 {
        match self {
            InnovationLaw::Normal { sigma2 } => *sigma2,
            InnovationLaw::Uniform { half_width } => half_width * half_width / 3.0,
            InnovationLaw::Discrete { measure } => {
                let m = crate::functionals::mean(measure);
                crate::measures::kahan_sum(
                    measure
                        .iter_atoms()
                        .map(|(c, w)| w * (c[0] - m) * (c[0] - m)),
                )
            }
            InnovationLaw::Contaminated {
                base,
                eps,
                magnitude,
            } => (1.0 - eps) * base.variance() + eps * magnitude * magnitude,
        }
    }

    fn sampler(&self) -> InnovationSampler<'_> {
        let cum = if let InnovationLaw::Discrete { measure } = self {
            let mut acc = 0.0;
            let mut cum: Vec<f64> = measure
                .masses()
                .iter()
                .map(|m| {
                    acc += m;
                    acc
                })
                .collect();
            if let Some(last) = cum.last_mut() {
                *last = 1.0;
            }
            cum
        } else {
            Vec::new()
        };
        InnovationSampler { law: self, cum }
    }
}

struct InnovationSampler<'a> {
    law: &'a InnovationLaw,
    /// Cumulative masses for the discrete case.
    cum: Vec<f64>,
}

impl InnovationSampler<'_> {
    fn draw(&self, rng: &mut SplitMix64) -> f64 {
        match self.law {
            InnovationLaw::Normal { sigma2 } => sigma2.sqrt() * rng.next_normal(),
            InnovationLaw::Uniform { half_width } => (2.0 * rng.next_f64() - 1.0) * half_width,
            InnovationLaw::Discrete { measure } => {
                let u = rng.next_f64();
                let i = self.cum.partition_point(|&c| c <= u);
                measure.values()[i.min(measure.atom_count() - 1)]
            }
            InnovationLaw::Contaminated {
                base,
                eps,
                magnitude,
            } => {
                if rng.next_f64() < *eps {
                    if rng.next_f64() < 0.5 {
                        *magnitude
                    } else {
                        -*magnitude
                    }
                } else {
                    base.sampler().draw(rng)
                }
            }
        }
    }
}

/// The linear process `X_n = sum_{k>=0} a^k Z_{n-k}` with `|a| < 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearProcessModel {
    pub a: f64,
    pub innovation: InnovationLaw,
}

impl LinearProcessModel {
    pub fn new(a: f64, innovation: InnovationLaw) -> Result<Self, ModelError> {
        if !(a.is_finite() && a.abs() < 1.0) {
            return Err(ModelError::CoefficientOutOfRange { a });
        }
        innovation.validate()?;
        Ok(LinearProcessModel { a, innovation })
    }

    /// Burn-in length: smallest `K` with `|a|^K / (1 - |a|) <= 1e-12`,
    /// capped at 10^5. The recursion `X_i = a X_{i-1} + Z_i` started from
    /// zero `K` steps early then matches the moving-average form to within
    /// that tail.
    pub fn burn_in(&self) -> usize {
        let abs_a = self.a.abs();
        if abs_a == 0.0 {
            return 0;
        }
        let k = (BURN_IN_TAIL * (1.0 - abs_a)).ln() / abs_a.ln();
        (k.ceil().max(0.0) as usize).min(BURN_IN_CAP)
    }

    /// Stationary lag-`ell` autocovariance `a^ell * var(Z) / (1 - a^2)`.
    pub fn autocovariance(&self, ell: u32) -> f64 {
        self.a.powi(ell as i32) * self.innovation.variance() / (1.0 - self.a * self.a)
    }
}

/// A generative model: what one experiment replication samples from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    /// I.i.d. draws from a parametric family at a fixed parameter.
    IidParametric {
        family: ParametricFamily,
        theta: f64,
    },
    /// I.i.d. draws from a discrete law.
    IidNonparametric { measure: DiscreteMeasure },
    /// A linear process observed at times `1..=n`.
    LinearProcess { model: LinearProcessModel },
}

impl ModelSpec {
    pub fn validate(&self) -> Result<(), ModelError> {
        match self {
            ModelSpec::IidParametric { family, theta } => family.check_theta(*theta),
            ModelSpec::IidNonparametric { measure } => {
                if measure.dim() != 1 {
                    Err(ModelError::InvalidInnovation(
                        "nonparametric model must be univariate".into(),
                    ))
                } else {
                    Ok(())
                }
            }
            ModelSpec::LinearProcess { model } => {
                LinearProcessModel::new(model.a, model.innovation.clone()).map(|_| ())
            }
        }
    }
}

/// Draws `n` observations; deterministic given `(model, n, seed)`.
pub fn sample(model: &ModelSpec, n: usize, seed: SeedSpec) -> Vec<f64> {
    let mut rng = seed.rng();
    sample_with_rng(model, n, &mut rng)
}

/// Same as [`sample`] but drawing from a caller-owned generator.
pub fn sample_with_rng(model: &ModelSpec, n: usize, rng: &mut SplitMix64) -> Vec<f64> {
    assert!(n >= 1, "sample size must be >= 1");
    match model {
        ModelSpec::IidParametric { family, theta } => {
            (0..n).map(|_| family.sample_one(*theta, rng)).collect()
        }
        ModelSpec::IidNonparametric { measure } => {
            let law = InnovationLaw::Discrete {
                measure: measure.clone(),
            };
            let sampler = law.sampler();
            (0..n).map(|_| sampler.draw(rng)).collect()
        }
        ModelSpec::LinearProcess { model } => {
            let sampler = model.innovation.sampler();
            let burn = model.burn_in();
            let mut state = 0.0f64;
            let mut out = Vec::with_capacity(n);
            for i in 0..burn + n {
                state = model.a * state + sampler.draw(rng);
                if i >= burn {
                    out.push(state);
                }
            }
            out
        }
    }
}
