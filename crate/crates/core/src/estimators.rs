//! Estimator functions `(x_1, ..., x_n) -> R`: plug-in through the
//! empirical measure, closed-form maximum likelihood, the Yule-Walker
//! ratio, and the collective-premium estimator with its Monte-Carlo
//! fallback.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::functionals::{self, Functional, FunctionalError};
use crate::measures::{DiscreteMeasure, MeasureError, DEFAULT_ATOM_CAP};
use crate::models::{ModelError, ParametricFamily};
use crate::rng::SeedSpec;

/// Default replication count of the premium estimator's Monte-Carlo
/// fallback.
pub const DEFAULT_MC_FALLBACK_SIZE: usize = 100_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimatorError {
    #[error("estimator needs at least {needed} observations, got {got}")]
    TooFewObservations { needed: usize, got: usize },
    #[error("exponential MLE undefined: all observations are zero")]
    DegenerateSample,
    #[error(transparent)]
    Functional(#[from] FunctionalError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// An estimator value together with how it was produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    /// The MLE landed on the boundary of the parameter range (for example a
    /// Bernoulli sample of all zeros). The raw boundary value is returned,
    /// not clamped into the open range.
    pub boundary: bool,
    /// The premium estimator exceeded its atom cap and ran the Monte-Carlo
    /// fallback, which is a different estimator.
    pub mc_fallback: bool,
}

impl Estimate {
    fn plain(value: f64) -> Self {
        Estimate {
            value,
            boundary: false,
            mc_fallback: false,
        }
    }
}

/// Estimator specification, mirroring the model JSON schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Estimator {
    PlugIn {
        functional: FunctionalSpec,
    },
    Mle {
        family: ParametricFamily,
    },
    YuleWalker,
    PremiumEstimator {
        alpha: f64,
        #[serde(default = "default_atom_cap")]
        atom_cap: usize,
        #[serde(default = "default_mc_fallback")]
        mc_fallback_size: usize,
    },
}

fn default_atom_cap() -> usize {
    DEFAULT_ATOM_CAP
}

fn default_mc_fallback() -> usize {
    DEFAULT_MC_FALLBACK_SIZE
}

/// Serializable functional description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionalSpec {
    Mean,
    AbsMoment { p: f64 },
    Var { s: f64 },
    Avar { alpha: f64 },
    Premium { alpha: f64, n: usize },
}

impl FunctionalSpec {
    pub fn to_functional(&self) -> Functional {
        match *self {
            FunctionalSpec::Mean => Functional::Mean,
            FunctionalSpec::AbsMoment { p } => Functional::AbsMoment { p },
            FunctionalSpec::Var { s } => Functional::VaR { s },
            FunctionalSpec::Avar { alpha } => Functional::AVaR { alpha },
            FunctionalSpec::Premium { alpha, n } => Functional::Premium { alpha, n },
        }
    }
}

impl Estimator {
    /// Applies the estimator to a sample. The seed feeds only the premium
    /// estimator's Monte-Carlo fallback; every other path is deterministic
    /// in `xs` alone.
    pub fn evaluate(&self, xs: &[f64], seed: SeedSpec) -> Result<Estimate, EstimatorError> {
        match self {
            Estimator::PlugIn { functional } => {
                plug_in(&functional.to_functional(), xs).map(Estimate::plain)
            }
            Estimator::Mle { family } => mle(family, xs),
            Estimator::YuleWalker => yule_walker(xs).map(Estimate::plain),
            Estimator::PremiumEstimator {
                alpha,
                atom_cap,
                mc_fallback_size,
            } => premium_estimator(xs, *alpha, *atom_cap, *mc_fallback_size, seed),
        }
    }
}

/// Plug-in estimate: the functional evaluated at the empirical measure.
pub fn plug_in(functional: &Functional, xs: &[f64]) -> Result<f64, EstimatorError> {
    let empirical = DiscreteMeasure::empirical_scalar(xs)?;
    Ok(functional.eval(&empirical)?)
}

/// Closed-form maximum likelihood estimate of theta. Boundary hits (for
/// example an all-zeros Bernoulli sample) are flagged, not clamped.
pub fn mle(family: &ParametricFamily, xs: &[f64]) -> Result<Estimate, EstimatorError> {
    if xs.is_empty() {
        return Err(EstimatorError::TooFewObservations { needed: 1, got: 0 });
    }
    for &x in xs {
        if !family.in_support(x) {
            return Err(EstimatorError::Model(ModelError::ObservationOutOfSupport {
                x,
            }));
        }
    }
    let n = xs.len() as f64;
    let sum: f64 = crate::measures::kahan_sum(xs.iter().copied());
    match family {
        ParametricFamily::Bernoulli => {
            let theta = sum / n;
            Ok(Estimate {
                value: theta,
                boundary: theta == 0.0 || theta == 1.0,
                mc_fallback: false,
            })
        }
        ParametricFamily::Poisson => {
            let theta = sum / n;
            Ok(Estimate {
                value: theta,
                boundary: theta == 0.0,
                mc_fallback: false,
            })
        }
        ParametricFamily::Exponential => {
            if sum == 0.0 {
                Err(EstimatorError::DegenerateSample)
            } else {
                Ok(Estimate::plain(n / sum))
            }
        }
        ParametricFamily::Normal { .. } => Ok(Estimate::plain(sum / n)),
    }
}

/// The lag-one autocorrelation ratio
/// `[(1/(n-1)) sum x_i x_{i+1}] / [(1/n) sum x_i^2]`, and exactly zero when
/// the denominator vanishes.
pub fn yule_walker(xs: &[f64]) -> Result<f64, EstimatorError> {
    if xs.len() < 2 {
        return Err(EstimatorError::TooFewObservations {
            needed: 2,
            got: xs.len(),
        });
    }
    let n = xs.len() as f64;
    // The case split tests the denominator against zero literally; denormal
    // sums count as nonzero.
    let denom = crate::measures::kahan_sum(xs.iter().map(|x| x * x));
    if denom > 0.0 {
        let num = crate::measures::kahan_sum(xs.windows(2).map(|w| w[0] * w[1]));
        Ok((num / (n - 1.0)) / (denom / n))
    } else {
        Ok(0.0)
    }
}

/// Premium estimate `AVaR_alpha(m_n^{*n}) / n` at the empirical measure.
/// When the exact convolution would exceed `atom_cap`, falls back to a
/// Monte-Carlo estimate from `mc_fallback_size` i.i.d. n-sums and flags the
/// switch.
pub fn premium_estimator(
    xs: &[f64],
    alpha: f64,
    atom_cap: usize,
    mc_fallback_size: usize,
    seed: SeedSpec,
) -> Result<Estimate, EstimatorError> {
    if xs.is_empty() {
        return Err(EstimatorError::TooFewObservations { needed: 1, got: 0 });
    }
    let n = xs.len();
    let empirical = DiscreteMeasure::empirical_scalar(xs)?;
    match functionals::premium(&empirical, alpha, n, atom_cap) {
        Ok(value) => Ok(Estimate::plain(value)),
        Err(FunctionalError::Measure(MeasureError::AtomCapExceeded { .. })) => {
            let value = premium_mc(&empirical, alpha, n, mc_fallback_size, seed)?;
            Ok(Estimate {
                value,
                boundary: false,
                mc_fallback: true,
            })
        }
        Err(e) => Err(e.into()),
    }
}

fn premium_mc(
    empirical: &DiscreteMeasure,
    alpha: f64,
    n: usize,
    replications: usize,
    seed: SeedSpec,
) -> Result<f64, EstimatorError> {
    let mut rng = seed.rng();
    let values = empirical.values();
    let cum: Vec<f64> = {
        let mut acc = 0.0;
        values
            .iter()
            .enumerate()
            .map(|(i, _)| {
                acc += empirical.mass(i);
                acc
            })
            .collect()
    };
    let sums: Vec<f64> = (0..replications.max(2))
        .map(|_| {
            (0..n)
                .map(|_| {
                    let u = rng.next_f64();
                    let i = cum.partition_point(|&c| c <= u).min(values.len() - 1);
                    values[i]
                })
                .sum()
        })
        .collect();
    let law = DiscreteMeasure::empirical_scalar(&sums)?;
    Ok(functionals::avar(&law, alpha)? / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::avar;
    use crate::measures::Point;

    fn seed() -> SeedSpec {
        SeedSpec::new(11, 0)
    }

    #[test]
    fn plug_in_examples() {
        assert_eq!(plug_in(&Functional::Mean, &[1.0, 2.0, 3.0]).unwrap(), 2.0);
        assert_eq!(
            plug_in(&Functional::AbsMoment { p: 2.0 }, &[1.0, -1.0]).unwrap(),
            1.0
        );
        assert_eq!(
            plug_in(&Functional::AVaR { alpha: 0.5 }, &[0.0, 0.0, 1.0, 1.0]).unwrap(),
            1.0
        );
    }

    #[test]
    fn plug_in_abs_moment_is_sample_average() {
        let xs: [f64; 5] = [0.5, -1.5, 2.0, 2.0, -0.25];
        for p in [1.0, 2.0, 3.5] {
            let direct: f64 = xs.iter().map(|x| x.abs().powf(p)).sum::<f64>() / xs.len() as f64;
            let got = plug_in(&Functional::AbsMoment { p }, &xs).unwrap();
            assert!((got - direct).abs() < 1e-14);
        }
    }

    #[test]
    fn plug_in_is_permutation_invariant() {
        let xs = [3.0, -1.0, 2.0, 3.0];
        let perm = [3.0, 3.0, 2.0, -1.0];
        for f in [
            Functional::Mean,
            Functional::AbsMoment { p: 2.0 },
            Functional::AVaR { alpha: 0.3 },
        ] {
            assert_eq!(plug_in(&f, &xs).unwrap(), plug_in(&f, &perm).unwrap());
        }
    }

    #[test]
    fn mle_examples() {
        let e = mle(&ParametricFamily::Bernoulli, &[1.0, 0.0, 1.0, 1.0]).unwrap();
        assert_eq!(e.value, 0.75);
        assert!(!e.boundary);
        let e = mle(&ParametricFamily::Exponential, &[0.5, 1.5]).unwrap();
        assert_eq!(e.value, 1.0);
        let e = mle(&ParametricFamily::Normal { sigma2: 1.0 }, &[-1.0, 1.0]).unwrap();
        assert_eq!(e.value, 0.0);
    }

    #[test]
    fn mle_boundary_flag() {
        let e = mle(&ParametricFamily::Bernoulli, &[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(e.value, 0.0);
        assert!(e.boundary);
        let e = mle(&ParametricFamily::Bernoulli, &[1.0, 1.0]).unwrap();
        assert_eq!(e.value, 1.0);
        assert!(e.boundary);
    }

    #[test]
    fn mle_degenerate_exponential() {
        assert!(matches!(
            mle(&ParametricFamily::Exponential, &[0.0, 0.0]),
            Err(EstimatorError::DegenerateSample)
        ));
    }

    #[test]
    fn yule_walker_examples() {
        // The zero branch of the defining ratio.
        assert_eq!(yule_walker(&[0.0, 0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(yule_walker(&[1.0, 1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(yule_walker(&[1.0, -1.0, 1.0, -1.0]).unwrap(), -1.0);
        assert!(yule_walker(&[1.0]).is_err());
    }

    #[test]
    fn yule_walker_cauchy_schwarz_bound() {
        let mut rng = crate::rng::SplitMix64::new(3);
        for _ in 0..500 {
            let n = 2 + (rng.next_u64() % 30) as usize;
            let xs: Vec<f64> = (0..n).map(|_| (rng.next_f64() - 0.5) * 10.0).collect();
            let t = yule_walker(&xs).unwrap();
            let bound = n as f64 / (n as f64 - 1.0);
            assert!(t.abs() <= bound + 1e-12, "|{t}| > {bound}");
        }
    }

    #[test]
    fn yule_walker_is_order_sensitive() {
        let a = yule_walker(&[1.0, 1.0, -1.0]).unwrap();
        let b = yule_walker(&[1.0, -1.0, 1.0]).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn premium_estimator_constant_sample() {
        for c in [2.5, -1.0] {
            let xs = vec![c; 6];
            let e = premium_estimator(&xs, 0.4, DEFAULT_ATOM_CAP, 100, seed()).unwrap();
            assert!((e.value - c).abs() < 1e-12);
            assert!(!e.mc_fallback);
        }
    }

    #[test]
    fn premium_estimator_single_observation() {
        let e = premium_estimator(&[3.25], 0.7, DEFAULT_ATOM_CAP, 100, seed()).unwrap();
        assert_eq!(e.value, 3.25);
    }

    #[test]
    fn premium_estimator_binomial_case() {
        // Exact: AVaR_{1/2}(Binomial(4, 1/2)) / 4 on the 5-atom convolution.
        let xs = [0.0, 0.0, 1.0, 1.0];
        let e = premium_estimator(&xs, 0.5, DEFAULT_ATOM_CAP, 100, seed()).unwrap();
        let coin = DiscreteMeasure::empirical_scalar(&xs).unwrap();
        let conv = coin.convolve_power(4, DEFAULT_ATOM_CAP).unwrap();
        assert_eq!(conv.atom_count(), 5);
        let exact = avar(&conv, 0.5).unwrap() / 4.0;
        assert!((e.value - exact).abs() < 1e-12);
        // Monte-Carlo cross-check within 3 MC standard errors.
        let mc = premium_mc(&coin, 0.5, 4, 1_000_000, seed()).unwrap();
        // The n-sum values are bounded by 4, so a conservative se for the
        // AVaR tail average is sqrt(var_max / (alpha^2 R)) with var_max <= 4.
        let se = (4.0f64 / (0.25 * 1_000_000.0)).sqrt();
        assert!((mc - exact).abs() < 3.0 * se, "{mc} vs {exact}");
    }

    #[test]
    fn premium_estimator_fallback_flags_and_approximates() {
        let xs = [0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75];
        let exact = premium_estimator(&xs, 0.5, DEFAULT_ATOM_CAP, 10, seed()).unwrap();
        assert!(!exact.mc_fallback);
        let fallback = premium_estimator(&xs, 0.5, 10, 200_000, seed()).unwrap();
        assert!(fallback.mc_fallback);
        assert!(
            (fallback.value - exact.value).abs() < 0.05,
            "{} vs {}",
            fallback.value,
            exact.value
        );
    }

    #[test]
    fn premium_estimator_is_permutation_invariant_and_scale_equivariant() {
        let xs = [0.5, 2.0, 1.0, 0.25, 1.25];
        let perm = [2.0, 0.25, 1.25, 0.5, 1.0];
        let a = premium_estimator(&xs, 0.4, DEFAULT_ATOM_CAP, 100, seed()).unwrap();
        let b = premium_estimator(&perm, 0.4, DEFAULT_ATOM_CAP, 100, seed()).unwrap();
        assert_eq!(a.value, b.value);
        for c in [0.5, 3.0] {
            let scaled: Vec<f64> = xs.iter().map(|x| c * x).collect();
            let s = premium_estimator(&scaled, 0.4, DEFAULT_ATOM_CAP, 100, seed()).unwrap();
            assert!((s.value - c * a.value).abs() < 1e-9, "c={c}");
        }
    }

    #[test]
    fn mle_bias_and_variance_at_desk_scale() {
        // Bernoulli theta = 0.3, n = 50: the MLE is unbiased with variance
        // theta (1 - theta) / n = 1 / (n I_1), the information bound.
        let theta = 0.3;
        let n = 50;
        let r = 20_000;
        let family = ParametricFamily::Bernoulli;
        let model = crate::models::ModelSpec::IidParametric { family, theta };
        let base = SeedSpec::new(4242, 0);
        let mut estimates = Vec::with_capacity(r);
        for rep in 0..r {
            let mut rng = base.child_rng(rep as u64);
            let xs = crate::models::sample_with_rng(&model, n, &mut rng);
            estimates.push(mle(&family, &xs).unwrap().value);
        }
        let rf = r as f64;
        let mean = estimates.iter().sum::<f64>() / rf;
        let var = estimates
            .iter()
            .map(|e| (e - mean) * (e - mean))
            .sum::<f64>()
            / (rf - 1.0);
        let target_var = theta * (1.0 - theta) / n as f64;
        let se_mean = (target_var / rf).sqrt();
        assert!((mean - theta).abs() < 4.0 * se_mean, "mean {mean}");
        let se_var = target_var * (2.0 / (rf - 1.0)).sqrt();
        assert!(
            (var - target_var).abs() < 4.0 * se_var,
            "var {var} vs {target_var}"
        );
    }

    #[test]
    fn estimator_enum_round_trips_and_evaluates() {
        let est = Estimator::PlugIn {
            functional: FunctionalSpec::Avar { alpha: 0.5 },
        };
        let json = serde_json::to_string(&est).unwrap();
        let back: Estimator = serde_json::from_str(&json).unwrap();
        assert_eq!(est, back);
        let e = back.evaluate(&[0.0, 0.0, 1.0, 1.0], seed()).unwrap();
        assert_eq!(e.value, 1.0);
        let _ = Point::scalar(0.0).unwrap();
    }
}
