//! Statistical functionals on univariate discrete measures: mean, p-th
//! absolute moment, Value at Risk, Average Value at Risk, and the
//! collective premium `AVaR_alpha(mu^{*n}) / n`.
//!
//! Atoms are losses: larger values are worse, no sign flip anywhere.
//! All AVaR integrals are closed-form sums over atom intervals, never
//! numeric quadrature, so the two representations agree to ~1e-12.

use thiserror::Error;

use crate::measures::{kahan_sum, DiscreteMeasure, MeasureError, DEFAULT_ATOM_CAP};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FunctionalError {
    #[error("level {level} outside (0, 1)")]
    LevelOutOfRange { level: f64 },
    #[error("moment order {p} must be finite and > 0")]
    InvalidMomentOrder { p: f64 },
    #[error("premium horizon n must be >= 1")]
    InvalidHorizon,
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

/// How to evaluate the Average Value at Risk.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AvarMethod {
    /// `(1/alpha) * integral of VaR_s over s in (0, alpha)`.
    QuantileAverage,
    /// `-int_{-inf}^0 g(F) dx + int_0^inf (1 - g(F)) dx` with
    /// `g(s) = max(s - (1 - alpha), 0) / alpha`.
    DistributionForm,
}

/// A named functional with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Functional {
    Mean,
    AbsMoment { p: f64 },
    VaR { s: f64 },
    AVaR { alpha: f64 },
    Premium { alpha: f64, n: usize },
}

impl Functional {
    pub fn validate(&self) -> Result<(), FunctionalError> {
        match *self {
            Functional::Mean => Ok(()),
            Functional::AbsMoment { p } => {
                if p.is_finite() && p > 0.0 {
                    Ok(())
                } else {
                    Err(FunctionalError::InvalidMomentOrder { p })
                }
            }
            Functional::VaR { s } => check_level(s),
            Functional::AVaR { alpha } => check_level(alpha),
            Functional::Premium { alpha, n } => {
                check_level(alpha)?;
                if n >= 1 {
                    Ok(())
                } else {
                    Err(FunctionalError::InvalidHorizon)
                }
            }
        }
    }

    /// Evaluates the functional; `Premium` uses the default atom cap.
    pub fn eval(&self, mu: &DiscreteMeasure) -> Result<f64, FunctionalError> {
        self.validate()?;
        match *self {
            Functional::Mean => Ok(mean(mu)),
            Functional::AbsMoment { p } => Ok(abs_moment(mu, p)),
            Functional::VaR { s } => var_level(mu, s),
            Functional::AVaR { alpha } => avar(mu, alpha),
            Functional::Premium { alpha, n } => premium(mu, alpha, n, DEFAULT_ATOM_CAP),
        }
    }
}

fn check_level(level: f64) -> Result<(), FunctionalError> {
    if level.is_finite() && level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(FunctionalError::LevelOutOfRange { level })
    }
}

/// `integral of x d mu`.
pub fn mean(mu: &DiscreteMeasure) -> f64 {
    assert_eq!(mu.dim(), 1, "mean requires dimension 1");
    kahan_sum(mu.iter_atoms().map(|(c, m)| m * c[0]))
}

/// `integral of |x|^p d mu`.
pub fn abs_moment(mu: &DiscreteMeasure, p: f64) -> f64 {
    assert_eq!(mu.dim(), 1, "abs_moment requires dimension 1");
    assert!(p > 0.0 && p.is_finite());
    kahan_sum(mu.iter_atoms().map(|(c, m)| m * c[0].abs().powf(p)))
}

/// Value at Risk at level `s`: the lower `(1-s)`-quantile.
pub fn var_level(mu: &DiscreteMeasure, s: f64) -> Result<f64, FunctionalError> {
    check_level(s)?;
    Ok(mu.quantile(1.0 - s)?)
}

/// Average Value at Risk via the quantile average (the default route).
pub fn avar(mu: &DiscreteMeasure, alpha: f64) -> Result<f64, FunctionalError> {
    avar_with_method(mu, alpha, AvarMethod::QuantileAverage)
}

pub fn avar_with_method(
    mu: &DiscreteMeasure,
    alpha: f64,
    method: AvarMethod,
) -> Result<f64, FunctionalError> {
    assert_eq!(mu.dim(), 1, "avar requires dimension 1");
    check_level(alpha)?;
    Ok(match method {
        AvarMethod::QuantileAverage => avar_quantile_average(mu, alpha),
        AvarMethod::DistributionForm => avar_distribution_form(mu, alpha),
    })
}

/// `(1/alpha) int_0^alpha VaR_s ds = (1/alpha) int_{1-alpha}^1 Q(u) du`
/// where `Q` is the step quantile function: `Q(u) = x_i` on
/// `(F_{i-1}, F_i]`.
fn avar_quantile_average(mu: &DiscreteMeasure, alpha: f64) -> f64 {
    let lo = 1.0 - alpha;
    let mut cum_prev = 0.0f64;
    let mut pieces: Vec<f64> = Vec::with_capacity(mu.atom_count());
    for (i, &m) in mu.masses().iter().enumerate() {
        // Snap the top of the distribution to exactly one.
        let cum = if i + 1 == mu.atom_count() {
            1.0
        } else {
            cum_prev + m
        };
        let overlap = cum.min(1.0) - cum_prev.max(lo);
        if overlap > 0.0 {
            pieces.push(mu.values()[i] * overlap);
        }
        cum_prev = cum;
    }
    kahan_sum(pieces) / alpha
}

/// Closed-form evaluation of the distribution-function representation on
/// the atom grid (breakpoints: atoms and zero; `F` is constant between).
fn avar_distribution_form(mu: &DiscreteMeasure, alpha: f64) -> f64 {
    let g = |s: f64| ((s - (1.0 - alpha)).max(0.0)) / alpha;
    let mut breaks: Vec<f64> = mu.values().to_vec();
    let pos = breaks.partition_point(|&v| v < 0.0);
    if breaks.get(pos) != Some(&0.0) {
        breaks.insert(pos, 0.0);
    }
    let mut terms: Vec<f64> = Vec::with_capacity(breaks.len());
    let mut cum = 0.0f64;
    let mut ai = 0usize;
    for w in breaks.windows(2) {
        let (left, right) = (w[0], w[1]);
        while ai < mu.atom_count() && mu.values()[ai] <= left {
            cum += mu.mass(ai);
            ai += 1;
        }
        let f = if ai == mu.atom_count() { 1.0 } else { cum };
        let len = right - left;
        if right <= 0.0 {
            terms.push(-g(f) * len);
        } else {
            terms.push((1.0 - g(f)) * len);
        }
    }
    kahan_sum(terms)
}

/// Collective premium `AVaR_alpha(mu^{*n}) / n`.
pub fn premium(
    mu: &DiscreteMeasure,
    alpha: f64,
    n: usize,
    atom_cap: usize,
) -> Result<f64, FunctionalError> {
    check_level(alpha)?;
    if n < 1 {
        return Err(FunctionalError::InvalidHorizon);
    }
    let conv = mu.convolve_power(n, atom_cap)?;
    Ok(avar(&conv, alpha)? / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{DiscreteMeasure, Point};

    fn m1d(pairs: &[(f64, f64)]) -> DiscreteMeasure {
        DiscreteMeasure::new(
            pairs
                .iter()
                .map(|&(x, m)| (Point::scalar(x).unwrap(), m))
                .collect(),
        )
        .unwrap()
    }

    fn dirac(x: f64) -> DiscreteMeasure {
        DiscreteMeasure::dirac_scalar(x).unwrap()
    }

    fn coin() -> DiscreteMeasure {
        m1d(&[(0.0, 0.5), (1.0, 0.5)])
    }

    #[test]
    fn mean_examples() {
        assert_eq!(mean(&dirac(-2.5)), -2.5);
        assert_eq!(mean(&coin()), 0.5);
    }

    #[test]
    fn mean_is_mixture_linear() {
        let a = m1d(&[(0.0, 0.5), (2.0, 0.5)]);
        let b = m1d(&[(-1.0, 0.25), (5.0, 0.75)]);
        for t in [0.0, 0.3, 1.0] {
            let mixed = DiscreteMeasure::mix(&a, &b, t).unwrap();
            let want = (1.0 - t) * mean(&a) + t * mean(&b);
            assert!((mean(&mixed) - want).abs() < 1e-12);
        }
    }

    #[test]
    fn abs_moment_examples() {
        assert_eq!(abs_moment(&dirac(2.0), 2.0), 4.0);
        assert_eq!(abs_moment(&dirac(0.0), 3.0), 0.0);
        // The adversarial family's cancellation: (1/m) * (m^{1/p})^p = 1.
        for (p, m) in [(1.0f64, 8.0f64), (2.0, 4.0), (3.0, 100.0)] {
            let fam = DiscreteMeasure::mix(&dirac(0.0), &dirac(m.powf(1.0 / p)), 1.0 / m).unwrap();
            assert!((abs_moment(&fam, p) - 1.0).abs() < 1e-12, "p={p} m={m}");
        }
    }

    #[test]
    fn var_level_examples() {
        assert_eq!(var_level(&dirac(3.0), 0.25).unwrap(), 3.0);
        assert_eq!(var_level(&coin(), 0.3).unwrap(), 1.0);
        assert_eq!(var_level(&coin(), 0.6).unwrap(), 0.0);
        assert!(var_level(&coin(), 0.0).is_err());
        assert!(var_level(&coin(), 1.0).is_err());
    }

    #[test]
    fn avar_of_dirac_is_its_atom() {
        for alpha in [0.05, 0.5, 0.95] {
            for method in [AvarMethod::QuantileAverage, AvarMethod::DistributionForm] {
                let v = avar_with_method(&dirac(-1.75), alpha, method).unwrap();
                assert!((v + 1.75).abs() < 1e-12, "{v}");
            }
        }
    }

    #[test]
    fn avar_coin_at_half() {
        // Quantile average: 2 * int_0^{1/2} 1 ds = 1; distribution form:
        // int_0^1 (1 - g(1/2)) dx = 1.
        for method in [AvarMethod::QuantileAverage, AvarMethod::DistributionForm] {
            let v = avar_with_method(&coin(), 0.5, method).unwrap();
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn avar_near_level_one_approaches_mean() {
        let m = m1d(&[(-0.5, 0.25), (0.25, 0.5), (0.75, 0.25)]);
        let v = avar(&m, 1.0 - 1e-10).unwrap();
        assert!((v - mean(&m)).abs() < 1e-9, "{v}");
    }

    #[test]
    fn avar_representations_agree() {
        let mut rng = crate::rng::SplitMix64::new(31);
        for _ in 0..200 {
            let c = 1 + (rng.next_u64() % 20) as usize;
            let xs: Vec<f64> = (0..c).map(|_| (rng.next_f64() - 0.5) * 8.0).collect();
            let m = DiscreteMeasure::empirical_scalar(&xs).unwrap();
            let alpha = 0.02 + 0.96 * rng.next_f64();
            let qa = avar_with_method(&m, alpha, AvarMethod::QuantileAverage).unwrap();
            let df = avar_with_method(&m, alpha, AvarMethod::DistributionForm).unwrap();
            assert!((qa - df).abs() < 1e-9, "alpha={alpha}: {qa} vs {df}");
        }
    }

    #[test]
    fn avar_monotone_in_alpha_and_dominates_mean() {
        let m = m1d(&[(-2.0, 0.2), (0.0, 0.3), (1.0, 0.4), (6.0, 0.1)]);
        let mut prev = f64::INFINITY;
        for alpha in [0.1, 0.2, 0.4, 0.6, 0.8, 0.99] {
            let v = avar(&m, alpha).unwrap();
            assert!(v <= prev + 1e-12);
            assert!(v >= mean(&m) - 1e-12);
            prev = v;
        }
    }

    #[test]
    fn avar_cash_translation() {
        let m = m1d(&[(-1.0, 0.3), (0.5, 0.2), (2.0, 0.5)]);
        let c = 3.25;
        let shifted = DiscreteMeasure::convolve(&m, &dirac(c), DEFAULT_ATOM_CAP).unwrap();
        for alpha in [0.1, 0.5, 0.9] {
            let a = avar(&shifted, alpha).unwrap();
            let b = avar(&m, alpha).unwrap() + c;
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn premium_examples() {
        // AVaR(delta_{nc}) / n = c.
        for (c, n) in [(2.0, 3), (-1.5, 5)] {
            let v = premium(&dirac(c), 0.3, n, DEFAULT_ATOM_CAP).unwrap();
            assert!((v - c).abs() < 1e-12);
        }
        let m = m1d(&[(0.0, 0.25), (1.0, 0.5), (3.0, 0.25)]);
        assert_eq!(
            premium(&m, 0.4, 1, DEFAULT_ATOM_CAP).unwrap(),
            avar(&m, 0.4).unwrap()
        );
    }

    #[test]
    fn premium_coin_two_periods() {
        // Binomial(2, 1/2) has VaR_s = 2 on s < 1/4 and 1 on (1/4, 3/4);
        // the quantile average at alpha = 1/2 gives 1.5, so premium 0.75.
        let v = premium(&coin(), 0.5, 2, DEFAULT_ATOM_CAP).unwrap();
        assert!((v - 0.75).abs() < 1e-12, "{v}");
        // Cross-check with a 10^6-point Riemann sum over the quantile levels.
        let conv = coin().convolve_power(2, DEFAULT_ATOM_CAP).unwrap();
        let alpha = 0.5;
        let steps = 1_000_000;
        let mut acc = 0.0;
        for k in 0..steps {
            let u = 1.0 - alpha + alpha * (k as f64 + 0.5) / steps as f64;
            acc += conv.quantile(u).unwrap();
        }
        // The window average of Q over (1-alpha, 1] is AVaR itself.
        let riemann = acc / steps as f64 / 2.0;
        assert!((v - riemann).abs() < 1e-5, "{v} vs {riemann}");
    }

    #[test]
    fn premium_propagates_atom_cap() {
        let m = m1d(&[(0.0, 0.25), (1.0, 0.25), (2.5, 0.25), (4.0, 0.25)]);
        assert!(matches!(
            premium(&m, 0.5, 4, 10),
            Err(FunctionalError::Measure(
                MeasureError::AtomCapExceeded { .. }
            ))
        ));
    }

    #[test]
    fn functional_enum_validates_and_evaluates() {
        assert!(Functional::AVaR { alpha: 1.0 }.validate().is_err());
        assert!(Functional::AbsMoment { p: 0.0 }.validate().is_err());
        assert!(Functional::Premium { alpha: 0.5, n: 0 }.validate().is_err());
        let f = Functional::AbsMoment { p: 2.0 };
        assert_eq!(f.eval(&dirac(2.0)).unwrap(), 4.0);
    }
}
