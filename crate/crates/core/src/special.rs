//! Error function and normal distribution function.
//!
//! `erf` is evaluated through the regularized lower incomplete gamma
//! function `P(1/2, x^2)`: a power series on `x^2 < 1.5` and a Lentz
//! continued fraction for the complement elsewhere. Double-precision
//! accurate (checked against reference values below to ~1e-15).

const MAX_ITER: usize = 300;
const EPS: f64 = 1e-16;
const LN_GAMMA_HALF: f64 = 0.5723649429247001; // ln(sqrt(pi))

/// Regularized lower incomplete gamma P(1/2, x) by power series.
fn gamma_p_half_series(x: f64) -> f64 {
    let a = 0.5;
    let mut ap = a;
    let mut sum = 1.0 / a;
    let mut term = sum;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * EPS {
            break;
        }
    }
    sum * (-x + a * x.ln() - LN_GAMMA_HALF).exp()
}

/// Regularized upper incomplete gamma Q(1/2, x) by continued fraction.
fn gamma_q_half_cf(x: f64) -> f64 {
    let a = 0.5;
    let tiny = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..=MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    h * (-x + a * x.ln() - LN_GAMMA_HALF).exp()
}

/// Error function.
pub fn erf(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let x2 = x * x;
    let magnitude = if x2 < 1.5 {
        gamma_p_half_series(x2)
    } else {
        1.0 - gamma_q_half_cf(x2)
    };
    magnitude.copysign(x)
}

/// Standard normal distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 + 0.5 * erf(x / std::f64::consts::SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn erf_reference_values() {
        let cases = [
            (0.1, 0.1124629160182849),
            (0.5, 0.5204998778130465),
            (1.0, 0.8427007929497149),
            (2.0, 0.9953222650189527),
            (3.0, 0.9999779095030014),
        ];
        for (x, want) in cases {
            assert!((erf(x) - want).abs() < 1e-14, "erf({x}) = {}", erf(x));
            assert!((erf(-x) + want).abs() < 1e-14);
        }
    }

    #[test]
    fn erf_matches_quadrature() {
        // Independent check: trapezoid rule on 2/sqrt(pi) * exp(-t^2).
        for x in [0.3, 0.9, 1.7, 2.4] {
            let n = 200_000;
            let h = x / n as f64;
            let f = |t: f64| (-t * t).exp();
            let mut s = 0.5 * (f(0.0) + f(x));
            for i in 1..n {
                s += f(i as f64 * h);
            }
            let quad = s * h * 2.0 / std::f64::consts::PI.sqrt();
            assert!((erf(x) - quad).abs() < 1e-10, "x={x}");
        }
    }

    #[test]
    fn normal_cdf_symmetry() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-15);
        for x in [0.5, 1.0, 2.5] {
            assert!((normal_cdf(x) + normal_cdf(-x) - 1.0).abs() < 1e-14);
        }
        assert!((normal_cdf(1.959963984540054) - 0.975).abs() < 1e-12);
    }
}
