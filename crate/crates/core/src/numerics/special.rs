use std::f64::consts::PI;

use statrs::function::gamma;

use super::values::LogScaledValue;
use crate::error::{domain, Error, Result};

/// Error function.
pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

/// Complementary error function, accurate deep into the tail.
pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// `ln |Gamma(x)|`.
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// Argument beyond which `ln I0` switches from the power series to the
/// large-argument expansion.
pub const BESSEL_SWITCH: f64 = 50.0;

/// Argument beyond which `1F1` is first attempted via its large-argument
/// expansion.
pub const KUMMER_SWITCH: f64 = 100.0;

const SERIES_EPS: f64 = 1e-17;

/// `ln I0(x) - |x|`, the log of the exponentially scaled Bessel function.
pub fn ln_i0e(x: f64) -> f64 {
    let x = x.abs();
    if x < BESSEL_SWITCH {
        let q = 0.25 * x * x;
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 1.0;
        loop {
            term *= q / (k * k);
            sum += term;
            if term < SERIES_EPS * sum {
                break;
            }
            k += 1.0;
        }
        sum.ln() - x
    } else {
        // e^x / sqrt(2 pi x) * sum_k ((2k-1)!!)^2 / (k! (8x)^k)
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 1.0;
        loop {
            let next = term * (2.0 * k - 1.0) * (2.0 * k - 1.0) / (8.0 * k * x);
            if next >= term {
                break;
            }
            term = next;
            sum += term;
            if term < SERIES_EPS * sum {
                break;
            }
            k += 1.0;
        }
        sum.ln() - 0.5 * (2.0 * PI * x).ln()
    }
}

/// Natural log of the modified Bessel function `I0(x)`.
pub fn log_bessel_i0(x: f64) -> LogScaledValue {
    LogScaledValue::from_ln(ln_i0e(x) + x.abs())
}

/// `ln n!`.
pub fn ln_factorial(n: usize) -> f64 {
    if n < 2 {
        0.0
    } else {
        ln_gamma(n as f64 + 1.0)
    }
}

/// `ln Pois(n; lambda)`.
pub fn poisson_pmf_ln(n: usize, lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return if n == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    n as f64 * lambda.ln() - lambda - ln_factorial(n)
}

/// `P(K <= k)` for `K ~ Poisson(lambda)`; zero for negative `k`.
pub fn poisson_cdf(k: i64, lambda: f64) -> f64 {
    if k < 0 {
        return 0.0;
    }
    if lambda <= 0.0 {
        return 1.0;
    }
    gamma::gamma_ur(k as f64 + 1.0, lambda)
}

fn is_nonpositive_integer(x: f64) -> bool {
    x <= 0.0 && x == x.round()
}

/// Natural log of Kummer's confluent hypergeometric function `1F1(a; b; z)`.
pub fn log_kummer_1f1(a: f64, b: f64, z: f64) -> Result<LogScaledValue> {
    if is_nonpositive_integer(b) || !b.is_finite() {
        return Err(domain("Kummer parameter b", b));
    }
    if !(z >= 0.0) || !z.is_finite() {
        return Err(domain("Kummer argument z", z));
    }
    if !a.is_finite() {
        return Err(domain("Kummer parameter a", a));
    }
    if z == 0.0 || a == 0.0 {
        return Ok(LogScaledValue::ONE);
    }
    if z > KUMMER_SWITCH && a > 0.0 && b > 0.0 {
        if let Some(v) = kummer_asymptotic(a, b, z) {
            return Ok(v);
        }
    }
    kummer_series(a, b, z)
}

/// `Gamma(b)/Gamma(a) e^z z^(a-b) 2F0(b-a, 1-a; ; 1/z)`, accepted only when the
/// series terminates or its terms fall below round-off before diverging.
fn kummer_asymptotic(a: f64, b: f64, z: f64) -> Option<LogScaledValue> {
    let terminates = is_nonpositive_integer(b - a) || is_nonpositive_integer(1.0 - a);
    let mut term: f64 = 1.0;
    let mut sum: f64 = 1.0;
    let mut largest: f64 = 1.0;
    let mut k = 1.0;
    loop {
        let next = term * (b - a + k - 1.0) * (k - a) / (k * z);
        if next == 0.0 {
            break;
        }
        if !terminates && next.abs() >= term.abs() {
            return None;
        }
        term = next;
        sum += term;
        largest = largest.max(term.abs());
        if !terminates && term.abs() < SERIES_EPS * sum.abs() {
            break;
        }
        if k > 10_000.0 {
            return None;
        }
        k += 1.0;
    }
    if sum <= 0.0 || largest > 1e6 * sum.abs() {
        return None;
    }
    let ln_lead = ln_gamma(b) - ln_gamma(a) + z + (a - b) * z.ln();
    Some(LogScaledValue::from_ln(ln_lead + sum.ln()))
}

fn kummer_series(a: f64, b: f64, z: f64) -> Result<LogScaledValue> {
    const RESCALE: f64 = 1e250;
    let ln_rescale = RESCALE.ln();
    let mut term: f64 = 1.0;
    let mut sum: f64 = 1.0;
    let mut ln_scale = 0.0;
    let mut k = 0.0;
    loop {
        let ratio = (a + k) / (b + k) * z / (k + 1.0);
        term *= ratio;
        sum += term;
        if term == 0.0 {
            break;
        }
        if ratio.abs() < 1.0 && term.abs() < SERIES_EPS * sum.abs() {
            break;
        }
        if sum.abs() > RESCALE {
            sum /= RESCALE;
            term /= RESCALE;
            ln_scale += ln_rescale;
        }
        k += 1.0;
        if k > 1e7 {
            return Err(Error::BudgetExceeded(format!(
                "1F1({a}, {b}, {z}) series did not converge"
            )));
        }
    }
    let mut v = LogScaledValue::from_f64(sum);
    v.log_magnitude += ln_scale;
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bessel_reference_points() {
        assert_eq!(log_bessel_i0(0.0).ln(), 0.0);
        assert!((log_bessel_i0(1.0).to_f64() - 1.266_065_877_752_008_4).abs() < 1e-14);
        // high-precision reference: ln I0(100) = 96.7797326899425837...
        assert!((log_bessel_i0(100.0).ln() - 96.7802).abs() < 1e-3);
        assert!((log_bessel_i0(100.0).ln() - 96.779_732_689_942_58).abs() < 1e-12);
    }

    #[test]
    fn kummer_reference_points() {
        assert_eq!(log_kummer_1f1(1.3, 2.1, 0.0).unwrap().ln(), 0.0);
        assert!((log_kummer_1f1(1.0, 1.0, 3.0).unwrap().ln() - 3.0).abs() < 1e-14);
        assert!((log_kummer_1f1(1.0, 1.5, 1.0).unwrap().to_f64() - 2.0300).abs() < 1e-4);
        // 1F1(1, 3/2, 1) = sqrt(pi) e erf(1) / 2
        let exact = PI.sqrt() * 1f64.exp() * erf(1.0) / 2.0;
        assert!((log_kummer_1f1(1.0, 1.5, 1.0).unwrap().to_f64() - exact).abs() < 1e-14);
        assert!(log_kummer_1f1(1.0, -2.0, 1.0).is_err());
        assert!(log_kummer_1f1(1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn kummer_large_argument_matches_closed_forms() {
        // 1F1(1, 1, z) = e^z across the switch
        for z in [99.0, 100.0, 101.0, 500.0, 1e5] {
            let v = log_kummer_1f1(1.0, 1.0, z).unwrap().ln();
            assert!((v - z).abs() < 1e-12 * z, "z = {z}");
        }
        // 1F1(1/2, 3/2, -x) relates to erf; 1F1(1, 3/2, z) = sqrt(pi) e^z erf(sqrt z) / (2 sqrt z)
        for z in [150.0, 1e3, 4e4] {
            let exact = 0.5 * PI.ln() + z + erf(z.sqrt()).ln() - (2.0 * z.sqrt()).ln();
            let v = log_kummer_1f1(1.0, 1.5, z).unwrap().ln();
            assert!((v - exact).abs() < 1e-12 * exact, "z = {z}");
        }
    }

    #[test]
    fn poisson_cdf_small_cases() {
        let lam: f64 = 2.5;
        let direct: f64 = (0..=3)
            .map(|k| poisson_pmf_ln(k, lam).exp())
            .sum();
        assert!((poisson_cdf(3, lam) - direct).abs() < 1e-13);
        assert_eq!(poisson_cdf(-1, lam), 0.0);
        assert_eq!(poisson_cdf(0, 0.0), 1.0);
    }
}
