//! Standard normal CDF and its inverse.

use crate::error::DecisionError;

const FRAC_2_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;

/// `erfc(y)` for `y >= 0`: positive-term series below 2.5, Lentz continued
/// fraction above.
fn erfc_nonneg(y: f64) -> f64 {
    if y < 2.5 {
        // erf(y) = 2/sqrt(pi) e^{-y^2} sum_n 2^n y^{2n+1} / (2n+1)!!
        let mut term = y;
        let mut sum = y;
        let y2 = 2.0 * y * y;
        let mut n = 0.0;
        while term > 1e-17 * sum {
            n += 1.0;
            term *= y2 / (2.0 * n + 1.0);
            sum += term;
        }
        1.0 - FRAC_2_SQRT_PI * (-y * y).exp() * sum
    } else {
        // erfc(y) = e^{-y^2}/sqrt(pi) / (y + (1/2)/(y + 1/(y + (3/2)/(y + ...))))
        let tiny = 1e-300;
        let mut f = y;
        let mut c = y;
        let mut d = 0.0;
        for k in 1..500 {
            let a = k as f64 / 2.0;
            d = y + a * d;
            d = if d.abs() < tiny { tiny } else { d };
            c = y + a / c;
            c = if c.abs() < tiny { tiny } else { c };
            d = 1.0 / d;
            let delta = c * d;
            f *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                break;
            }
        }
        0.5 * FRAC_2_SQRT_PI * (-y * y).exp() / f
    }
}

/// Standard normal cumulative distribution function.
pub fn norm_cdf(z: f64) -> f64 {
    let y = z / std::f64::consts::SQRT_2;
    if z < 0.0 {
        0.5 * erfc_nonneg(-y)
    } else {
        1.0 - 0.5 * erfc_nonneg(y)
    }
}

/// Acklam's rational approximation for the lower tail, `q <= 0.5`.
fn acklam_lower(q: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    if q < 0.02425 {
        let t = (-2.0 * q.ln()).sqrt();
        (((((C[0] * t + C[1]) * t + C[2]) * t + C[3]) * t + C[4]) * t + C[5])
            / ((((D[0] * t + D[1]) * t + D[2]) * t + D[3]) * t + 1.0)
    } else {
        let u = q - 0.5;
        let r = u * u;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * u
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    }
}

/// Inverse standard normal CDF: Acklam's approximation refined by Halley
/// steps on the lower tail.
pub fn inv_norm_cdf(p: f64) -> Result<f64, DecisionError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(DecisionError::Probability(p));
    }
    let q = p.min(1.0 - p);
    let mut x = acklam_lower(q);
    for _ in 0..2 {
        let e = 0.5 * erfc_nonneg(-x / std::f64::consts::SQRT_2) - q;
        let u = e * (2.0 * std::f64::consts::PI).sqrt() * (0.5 * x * x).exp();
        x -= u / (1.0 + 0.5 * x * u);
    }
    Ok(if p > 0.5 { -x } else { x })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_values() {
        assert_eq!(norm_cdf(0.0), 0.5);
        assert!((norm_cdf(1.959963984540054) - 0.975).abs() < 1e-15);
        assert!((norm_cdf(-5.0) - 2.866515718791939e-7).abs() < 1e-20);
        assert_eq!(inv_norm_cdf(0.5).unwrap(), 0.0);
    }

    #[test]
    fn rejects_bounds() {
        for p in [0.0, 1.0, -0.1, f64::NAN] {
            assert!(inv_norm_cdf(p).is_err());
        }
    }

    #[test]
    fn branch_seam_is_continuous() {
        let a = 0.5 * erfc_nonneg(2.5 - 1e-12);
        let b = 0.5 * erfc_nonneg(2.5);
        assert!((a - b).abs() / b < 1e-10);
    }
}
