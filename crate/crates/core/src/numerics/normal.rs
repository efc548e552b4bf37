use libm::erfc;
use statrs::function::erf::erfc_inv;
use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal density.
pub fn norm_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal distribution function, accurate in both tails.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal quantile, polished by one Newton step against [`norm_cdf`].
pub fn norm_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let mut x = -SQRT_2 * erfc_inv(2.0 * p);
    // Newton in whichever tail keeps the residual well conditioned.
    for _ in 0..2 {
        let pdf = norm_pdf(x);
        if !(pdf > 0.0) {
            break;
        }
        let resid = if x > 0.0 {
            (1.0 - p) - norm_cdf(-x)
        } else {
            norm_cdf(x) - p
        };
        let step = resid / pdf;
        if step.is_finite() {
            x -= step;
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_inverts_cdf() {
        for &p in &[1e-12, 1e-6, 0.01, 0.3, 0.5, 0.77, 0.999, 1.0 - 1e-9] {
            let x = norm_quantile(p);
            assert!((norm_cdf(x) - p).abs() <= 1e-14 * p.max(1e-3), "p={p}");
        }
        assert_eq!(norm_quantile(0.5), 0.0);
    }

    #[test]
    fn cdf_reference_values() {
        // Phi(1) and Phi(-3) to 15 digits.
        let e1 = (norm_cdf(1.0) - 0.841_344_746_068_542_9).abs();
        assert!(e1 < 1e-15, "{e1:e}");
        assert!((norm_cdf(-3.0) - 0.001_349_898_031_630_094_6).abs() < 1e-17);
    }
}
