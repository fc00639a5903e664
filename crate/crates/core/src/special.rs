//! Normal distribution function with a log-space tail.

use libm::erfc;


const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Standard normal CDF.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// `ln Φ(x)`, accurate far into the lower tail.
///
/// Below `-8` the Mills ratio is evaluated by its continued fraction, so the
/// result stays finite down to arguments where `Φ` itself underflows.
pub fn log_norm_cdf(x: f64) -> f64 {
    if x < -8.0 {
        let z = -x;
        let mut t = z;
        for k in (1..=120).rev() {
            t = z + f64::from(k) / t;
        }
        -0.5 * x * x - LN_SQRT_2PI - t.ln()
    } else if x > 5.0 {
        (-norm_cdf(-x)).ln_1p()
    } else {
        norm_cdf(x).ln()
    }
}

/// `ln(1 - e^a)` for `a <= 0`.
pub fn ln_one_minus_exp(a: f64) -> f64 {
    if a > -std::f64::consts::LN_2 {
        (-a.exp_m1()).ln()
    } else {
        (-a.exp()).ln_1p()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cdf_reference_values() {
        assert!((norm_cdf(0.0) - 0.5).abs() < 1e-16);
        assert!((norm_cdf(1.0) - 0.841_344_746_068_542_9).abs() < 1e-15, "{}", norm_cdf(1.0));
        assert!((norm_cdf(-3.0) - 1.349_898_031_630_094_6e-3).abs() < 1e-17);
    }

    #[test]
    fn log_tail_is_continuous_across_switch() {
        let below = log_norm_cdf(-8.0 - 1e-9);
        let above = log_norm_cdf(-8.0 + 1e-9);
        assert!((below - above).abs() < 1e-7, "{below} vs {above}");
        let direct = norm_cdf(-7.9).ln();
        assert!((log_norm_cdf(-7.9) - direct).abs() < 1e-12);
    }

    #[test]
    fn log_tail_deep() {
        // ln Φ(-40) from the asymptotic expansion to four terms.
        let x: f64 = -40.0;
        let series = 1.0 - 1.0 / (x * x) + 3.0 / x.powi(4) - 15.0 / x.powi(6);
        let expected = -0.5 * x * x - LN_SQRT_2PI - (-x).ln() + series.ln();
        assert!((log_norm_cdf(x) - expected).abs() < 1e-10);
        assert!(log_norm_cdf(-1000.0).is_finite());
    }

    #[test]
    fn upper_tail_log() {
        assert!(log_norm_cdf(40.0) <= 0.0);
        assert!(log_norm_cdf(6.0) < 0.0 && log_norm_cdf(6.0) > -1e-8);
    }
}
