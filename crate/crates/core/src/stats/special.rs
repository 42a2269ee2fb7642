//! Special functions and distribution helpers behind the p-values.

use statrs::function::gamma::{gamma_ur, ln_gamma};

pub use statrs::function::erf::erfc;

/// Regularized upper incomplete gamma function Q(a, x).
pub fn igamc(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    gamma_ur(a, x).clamp(0.0, 1.0)
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

fn ln_binomial_pmf(k: u64, n: u64, p: f64) -> f64 {
    let (k_f, n_f) = (k as f64, n as f64);
    let ln_choose = ln_gamma(n_f + 1.0) - ln_gamma(k_f + 1.0) - ln_gamma(n_f - k_f + 1.0);
    let ln_p = if k == 0 { 0.0 } else { k_f * p.ln() };
    let ln_q = if k == n {
        0.0
    } else {
        (n_f - k_f) * (1.0 - p).ln()
    };
    ln_choose + ln_p + ln_q
}

/// P(X <= k) for X ~ Binomial(n, p).
pub fn binomial_cdf(k: u64, n: u64, p: f64) -> f64 {
    if k >= n {
        return 1.0;
    }
    (0..=k)
        .map(|i| ln_binomial_pmf(i, n, p).exp())
        .sum::<f64>()
        .min(1.0)
}

/// Smallest k with P(X <= k) >= level, X ~ Binomial(n, p).
pub fn binomial_quantile(n: u64, p: f64, level: f64) -> u64 {
    let mut cdf = 0.0;
    for k in 0..=n {
        cdf += ln_binomial_pmf(k, n, p).exp();
        // Tolerate the rounding of the running sum.
        if cdf >= level - 1e-12 {
            return k;
        }
    }
    n
}

/// Two-sided interval [lo, hi] holding X ~ Binomial(n, p) with probability
/// at least `coverage`, split evenly between the tails.
pub fn binomial_interval(n: u64, p: f64, coverage: f64) -> (u64, u64) {
    let tail = (1.0 - coverage) / 2.0;
    let lo = binomial_quantile(n, p, tail);
    let hi = binomial_quantile(n, p, 1.0 - tail);
    (lo, hi)
}

/// Chi-square p-value for uniformity of p-values over ten equal bins.
pub fn pvalue_uniformity(p_values: &[f64]) -> f64 {
    if p_values.is_empty() {
        return 1.0;
    }
    let mut bins = [0usize; 10];
    for &p in p_values {
        let idx = ((p * 10.0) as usize).min(9);
        bins[idx] += 1;
    }
    let expected = p_values.len() as f64 / 10.0;
    let chi2: f64 = bins
        .iter()
        .map(|&f| (f as f64 - expected).powi(2) / expected)
        .sum();
    igamc(4.5, chi2 / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn igamc_known_values() {
        // Q(1, x) = exp(-x); Q(0.5, x) = erfc(sqrt(x)).
        assert!((igamc(1.0, 2.0) - (-2.0f64).exp()).abs() < 1e-12);
        assert!((igamc(0.5, 1.3) - erfc(1.3f64.sqrt())).abs() < 1e-9);
        assert_eq!(igamc(3.0, 0.0), 1.0);
    }

    #[test]
    fn binomial_quantiles() {
        // Binomial(9, 0.01): P(X<=0)=0.9135, P(X<=1)=0.9966.
        assert_eq!(binomial_quantile(9, 0.01, 0.99), 1);
        assert_eq!(binomial_quantile(1, 0.01, 0.99), 0);
        // Binomial(20, 0.01): P(X<=1)=0.9831, P(X<=2)=0.9990.
        assert_eq!(binomial_quantile(20, 0.01, 0.99), 2);
        assert_eq!(binomial_quantile(100, 0.01, 0.99), 4);
        let (lo, hi) = binomial_interval(1000, 0.01, 0.99);
        assert!((1..=3).contains(&lo), "lo={lo}");
        assert!((18..=20).contains(&hi), "hi={hi}");
    }

    #[test]
    fn binomial_cdf_symmetric_half() {
        let c = binomial_cdf(999, 2000, 0.5);
        assert!((c - (1.0 - binomial_cdf(1000, 2000, 0.5))).abs() < 1e-9);
    }

    #[test]
    fn uniformity_flags_clustered_pvalues() {
        let uniform: Vec<f64> = (0..100).map(|i| (i as f64 + 0.5) / 100.0).collect();
        assert!(pvalue_uniformity(&uniform) > 0.99);
        let clustered = vec![0.95; 20];
        assert!(pvalue_uniformity(&clustered) < 1e-4);
    }
}
