//! Gamma density of newborn biological ages (integer shape).

use super::params::DemographyParams;

fn ln_factorial(n: u32) -> f64 {
    (2..=n).map(|j| f64::from(j).ln()).sum()
}

/// `Gamma(b) = rate^alpha b^(alpha-1) exp(-rate b) / (alpha-1)!`.
pub fn gamma_density(demography: &DemographyParams, b: f64) -> f64 {
    let (alpha, rate) = (demography.alpha, demography.gamma_rate);
    if b < 0.0 {
        return 0.0;
    }
    if alpha == 1 {
        return rate * (-rate * b).exp();
    }
    if b == 0.0 {
        return 0.0;
    }
    let a = f64::from(alpha);
    (a * rate.ln() + (a - 1.0) * b.ln() - rate * b - ln_factorial(alpha - 1)).exp()
}

/// `E_k(Gamma) = rate^-k (alpha+k-1)! / (alpha-1)!`.
pub fn gamma_moment(demography: &DemographyParams, k: u32) -> f64 {
    let a = f64::from(demography.alpha);
    (0..k).fold(1.0, |acc, j| {
        acc * (a + f64::from(j)) / demography.gamma_rate
    })
}

/// Natural log of [`gamma_moment`]; finite for any `k`.
pub fn ln_gamma_moment(demography: &DemographyParams, k: u32) -> f64 {
    let a = f64::from(demography.alpha);
    (0..k)
        .map(|j| (a + f64::from(j)).ln() - demography.gamma_rate.ln())
        .sum()
}

/// `P(X > b)` for the integer-shape gamma law:
/// `exp(-rate b) * sum_{n < alpha} (rate b)^n / n!`.
pub fn gamma_survival(demography: &DemographyParams, b: f64) -> f64 {
    if b <= 0.0 {
        return 1.0;
    }
    let x = demography.gamma_rate * b;
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 1..demography.alpha {
        term *= x / f64::from(n);
        sum += term;
    }
    // Keep exp and the polynomial apart until the end to avoid 0 * inf.
    if sum.is_finite() {
        (-x).exp() * sum
    } else {
        (-x + sum.ln()).exp()
    }
}

/// Exact probability mass on `[lo, hi)`.
pub fn gamma_interval_mass(demography: &DemographyParams, lo: f64, hi: f64) -> f64 {
    (gamma_survival(demography, lo) - gamma_survival(demography, hi)).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn demo(alpha: u32, rate: f64) -> DemographyParams {
        DemographyParams {
            mu: 0.1,
            beta: 1.0,
            alpha,
            gamma_rate: rate,
        }
    }

    #[test]
    fn exponential_special_case() {
        assert_eq!(gamma_density(&demo(1, 1.0), 0.0), 1.0);
        assert_eq!(gamma_moment(&demo(1, 2.0), 1), 0.5);
    }

    #[test]
    fn shape_two_at_one() {
        let v = gamma_density(&demo(2, 1.0), 1.0);
        assert!((v - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn moment_values() {
        assert_eq!(gamma_moment(&demo(3, 0.5), 0), 1.0);
        assert_eq!(gamma_moment(&demo(2, 1.0), 2), 6.0);
        let d = demo(4, 0.7);
        for k in 0..12 {
            let rel =
                (ln_gamma_moment(&d, k).exp() - gamma_moment(&d, k)).abs() / gamma_moment(&d, k);
            assert!(rel < 1e-13);
        }
    }

    #[test]
    fn survival_is_a_tail_probability() {
        let d = demo(3, 0.5);
        assert_eq!(gamma_survival(&d, 0.0), 1.0);
        // e^{-100} (1 + 100 + 100^2 / 2)
        let tail = (-100f64).exp() * 5101.0;
        assert!((gamma_survival(&d, 200.0) - tail).abs() < 1e-12 * tail);
        let total: f64 = (0..400)
            .map(|i| gamma_interval_mass(&d, f64::from(i) * 0.25, f64::from(i + 1) * 0.25))
            .sum();
        assert!((total - (1.0 - gamma_survival(&d, 100.0))).abs() < 1e-14);
    }
}
