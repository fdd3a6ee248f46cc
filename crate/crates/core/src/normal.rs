//! Standard normal and chi-square tail functions.
//!
//! Upper tails are evaluated through `erfc` so that probabilities as small
//! as 1e-300 keep full relative precision, which the multiscale transforms
//! rely on when a bootstrap probability is close to zero or one.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

use libm::erfc;
use statrs::function::erf::erfc_inv;
use statrs::function::gamma::gamma_ur;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal density.
pub fn pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal distribution function Φ(x).
pub fn cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// Upper tail Φ̄(x) = 1 − Φ(x).
pub fn sf(x: f64) -> f64 {
    0.5 * erfc(x * FRAC_1_SQRT_2)
}

/// Inverse upper tail: returns z with Φ̄(z) = p.
pub fn isf(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::INFINITY;
    }
    if p >= 1.0 {
        return f64::NEG_INFINITY;
    }
    let mut z = SQRT_2 * erfc_inv(2.0 * p);
    // two Newton steps on log Φ̄ polish the rational approximation
    for _ in 0..2 {
        let tail = sf(z);
        if tail <= 0.0 || !z.is_finite() {
            break;
        }
        z += (tail / pdf(z)) * (tail / p).ln();
    }
    z
}

/// Inverse distribution function Φ⁻¹(p).
pub fn ppf(p: f64) -> f64 {
    -isf(p)
}

/// Φ̄⁻¹ of a probability known through both `p` and its complement `q`.
///
/// Picks whichever of the two is smaller so the result keeps full
/// precision in both tails.
pub fn isf_pair(p: f64, q: f64) -> f64 {
    if p <= q {
        isf(p)
    } else {
        -isf(q)
    }
}

/// Upper tail of the chi-square distribution with `df` degrees of freedom.
pub fn chi2_sf(x: f64, df: usize) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    match df {
        0 => 0.0,
        1 => 2.0 * sf(x.sqrt()),
        2 => (-0.5 * x).exp(),
        _ => gamma_ur(0.5 * df as f64, 0.5 * x),
    }
}

/// Upper α-quantile of the chi-square distribution: P(χ² ≥ c) = α.
pub fn chi2_isf(alpha: f64, df: usize) -> f64 {
    match df {
        1 => isf(0.5 * alpha).powi(2),
        2 => -2.0 * alpha.ln(),
        _ => {
            let (mut lo, mut hi) = (0.0, 1.0);
            while chi2_sf(hi, df) > alpha {
                hi *= 2.0;
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if chi2_sf(mid, df) > alpha {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo < 1e-13 * hi {
                    break;
                }
            }
            0.5 * (lo + hi)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn tails_are_complementary() {
        for &x in &[-6.0, -1.3, 0.0, 0.7, 2.2, 8.0] {
            assert_relative_eq!(cdf(x) + sf(x), 1.0, epsilon = 1e-15);
        }
        assert_relative_eq!(sf(1.644_853_626_951_472), 0.05, epsilon = 1e-15);
    }

    #[test]
    fn inverse_round_trips_deep_tails() {
        for &p in &[1e-300, 1e-20, 1e-6, 0.05, 0.5, 0.93] {
            assert_relative_eq!(sf(isf(p)), p, max_relative = 1e-12);
        }
        assert_relative_eq!(isf_pair(1.0 - 1e-12, 1e-12), -isf(1e-12), epsilon = 1e-12);
    }

    #[test]
    fn chi_square_tails() {
        assert_relative_eq!(chi2_sf(3.42, 1), 0.064_42, epsilon = 5e-5);
        assert_relative_eq!(chi2_sf(3.42, 2), 0.180_87, epsilon = 5e-5);
        assert_relative_eq!(chi2_sf(7.814_727_903, 3), 0.05, epsilon = 1e-9);
        for df in 1..5 {
            assert_relative_eq!(chi2_sf(chi2_isf(0.05, df), df), 0.05, epsilon = 1e-11);
        }
    }
}
