//! Closed-form asymptotic expansions in terms of the geometric summary
//! `(λ₀, γ₁..γ₄, β₀..β₃)` of a boundary.
//!
//! These formulas serve as an independent reference for the numerical
//! engines. They are accurate up to terms of order `n^{-3/2}` when the
//! boundary coefficients follow the class-S schedule (`h₂ ∝ ε`, `h₃ ∝ ε²`,
//! `h₄ ∝ ε³`).
//!
//! Normal quantiles follow the lower-tail convention used in rejection
//! probabilities: `z_α = Φ⁻¹(α)`, so `z_{0.05} ≈ −1.645`.

use crate::error::{Error, Result};
use crate::normal::{cdf, ppf, sf};
use crate::surface_jets::GeometricSummary;

/// Bootstrap probability at scale `σ²`: `Φ̄(β₀/σ + β₁σ + β₂σ³)`.
pub fn bp_expansion(g: &GeometricSummary, sigma2: f64) -> Result<f64> {
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(Error::InvalidScale(sigma2));
    }
    let s = sigma2.sqrt();
    Ok(sf(g.beta0 / s + g.beta1 * s + g.beta2 * s * sigma2))
}

/// Normalized bootstrap probability `Φ̄(β₀ + β₁σ² + β₂σ⁴)`, defined for
/// any real `σ²` including the extrapolation point `−1`.
pub fn nbp_expansion(g: &GeometricSummary, sigma2: f64) -> f64 {
    sf(g.beta0 + g.beta1 * sigma2 + g.beta2 * sigma2 * sigma2)
}

/// Fourth-order accurate p-value `Φ̄(β₀ − β₁ − β₂ + β₃)`.
pub fn pv_expansion(g: &GeometricSummary) -> f64 {
    sf(g.beta0 - g.beta1 - g.beta2 + g.beta3)
}

/// Multiscale AU p-value `Φ̄(β₀ − β₁ + β₂)`.
pub fn au_expansion(g: &GeometricSummary) -> f64 {
    sf(g.beta0 - g.beta1 + g.beta2)
}

/// Double bootstrap probability with outer scale `τ²`, inner scale `σ²`
/// and projection-error term `κ(θ)`:
/// `Φ̄(β₀/τ − β₁τ − β₂τ³ − β₃τσ² − (τ² + σ²)κ/τ)`.
///
/// `σ²` may be negative (DAU uses `σ² = −1`).
pub fn dbp_expansion(g: &GeometricSummary, tau2: f64, sigma2: f64, kappa: f64) -> Result<f64> {
    if !(tau2 > 0.0 && tau2.is_finite()) {
        return Err(Error::InvalidScale(tau2));
    }
    let t = tau2.sqrt();
    let z = g.beta0 / t - g.beta1 * t - g.beta2 * t * tau2 - g.beta3 * t * sigma2 - (tau2 + sigma2) * kappa / t;
    Ok(sf(z))
}

/// Rejection probability at level `α` of the normalized bootstrap
/// probability at scale `σ²`, for a true mean on the boundary with
/// curvature traces `γ₁..γ₄`.
///
/// `σ² = 1` is plain BP (bias `2γ₁` in the quantile); `σ² = −1` is AU.
pub fn reject_nbp(gamma: [f64; 4], alpha: f64, sigma2: f64) -> Result<f64> {
    let za = quantile(alpha)?;
    let [g1, g2, g3, g4] = gamma;
    let a = 1.0 + sigma2;
    let z = za + a * (g1 + za * g2 + 4.0 / 3.0 * za * za * g3 - g1 * g2) + a * a * (3.0 * g4 - 4.0 / 3.0 * g3)
        - sigma2 * 4.0 / 3.0 * g3;
    Ok(cdf(z))
}

/// Rejection probability at level `α` of `DBP_{1,σ²}`: `Φ(z_α − (1 + σ²)β₃)`.
pub fn reject_dbp(beta3: f64, alpha: f64, sigma2: f64) -> Result<f64> {
    Ok(cdf(quantile(alpha)? - (1.0 + sigma2) * beta3))
}

fn quantile(alpha: f64) -> Result<f64> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(ppf(alpha))
    } else {
        Err(Error::InvalidInput(format!("level must lie in (0, 1), got {alpha}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface_jets::beta_summary;
    use approx::assert_relative_eq;

    fn example() -> GeometricSummary {
        GeometricSummary {
            beta0: 1.85,
            beta1: 0.172126,
            beta2: -0.0066667,
            beta3: -0.016,
            ..GeometricSummary::flat(1.85)
        }
    }

    #[test]
    fn flat_values() {
        let g = GeometricSummary::flat(1.85);
        assert_relative_eq!(bp_expansion(&g, 1.0).unwrap(), 0.0322, epsilon = 5e-5);
        assert_eq!(pv_expansion(&g), sf(1.85));
        assert_eq!(au_expansion(&g), sf(1.85));
    }

    #[test]
    fn hand_evaluated_values() {
        let g = example();
        assert_relative_eq!(bp_expansion(&g, 1.0).unwrap(), sf(2.0154593), epsilon = 1e-12);
        assert_relative_eq!(bp_expansion(&g, 1.0).unwrap(), 0.0219, epsilon = 5e-5);
        assert_relative_eq!(pv_expansion(&g), 0.0476, epsilon = 5e-5);
        assert_relative_eq!(au_expansion(&g), sf(1.85 - 0.172126 - 0.0066667), epsilon = 1e-15);
        assert_relative_eq!(au_expansion(&g), 0.0474, epsilon = 1e-4);
        assert_relative_eq!(dbp_expansion(&g, 1.0, 1.0, 0.0).unwrap(), 0.0445, epsilon = 5e-5);
    }

    #[test]
    fn reductions() {
        let g = example();
        assert_relative_eq!(au_expansion(&g), nbp_expansion(&g, -1.0), epsilon = 1e-14);
        assert_eq!(pv_expansion(&g), dbp_expansion(&g, 1.0, -1.0, 0.0).unwrap());
        for kappa in [-0.3, 0.0, 0.7] {
            let a = dbp_expansion(&g, 1.3, -1.3, kappa).unwrap();
            let b = dbp_expansion(&g, 1.3, -1.3, 0.0).unwrap();
            assert_relative_eq!(a, b, epsilon = 1e-15);
        }
        assert!(dbp_expansion(&g, 0.0, 1.0, 0.0).is_err());
        assert!(bp_expansion(&g, -1.0).is_err());
    }

    #[test]
    fn rejection_values() {
        assert_relative_eq!(reject_nbp([0.0; 4], 0.05, 1.0).unwrap(), 0.05, epsilon = 1e-12);
        assert_relative_eq!(reject_nbp([0.1, 0.0, 0.0, 0.0], 0.05, 1.0).unwrap(), cdf(ppf(0.05) + 0.2), epsilon = 1e-15);
        assert_relative_eq!(reject_nbp([0.1, 0.0, 0.0, 0.0], 0.05, 1.0).unwrap(), 0.0743, epsilon = 1e-4);
        assert_relative_eq!(reject_nbp([0.0, 0.0, 0.002, 0.0], 0.05, -1.0).unwrap(), cdf(ppf(0.05) + 4.0 / 3.0 * 0.002), epsilon = 1e-15);
        assert!(reject_nbp([0.0, 0.0, 0.002, 0.0], 0.05, -1.0).unwrap() - 0.05 < 3e-4);
        let g = [0.2, -0.1, 0.05, 0.01];
        let za = ppf(0.05);
        assert_relative_eq!(reject_nbp(g, 0.05, -1.0).unwrap(), cdf(za + 4.0 / 3.0 * 0.05), epsilon = 1e-15);
        assert_relative_eq!(reject_dbp(0.0, 0.05, 1.0).unwrap(), 0.05, epsilon = 1e-12);
        assert_relative_eq!(reject_dbp(0.3, 0.05, -1.0).unwrap(), 0.05, epsilon = 1e-12);
        assert_relative_eq!(reject_dbp(-0.016, 0.05, 1.0).unwrap(), 0.0534, epsilon = 5e-5);
        assert!(reject_dbp(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn au_and_pv_differ_by_gamma3_term() {
        let g = beta_summary([0.3, 0.1, 0.04, 0.02], 1.7);
        let d = crate::normal::isf(au_expansion(&g)) - crate::normal::isf(pv_expansion(&g));
        assert_relative_eq!(d, 4.0 / 3.0 * 0.04, epsilon = 1e-10);
    }
}
