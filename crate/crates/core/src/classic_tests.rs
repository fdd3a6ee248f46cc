//! Conventional tests used as baselines: likelihood ratio, signed
//! likelihood ratio, the confidence-set test and multiple comparisons with
//! the best (MCB) for three groups.

use crate::error::{Error, Result};
use crate::normal::{cdf, chi2_sf, sf};
use crate::quadrature::{NormalRule, QuadConfig};
use crate::regions::Region;

/// `P(χ²₁ ≥ λ̂²)` for `y` outside the region, `1` otherwise (the LR
/// statistic vanishes inside).
pub fn lr_pvalue(region: &Region, y: &[f64]) -> Result<f64> {
    let lambda = region.project(y)?.lambda_hat;
    Ok(lr_from_distance(lambda))
}

pub fn lr_from_distance(lambda: f64) -> f64 {
    if lambda > 0.0 {
        chi2_sf(lambda * lambda, 1)
    } else {
        1.0
    }
}

/// `Φ̄(λ̂)` with the signed distance `λ̂`.
pub fn signed_lr_pvalue(region: &Region, y: &[f64]) -> Result<f64> {
    Ok(sf(region.project(y)?.lambda_hat))
}

/// `P(χ²_{q+1} ≥ λ̂²)` for `y` outside the region, `1` otherwise.
pub fn confset_pvalue(region: &Region, y: &[f64]) -> Result<f64> {
    let lambda = region.project(y)?.lambda_hat;
    Ok(confset_from_distance(lambda, region.q() + 1))
}

pub fn confset_from_distance(lambda: f64, df: usize) -> f64 {
    if lambda > 0.0 {
        chi2_sf(lambda * lambda, df)
    } else {
        1.0
    }
}

/// MCB statistic `t = (√6·v + √2·|u|)/2` in cone coordinates.
pub fn mcb_statistic(y: &[f64]) -> Result<f64> {
    if y.len() != 2 {
        return Err(Error::UnsupportedDim { op: "mcb", q: y.len().saturating_sub(1) });
    }
    Ok((6f64.sqrt() * y[1] + 2f64.sqrt() * y[0].abs()) / 2.0)
}

/// Cone coordinates `(u, v)` of three group means `η` with `n`
/// observations per group.
pub fn mcb_coordinates(eta: [f64; 3], n: f64) -> [f64; 2] {
    [(n / 2.0).sqrt() * (eta[2] - eta[1]), (n / 6.0).sqrt() * (eta[1] + eta[2] - 2.0 * eta[0])]
}

/// `√n·max(η₂ − η₁, η₃ − η₁)` computed on the group means.
pub fn mcb_statistic_groups(eta: [f64; 3], n: f64) -> f64 {
    n.sqrt() * (eta[1] - eta[0]).max(eta[2] - eta[0])
}

/// `P(T ≥ t)` under the least favorable configuration,
/// `1 − E[Φ(Z + t)²]` with `Z ~ N(0, 1)`.
pub fn mcb_tail(t: f64) -> f64 {
    let rule = NormalRule::new(&QuadConfig::default(), &[]);
    // 1 − Φ² = Φ̄(1 + Φ) avoids cancellation for large t
    rule.expect(|z| sf(z + t) * (1.0 + cdf(z + t)))
}

pub fn mcb_pvalue(y: &[f64]) -> Result<f64> {
    Ok(mcb_tail(mcb_statistic(y)?))
}

/// Critical value `t_α` with `P(T ≥ t_α) = α`, by bisection to `1e-10`.
pub fn mcb_threshold(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidInput(format!("level must lie in (0, 1), got {alpha}")));
    }
    let (mut lo, mut hi) = (-40.0, 40.0);
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if mcb_tail(mid) > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn efron_values() {
        let r = Region::efron(0.1);
        let y = [f64::sqrt(0.5), f64::sqrt(8.0 / 3.0)];
        assert!((lr_pvalue(&r, &y).unwrap() - 0.064).abs() < 5e-4);
        assert!((signed_lr_pvalue(&r, &y).unwrap() - 0.032).abs() < 5e-4);
        assert!((confset_pvalue(&r, &y).unwrap() - 0.181).abs() < 5e-4);
    }

    #[test]
    fn cone_values() {
        let c = Region::cone();
        let lambda = f64::hypot(0.71, 1.63);
        assert_relative_eq!(lr_pvalue(&c, &[0.71, 1.63]).unwrap(), chi2_sf(lambda * lambda, 1), epsilon = 1e-12);
        assert_relative_eq!(confset_pvalue(&c, &[0.71, 1.63]).unwrap(), (-lambda * lambda / 2.0).exp(), epsilon = 1e-12);
        assert!((signed_lr_pvalue(&c, &[3.18, 0.20]).unwrap() - 0.039).abs() < 5e-4);
        assert_eq!(lr_pvalue(&c, &[0.0, 0.0]).unwrap(), 1.0);
        assert_eq!(confset_pvalue(&c, &[0.0, -1.0]).unwrap(), 1.0);
        assert_relative_eq!(signed_lr_pvalue(&c, &[0.0, 0.0]).unwrap(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn lr_folds_signed_lr() {
        let c = Region::efron(0.1);
        for y in [[0.71, 1.63], [3.18, 0.2], [-1.0, 0.5]] {
            assert_relative_eq!(lr_pvalue(&c, &y).unwrap(), 2.0 * signed_lr_pvalue(&c, &y).unwrap(), epsilon = 1e-12);
        }
    }

    #[test]
    fn mcb_values() {
        assert!((mcb_statistic(&[0.71, 1.63]).unwrap() - 2.498).abs() < 1e-3);
        assert!((mcb_statistic(&[3.18, 0.20]).unwrap() - 2.493).abs() < 1e-3);
        assert!((mcb_pvalue(&[0.71, 1.63]).unwrap() - 0.069).abs() < 5e-4);
        assert!((mcb_pvalue(&[3.18, 0.20]).unwrap() - 0.069).abs() < 5e-4);
        assert_relative_eq!(mcb_tail(0.0), 2.0 / 3.0, epsilon = 1e-12);
        assert!(mcb_threshold(2.0 / 3.0).unwrap().abs() < 1e-9);
        assert!((mcb_threshold(0.069).unwrap() - 2.50).abs() < 5e-3);
        assert!(mcb_threshold(1e-6).unwrap() > mcb_threshold(1e-3).unwrap());
    }

    #[test]
    fn mcb_coordinates_match_group_statistic() {
        let eta = [0.3, -0.2, 1.1];
        let n = 17.0;
        let y = mcb_coordinates(eta, n);
        assert_relative_eq!(mcb_statistic(&y).unwrap(), mcb_statistic_groups(eta, n), epsilon = 1e-12);
    }
}

#[cfg(test)]
mod properties {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn lr_doubles_signed_lr_outside(u in -4.0..4.0f64, v in -4.0..4.0f64) {
            let region = Region::efron(0.1);
            let y = [u, v];
            let lr = lr_pvalue(&region, &y).unwrap();
            if region.contains(&y) {
                prop_assert_eq!(lr, 1.0);
            } else {
                prop_assert!((lr - 2.0 * signed_lr_pvalue(&region, &y).unwrap()).abs() < 1e-12);
            }
        }
    }
}
