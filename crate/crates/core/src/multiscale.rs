//! Multiscale scaling curves and their extrapolation to negative scales.
//!
//! A BP curve holds `z(σ²) = σ Φ̄⁻¹(BP_{σ²})`; a DBP curve holds
//! `z(σ²) = Φ̄⁻¹(DBP_{1,σ²})`. Both are extrapolated to `σ² = −1`, either by
//! a weighted polynomial fit over the whole grid or by a Taylor expansion
//! at `σ² = 1` built from Richardson-extrapolated central differences.
//! Every extrapolation is linear in the curve values, so its standard error
//! follows directly from the per-point errors.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bp_engine::{bp, dbp, Backend, CenterRule, EngineSettings};
use crate::error::{Error, Result};
use crate::normal::{pdf, sf};
use crate::regions::Region;

/// Central-difference step of the Taylor mode (halved once for Richardson).
pub const TAYLOR_STEP: f64 = 0.1;

/// Scales needed by the Taylor mode.
pub const TAYLOR_GRID: [f64; 5] = [0.9, 0.95, 1.0, 1.05, 1.1];

const SCALE_MATCH: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveKind {
    Bp,
    Dbp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtrapolationMode {
    Fit,
    Taylor,
}

impl std::str::FromStr for ExtrapolationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fit" => Ok(ExtrapolationMode::Fit),
            "taylor" => Ok(ExtrapolationMode::Taylor),
            other => Err(Error::InvalidInput(format!("unknown extrapolation mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveMeta {
    pub backend: Backend,
    pub replicates: u64,
    pub inner_replicates: u64,
    pub seed: Option<u64>,
}

impl CurveMeta {
    fn from_settings(settings: &EngineSettings) -> Self {
        match settings.backend {
            Backend::Quad => CurveMeta {
                backend: Backend::Quad,
                replicates: 0,
                inner_replicates: 0,
                seed: None,
            },
            Backend::Mc => CurveMeta {
                backend: Backend::Mc,
                replicates: settings.replicates,
                inner_replicates: settings.inner_replicates,
                seed: Some(settings.seed),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingCurve {
    pub scales: Vec<f64>,
    pub z: Vec<f64>,
    /// Delta-method standard error of each `z` (zero for quadrature).
    pub se: Vec<f64>,
    pub kind: CurveKind,
    pub meta: CurveMeta,
}

impl ScalingCurve {
    /// Builds a curve from raw values, validating the grid.
    pub fn new(scales: Vec<f64>, z: Vec<f64>, se: Vec<f64>, kind: CurveKind, meta: CurveMeta) -> Result<Self> {
        validate_grid(&scales)?;
        if z.len() != scales.len() || se.len() != scales.len() {
            return Err(Error::InvalidInput("curve columns must have equal length".into()));
        }
        if z.iter().chain(&se).any(|v| !v.is_finite()) || se.iter().any(|&s| s < 0.0) {
            return Err(Error::InvalidInput("curve values must be finite".into()));
        }
        Ok(ScalingCurve { scales, z, se, kind, meta })
    }

    /// Inverse-variance weights, or uniform weights when any error is zero.
    pub fn weights(&self) -> Vec<f64> {
        if self.se.iter().all(|&s| s > 0.0) {
            self.se.iter().map(|s| 1.0 / (s * s)).collect()
        } else {
            vec![1.0; self.scales.len()]
        }
    }

    fn has_errors(&self) -> bool {
        self.se.iter().all(|&s| s > 0.0)
    }

    fn index_of(&self, s2: f64) -> Option<usize> {
        self.scales.iter().position(|&x| (x - s2).abs() <= SCALE_MATCH)
    }
}

fn validate_grid(scales: &[f64]) -> Result<()> {
    if scales.is_empty() {
        return Err(Error::InsufficientScales { needed: 1, got: 0 });
    }
    if let Some(&bad) = scales.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
        return Err(Error::InvalidScale(bad));
    }
    if scales.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("scales must be strictly increasing".into()));
    }
    Ok(())
}

/// `n` equispaced scales on `[a, b]`.
pub fn grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Thirteen equispaced scales on `[0.5, 1.5]`.
pub fn default_grid() -> Vec<f64> {
    grid(0.5, 1.5, 13)
}

/// Multiscale bootstrap curve `σ Φ̄⁻¹(BP_{σ²})` over `scales`.
pub fn bp_curve(region: &Region, y: &[f64], scales: &[f64], settings: &EngineSettings) -> Result<ScalingCurve> {
    validate_grid(scales)?;
    let points = scales
        .par_iter()
        .enumerate()
        .map(|(i, &s2)| {
            let est = bp(region, y, s2, settings, i as u32)?;
            let sigma = s2.sqrt();
            let z = est.z();
            let se = match settings.backend {
                Backend::Quad => 0.0,
                Backend::Mc => sigma * z_stderr(z, est.replicates),
            };
            Ok((sigma * z, se))
        })
        .collect::<Result<Vec<_>>>()?;
    let (z, se) = points.into_iter().unzip();
    ScalingCurve::new(scales.to_vec(), z, se, CurveKind::Bp, CurveMeta::from_settings(settings))
}

/// Double bootstrap curve `Φ̄⁻¹(DBP_{1,σ²})` over `scales`.
pub fn dbp_curve(region: &Region, y: &[f64], scales: &[f64], center: &CenterRule, settings: &EngineSettings) -> Result<ScalingCurve> {
    validate_grid(scales)?;
    let points = scales
        .par_iter()
        .enumerate()
        .map(|(i, &s2)| {
            let est = dbp(region, y, 1.0, s2, center, settings, i as u32)?;
            let z = est.z();
            let se = match settings.backend {
                Backend::Quad => 0.0,
                Backend::Mc => z_stderr(z, est.replicates),
            };
            Ok((z, se))
        })
        .collect::<Result<Vec<_>>>()?;
    let (z, se) = points.into_iter().unzip();
    ScalingCurve::new(scales.to_vec(), z, se, CurveKind::Dbp, CurveMeta::from_settings(settings))
}

/// Delta-method standard error of `Φ̄⁻¹(p̂)` for a binomial proportion.
fn z_stderr(z: f64, replicates: u64) -> f64 {
    let p = sf(z);
    (p * (1.0 - p) / replicates as f64).sqrt() / pdf(z)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    /// Ascending powers of `σ²`.
    pub coeffs: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
    pub dof: usize,
    pub rss: f64,
}

impl FitResult {
    pub fn eval(&self, s2: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * s2 + c)
    }

    pub fn eval_stderr(&self, s2: f64) -> f64 {
        let x: Vec<f64> = (0..self.coeffs.len()).map(|j| s2.powi(j as i32)).collect();
        let mut var = 0.0;
        for (i, xi) in x.iter().enumerate() {
            for (j, xj) in x.iter().enumerate() {
                var += xi * self.cov[i][j] * xj;
            }
        }
        var.max(0.0).sqrt()
    }
}

/// Weighted least squares of `z` on `1, σ², …, (σ²)^degree`.
pub fn fit_poly(curve: &ScalingCurve, degree: usize) -> Result<FitResult> {
    let n = curve.scales.len();
    let cols = degree + 1;
    if cols > n {
        return Err(Error::InsufficientScales { needed: cols, got: n });
    }
    let w = curve.weights();
    let x = DMatrix::from_fn(n, cols, |i, j| curve.scales[i].powi(j as i32));
    let sw = DMatrix::from_fn(n, cols, |i, j| x[(i, j)] * w[i].sqrt());
    let svd = sw.svd(true, true);
    let rank = svd.rank(1e-12 * svd.singular_values.max());
    if rank < cols {
        return Err(Error::RankDeficient { rank, cols });
    }
    let wz = DVector::from_fn(n, |i, _| w[i].sqrt() * curve.z[i]);
    let beta = svd.solve(&wz, 0.0).map_err(|_| Error::RankDeficient { rank, cols })?;
    let v_t = svd.v_t.as_ref().ok_or(Error::RankDeficient { rank, cols })?;
    let inv = DMatrix::from_fn(cols, cols, |i, j| {
        (0..cols)
            .map(|k| v_t[(k, i)] * v_t[(k, j)] / svd.singular_values[k].powi(2))
            .sum::<f64>()
    });
    let rss: f64 = (0..n)
        .map(|i| {
            let r = curve.z[i] - (0..cols).map(|j| x[(i, j)] * beta[j]).sum::<f64>();
            w[i] * r * r
        })
        .sum();
    let dof = n - cols;
    let scale = if curve.has_errors() {
        1.0
    } else if dof > 0 {
        rss / dof as f64
    } else {
        0.0
    };
    let cov = (0..cols).map(|i| (0..cols).map(|j| inv[(i, j)] * scale).collect()).collect();
    Ok(FitResult {
        coeffs: beta.iter().copied().collect(),
        cov,
        dof,
        rss,
    })
}

/// Value of a curve extrapolated to `σ² = −1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extrapolation {
    pub z: f64,
    pub stderr: f64,
    pub pvalue: f64,
}

impl Extrapolation {
    fn from_linear(curve: &ScalingCurve, coef: &[(usize, f64)]) -> Self {
        let z: f64 = coef.iter().map(|&(i, c)| c * curve.z[i]).sum();
        let var: f64 = coef.iter().map(|&(i, c)| (c * curve.se[i]).powi(2)).sum();
        Extrapolation {
            z,
            stderr: var.sqrt(),
            pvalue: sf(z),
        }
    }
}

/// Linear weights turning the Taylor-grid values into `k` Taylor terms at
/// `σ² = 1` evaluated at `σ² = target`.
fn taylor_weights(curve: &ScalingCurve, terms: usize, target: f64) -> Result<Vec<(usize, f64)>> {
    let idx: Vec<usize> = TAYLOR_GRID
        .iter()
        .map(|&s| curve.index_of(s))
        .collect::<Option<Vec<_>>>()
        .ok_or(Error::InsufficientScales { needed: TAYLOR_GRID.len(), got: curve.scales.len() })?;
    let h = TAYLOR_STEP;
    let g = h / 2.0;
    let d = target - 1.0;
    // z values at 0.9, 0.95, 1, 1.05, 1.1
    let mut w = [0.0; 5];
    w[2] = 1.0;
    if terms >= 2 {
        // (4 D1(h/2) − D1(h)) / 3
        let (a, b) = (1.0 / (6.0 * h), 4.0 / (6.0 * g));
        let d1 = [a, -b, 0.0, b, -a];
        for k in 0..5 {
            w[k] += d * d1[k];
        }
    }
    if terms >= 3 {
        let (a, b) = (1.0 / (h * h), 1.0 / (g * g));
        // (4 D2(h/2) − D2(h)) / 3 with D2(s) = (z₊ − 2z₀ + z₋)/s²
        let d2 = [-a / 3.0, 4.0 * b / 3.0, (2.0 * a - 8.0 * b) / 3.0, 4.0 * b / 3.0, -a / 3.0];
        for k in 0..5 {
            w[k] += 0.5 * d * d * d2[k];
        }
    }
    if terms > 3 {
        return Err(Error::Unsupported(format!("{terms}-term Taylor extrapolation")));
    }
    Ok(idx.into_iter().zip(w).collect())
}

fn extrapolate(curve: &ScalingCurve, terms: usize, mode: ExtrapolationMode) -> Result<Extrapolation> {
    match mode {
        ExtrapolationMode::Taylor => Ok(Extrapolation::from_linear(curve, &taylor_weights(curve, terms, -1.0)?)),
        ExtrapolationMode::Fit => {
            let fit = fit_poly(curve, terms - 1)?;
            let z = fit.eval(-1.0);
            Ok(Extrapolation {
                z,
                stderr: fit.eval_stderr(-1.0),
                pvalue: sf(z),
            })
        }
    }
}

fn require_kind(curve: &ScalingCurve, kind: CurveKind) -> Result<()> {
    if curve.kind == kind {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("expected a {kind:?} curve, got {:?}", curve.kind)))
    }
}

/// `AU_k`: the BP curve extrapolated to `σ² = −1` with `k` terms.
pub fn au_k(curve: &ScalingCurve, k: usize, mode: ExtrapolationMode) -> Result<Extrapolation> {
    require_kind(curve, CurveKind::Bp)?;
    if !(2..=3).contains(&k) {
        return Err(Error::InvalidInput(format!("AU order must be 2 or 3, got {k}")));
    }
    extrapolate(curve, k, mode)
}

/// DAU: the DBP curve extrapolated linearly to `σ² = −1`.
pub fn dau(curve: &ScalingCurve, mode: ExtrapolationMode) -> Result<Extrapolation> {
    require_kind(curve, CurveKind::Dbp)?;
    extrapolate(curve, 2, mode)
}

/// Value of the curve at `σ² = 1`, interpolated by the fit when `1` is
/// not a grid point.
pub fn value_at_one(curve: &ScalingCurve) -> Result<f64> {
    match curve.index_of(1.0) {
        Some(i) => Ok(curve.z[i]),
        None => Ok(fit_poly(curve, 2.min(curve.scales.len() - 1))?.eval(1.0)),
    }
}


#[cfg(test)]
mod properties {
    use super::*;
    use proptest::prelude::*;

    fn scales() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::btree_set(1u32..40, 4..9).prop_map(|s| s.into_iter().map(|k| 0.05 * k as f64).collect())
    }

    fn quadratic(c: [f64; 3], scales: &[f64]) -> ScalingCurve {
        let z = scales.iter().map(|s| c[0] + c[1] * s + c[2] * s * s).collect();
        let meta = CurveMeta::from_settings(&EngineSettings::quad());
        ScalingCurve::new(scales.to_vec(), z, vec![0.0; scales.len()], CurveKind::Bp, meta).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn quadratics_are_fitted_exactly(a in -3.0..3.0f64, b in -1.0..1.0f64, c in -0.5..0.5f64, grid in scales()) {
            let fit = fit_poly(&quadratic([a, b, c], &grid), 2).unwrap();
            prop_assert!(fit.coeffs.len() <= grid.len());
            for (got, want) in fit.coeffs.iter().zip([a, b, c]) {
                prop_assert!((got - want).abs() < 1e-8);
            }
        }

        #[test]
        fn au3_does_not_depend_on_the_grid(a in -3.0..3.0f64, b in -1.0..1.0f64, c in -0.5..0.5f64, g1 in scales(), g2 in scales()) {
            let x = au_k(&quadratic([a, b, c], &g1), 3, ExtrapolationMode::Fit).unwrap();
            let y = au_k(&quadratic([a, b, c], &g2), 3, ExtrapolationMode::Fit).unwrap();
            prop_assert!((x.z - y.z).abs() < 1e-8);
            prop_assert!((x.z - (a - b + c)).abs() < 1e-8);
        }
    }
}
