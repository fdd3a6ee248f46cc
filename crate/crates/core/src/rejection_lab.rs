//! Rejection probabilities of every method for a true mean on the
//! boundary, and the ε-ladder experiments measuring orders of accuracy.
//!
//! For `q = 1` the probability `P_μ(p(Y) < α)` is integrated exactly in
//! `v`: on each vertical slice `Y_u = u` the rejection event is the half
//! line above a critical value `v_c(u)`, located by a bracketed Brent
//! search, so the slice contributes `Φ̄(v_c(u) − μ_v)`. The outer integral
//! over `u` uses the composite Gauss–Legendre normal rule.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use roots::{find_root_brent, SimpleConvergency};
use serde::{Deserialize, Serialize};

use crate::bp_engine::{stream_rng, CenterRule, CHUNK};
use crate::classic_tests::{mcb_statistic, mcb_threshold};
use crate::error::{Error, Result};
use crate::methods::{method_z, pvalue_report, Method, PValueReport, PipelineConfig};
use crate::normal::{chi2_isf, isf, sf};
use crate::quadrature::{Feature, NormalRule, QuadConfig};
use crate::regions::Region;
use crate::surface_jets::SurfaceJet;

const BOUNDARY_TOL: f64 = 1e-9;
const SKIP_WEIGHT: f64 = 1e-15;
const DENSE_HALF_WIDTH: f64 = 9.0;
const DENSE_STEP: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Quad,
    Mc,
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scheme::Quad => "quad",
            Scheme::Mc => "mc",
        })
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quad" => Ok(Scheme::Quad),
            "mc" => Ok(Scheme::Mc),
            other => Err(Error::InvalidInput(format!("unknown scheme {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabConfig {
    pub pipeline: PipelineConfig,
    /// Outer rule over the tangent coordinate of `Y`.
    pub u_rule: QuadConfig,
    /// Tolerance of the critical value on each slice.
    pub v_tol: f64,
    pub mc_replicates: u64,
    pub seed: u64,
}

impl Default for LabConfig {
    fn default() -> Self {
        LabConfig {
            pipeline: PipelineConfig::quad(),
            u_rule: QuadConfig {
                order: 8,
                ..QuadConfig::default()
            },
            v_tol: 1e-10,
            mc_replicates: 10_000,
            seed: 20_090_301,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RejectionDetail {
    pub u_nodes: usize,
    pub evaluations: usize,
    /// Slices where the bracket failed and dense sampling was used.
    pub fallback_slices: usize,
    pub replicates: u64,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectionRow {
    pub method: Method,
    pub u: f64,
    pub alpha: f64,
    pub prob: f64,
    pub scheme: Scheme,
    pub detail: RejectionDetail,
}

/// The rejection rule of a method as `statistic(y) > threshold`.
#[derive(Debug, Clone, Copy)]
struct Rule {
    method: Method,
    threshold: f64,
}

impl Rule {
    fn new(method: Method, region: &Region, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidInput(format!("level must lie in (0, 1), got {alpha}")));
        }
        let threshold = match method {
            Method::Lr => isf(alpha / 2.0),
            Method::Confset => chi2_isf(alpha, region.q() + 1).sqrt(),
            Method::Mcb => mcb_threshold(alpha)?,
            _ => isf(alpha),
        };
        Ok(Rule { method, threshold })
    }

    /// Signed distance for the likelihood-based tests, `t` for MCB and
    /// `Φ̄⁻¹(p)` otherwise; increasing in `v` on every slice.
    fn statistic(&self, region: &Region, y: &[f64], pipeline: &PipelineConfig) -> Result<f64> {
        match self.method {
            Method::Lr | Method::SignedLr | Method::Confset => Ok(region.project(y)?.lambda_hat),
            Method::Mcb => mcb_statistic(y),
            m => Ok(method_z(region, y, m, pipeline)?.0),
        }
    }

    fn excess(&self, region: &Region, y: &[f64], pipeline: &PipelineConfig) -> Result<f64> {
        Ok(self.statistic(region, y, pipeline)? - self.threshold)
    }
}

fn check_on_boundary(region: &Region, mu: &[f64]) -> Result<()> {
    if mu.len() != region.q() + 1 {
        return Err(Error::InvalidInput(format!("mean must have {} coordinates", region.q() + 1)));
    }
    let off = (mu[region.q()] + region.h(&mu[..region.q()])).abs();
    if off <= BOUNDARY_TOL {
        Ok(())
    } else {
        Err(Error::CenterOffBoundary(off))
    }
}

/// Memoized evaluations of a slice function.
struct SliceFn<'a> {
    f: Box<dyn FnMut(f64) -> Result<f64> + 'a>,
    cache: Vec<(f64, f64)>,
    error: Option<Error>,
}

impl<'a> SliceFn<'a> {
    fn new(f: impl FnMut(f64) -> Result<f64> + 'a) -> Self {
        SliceFn {
            f: Box::new(f),
            cache: Vec::new(),
            error: None,
        }
    }

    fn eval(&mut self, v: f64) -> Result<f64> {
        if let Some(&(_, fv)) = self.cache.iter().find(|(x, _)| *x == v) {
            return Ok(fv);
        }
        let fv = (self.f)(v)?;
        self.cache.push((v, fv));
        Ok(fv)
    }

    fn eval_or_nan(&mut self, v: f64) -> f64 {
        match self.eval(v) {
            Ok(fv) => fv,
            Err(e) => {
                self.error.get_or_insert(e);
                f64::NAN
            }
        }
    }
}

/// Root of an increasing slice function near `guess`; `None` when no sign
/// change is found within reach.
fn critical_value(f: &mut SliceFn, guess: f64, tol: f64) -> Result<Option<f64>> {
    let mut x0 = guess;
    let mut f0 = f.eval(x0)?;
    if f0 == 0.0 {
        return Ok(Some(x0));
    }
    let mut slope = 1.0;
    let mut stretch = 1.0;
    let mut bracket = None;
    for _ in 0..60 {
        let mut step = -f0 / slope * stretch;
        if !step.is_finite() || step == 0.0 {
            step = if f0 > 0.0 { -0.1 } else { 0.1 };
        }
        step = step.signum() * step.abs().clamp(1e-3, 4.0);
        let x1 = x0 + step;
        if x1.abs() > 60.0 {
            return Ok(None);
        }
        let f1 = f.eval(x1)?;
        if f1 == 0.0 {
            return Ok(Some(x1));
        }
        if f1.signum() != f0.signum() {
            bracket = Some((x0, x1));
            break;
        }
        let secant = (f1 - f0) / (x1 - x0);
        if secant.is_finite() && secant > 1e-3 {
            slope = secant;
            stretch = 1.3;
        } else {
            stretch *= 2.0;
        }
        x0 = x1;
        f0 = f1;
    }
    let Some((a, b)) = bracket else { return Ok(None) };
    let mut conv = SimpleConvergency { eps: tol, max_iter: 200 };
    let root = find_root_brent(a, b, |v| f.eval_or_nan(v), &mut conv);
    if let Some(e) = f.error.take() {
        return Err(e);
    }
    match root {
        Ok(v) => Ok(Some(v)),
        Err(_) => Ok(None),
    }
}

/// Rejection mass of one slice by scanning `v` and bisecting every sign
/// change; used when the bracketed search fails.
fn dense_slice_mass(f: &mut SliceFn, mu_v: f64, tol: f64) -> Result<f64> {
    let n = (2.0 * DENSE_HALF_WIDTH / DENSE_STEP).round() as usize;
    let vs: Vec<f64> = (0..=n).map(|i| mu_v - DENSE_HALF_WIDTH + DENSE_STEP * i as f64).collect();
    let mut signs = Vec::with_capacity(vs.len());
    for &v in &vs {
        signs.push(f.eval(v)? > 0.0);
    }
    let mut crossing = |mut lo: f64, mut hi: f64, lo_rejects: bool| -> Result<f64> {
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if (f.eval(mid)? > 0.0) == lo_rejects {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    };
    let mut mass = 0.0;
    let mut start = if signs[0] { Some(f64::NEG_INFINITY) } else { None };
    for i in 1..vs.len() {
        if signs[i] != signs[i - 1] {
            let x = crossing(vs[i - 1], vs[i], signs[i - 1])?;
            if signs[i] {
                start = Some(x);
            } else if let Some(a) = start.take() {
                mass += sf(a - mu_v) - sf(x - mu_v);
            }
        }
    }
    if let Some(a) = start {
        mass += sf(a - mu_v);
    }
    Ok(mass)
}

/// `P_μ(p_method(Y) < α)` for a mean `μ` on the boundary.
pub fn rejection_probability(
    method: Method,
    region: &Region,
    mu: &[f64],
    alpha: f64,
    scheme: Scheme,
    config: &LabConfig,
) -> Result<RejectionRow> {
    check_on_boundary(region, mu)?;
    let rule = Rule::new(method, region, alpha)?;
    let (prob, detail) = match scheme {
        Scheme::Quad => rejection_quad(&rule, region, mu, config)?,
        Scheme::Mc => rejection_mc(&rule, region, mu, config)?,
    };
    Ok(RejectionRow {
        method,
        u: mu[0],
        alpha,
        prob,
        scheme,
        detail,
    })
}

fn rejection_quad(rule: &Rule, region: &Region, mu: &[f64], config: &LabConfig) -> Result<(f64, RejectionDetail)> {
    if region.q() != 1 {
        return Err(Error::UnsupportedDim { op: "rejection quad", q: region.q() });
    }
    let features: Vec<Feature> = region
        .features()
        .iter()
        .map(|f| {
            if f.scale == 0.0 {
                Feature::kink(f.at - mu[0])
            } else {
                Feature::new(f.at - mu[0], f.scale)
            }
        })
        .collect();
    let outer = NormalRule::new(&config.u_rule, &features);
    let mut prob = 0.0;
    let mut evaluations = 0;
    let mut fallback_slices = 0;
    let mut prev: Option<(f64, f64)> = None;
    for (&t, &w) in outer.nodes.iter().zip(&outer.weights) {
        if w < SKIP_WEIGHT {
            continue;
        }
        let u = mu[0] + t;
        let h = region.h(&[u]);
        let guess = match prev {
            Some((pu, pv)) => pv - (h - region.h(&[pu])),
            None => -h + rule.threshold,
        };
        let mut f = SliceFn::new(|v| rule.excess(region, &[u, v], &config.pipeline));
        let mass = match critical_value(&mut f, guess, config.v_tol)? {
            Some(vc) => {
                prev = Some((u, vc));
                sf(vc - mu[1])
            }
            None => {
                fallback_slices += 1;
                dense_slice_mass(&mut f, mu[1], config.v_tol)?
            }
        };
        evaluations += f.cache.len();
        prob += w * mass;
    }
    let detail = RejectionDetail {
        u_nodes: outer.len(),
        evaluations,
        fallback_slices,
        replicates: 0,
        seed: None,
    };
    Ok((prob, detail))
}

fn rejection_mc(rule: &Rule, region: &Region, mu: &[f64], config: &LabConfig) -> Result<(f64, RejectionDetail)> {
    let total = config.mc_replicates;
    if total == 0 {
        return Err(Error::InvalidInput("replicate count must be positive".into()));
    }
    let chunks = total.div_ceil(CHUNK);
    let hits = (0..chunks)
        .into_par_iter()
        .map(|c| -> Result<u64> {
            let mut rng = stream_rng(config.seed, u32::MAX, c as u32);
            let n = CHUNK.min(total - c * CHUNK);
            let mut hits = 0;
            let mut y = vec![0.0; mu.len()];
            for i in 0..n {
                for (yi, m) in y.iter_mut().zip(mu) {
                    let z: f64 = rng.sample(StandardNormal);
                    *yi = m + z;
                }
                let mut pipeline = config.pipeline.clone();
                pipeline.engine.seed = config.pipeline.engine.seed.wrapping_add(c * CHUNK + i + 1);
                if rule.excess(region, &y, &pipeline)? > 0.0 {
                    hits += 1;
                }
            }
            Ok(hits)
        })
        .sum::<Result<u64>>()?;
    let detail = RejectionDetail {
        u_nodes: 0,
        evaluations: total as usize,
        fallback_slices: 0,
        replicates: total,
        seed: Some(config.seed),
    };
    Ok((hits as f64 / total as f64, detail))
}

/// Boundary parameters of the rejection table.
pub fn default_u_list() -> Vec<f64> {
    (0..7).map(|i| 0.5 * i as f64).collect()
}

/// Rejection probabilities at `μ = (u, −h(u))` for every method and `u`,
/// ordered by method and then `u`.
pub fn table2(
    region: &Region,
    u_list: &[f64],
    alpha: f64,
    methods: &[Method],
    scheme: Scheme,
    config: &LabConfig,
) -> Result<Vec<RejectionRow>> {
    if methods.is_empty() {
        return Err(Error::InvalidInput("empty method list".into()));
    }
    let mut methods = methods.to_vec();
    methods.sort();
    let work: Vec<(Method, f64)> = methods.iter().flat_map(|&m| u_list.iter().map(move |&u| (m, u))).collect();
    work.par_iter()
        .map(|&(m, u)| rejection_probability(m, region, &[u, -region.h(&[u])], alpha, scheme, config))
        .collect()
}

/// The observed points of the worked example: `y₁ = (1/√2, √(8/3))`
/// (printed as `(0.71, 1.63)`) and `y₂ = (3.18, 0.20)`.
pub fn table1_points() -> [[f64; 2]; 2] {
    [[f64::sqrt(0.5), f64::sqrt(8.0 / 3.0)], [3.18, 0.20]]
}

/// The four cases `y ∈ {y₁, y₂}` × `h₀ ∈ {0.1, 0}`, the latter being the cone.
pub fn table1_cases() -> Vec<(String, Vec<f64>, Region)> {
    let mut out = Vec::new();
    for (i, y) in table1_points().iter().enumerate() {
        out.push((format!("y{}_h0.1", i + 1), y.to_vec(), Region::efron(0.1)));
        out.push((format!("y{}_h0.0", i + 1), y.to_vec(), Region::cone()));
    }
    out
}

/// p-values of `methods` for every case.
pub fn table1(cases: &[(String, Vec<f64>, Region)], methods: &[Method], config: &PipelineConfig) -> Result<Vec<PValueReport>> {
    if methods.is_empty() {
        return Err(Error::InvalidInput("empty method list".into()));
    }
    cases.par_iter().map(|(_, y, region)| pvalue_report(region, y, methods, config)).collect()
}

/// Base jet of the ladder: `h(u) = u² + 0.5u³ + 0.5u⁴` before scaling.
pub fn ladder_base() -> SurfaceJet {
    SurfaceJet::one_dim(0.0, 0.0, 1.0, 0.5, 0.5)
}

/// Rungs `ε = 0.05·2^{−k/2}`, `k = 0..4`, in increasing order.
pub fn default_ladder() -> Vec<f64> {
    (0..5).rev().map(|k| 0.05 * 2f64.powf(-0.5 * k as f64)).collect()
}

/// Tangent offset of the deliberately perturbed double bootstrap center.
pub const PERTURBED_THETA: f64 = 0.5;

/// Quantity measured on each rung of the ε-ladder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LadderProbe {
    /// `|P_μ(p(Y) < α) − α|` at `μ = (0, −h₀)` with the given DBP center.
    RejectionBias { method: Method, center: CenterRule },
    /// `|BP_quad − bp_expansion|` at `y = (0, λ₀ − h₀)`.
    BpOracle { lambda0: f64 },
    /// `|DBP_quad − dbp_expansion|` at `y = (0, λ₀ − h₀)`.
    DbpOracle { lambda0: f64 },
}

impl LadderProbe {
    pub fn label(&self) -> String {
        match self {
            LadderProbe::RejectionBias { method, center } => match center {
                CenterRule::Projection => format!("{method} bias"),
                _ => format!("{method} bias (perturbed center)"),
            },
            LadderProbe::BpOracle { .. } => "bp vs oracle".into(),
            LadderProbe::DbpOracle { .. } => "dbp vs oracle".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeReport {
    pub probe: String,
    pub eps: Vec<f64>,
    pub values: Vec<f64>,
    /// Least-squares slope of `log value` on `log ε`.
    pub slope: f64,
    pub intercept: f64,
}

/// Least-squares line through `(log x, log y)`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InsufficientScales { needed: 2, got: x.len().min(y.len()) });
    }
    if x.iter().chain(y).any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidInput("log-log fit needs positive finite values".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// Evaluates `probe` on the jets `base.ladder(ε)` and fits the decay slope.
pub fn epsilon_ladder(base: &SurfaceJet, eps: &[f64], probe: &LadderProbe, alpha: f64, config: &LabConfig) -> Result<SlopeReport> {
    if base.q() != 1 {
        return Err(Error::UnsupportedDim { op: "epsilon ladder", q: base.q() });
    }
    let values = eps
        .par_iter()
        .map(|&e| ladder_value(&base.ladder(e), probe, alpha, config))
        .collect::<Result<Vec<f64>>>()?;
    let (slope, intercept) = loglog_slope(eps, &values)?;
    Ok(SlopeReport {
        probe: probe.label(),
        eps: eps.to_vec(),
        values,
        slope,
        intercept,
    })
}

fn ladder_value(jet: &SurfaceJet, probe: &LadderProbe, alpha: f64, config: &LabConfig) -> Result<f64> {
    let region = Region::jet(jet.clone());
    match probe {
        LadderProbe::RejectionBias { method, center } => {
            let mut cfg = config.clone();
            cfg.pipeline.center = center.clone();
            let row = rejection_probability(*method, &region, &[0.0, -jet.h0], alpha, Scheme::Quad, &cfg)?;
            Ok((row.prob - alpha).abs())
        }
        LadderProbe::BpOracle { lambda0 } => {
            let y = [0.0, lambda0 - jet.h0];
            let exact = crate::bp_engine::bp_quad(&region, &y, 1.0)?.p;
            let g = region.geometric_summary(&y)?;
            Ok((exact - crate::oracle::bp_expansion(&g, 1.0)?).abs())
        }
        LadderProbe::DbpOracle { lambda0 } => {
            let y = [0.0, lambda0 - jet.h0];
            let exact = crate::bp_engine::dbp_quad(&region, &y, 1.0, 1.0, &CenterRule::Projection)?.value;
            let g = region.geometric_summary(&y)?;
            Ok((exact - crate::oracle::dbp_expansion(&g, 1.0, 1.0, 0.0)?).abs())
        }
    }
}


#[cfg(test)]
mod properties {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn signed_lr_is_exact_on_a_half_plane(u in -3.0..3.0f64, alpha in 0.01..0.3f64) {
            let flat = Region::jet(SurfaceJet::zero(1));
            let row = rejection_probability(Method::SignedLr, &flat, &[u, 0.0], alpha, Scheme::Quad, &LabConfig::default()).unwrap();
            prop_assert!((row.prob - alpha).abs() < 1e-9);
        }

        #[test]
        fn rejection_is_a_probability(u in 0.0..3.0f64, alpha in 0.01..0.3f64) {
            let cone = Region::cone();
            for method in [Method::Bp, Method::Lr, Method::Mcb] {
                let row = rejection_probability(method, &cone, &[u, -cone.h(&[u])], alpha, Scheme::Quad, &LabConfig::default()).unwrap();
                prop_assert!((0.0..=1.0).contains(&row.prob));
            }
        }

        #[test]
        fn power_laws_have_their_exponent(c in 0.1..10.0f64, k in 0.5..4.0f64) {
            let x = default_ladder();
            let y: Vec<f64> = x.iter().map(|e| c * e.powf(k)).collect();
            let (slope, _) = loglog_slope(&x, &y).unwrap();
            prop_assert!((slope - k).abs() < 1e-9);
        }
    }
}
