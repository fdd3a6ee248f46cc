//! The ten p-value methods behind one interface.
//!
//! Every method is reported both as a p-value and on the normal quantile
//! scale `z = Φ̄⁻¹(p)`, which is the scale used by the rejection laboratory
//! when locating critical boundaries.

use serde::{Deserialize, Serialize};

use crate::bp_engine::{bp, dbp, Backend, CenterRule, EngineSettings};
use crate::classic_tests::{confset_from_distance, lr_from_distance, mcb_statistic, mcb_tail};
use crate::error::{Error, Result};
use crate::multiscale::{au_k, bp_curve, dau, dbp_curve, default_grid, ExtrapolationMode, ScalingCurve, TAYLOR_GRID};
use crate::normal::{isf, sf};
use crate::regions::{Region, RegionKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Lr,
    SignedLr,
    Confset,
    Mcb,
    Bp,
    Au2,
    Au3,
    Dbp,
    Dau,
    PvOracle,
}

impl Method {
    pub const ALL: [Method; 10] = [
        Method::Lr,
        Method::SignedLr,
        Method::Confset,
        Method::Mcb,
        Method::Bp,
        Method::Au2,
        Method::Au3,
        Method::Dbp,
        Method::Dau,
        Method::PvOracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Lr => "lr",
            Method::SignedLr => "signed_lr",
            Method::Confset => "confset",
            Method::Mcb => "mcb",
            Method::Bp => "bp",
            Method::Au2 => "au2",
            Method::Au3 => "au3",
            Method::Dbp => "dbp",
            Method::Dau => "dau",
            Method::PvOracle => "pv_oracle",
        }
    }

    /// Methods driven by the bootstrap engine.
    pub fn is_bootstrap(self) -> bool {
        matches!(self, Method::Bp | Method::Au2 | Method::Au3 | Method::Dbp | Method::Dau)
    }

    /// Parses a comma-separated list; `all` expands to every method.
    pub fn parse_list(text: &str) -> Result<Vec<Method>> {
        let mut out = Vec::new();
        for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            if item == "all" {
                out.extend(Method::ALL);
            } else {
                out.push(item.parse()?);
            }
        }
        if out.is_empty() {
            return Err(Error::InvalidInput("empty method list".into()));
        }
        out.sort();
        out.dedup();
        Ok(out)
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown method {s:?}")))
    }
}

/// How bootstrap methods are computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub engine: EngineSettings,
    pub mode: ExtrapolationMode,
    /// Scales of the fitted curves (ignored in Taylor mode).
    pub scales: Vec<f64>,
    pub center: CenterRule,
}

impl PipelineConfig {
    /// Quadrature engine with Taylor extrapolation at `σ² = 1`.
    pub fn quad() -> Self {
        PipelineConfig {
            engine: EngineSettings::quad(),
            mode: ExtrapolationMode::Taylor,
            scales: TAYLOR_GRID.to_vec(),
            center: CenterRule::Projection,
        }
    }

    /// Monte Carlo engine with fitted curves on the default grid.
    pub fn mc(replicates: u64, seed: u64) -> Self {
        PipelineConfig {
            engine: EngineSettings::mc(replicates, seed),
            mode: ExtrapolationMode::Fit,
            scales: default_grid(),
            center: CenterRule::Projection,
        }
    }

    fn curve_scales(&self) -> Vec<f64> {
        match self.mode {
            ExtrapolationMode::Taylor => TAYLOR_GRID.to_vec(),
            ExtrapolationMode::Fit => self.scales.clone(),
        }
    }
}

/// One method's result at one point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodValue {
    pub method: Method,
    pub pvalue: Option<f64>,
    pub z: Option<f64>,
    pub stderr: Option<f64>,
    /// Reason the method does not apply, when `pvalue` is absent.
    pub note: Option<String>,
}

/// All requested methods at one observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PValueReport {
    pub region: RegionKind,
    pub y: Vec<f64>,
    pub mu_hat: Vec<f64>,
    pub lambda_hat: f64,
    pub values: Vec<MethodValue>,
}

impl PValueReport {
    pub fn get(&self, method: Method) -> Option<f64> {
        self.values.iter().find(|v| v.method == method).and_then(|v| v.pvalue)
    }
}

/// Whether MCB applies: the three-group cone `v ≤ −|u|/√3`.
pub fn mcb_applies(region: &Region) -> bool {
    matches!(region.kind(), RegionKind::Cone { slope, q: 1 } if (slope - 1.0 / 3f64.sqrt()).abs() < 1e-12)
}

/// `z = Φ̄⁻¹(p)` of one method (with its standard error for Monte Carlo).
pub fn method_z(region: &Region, y: &[f64], method: Method, config: &PipelineConfig) -> Result<(f64, f64)> {
    let e = &config.engine;
    match method {
        Method::Lr => Ok((isf(lr_from_distance(region.project(y)?.lambda_hat)), 0.0)),
        Method::SignedLr => Ok((region.project(y)?.lambda_hat, 0.0)),
        Method::Confset => {
            let p = confset_from_distance(region.project(y)?.lambda_hat, region.q() + 1);
            Ok((isf(p), 0.0))
        }
        Method::Mcb => {
            if !mcb_applies(region) {
                return Err(Error::Unsupported("mcb needs the three-group cone".into()));
            }
            Ok((isf(mcb_tail(mcb_statistic(y)?)), 0.0))
        }
        Method::PvOracle => {
            let g = region.geometric_summary(y)?;
            Ok((g.beta0 - g.beta1 - g.beta2 + g.beta3, 0.0))
        }
        Method::Bp => {
            let est = bp(region, y, 1.0, e, 0)?;
            Ok((est.z(), z_se(&est)))
        }
        Method::Dbp => {
            let est = dbp(region, y, 1.0, 1.0, &config.center, e, 0)?;
            Ok((est.z(), z_se(&est)))
        }
        Method::Au2 | Method::Au3 => {
            let curve = bp_curve(region, y, &config.curve_scales(), e)?;
            au_from(&curve, method, config.mode)
        }
        Method::Dau => {
            let curve = dbp_curve(region, y, &config.curve_scales(), &config.center, e)?;
            let x = dau(&curve, config.mode)?;
            Ok((x.z, x.stderr))
        }
    }
}

fn au_from(curve: &ScalingCurve, method: Method, mode: ExtrapolationMode) -> Result<(f64, f64)> {
    let k = if method == Method::Au2 { 2 } else { 3 };
    let x = au_k(curve, k, mode)?;
    Ok((x.z, x.stderr))
}

fn z_se(est: &crate::bp_engine::BootstrapEstimate) -> f64 {
    match est.backend {
        Backend::Quad => 0.0,
        Backend::Mc => {
            let z = est.z();
            est.stderr / crate::normal::pdf(z)
        }
    }
}

/// Delta-method p-value standard error from a `z` standard error.
fn p_se(z: f64, se_z: f64) -> f64 {
    crate::normal::pdf(z) * se_z
}

fn not_applicable(err: &Error) -> bool {
    matches!(err, Error::Unsupported(_) | Error::NonSmoothPoint { .. } | Error::UnsupportedDim { .. })
}

/// Evaluates `methods` at `y`; curves are shared between AU2/AU3.
pub fn pvalue_report(region: &Region, y: &[f64], methods: &[Method], config: &PipelineConfig) -> Result<PValueReport> {
    let proj = region.project(y)?;
    let bp_curve_cache = if methods.iter().any(|m| matches!(m, Method::Au2 | Method::Au3)) {
        Some(bp_curve(region, y, &config.curve_scales(), &config.engine)?)
    } else {
        None
    };
    let mut values = Vec::with_capacity(methods.len());
    for &method in methods {
        let result = match (method, &bp_curve_cache) {
            (Method::Au2 | Method::Au3, Some(curve)) => au_from(curve, method, config.mode),
            _ => method_z(region, y, method, config),
        };
        values.push(match result {
            Ok((z, se)) => MethodValue {
                method,
                pvalue: Some(sf(z)),
                z: Some(z),
                stderr: if config.engine.backend == Backend::Mc && method.is_bootstrap() { Some(p_se(z, se)) } else { None },
                note: None,
            },
            Err(err) if not_applicable(&err) => MethodValue {
                method,
                pvalue: None,
                z: None,
                stderr: None,
                note: Some(err.to_string()),
            },
            Err(err) => return Err(err),
        });
    }
    Ok(PValueReport {
        region: region.kind().clone(),
        y: y.to_vec(),
        mu_hat: proj.mu_hat,
        lambda_hat: proj.lambda_hat,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
            assert_eq!(serde_json::to_string(&m).unwrap(), format!("\"{}\"", m.name()));
        }
        assert_eq!(Method::parse_list("all").unwrap().len(), 10);
        assert_eq!(Method::parse_list("dau, bp,bp").unwrap(), vec![Method::Bp, Method::Dau]);
        assert!(Method::parse_list(" , ").is_err());
        assert!(Method::parse_list("au4").is_err());
    }

    #[test]
    fn cone_vertex_signed_lr_is_half() {
        let r = pvalue_report(&Region::cone(), &[0.0, 0.0], &[Method::SignedLr], &PipelineConfig::quad()).unwrap();
        assert!((r.get(Method::SignedLr).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn inapplicable_methods_are_noted() {
        let r = pvalue_report(&Region::efron(0.1), &[0.71, 1.63], &[Method::Mcb], &PipelineConfig::quad()).unwrap();
        assert!(r.values[0].pvalue.is_none());
        assert!(r.values[0].note.is_some());
        let r = pvalue_report(&Region::cone(), &[0.71, 1.63], &[Method::PvOracle, Method::Mcb], &PipelineConfig::quad()).unwrap();
        assert!(r.get(Method::PvOracle).is_none());
        assert!((r.get(Method::Mcb).unwrap() - 0.069).abs() < 5e-4);
    }

    #[test]
    fn quad_report_for_the_cone() {
        let y = [f64::sqrt(0.5), f64::sqrt(8.0 / 3.0)];
        let r = pvalue_report(&Region::cone(), &y, &Method::ALL, &PipelineConfig::quad()).unwrap();
        let expect = [(Method::Bp, 0.020), (Method::Au2, 0.046), (Method::Au3, 0.062), (Method::Dbp, 0.061), (Method::Dau, 0.069)];
        for (m, p) in expect {
            let got = r.get(m).unwrap();
            assert!((got - p).abs() < 2e-3, "{m}: {got}");
        }
    }
}
