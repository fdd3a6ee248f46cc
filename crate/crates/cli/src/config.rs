//! Effective run configuration: JSON config file merged under flags.

use std::path::{Path, PathBuf};

use regionboot::methods::{Method, PipelineConfig};
use regionboot::multiscale::{default_grid, grid, ExtrapolationMode, TAYLOR_GRID};
use regionboot::{Backend, CenterRule, EngineSettings, Region, RegionKind};
use serde::{Deserialize, Serialize};

use crate::args::{BackendArg, Knobs, ModeArg};
use crate::error::CliError;

/// Contents of a `--config` file. Every key is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub region: Option<serde_json::Value>,
    pub y: Option<Vec<f64>>,
    pub methods: Option<MethodsValue>,
    pub scales: Option<Vec<f64>>,
    pub reps: Option<u64>,
    pub seed: Option<u64>,
    pub backend: Option<Backend>,
    pub alpha: Option<f64>,
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum MethodsValue {
    Text(String),
    List(Vec<String>),
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))
    }
}

/// Every knob after merging, defaults included.
#[derive(Debug, Clone, Serialize)]
pub struct Settings {
    pub region: Option<RegionKind>,
    pub y: Option<Vec<f64>>,
    pub methods: Option<Vec<Method>>,
    pub backend: Backend,
    pub mode: ExtrapolationMode,
    pub scales: Vec<f64>,
    pub reps: u64,
    pub inner_reps: u64,
    pub seed: u64,
    pub alpha: f64,
    pub out_dir: PathBuf,
    pub threads: usize,
}

pub const DEFAULT_REPS: u64 = 10_000;
pub const DEFAULT_INNER_REPS: u64 = 2_000;
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_ALPHA: f64 = 0.05;

impl Settings {
    pub fn resolve(knobs: &Knobs, threads: usize) -> Result<Self, CliError> {
        let file = match &knobs.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };
        let region = match (&knobs.region, &file.region) {
            (Some(text), _) => Some(parse_region(text)?),
            (None, Some(serde_json::Value::String(name))) => Some(parse_region(name)?),
            (None, Some(value)) => Some(parse_region(&value.to_string())?),
            (None, None) => None,
        };
        let y = match (&knobs.y, file.y) {
            (Some(text), _) => Some(parse_list(text, "--y")?),
            (None, y) => y,
        };
        let methods = match (&knobs.methods, file.methods) {
            (Some(text), _) => Some(parse_methods(text)?),
            (None, Some(MethodsValue::Text(text))) => Some(parse_methods(&text)?),
            (None, Some(MethodsValue::List(items))) => Some(parse_methods(&items.join(","))?),
            (None, None) => None,
        };
        let backend = match knobs.backend {
            Some(BackendArg::Mc) => Backend::Mc,
            Some(BackendArg::Quad) => Backend::Quad,
            None => file.backend.unwrap_or(Backend::Quad),
        };
        let scales = match (&knobs.scales, file.scales) {
            (Some(text), _) => Some(parse_scales(text)?),
            (None, s) => s,
        };
        let mode = match knobs.mode {
            Some(ModeArg::Fit) => ExtrapolationMode::Fit,
            Some(ModeArg::Taylor) => ExtrapolationMode::Taylor,
            None if scales.is_some() || backend == Backend::Mc => ExtrapolationMode::Fit,
            None => ExtrapolationMode::Taylor,
        };
        let scales = match (mode, scales) {
            (ExtrapolationMode::Taylor, _) => TAYLOR_GRID.to_vec(),
            (ExtrapolationMode::Fit, Some(s)) => s,
            (ExtrapolationMode::Fit, None) => default_grid(),
        };
        let reps = knobs.reps.or(file.reps).unwrap_or(DEFAULT_REPS);
        if reps == 0 {
            return Err(CliError::usage("--reps must be positive"));
        }
        let alpha = knobs.alpha.or(file.alpha).unwrap_or(DEFAULT_ALPHA);
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(CliError::usage(format!("--alpha must lie in (0, 1), got {alpha}")));
        }
        Ok(Settings {
            region,
            y,
            methods,
            backend,
            mode,
            scales,
            reps,
            inner_reps: DEFAULT_INNER_REPS,
            seed: knobs.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            alpha,
            out_dir: knobs.out_dir.clone().or(file.out_dir).unwrap_or_else(|| PathBuf::from(".")),
            threads,
        })
    }

    pub fn pipeline(&self) -> PipelineConfig {
        let engine = match self.backend {
            Backend::Quad => EngineSettings::quad(),
            Backend::Mc => EngineSettings {
                inner_replicates: self.inner_reps,
                ..EngineSettings::mc(self.reps, self.seed)
            },
        };
        PipelineConfig {
            engine,
            mode: self.mode,
            scales: self.scales.clone(),
            center: CenterRule::Projection,
        }
    }

    pub fn require_region(&self) -> Result<Region, CliError> {
        let kind = self.region.clone().ok_or_else(|| CliError::usage("missing --region"))?;
        Region::new(kind).map_err(|e| CliError::usage(e.to_string()))
    }

    pub fn require_y(&self, region: &Region) -> Result<Vec<f64>, CliError> {
        let y = self.y.clone().ok_or_else(|| CliError::usage("missing --y"))?;
        if y.len() != region.q() + 1 {
            return Err(CliError::usage(format!("--y needs {} coordinates, got {}", region.q() + 1, y.len())));
        }
        Ok(y)
    }
}

pub fn parse_region(text: &str) -> Result<RegionKind, CliError> {
    Region::parse(text).map(|r| r.kind().clone()).map_err(|e| CliError::usage(e.to_string()))
}

pub fn parse_methods(text: &str) -> Result<Vec<Method>, CliError> {
    Method::parse_list(text).map_err(|e| CliError::usage(format!("--methods: {e}")))
}

pub fn parse_list(text: &str, flag: &str) -> Result<Vec<f64>, CliError> {
    let values: Result<Vec<f64>, _> = text.split(',').map(|s| s.trim().parse::<f64>()).collect();
    match values {
        Ok(v) if !v.is_empty() && v.iter().all(|x| x.is_finite()) => Ok(v),
        _ => Err(CliError::usage(format!("{flag}: expected comma-separated numbers, got {text:?}"))),
    }
}

/// `a:b:n` (equispaced) or a comma-separated list.
pub fn parse_scales(text: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        [a, b, n] => {
            let bad = || CliError::usage(format!("--scales: expected a:b:n, got {text:?}"));
            let a: f64 = a.trim().parse().map_err(|_| bad())?;
            let b: f64 = b.trim().parse().map_err(|_| bad())?;
            let n: usize = n.trim().parse().map_err(|_| bad())?;
            if n < 2 || !(a > 0.0 && b > a) {
                return Err(bad());
            }
            Ok(grid(a, b, n))
        }
        [_] => parse_list(text, "--scales"),
        _ => Err(CliError::usage(format!("--scales: expected a:b:n, got {text:?}"))),
    }
}

/// Worker count from `REGIONBOOT_THREADS`; `0` or unset means automatic.
pub fn threads_from_env() -> Result<usize, CliError> {
    match std::env::var("REGIONBOOT_THREADS") {
        Err(_) => Ok(0),
        Ok(text) => text
            .trim()
            .parse()
            .map_err(|_| CliError::usage(format!("REGIONBOOT_THREADS must be a non-negative integer, got {text:?}"))),
    }
}
