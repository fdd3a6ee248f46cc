//! Approximately unbiased p-values for the problem of regions.
//!
//! The crate tests whether the mean of `Y ~ N(μ, I)` lies in a region
//! `H = {(u, v) : v ≤ -h(u)}` using bootstrap probabilities evaluated by
//! Monte Carlo or by deterministic quadrature, multiscale extrapolation
//! (AU), double bootstrap calibration (DBP) and their combination (DAU).
//! Closed-form asymptotic expansions are provided as an oracle, together
//! with a laboratory computing exact rejection probabilities.

pub mod bp_engine;
pub mod classic_tests;
pub mod error;
pub mod methods;
pub mod multiscale;
pub mod normal;
pub mod oracle;
pub mod quadrature;
pub mod regions;
pub mod rejection_lab;
pub mod spline;
pub mod surface_jets;

pub use bp_engine::{Backend, BootstrapEstimate, CenterRule, EngineSettings};
pub use error::{Error, Result};
pub use regions::{ProjectionResult, Region, RegionKind};
pub use surface_jets::{GeometricSummary, LocalFrame, NormalShift, SurfaceJet};
pub use methods::{Method, MethodValue, PValueReport, PipelineConfig};
pub use rejection_lab::{LabConfig, RejectionRow, Scheme, SlopeReport};
