//! Bootstrap probability `BP_{σ²}(H|y)` and double bootstrap probability
//! `DBP_{τ²,σ²}(H|y)` by seeded Monte Carlo or deterministic quadrature.
//!
//! Monte Carlo replicates are drawn in chunks of [`CHUNK`] from ChaCha8
//! streams keyed by the master seed; the stream id is
//! `(scale_index << 32) | chunk_index`, so results do not depend on the
//! number of worker threads.
//!
//! The quadrature backend (`q = 1`) integrates the exact conditional
//! probability of each vertical slice against a composite Gauss–Legendre
//! rule in the tangent direction. For DBP the event `BP(Y⁺) ≤ BP(y)` is
//! the half-line above the contour `v*(u)` of the bootstrap probability, so
//! each outer node contributes an exact normal tail once `v*(u)` is solved.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normal::{cdf, isf_pair, pdf, sf};
use crate::quadrature::{Feature, NormalRule, QuadConfig};
use crate::regions::{Region, Slice};

/// Replicates drawn from one generator stream.
pub const CHUNK: u64 = 1 << 16;

const CENTER_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Mc,
    Quad,
}

impl std::str::FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mc" => Ok(Backend::Mc),
            "quad" => Ok(Backend::Quad),
            other => Err(Error::InvalidInput(format!("unknown backend {other:?}"))),
        }
    }
}

impl std::fmt::Display for Backend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Backend::Mc => "mc",
            Backend::Quad => "quad",
        })
    }
}

/// One bootstrap probability with its Monte Carlo metadata.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapEstimate {
    pub value: f64,
    /// `1 − value`, kept separately for precision in the upper tail.
    pub complement: f64,
    pub stderr: f64,
    pub replicates: u64,
    pub backend: Backend,
    pub seed: Option<u64>,
    pub sigma2: f64,
}

impl BootstrapEstimate {
    fn quad(value: f64, complement: f64, sigma2: f64) -> Self {
        BootstrapEstimate {
            value,
            complement,
            stderr: 0.0,
            replicates: 0,
            backend: Backend::Quad,
            seed: None,
            sigma2,
        }
    }

    fn mc(count: u64, replicates: u64, seed: u64, sigma2: f64) -> Self {
        let value = count as f64 / replicates as f64;
        BootstrapEstimate {
            value,
            complement: (replicates - count) as f64 / replicates as f64,
            stderr: (value * (1.0 - value) / replicates as f64).sqrt(),
            replicates,
            backend: Backend::Mc,
            seed: Some(seed),
            sigma2,
        }
    }

    /// `Φ̄⁻¹(value)`, with Monte Carlo counts clamped to `[0.5, B − 0.5]`.
    pub fn z(&self) -> f64 {
        match self.backend {
            Backend::Quad => isf_pair(self.value, self.complement),
            Backend::Mc => {
                let b = self.replicates as f64;
                let count = (self.value * b).round().clamp(0.5, b - 0.5);
                isf_pair(count / b, (b - count) / b)
            }
        }
    }
}

/// Backend choice and Monte Carlo budget of an engine call.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngineSettings {
    pub backend: Backend,
    pub replicates: u64,
    /// Inner replicates per outer draw of the double bootstrap (`q ≥ 2`).
    pub inner_replicates: u64,
    pub seed: u64,
}

impl EngineSettings {
    pub fn quad() -> Self {
        EngineSettings {
            backend: Backend::Quad,
            replicates: 0,
            inner_replicates: 0,
            seed: 0,
        }
    }

    pub fn mc(replicates: u64, seed: u64) -> Self {
        EngineSettings {
            backend: Backend::Mc,
            replicates,
            inner_replicates: 2_000,
            seed,
        }
    }
}

/// Center of the outer resampling in the double bootstrap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CenterRule {
    /// The restricted MLE `μ̂(H|y)`.
    Projection,
    /// A caller-supplied boundary point.
    Point(Vec<f64>),
    /// The boundary point at tangent parameter `û + θ`.
    Offset(Vec<f64>),
}

fn check_scale(sigma2: f64) -> Result<f64> {
    if sigma2.is_finite() && sigma2 > 0.0 {
        Ok(sigma2.sqrt())
    } else {
        Err(Error::InvalidScale(sigma2))
    }
}

fn require_q1(region: &Region, op: &'static str) -> Result<()> {
    if region.q() == 1 {
        Ok(())
    } else {
        Err(Error::UnsupportedDim { op, q: region.q() })
    }
}

/// Conditional slices of the region along the tangent nodes of a
/// bootstrap distribution centered at a fixed `u`.
#[derive(Debug, Clone)]
pub struct SliceProfile {
    weights: Vec<f64>,
    slices: Vec<Slice>,
    sigma: f64,
}

/// Probability mass inside the region, its complement and `d/dv`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SliceMass {
    pub p: f64,
    pub q: f64,
    pub dp_dv: f64,
}

impl SliceMass {
    /// `Φ̄⁻¹(p)`.
    pub fn z(&self) -> f64 {
        isf_pair(self.p, self.q)
    }
}

impl SliceProfile {
    pub fn new(region: &Region, u: f64, sigma: f64, config: &QuadConfig) -> Self {
        let features: Vec<Feature> = region
            .features()
            .iter()
            .map(|f| {
                let at = (f.at - u) / sigma;
                if f.scale == 0.0 {
                    Feature::kink(at)
                } else {
                    Feature::new(at, f.scale / sigma)
                }
            })
            .collect();
        let rule = NormalRule::new(config, &features);
        let slices = rule.nodes.iter().map(|&x| region.slice(u + sigma * x)).collect();
        SliceProfile {
            weights: rule.weights,
            slices,
            sigma,
        }
    }

    /// Bootstrap mass of the region for the center `(u, v)`.
    pub fn mass(&self, v: f64) -> SliceMass {
        let s = self.sigma;
        let (mut p, mut q, mut dens) = (0.0, 0.0, 0.0);
        for (w, slice) in self.weights.iter().zip(&self.slices) {
            match *slice {
                Slice::Below(top) => {
                    let a = (top - v) / s;
                    if a < 0.0 {
                        let c = cdf(a);
                        p += w * c;
                        q += w * (1.0 - c);
                    } else {
                        let c = sf(a);
                        p += w * (1.0 - c);
                        q += w * c;
                    }
                    dens += w * pdf(a);
                }
                Slice::Between(lo, hi) => {
                    let (a, b) = ((lo - v) / s, (hi - v) / s);
                    p += w * (cdf(b) - cdf(a));
                    q += w * (cdf(a) + sf(b));
                    dens += w * (pdf(b) - pdf(a));
                }
                Slice::Empty => q += w,
            }
        }
        SliceMass { p, q, dp_dv: -dens / s }
    }

    /// Median of the slice tops, a starting point for contour searches.
    fn typical_top(&self) -> f64 {
        let mut best = (0.0, 0.0);
        for (w, slice) in self.weights.iter().zip(&self.slices) {
            if let Slice::Below(top) | Slice::Between(_, top) = *slice {
                if *w > best.0 {
                    best = (*w, top);
                }
            }
        }
        best.1
    }

    /// Solves `Φ̄⁻¹(mass(v)) = target` for `v`, starting from `guess`.
    pub fn solve_contour(&self, target: f64, guess: Option<f64>) -> Result<f64> {
        let s = self.sigma;
        let f = |v: f64| {
            let m = self.mass(v);
            (m.z() - target, m)
        };
        let start = self.typical_top() + s * target;
        let span = s * (target.abs() + 40.0);
        let mut v = match guess {
            Some(g) if g.is_finite() => g.clamp(start - span, start + span),
            _ => start,
        };
        let (mut fv, mut m) = f(v);
        // bracket [lo, hi] with f(lo) < 0 < f(hi); z increases with v
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for iter in 0..200 {
            if fv == 0.0 {
                return Ok(v);
            }
            if fv < 0.0 {
                lo = v;
            } else {
                hi = v;
            }
            let reach = s * (1.0 + fv.abs().min(40.0)) * 2f64.powi(iter.min(30));
            let dz = -m.dp_dv / pdf(m.z());
            let mut next = if dz.is_finite() && dz > 0.0 { v - fv / dz } else { f64::NAN };
            if !(next > lo && next < hi && (next - v).abs() <= reach) {
                next = match (lo.is_finite(), hi.is_finite()) {
                    (true, true) => 0.5 * (lo + hi),
                    (true, false) => lo + reach,
                    (false, true) => hi - reach,
                    (false, false) => unreachable!(),
                };
            }
            let step = (next - v).abs();
            v = next;
            (fv, m) = f(v);
            if step <= 1e-12 * (1.0 + v.abs()) || (hi - lo) <= 1e-13 * (1.0 + v.abs()) {
                return Ok(v);
            }
        }
        Err(Error::NonConvergence { op: "dbp contour", tol: 1e-12, iterations: 200 })
    }
}

/// `BP_{σ²}(H|y)` by quadrature together with `∂BP/∂y_v` (`q = 1`).
pub fn bp_quad(region: &Region, y: &[f64], sigma2: f64) -> Result<SliceMass> {
    require_q1(region, "bp quad")?;
    let sigma = check_scale(sigma2)?;
    check_point(region, y)?;
    Ok(SliceProfile::new(region, y[0], sigma, &QuadConfig::default()).mass(y[1]))
}

fn check_point(region: &Region, y: &[f64]) -> Result<()> {
    if y.len() != region.q() + 1 || y.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "point must be {} finite coordinates",
            region.q() + 1
        )));
    }
    Ok(())
}

/// Deterministic generator for one chunk of one scale.
pub fn stream_rng(seed: u64, scale_index: u32, chunk: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((scale_index as u64) << 32) | chunk as u64);
    rng
}

/// Number of draws `Y* ~ N(center, σ²I)` falling in the region.
fn count_inside(region: &Region, center: &[f64], sigma: f64, replicates: u64, seed: u64, scale_index: u32) -> u64 {
    let chunks = replicates.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream_rng(seed, scale_index, c as u32);
            let n = CHUNK.min(replicates - c * CHUNK);
            let mut point = vec![0.0; center.len()];
            let mut hits = 0u64;
            for _ in 0..n {
                for (p, m) in point.iter_mut().zip(center) {
                    let z: f64 = rng.sample(StandardNormal);
                    *p = m + sigma * z;
                }
                if region.contains(&point) {
                    hits += 1;
                }
            }
            hits
        })
        .sum()
}

/// `BP_{σ²}(H|y)` by Monte Carlo; `scale_index` selects the stream family.
pub fn bp_mc(region: &Region, y: &[f64], sigma2: f64, replicates: u64, seed: u64, scale_index: u32) -> Result<BootstrapEstimate> {
    let sigma = check_scale(sigma2)?;
    check_point(region, y)?;
    if replicates == 0 {
        return Err(Error::InvalidInput("replicate count must be positive".into()));
    }
    let count = count_inside(region, y, sigma, replicates, seed, scale_index);
    Ok(BootstrapEstimate::mc(count, replicates, seed, sigma2))
}

/// `BP_{σ²}(H|y)` with the backend chosen in `settings`.
pub fn bp(region: &Region, y: &[f64], sigma2: f64, settings: &EngineSettings, scale_index: u32) -> Result<BootstrapEstimate> {
    match settings.backend {
        Backend::Quad => {
            let m = bp_quad(region, y, sigma2)?;
            Ok(BootstrapEstimate::quad(m.p, m.q, sigma2))
        }
        Backend::Mc => bp_mc(region, y, sigma2, settings.replicates, settings.seed, scale_index),
    }
}

/// Resolves the outer resampling center of the double bootstrap.
pub fn dbp_center(region: &Region, y: &[f64], rule: &CenterRule) -> Result<Vec<f64>> {
    let q = region.q();
    match rule {
        CenterRule::Projection => Ok(region.project(y)?.mu_hat),
        CenterRule::Point(mu) => {
            if mu.len() != q + 1 {
                return Err(Error::InvalidInput(format!("center must have {} coordinates", q + 1)));
            }
            let off = (mu[q] + region.h(&mu[..q])).abs();
            if !(off <= CENTER_TOL) {
                return Err(Error::CenterOffBoundary(off));
            }
            Ok(mu.clone())
        }
        CenterRule::Offset(theta) => {
            if theta.len() != q {
                return Err(Error::InvalidInput(format!("offset must have {q} coordinates")));
            }
            let mut u: Vec<f64> = region.project(y)?.u_hat.iter().zip(theta).map(|(a, b)| a + b).collect();
            let v = -region.h(&u);
            u.push(v);
            Ok(u)
        }
    }
}

/// Inner and outer rule resolution of the double bootstrap quadrature.
pub fn dbp_config() -> QuadConfig {
    QuadConfig {
        order: 8,
        ..QuadConfig::default()
    }
}

/// `DBP_{τ²,σ²}(H|y)` by quadrature over the exact contour (`q = 1`).
pub fn dbp_quad(region: &Region, y: &[f64], tau2: f64, sigma2: f64, center: &CenterRule) -> Result<BootstrapEstimate> {
    dbp_quad_with(region, y, tau2, sigma2, center, &dbp_config(), &dbp_config())
}

/// [`dbp_quad`] with explicit inner and outer integration rules.
pub fn dbp_quad_with(
    region: &Region,
    y: &[f64],
    tau2: f64,
    sigma2: f64,
    center: &CenterRule,
    inner: &QuadConfig,
    outer: &QuadConfig,
) -> Result<BootstrapEstimate> {
    require_q1(region, "dbp quad")?;
    if region.is_ball() {
        return Err(Error::Unsupported("double bootstrap quadrature for a ball".into()));
    }
    let tau = check_scale(tau2)?;
    let sigma = check_scale(sigma2)?;
    check_point(region, y)?;
    let c = dbp_center(region, y, center)?;
    let config = inner;
    let target = SliceProfile::new(region, y[0], sigma, config).mass(y[1]).z();

    let features: Vec<Feature> = region
        .features()
        .iter()
        .map(|f| Feature::new((f.at - c[0]) / tau, (0.5 * sigma / tau).max(f.scale / tau)))
        .collect();
    let outer = NormalRule::new(outer, &features);
    let (mut p, mut q) = (0.0, 0.0);
    let mut prev: Option<(f64, f64)> = None;
    let mut prev2: Option<(f64, f64)> = None;
    for (&t, &w) in outer.nodes.iter().zip(&outer.weights) {
        let u = c[0] + tau * t;
        let profile = SliceProfile::new(region, u, sigma, config);
        let guess = match (prev2, prev) {
            (Some((u0, v0)), Some((u1, v1))) => Some(v1 + (v1 - v0) / (u1 - u0) * (u - u1)),
            (_, Some((_, v1))) => Some(v1),
            _ => None,
        };
        let v_star = profile.solve_contour(target, guess)?;
        let a = (v_star - c[1]) / tau;
        p += w * sf(a);
        q += w * cdf(a);
        prev2 = prev;
        prev = Some((u, v_star));
    }
    Ok(BootstrapEstimate::quad(p, q, sigma2))
}

/// `DBP_{τ²,σ²}(H|y)` by Monte Carlo over the outer draws. For `q = 1` each
/// inner probability is exact (quadrature); otherwise it is estimated from
/// `inner_replicates` draws on an independent stream per outer draw.
pub fn dbp_mc(
    region: &Region,
    y: &[f64],
    tau2: f64,
    sigma2: f64,
    center: &CenterRule,
    settings: &EngineSettings,
    scale_index: u32,
) -> Result<BootstrapEstimate> {
    let tau = check_scale(tau2)?;
    let sigma = check_scale(sigma2)?;
    check_point(region, y)?;
    let outer = settings.replicates;
    if outer == 0 {
        return Err(Error::InvalidInput("replicate count must be positive".into()));
    }
    let c = dbp_center(region, y, center)?;
    let dim = c.len();
    let seed = settings.seed;
    let hits: u64 = if region.q() == 1 && !region.is_ball() {
        let b0 = bp_quad(region, y, sigma2)?.p;
        let chunks = outer.div_ceil(CHUNK);
        (0..chunks)
            .into_par_iter()
            .map(|k| -> Result<u64> {
                let mut rng = stream_rng(seed, scale_index, k as u32);
                let n = CHUNK.min(outer - k * CHUNK);
                let mut hits = 0;
                for _ in 0..n {
                    let zu: f64 = rng.sample(StandardNormal);
                    let zv: f64 = rng.sample(StandardNormal);
                    let yplus = [c[0] + tau * zu, c[1] + tau * zv];
                    if bp_quad(region, &yplus, sigma2)?.p <= b0 {
                        hits += 1;
                    }
                }
                Ok(hits)
            })
            .sum::<Result<u64>>()?
    } else {
        let inner = settings.inner_replicates.max(1);
        let inner_stream = |j: u64| stream_rng(seed, scale_index, 0x8000_0000 | j as u32);
        let inner_count = |center: &[f64], rng: &mut ChaCha8Rng| {
            let mut point = vec![0.0; dim];
            let mut count = 0u64;
            for _ in 0..inner {
                for (p, m) in point.iter_mut().zip(center) {
                    let z: f64 = rng.sample(StandardNormal);
                    *p = m + sigma * z;
                }
                if region.contains(&point) {
                    count += 1;
                }
            }
            count
        };
        let b0 = inner_count(y, &mut stream_rng(seed, scale_index, 0x7FFF_FFFF));
        let chunks = outer.div_ceil(CHUNK);
        (0..chunks)
            .into_par_iter()
            .map(|k| {
                let mut rng = stream_rng(seed, scale_index, k as u32);
                let n = CHUNK.min(outer - k * CHUNK);
                let mut hits = 0;
                let mut yplus = vec![0.0; dim];
                for i in 0..n {
                    for (p, m) in yplus.iter_mut().zip(&c) {
                        let z: f64 = rng.sample(StandardNormal);
                        *p = m + tau * z;
                    }
                    if inner_count(&yplus, &mut inner_stream(k * CHUNK + i)) <= b0 {
                        hits += 1;
                    }
                }
                hits
            })
            .sum()
    };
    Ok(BootstrapEstimate::mc(hits, outer, seed, sigma2))
}

/// `DBP_{τ²,σ²}(H|y)` with the backend chosen in `settings`.
pub fn dbp(
    region: &Region,
    y: &[f64],
    tau2: f64,
    sigma2: f64,
    center: &CenterRule,
    settings: &EngineSettings,
    scale_index: u32,
) -> Result<BootstrapEstimate> {
    match settings.backend {
        Backend::Quad => dbp_quad(region, y, tau2, sigma2, center),
        Backend::Mc => dbp_mc(region, y, tau2, sigma2, center, settings, scale_index),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface_jets::SurfaceJet;
    use approx::assert_relative_eq;

    fn flat() -> Region {
        Region::jet(SurfaceJet::zero(1))
    }

    #[test]
    fn half_plane_bp_is_a_normal_tail() {
        let m = bp_quad(&flat(), &[0.0, 1.645], 1.0).unwrap();
        assert_relative_eq!(m.q, cdf(1.645), epsilon = 1e-14);
        assert_relative_eq!(m.p, sf(1.645), epsilon = 1e-14);
        assert_relative_eq!(m.p, 0.05, epsilon = 1e-4);
        let m = bp_quad(&flat(), &[0.3, 1.2], 0.49).unwrap();
        assert_relative_eq!(m.p, sf(1.2 / 0.7), epsilon = 1e-14);
    }

    #[test]
    fn table_one_bp_values() {
        let y = [f64::sqrt(0.5), f64::sqrt(8.0 / 3.0)];
        let cone = bp_quad(&Region::cone(), &y, 1.0).unwrap();
        assert!((cone.p - 0.020).abs() < 5e-4, "{}", cone.p);
        let efron = bp_quad(&Region::efron(0.1), &y, 1.0).unwrap();
        assert!((efron.p - 0.018).abs() < 5e-4, "{}", efron.p);
        let d = dbp_quad(&Region::cone(), &y, 1.0, 1.0, &CenterRule::Projection).unwrap();
        assert!((d.value - 0.061).abs() < 1.5e-3, "{}", d.value);
        let d = dbp_quad(&Region::efron(0.1), &y, 1.0, 1.0, &CenterRule::Projection).unwrap();
        assert!((d.value - 0.048).abs() < 1.5e-3, "{}", d.value);
    }

    #[test]
    fn quad_rejects_bad_input() {
        assert!(matches!(bp_quad(&Region::cone(), &[0.0, 1.0], 0.0), Err(Error::InvalidScale(_))));
        let cone2 = Region::new(crate::regions::RegionKind::Cone { slope: 0.5, q: 2 }).unwrap();
        assert!(matches!(bp_quad(&cone2, &[0.0, 0.0, 1.0], 1.0), Err(Error::UnsupportedDim { .. })));
    }

    #[test]
    fn flat_dbp_is_exact() {
        for (tau2, sigma2) in [(1.0, 1.0), (0.5, 1.3), (1.7, 0.6)] {
            let d = dbp_quad(&flat(), &[0.0, 1.3], tau2, sigma2, &CenterRule::Projection).unwrap();
            assert_relative_eq!(d.value, sf(1.3 / f64::sqrt(tau2)), epsilon = 1e-11);
        }
    }

    #[test]
    fn center_must_lie_on_boundary() {
        let r = dbp_quad(&Region::cone(), &[0.71, 1.63], 1.0, 1.0, &CenterRule::Point(vec![0.0, 0.1]));
        assert!(matches!(r, Err(Error::CenterOffBoundary(_))));
    }

    #[test]
    fn mc_is_reproducible_and_close_to_quad() {
        let cone = Region::cone();
        let a = bp_mc(&cone, &[0.71, 1.63], 1.0, 200_000, 7, 0).unwrap();
        let b = bp_mc(&cone, &[0.71, 1.63], 1.0, 200_000, 7, 0).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        let exact = bp_quad(&cone, &[0.71, 1.63], 1.0).unwrap().p;
        assert!((a.value - exact).abs() < 4.0 * a.stderr);
        let other = bp_mc(&cone, &[0.71, 1.63], 1.0, 200_000, 8, 0).unwrap();
        assert_ne!(other.value, a.value);
    }

    #[test]
    fn clamped_z_is_finite() {
        let est = bp_mc(&flat(), &[0.0, 30.0], 1.0, 1000, 1, 0).unwrap();
        assert_eq!(est.value, 0.0);
        assert!(est.z().is_finite());
    }
}

#[cfg(test)]
mod properties {
    use super::*;
    use crate::surface_jets::SurfaceJet;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn quad_probabilities_are_complementary(u in -3.0..3.0f64, v in -3.0..3.0f64, s2 in 0.2..2.0f64) {
            for region in [Region::cone(), Region::efron(0.1)] {
                let m = bp_quad(&region, &[u, v], s2).unwrap();
                prop_assert!((0.0..=1.0).contains(&m.p));
                prop_assert!((m.p + m.q - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn half_plane_bp_decreases_with_distance(u in -2.0..2.0f64, v in -6.0..6.0f64, dv in 0.01..1.0f64) {
            let flat = Region::jet(SurfaceJet::zero(1));
            let near = bp_quad(&flat, &[u, v], 1.0).unwrap().p;
            let far = bp_quad(&flat, &[u, v + dv], 1.0).unwrap().p;
            prop_assert!(far < near);
        }

        #[test]
        fn scaling_law(h0 in 0.0..0.5f64, u in -2.0..2.0f64, v in -1.0..3.0f64, s2 in 0.25..2.0f64) {
            let region = Region::efron(h0);
            let sigma = s2.sqrt();
            let direct = bp_quad(&region, &[u, v], s2).unwrap().p;
            let rescaled = bp_quad(&region.scaled(sigma).unwrap(), &[u / sigma, v / sigma], 1.0).unwrap().p;
            prop_assert!((direct - rescaled).abs() < 1e-9, "{} vs {}", direct, rescaled);
        }

        #[test]
        fn mc_is_bit_reproducible(seed in 0u64..1000, u in -1.0..1.0f64) {
            let a = bp_mc(&Region::cone(), &[u, 1.0], 1.0, 5_000, seed, 2).unwrap();
            let b = bp_mc(&Region::cone(), &[u, 1.0], 1.0, 5_000, seed, 2).unwrap();
            prop_assert_eq!(a.value.to_bits(), b.value.to_bits());
        }
    }
}
