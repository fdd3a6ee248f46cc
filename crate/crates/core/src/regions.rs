//! Null regions `H = {(u, v) : v ≤ -h(u)}`, membership, restricted MLE
//! projection and local jets of the boundary.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spline::CubicSpline;
use crate::surface_jets::{summary_at_point, GeometricSummary, SurfaceJet};

fn one() -> usize {
    1
}

fn default_cone_slope() -> f64 {
    1.0 / 3f64.sqrt()
}

/// Serializable description of a region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum RegionKind {
    /// `h(u) = (h0² + |u|²/3)^{1/2}`.
    Efron {
        h0: f64,
        #[serde(default = "one")]
        q: usize,
    },
    /// `h(u) = slope·|u|`, by default `slope = 1/√3`.
    Cone {
        #[serde(default = "default_cone_slope")]
        slope: f64,
        #[serde(default = "one")]
        q: usize,
    },
    /// The ball `‖μ‖ ≤ radius` centered at the origin.
    Sphere {
        radius: f64,
        #[serde(default = "one")]
        q: usize,
    },
    /// Natural cubic spline through `[u, h]` pairs (`q = 1`).
    Custom { table: Vec<[f64; 2]> },
    /// Quartic polynomial boundary given by its coefficients.
    Jet { jet: SurfaceJet },
}

/// Restricted MLE on the boundary and the signed distance to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionResult {
    pub mu_hat: Vec<f64>,
    pub lambda_hat: f64,
    pub u_hat: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
}

/// Set of `v` values inside the region on a vertical line `u = const`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Slice {
    /// `v ≤ top`.
    Below(f64),
    /// `lo ≤ v ≤ hi`.
    Between(f64, f64),
    Empty,
}

/// Reduced smoothness of `h` along `u` (for `q = 1` integration rules).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryFeature {
    pub at: f64,
    /// Zero for a kink, otherwise the distance of the nearest complex
    /// singularity or the width of a square-root endpoint layer.
    pub scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Radial {
    amp: f64,
    c0: f64,
    c1: f64,
}

impl Radial {
    /// φ(ρ) = amp·(c0 + c1 ρ)^{1/2} and its first four ρ-derivatives.
    fn derivatives(&self, rho: f64) -> [f64; 5] {
        let base = self.c0 + self.c1 * rho;
        let mut out = [0.0; 5];
        let mut coef = self.amp;
        let mut power = 0.5;
        for slot in out.iter_mut() {
            *slot = coef * base.powf(power);
            coef *= power * self.c1;
            power -= 1.0;
        }
        out
    }

    fn value(&self, rho: f64) -> f64 {
        self.amp * (self.c0 + self.c1 * rho).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Shape {
    Radial(Radial),
    Ball(f64),
    Spline(CubicSpline),
    Poly(SurfaceJet),
}

/// A testable null region with an immutable boundary description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RegionKind", into = "RegionKind")]
pub struct Region {
    kind: RegionKind,
    q: usize,
    shape: Shape,
}

impl From<Region> for RegionKind {
    fn from(r: Region) -> Self {
        r.kind
    }
}

impl TryFrom<RegionKind> for Region {
    type Error = Error;

    fn try_from(kind: RegionKind) -> Result<Self> {
        Region::new(kind)
    }
}

impl Region {
    pub fn new(kind: RegionKind) -> Result<Self> {
        let check_q = |q: usize| {
            if q == 0 {
                Err(Error::InvalidInput("tangent dimension must be at least 1".into()))
            } else {
                Ok(q)
            }
        };
        let (q, shape) = match &kind {
            RegionKind::Efron { h0, q } => {
                if !(h0.is_finite() && *h0 > 0.0) {
                    return Err(Error::InvalidInput(format!("efron h0 must be positive, got {h0}")));
                }
                (check_q(*q)?, Shape::Radial(Radial { amp: 1.0, c0: h0 * h0, c1: 1.0 / 3.0 }))
            }
            RegionKind::Cone { slope, q } => {
                if !slope.is_finite() {
                    return Err(Error::InvalidInput("cone slope must be finite".into()));
                }
                (check_q(*q)?, Shape::Radial(Radial { amp: *slope, c0: 0.0, c1: 1.0 }))
            }
            RegionKind::Sphere { radius, q } => {
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(Error::InvalidInput(format!("sphere radius must be positive, got {radius}")));
                }
                (check_q(*q)?, Shape::Ball(*radius))
            }
            RegionKind::Custom { table } => (1, Shape::Spline(CubicSpline::natural(table)?)),
            RegionKind::Jet { jet } => (jet.q(), Shape::Poly(jet.clone())),
        };
        Ok(Region { kind, q, shape })
    }

    pub fn efron(h0: f64) -> Self {
        Region::new(RegionKind::Efron { h0, q: 1 }).expect("valid efron region")
    }

    pub fn cone() -> Self {
        Region::new(RegionKind::Cone { slope: default_cone_slope(), q: 1 }).expect("valid cone")
    }

    pub fn sphere(radius: f64, q: usize) -> Self {
        Region::new(RegionKind::Sphere { radius, q }).expect("valid sphere")
    }

    pub fn custom(table: Vec<[f64; 2]>) -> Result<Self> {
        Region::new(RegionKind::Custom { table })
    }

    pub fn jet(jet: SurfaceJet) -> Self {
        Region::new(RegionKind::Jet { jet }).expect("valid jet region")
    }

    /// Parses a JSON descriptor or one of the names `cone`, `efron`.
    pub fn parse(text: &str) -> Result<Self> {
        let trimmed = text.trim();
        match trimmed {
            "cone" => return Ok(Region::cone()),
            "efron" => return Ok(Region::efron(0.1)),
            _ => {}
        }
        serde_json::from_str(trimmed).map_err(|e| Error::InvalidInput(format!("region descriptor: {e}")))
    }

    pub fn kind(&self) -> &RegionKind {
        &self.kind
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn is_ball(&self) -> bool {
        matches!(self.shape, Shape::Ball(_))
    }

    fn check_point(&self, y: &[f64]) -> Result<()> {
        if y.len() != self.q + 1 {
            return Err(Error::InvalidInput(format!(
                "point has dimension {}, expected {}",
                y.len(),
                self.q + 1
            )));
        }
        if y.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("point must be finite".into()));
        }
        Ok(())
    }

    /// Boundary function `h(u)`. For a ball this is the upper hemisphere
    /// and is `NaN` outside its shadow.
    pub fn h(&self, u: &[f64]) -> f64 {
        let rho: f64 = u.iter().map(|x| x * x).sum();
        match &self.shape {
            Shape::Radial(r) => r.value(rho),
            Shape::Ball(radius) => -(radius * radius - rho).sqrt(),
            Shape::Spline(s) => s.eval(u[0]),
            Shape::Poly(j) => j.eval(u),
        }
    }

    /// `h` and its first two derivatives along a line, for `q = 1`.
    fn h_derivs_1d(&self, t: f64) -> [f64; 3] {
        match &self.shape {
            Shape::Radial(r) => {
                let d = r.derivatives(t * t);
                [d[0], 2.0 * t * d[1], 2.0 * d[1] + 4.0 * t * t * d[2]]
            }
            Shape::Ball(radius) => {
                let s = (radius * radius - t * t).sqrt();
                [-s, t / s, radius * radius / (s * s * s)]
            }
            Shape::Spline(s) => {
                let d = s.derivatives(t);
                [d[0], d[1], d[2]]
            }
            Shape::Poly(j) => {
                let c = j.recenter(&[t]);
                [c.h0, c.h1(0), 2.0 * c.h2(0, 0)]
            }
        }
    }

    /// Membership `y ∈ H`.
    pub fn contains(&self, y: &[f64]) -> bool {
        let q = self.q;
        match &self.shape {
            Shape::Ball(radius) => y.iter().map(|x| x * x).sum::<f64>() <= radius * radius,
            _ => y[q] <= -self.h(&y[..q]),
        }
    }

    /// The slice of the region above a tangent point (`q = 1`).
    pub fn slice(&self, u: f64) -> Slice {
        match &self.shape {
            Shape::Ball(radius) => {
                let rem = radius * radius - u * u;
                if rem <= 0.0 {
                    Slice::Empty
                } else {
                    let s = rem.sqrt();
                    Slice::Between(-s, s)
                }
            }
            _ => Slice::Below(-self.h(&[u])),
        }
    }

    /// Points of reduced smoothness of `h` along `u` (`q = 1`).
    pub fn features(&self) -> Vec<BoundaryFeature> {
        match &self.shape {
            Shape::Radial(r) => {
                if r.c0 == 0.0 {
                    vec![BoundaryFeature { at: 0.0, scale: 0.0 }]
                } else {
                    vec![BoundaryFeature { at: 0.0, scale: (r.c0 / r.c1).sqrt() }]
                }
            }
            Shape::Ball(radius) => vec![
                BoundaryFeature { at: -radius, scale: 1e-12 * radius },
                BoundaryFeature { at: *radius, scale: 1e-12 * radius },
            ],
            Shape::Spline(s) => s.knots().iter().map(|&at| BoundaryFeature { at, scale: 0.0 }).collect(),
            Shape::Poly(_) => Vec::new(),
        }
    }

    /// Region `σ⁻¹H`, whose boundary is `u ↦ σ⁻¹h(σu)`.
    pub fn scaled(&self, sigma: f64) -> Result<Region> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidScale(sigma * sigma));
        }
        let kind = match &self.kind {
            RegionKind::Efron { h0, q } => RegionKind::Efron { h0: h0 / sigma, q: *q },
            RegionKind::Cone { .. } => self.kind.clone(),
            RegionKind::Sphere { radius, q } => RegionKind::Sphere { radius: radius / sigma, q: *q },
            RegionKind::Custom { table } => RegionKind::Custom {
                table: table.iter().map(|p| [p[0] / sigma, p[1] / sigma]).collect(),
            },
            RegionKind::Jet { jet } => {
                let q = jet.q();
                let scale = |v: &[f64], power: i32| v.iter().map(|x| x * sigma.powi(power)).collect::<Vec<_>>();
                RegionKind::Jet {
                    jet: SurfaceJet::new(
                        q,
                        jet.h0 / sigma,
                        jet.h1_slice().to_vec(),
                        scale(jet.h2_slice(), 1),
                        scale(jet.h3_slice(), 2),
                        scale(jet.h4_slice(), 3),
                    )?,
                }
            }
        };
        Region::new(kind)
    }

    /// Taylor coefficients of `h` around the tangent point `u`, keeping
    /// `h0 = h(u)` and `h1 = ∇h(u)`.
    pub fn jet_at(&self, u: &[f64]) -> Result<SurfaceJet> {
        let q = self.q;
        if u.len() != q {
            return Err(Error::InvalidInput(format!("tangent point must have length {q}")));
        }
        match &self.shape {
            Shape::Radial(r) => {
                let rho: f64 = u.iter().map(|x| x * x).sum();
                if r.c0 == 0.0 && rho.sqrt() < 1e-6 {
                    return Err(Error::NonSmoothPoint { u: u.to_vec() });
                }
                Ok(radial_jet(&r.derivatives(rho), u))
            }
            Shape::Ball(radius) => {
                let rho: f64 = u.iter().map(|x| x * x).sum();
                if rho >= radius * radius {
                    return Err(Error::NonSmoothPoint { u: u.to_vec() });
                }
                let r = Radial { amp: -1.0, c0: radius * radius, c1: -1.0 };
                Ok(radial_jet(&r.derivatives(rho), u))
            }
            Shape::Spline(s) => {
                let d = s.derivatives(u[0]);
                Ok(SurfaceJet::one_dim(d[0], d[1], d[2] / 2.0, s.third_derivative_symmetric(u[0]) / 6.0, 0.0))
            }
            Shape::Poly(j) => Ok(j.recenter(u)),
        }
    }

    /// Nearest boundary point to `y` and the signed distance (positive
    /// outside the region).
    pub fn project(&self, y: &[f64]) -> Result<ProjectionResult> {
        self.check_point(y)?;
        let q = self.q;
        let (u, v) = (&y[..q], y[q]);
        match &self.shape {
            Shape::Ball(radius) => {
                let norm = y.iter().map(|x| x * x).sum::<f64>().sqrt();
                let mu_hat: Vec<f64> = if norm > 0.0 {
                    y.iter().map(|x| radius * x / norm).collect()
                } else {
                    let mut top = vec![0.0; q + 1];
                    top[q] = *radius;
                    top
                };
                Ok(ProjectionResult {
                    u_hat: mu_hat[..q].to_vec(),
                    mu_hat,
                    lambda_hat: norm - radius,
                    converged: true,
                    iterations: 0,
                })
            }
            Shape::Radial(_) if q > 1 => {
                let r = u.iter().map(|x| x * x).sum::<f64>().sqrt();
                let dir: Vec<f64> = if r > 0.0 {
                    u.iter().map(|x| x / r).collect()
                } else {
                    (0..q).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect()
                };
                let (t, iterations) = self.project_line(r, v)?;
                let u_hat: Vec<f64> = dir.iter().map(|d| d * t).collect();
                Ok(self.finish(y, u_hat, iterations))
            }
            Shape::Poly(_) if q > 1 => {
                let (u_hat, iterations) = self.project_newton(y)?;
                Ok(self.finish(y, u_hat, iterations))
            }
            _ => {
                let (t, iterations) = self.project_line(u[0], v)?;
                Ok(self.finish(y, vec![t], iterations))
            }
        }
    }

    fn finish(&self, y: &[f64], u_hat: Vec<f64>, iterations: usize) -> ProjectionResult {
        let q = self.q;
        let mut mu_hat = u_hat.clone();
        mu_hat.push(-self.h(&u_hat));
        let dist = y.iter().zip(&mu_hat).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let inside = y[q] <= -self.h(&y[..q]);
        ProjectionResult {
            mu_hat,
            lambda_hat: if inside { -dist } else { dist },
            u_hat,
            converged: true,
            iterations,
        }
    }

    /// One-dimensional projection of `(yu, yv)` onto the profile curve.
    fn project_line(&self, yu: f64, yv: f64) -> Result<(f64, usize)> {
        let dist2 = |t: f64| {
            let h = self.h(&[t]);
            (t - yu) * (t - yu) + (h + yv) * (h + yv)
        };
        let reach = (yv + self.h(&[yu])).abs();
        if reach == 0.0 {
            return Ok((yu, 0));
        }
        let (lo, hi) = (yu - reach, yu + reach);
        const SCAN: usize = 800;
        let step = (hi - lo) / SCAN as f64;
        let grid: Vec<f64> = (0..=SCAN).map(|i| lo + step * i as f64).collect();
        let values: Vec<f64> = grid.iter().map(|&t| dist2(t)).collect();
        let kinks: Vec<f64> = self
            .features()
            .iter()
            .filter(|f| f.scale == 0.0 && f.at >= lo && f.at <= hi)
            .map(|f| f.at)
            .collect();

        let mut best = (f64::INFINITY, yu);
        let mut iterations = 0;
        let consider = |t: f64, best: &mut (f64, f64)| {
            let d = dist2(t);
            if d < best.0 || (d == best.0 && t > best.1) {
                *best = (d, t);
            }
        };
        for i in 0..=SCAN {
            let left = if i > 0 { values[i - 1] } else { f64::INFINITY };
            let right = if i < SCAN { values[i + 1] } else { f64::INFINITY };
            if values[i] > left || values[i] > right {
                continue;
            }
            let a = (grid[i] - step).max(lo);
            let b = (grid[i] + step).min(hi);
            let (t, its) = self.refine_1d(yu, yv, a, b)?;
            iterations += its;
            consider(t, &mut best);
        }
        for &k in &kinks {
            consider(k, &mut best);
        }
        // mirror images tie: prefer the foot with u ≥ 0
        if best.1 < 0.0 {
            let mirror = -best.1;
            if mirror <= hi && (dist2(mirror) - best.0).abs() <= 1e-14 * (1.0 + best.0) {
                best = (dist2(mirror), mirror);
            }
        }
        Ok((best.1, iterations))
    }

    /// Golden-section search on `[a, b]` followed by a safeguarded Newton
    /// polish of the stationarity condition.
    fn refine_1d(&self, yu: f64, yv: f64, mut a: f64, mut b: f64) -> Result<(f64, usize)> {
        const INV_PHI: f64 = 0.618_033_988_749_894_8;
        const BUDGET: usize = 400;
        let dist2 = |t: f64| {
            let h = self.h(&[t]);
            (t - yu) * (t - yu) + (h + yv) * (h + yv)
        };
        let mut c = b - INV_PHI * (b - a);
        let mut d = a + INV_PHI * (b - a);
        let (mut fc, mut fd) = (dist2(c), dist2(d));
        let mut iterations = 0;
        while (b - a) > 1e-9 * (1.0 + a.abs().max(b.abs())) {
            iterations += 1;
            if iterations > BUDGET {
                return Err(Error::NonConvergence { op: "project", tol: 1e-10, iterations });
            }
            if fc <= fd {
                b = d;
                d = c;
                fd = fc;
                c = b - INV_PHI * (b - a);
                fc = dist2(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + INV_PHI * (b - a);
                fd = dist2(d);
            }
        }
        let (lo, hi) = (a - 1e-6, b + 1e-6);
        let mut t = 0.5 * (a + b);
        for _ in 0..50 {
            iterations += 1;
            let [h, h1, h2] = self.h_derivs_1d(t);
            let r = h + yv;
            let grad = (t - yu) + r * h1;
            let curv = 1.0 + h1 * h1 + r * h2;
            if !(curv > 0.0) {
                break;
            }
            let next = t - grad / curv;
            if !(next > lo && next < hi) || dist2(next) > dist2(t) {
                break;
            }
            let moved = (next - t).abs();
            t = next;
            if moved < 1e-14 * (1.0 + t.abs()) {
                break;
            }
        }
        if !t.is_finite() {
            return Err(Error::NonConvergence { op: "project", tol: 1e-10, iterations });
        }
        Ok((t, iterations))
    }

    fn project_newton(&self, y: &[f64]) -> Result<(Vec<f64>, usize)> {
        let Shape::Poly(jet) = &self.shape else {
            unreachable!("newton projection is only used for polynomial boundaries");
        };
        let q = self.q;
        let (yu, yv) = (&y[..q], y[q]);
        let objective = |t: &[f64]| {
            let h = jet.eval(t);
            t.iter().zip(yu).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() + (h + yv) * (h + yv)
        };
        let mut starts = vec![yu.to_vec(), vec![0.0; q]];
        for i in 0..q {
            for s in [-1.0, 1.0] {
                let mut p = yu.to_vec();
                p[i] += s;
                starts.push(p);
            }
        }
        let mut best: Option<(f64, Vec<f64>)> = None;
        let mut total = 0;
        for start in starts {
            let mut t = start;
            let mut converged = false;
            for _ in 0..200 {
                total += 1;
                let c = jet.recenter(&t);
                let r = c.h0 + yv;
                let grad: Vec<f64> = (0..q).map(|i| 2.0 * (t[i] - yu[i]) + 2.0 * r * c.h1(i)).collect();
                let mut hess = vec![0.0; q * q];
                for i in 0..q {
                    for j in 0..q {
                        let delta = if i == j { 2.0 } else { 0.0 };
                        hess[i * q + j] = delta + 2.0 * c.h1(i) * c.h1(j) + 4.0 * r * c.h2(i, j);
                    }
                }
                let step = solve_spd_or_gradient(&hess, &grad, q);
                let f0 = objective(&t);
                let mut alpha = 1.0;
                let mut next: Vec<f64> = t.iter().zip(&step).map(|(a, s)| a - s).collect();
                while objective(&next) > f0 && alpha > 1e-12 {
                    alpha *= 0.5;
                    next = t.iter().zip(&step).map(|(a, s)| a - alpha * s).collect();
                }
                let moved = t.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                t = next;
                if moved < 1e-13 * (1.0 + t.iter().map(|x| x.abs()).fold(0.0, f64::max)) {
                    converged = true;
                    break;
                }
            }
            if !converged {
                continue;
            }
            let f = objective(&t);
            if best.as_ref().is_none_or(|(bf, _)| f < *bf) {
                best = Some((f, t));
            }
        }
        best.map(|(_, t)| (t, total))
            .ok_or(Error::NonConvergence { op: "project", tol: 1e-10, iterations: total })
    }

    /// γ's and β's at the projection of `y`.
    pub fn geometric_summary(&self, y: &[f64]) -> Result<GeometricSummary> {
        let proj = self.project(y)?;
        let jet = match &self.shape {
            Shape::Ball(_) => self.jet_at(&vec![0.0; self.q])?,
            _ => self.jet_at(&proj.u_hat)?,
        };
        Ok(summary_at_point(&jet, proj.lambda_hat))
    }
}

fn solve_spd_or_gradient(hess: &[f64], grad: &[f64], q: usize) -> Vec<f64> {
    let m = nalgebra::DMatrix::from_row_slice(q, q, hess);
    let g = nalgebra::DVector::from_column_slice(grad);
    match m.cholesky() {
        Some(ch) => ch.solve(&g).iter().copied().collect(),
        None => grad.iter().map(|x| 0.25 * x).collect(),
    }
}

/// Jet of `u ↦ φ(|u|²)` at `u` from the ρ-derivatives of φ.
fn radial_jet(d: &[f64; 5], u: &[f64]) -> SurfaceJet {
    let q = u.len();
    let delta = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };
    let mut jet = SurfaceJet::zero(q);
    jet.h0 = d[0];
    for i in 0..q {
        jet.set_h1(i, 2.0 * u[i] * d[1]);
        for j in i..q {
            let v = 4.0 * u[i] * u[j] * d[2] + 2.0 * delta(i, j) * d[1];
            jet.set_h2(i, j, v / 2.0);
            for k in j..q {
                let v = 8.0 * u[i] * u[j] * u[k] * d[3]
                    + 4.0 * (delta(i, j) * u[k] + delta(i, k) * u[j] + delta(j, k) * u[i]) * d[2];
                jet.set_h3([i, j, k], v / 6.0);
                for l in k..q {
                    let pairs = delta(i, j) * u[k] * u[l]
                        + delta(i, k) * u[j] * u[l]
                        + delta(i, l) * u[j] * u[k]
                        + delta(j, k) * u[i] * u[l]
                        + delta(j, l) * u[i] * u[k]
                        + delta(k, l) * u[i] * u[j];
                    let v = 16.0 * u[i] * u[j] * u[k] * u[l] * d[4]
                        + 8.0 * pairs * d[3]
                        + 4.0 * (delta(i, j) * delta(k, l) + delta(i, k) * delta(j, l) + delta(i, l) * delta(j, k)) * d[2];
                    jet.set_h4([i, j, k, l], v / 24.0);
                }
            }
        }
    }
    jet
}
