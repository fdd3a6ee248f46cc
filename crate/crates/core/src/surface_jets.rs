//! Coefficient calculus for smooth boundary surfaces `v = -h(u)`.
//!
//! A [`SurfaceJet`] stores the Taylor coefficients of `h` at the origin,
//!
//! ```text
//! h(u) = h0 + h_i u_i + h_ij u_i u_j + h_ijk u_i u_j u_k + h_ijkl u_i u_j u_k u_l,
//! ```
//!
//! with the summation convention and fully symmetric tensors. The free
//! functions of this module implement the truncated coefficient algebra of
//! local re-expansion, normal shifts and bootstrap contour surfaces, as well
//! as the curvature traces γ₁..γ₄ and the derived β₀..β₃.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-12;

/// Taylor coefficients of a boundary function up to fourth order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "JetRepr", into = "JetRepr")]
pub struct SurfaceJet {
    q: usize,
    pub h0: f64,
    h1: Vec<f64>,
    h2: Vec<f64>,
    h3: Vec<f64>,
    h4: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct JetRepr {
    q: usize,
    h0: f64,
    h1: Vec<f64>,
    h2: Vec<Vec<f64>>,
    h3: Vec<Vec<Vec<f64>>>,
    h4: Vec<Vec<Vec<Vec<f64>>>>,
}

impl From<SurfaceJet> for JetRepr {
    fn from(j: SurfaceJet) -> Self {
        let q = j.q;
        JetRepr {
            q,
            h0: j.h0,
            h1: j.h1.clone(),
            h2: (0..q).map(|a| (0..q).map(|b| j.h2(a, b)).collect()).collect(),
            h3: (0..q)
                .map(|a| (0..q).map(|b| (0..q).map(|c| j.h3(a, b, c)).collect()).collect())
                .collect(),
            h4: (0..q)
                .map(|a| {
                    (0..q)
                        .map(|b| (0..q).map(|c| (0..q).map(|d| j.h4(a, b, c, d)).collect()).collect())
                        .collect()
                })
                .collect(),
        }
    }
}

impl TryFrom<JetRepr> for SurfaceJet {
    type Error = Error;

    fn try_from(r: JetRepr) -> Result<Self> {
        let q = r.q;
        let bad = |what: &str| Error::InvalidInput(format!("jet field {what} has the wrong shape for q = {q}"));
        if r.h1.len() != q {
            return Err(bad("h1"));
        }
        let mut h2 = Vec::with_capacity(q * q);
        if r.h2.len() != q {
            return Err(bad("h2"));
        }
        for row in &r.h2 {
            if row.len() != q {
                return Err(bad("h2"));
            }
            h2.extend_from_slice(row);
        }
        let mut h3 = Vec::with_capacity(q * q * q);
        if r.h3.len() != q {
            return Err(bad("h3"));
        }
        for m in &r.h3 {
            if m.len() != q {
                return Err(bad("h3"));
            }
            for row in m {
                if row.len() != q {
                    return Err(bad("h3"));
                }
                h3.extend_from_slice(row);
            }
        }
        let mut h4 = Vec::with_capacity(q * q * q * q);
        if r.h4.len() != q {
            return Err(bad("h4"));
        }
        for t in &r.h4 {
            if t.len() != q {
                return Err(bad("h4"));
            }
            for m in t {
                if m.len() != q {
                    return Err(bad("h4"));
                }
                for row in m {
                    if row.len() != q {
                        return Err(bad("h4"));
                    }
                    h4.extend_from_slice(row);
                }
            }
        }
        SurfaceJet::new(q, r.h0, r.h1, h2, h3, h4)
    }
}

impl SurfaceJet {
    /// The flat surface `h ≡ 0` in dimension `q`.
    pub fn zero(q: usize) -> Self {
        assert!(q >= 1, "tangent dimension must be at least 1");
        SurfaceJet {
            q,
            h0: 0.0,
            h1: vec![0.0; q],
            h2: vec![0.0; q * q],
            h3: vec![0.0; q * q * q],
            h4: vec![0.0; q * q * q * q],
        }
    }

    /// Builds a jet from flattened row-major tensors and symmetrizes it.
    pub fn new(q: usize, h0: f64, h1: Vec<f64>, h2: Vec<f64>, h3: Vec<f64>, h4: Vec<f64>) -> Result<Self> {
        if q == 0 {
            return Err(Error::InvalidInput("tangent dimension must be at least 1".into()));
        }
        if h1.len() != q || h2.len() != q * q || h3.len() != q.pow(3) || h4.len() != q.pow(4) {
            return Err(Error::InvalidInput(format!("jet tensors have the wrong size for q = {q}")));
        }
        let all_finite = std::iter::once(&h0).chain(&h1).chain(&h2).chain(&h3).chain(&h4).all(|x| x.is_finite());
        if !all_finite {
            return Err(Error::InvalidInput("jet coefficients must be finite".into()));
        }
        let mut jet = SurfaceJet { q, h0, h1, h2, h3, h4 };
        jet.symmetrize();
        Ok(jet)
    }

    /// One-dimensional jet `h(u) = h0 + h1 u + h2 u² + h3 u³ + h4 u⁴`.
    pub fn one_dim(h0: f64, h1: f64, h2: f64, h3: f64, h4: f64) -> Self {
        SurfaceJet {
            q: 1,
            h0,
            h1: vec![h1],
            h2: vec![h2],
            h3: vec![h3],
            h4: vec![h4],
        }
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn h1(&self, i: usize) -> f64 {
        self.h1[i]
    }

    pub fn h2(&self, i: usize, j: usize) -> f64 {
        self.h2[i * self.q + j]
    }

    pub fn h3(&self, i: usize, j: usize, k: usize) -> f64 {
        self.h3[(i * self.q + j) * self.q + k]
    }

    pub fn h4(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.h4[((i * self.q + j) * self.q + k) * self.q + l]
    }

    pub fn h1_slice(&self) -> &[f64] {
        &self.h1
    }

    pub fn h2_slice(&self) -> &[f64] {
        &self.h2
    }

    pub fn h3_slice(&self) -> &[f64] {
        &self.h3
    }

    pub fn h4_slice(&self) -> &[f64] {
        &self.h4
    }

    pub fn set_h1(&mut self, i: usize, value: f64) {
        self.h1[i] = value;
    }

    /// Sets `h_ij` and its mirror image.
    pub fn set_h2(&mut self, i: usize, j: usize, value: f64) {
        let q = self.q;
        self.h2[i * q + j] = value;
        self.h2[j * q + i] = value;
    }

    /// Sets every index permutation of `h_ijk`.
    pub fn set_h3(&mut self, idx: [usize; 3], value: f64) {
        let q = self.q;
        for p in permutations(&idx) {
            self.h3[(p[0] * q + p[1]) * q + p[2]] = value;
        }
    }

    /// Sets every index permutation of `h_ijkl`.
    pub fn set_h4(&mut self, idx: [usize; 4], value: f64) {
        let q = self.q;
        for p in permutations(&idx) {
            self.h4[((p[0] * q + p[1]) * q + p[2]) * q + p[3]] = value;
        }
    }

    /// Replaces each tensor by the average over its index permutations.
    pub fn symmetrize(&mut self) {
        let q = self.q;
        self.h2 = symmetrize_tensor(&self.h2, q, 2);
        self.h3 = symmetrize_tensor(&self.h3, q, 3);
        self.h4 = symmetrize_tensor(&self.h4, q, 4);
    }

    /// Largest deviation between a tensor entry and any permutation of it.
    pub fn max_asymmetry(&self) -> f64 {
        let q = self.q;
        [(&self.h2, 2), (&self.h3, 3), (&self.h4, 4)]
            .iter()
            .map(|(t, r)| {
                let s = symmetrize_tensor(t, q, *r);
                t.iter().zip(&s).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    pub fn is_symmetric(&self) -> bool {
        self.max_asymmetry() <= SYMMETRY_TOL
    }

    /// Evaluates the quartic polynomial `h(u)`.
    pub fn eval(&self, u: &[f64]) -> f64 {
        let q = self.q;
        let mut acc = self.h0;
        for i in 0..q {
            acc += self.h1[i] * u[i];
            for j in 0..q {
                let uij = u[i] * u[j];
                acc += self.h2(i, j) * uij;
                for k in 0..q {
                    let uijk = uij * u[k];
                    acc += self.h3(i, j, k) * uijk;
                    for l in 0..q {
                        acc += self.h4(i, j, k, l) * uijk * u[l];
                    }
                }
            }
        }
        acc
    }

    /// Gradient `∇h(u)` of the polynomial.
    pub fn gradient(&self, u: &[f64]) -> Vec<f64> {
        let q = self.q;
        let mut g = self.h1.clone();
        for (i, gi) in g.iter_mut().enumerate() {
            for j in 0..q {
                *gi += 2.0 * self.h2(i, j) * u[j];
                for k in 0..q {
                    *gi += 3.0 * self.h3(i, j, k) * u[j] * u[k];
                    for l in 0..q {
                        *gi += 4.0 * self.h4(i, j, k, l) * u[j] * u[k] * u[l];
                    }
                }
            }
        }
        g
    }

    /// Taylor re-expansion of the same polynomial around `u`.
    pub fn recenter(&self, u: &[f64]) -> SurfaceJet {
        let q = self.q;
        let mut out = SurfaceJet::zero(q);
        out.h0 = self.eval(u);
        out.h1 = self.gradient(u);
        for i in 0..q {
            for j in 0..q {
                let mut v = self.h2(i, j);
                for k in 0..q {
                    v += 3.0 * self.h3(i, j, k) * u[k];
                    for l in 0..q {
                        v += 6.0 * self.h4(i, j, k, l) * u[k] * u[l];
                    }
                }
                out.h2[i * q + j] = v;
                for k in 0..q {
                    let mut w = self.h3(i, j, k);
                    for l in 0..q {
                        w += 4.0 * self.h4(i, j, k, l) * u[l];
                    }
                    out.h3[(i * q + j) * q + k] = w;
                }
            }
        }
        out.h4 = self.h4.clone();
        out
    }

    /// Applies the orthogonal change of coordinates `u' = R u` (row-major `R`).
    pub fn rotate(&self, r: &[f64]) -> SurfaceJet {
        let q = self.q;
        assert_eq!(r.len(), q * q);
        let rot = |i: usize, a: usize| r[i * q + a];
        let mut out = SurfaceJet::zero(q);
        out.h0 = self.h0;
        for i in 0..q {
            out.h1[i] = (0..q).map(|a| rot(i, a) * self.h1[a]).sum();
        }
        out.h2 = transform_tensor(&self.h2, q, 2, r);
        out.h3 = transform_tensor(&self.h3, q, 3, r);
        out.h4 = transform_tensor(&self.h4, q, 4, r);
        out
    }

    /// Member of the ε-ladder: `h1·ε², h2·ε, h3·ε², h4·ε³`, with `h0` kept.
    pub fn ladder(&self, eps: f64) -> SurfaceJet {
        let mut out = self.clone();
        out.h1.iter_mut().for_each(|x| *x *= eps * eps);
        out.h2.iter_mut().for_each(|x| *x *= eps);
        out.h3.iter_mut().for_each(|x| *x *= eps * eps);
        out.h4.iter_mut().for_each(|x| *x *= eps * eps * eps);
        out
    }

    /// Largest absolute coefficient difference over all orders.
    pub fn max_abs_diff(&self, other: &SurfaceJet) -> f64 {
        self.max_abs_diff_excluding_h1(other).max(max_diff(&self.h1, &other.h1))
    }

    /// As [`max_abs_diff`](Self::max_abs_diff) but ignoring `h1`.
    pub fn max_abs_diff_excluding_h1(&self, other: &SurfaceJet) -> f64 {
        assert_eq!(self.q, other.q);
        (self.h0 - other.h0)
            .abs()
            .max(max_diff(&self.h2, &other.h2))
            .max(max_diff(&self.h3, &other.h3))
            .max(max_diff(&self.h4, &other.h4))
    }
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn permutations(idx: &[usize]) -> Vec<Vec<usize>> {
    if idx.len() <= 1 {
        return vec![idx.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..idx.len() {
        let mut rest = idx.to_vec();
        let first = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, first);
            out.push(p);
        }
    }
    out
}

fn unflatten(mut flat: usize, q: usize, rank: usize) -> Vec<usize> {
    let mut idx = vec![0; rank];
    for slot in idx.iter_mut().rev() {
        *slot = flat % q;
        flat /= q;
    }
    idx
}

fn flatten(idx: &[usize], q: usize) -> usize {
    idx.iter().fold(0, |acc, &i| acc * q + i)
}

fn symmetrize_tensor(t: &[f64], q: usize, rank: usize) -> Vec<f64> {
    let mut out = vec![0.0; t.len()];
    for (flat, slot) in out.iter_mut().enumerate() {
        let idx = unflatten(flat, q, rank);
        let values: Vec<f64> = permutations(&idx).iter().map(|p| t[flatten(p, q)]).collect();
        *slot = if values.iter().all(|&v| v == values[0]) {
            values[0]
        } else {
            values.iter().sum::<f64>() / values.len() as f64
        };
    }
    out
}

fn transform_tensor(t: &[f64], q: usize, rank: usize, r: &[f64]) -> Vec<f64> {
    let mut cur = t.to_vec();
    for axis in 0..rank {
        let mut next = vec![0.0; cur.len()];
        for (flat, slot) in next.iter_mut().enumerate() {
            let mut idx = unflatten(flat, q, rank);
            let i = idx[axis];
            let mut acc = 0.0;
            for a in 0..q {
                idx[axis] = a;
                acc += r[i * q + a] * cur[flatten(&idx, q)];
            }
            *slot = acc;
        }
        cur = next;
    }
    cur
}

/// Curvature traces and the derived β coefficients at a boundary point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometricSummary {
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma3: f64,
    pub gamma4: f64,
    pub beta0: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub beta3: f64,
}

impl GeometricSummary {
    pub fn gammas(&self) -> [f64; 4] {
        [self.gamma1, self.gamma2, self.gamma3, self.gamma4]
    }

    /// The signed distance λ₀ (equal to β₀).
    pub fn lambda0(&self) -> f64 {
        self.beta0
    }

    /// Summary of a flat boundary at signed distance `lambda0`.
    pub fn flat(lambda0: f64) -> Self {
        beta_summary([0.0; 4], lambda0)
    }
}

/// `(γ₁, γ₂, γ₃, γ₄) = (tr D, tr D², tr D³, h_iijj)` with `D = (h_ij)`.
pub fn gamma_summary(jet: &SurfaceJet) -> [f64; 4] {
    let q = jet.q;
    let d = &jet.h2;
    let d2 = matmul(d, d, q);
    let g1 = trace(d, q);
    let g2 = trace(&d2, q);
    let g3 = trace(&matmul(&d2, d, q), q);
    let mut g4 = 0.0;
    for i in 0..q {
        for j in 0..q {
            g4 += jet.h4(i, i, j, j);
        }
    }
    [g1, g2, g3, g4]
}

/// β₀..β₃ from the curvature traces and the signed distance λ₀.
pub fn beta_summary(gamma: [f64; 4], lambda0: f64) -> GeometricSummary {
    let [g1, g2, g3, g4] = gamma;
    GeometricSummary {
        gamma1: g1,
        gamma2: g2,
        gamma3: g3,
        gamma4: g4,
        beta0: lambda0,
        beta1: g1 - lambda0 * g2 + 4.0 / 3.0 * lambda0 * lambda0 * g3,
        beta2: 3.0 * g4 - g1 * g2 - 4.0 / 3.0 * g3,
        beta3: 6.0 * g4 - 2.0 * g1 * g2 - 4.0 * g3,
    }
}

fn matmul(a: &[f64], b: &[f64], q: usize) -> Vec<f64> {
    let mut out = vec![0.0; q * q];
    for i in 0..q {
        for k in 0..q {
            let aik = a[i * q + k];
            for j in 0..q {
                out[i * q + j] += aik * b[k * q + j];
            }
        }
    }
    out
}

fn trace(a: &[f64], q: usize) -> f64 {
    (0..q).map(|i| a[i * q + i]).sum()
}

fn mat_vec(a: &[f64], x: &[f64], q: usize) -> Vec<f64> {
    (0..q).map(|i| (0..q).map(|j| a[i * q + j] * x[j]).sum()).collect()
}

/// Local re-expansion of the region at `(u, -h(u))` in the `(Δu, Δv)` frame.
///
/// Returns `h̃` with `h̃0 = h̃_i = 0` and the truncated coefficients
/// `h̃_ij = h_ij + 3h_ijk u_k + (6h_ijkl − 2h_ij h_mk h_ml) u_k u_l`,
/// `h̃_ijk = h_ijk + 4h_ijkl u_l − (4/3)(h_ij h_km + h_ik h_jm + h_jk h_im) h_ml u_l`,
/// `h̃_ijkl = h_ijkl`.
pub fn local_jet(jet: &SurfaceJet, u: &[f64]) -> SurfaceJet {
    let q = jet.q;
    assert_eq!(u.len(), q);
    let hu = mat_vec(&jet.h2, u, q);
    let hu_sq: f64 = hu.iter().map(|x| x * x).sum();
    let w = mat_vec(&jet.h2, &hu, q);
    let mut out = SurfaceJet::zero(q);
    for i in 0..q {
        for j in 0..q {
            let mut v = jet.h2(i, j) * (1.0 - 2.0 * hu_sq);
            for k in 0..q {
                v += 3.0 * jet.h3(i, j, k) * u[k];
                for l in 0..q {
                    v += 6.0 * jet.h4(i, j, k, l) * u[k] * u[l];
                }
            }
            out.h2[i * q + j] = v;
            for k in 0..q {
                let mut t = jet.h3(i, j, k);
                for l in 0..q {
                    t += 4.0 * jet.h4(i, j, k, l) * u[l];
                }
                t -= 4.0 / 3.0 * (jet.h2(i, j) * w[k] + jet.h2(i, k) * w[j] + jet.h2(j, k) * w[i]);
                out.h3[(i * q + j) * q + k] = t;
            }
        }
    }
    out.h4 = jet.h4.clone();
    out.symmetrize();
    out
}

/// Tangent basis, normal vector and metric at `(u, -h(u))`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalFrame {
    /// Tangent vectors `b_i = (δ_i, −∂_i h)`, each of length `q + 1`.
    pub b: Vec<Vec<f64>>,
    /// Normal vector `f = (∇h, 1)`.
    pub f: Vec<f64>,
    /// Metric `g_ij = b_i · b_j`, row-major.
    pub g: Vec<f64>,
    /// Inverse metric, row-major.
    pub g_inv: Vec<f64>,
}

impl LocalFrame {
    pub fn at(jet: &SurfaceJet, u: &[f64]) -> Self {
        Self::from_gradient(&jet.gradient(u))
    }

    pub fn from_gradient(grad: &[f64]) -> Self {
        let q = grad.len();
        let b = (0..q)
            .map(|i| {
                let mut v = vec![0.0; q + 1];
                v[i] = 1.0;
                v[q] = -grad[i];
                v
            })
            .collect();
        let mut f = grad.to_vec();
        f.push(1.0);
        let norm2: f64 = grad.iter().map(|x| x * x).sum();
        let mut g = vec![0.0; q * q];
        let mut g_inv = vec![0.0; q * q];
        for i in 0..q {
            for j in 0..q {
                let delta = if i == j { 1.0 } else { 0.0 };
                g[i * q + j] = delta + grad[i] * grad[j];
                g_inv[i * q + j] = delta - grad[i] * grad[j] / (1.0 + norm2);
            }
        }
        LocalFrame { b, f, g, g_inv }
    }

    pub fn normal_norm(&self) -> f64 {
        self.f.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// γ₁(h,u)..γ₄(h,u) via `tr(D̃G⁻¹)`, `tr((D̃G⁻¹)²)`, `tr((D̃G⁻¹)³)` and
/// `h̃_ijkl g^ij g^kl`, with `h̃` from [`local_jet`] and the exact metric.
pub fn curvatures_at(jet: &SurfaceJet, u: &[f64]) -> [f64; 4] {
    let q = jet.q;
    let local = local_jet(jet, u);
    let frame = LocalFrame::at(jet, u);
    traces_with_metric(&local, &frame.g_inv, q)
}

fn traces_with_metric(local: &SurfaceJet, g_inv: &[f64], q: usize) -> [f64; 4] {
    let m = matmul(&local.h2, g_inv, q);
    let m2 = matmul(&m, &m, q);
    let g1 = trace(&m, q);
    let g2 = trace(&m2, q);
    let g3 = trace(&matmul(&m2, &m, q), q);
    let mut g4 = 0.0;
    for i in 0..q {
        for j in 0..q {
            for k in 0..q {
                for l in 0..q {
                    g4 += local.h4(i, j, k, l) * g_inv[i * q + j] * g_inv[k * q + l];
                }
            }
        }
    }
    [g1, g2, g3, g4]
}

/// Truncated polynomial forms of γ₁(h,u)..γ₄(h,u).
pub fn curvatures_truncated(jet: &SurfaceJet, u: &[f64]) -> [f64; 4] {
    let q = jet.q;
    let [g1, g2, g3, g4] = gamma_summary(jet);
    let hu = mat_vec(&jet.h2, u, q);
    let hu_sq: f64 = hu.iter().map(|x| x * x).sum();
    let mut lin1 = 0.0;
    let mut quad1 = -2.0 * g1 * hu_sq;
    let mut lin2 = 0.0;
    for i in 0..q {
        for k in 0..q {
            lin1 += 3.0 * jet.h3(i, i, k) * u[k];
            for l in 0..q {
                quad1 += 6.0 * jet.h4(i, i, k, l) * u[k] * u[l];
            }
        }
        for j in 0..q {
            for k in 0..q {
                lin2 += 6.0 * jet.h2(i, j) * jet.h3(i, j, k) * u[k];
            }
        }
    }
    // -4 h_ij h_ik h_jl u_k u_l = -4 (Hu)ᵀ H (Hu)
    let h_hu = mat_vec(&jet.h2, &hu, q);
    quad1 -= 4.0 * hu.iter().zip(&h_hu).map(|(a, b)| a * b).sum::<f64>();
    [g1 + lin1 + quad1, g2 + lin2, g3, g4]
}

/// Normal shift `λ(u) = λ₀ + λ_i u_i + λ_ij u_i u_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalShift {
    pub lambda0: f64,
    pub lambda1: Vec<f64>,
    /// Row-major symmetric `q × q` matrix.
    pub lambda2: Vec<f64>,
}

impl NormalShift {
    pub fn constant(q: usize, lambda0: f64) -> Self {
        NormalShift {
            lambda0,
            lambda1: vec![0.0; q],
            lambda2: vec![0.0; q * q],
        }
    }

    pub fn eval(&self, u: &[f64]) -> f64 {
        let q = u.len();
        let mut acc = self.lambda0;
        for i in 0..q {
            acc += self.lambda1[i] * u[i];
            for j in 0..q {
                acc += self.lambda2[i * q + j] * u[i] * u[j];
            }
        }
        acc
    }
}

/// Surface obtained by moving every point of the boundary a signed
/// distance `λ(u)` along its normal, in truncated coefficient form.
pub fn shift_surface(jet: &SurfaceJet, shift: &NormalShift) -> SurfaceJet {
    let q = jet.q;
    let l0 = shift.lambda0;
    let mut out = SurfaceJet::zero(q);
    out.h0 = jet.h0 - l0;
    let dh: Vec<f64> = (0..q).map(|m| jet.h1[m] - shift.lambda1[m]).collect();
    for i in 0..q {
        out.h1[i] = jet.h1[i] - shift.lambda1[i] - 2.0 * l0 * (0..q).map(|m| jet.h2(m, i) * dh[m]).sum::<f64>();
    }
    let hh = matmul(&jet.h2, &jet.h2, q);
    let hhh = matmul(&hh, &jet.h2, q);
    for i in 0..q {
        for j in 0..q {
            out.h2[i * q + j] = jet.h2(i, j) - shift.lambda2[i * q + j] - 2.0 * l0 * hh[i * q + j]
                + 4.0 * l0 * l0 * hhh[i * q + j];
        }
    }
    out.h3 = third_order_shift(jet, l0);
    out.h4 = jet.h4.clone();
    out.symmetrize();
    out
}

fn third_order_shift(jet: &SurfaceJet, l0: f64) -> Vec<f64> {
    let q = jet.q;
    let mut h3 = vec![0.0; q * q * q];
    for i in 0..q {
        for j in 0..q {
            for k in 0..q {
                let mut corr = 0.0;
                for m in 0..q {
                    corr += jet.h2(m, i) * jet.h3(m, j, k) + jet.h2(m, j) * jet.h3(m, i, k) + jet.h2(m, k) * jet.h3(m, i, j);
                }
                h3[(i * q + j) * q + k] = jet.h3(i, j, k) - 2.0 * l0 * corr;
            }
        }
    }
    h3
}

/// Contour surface of the bootstrap probability at scale `σ²` passing
/// through signed distance `λ₀`, with the normal shift `λ_{σ²}(u)` that
/// generates it. Negative `σ²` gives the formal extrapolation.
pub fn contour_jet(jet: &SurfaceJet, lambda0: f64, sigma2: f64) -> (SurfaceJet, NormalShift) {
    let q = jet.q;
    let (lin, quad) = kappa_coefficients(jet, lambda0);
    let shift = NormalShift {
        lambda0,
        lambda1: lin.iter().map(|c| -sigma2 * c).collect(),
        lambda2: quad.iter().map(|c| -sigma2 * c).collect(),
    };

    let mut out = SurfaceJet::zero(q);
    out.h0 = jet.h0 - lambda0;
    let hh = matmul(&jet.h2, &jet.h2, q);
    let hhh = matmul(&hh, &jet.h2, q);
    let trace_h3: Vec<f64> = (0..q).map(|i| (0..q).map(|l| jet.h3(i, l, l)).sum()).collect();
    for i in 0..q {
        let mut grad_term = 0.0;
        let mut extra = 0.0;
        for m in 0..q {
            grad_term += jet.h1[m] * jet.h2(m, i);
            extra += jet.h2(m, i) * trace_h3[m];
        }
        out.h1[i] = jet.h1[i] - 2.0 * lambda0 * grad_term + sigma2 * (lin[i] - 6.0 * lambda0 * extra);
    }
    for i in 0..q {
        for j in 0..q {
            out.h2[i * q + j] = jet.h2(i, j) - 2.0 * lambda0 * hh[i * q + j]
                + 4.0 * lambda0 * lambda0 * hhh[i * q + j]
                + sigma2 * quad[i * q + j];
        }
    }
    out.h3 = third_order_shift(jet, lambda0);
    out.h4 = jet.h4.clone();
    out.symmetrize();
    (out, shift)
}

/// Linear and quadratic coefficients of κ(u):
/// `(3h_mmi − 6λ₀ h_ml h_mli)` and `(6h_mmij − 2h_mm h_li h_lj − 4h_ml h_mi h_lj)`.
fn kappa_coefficients(jet: &SurfaceJet, lambda0: f64) -> (Vec<f64>, Vec<f64>) {
    let q = jet.q;
    let tr = trace(&jet.h2, q);
    let hh = matmul(&jet.h2, &jet.h2, q);
    let hhh = matmul(&hh, &jet.h2, q);
    let mut lin = vec![0.0; q];
    for (i, slot) in lin.iter_mut().enumerate() {
        let mut a = 0.0;
        let mut b = 0.0;
        for m in 0..q {
            a += jet.h3(m, m, i);
            for l in 0..q {
                b += jet.h2(m, l) * jet.h3(m, l, i);
            }
        }
        *slot = 3.0 * a - 6.0 * lambda0 * b;
    }
    let mut quad = vec![0.0; q * q];
    for i in 0..q {
        for j in 0..q {
            let a: f64 = (0..q).map(|m| jet.h4(m, m, i, j)).sum();
            quad[i * q + j] = 6.0 * a - 2.0 * tr * hh[i * q + j] - 4.0 * hhh[i * q + j];
        }
    }
    (lin, quad)
}

/// Curvature-variation functional κ(θ) in its truncated polynomial form.
pub fn kappa(jet: &SurfaceJet, lambda0: f64, theta: &[f64]) -> f64 {
    let q = jet.q;
    let (lin, quad) = kappa_coefficients(jet, lambda0);
    let mut acc = 0.0;
    for i in 0..q {
        acc += lin[i] * theta[i];
        for j in 0..q {
            acc += quad[i * q + j] * theta[i] * theta[j];
        }
    }
    acc
}

/// `E[U_{i1} ⋯ U_{ik}]` for `U ~ N(0, I)` by summing over pairings.
pub fn gaussian_moment(indices: &[usize]) -> f64 {
    if indices.is_empty() {
        return 1.0;
    }
    if indices.len() % 2 == 1 {
        return 0.0;
    }
    let first = indices[0];
    let rest = &indices[1..];
    let mut total = 0.0;
    for (pos, &other) in rest.iter().enumerate() {
        if other != first {
            continue;
        }
        let mut remaining = rest.to_vec();
        remaining.remove(pos);
        total += gaussian_moment(&remaining);
    }
    total
}

/// Local jet of the boundary at the jet's own origin, expressed in an
/// orthonormal tangent frame with the unit outward normal.
///
/// For `q = 1` the fourth-order expansion is exact (series reversion of the
/// arc parametrization). For `q ≥ 2` the second-order coefficients are exact
/// and the higher ones are mapped by `G^{-1/2}` and `1/‖f‖`, which is exact
/// when `h1 = 0`.
pub fn tangent_jet(jet: &SurfaceJet) -> SurfaceJet {
    let q = jet.q;
    if q == 1 {
        return tangent_jet_1d(jet.h1[0], jet.h2[0], jet.h3[0], jet.h4[0]);
    }
    let a = &jet.h1;
    let a2: f64 = a.iter().map(|x| x * x).sum();
    let norm_f = (1.0 + a2).sqrt();
    let mut p = vec![0.0; q * q];
    for i in 0..q {
        for j in 0..q {
            let delta = if i == j { 1.0 } else { 0.0 };
            let c = if a2 > 0.0 { (1.0 / norm_f - 1.0) / a2 } else { 0.0 };
            p[i * q + j] = delta + c * a[i] * a[j];
        }
    }
    let mut out = SurfaceJet::zero(q);
    out.h2 = transform_tensor(&jet.h2, q, 2, &p).into_iter().map(|x| x / norm_f).collect();
    out.h3 = transform_tensor(&jet.h3, q, 3, &p).into_iter().map(|x| x / norm_f).collect();
    out.h4 = transform_tensor(&jet.h4, q, 4, &p).into_iter().map(|x| x / norm_f).collect();
    out.symmetrize();
    out
}

type Poly4 = [f64; 5];

fn poly_mul(a: &Poly4, b: &Poly4) -> Poly4 {
    let mut out = [0.0; 5];
    for i in 0..5 {
        for j in 0..5 - i {
            out[i + j] += a[i] * b[j];
        }
    }
    out
}

fn tangent_jet_1d(h1: f64, h2: f64, h3: f64, h4: f64) -> SurfaceJet {
    let s = (1.0 + h1 * h1).sqrt();
    let k = h1 / s;
    let (c2, c3, c4) = (k * h2 / s, k * h3 / s, k * h4 / s);
    // t as a series in y = x / s, reverting y = t + c2 t² + c3 t³ + c4 t⁴
    let t_of_y = [
        0.0,
        1.0,
        -c2,
        2.0 * c2 * c2 - c3,
        -5.0 * c2 * c2 * c2 + 5.0 * c2 * c3 - c4,
    ];
    let t: Poly4 = std::array::from_fn(|i| t_of_y[i] / s.powi(i as i32));
    let t2 = poly_mul(&t, &t);
    let t3 = poly_mul(&t2, &t);
    let t4 = poly_mul(&t3, &t);
    let d: Poly4 = std::array::from_fn(|i| (h2 * t2[i] + h3 * t3[i] + h4 * t4[i]) / s);
    SurfaceJet::one_dim(0.0, 0.0, d[2], d[3], d[4])
}

/// Geometric summary at the origin of a jet that may carry a gradient,
/// using the exact tangent-frame coefficients of [`tangent_jet`].
pub fn summary_at_point(jet: &SurfaceJet, lambda0: f64) -> GeometricSummary {
    beta_summary(gamma_summary(&tangent_jet(jet)), lambda0)
}
