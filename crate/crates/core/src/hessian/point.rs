use std::fmt;
use std::sync::Arc;

use super::connection::{ConnectionJet, LeviCivita};
use super::metric::{require_metric, MetricJet, PotentialMetric};
use crate::diffops::{Jet4, Scalar, ScalarField};
use crate::error::{Error, Result};
use crate::tensors::{eig_sym, sym_inverse, SymMatrix, Tensor3, Tensor4};

/// A potential evaluated at one transverse point, with everything derived
/// from its fourth-order jet cached.
#[derive(Clone)]
pub struct HessianPoint {
    y: Vec<f64>,
    phi: Arc<dyn ScalarField>,
    jet: Jet4,
    metric: MetricJet,
    g_inv: SymMatrix,
}

impl fmt::Debug for HessianPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HessianPoint")
            .field("y", &self.y)
            .field("g", &self.metric.g)
            .finish()
    }
}

impl HessianPoint {
    /// Fails with [`Error::NotMetric`] when the Hessian of `φ` is not
    /// positive definite at `y`.
    pub fn new(phi: Arc<dyn ScalarField>, y: &[f64]) -> Result<Self> {
        let jet = phi.jet_at(y)?;
        let metric = PotentialMetric::from_jet(&jet);
        require_metric(&metric.g)?;
        let g_inv = sym_inverse(&metric.g)?;
        Ok(HessianPoint {
            y: y.to_vec(),
            phi,
            jet,
            metric,
            g_inv,
        })
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn dim(&self) -> usize {
        self.y.len()
    }

    pub fn phi(&self) -> &Arc<dyn ScalarField> {
        &self.phi
    }

    pub fn jet(&self) -> &Jet4 {
        &self.jet
    }

    pub fn metric_jet(&self) -> &MetricJet {
        &self.metric
    }

    pub fn g(&self) -> &SymMatrix {
        &self.metric.g
    }

    pub fn g_inv(&self) -> &SymMatrix {
        &self.g_inv
    }

    /// `φ_ijk`
    pub fn third(&self) -> &Tensor3 {
        &self.metric.dg
    }

    /// `φ_ijkl`
    pub fn fourth(&self) -> &Tensor4 {
        &self.metric.ddg
    }

    /// Levi-Civita symbols and their derivatives, through the generic
    /// metric-connection code.
    pub fn levi_civita(&self) -> Result<ConnectionJet> {
        LeviCivita::from_metric_jet(&self.metric)
    }
}

/// `g_ij = ∂²φ/∂yⁱ∂yʲ`
pub fn metric_from_potential(p: &HessianPoint) -> SymMatrix {
    p.g().clone()
}

/// `Γ^i_jk = ½ g^{is}(∂_k g_sj + ∂_j g_sk − ∂_s g_jk)`
pub fn christoffel(p: &HessianPoint) -> Result<Tensor3> {
    gamma_lower(p).contract_slot(p.g_inv(), 0)
}

/// `γ_ijk = ½(∂_k g_ij + ∂_j g_ik − ∂_i g_jk)`
pub fn gamma_lower(p: &HessianPoint) -> Tensor3 {
    let dg = p.third();
    Tensor3::from_fn(p.dim(), |[i, j, k]| 0.5 * (dg.get([i, j, k]) + dg.get([i, k, j]) - dg.get([j, k, i])))
}

/// `Q_ijkl = g_is ∂_k γ^s_jl`, reading `γ` as the Levi-Civita symbols of `g`
/// (the flat connection has none).
pub fn q_route_a(p: &HessianPoint) -> Result<Tensor4> {
    let lc = p.levi_civita()?;
    let upper = Tensor4::from_fn(p.dim(), |[i, j, k, l]| lc.dgamma.get([i, j, l, k]));
    upper.contract_slot(p.g(), 0)
}

/// `Q_ijkl = ½ φ_ijkl − ½ g^{rs} φ_ikr φ_jls`
pub fn q_route_b(p: &HessianPoint) -> Tensor4 {
    q_route_b_signed(p, 1.0)
}

pub(crate) fn q_route_b_signed(p: &HessianPoint, sign: f64) -> Tensor4 {
    let (d3, d4, g_inv) = (p.third(), p.fourth(), p.g_inv());
    let q = p.dim();
    Tensor4::from_fn(q, |[i, j, k, l]| {
        let mut contraction = 0.0;
        for r in 0..q {
            for s in 0..q {
                contraction += g_inv.get(r, s) * d3.get([i, k, r]) * d3.get([j, l, s]);
            }
        }
        0.5 * d4.get([i, j, k, l]) - sign * 0.5 * contraction
    })
}

/// Scale against which route agreement of `Q` is measured.
pub(crate) fn q_scale(a: &Tensor4, b: &Tensor4, g: &SymMatrix) -> f64 {
    a.max_abs().max(b.max_abs()).max(g.max_abs().powi(2))
}

/// Hessian curvature tensor, computed along both routes; fails with
/// [`Error::RouteMismatch`] when they disagree beyond `rel_tol`.
pub fn hessian_curvature_q(p: &HessianPoint, rel_tol: f64) -> Result<Tensor4> {
    let a = q_route_a(p)?;
    let b = q_route_b(p);
    let residual = a.max_abs_diff(&b);
    let tolerance = rel_tol * q_scale(&a, &b, p.g());
    if residual > tolerance {
        return Err(Error::RouteMismatch {
            quantity: "Q",
            residual,
            tolerance,
        });
    }
    Ok(b)
}

/// `R_ijkl = ½(Q_ijkl − Q_jikl)`
pub fn riemann_from_q(q: &Tensor4) -> Tensor4 {
    Tensor4::from_fn(q.dim(), |[i, j, k, l]| 0.5 * (q.get([i, j, k, l]) - q.get([j, i, k, l])))
}

/// `det g`
pub fn volume_det(g: &SymMatrix) -> Result<f64> {
    Ok(eig_sym(g)?.values.iter().product())
}

/// Jet of `log det g` valid to order 2, by Gaussian elimination without
/// pivoting on the jets of the Hessian entries (pivots of a positive definite
/// matrix stay positive).
pub fn log_det_jet(p: &HessianPoint) -> Result<Jet4> {
    let q = p.dim();
    let first: Vec<Jet4> = (0..q).map(|i| p.jet().differentiate(i)).collect();
    let mut a: Vec<Vec<Jet4>> = (0..q)
        .map(|i| (0..q).map(|j| first[i].differentiate(j)).collect())
        .collect();
    let mut log_det = p.jet().constant_like(0.0).truncate(2);
    for k in 0..q {
        let pivot = a[k][k].clone();
        log_det = log_det + pivot.try_ln()?;
        for i in k + 1..q {
            let factor = a[i][k].try_div(&pivot)?;
            for j in k..q {
                let update = &factor * &a[k][j];
                a[i][j] = &a[i][j] - &update;
            }
        }
    }
    Ok(log_det)
}

/// Both routes of the first Koszul form.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaRoutes {
    /// `½ ∂_i log det g`
    pub log_det: Vec<f64>,
    /// `γ^r_ri`
    pub gamma_trace: Vec<f64>,
}

/// Both routes of the second Koszul form.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaRoutes {
    /// `∂_j α_i = ½ ∂_i ∂_j log det g`
    pub log_det: SymMatrix,
    /// `Q^r_rij`
    pub q_trace: SymMatrix,
    /// `Q_ij^r_r`
    pub q_trace_last: SymMatrix,
}

pub fn alpha_routes(p: &HessianPoint) -> Result<AlphaRoutes> {
    let log_det = log_det_jet(p)?;
    let gamma = christoffel(p)?;
    let q = p.dim();
    Ok(AlphaRoutes {
        log_det: (0..q).map(|i| 0.5 * log_det.d(&[i])).collect(),
        gamma_trace: (0..q).map(|i| (0..q).map(|r| gamma.get([r, r, i])).sum()).collect(),
    })
}

pub fn beta_routes(p: &HessianPoint, q_tensor: &Tensor4) -> Result<BetaRoutes> {
    let log_det = log_det_jet(p)?;
    let n = p.dim();
    let g_inv = p.g_inv();
    let raised = q_tensor.contract_slot(g_inv, 0)?;
    let last = |i: usize, j: usize| -> f64 {
        let mut v = 0.0;
        for r in 0..n {
            for s in 0..n {
                v += g_inv.get(r, s) * q_tensor.get([i, j, r, s]);
            }
        }
        v
    };
    Ok(BetaRoutes {
        log_det: SymMatrix::from_fn(n, |i, j| 0.5 * log_det.d(&[i, j])),
        q_trace: SymMatrix::from_fn(n, |i, j| (0..n).map(|r| raised.get([r, r, i, j])).sum()),
        q_trace_last: SymMatrix::from_fn(n, last),
    })
}

fn vec_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn vec_max(a: &[f64]) -> f64 {
    a.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

impl AlphaRoutes {
    pub fn residual(&self) -> f64 {
        vec_diff(&self.log_det, &self.gamma_trace)
    }

    pub fn scale(&self) -> f64 {
        vec_max(&self.log_det).max(vec_max(&self.gamma_trace)).max(1.0)
    }
}

impl BetaRoutes {
    pub fn residual(&self) -> f64 {
        self.log_det
            .max_abs_diff(&self.q_trace)
            .max(self.log_det.max_abs_diff(&self.q_trace_last))
    }

    pub fn scale(&self) -> f64 {
        self.log_det.max_abs().max(self.q_trace.max_abs()).max(1.0)
    }
}

/// `α_i`, failing with [`Error::RouteMismatch`] if the two routes disagree
/// beyond `rel_tol` (relative to `max(1, |α|)`).
pub fn koszul_alpha(p: &HessianPoint, rel_tol: f64) -> Result<Vec<f64>> {
    let routes = alpha_routes(p)?;
    let (residual, tolerance) = (routes.residual(), rel_tol * routes.scale());
    if residual > tolerance {
        return Err(Error::RouteMismatch {
            quantity: "alpha",
            residual,
            tolerance,
        });
    }
    Ok(routes.gamma_trace)
}

/// `β_ij`, checked across its three routes like [`koszul_alpha`].
pub fn koszul_beta(p: &HessianPoint, rel_tol: f64) -> Result<SymMatrix> {
    let q_tensor = hessian_curvature_q(p, rel_tol)?;
    let routes = beta_routes(p, &q_tensor)?;
    let (residual, tolerance) = (routes.residual(), rel_tol * routes.scale());
    if residual > tolerance {
        return Err(Error::RouteMismatch {
            quantity: "beta",
            residual,
            tolerance,
        });
    }
    Ok(routes.q_trace)
}

/// `λ = g^{ij} β_ij / q` and `‖β − λ g‖∞`.
pub fn einstein_fit(g: &SymMatrix, g_inv: &SymMatrix, beta: &SymMatrix) -> (f64, f64) {
    let q = g.dim();
    let mut trace = 0.0;
    for i in 0..q {
        for j in 0..q {
            trace += g_inv.get(i, j) * beta.get(i, j);
        }
    }
    let lambda = trace / q as f64;
    (lambda, beta.max_abs_diff(&g.scaled(lambda)))
}

pub fn einstein_check(p: &HessianPoint, rel_tol: f64) -> Result<(f64, f64)> {
    let beta = koszul_beta(p, rel_tol)?;
    Ok(einstein_fit(p.g(), p.g_inv(), &beta))
}

/// `B_ijkl = ½(g_ij g_kl + g_il g_jk)`; `Q = c B` is constant curvature `c`.
pub fn constant_curvature_basis(g: &SymMatrix) -> Tensor4 {
    Tensor4::from_fn(g.dim(), |[i, j, k, l]| 0.5 * (g.get(i, j) * g.get(k, l) + g.get(i, l) * g.get(j, k)))
}

/// Least-squares `c` with `Q ≈ c B` over all components, and the max-norm of
/// what is left.
pub fn constant_curvature_fit(q_tensor: &Tensor4, g: &SymMatrix) -> (f64, f64) {
    let basis = constant_curvature_basis(g);
    let c = q_tensor.dot(&basis) / basis.dot(&basis);
    (c, q_tensor.max_abs_diff(&basis.scaled(c)))
}

/// `⟨ξ, η⟩ = g_ia g_jb ξ^{ij} η^{ab}` for contravariant 2-tensors given as
/// dense rows.
pub fn sym2_inner(g: &SymMatrix, xi: &[Vec<f64>], eta: &[Vec<f64>]) -> f64 {
    let q = g.dim();
    let mut v = 0.0;
    for i in 0..q {
        for j in 0..q {
            for a in 0..q {
                for b in 0..q {
                    v += g.get(i, a) * g.get(j, b) * xi[i][j] * eta[a][b];
                }
            }
        }
    }
    v
}

/// `q(ξ) = ⟨Q̂(ξ), ξ⟩ / ⟨ξ, ξ⟩ = Q_ajcl ξ^{jl} ξ^{ac} / ⟨ξ, ξ⟩`.
pub fn sectional_q(q_tensor: &Tensor4, g: &SymMatrix, xi: &[Vec<f64>]) -> Result<f64> {
    let n = g.dim();
    if xi.len() != n || xi.iter().any(|row| row.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: xi.len(),
        });
    }
    let norm = sym2_inner(g, xi, xi);
    if norm <= 0.0 || xi.iter().flatten().all(|v| *v == 0.0) {
        return Err(Error::ZeroTensor);
    }
    let mut num = 0.0;
    for [a, j, c, l] in q_tensor.indices() {
        num += q_tensor.get([a, j, c, l]) * xi[j][l] * xi[a][c];
    }
    Ok(num / norm)
}

/// The symmetric tensor `Q̂(ξ)^{ik} = g^{ia} g^{kc} Q_ajcl ξ^{jl}`.
pub fn q_hat(q_tensor: &Tensor4, g_inv: &SymMatrix, xi: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = g_inv.dim();
    let mut lowered = vec![vec![0.0; n]; n];
    for [a, j, c, l] in q_tensor.indices() {
        lowered[a][c] += q_tensor.get([a, j, c, l]) * xi[j][l];
    }
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for k in 0..n {
            for a in 0..n {
                for c in 0..n {
                    out[i][k] += g_inv.get(i, a) * g_inv.get(k, c) * lowered[a][c];
                }
            }
        }
    }
    out
}
