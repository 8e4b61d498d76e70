use std::sync::Arc;

use serde::Serialize;

use super::point::{
    alpha_routes, beta_routes, christoffel, constant_curvature_fit, einstein_fit, gamma_lower, q_route_a,
    q_route_b_signed, q_scale, riemann_from_q, HessianPoint,
};
use super::metric::codazzi_symmetry_of;
use crate::diffops::ScalarField;
use crate::error::Result;
use crate::kahler::{kahler_summary, KahlerPoint};
use crate::tensors::{SymMatrix, Tensor3, Tensor4};

/// Deliberate defects used to check that the verification suites notice.
#[doc(hidden)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Flips the sign of the quadratic term in the closed formula for `Q`.
    SignFlip,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportOptions {
    /// Relative tolerance for every two-route comparison.
    pub route_rel: f64,
    #[doc(hidden)]
    pub fault: Option<Fault>,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            route_rel: 1e-9,
            fault: None,
        }
    }
}

/// Every pointwise tensor of the Hessian structure of `φ` at `y`.
#[derive(Debug, Clone, Serialize)]
pub struct HessianReport {
    pub y: Vec<f64>,
    pub g: SymMatrix,
    pub g_inv: SymMatrix,
    /// `γ_ijk`
    pub gamma: Tensor3,
    /// `Γ^i_jk`
    pub christoffel: Tensor3,
    #[serde(rename = "Q")]
    pub q: Tensor4,
    #[serde(rename = "R")]
    pub r: Tensor4,
    pub alpha: Vec<f64>,
    pub beta: SymMatrix,
    pub c_fit: f64,
    pub c_residual: f64,
    pub einstein_lambda: f64,
    pub einstein_residual: f64,
    #[serde(rename = "kahler_R_residual")]
    pub kahler_r_residual: f64,
    pub kahler_ricci_residual: f64,
    pub holo_sectional: f64,
    /// `‖Q_A − Q_B‖∞` divided by the comparison scale.
    pub q_route_residual: f64,
    pub q_symmetry_residual: f64,
    pub alpha_route_residual: f64,
    pub beta_route_residual: f64,
    pub codazzi_residual: f64,
    /// One entry per failed cross-route check.
    pub flags: Vec<String>,
}

/// Permutations `σ` with `Q_{σ(ijkl)} = Q_ijkl` for every Hessian curvature
/// tensor: `Q_klij`, `Q_kjil`, `Q_ilkj`, `Q_jilk`.
pub const Q_SYMMETRIES: [[usize; 4]; 4] = [[2, 3, 0, 1], [2, 1, 0, 3], [0, 3, 2, 1], [1, 0, 3, 2]];

pub fn q_symmetry_residual(q: &Tensor4) -> f64 {
    Q_SYMMETRIES
        .iter()
        .map(|perm| q.max_abs_diff(&q.permuted(*perm)))
        .fold(0.0, f64::max)
}

pub fn full_report(phi: Arc<dyn ScalarField>, y: &[f64], opts: &ReportOptions) -> Result<HessianReport> {
    let p = HessianPoint::new(phi, y)?;
    report_at(&p, opts)
}

pub fn report_at(p: &HessianPoint, opts: &ReportOptions) -> Result<HessianReport> {
    let mut flags = Vec::new();
    let sign = match opts.fault {
        Some(Fault::SignFlip) => -1.0,
        None => 1.0,
    };

    let q_a = q_route_a(p)?;
    let q = q_route_b_signed(p, sign);
    let q_route_residual = q_a.max_abs_diff(&q) / q_scale(&q_a, &q, p.g());
    if q_route_residual > opts.route_rel {
        flags.push(format!("RouteMismatch(Q): relative residual {q_route_residual:e}"));
    }

    let alpha = alpha_routes(p)?;
    let alpha_route_residual = alpha.residual() / alpha.scale();
    if alpha_route_residual > opts.route_rel {
        flags.push(format!("RouteMismatch(alpha): relative residual {alpha_route_residual:e}"));
    }
    let beta = beta_routes(p, &q)?;
    let beta_route_residual = beta.residual() / beta.scale();
    if beta_route_residual > opts.route_rel {
        flags.push(format!("RouteMismatch(beta): relative residual {beta_route_residual:e}"));
    }

    let (c_fit, c_residual) = constant_curvature_fit(&q, p.g());
    let (einstein_lambda, einstein_residual) = einstein_fit(p.g(), p.g_inv(), &beta.q_trace);
    let kp = KahlerPoint::from_base(p.clone(), &vec![0.0; p.dim()])?;
    let kahler = kahler_summary(&kp, &q, &beta.q_trace)?;

    Ok(HessianReport {
        y: p.y().to_vec(),
        g: p.g().clone(),
        g_inv: p.g_inv().clone(),
        gamma: gamma_lower(p),
        christoffel: christoffel(p)?,
        r: riemann_from_q(&q),
        q_symmetry_residual: q_symmetry_residual(&q),
        q,
        alpha: alpha.gamma_trace,
        beta: beta.q_trace,
        c_fit,
        c_residual,
        einstein_lambda,
        einstein_residual,
        kahler_r_residual: kahler.r_residual,
        kahler_ricci_residual: kahler.ricci_residual,
        holo_sectional: kahler.holo_sectional,
        q_route_residual,
        alpha_route_residual,
        beta_route_residual,
        codazzi_residual: codazzi_symmetry_of(&p.metric_jet().dg),
        flags,
    })
}
