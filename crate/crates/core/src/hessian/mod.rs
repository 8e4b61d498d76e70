//! Pointwise tensor calculus of Hessian structures in affine coordinates.
//!
//! Index conventions, fixed throughout:
//!
//! - `dg[i,j,k] = ∂_k g_ij`, `ddg[i,j,k,l] = ∂_k ∂_l g_ij`;
//! - Christoffel symbols `[i,j,k] = Γ^i_jk`, derivatives `[i,j,k,l] = ∂_l Γ^i_jk`;
//! - curvature `[i,j,k,l] = R^i_jkl` with `R(∂_k, ∂_l)∂_j = R^i_jkl ∂_i`,
//!   lowered on the first slot;
//! - `Q_ijkl = g_is ∂_k γ^s_jl` where `γ = ∇ − D`.

mod connection;
mod corpus;
mod metric;
mod point;
mod report;

pub use connection::{
    codazzi_residual_general, connection_curvature, connection_torsion, covariant_metric_deriv, curvature_duality_residual,
    curvature_of, Connection, ConnectionJet, Dual, Flat, LeviCivita, PolynomialConnection,
};
pub use corpus::{builtin_corpus, random_polynomial, CorpusEntry};
pub use metric::{
    codazzi_symmetry_residual, ComponentMetric, FdMetric, MetricField, MetricJet, PotentialMetric, TubeMetric,
};
pub use point::{
    alpha_routes, beta_routes, christoffel, constant_curvature_basis, constant_curvature_fit, einstein_check,
    einstein_fit, gamma_lower, hessian_curvature_q, koszul_alpha, koszul_beta, log_det_jet, metric_from_potential,
    q_hat, q_route_a, q_route_b, riemann_from_q, sectional_q, sym2_inner, volume_det, AlphaRoutes, BetaRoutes,
    HessianPoint,
};
pub use report::{full_report, q_symmetry_residual, report_at, Fault, HessianReport, ReportOptions, Q_SYMMETRIES};
