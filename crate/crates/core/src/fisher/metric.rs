use serde::Serialize;

use super::expectation::estimate;
use super::family::FamilySpec;
use crate::error::{Error, Result};
use crate::tensors::{eig_sym, kernel_basis, SymMatrix};

/// Relative eigenvalue threshold separating the kernel from the rest.
pub const DEFAULT_KERNEL_TOL: f64 = 1e-9;

/// Relative slack below zero tolerated on the smallest eigenvalue.
pub const PSD_TOL: f64 = 1e-10;

/// A Fisher matrix at one parameter point, with its eigen-analysis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FisherResult {
    pub lam: Vec<f64>,
    pub g: SymMatrix,
    /// Integration tag, e.g. `gauss-hermite(64)`.
    pub method: String,
    /// Half-resolution gap (quadrature), standard error (Monte Carlo) or 0.
    pub est_error: f64,
    pub rank: usize,
    /// Orthonormal kernel basis.
    pub kernel: Vec<Vec<f64>>,
    /// Orthonormal basis of the kernel's complement.
    pub complement: Vec<Vec<f64>>,
    /// Smallest eigenvalue.
    pub psd_margin: f64,
    /// Total probability seen by the integration rule.
    pub mass: f64,
}

fn finish(lam: &[f64], g: SymMatrix, method: String, est_error: f64, mass: f64) -> Result<FisherResult> {
    if !g.is_finite() {
        return Err(Error::Integration("Fisher matrix is not finite".into()));
    }
    let eigen = eig_sym(&g)?;
    let scale = eigen.values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if eigen.min() < -PSD_TOL * scale.max(crate::tensors::KERNEL_FLOOR) {
        return Err(Error::NotPsd {
            eigenvalue: eigen.min(),
            tolerance: PSD_TOL * scale,
        });
    }
    let info = kernel_basis(&g, DEFAULT_KERNEL_TOL)?;
    Ok(FisherResult {
        lam: lam.to_vec(),
        psd_margin: eigen.min(),
        rank: info.rank,
        kernel: info.kernel,
        complement: info.complement,
        g,
        method,
        est_error,
        mass,
    })
}

/// `g_ij = E[∂_i l ∂_j l]`.
pub fn fisher_outer(spec: &FamilySpec, lam: &[f64]) -> Result<FisherResult> {
    let e = estimate(spec, lam)?;
    finish(lam, e.moments.outer, e.method, e.outer_error, e.moments.mass)
}

/// `g_ij = −E[∂_i ∂_j l]`.
pub fn fisher_hess(spec: &FamilySpec, lam: &[f64]) -> Result<FisherResult> {
    let e = estimate(spec, lam)?;
    finish(lam, e.moments.hess, e.method, e.hess_error, e.moments.mass)
}

/// Both forms from one pass over the nodes.
pub fn fisher_pair(spec: &FamilySpec, lam: &[f64]) -> Result<(FisherResult, FisherResult)> {
    let e = estimate(spec, lam)?;
    let outer = finish(lam, e.moments.outer, e.method.clone(), e.outer_error, e.moments.mass)?;
    let hess = finish(lam, e.moments.hess, e.method, e.hess_error, e.moments.mass)?;
    Ok((outer, hess))
}

/// Rank and kernel at a caller-chosen relative threshold, re-auditing PSD at
/// that threshold.
pub fn psd_and_kernel(r: &FisherResult, tol: f64) -> Result<(usize, Vec<Vec<f64>>)> {
    let info = kernel_basis(&r.g, tol)?;
    Ok((info.rank, info.kernel))
}

/// Largest `|mass − 1|` over the given parameter points, together with the
/// largest integration error estimate of the mass.
pub fn normalization_audit(spec: &FamilySpec, points: &[Vec<f64>]) -> Result<(f64, f64)> {
    let mut worst = (0.0f64, 0.0f64);
    for lam in points {
        let e = estimate(spec, lam)?;
        worst.0 = worst.0.max((e.moments.mass - 1.0).abs());
        worst.1 = worst.1.max(e.mass_error);
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum RankVerdict {
    Constant { rank: usize },
    /// Indices of points whose rank differs from the most common one.
    Deviating { modal_rank: usize, points: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankProfile {
    pub ranks: Vec<usize>,
    /// `histogram[r]` counts points of rank `r`.
    pub histogram: Vec<usize>,
    pub verdict: RankVerdict,
}

/// Rank of `g_F` at each point, with a constant-rank verdict.
pub fn rank_profile(spec: &FamilySpec, points: &[Vec<f64>], tol: f64) -> Result<RankProfile> {
    if points.is_empty() {
        return Err(Error::Config("rank profile needs at least one point".into()));
    }
    let mut ranks = Vec::with_capacity(points.len());
    for lam in points {
        let (rank, _) = psd_and_kernel(&fisher_outer(spec, lam)?, tol)?;
        ranks.push(rank);
    }
    let mut histogram = vec![0; spec.param_dim() + 1];
    for &r in &ranks {
        histogram[r] += 1;
    }
    // ties go to the lower rank so the verdict is deterministic
    let modal_rank = (0..histogram.len()).max_by_key(|&r| (histogram[r], std::cmp::Reverse(r))).unwrap_or(0);
    let deviating: Vec<usize> = ranks.iter().enumerate().filter(|(_, &r)| r != modal_rank).map(|(i, _)| i).collect();
    let verdict = if deviating.is_empty() {
        RankVerdict::Constant { rank: modal_rank }
    } else {
        RankVerdict::Deviating {
            modal_rank,
            points: deviating,
        }
    };
    Ok(RankProfile {
        ranks,
        histogram,
        verdict,
    })
}
