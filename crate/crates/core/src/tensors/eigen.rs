use super::sym::SymMatrix;
use crate::error::{Error, Result};

/// Absolute floor under the relative kernel threshold.
pub const KERNEL_FLOOR: f64 = 1e-12;

/// Relative eigenvalue gap below which [`sym_inverse`] reports singularity.
pub const SINGULAR_TOL: f64 = 1e-13;

const MAX_SWEEPS: usize = 100;

/// Eigenvalues in ascending order with matching orthonormal eigenvectors.
///
/// Each eigenvector's first component with magnitude above 1e-12 is made
/// positive, so bases are reproducible.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomp {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

impl EigenDecomp {
    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// Reconstructs `V Λ Vᵀ`.
    pub fn reconstruct(&self) -> SymMatrix {
        let n = self.values.len();
        SymMatrix::from_fn(n, |i, j| {
            self.values
                .iter()
                .zip(&self.vectors)
                .map(|(l, v)| l * v[i] * v[j])
                .sum()
        })
    }
}

/// Cyclic Jacobi eigensolver. Deterministic for a fixed input.
pub fn eig_sym(a: &SymMatrix) -> Result<EigenDecomp> {
    if !a.is_finite() {
        return Err(Error::NonFinite);
    }
    let n = a.dim();
    let mut m = a.to_rows();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();

    let scale: f64 = m.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i][j] * m[i][j])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-17 * scale || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p][q];
                if apq == 0.0 {
                    continue;
                }
                let tau = (m[q][q] - m[p][p]) / (2.0 * apq);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let t = if tau == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[k][p], m[k][q]);
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p][k], m[q][k]);
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[i][i].total_cmp(&m[j][j]));
    let values = order.iter().map(|&k| m[k][k]).collect();
    let vectors = order
        .iter()
        .map(|&k| {
            let mut col: Vec<f64> = (0..n).map(|i| v[i][k]).collect();
            if let Some(lead) = col.iter().find(|x| x.abs() > 1e-12) {
                if *lead < 0.0 {
                    col.iter_mut().for_each(|x| *x = -*x);
                }
            }
            col
        })
        .collect();
    Ok(EigenDecomp { values, vectors })
}

/// Inverse of a symmetric positive definite matrix.
pub fn sym_inverse(g: &SymMatrix) -> Result<SymMatrix> {
    let eig = eig_sym(g)?;
    let (lo, hi) = (eig.min(), eig.max());
    if g.dim() > 0 && (hi <= 0.0 || lo <= SINGULAR_TOL * hi) {
        return Err(Error::Singular {
            min_eigenvalue: lo,
            max_eigenvalue: hi,
        });
    }
    let n = g.dim();
    Ok(SymMatrix::from_fn(n, |i, j| {
        eig.values
            .iter()
            .zip(&eig.vectors)
            .map(|(l, v)| v[i] * v[j] / l)
            .sum()
    }))
}

/// Kernel of a positive semi-definite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelInfo {
    pub rank: usize,
    /// Orthonormal kernel vectors, ascending eigenvalue order.
    pub kernel: Vec<Vec<f64>>,
    /// Orthonormal basis of the complement (the non-kernel eigenvectors).
    pub complement: Vec<Vec<f64>>,
    pub eigen: EigenDecomp,
}

/// Eigenvectors whose eigenvalue is at most `tol_rel · max(λ_max, 1e-12)`.
///
/// Fails with [`Error::NotPsd`] if some eigenvalue falls below minus that
/// same threshold.
pub fn kernel_basis(a: &SymMatrix, tol_rel: f64) -> Result<KernelInfo> {
    let eigen = eig_sym(a)?;
    let threshold = tol_rel * eigen.max().max(KERNEL_FLOOR);
    if let Some(&worst) = eigen.values.first() {
        if worst < -threshold {
            return Err(Error::NotPsd {
                eigenvalue: worst,
                tolerance: threshold,
            });
        }
    }
    let mut kernel = Vec::new();
    let mut complement = Vec::new();
    for (value, vector) in eigen.values.iter().zip(&eigen.vectors) {
        if *value <= threshold {
            kernel.push(vector.clone());
        } else {
            complement.push(vector.clone());
        }
    }
    Ok(KernelInfo {
        rank: complement.len(),
        kernel,
        complement,
        eigen,
    })
}
