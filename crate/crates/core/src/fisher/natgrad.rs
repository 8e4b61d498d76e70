//! Gradient descent preconditioned by the pseudo-inverse of `g_F` on the
//! complement of its kernel.

use serde::Serialize;

use super::family::FamilySpec;
use super::metric::{fisher_outer, DEFAULT_KERNEL_TOL};
use crate::diffops::Jet4;
use crate::error::{Error, Result};
use crate::expr::ExprAst;
use crate::tensors::{dot, kernel_basis, norm};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NatgradStep {
    pub iter: usize,
    pub lam: Vec<f64>,
    pub objective: f64,
    pub grad_norm: f64,
    /// Dimension of the kernel that the update avoided.
    pub kernel_dim: usize,
}

/// `λ ← λ − η G⁺ ∇f`, with `G⁺ = Σ v vᵀ / μ` over the non-kernel
/// eigenpairs `(μ, v)` of `g_F(λ)`; the identity metric when `family` is
/// `None`. Returns `steps + 1` rows starting at `lam0`.
pub fn natgrad(
    family: Option<&FamilySpec>,
    objective: &ExprAst,
    lam0: &[f64],
    eta: f64,
    steps: usize,
) -> Result<Vec<NatgradStep>> {
    if objective.vars().len() != lam0.len() {
        return Err(Error::DimensionMismatch {
            expected: objective.vars().len(),
            found: lam0.len(),
        });
    }
    let mut lam = lam0.to_vec();
    let mut trace = Vec::with_capacity(steps + 1);
    for iter in 0..=steps {
        let seeds: Vec<Jet4> = Jet4::seed(&lam).into_iter().map(|j| j.truncate(1)).collect();
        let f = objective.eval(&seeds)?;
        if !f.is_finite() {
            return Err(Error::NonFinite);
        }
        let grad: Vec<f64> = (0..lam.len()).map(|i| f.d(&[i])).collect();
        let (direction, kernel_dim) = match family {
            None => (grad.clone(), 0),
            Some(spec) => {
                let info = kernel_basis(&fisher_outer(spec, &lam)?.g, DEFAULT_KERNEL_TOL)?;
                let mut dir = vec![0.0; lam.len()];
                let count = info.eigen.values.len() - info.rank;
                for (mu, v) in info.eigen.values[count..].iter().zip(&info.complement) {
                    let c = dot(v, &grad) / mu;
                    dir.iter_mut().zip(v).for_each(|(d, x)| *d += c * x);
                }
                (dir, info.kernel.len())
            }
        };
        trace.push(NatgradStep {
            iter,
            lam: lam.clone(),
            objective: f.value(),
            grad_norm: norm(&grad),
            kernel_dim,
        });
        if iter < steps {
            lam.iter_mut().zip(&direction).for_each(|(l, d)| *l -= eta * d);
        }
    }
    Ok(trace)
}
