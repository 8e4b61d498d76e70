//! Leaves of the kernel foliation as integral curves of a unit kernel field.

use serde::Serialize;

use super::family::FamilySpec;
use super::foliation::{leafwise_constancy_residual, FoliationOptions};
use super::metric::fisher_outer;
use crate::error::{Error, Result};
use crate::tensors::{dot, kernel_basis, norm};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeafOptions {
    pub step: f64,
    pub steps: usize,
    /// Index of the kernel basis vector at the seed that fixes the direction.
    pub direction: usize,
    pub foliation: FoliationOptions,
}

impl Default for LeafOptions {
    fn default() -> Self {
        LeafOptions {
            step: 0.05,
            steps: 20,
            direction: 0,
            foliation: FoliationOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeafPoint {
    /// Arc length from the seed.
    pub s: f64,
    pub lam: Vec<f64>,
    pub rank: usize,
    pub leafwise_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeafCurve {
    pub seed: Vec<f64>,
    pub points: Vec<LeafPoint>,
    /// Why integration stopped early, if it did.
    pub aborted: Option<String>,
}

/// Unit kernel direction at `lam` closest to `reference`.
fn kernel_direction(spec: &FamilySpec, lam: &[f64], reference: &[f64], rank: usize, tol: f64) -> Result<Vec<f64>> {
    let info = kernel_basis(&fisher_outer(spec, lam)?.g, tol)?;
    if info.rank != rank {
        return Err(Error::RankDrift {
            expected: rank,
            found: info.rank,
        });
    }
    let mut v = vec![0.0; lam.len()];
    for k in &info.kernel {
        let c = dot(k, reference);
        v.iter_mut().zip(k).for_each(|(a, b)| *a += c * b);
    }
    let n = norm(&v);
    if n < 1e-8 {
        return Err(Error::RankDrift {
            expected: rank,
            found: info.rank,
        });
    }
    Ok(v.into_iter().map(|a| a / n).collect())
}

fn axpy(lam: &[f64], a: f64, v: &[f64]) -> Vec<f64> {
    lam.iter().zip(v).map(|(l, x)| l + a * x).collect()
}

/// Fixed-step RK4 along the kernel field `V(λ) = P(λ) d / ‖P(λ) d‖`, where
/// `d` is the direction at the start of each step. The rank is re-checked
/// at every stage; a drift ends the curve and is recorded.
pub fn integrate_leaf(spec: &FamilySpec, seed: &[f64], opts: LeafOptions) -> Result<LeafCurve> {
    let tol = opts.foliation.kernel_tol;
    let start = fisher_outer(spec, seed)?;
    let info = kernel_basis(&start.g, tol)?;
    if info.kernel.is_empty() {
        return Err(Error::Config("kernel is trivial".into()));
    }
    let rank = info.rank;
    let mut d = info
        .kernel
        .get(opts.direction)
        .cloned()
        .ok_or_else(|| Error::Config(format!("kernel has no direction {}", opts.direction)))?;
    let mut lam = seed.to_vec();
    let mut points = vec![LeafPoint {
        s: 0.0,
        lam: lam.clone(),
        rank,
        leafwise_residual: leafwise_constancy_residual(spec, &lam, opts.foliation)?,
    }];
    let h = opts.step;
    let mut aborted = None;
    for step in 1..=opts.steps {
        let stage = |p: &[f64]| kernel_direction(spec, p, &d, rank, tol);
        let advance = || -> Result<Vec<f64>> {
            let k1 = stage(&lam)?;
            let k2 = stage(&axpy(&lam, h / 2.0, &k1))?;
            let k3 = stage(&axpy(&lam, h / 2.0, &k2))?;
            let k4 = stage(&axpy(&lam, h, &k3))?;
            Ok((0..lam.len())
                .map(|i| lam[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
                .collect())
        };
        let next = advance().and_then(|p| {
            let residual = leafwise_constancy_residual(spec, &p, opts.foliation)?;
            Ok((p, residual))
        });
        match next {
            Ok((p, residual)) => {
                d = kernel_direction(spec, &p, &d, rank, tol)?;
                lam = p;
                points.push(LeafPoint {
                    s: step as f64 * h,
                    lam: lam.clone(),
                    rank,
                    leafwise_residual: residual,
                });
            }
            Err(e) => {
                aborted = Some(e.to_string());
                break;
            }
        }
    }
    Ok(LeafCurve {
        seed: seed.to_vec(),
        points,
        aborted,
    })
}
