//! Observable consequences of `ker g_F` being a foliation with a basic
//! transverse metric: constant rank, involutivity, leafwise constancy.

use serde::Serialize;

use super::family::FamilySpec;
use super::metric::{fisher_outer, DEFAULT_KERNEL_TOL};
use crate::error::{Error, Result};
use crate::hessian::{codazzi_symmetry_residual, FdMetric};
use crate::tensors::{dot, kernel_basis, norm, SymMatrix};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoliationOptions {
    /// Relative eigenvalue threshold for the kernel.
    pub kernel_tol: f64,
    /// Finite-difference step in parameter space.
    pub step: f64,
}

impl Default for FoliationOptions {
    fn default() -> Self {
        FoliationOptions {
            kernel_tol: DEFAULT_KERNEL_TOL,
            step: 1e-3,
        }
    }
}

/// Orthonormalises `vectors` in order, dropping near-dependent ones.
pub(crate) fn gram_schmidt(vectors: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for v in vectors {
        let mut w = v.clone();
        for _ in 0..2 {
            for u in &out {
                let c = dot(&w, u);
                w.iter_mut().zip(u).for_each(|(a, b)| *a -= c * b);
            }
        }
        let n = norm(&w);
        if n > 1e-10 * norm(v).max(1e-300) {
            out.push(w.into_iter().map(|a| a / n).collect());
        }
    }
    out
}

fn project(basis: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    for b in basis {
        let c = dot(b, v);
        out.iter_mut().zip(b).for_each(|(o, x)| *o += c * x);
    }
    out
}

fn shifted(lam: &[f64], dir: &[f64], t: f64) -> Vec<f64> {
    lam.iter().zip(dir).map(|(l, d)| l + t * d).collect()
}

/// Directional derivative of a vector field by Richardson-extrapolated
/// central differences.
fn directional<F>(field: &F, lam: &[f64], dir: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let central = |h: f64| -> Result<Vec<f64>> {
        let plus = field(&shifted(lam, dir, h))?;
        let minus = field(&shifted(lam, dir, -h))?;
        Ok(plus.iter().zip(&minus).map(|(p, m)| (p - m) / (2.0 * h)).collect())
    };
    let coarse = central(h)?;
    let fine = central(h / 2.0)?;
    Ok(fine.iter().zip(&coarse).map(|(f, c)| (4.0 * f - c) / 3.0).collect())
}

/// The kernel of `g_F` near a base point, as a smooth orthonormal frame:
/// `K_a(λ) = GramSchmidt(P(λ) b_a)` where `P` projects onto the kernel at
/// `λ` and `b_a` is the kernel basis at the base point.
pub struct KernelFrame<'a> {
    spec: &'a FamilySpec,
    opts: FoliationOptions,
    base: Vec<Vec<f64>>,
    complement: Vec<Vec<f64>>,
}

impl<'a> KernelFrame<'a> {
    pub fn at(spec: &'a FamilySpec, lam: &[f64], opts: FoliationOptions) -> Result<Self> {
        let info = kernel_basis(&fisher_outer(spec, lam)?.g, opts.kernel_tol)?;
        Ok(KernelFrame {
            spec,
            opts,
            base: info.kernel,
            complement: info.complement,
        })
    }

    pub fn rank(&self) -> usize {
        self.complement.len()
    }

    /// Kernel basis at the base point.
    pub fn kernel(&self) -> &[Vec<f64>] {
        &self.base
    }

    /// Orthonormal complement at the base point.
    pub fn complement(&self) -> &[Vec<f64>] {
        &self.complement
    }

    /// Kernel projector at `lam`; fails with `RankDrift` if the kernel
    /// dimension differs from the base point's.
    pub fn kernel_at(&self, lam: &[f64]) -> Result<Vec<Vec<f64>>> {
        let info = kernel_basis(&fisher_outer(self.spec, lam)?.g, self.opts.kernel_tol)?;
        if info.kernel.len() != self.base.len() {
            return Err(Error::RankDrift {
                expected: self.rank(),
                found: info.rank,
            });
        }
        Ok(info.kernel)
    }

    pub fn frame_at(&self, lam: &[f64]) -> Result<Vec<Vec<f64>>> {
        let kernel = self.kernel_at(lam)?;
        let projected: Vec<Vec<f64>> = self.base.iter().map(|b| project(&kernel, b)).collect();
        let frame = gram_schmidt(&projected);
        if frame.len() != self.base.len() {
            return Err(Error::RankDrift {
                expected: self.rank(),
                found: self.spec.param_dim() - frame.len(),
            });
        }
        Ok(frame)
    }
}

/// Largest normal component of `[X_a, X_b]` over pairs of the frame fields,
/// for any distribution given by a (not necessarily orthonormal) frame.
pub fn distribution_involutivity<F>(frame: F, lam: &[f64], h: f64) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<Vec<Vec<f64>>>,
{
    let here = frame(lam)?;
    let basis = gram_schmidt(&here);
    let mut worst = 0.0f64;
    for a in 0..here.len() {
        for b in a + 1..here.len() {
            let field_a = |p: &[f64]| -> Result<Vec<f64>> { Ok(frame(p)?.swap_remove(a)) };
            let field_b = |p: &[f64]| -> Result<Vec<f64>> { Ok(frame(p)?.swap_remove(b)) };
            // [X_a, X_b] = D_{X_a} X_b − D_{X_b} X_a
            let db = directional(&field_b, lam, &here[a], h)?;
            let da = directional(&field_a, lam, &here[b], h)?;
            let bracket: Vec<f64> = db.iter().zip(&da).map(|(x, y)| x - y).collect();
            let tangential = project(&basis, &bracket);
            let normal: Vec<f64> = bracket.iter().zip(&tangential).map(|(x, t)| x - t).collect();
            worst = worst.max(norm(&normal));
        }
    }
    Ok(worst)
}

/// Normal component of the brackets of the smooth kernel frame; 0 when the
/// kernel has dimension ≤ 1.
pub fn involutivity_residual(spec: &FamilySpec, lam: &[f64], opts: FoliationOptions) -> Result<f64> {
    let frame = KernelFrame::at(spec, lam, opts)?;
    if frame.kernel().len() < 2 {
        // still confirm the rank is stable across the stencil
        for dir in frame.kernel().iter().chain(frame.complement()) {
            frame.kernel_at(&shifted(lam, dir, opts.step))?;
            frame.kernel_at(&shifted(lam, dir, -opts.step))?;
        }
        return Ok(0.0);
    }
    distribution_involutivity(|p| frame.frame_at(p), lam, opts.step)
}

/// `max |(L_K g)(N_b, N_c)|` over kernel fields `K` and a constant normal
/// frame `N`, where
/// `(L_K g)(N_b, N_c) = ∂_K g(N_b, N_c) + g(D_{N_b} K, N_c) + g(N_b, D_{N_c} K)`.
///
/// This is the coordinate-free form of `∂_K g(Y, Z) = 0` for basic fields
/// `Y, Z`; for a constant kernel the correction terms vanish.
pub fn lie_constancy_residual<G, F>(metric: G, frame: F, normals: &[Vec<f64>], lam: &[f64], h: f64) -> Result<f64>
where
    G: Fn(&[f64]) -> Result<SymMatrix>,
    F: Fn(&[f64]) -> Result<Vec<Vec<f64>>>,
{
    let here = frame(lam)?;
    let g = metric(lam)?;
    let mut worst = 0.0f64;
    for (a, k) in here.iter().enumerate() {
        let field = |p: &[f64]| -> Result<Vec<f64>> { Ok(frame(p)?.swap_remove(a)) };
        let dk: Vec<Vec<f64>> = normals
            .iter()
            .map(|n| directional(&field, lam, n, h))
            .collect::<Result<_>>()?;
        for b in 0..normals.len() {
            for c in 0..=b {
                let (nb, nc) = (&normals[b], &normals[c]);
                let along = |p: &[f64]| -> Result<Vec<f64>> { Ok(vec![metric(p)?.bilinear(nb, nc)]) };
                let dg = directional(&along, lam, k, h)?[0];
                let lie = dg + g.bilinear(&dk[b], nc) + g.bilinear(nb, &dk[c]);
                worst = worst.max(lie.abs());
            }
        }
    }
    Ok(worst)
}

/// Leafwise constancy of `g_F`; 0 when the kernel is trivial.
pub fn leafwise_constancy_residual(spec: &FamilySpec, lam: &[f64], opts: FoliationOptions) -> Result<f64> {
    let frame = KernelFrame::at(spec, lam, opts)?;
    if frame.kernel().is_empty() {
        return Ok(0.0);
    }
    lie_constancy_residual(
        |p| Ok(fisher_outer(spec, p)?.g),
        |p| frame.frame_at(p),
        frame.complement(),
        lam,
        opts.step,
    )
}

/// `g_F` restricted to the complement of its kernel, as a field in
/// transverse coordinates `u ↦ λ + N u`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransverseReduction {
    /// Columns of `N`: orthonormal complement of the kernel at `λ`.
    pub frame: Vec<Vec<f64>>,
    /// `ĝ = Nᵀ g_F N` at `u = 0`.
    pub reduced: SymMatrix,
    /// Codazzi residual of `ĝ` for the flat connection of the `u` coordinates.
    pub codazzi_residual: f64,
}

pub fn transverse_reduce(spec: &FamilySpec, lam: &[f64], opts: FoliationOptions) -> Result<TransverseReduction> {
    let result = fisher_outer(spec, lam)?;
    let info = kernel_basis(&result.g, opts.kernel_tol)?;
    let frame = info.complement;
    let reduced = result.g.congruence(&frame);
    if frame.is_empty() {
        return Ok(TransverseReduction {
            frame,
            reduced,
            codazzi_residual: 0.0,
        });
    }
    let owned = spec.clone();
    let base = lam.to_vec();
    let columns = frame.clone();
    let field = FdMetric::new(frame.len(), move |u: &[f64]| {
        let mut p = base.clone();
        for (col, ui) in columns.iter().zip(u) {
            p.iter_mut().zip(col).for_each(|(x, c)| *x += ui * c);
        }
        Ok(fisher_outer(&owned, &p)?.g.congruence(&columns))
    })
    .with_step(opts.step);
    let codazzi_residual = codazzi_symmetry_residual(&field, &vec![0.0; frame.len()])?;
    Ok(TransverseReduction {
        frame,
        reduced,
        codazzi_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::fisher::family::{ExpressionFamily, Family, Integration, SampleSpace};

    fn reparam_bernoulli() -> FamilySpec {
        FamilySpec::linear_reparam(FamilySpec::bernoulli_logit(), vec![vec![1.0, 1.0]]).unwrap()
    }

    /// Bernoulli in `s = t1 + t2²`: curved leaves, basic metric.
    fn curved_bernoulli() -> FamilySpec {
        FamilySpec::new(
            Family::Expression(ExpressionFamily {
                log_density: parse("x*(t1 + t2^2) - log(1 + exp(t1 + t2^2))", &["x", "t1", "t2"]).unwrap(),
                sample_vars: vec!["x".into()],
                params: vec!["t1".into(), "t2".into()],
            }),
            SampleSpace::Finite {
                points: vec![vec![0.0], vec![1.0]],
            },
            Integration::ExactSum,
            None,
        )
        .unwrap()
    }

    #[test]
    fn gram_schmidt_drops_dependent() {
        let q = gram_schmidt(&[vec![1.0, 1.0], vec![2.0, 2.0], vec![0.0, 3.0]]);
        assert_eq!(q.len(), 2);
        assert!(dot(&q[0], &q[1]).abs() < 1e-15);
    }

    #[test]
    fn reparam_kernel_is_foliated() {
        let spec = reparam_bernoulli();
        let opts = FoliationOptions::default();
        assert_eq!(involutivity_residual(&spec, &[0.2, 0.5], opts).unwrap(), 0.0);
        assert!(leafwise_constancy_residual(&spec, &[0.2, 0.5], opts).unwrap() < 1e-12);
        let t = transverse_reduce(&spec, &[0.2, 0.5], opts).unwrap();
        assert_eq!(t.frame.len(), 1);
        assert_eq!(t.codazzi_residual, 0.0);
    }

    #[test]
    fn curved_leaves_pass_lie_check() {
        let spec = curved_bernoulli();
        let r = leafwise_constancy_residual(&spec, &[0.1, 0.7], FoliationOptions::default()).unwrap();
        assert!(r < 1e-9, "{r}");
    }

    #[test]
    fn non_basic_metric_is_flagged() {
        // g = e^{λ2} dλ1², kernel ∂2 is constant but g grows along it
        let metric = |p: &[f64]| Ok(SymMatrix::diagonal(&[p[1].exp(), 0.0]));
        let frame = |_: &[f64]| Ok(vec![vec![0.0, 1.0]]);
        let r = lie_constancy_residual(metric, frame, &[vec![1.0, 0.0]], &[0.0, 0.0], 1e-3).unwrap();
        assert!((r - 1.0).abs() < 1e-9);
    }

    #[test]
    fn contact_distribution_is_not_involutive() {
        // span{∂x + y ∂z, ∂y}: the bracket is −∂z
        let frame = |p: &[f64]| Ok(vec![vec![1.0, 0.0, p[1]], vec![0.0, 1.0, 0.0]]);
        let r = distribution_involutivity(frame, &[0.3, 0.2, 0.0], 1e-3).unwrap();
        let want = 1.0 / (1.0 + 0.2f64 * 0.2).sqrt();
        assert!((r - want).abs() < 1e-9, "{r}");
        let flat = |_: &[f64]| Ok(vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]);
        assert_eq!(distribution_involutivity(flat, &[0.0; 3], 1e-3).unwrap(), 0.0);
    }

    #[test]
    fn gaussian_reduction_is_not_hessian() {
        let t = transverse_reduce(&FamilySpec::gaussian(), &[0.0, 1.0], FoliationOptions::default()).unwrap();
        assert!((t.codazzi_residual - 2.0).abs() < 1e-7, "{}", t.codazzi_residual);
    }

    #[test]
    fn rank_drift_is_reported() {
        // g = 4t² σ'(t²) vanishes only at t = 0, so every stencil there drifts
        let spec = FamilySpec::new(
            Family::Expression(ExpressionFamily {
                log_density: parse("x*t^2 - log(1 + exp(t^2))", &["x", "t"]).unwrap(),
                sample_vars: vec!["x".into()],
                params: vec!["t".into()],
            }),
            SampleSpace::Finite {
                points: vec![vec![0.0], vec![1.0]],
            },
            Integration::ExactSum,
            None,
        )
        .unwrap();
        let err = involutivity_residual(&spec, &[0.0], FoliationOptions::default()).unwrap_err();
        assert!(matches!(err, Error::RankDrift { .. }), "{err}");
    }
}
