//! The Kähler lift of a Hessian structure to tube coordinates
//! `z = y + i·ẏ`, with metric `g^N_{ij̄}(z) = g_ij(Re z)`.
//!
//! Every lifted field depends on `Re z` only, so a holomorphic derivative
//! `∂/∂zᵏ` and an antiholomorphic one `∂/∂z̄ᵏ` both act as `½ ∂/∂yᵏ`.
//! Curvature is computed from the textbook component formula
//!
//! ```text
//! R_{ij̄kl̄} = −∂_k ∂_l̄ g_{ij̄} + g^{st̄} ∂_k g_{it̄} ∂_l̄ g_{sj̄}
//! ```
//!
//! and then multiplied by [`KAHLER_SIGN`], the one global sign that makes
//! `R^N = ½ Q` on the reference potential `−log y` at `y = 1`. Ricci is the
//! textbook contraction `g^{kl̄} R_{ij̄kl̄}` of the uncalibrated tensor, which
//! is `−¼ ∂∂ log det g`.
//!
//! The holomorphic sectional curvature uses the hermitian form `½ g^N`,
//! whose real part is the Riemannian tube metric `g ⊕ g`; it then agrees
//! with the real sectional curvature of the plane `{X, JX}` of that metric.

use std::sync::Arc;

use num_complex::Complex64;

use crate::diffops::{Potential, ScalarField};
use crate::error::{Error, Result};
use crate::hessian::{
    connection_curvature, log_det_jet, HessianPoint, LeviCivita, MetricField, PotentialMetric, TubeMetric,
};
use crate::tensors::{SymMatrix, Tensor4};

/// Global sign applied to the textbook curvature formula; see the module
/// docs. Frozen after calibration by [`calibrate_sign`].
pub const KAHLER_SIGN: f64 = -1.0;

/// A point `z = y + i·ẏ` of the tube over a Hessian base point.
#[derive(Debug, Clone)]
pub struct KahlerPoint {
    base: HessianPoint,
    fiber: Vec<f64>,
}

impl KahlerPoint {
    pub fn new(phi: Arc<dyn ScalarField>, re: &[f64], im: &[f64]) -> Result<Self> {
        if re.len() != im.len() {
            return Err(Error::DimensionMismatch {
                expected: re.len(),
                found: im.len(),
            });
        }
        Ok(KahlerPoint {
            base: HessianPoint::new(phi, re)?,
            fiber: im.to_vec(),
        })
    }

    pub fn from_base(base: HessianPoint, fiber: &[f64]) -> Result<Self> {
        if base.dim() != fiber.len() {
            return Err(Error::DimensionMismatch {
                expected: base.dim(),
                found: fiber.len(),
            });
        }
        Ok(KahlerPoint {
            base,
            fiber: fiber.to_vec(),
        })
    }

    pub fn base(&self) -> &HessianPoint {
        &self.base
    }

    pub fn fiber(&self) -> &[f64] {
        &self.fiber
    }

    pub fn z(&self) -> Vec<Complex64> {
        self.base
            .y()
            .iter()
            .zip(&self.fiber)
            .map(|(re, im)| Complex64::new(*re, *im))
            .collect()
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }
}

/// `g^N_{ij̄}`; real symmetric because the base metric is real.
pub fn kahler_metric(kp: &KahlerPoint) -> SymMatrix {
    kp.base.g().clone()
}

/// `g^N(u, v̄) = g_ij uⁱ v̄ʲ`
pub fn hermitian(g: &SymMatrix, u: &[Complex64], v: &[Complex64]) -> Complex64 {
    let q = g.dim();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..q {
        for j in 0..q {
            acc += u[i] * v[j].conj() * g.get(i, j);
        }
    }
    acc
}

/// `max |∂g^N_{ij̄}/∂zᵏ − ∂g^N_{kj̄}/∂zⁱ|`, which is half the Codazzi
/// residual of the base.
pub fn kahler_condition_residual(kp: &KahlerPoint) -> f64 {
    let dg = kp.base.third();
    dg.indices()
        .map(|[i, j, k]| 0.5 * (dg.get([i, j, k]) - dg.get([k, j, i])).abs())
        .fold(0.0, f64::max)
}

/// Uncalibrated textbook curvature `R_{ij̄kl̄}` stored at `[i, j, k, l]`.
pub fn kahler_curvature_textbook(kp: &KahlerPoint) -> Tensor4 {
    let jet = kp.base.metric_jet();
    let g_inv = kp.base.g_inv();
    let q = kp.dim();
    Tensor4::from_fn(q, |[i, j, k, l]| {
        let mut quadratic = 0.0;
        for s in 0..q {
            for t in 0..q {
                quadratic += g_inv.get(s, t) * (0.5 * jet.dg.get([i, t, k])) * (0.5 * jet.dg.get([s, j, l]));
            }
        }
        -0.25 * jet.ddg.get([i, j, k, l]) + quadratic
    })
}

/// Calibrated curvature `R^N = KAHLER_SIGN · R_textbook`.
pub fn kahler_curvature(kp: &KahlerPoint) -> Tensor4 {
    kahler_curvature_textbook(kp).scaled(KAHLER_SIGN)
}

/// The sign that maps the textbook curvature of the `−log y` lift at `y = 1`
/// onto `½ Q`.
pub fn calibrate_sign() -> Result<f64> {
    let kp = KahlerPoint::new(Arc::new(Potential::NegLogSum { dim: 1 }), &[1.0], &[0.0])?;
    let textbook = kahler_curvature_textbook(&kp).get([0, 0, 0, 0]);
    let half_q = 0.5 * crate::hessian::q_route_b(kp.base()).get([0, 0, 0, 0]);
    Ok((half_q / textbook).signum())
}

/// `Ric_{ij̄} = g^{kl̄} R_{ij̄kl̄}` of the textbook tensor.
pub fn kahler_ricci(kp: &KahlerPoint) -> SymMatrix {
    let r = kahler_curvature_textbook(kp);
    let g_inv = kp.base.g_inv();
    let q = kp.dim();
    SymMatrix::from_fn(q, |i, j| {
        let mut v = 0.0;
        for k in 0..q {
            for l in 0..q {
                v += g_inv.get(k, l) * r.get([i, j, k, l]);
            }
        }
        v
    })
}

/// Independent Ricci route: `−∂_i ∂_j̄ log det g^N = −¼ ∂_i ∂_j log det g`.
pub fn kahler_ricci_from_log_det(kp: &KahlerPoint) -> Result<SymMatrix> {
    let log_det = log_det_jet(kp.base())?;
    Ok(SymMatrix::from_fn(kp.dim(), |i, j| -0.25 * log_det.d(&[i, j])))
}

/// Holomorphic sectional curvature `R(v, v̄, v, v̄) / h(v, v̄)²` for the
/// hermitian form `h = ½ g^N`, with the textbook curvature of `h`.
pub fn holomorphic_sectional(kp: &KahlerPoint, v: &[Complex64]) -> Result<f64> {
    let q = kp.dim();
    if v.len() != q {
        return Err(Error::DimensionMismatch {
            expected: q,
            found: v.len(),
        });
    }
    if v.iter().all(|c| c.norm() == 0.0) {
        return Err(Error::ZeroVector);
    }
    let r = kahler_curvature_textbook(kp);
    let mut num = Complex64::new(0.0, 0.0);
    for [i, j, k, l] in r.indices() {
        num += v[i] * v[j].conj() * v[k] * v[l].conj() * r.get([i, j, k, l]);
    }
    // the textbook curvature of ½g is half that of g
    let h = 0.5 * hermitian(kp.base.g(), v, v).re;
    Ok(0.5 * num.re / (h * h))
}

/// Real sectional curvature of the plane `{X, JX}` for the tube metric
/// `g ⊕ g`, where `X = (Re v, Im v)` and `JX = (−Im v, Re v)`.
pub fn tube_sectional(kp: &KahlerPoint, v: &[Complex64]) -> Result<f64> {
    let q = kp.dim();
    if v.iter().all(|c| c.norm() == 0.0) {
        return Err(Error::ZeroVector);
    }
    let base: Arc<dyn MetricField> = Arc::new(PotentialMetric::new(Arc::clone(kp.base().phi())));
    let tube = TubeMetric::new(base);
    let point: Vec<f64> = kp.base().y().iter().chain(kp.fiber()).copied().collect();
    let g = tube.metric(&point)?;
    let r = connection_curvature(&LeviCivita::new(Arc::new(tube)), &point, Some(&g))?;
    let x: Vec<f64> = v.iter().map(|c| c.re).chain(v.iter().map(|c| c.im)).collect();
    let jx: Vec<f64> = v.iter().map(|c| -c.im).chain(v.iter().map(|c| c.re)).collect();
    let mut num = 0.0;
    for [i, j, k, l] in r.indices() {
        num += r.get([i, j, k, l]) * x[i] * jx[j] * x[k] * jx[l];
    }
    let (xx, yy, xy) = (g.bilinear(&x, &x), g.bilinear(&jx, &jx), g.bilinear(&x, &jx));
    debug_assert_eq!(x.len(), 2 * q);
    Ok(num / (xx * yy - xy * xy))
}

/// Residuals of the two curvature bridges at one point, and the holomorphic
/// sectional curvature along the first coordinate direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KahlerSummary {
    /// `‖R^N − ½Q‖∞`
    pub r_residual: f64,
    /// `‖Ric^N + ½β‖∞`
    pub ricci_residual: f64,
    pub holo_sectional: f64,
}

pub fn kahler_summary(kp: &KahlerPoint, q_tensor: &Tensor4, beta: &SymMatrix) -> Result<KahlerSummary> {
    let mut e1 = vec![Complex64::new(0.0, 0.0); kp.dim()];
    e1[0] = Complex64::new(1.0, 0.0);
    Ok(KahlerSummary {
        r_residual: kahler_curvature(kp).max_abs_diff(&q_tensor.scaled(0.5)),
        ricci_residual: kahler_ricci(kp).max_abs_diff(&beta.scaled(-0.5)),
        holo_sectional: holomorphic_sectional(kp, &e1)?,
    })
}
