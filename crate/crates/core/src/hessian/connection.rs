use std::sync::Arc;

use super::metric::{MetricField, MetricJet};
use crate::error::{Error, Result};
use crate::tensors::{sym_inverse, SymMatrix, Tensor3, Tensor4};

/// Christoffel symbols and their first derivatives at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionJet {
    /// `gamma[i,j,k] = Γ^i_jk`
    pub gamma: Tensor3,
    /// `dgamma[i,j,k,l] = ∂_l Γ^i_jk`
    pub dgamma: Tensor4,
}

/// An affine connection given by its Christoffel field in the adapted
/// affine chart (where the flat connection has vanishing symbols).
pub trait Connection: Send + Sync {
    fn dim(&self) -> usize;
    fn connection_jet(&self, y: &[f64]) -> Result<ConnectionJet>;

    /// Whether the field is declared symmetric in its lower indices.
    fn torsion_free(&self) -> bool {
        false
    }

    fn christoffels(&self, y: &[f64]) -> Result<Tensor3> {
        Ok(self.connection_jet(y)?.gamma)
    }
}

/// The flat connection `D` of the affine chart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Flat {
    pub dim: usize,
}

impl Connection for Flat {
    fn dim(&self) -> usize {
        self.dim
    }

    fn connection_jet(&self, y: &[f64]) -> Result<ConnectionJet> {
        check_dim(self.dim, y)?;
        Ok(ConnectionJet {
            gamma: Tensor3::zeros(self.dim),
            dgamma: Tensor4::zeros(self.dim),
        })
    }

    fn torsion_free(&self) -> bool {
        true
    }
}

fn check_dim(dim: usize, y: &[f64]) -> Result<()> {
    if y.len() == dim {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected: dim,
            found: y.len(),
        })
    }
}

/// `∂_l g^{is} = −g^{ia} ∂_l g_ab g^{bs}`
fn inverse_derivative(g_inv: &SymMatrix, dg: &Tensor3) -> Tensor3 {
    let q = g_inv.dim();
    let mut out = Tensor3::zeros(q);
    for i in 0..q {
        for s in 0..q {
            for l in 0..q {
                let mut acc = 0.0;
                for a in 0..q {
                    for b in 0..q {
                        acc += g_inv.get(i, a) * dg.get([a, b, l]) * g_inv.get(b, s);
                    }
                }
                out.set([i, s, l], -acc);
            }
        }
    }
    out
}

/// Levi-Civita connection of a metric field.
#[derive(Clone)]
pub struct LeviCivita {
    metric: Arc<dyn MetricField>,
}

impl LeviCivita {
    pub fn new(metric: Arc<dyn MetricField>) -> Self {
        LeviCivita { metric }
    }

    /// Christoffel symbols and derivatives from a precomputed metric jet.
    pub fn from_metric_jet(jet: &MetricJet) -> Result<ConnectionJet> {
        let q = jet.g.dim();
        let g_inv = sym_inverse(&jet.g)?;
        let (dg, ddg) = (&jet.dg, &jet.ddg);
        // first kind: C_sjk = ½(∂_k g_sj + ∂_j g_sk − ∂_s g_jk)
        let first = Tensor3::from_fn(q, |[s, j, k]| 0.5 * (dg.get([s, j, k]) + dg.get([s, k, j]) - dg.get([j, k, s])));
        let dfirst = Tensor4::from_fn(q, |[s, j, k, l]| {
            0.5 * (ddg.get([s, j, k, l]) + ddg.get([s, k, j, l]) - ddg.get([j, k, s, l]))
        });
        let gamma = first.contract_slot(&g_inv, 0)?;
        let d_inv = inverse_derivative(&g_inv, dg);
        let dgamma = Tensor4::from_fn(q, |[i, j, k, l]| {
            (0..q)
                .map(|s| d_inv.get([i, s, l]) * first.get([s, j, k]) + g_inv.get(i, s) * dfirst.get([s, j, k, l]))
                .sum()
        });
        Ok(ConnectionJet { gamma, dgamma })
    }
}

impl Connection for LeviCivita {
    fn dim(&self) -> usize {
        self.metric.dim()
    }

    fn connection_jet(&self, y: &[f64]) -> Result<ConnectionJet> {
        Self::from_metric_jet(&self.metric.metric_jet(y)?)
    }

    fn torsion_free(&self) -> bool {
        true
    }
}

/// The dual `D′` of a connection `D` with respect to `g`, defined by
/// `X g(Y,Z) = g(D_X Y, Z) + g(Y, D′_X Z)`.
#[derive(Clone)]
pub struct Dual {
    base: Arc<dyn Connection>,
    metric: Arc<dyn MetricField>,
}

impl Dual {
    pub fn new(base: Arc<dyn Connection>, metric: Arc<dyn MetricField>) -> Result<Self> {
        if base.dim() != metric.dim() {
            return Err(Error::DimensionMismatch {
                expected: metric.dim(),
                found: base.dim(),
            });
        }
        Ok(Dual { base, metric })
    }

    /// `Γ′^t_kj = g^{ti}(∂_k g_ij − Γ^s_ki g_sj)` with its exact derivative.
    pub fn from_jets(base: &ConnectionJet, metric: &MetricJet) -> Result<ConnectionJet> {
        let q = metric.g.dim();
        let g = &metric.g;
        let g_inv = sym_inverse(g)?;
        let (gam, dgam) = (&base.gamma, &base.dgamma);
        // m[i,k,j] = g_is Γ′^s_kj
        let m = Tensor3::from_fn(q, |[i, k, j]| {
            metric.dg.get([i, j, k]) - (0..q).map(|s| gam.get([s, k, i]) * g.get(s, j)).sum::<f64>()
        });
        let gamma = m.contract_slot(&g_inv, 0)?;
        let dm = Tensor4::from_fn(q, |[i, k, j, l]| {
            metric.ddg.get([i, j, k, l])
                - (0..q)
                    .map(|s| dgam.get([s, k, i, l]) * g.get(s, j) + gam.get([s, k, i]) * metric.dg.get([s, j, l]))
                    .sum::<f64>()
        });
        // ∂_l(g_is Γ′^s_kj) = ∂_l m_ikj, so g_is ∂_l Γ′^s_kj = ∂_l m_ikj − ∂_l g_is Γ′^s_kj
        let rhs = Tensor4::from_fn(q, |[i, k, j, l]| {
            dm.get([i, k, j, l]) - (0..q).map(|s| metric.dg.get([i, s, l]) * gamma.get([s, k, j])).sum::<f64>()
        });
        let dgamma = rhs.contract_slot(&g_inv, 0)?;
        Ok(ConnectionJet { gamma, dgamma })
    }
}

impl Connection for Dual {
    fn dim(&self) -> usize {
        self.metric.dim()
    }

    fn connection_jet(&self, y: &[f64]) -> Result<ConnectionJet> {
        let base = self.base.connection_jet(y)?;
        let metric = self.metric.metric_jet(y)?;
        Self::from_jets(&base, &metric)
    }
}

/// Torsion-free connection with Christoffel symbols quadratic in `y`:
/// `Γ^i_jk(y) = a^i_jk + b^i_jkl yˡ + ½ c^i_jklm yˡ yᵐ`, symmetric in `j,k`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialConnection {
    constant: Tensor3,
    linear: Tensor4,
    quadratic: Vec<Tensor4>,
}

impl PolynomialConnection {
    /// Symmetrises every coefficient in its lower pair; `quadratic[m]` holds
    /// the coefficients of `yᵐ` times the linear pattern.
    pub fn new(constant: Tensor3, linear: Tensor4, quadratic: Vec<Tensor4>) -> Result<Self> {
        let q = constant.dim();
        if linear.dim() != q || quadratic.len() != q || quadratic.iter().any(|t| t.dim() != q) {
            return Err(Error::DimensionMismatch {
                expected: q,
                found: linear.dim(),
            });
        }
        let sym3 = Tensor3::from_fn(q, |[i, j, k]| 0.5 * (constant.get([i, j, k]) + constant.get([i, k, j])));
        let sym4 = |t: &Tensor4| Tensor4::from_fn(q, |[i, j, k, l]| 0.5 * (t.get([i, j, k, l]) + t.get([i, k, j, l])));
        Ok(PolynomialConnection {
            constant: sym3,
            linear: sym4(&linear),
            quadratic: quadratic.iter().map(sym4).collect(),
        })
    }
}

impl Connection for PolynomialConnection {
    fn dim(&self) -> usize {
        self.constant.dim()
    }

    fn connection_jet(&self, y: &[f64]) -> Result<ConnectionJet> {
        let q = self.dim();
        check_dim(q, y)?;
        // Γ = a + b·y + ½ Σ_m yᵐ (c_m·y); ∂_l Γ = b_l + ½ c_l·y + ½ Σ_m yᵐ c_m,l
        let gamma = Tensor3::from_fn(q, |[i, j, k]| {
            let mut v = self.constant.get([i, j, k]);
            for l in 0..q {
                v += self.linear.get([i, j, k, l]) * y[l];
                for m in 0..q {
                    v += 0.5 * y[m] * self.quadratic[m].get([i, j, k, l]) * y[l];
                }
            }
            v
        });
        let dgamma = Tensor4::from_fn(q, |[i, j, k, l]| {
            let mut v = self.linear.get([i, j, k, l]);
            for m in 0..q {
                v += 0.5 * self.quadratic[l].get([i, j, k, m]) * y[m];
                v += 0.5 * y[m] * self.quadratic[m].get([i, j, k, l]);
            }
            v
        });
        Ok(ConnectionJet { gamma, dgamma })
    }

    fn torsion_free(&self) -> bool {
        true
    }
}

/// `T^i_jk = Γ^i_jk − Γ^i_kj`
pub fn connection_torsion(c: &dyn Connection, y: &[f64]) -> Result<Tensor3> {
    let gamma = c.christoffels(y)?;
    let torsion = torsion_of(&gamma);
    if c.torsion_free() {
        let worst = torsion.max_abs();
        let scale = gamma.max_abs().max(1.0);
        assert!(
            worst <= 1e-12 * scale,
            "connection declared torsion-free has torsion {worst:e}"
        );
    }
    Ok(torsion)
}

pub(crate) fn torsion_of(gamma: &Tensor3) -> Tensor3 {
    Tensor3::from_fn(gamma.dim(), |[i, j, k]| gamma.get([i, j, k]) - gamma.get([i, k, j]))
}

/// `(D_k g)_ij = ∂_k g_ij − Γ^s_ki g_sj − Γ^s_kj g_is`, stored at `[k, i, j]`.
pub fn covariant_metric_deriv(c: &dyn Connection, g: &dyn MetricField, y: &[f64]) -> Result<Tensor3> {
    let gamma = c.christoffels(y)?;
    let jet = g.metric_jet(y)?;
    Ok(covariant_metric_deriv_of(&gamma, &jet))
}

pub(crate) fn covariant_metric_deriv_of(gamma: &Tensor3, metric: &MetricJet) -> Tensor3 {
    let q = metric.g.dim();
    let g = &metric.g;
    Tensor3::from_fn(q, |[k, i, j]| {
        metric.dg.get([i, j, k])
            - (0..q)
                .map(|s| gamma.get([s, k, i]) * g.get(s, j) + gamma.get([s, k, j]) * g.get(i, s))
                .sum::<f64>()
    })
}

/// `max |(D_i g)_jk − (D_j g)_ik|`
pub fn codazzi_residual_general(c: &dyn Connection, g: &dyn MetricField, y: &[f64]) -> Result<f64> {
    let dg = covariant_metric_deriv(c, g, y)?;
    Ok(dg
        .indices()
        .map(|[i, j, k]| (dg.get([i, j, k]) - dg.get([j, i, k])).abs())
        .fold(0.0, f64::max))
}

/// `R^i_jkl = ∂_k Γ^i_lj − ∂_l Γ^i_kj + Γ^i_ks Γ^s_lj − Γ^i_ls Γ^s_kj`,
/// stored at `[i, j, k, l]`; `R(∂_k, ∂_l)∂_j = R^i_jkl ∂_i`.
pub fn curvature_of(jet: &ConnectionJet) -> Tensor4 {
    let (gam, dgam) = (&jet.gamma, &jet.dgamma);
    let q = gam.dim();
    Tensor4::from_fn(q, |[i, j, k, l]| {
        let mut v = dgam.get([i, l, j, k]) - dgam.get([i, k, j, l]);
        for s in 0..q {
            v += gam.get([i, k, s]) * gam.get([s, l, j]) - gam.get([i, l, s]) * gam.get([s, k, j]);
        }
        v
    })
}

/// Curvature tensor of `c` at `y`; with `lower = Some(g)` the first index is
/// lowered, giving `R_ijkl = g_is R^s_jkl`.
pub fn connection_curvature(c: &dyn Connection, y: &[f64], lower: Option<&SymMatrix>) -> Result<Tensor4> {
    let r = curvature_of(&c.connection_jet(y)?);
    match lower {
        Some(g) => r.contract_slot(g, 0),
        None => Ok(r),
    }
}

/// `max |g(R_D(∂_k,∂_l)∂_j, ∂_m) + g(∂_j, R_D′(∂_k,∂_l)∂_m)|`
pub fn curvature_duality_residual(
    d: &dyn Connection,
    d_dual: &dyn Connection,
    g: &dyn MetricField,
    y: &[f64],
) -> Result<f64> {
    let metric = g.metric(y)?;
    let r = connection_curvature(d, y, Some(&metric))?;
    let r_dual = connection_curvature(d_dual, y, Some(&metric))?;
    Ok(r
        .indices()
        .map(|[m, j, k, l]| (r.get([m, j, k, l]) + r_dual.get([j, m, k, l])).abs())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffops::Potential;
    use crate::hessian::metric::PotentialMetric;

    fn neg_log(dim: usize) -> Arc<dyn MetricField> {
        Arc::new(PotentialMetric::new(Arc::new(Potential::NegLogSum { dim })))
    }

    #[test]
    fn levi_civita_of_neg_log() {
        let lc = LeviCivita::new(neg_log(1));
        let gamma = lc.christoffels(&[2.0]).unwrap();
        assert!((gamma.get([0, 0, 0]) + 0.5).abs() < 1e-15);
    }

    #[test]
    fn dual_of_flat_is_twice_levi_civita() {
        let g = neg_log(1);
        let dual = Dual::new(Arc::new(Flat { dim: 1 }), g).unwrap();
        let gamma = dual.christoffels(&[2.0]).unwrap();
        assert!((gamma.get([0, 0, 0]) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn levi_civita_is_self_dual_and_metric() {
        let g = neg_log(2);
        let lc: Arc<dyn Connection> = Arc::new(LeviCivita::new(g.clone()));
        let dual = Dual::new(lc.clone(), g.clone()).unwrap();
        let y = [0.7, 1.9];
        let a = lc.connection_jet(&y).unwrap();
        let b = dual.connection_jet(&y).unwrap();
        assert!(a.gamma.max_abs_diff(&b.gamma) < 1e-12);
        assert!(a.dgamma.max_abs_diff(&b.dgamma) < 1e-12);
        assert!(covariant_metric_deriv(lc.as_ref(), g.as_ref(), &y).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn flat_connection_has_no_curvature() {
        let r = connection_curvature(&Flat { dim: 3 }, &[1.0, 2.0, 3.0], None).unwrap();
        assert_eq!(r.max_abs(), 0.0);
    }

    #[test]
    fn polynomial_connection_is_symmetric() {
        let q = 2;
        let c = PolynomialConnection::new(
            Tensor3::from_fn(q, |[i, j, k]| (i + 2 * j + 3 * k) as f64),
            Tensor4::from_fn(q, |[i, j, k, l]| (i * j + k + l) as f64 * 0.1),
            vec![Tensor4::from_fn(q, |[i, j, k, l]| (i + j * k * l) as f64 * 0.01); q],
        )
        .unwrap();
        assert_eq!(connection_torsion(&c, &[0.3, -0.2]).unwrap().max_abs(), 0.0);
    }
}
