use std::fmt;
use std::sync::Arc;

use crate::diffops::{Jet4, ScalarField};
use crate::error::{Error, Result};
use crate::tensors::{eig_sym, SymMatrix, Tensor3, Tensor4};

/// A metric and its first two coordinate derivatives at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricJet {
    pub g: SymMatrix,
    /// `dg[i,j,k] = ∂_k g_ij`
    pub dg: Tensor3,
    /// `ddg[i,j,k,l] = ∂_k ∂_l g_ij`
    pub ddg: Tensor4,
}

/// A field of symmetric matrices, differentiable twice.
pub trait MetricField: Send + Sync {
    fn dim(&self) -> usize;
    fn metric_jet(&self, y: &[f64]) -> Result<MetricJet>;

    fn metric(&self, y: &[f64]) -> Result<SymMatrix> {
        Ok(self.metric_jet(y)?.g)
    }
}

fn check_point(dim: usize, y: &[f64]) -> Result<()> {
    if y.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: y.len(),
        });
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(())
}

/// `g_ij = ∂²φ/∂yⁱ∂yʲ`, all derivatives read from one jet of `φ`.
#[derive(Clone)]
pub struct PotentialMetric {
    phi: Arc<dyn ScalarField>,
}

impl PotentialMetric {
    pub fn new(phi: Arc<dyn ScalarField>) -> Self {
        PotentialMetric { phi }
    }

    pub(crate) fn from_jet(jet: &Jet4) -> MetricJet {
        let q = jet.dim();
        MetricJet {
            g: SymMatrix::from_fn(q, |i, j| jet.d(&[i, j])),
            dg: Tensor3::from_fn(q, |[i, j, k]| jet.d(&[i, j, k])),
            ddg: Tensor4::from_fn(q, |[i, j, k, l]| jet.d(&[i, j, k, l])),
        }
    }
}

impl fmt::Debug for PotentialMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PotentialMetric").field("dim", &self.phi.arity()).finish()
    }
}

impl MetricField for PotentialMetric {
    fn dim(&self) -> usize {
        self.phi.arity()
    }

    fn metric_jet(&self, y: &[f64]) -> Result<MetricJet> {
        check_point(self.dim(), y)?;
        Ok(Self::from_jet(&self.phi.jet_at(y)?))
    }
}

/// Metric given entry by entry as scalar fields (lower triangle, row by row:
/// `g11, g21, g22, g31, …`). Derivatives come from jets.
#[derive(Clone)]
pub struct ComponentMetric {
    dim: usize,
    entries: Vec<Arc<dyn ScalarField>>,
}

impl ComponentMetric {
    pub fn new(dim: usize, entries: Vec<Arc<dyn ScalarField>>) -> Result<Self> {
        if entries.len() != dim * (dim + 1) / 2 {
            return Err(Error::DimensionMismatch {
                expected: dim * (dim + 1) / 2,
                found: entries.len(),
            });
        }
        if let Some(bad) = entries.iter().find(|e| e.arity() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.arity(),
            });
        }
        Ok(ComponentMetric { dim, entries })
    }
}

impl MetricField for ComponentMetric {
    fn dim(&self) -> usize {
        self.dim
    }

    fn metric_jet(&self, y: &[f64]) -> Result<MetricJet> {
        check_point(self.dim, y)?;
        let q = self.dim;
        let jets = self.entries.iter().map(|e| e.jet_at(y)).collect::<Result<Vec<_>>>()?;
        let at = |i: usize, j: usize| {
            let (a, b) = if i >= j { (i, j) } else { (j, i) };
            &jets[a * (a + 1) / 2 + b]
        };
        Ok(MetricJet {
            g: SymMatrix::from_fn(q, |i, j| at(i, j).value()),
            dg: Tensor3::from_fn(q, |[i, j, k]| at(i, j).d(&[k])),
            ddg: Tensor4::from_fn(q, |[i, j, k, l]| at(i, j).d(&[k, l])),
        })
    }
}

type MatrixFn = dyn Fn(&[f64]) -> Result<SymMatrix> + Send + Sync;

/// Metric known only pointwise (e.g. a Fisher matrix from quadrature);
/// derivatives by central differences with one Richardson step.
#[derive(Clone)]
pub struct FdMetric {
    dim: usize,
    step: f64,
    eval: Arc<MatrixFn>,
}

impl FdMetric {
    /// Base step used when none is given; scaled by `max(1, |yᵢ|)`.
    pub const DEFAULT_STEP: f64 = 1e-3;

    pub fn new(dim: usize, eval: impl Fn(&[f64]) -> Result<SymMatrix> + Send + Sync + 'static) -> Self {
        FdMetric {
            dim,
            step: Self::DEFAULT_STEP,
            eval: Arc::new(eval),
        }
    }

    pub fn with_step(mut self, step: f64) -> Self {
        self.step = step;
        self
    }

    fn at(&self, y: &[f64], shifts: &[(usize, f64)]) -> Result<SymMatrix> {
        let mut p = y.to_vec();
        for &(axis, h) in shifts {
            p[axis] += h;
        }
        (self.eval)(&p)
    }

    fn first(&self, y: &[f64], k: usize, h: f64) -> Result<SymMatrix> {
        let plus = self.at(y, &[(k, h)])?;
        let minus = self.at(y, &[(k, -h)])?;
        Ok(plus.sub(&minus).scaled(0.5 / h))
    }

    fn second(&self, y: &[f64], k: usize, l: usize, hk: f64, hl: f64) -> Result<SymMatrix> {
        if k == l {
            let plus = self.at(y, &[(k, hk)])?;
            let minus = self.at(y, &[(k, -hk)])?;
            let mid = (self.eval)(y)?;
            return Ok(SymMatrix::from_fn(self.dim, |i, j| {
                (plus.get(i, j) - 2.0 * mid.get(i, j) + minus.get(i, j)) / (hk * hk)
            }));
        }
        let pp = self.at(y, &[(k, hk), (l, hl)])?;
        let pm = self.at(y, &[(k, hk), (l, -hl)])?;
        let mp = self.at(y, &[(k, -hk), (l, hl)])?;
        let mm = self.at(y, &[(k, -hk), (l, -hl)])?;
        Ok(SymMatrix::from_fn(self.dim, |i, j| {
            (pp.get(i, j) - pm.get(i, j) - mp.get(i, j) + mm.get(i, j)) / (4.0 * hk * hl)
        }))
    }
}

fn richardson(coarse: &SymMatrix, fine: &SymMatrix) -> SymMatrix {
    SymMatrix::from_fn(coarse.dim(), |i, j| (4.0 * fine.get(i, j) - coarse.get(i, j)) / 3.0)
}

impl MetricField for FdMetric {
    fn dim(&self) -> usize {
        self.dim
    }

    fn metric(&self, y: &[f64]) -> Result<SymMatrix> {
        check_point(self.dim, y)?;
        (self.eval)(y)
    }

    fn metric_jet(&self, y: &[f64]) -> Result<MetricJet> {
        check_point(self.dim, y)?;
        let q = self.dim;
        let h: Vec<f64> = y.iter().map(|v| self.step * v.abs().max(1.0)).collect();
        let g = (self.eval)(y)?;
        let mut dg = Tensor3::zeros(q);
        let mut ddg = Tensor4::zeros(q);
        for k in 0..q {
            let d = richardson(&self.first(y, k, h[k])?, &self.first(y, k, h[k] / 2.0)?);
            for i in 0..q {
                for j in 0..q {
                    dg.set([i, j, k], d.get(i, j));
                }
            }
            for l in 0..=k {
                let coarse = self.second(y, k, l, h[k], h[l])?;
                let fine = self.second(y, k, l, h[k] / 2.0, h[l] / 2.0)?;
                let dd = richardson(&coarse, &fine);
                for i in 0..q {
                    for j in 0..q {
                        ddg.set([i, j, k, l], dd.get(i, j));
                        ddg.set([i, j, l, k], dd.get(i, j));
                    }
                }
            }
        }
        Ok(MetricJet { g, dg, ddg })
    }
}

/// The block metric `g(y) ⊕ g(y)` on `2q` tube coordinates `(y, ẏ)`; it
/// ignores the fibre coordinates entirely.
#[derive(Clone)]
pub struct TubeMetric {
    base: Arc<dyn MetricField>,
}

impl TubeMetric {
    pub fn new(base: Arc<dyn MetricField>) -> Self {
        TubeMetric { base }
    }
}

impl MetricField for TubeMetric {
    fn dim(&self) -> usize {
        2 * self.base.dim()
    }

    fn metric_jet(&self, y: &[f64]) -> Result<MetricJet> {
        check_point(self.dim(), y)?;
        let q = self.base.dim();
        let base = self.base.metric_jet(&y[..q])?;
        let block = |i: usize, j: usize| (i / q == j / q).then_some((i % q, j % q));
        let n = 2 * q;
        Ok(MetricJet {
            g: SymMatrix::from_fn(n, |i, j| block(i, j).map_or(0.0, |(a, b)| base.g.get(a, b))),
            dg: Tensor3::from_fn(n, |[i, j, k]| match block(i, j) {
                Some((a, b)) if k < q => base.dg.get([a, b, k]),
                _ => 0.0,
            }),
            ddg: Tensor4::from_fn(n, |[i, j, k, l]| match block(i, j) {
                Some((a, b)) if k < q && l < q => base.ddg.get([a, b, k, l]),
                _ => 0.0,
            }),
        })
    }
}

/// `max |∂_k g_ij − ∂_i g_kj|`; vanishes for every Hessian metric in affine
/// coordinates.
pub fn codazzi_symmetry_residual(metric: &dyn MetricField, y: &[f64]) -> Result<f64> {
    let jet = metric.metric_jet(y)?;
    Ok(codazzi_symmetry_of(&jet.dg))
}

pub(crate) fn codazzi_symmetry_of(dg: &Tensor3) -> f64 {
    dg.indices()
        .map(|[i, j, k]| (dg.get([i, j, k]) - dg.get([k, j, i])).abs())
        .fold(0.0, f64::max)
}

/// Fails with [`Error::NotMetric`] unless `g` is positive definite.
pub(crate) fn require_metric(g: &SymMatrix) -> Result<()> {
    let eig = eig_sym(g)?;
    let (lo, hi) = (eig.min(), eig.max());
    if g.dim() > 0 && (hi <= 0.0 || lo <= crate::tensors::SINGULAR_TOL * hi) {
        return Err(Error::NotMetric { spectrum: eig.values });
    }
    Ok(())
}
