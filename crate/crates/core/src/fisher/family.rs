use std::f64::consts::PI;

use crate::diffops::Scalar;
use crate::error::{Error, Result};
use crate::expr::ExprAst;

/// Where the random variable lives.
#[derive(Debug, Clone, PartialEq)]
pub enum SampleSpace {
    /// Finitely many points, each of the same dimension.
    Finite { points: Vec<Vec<f64>> },
    RealLine,
    /// `[lower, ∞)`
    HalfLine { lower: f64 },
    /// `[lower, upper]`
    Interval { lower: f64, upper: f64 },
    /// Cartesian product; coordinates are concatenated in factor order.
    Product(Vec<SampleSpace>),
}

impl SampleSpace {
    /// Dimension of a sample point.
    pub fn dim(&self) -> usize {
        match self {
            SampleSpace::Finite { points } => points.first().map_or(0, Vec::len),
            SampleSpace::RealLine | SampleSpace::HalfLine { .. } | SampleSpace::Interval { .. } => 1,
            SampleSpace::Product(factors) => factors.iter().map(SampleSpace::dim).sum(),
        }
    }

    /// Number of continuous axes, each of which takes one reference map.
    pub fn continuous_axes(&self) -> usize {
        match self {
            SampleSpace::Finite { .. } => 0,
            SampleSpace::RealLine | SampleSpace::HalfLine { .. } | SampleSpace::Interval { .. } => 1,
            SampleSpace::Product(factors) => factors.iter().map(SampleSpace::continuous_axes).sum(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.continuous_axes() == 0
    }

    pub(crate) fn validate(&self) -> Result<()> {
        match self {
            SampleSpace::Finite { points } => {
                let d = points.first().map(Vec::len).ok_or_else(|| Error::Config("finite sample space is empty".into()))?;
                if points.iter().any(|p| p.len() != d) {
                    return Err(Error::Config("finite sample points differ in dimension".into()));
                }
                Ok(())
            }
            SampleSpace::RealLine => Ok(()),
            SampleSpace::HalfLine { lower } if lower.is_finite() => Ok(()),
            SampleSpace::Interval { lower, upper } if lower < upper && upper.is_finite() && lower.is_finite() => Ok(()),
            SampleSpace::Product(factors) if !factors.is_empty() => factors.iter().try_for_each(SampleSpace::validate),
            other => Err(Error::Config(format!("invalid sample space {other:?}"))),
        }
    }
}

/// How expectations are computed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Integration {
    /// Exact sums on finite factors, Gauss–Hermite 64 on the real line,
    /// Gauss–Legendre 128 on half-lines and intervals.
    Default,
    ExactSum,
    GaussHermite { n: usize },
    GaussLegendre { n: usize },
    MonteCarlo { n: usize, seed: u64 },
}

impl Integration {
    pub fn tag(&self) -> String {
        match self {
            Integration::Default => "default".into(),
            Integration::ExactSum => "exact-sum".into(),
            Integration::GaussHermite { n } => format!("gauss-hermite({n})"),
            Integration::GaussLegendre { n } => format!("gauss-legendre({n})"),
            Integration::MonteCarlo { n, seed } => format!("monte-carlo({n}, seed {seed})"),
        }
    }
}

/// Exponential family `l = Σ θ_i T_i(x) + log h(x) − ψ(θ)` in natural
/// parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct NaturalFamily {
    /// Log-partition over the parameter names.
    pub psi: ExprAst,
    /// Sufficient statistics over the sample variables.
    pub statistics: Vec<ExprAst>,
    /// Log base measure over the sample variables.
    pub log_base: Option<ExprAst>,
}

/// Log-density given as one expression over sample variables followed by
/// parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpressionFamily {
    pub log_density: ExprAst,
    pub sample_vars: Vec<String>,
    pub params: Vec<String>,
}

/// Reference maps for the continuous axes, as expressions over the
/// parameters: the quadrature is centred at `center` with width `scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct Reference {
    pub center: Vec<ExprAst>,
    pub scale: Vec<ExprAst>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// `N(μ, σ²)` with parameters `(μ, σ)`.
    Gaussian,
    /// `P(x = 1) = 1/(1 + e^{−θ})` on `{0, 1}`.
    BernoulliLogit,
    /// `P(x = j) ∝ e^{θ_j}`, `j = 0..k`, with all `k` logits as parameters.
    CategoricalSoftmax { k: usize },
    /// `r e^{−r x}` on `[0, ∞)`.
    ExponentialRate,
    Natural(NaturalFamily),
    /// The inner family at parameters `A λ`; `matrix` is `A`, row by row.
    LinearReparam { inner: Box<Family>, matrix: Vec<Vec<f64>> },
    Expression(ExpressionFamily),
}

impl Family {
    pub fn param_dim(&self) -> usize {
        match self {
            Family::Gaussian => 2,
            Family::BernoulliLogit | Family::ExponentialRate => 1,
            Family::CategoricalSoftmax { k } => *k,
            Family::Natural(n) => n.psi.vars().len(),
            Family::LinearReparam { matrix, .. } => matrix.first().map_or(0, Vec::len),
            Family::Expression(e) => e.params.len(),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Family::Gaussian => "gaussian".into(),
            Family::BernoulliLogit => "bernoulli-logit".into(),
            Family::CategoricalSoftmax { k } => format!("categorical-softmax({k})"),
            Family::ExponentialRate => "exponential-rate".into(),
            Family::Natural(_) => "exp-family-natural".into(),
            Family::LinearReparam { inner, .. } => format!("linear-reparam({})", inner.name()),
            Family::Expression(_) => "expression".into(),
        }
    }

    /// The sample space a built-in family lives on; `None` for families that
    /// need one declared.
    pub fn default_space(&self) -> Option<SampleSpace> {
        match self {
            Family::Gaussian => Some(SampleSpace::RealLine),
            Family::BernoulliLogit => Some(SampleSpace::Finite {
                points: vec![vec![0.0], vec![1.0]],
            }),
            Family::CategoricalSoftmax { k } => Some(SampleSpace::Finite {
                points: (0..*k).map(|j| vec![j as f64]).collect(),
            }),
            Family::ExponentialRate => Some(SampleSpace::HalfLine { lower: 0.0 }),
            Family::LinearReparam { inner, .. } => inner.default_space(),
            Family::Natural(_) | Family::Expression(_) => None,
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        match self {
            Family::CategoricalSoftmax { k } if *k < 2 => Err(Error::Config("categorical needs k ≥ 2".into())),
            Family::LinearReparam { inner, matrix } => {
                inner.validate()?;
                let cols = matrix.first().map_or(0, Vec::len);
                if matrix.len() != inner.param_dim() || cols == 0 || matrix.iter().any(|r| r.len() != cols) {
                    return Err(Error::Config(format!(
                        "reparametrisation matrix must be {} × m with m ≥ 1",
                        inner.param_dim()
                    )));
                }
                if matrix.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(Error::Config("reparametrisation matrix has non-finite entries".into()));
                }
                Ok(())
            }
            Family::Natural(n) => {
                if n.statistics.len() != n.psi.vars().len() {
                    return Err(Error::Config(format!(
                        "{} statistics for {} natural parameters",
                        n.statistics.len(),
                        n.psi.vars().len()
                    )));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// `l(x; λ) = log p(x; λ)`.
    pub fn log_density<S: Scalar>(&self, x: &[f64], lam: &[S]) -> Result<S> {
        if lam.len() != self.param_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.param_dim(),
                found: lam.len(),
            });
        }
        let c = |v: f64| lam[0].constant_like(v);
        match self {
            Family::Gaussian => {
                let (mu, sigma) = (&lam[0], &lam[1]);
                if sigma.real() <= 0.0 {
                    return Err(Error::domain("sigma", sigma.real()));
                }
                let z = (c(x[0]) - mu.clone()).try_div(sigma)?;
                Ok(c(-0.5) * z.clone() * z - sigma.try_ln()? - c(0.5 * (2.0 * PI).ln()))
            }
            Family::BernoulliLogit => {
                let theta = &lam[0];
                Ok(c(x[0]) * theta.clone() - softplus(theta)?)
            }
            Family::CategoricalSoftmax { k } => {
                let j = x[0] as usize;
                if x[0] != j as f64 || j >= *k {
                    return Err(Error::domain("category", x[0]));
                }
                Ok(lam[j].clone() - log_sum_exp(lam)?)
            }
            Family::ExponentialRate => {
                let r = &lam[0];
                Ok(r.try_ln()? - r.clone() * c(x[0]))
            }
            Family::Natural(n) => {
                let mut acc = -n.psi.eval(lam)?;
                let xs: Vec<f64> = x.to_vec();
                for (theta, t) in lam.iter().zip(&n.statistics) {
                    acc = acc + theta.clone() * c(t.eval(&xs)?);
                }
                if let Some(h) = &n.log_base {
                    acc = acc + c(h.eval(&xs)?);
                }
                Ok(acc)
            }
            Family::LinearReparam { inner, matrix } => {
                let eta: Vec<S> = matrix
                    .iter()
                    .map(|row| {
                        row.iter()
                            .zip(lam)
                            .fold(c(0.0), |acc, (a, l)| acc + c(*a) * l.clone())
                    })
                    .collect();
                inner.log_density(x, &eta)
            }
            Family::Expression(e) => {
                let mut values: Vec<S> = x.iter().map(|v| c(*v)).collect();
                values.extend(lam.iter().cloned());
                e.log_density.eval(&values)
            }
        }
    }

    /// Built-in reference maps `(center, scale)` per continuous axis at
    /// parameters `lam`; `None` when the family defers to configuration.
    pub(crate) fn builtin_reference(&self, lam: &[f64]) -> Option<Vec<(f64, f64)>> {
        match self {
            Family::Gaussian => Some(vec![(lam[0], std::f64::consts::SQRT_2 * lam[1].abs())]),
            Family::ExponentialRate => Some(vec![(0.0, 1.0 / lam[0].abs())]),
            Family::BernoulliLogit | Family::CategoricalSoftmax { .. } => Some(Vec::new()),
            Family::LinearReparam { inner, matrix } => {
                let eta: Vec<f64> = matrix
                    .iter()
                    .map(|row| row.iter().zip(lam).map(|(a, l)| a * l).sum())
                    .collect();
                inner.builtin_reference(&eta)
            }
            Family::Natural(_) | Family::Expression(_) => None,
        }
    }
}

/// `log(1 + e^θ)`, shifted for large positive θ.
fn softplus<S: Scalar>(theta: &S) -> Result<S> {
    let one = theta.constant_like(1.0);
    if theta.real() > 30.0 {
        // log(1 + e^θ) = θ + log(1 + e^{−θ})
        Ok(theta.clone() + (one + (-theta.clone()).exp()).try_ln()?)
    } else {
        (one + theta.exp()).try_ln()
    }
}

/// `log Σ e^{θ_i}` with the largest real part factored out.
fn log_sum_exp<S: Scalar>(theta: &[S]) -> Result<S> {
    let top = theta.iter().map(Scalar::real).fold(f64::NEG_INFINITY, f64::max);
    let shift = theta[0].constant_like(top);
    let sum = theta
        .iter()
        .fold(theta[0].constant_like(0.0), |acc, t| acc + (t.clone() - shift.clone()).exp());
    Ok(sum.try_ln()? + shift)
}

/// A family with its sample space, integration strategy and (for
/// expression families) reference maps.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilySpec {
    pub family: Family,
    pub space: SampleSpace,
    pub integration: Integration,
    pub reference: Option<Reference>,
}

impl FamilySpec {
    /// A built-in family on its own sample space with default integration.
    pub fn builtin(family: Family) -> Result<Self> {
        let space = family
            .default_space()
            .ok_or_else(|| Error::Config(format!("{} needs an explicit sample space", family.name())))?;
        Self::new(family, space, Integration::Default, None)
    }

    pub fn new(family: Family, space: SampleSpace, integration: Integration, reference: Option<Reference>) -> Result<Self> {
        family.validate()?;
        space.validate()?;
        if let Some(r) = &reference {
            let axes = space.continuous_axes();
            if r.center.len() != axes || r.scale.len() != axes {
                return Err(Error::Config(format!(
                    "reference needs one center and one scale per continuous axis ({axes})"
                )));
            }
        }
        if let Family::Expression(e) = &family {
            if e.sample_vars.len() != space.dim() {
                return Err(Error::Config(format!(
                    "{} sample variables for a {}-dimensional sample space",
                    e.sample_vars.len(),
                    space.dim()
                )));
            }
        }
        Ok(FamilySpec {
            family,
            space,
            integration,
            reference,
        })
    }

    pub fn gaussian() -> Self {
        Self::builtin(Family::Gaussian).expect("built-in")
    }

    pub fn bernoulli_logit() -> Self {
        Self::builtin(Family::BernoulliLogit).expect("built-in")
    }

    pub fn categorical_softmax(k: usize) -> Result<Self> {
        Self::builtin(Family::CategoricalSoftmax { k })
    }

    pub fn exponential_rate() -> Self {
        Self::builtin(Family::ExponentialRate).expect("built-in")
    }

    /// The inner spec reparametrised by `λ ↦ A λ`.
    pub fn linear_reparam(inner: FamilySpec, matrix: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(
            Family::LinearReparam {
                inner: Box::new(inner.family),
                matrix,
            },
            inner.space,
            inner.integration,
            inner.reference,
        )
    }

    pub fn with_integration(mut self, integration: Integration) -> Self {
        self.integration = integration;
        self
    }

    pub fn param_dim(&self) -> usize {
        self.family.param_dim()
    }

    /// Reference `(center, scale)` per continuous axis at `lam`.
    pub(crate) fn reference_at(&self, lam: &[f64]) -> Result<Vec<(f64, f64)>> {
        let axes = self.space.continuous_axes();
        if let Some(r) = &self.reference {
            return r
                .center
                .iter()
                .zip(&r.scale)
                .map(|(c, s)| {
                    let scale = s.eval(lam)?;
                    if !(scale > 0.0 && scale.is_finite()) {
                        return Err(Error::domain("reference scale", scale));
                    }
                    Ok((c.eval(lam)?, scale))
                })
                .collect();
        }
        match self.family.builtin_reference(lam) {
            Some(r) if r.len() == axes => {
                if r.iter().any(|(c, s)| !c.is_finite() || !(*s > 0.0 && s.is_finite())) {
                    return Err(Error::domain("reference scale", r.iter().map(|p| p.1).fold(f64::NAN, f64::min)));
                }
                Ok(r)
            }
            _ => Ok(vec![(0.0, 1.0); axes]),
        }
    }
}
