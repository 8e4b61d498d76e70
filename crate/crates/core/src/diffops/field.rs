use super::jet::Jet4;
use super::scalar::Scalar;
use crate::error::{Error, Result};

/// A scalar function on `arity`-dimensional points that can be evaluated on
/// any [`Scalar`]. Implement this; [`ScalarField`] comes for free.
pub trait GenericField: Send + Sync {
    fn arity(&self) -> usize;
    fn eval<S: Scalar>(&self, y: &[S]) -> Result<S>;
}

/// Object-safe view of a differentiable scalar field.
pub trait ScalarField: Send + Sync {
    fn arity(&self) -> usize;
    fn eval_real(&self, y: &[f64]) -> Result<f64>;
    fn eval_jet(&self, y: &[Jet4]) -> Result<Jet4>;

    /// Jet of the field at `y` with every coordinate seeded as a variable.
    fn jet_at(&self, y: &[f64]) -> Result<Jet4> {
        check_arity(self.arity(), y.len())?;
        let jet = self.eval_jet(&Jet4::seed(y))?;
        if !jet.is_finite() {
            return Err(Error::NonFinite);
        }
        Ok(jet)
    }
}

impl<T: GenericField> ScalarField for T {
    fn arity(&self) -> usize {
        GenericField::arity(self)
    }

    fn eval_real(&self, y: &[f64]) -> Result<f64> {
        check_arity(GenericField::arity(self), y.len())?;
        self.eval(y)
    }

    fn eval_jet(&self, y: &[Jet4]) -> Result<Jet4> {
        check_arity(GenericField::arity(self), y.len())?;
        self.eval(y)
    }
}

pub(crate) fn check_arity(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// Closed-form potentials used throughout the test corpus and the CLI.
#[derive(Debug, Clone, PartialEq)]
pub enum Potential {
    /// ½ Σ yᵢ²
    Quadratic { dim: usize },
    /// −Σ log yᵢ on the positive orthant
    NegLogSum { dim: usize },
    /// Σ exp yᵢ
    ExpSum { dim: usize },
    /// −log(y_q − ½ Σ_{i<q} yᵢ²) on the region above the paraboloid
    Paraboloid { dim: usize },
}

impl GenericField for Potential {
    fn arity(&self) -> usize {
        match *self {
            Potential::Quadratic { dim }
            | Potential::NegLogSum { dim }
            | Potential::ExpSum { dim }
            | Potential::Paraboloid { dim } => dim,
        }
    }

    fn eval<S: Scalar>(&self, y: &[S]) -> Result<S> {
        let zero = y[0].constant_like(0.0);
        match self {
            Potential::Quadratic { .. } => Ok(y
                .iter()
                .fold(zero, |acc, v| acc + v.clone() * v.clone())
                * y[0].constant_like(0.5)),
            Potential::NegLogSum { .. } => y.iter().try_fold(zero, |acc, v| Ok(acc - v.try_ln()?)),
            Potential::ExpSum { .. } => Ok(y.iter().fold(zero, |acc, v| acc + v.exp())),
            Potential::Paraboloid { .. } => {
                let (last, rest) = y.split_last().unwrap();
                let half = y[0].constant_like(0.5);
                let bowl = rest.iter().fold(zero, |acc, v| acc + v.clone() * v.clone()) * half;
                Ok(-(last.clone() - bowl).try_ln()?)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neg_log_sum_value() {
        let phi = Potential::NegLogSum { dim: 2 };
        let v = phi.eval_real(&[1.0, 2.0]).unwrap();
        assert!((v + 2f64.ln()).abs() < 1e-15);
        assert!(phi.eval_real(&[1.0, -2.0]).is_err());
    }

    #[test]
    fn arity_is_checked() {
        let phi = Potential::Quadratic { dim: 2 };
        assert!(matches!(
            phi.eval_real(&[1.0]),
            Err(Error::DimensionMismatch { expected: 2, found: 1 })
        ));
    }
}
