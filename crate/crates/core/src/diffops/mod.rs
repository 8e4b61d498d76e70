//! Forward-mode differentiation up to fourth order, plus a finite-difference
//! oracle.

mod fd;
mod field;
mod jet;
mod scalar;

pub use fd::{default_step, fd_partial, fd_partial_adaptive};
pub use field::{GenericField, Potential, ScalarField};
pub use jet::{multi_index, Jet4, MAX_ORDER};
pub use scalar::Scalar;

use crate::error::{Error, Result};

/// `∂^α f(y)` by jet propagation, exact up to floating point.
pub fn mixed_partial(f: &dyn ScalarField, y: &[f64], alpha: &[u8]) -> Result<f64> {
    let order: usize = alpha.iter().map(|&a| a as usize).sum();
    if order > MAX_ORDER {
        return Err(Error::Order {
            requested: order,
            max: MAX_ORDER,
        });
    }
    f.jet_at(y)?.derivative(alpha)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct ExpProduct;
    impl GenericField for ExpProduct {
        fn arity(&self) -> usize {
            2
        }
        fn eval<S: Scalar>(&self, y: &[S]) -> Result<S> {
            Ok((y[0].clone() * y[1].clone()).exp())
        }
    }

    #[test]
    fn square_second_derivative() {
        let phi = Potential::Quadratic { dim: 1 };
        // ½y² has second derivative 1, so y² has 2
        assert_eq!(2.0 * mixed_partial(&phi, &[3.0], &[2]).unwrap(), 2.0);
    }

    #[test]
    fn neg_log_fourth_derivative_matches_oracle() {
        let phi = Potential::NegLogSum { dim: 1 };
        let jet = mixed_partial(&phi, &[2.0], &[4]).unwrap();
        let oracle = fd_partial(&phi, &[2.0], &[4], None).unwrap();
        assert!((jet - 0.375).abs() < 1e-15);
        assert!((jet - oracle).abs() < 1e-5);
    }

    #[test]
    fn exp_product_mixed_partial() {
        let jet = mixed_partial(&ExpProduct, &[0.0, 0.0], &[1, 1]).unwrap();
        let oracle = fd_partial(&ExpProduct, &[0.0, 0.0], &[1, 1], None).unwrap();
        assert_eq!(jet, 1.0);
        assert!((oracle - 1.0).abs() < 1e-7);
    }

    #[test]
    fn order_and_domain_errors() {
        let phi = Potential::NegLogSum { dim: 1 };
        assert!(matches!(mixed_partial(&phi, &[2.0], &[5]), Err(Error::Order { .. })));
        assert!(matches!(mixed_partial(&phi, &[-1.0], &[1]), Err(Error::Domain { .. })));
    }
}
