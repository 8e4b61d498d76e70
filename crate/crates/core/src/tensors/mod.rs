//! Small dense tensors and the index algebra used by the curvature code.

mod dense;
mod eigen;
mod sym;

pub use dense::{lower_index, raise_index, DenseTensor, Tensor3, Tensor4};
pub use eigen::{eig_sym, kernel_basis, sym_inverse, EigenDecomp, KernelInfo, KERNEL_FLOOR, SINGULAR_TOL};
pub use sym::SymMatrix;

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
