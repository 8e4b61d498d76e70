//! Fisher information of parametric families, its kernel, and the
//! foliation checks built on it.
//!
//! `l(x; λ) = log p(x; λ)` is differentiated in `λ` with jets; expectations
//! run over a declared sample space with quadrature (nodes centred and
//! scaled per `λ`), exact sums, or seeded importance sampling.

mod config;
mod expectation;
mod family;
mod foliation;
mod leaves;
mod metric;
mod natgrad;
pub mod quadrature;

pub use config::{load_family, FamilyConfig, IntegrationConfig, ReferenceConfig, SpaceConfig, SpecConfig};
pub use expectation::expectation;
pub use family::{ExpressionFamily, Family, FamilySpec, Integration, NaturalFamily, Reference, SampleSpace};
pub use foliation::{
    distribution_involutivity, involutivity_residual, leafwise_constancy_residual, lie_constancy_residual,
    transverse_reduce, FoliationOptions, KernelFrame, TransverseReduction,
};
pub use leaves::{integrate_leaf, LeafCurve, LeafOptions, LeafPoint};
pub use metric::{
    fisher_hess, fisher_outer, fisher_pair, normalization_audit, psd_and_kernel, rank_profile, FisherResult,
    RankProfile, RankVerdict, DEFAULT_KERNEL_TOL, PSD_TOL,
};
pub use natgrad::{natgrad, NatgradStep};
