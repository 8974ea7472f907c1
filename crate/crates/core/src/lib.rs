//! Separable approximations of symmetric multi-user quantum broadcasts.
//!
//! A channel that hands `M` users permutation-invariant outputs is, on any
//! `k` of them, close in trace norm to a measure-and-prepare channel. This
//! crate builds such channels as Choi matrices, computes the separable
//! approximation exactly (or by Haar sampling) and evaluates the bounds on
//! the gap.
//!
//! Everything is generic over [`scalar::Real`] (`f32` or `f64`); the aliases
//! below fix `f64`.

pub mod channels;
pub mod definetti;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod montecarlo;
pub mod scalar;
pub mod symspace;

pub use channels::{
    adjoint_apply, apply, fixed_prep_channel, measure_prepare, noisy_cloner, universal_cloner,
    validate_sdi, QuantumChannel, SdiChannelSpec, SdiReport,
};
pub use definetti::{
    approx_reduced, approx_reduced_general, approx_reduced_symmetric, definetti_weight,
    induced_povm_element, mc_approx_reduced, mc_approx_reduced_general, purify_perm_invariant,
    route_for, ApproxReduction, Purification, ReductionMethod, Route,
};
pub use error::{Error, Result};
pub use linalg::{partial_trace, tensor_product, DenseOperator, FactorSubset};
pub use metrics::{
    general_bound, helstrom_perr, lemma1_bound, perr_lower_bound, reduction_report,
    single_user_fidelities, trace_distance, universal_clone_gap, universal_clone_gap_exact,
    BoundForm, BoundReport,
};
pub use symspace::{sym_basis, sym_dim, symmetrizer, HaarSampler, SymBasis};

pub use num_complex::Complex;
pub use num_rational::Ratio;

pub type Complex64 = Complex<f64>;
pub type Operator = DenseOperator<f64>;
pub type Operator32 = DenseOperator<f32>;
pub type Channel = QuantumChannel<f64>;
pub type Channel32 = QuantumChannel<f32>;
pub type Reduction = ApproxReduction<f64>;
/// Exact fractions returned by the closed-form cloning quantities.
pub type Fraction = Ratio<u64>;
