//! Closed-form constants and bounds for the excursion Betti numbers.
//!
//! [`TheoryParams`] collects, for degree `k` in `Z^d`, the constants of
//! `λ_{n,k}(u) = τ_k (2n+1)^d u^{-2b_k} e^{-a_k u²}` together with the rates
//! that govern Poisson and normal limits. [`level_schedule`] inverts `λ` up
//! to a logarithmic factor. The orthant tail brackets follow Savage's
//! inequality, and the structured matrices are the block-equicorrelated
//! covariances that appear in those brackets.

mod matrices;
mod params;
mod savage;

pub use matrices::{
    dense_eigenvalues, structured_det, structured_eig, structured_pd, EigenResult, PdReport, StructuredMatrixSpec,
};
pub use params::{
    lambda, level_schedule, ln_lambda, make_params, params_for_model, phi_m, scheduled_lambda, transition_threshold,
    InvariantCheck, TheoryParams,
};
pub use savage::{cross_polytope_tail_bracket, savage_bracket, stein_chen_bound, SavageBracket, SteinChenTerms};
