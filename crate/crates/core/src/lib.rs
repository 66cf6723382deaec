//! Spin phase-space entropy for spin-½, spin-1 and two-fermion pure states.
//!
//! A pure state is measured along x, y and z in bases that simultaneously
//! diagonalise (S_a, S²); the spin-entropy is the Shannon entropy of the
//! product of the three outcome distributions. The crate builds the
//! operators and bases, evaluates entropies directly and via closed forms,
//! compares them with the traced von Neumann entropy, and searches the
//! state families for extrema.

pub mod bases;
pub mod cli;
pub mod entropy;
pub mod linalg;
pub mod operators;
pub mod optimize;
pub mod states;
pub mod verify;

pub use bases::{build_basis, reference_basis, AxisBases, MeasurementBasis};
pub use entropy::{
    closed_form_chi, closed_form_half, closed_form_xi, probabilities, sample_estimate, shannon_entropy, spin_entropy,
    von_neumann_traced, EntropyReport, ProbabilityDistribution,
};
pub use operators::{build_operators, check_commutations, Axis, SpinOperatorSet, SpinSystem};
pub use states::{
    bell_state, chi_state, general_two_fermion, half_state, one_state, xi_state, BellState, EntangledParams,
    HalfParams, OneParams, StateVector,
};
