//! Exact small-register quantum simulation.
//!
//! Everything here is value-oriented: gates and measurements return new
//! states. Randomness is always passed in by the caller.

mod density;
mod state;

use thiserror::Error;

pub use density::{
    density_from_ensemble, fidelity_with_pure, hermitian_eigenvalues, sample_ensemble, trace_distance,
    werner_around, werner_ghz, werner_weight_for_fidelity, DensityMatrix, NoiseEnsemble, MAX_DENSITY_QUBITS,
};
pub use state::{
    apply_hadamard, apply_pauli_x, apply_pauli_z, apply_rz, branch, ghz_prime_state, ghz_state,
    local_correct_ghz_prime, measure, rotated_ghz, Branch, MeasurementBasis, StateVector, C64, MAX_QUBITS,
    ZERO_BRANCH,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QsimError {
    #[error("size error: {0}")]
    Size(String),
    #[error("qubit index {qubit} out of range for {n_qubits} qubits")]
    Index { qubit: usize, n_qubits: usize },
    #[error("dimension mismatch: {left} vs {right} qubits")]
    DimensionMismatch { left: usize, right: usize },
    #[error("state norm {0} is not 1")]
    Normalization(f64),
    #[error("invalid probability: {0}")]
    Probability(String),
    #[error("not a density matrix: {0}")]
    NotDensity(String),
    #[error("internal simulator error: {0}")]
    Internal(String),
}
