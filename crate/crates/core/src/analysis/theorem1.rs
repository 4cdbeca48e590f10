use serde::Serialize;

use crate::netmodel::Network;
use crate::protocols::verification;
use crate::qsim::{density_from_ensemble, ghz_state, sample_ensemble, trace_distance, DensityMatrix, NoiseEnsemble};
use crate::rng::derive_seed;

use super::{binomial_stderr, AnalysisError};

/// Largest register for which ε is computed by full diagonalisation.
pub const MAX_EXACT_QUBITS: usize = 10;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundCheck {
    pub epsilon: f64,
    pub accept_rate: f64,
    pub stderr: f64,
    pub bound: f64,
    pub satisfied: bool,
}

impl BoundCheck {
    pub const CSV_HEADER: &'static str = "epsilon,accept_rate,stderr,bound,satisfied";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.epsilon, self.accept_rate, self.stderr, self.bound, self.satisfied
        )
    }
}

/// `1 − ε²/2`.
pub fn theorem1_bound(epsilon: f64) -> f64 {
    1.0 - epsilon * epsilon / 2.0
}

/// For each state: ε = d(ρ, GHZ) exactly, then `trials` runs of the
/// verification test with party 0 as verifier. State `i` runs on its own
/// network seeded from `derive_seed(seed, i)`.
pub fn check_theorem1(family: &[NoiseEnsemble], trials: usize, seed: u64) -> Result<Vec<BoundCheck>, AnalysisError> {
    if trials == 0 {
        return Err(AnalysisError::Input("trials must be at least 1".into()));
    }
    let mut targets = Vec::new();
    for e in family {
        let k = e.n_qubits();
        if k > MAX_EXACT_QUBITS {
            return Err(AnalysisError::Size(format!(
                "{k} qubits; exact trace distance is limited to {MAX_EXACT_QUBITS}"
            )));
        }
        if k < 2 {
            return Err(AnalysisError::Size(format!("verification needs at least 2 qubits, got {k}")));
        }
        let ghz = DensityMatrix::from_pure(&ghz_state(k)?)?;
        targets.push(trace_distance(&density_from_ensemble(e)?, &ghz)?);
    }

    let mut checks = Vec::with_capacity(family.len());
    for (i, (e, epsilon)) in family.iter().zip(targets).enumerate() {
        let mut net = Network::new(e.n_qubits(), derive_seed(seed, i as u64)).without_recording();
        let mut accepted = 0usize;
        for _ in 0..trials {
            let state = sample_ensemble(e, net.source());
            if verification(&state, 0, &mut net)?.accepted {
                accepted += 1;
            }
        }
        let accept_rate = accepted as f64 / trials as f64;
        let stderr = binomial_stderr(accept_rate, trials);
        let bound = theorem1_bound(epsilon);
        checks.push(BoundCheck {
            epsilon,
            accept_rate,
            stderr,
            bound,
            satisfied: accept_rate <= bound + 4.0 * stderr,
        });
    }
    Ok(checks)
}
