//! Statistical evaluation of the protocols.

mod anonymity;
mod experiment;
mod theorem1;

use serde::Serialize;
use thiserror::Error;

use crate::netmodel::NetError;
use crate::protocols::{AvkaParams, AvkaResult, ProtocolError};
use crate::qsim::QsimError;

pub use anonymity::{
    ame_runner, estimate_anonymity_tvd, leaky_ame_runner, notification_runner, AnonymityRunner, TvdEstimate,
};
pub use experiment::{
    exact_keygen_success, exact_verification_success, measurement_settings_for, pauli_expectation, reproduce_experiment,
    ConfigResult, ConfigurationTable, ExperimentConfig, ExperimentReport, RoundSetting, SettingResult, REPORTED_P_K,
    REPORTED_P_K_ERR, REPORTED_P_V, REPORTED_P_V_ERR, VERIFICATION_SETTINGS,
};
pub use theorem1::{check_theorem1, theorem1_bound, BoundCheck, MAX_EXACT_QUBITS};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error(transparent)]
    Qsim(#[from] QsimError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error("size error: {0}")]
    Size(String),
    #[error("invalid input: {0}")]
    Input(String),
}

/// Binomial standard error of a rate estimated from `n` trials.
pub fn binomial_stderr(rate: f64, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    (rate * (1.0 - rate) / n as f64).max(0.0).sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KeyRate {
    /// Mean key length over the runs.
    pub empirical_rate: f64,
    /// `L / D`.
    pub expected: f64,
    /// Allowed deviation of the mean: `4·√(L·(1/D)(1 − 1/D))`.
    pub tolerance: f64,
    pub within_ci: bool,
    pub trials: usize,
    /// Standard error of the mean key length.
    pub stderr: f64,
}

/// Compares mean key length against `L/D`.
///
/// The tolerance is four binomial standard deviations of a single run's key
/// length, so it does not shrink with the number of runs.
pub fn key_rate(results: &[AvkaResult], params: AvkaParams) -> Result<KeyRate, AnalysisError> {
    if results.is_empty() {
        return Err(AnalysisError::Input("no results".into()));
    }
    if let Some(r) = results.iter().find(|r| r.params != params) {
        return Err(AnalysisError::Input(format!(
            "result with L={} D={} among runs with L={} D={}",
            r.params.l, r.params.d, params.l, params.d
        )));
    }
    let l = params.l as f64;
    let q = params.keygen_probability();
    let lengths: Vec<f64> = results.iter().map(|r| r.key_length() as f64).collect();
    let trials = lengths.len();
    let mean = lengths.iter().sum::<f64>() / trials as f64;
    let var = if trials > 1 {
        lengths.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (trials - 1) as f64
    } else {
        0.0
    };
    let expected = l * q;
    let tolerance = 4.0 * (l * q * (1.0 - q)).sqrt();
    Ok(KeyRate {
        empirical_rate: mean,
        expected,
        tolerance,
        within_ci: (mean - expected).abs() <= tolerance,
        trials,
        stderr: (var / trials as f64).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::{Network, RoleAssignment};
    use crate::protocols::{avka, Source};

    fn runs(l: usize, d: u32, count: u64) -> (Vec<AvkaResult>, AvkaParams) {
        let roles = RoleAssignment::new(4, 1, [3]).unwrap();
        let params = AvkaParams::new(l, d).unwrap();
        let source = Source::honest(4).unwrap();
        let results = (0..count)
            .map(|s| avka(&roles, params, &source, &mut Network::new(4, s).without_recording()).unwrap())
            .collect();
        (results, params)
    }

    #[test]
    fn d1_rate_is_exactly_l() {
        let (results, params) = runs(25, 1, 5);
        let k = key_rate(&results, params).unwrap();
        assert_eq!(k.empirical_rate, 25.0);
        assert_eq!(k.tolerance, 0.0);
        assert!(k.within_ci);
    }

    #[test]
    fn rare_keygen_gives_mostly_empty_keys() {
        let (results, params) = runs(10, 1000, 200);
        let k = key_rate(&results, params).unwrap();
        let empty = results.iter().filter(|r| r.key_length() == 0).count();
        assert!(empty >= 190, "{empty}");
        assert!((k.expected - 0.01).abs() < 1e-15);
        assert!(k.within_ci);
    }

    #[test]
    fn errors() {
        assert!(key_rate(&[], AvkaParams::new(1, 1).unwrap()).is_err());
        let (results, _) = runs(5, 2, 2);
        assert!(key_rate(&results, AvkaParams::new(5, 3).unwrap()).is_err());
    }
}
