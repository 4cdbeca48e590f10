//! Dishonest behaviours injected into verifiable key agreement.

use std::collections::BTreeSet;

use rand::Rng;
use serde::Serialize;

use crate::netmodel::{extract_view, AdversaryView, Bits, Network, PartyId, RoleAssignment};
use crate::protocols::{avka_with, AvkaParams, AvkaResult, Deviation, ProtocolError, Source};
use crate::qsim::{sample_ensemble, MeasurementBasis, NoiseEnsemble, StateVector};

#[derive(Clone, Debug)]
pub enum AdversaryStrategy {
    /// Follows the protocol and records what `coalition` sees.
    HonestCurious { coalition: BTreeSet<PartyId> },
    /// Replaces the source: every emitted state is drawn from `generator`.
    DishonestSource { generator: NoiseEnsemble },
    /// A non-participant that keeps its qubit through distillation and
    /// measures it in `later_basis` whenever a KeyGen round comes up.
    WithholdingAgent { party: PartyId, later_basis: MeasurementBasis },
}

impl AdversaryStrategy {
    /// Parties whose view is returned.
    pub fn coalition(&self) -> BTreeSet<PartyId> {
        match self {
            AdversaryStrategy::HonestCurious { coalition } => coalition.clone(),
            AdversaryStrategy::DishonestSource { .. } => BTreeSet::new(),
            AdversaryStrategy::WithholdingAgent { party, .. } => BTreeSet::from([*party]),
        }
    }

    pub fn validate(&self, roles: &RoleAssignment) -> Result<(), ProtocolError> {
        let n = roles.n();
        match self {
            AdversaryStrategy::HonestCurious { coalition } => {
                if let Some(p) = coalition.iter().find(|&&p| p >= n) {
                    return Err(ProtocolError::Precondition(format!("coalition member {p} outside 0..{n}")));
                }
                if coalition.len() + 2 > n {
                    return Err(ProtocolError::Precondition(format!(
                        "coalition of {} in a network of {n}",
                        coalition.len()
                    )));
                }
            }
            AdversaryStrategy::DishonestSource { generator } => {
                if generator.n_qubits() != n {
                    return Err(ProtocolError::Precondition(format!(
                        "generator emits {} qubits for {n} parties",
                        generator.n_qubits()
                    )));
                }
            }
            AdversaryStrategy::WithholdingAgent { party, .. } => {
                if *party >= n || roles.is_participant(*party) {
                    return Err(ProtocolError::Precondition(format!(
                        "withholding agent {party} must be a non-participant"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AdversaryRun {
    pub result: AvkaResult,
    pub view: AdversaryView,
    /// The withholding agent's bit for each KeyGen round; empty otherwise.
    pub adversary_key_guess: Bits,
}

/// Runs verifiable key agreement on a fresh network seeded with `seed`, with
/// the strategy's deviation in place of the honest behaviour.
pub fn run_with_adversary(
    roles: &RoleAssignment,
    params: AvkaParams,
    strategy: &AdversaryStrategy,
    source: &Source,
    seed: u64,
) -> Result<AdversaryRun, ProtocolError> {
    strategy.validate(roles)?;
    let replaced;
    let (source, deviation) = match strategy {
        AdversaryStrategy::HonestCurious { .. } => (source, Deviation::default()),
        AdversaryStrategy::DishonestSource { generator } => {
            replaced = Source::from_ensemble(generator.clone());
            (&replaced, Deviation::default())
        }
        AdversaryStrategy::WithholdingAgent { party, later_basis } => (
            source,
            Deviation {
                withholding: Some((*party, *later_basis)),
            },
        ),
    };
    let mut net = Network::new(roles.n(), seed);
    let run = avka_with(roles, params, source, deviation, &mut net)?;
    let view = extract_view(net.transcript(), &strategy.coalition())?;
    Ok(AdversaryRun {
        result: run.result,
        view,
        adversary_key_guess: run.adversary_guess,
    })
}

pub fn dishonest_source_states<R: Rng + ?Sized>(generator: &NoiseEnsemble, count: usize, rng: &mut R) -> Vec<StateVector> {
    (0..count).map(|_| sample_ensemble(generator, rng)).collect()
}
