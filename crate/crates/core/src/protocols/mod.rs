//! The five protocols, run step by step over [`crate::netmodel`] and [`crate::qsim`].
//!
//! Qubit `i` of an `n`-qubit source state belongs to party `i`. After
//! distillation the participants' register is ordered Alice first, then the
//! receivers ascending; qubits kept by a deviating party follow.

mod ame;
mod keyagree;
mod notification;
mod verification;

use rand::Rng;
use thiserror::Error;

use crate::netmodel::{NetError, PartyId};
use crate::qsim::{branch, measure, MeasurementBasis, QsimError, StateVector};

pub use ame::{ame, ame_branch, ame_with, AmeOutcome};
pub use keyagree::{
    aka, avka, avka_with, keygen_round, AkaOutcome, AvkaParams, AvkaResult, AvkaRound, AvkaRun, Deviation, RoundType,
    Source,
};
pub use notification::{notification, share_row, NotificationOutcome, ShareTable};
pub use verification::{parity_test, verification, verify_participants, VerificationRecord};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error(transparent)]
    Qsim(#[from] QsimError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error("precondition violated: {0}")]
    Precondition(String),
}

impl ProtocolError {
    pub fn is_abort(&self) -> bool {
        matches!(self, ProtocolError::Net(NetError::Abort { .. }))
    }
}

/// Decides measurement outcomes: sampled from the Born rule, or forced to a
/// prescribed branch (for exhaustive enumeration).
pub trait OutcomeSource {
    fn measure(&mut self, s: &StateVector, qubit: usize, basis: MeasurementBasis) -> Result<(u8, StateVector), QsimError>;
}

pub struct Sampled<'a, R: Rng + ?Sized>(pub &'a mut R);

impl<R: Rng + ?Sized> OutcomeSource for Sampled<'_, R> {
    fn measure(&mut self, s: &StateVector, qubit: usize, basis: MeasurementBasis) -> Result<(u8, StateVector), QsimError> {
        measure(s, qubit, basis, self.0)
    }
}

/// Replays a fixed outcome sequence and accumulates the branch probability.
#[derive(Debug)]
pub struct Forced<'a> {
    outcomes: &'a [u8],
    next: usize,
    pub probability: f64,
}

impl<'a> Forced<'a> {
    pub fn new(outcomes: &'a [u8]) -> Self {
        Forced {
            outcomes,
            next: 0,
            probability: 1.0,
        }
    }
}

impl OutcomeSource for Forced<'_> {
    fn measure(&mut self, s: &StateVector, qubit: usize, basis: MeasurementBasis) -> Result<(u8, StateVector), QsimError> {
        let outcome = *self
            .outcomes
            .get(self.next)
            .ok_or_else(|| QsimError::Internal("forced outcome sequence exhausted".into()))?;
        self.next += 1;
        let b = branch(s, qubit, basis, outcome)?;
        self.probability *= b.probability;
        match b.post_state {
            Some(post) => Ok((outcome, post)),
            None => Err(QsimError::Probability(format!("forced outcome {outcome} has probability zero"))),
        }
    }
}

/// A state together with the party holding each of its qubits.
#[derive(Clone, Debug)]
pub(crate) struct Register {
    pub state: StateVector,
    pub owners: Vec<PartyId>,
}

impl Register {
    pub fn new(state: StateVector, owners: Vec<PartyId>) -> Self {
        debug_assert_eq!(state.n_qubits(), owners.len());
        Register { state, owners }
    }

    pub fn qubit_of(&self, party: PartyId) -> Result<usize, ProtocolError> {
        self.owners
            .iter()
            .position(|&p| p == party)
            .ok_or_else(|| ProtocolError::Precondition(format!("party {party} holds no qubit")))
    }

    /// Measures `party`'s qubit and removes it from the register.
    pub fn measure(
        &mut self,
        party: PartyId,
        basis: MeasurementBasis,
        source: &mut impl OutcomeSource,
    ) -> Result<u8, ProtocolError> {
        let q = self.qubit_of(party)?;
        let (bit, post) = source.measure(&self.state, q, basis)?;
        self.state = post;
        self.owners.remove(q);
        Ok(bit)
    }

    /// Reorders qubits to follow `order` (a permutation of the owners).
    pub fn reorder(&mut self, order: &[PartyId]) -> Result<(), ProtocolError> {
        let perm = order.iter().map(|&p| self.qubit_of(p)).collect::<Result<Vec<_>, _>>()?;
        self.state = self.state.permute_qubits(&perm)?;
        self.owners = order.to_vec();
        Ok(())
    }
}

pub(crate) fn basis_for(bit: u8) -> MeasurementBasis {
    if bit == 0 {
        MeasurementBasis::X
    } else {
        MeasurementBasis::Y
    }
}
