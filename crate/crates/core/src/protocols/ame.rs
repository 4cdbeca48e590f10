//! Anonymous multiparty entanglement: distill a GHZ state on the participants
//! out of a GHZ state shared by the whole network.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::netmodel::{Bits, Network, PartyId, RoleAssignment};
use crate::qsim::{apply_pauli_z, MeasurementBasis, StateVector};

use super::{Forced, OutcomeSource, ProtocolError, Register, Sampled};

#[derive(Clone, Debug, Serialize)]
pub struct AmeOutcome {
    /// Alice first, then receivers ascending, then any kept qubits.
    pub participant_state: StateVector,
    pub participants: Vec<PartyId>,
    /// Non-participants that skipped their measurement and still hold a qubit.
    pub kept: Vec<PartyId>,
    /// The bit each party announced, indexed by party.
    pub announced_bits: Vec<u8>,
    /// Parties in announcement order.
    pub announcement_order: Vec<PartyId>,
    /// Whether Alice applied Z.
    pub corrected: bool,
}

fn check_input(state: &StateVector, roles: &RoleAssignment) -> Result<(), ProtocolError> {
    if state.n_qubits() != roles.n() {
        return Err(ProtocolError::Precondition(format!(
            "state has {} qubits but the network has {} parties",
            state.n_qubits(),
            roles.n()
        )));
    }
    Ok(())
}

/// X-measures every non-participant except `withholding`.
///
/// Returns the measured outcomes in ascending party order.
fn measure_non_participants(
    reg: &mut Register,
    roles: &RoleAssignment,
    withholding: Option<PartyId>,
    source: &mut impl OutcomeSource,
) -> Result<Vec<(PartyId, u8)>, ProtocolError> {
    let mut outcomes = Vec::new();
    for p in roles.non_participants() {
        if Some(p) == withholding {
            continue;
        }
        outcomes.push((p, reg.measure(p, MeasurementBasis::X, source)?));
    }
    Ok(outcomes)
}

/// Alice's phase fix followed by the canonical qubit order.
fn finish(mut reg: Register, roles: &RoleAssignment, flip: bool) -> Result<Register, ProtocolError> {
    if flip {
        let q = reg.qubit_of(roles.alice())?;
        reg.state = apply_pauli_z(&reg.state, q)?;
    }
    let mut order = roles.participants();
    order.extend(reg.owners.iter().copied().filter(|p| !roles.is_participant(*p)));
    reg.reorder(&order)?;
    Ok(reg)
}

/// Honest run.
pub fn ame(state: &StateVector, roles: &RoleAssignment, net: &mut Network) -> Result<AmeOutcome, ProtocolError> {
    ame_with(state, roles, None, net)
}

/// Run in which `withholding` (a non-participant, if any) keeps its qubit
/// unmeasured and announces a uniform random bit instead of an outcome.
pub fn ame_with(
    state: &StateVector,
    roles: &RoleAssignment,
    withholding: Option<PartyId>,
    net: &mut Network,
) -> Result<AmeOutcome, ProtocolError> {
    check_input(state, roles)?;
    if net.n() != roles.n() {
        return Err(ProtocolError::Precondition("network size differs from role assignment".into()));
    }
    if let Some(w) = withholding {
        if roles.is_participant(w) {
            return Err(ProtocolError::Precondition(format!("withholding party {w} is a participant")));
        }
    }
    let n = roles.n();
    let mut reg = Register::new(state.clone(), (0..n).collect());

    net.begin_round("ame/step1");
    let outcomes = measure_non_participants(&mut reg, roles, withholding, &mut Sampled(net.nature()))?;
    let mut announce: BTreeMap<PartyId, Bits> = BTreeMap::new();
    for (p, x) in outcomes {
        net.record_local(p, Bits::one(x));
        announce.insert(p, Bits::one(x));
    }
    for p in 0..n {
        // participants and a withholding agent announce fresh coins
        announce.entry(p).or_insert_with(|| net.draw_bits(p, 1));
    }

    net.begin_round("ame/step2");
    let announced = net.broadcast_round(announce)?;
    let mut announced_bits = vec![0u8; n];
    for a in &announced {
        announced_bits[a.party] = a.bits.0[0];
    }

    // Alice knows who the non-participants are
    let flip = roles
        .non_participants()
        .iter()
        .fold(0u8, |acc, &p| acc ^ announced_bits[p])
        == 1;
    let reg = finish(reg, roles, flip)?;
    let participants = roles.participants();
    let kept = reg.owners[participants.len()..].to_vec();
    Ok(AmeOutcome {
        participant_state: reg.state,
        participants,
        kept,
        announced_bits,
        announcement_order: announced.iter().map(|a| a.party).collect(),
        corrected: flip,
    })
}

/// One deterministic branch: `outcomes[i]` is the X outcome of the `i`-th
/// non-participant (ascending). Returns the branch probability and the
/// corrected participant state.
pub fn ame_branch(
    state: &StateVector,
    roles: &RoleAssignment,
    outcomes: &[u8],
) -> Result<(f64, StateVector), ProtocolError> {
    check_input(state, roles)?;
    if outcomes.len() != roles.non_participants().len() {
        return Err(ProtocolError::Precondition(format!(
            "{} outcomes for {} non-participants",
            outcomes.len(),
            roles.non_participants().len()
        )));
    }
    let mut reg = Register::new(state.clone(), (0..roles.n()).collect());
    let mut forced = Forced::new(outcomes);
    let measured = measure_non_participants(&mut reg, roles, None, &mut forced)?;
    let flip = measured.iter().fold(0u8, |acc, (_, x)| acc ^ x) == 1;
    let reg = finish(reg, roles, flip)?;
    Ok((forced.probability, reg.state))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::ghz_state;

    #[test]
    fn everyone_participates_means_no_measurement() {
        let roles = RoleAssignment::new(3, 0, [1, 2]).unwrap();
        let g = ghz_state(3).unwrap();
        let out = ame(&g, &roles, &mut Network::new(3, 1)).unwrap();
        assert!(!out.corrected);
        assert_eq!(out.participant_state, g);
        assert!(out.kept.is_empty());
    }

    #[test]
    fn n4_three_participants_every_outcome() {
        // Alice = 1, participants {1,2,3}; party 0 is the only non-participant
        let roles = RoleAssignment::new(4, 1, [2, 3]).unwrap();
        let g = ghz_state(4).unwrap();
        let g3 = ghz_state(3).unwrap();
        for x in 0..2u8 {
            let (p, s) = ame_branch(&g, &roles, &[x]).unwrap();
            assert!((p - 0.5).abs() < 1e-12);
            assert!((s.fidelity(&g3).unwrap() - 1.0).abs() < 1e-12);
        }
        for seed in 0..20 {
            let out = ame(&g, &roles, &mut Network::new(4, seed)).unwrap();
            assert!((out.participant_state.fidelity(&g3).unwrap() - 1.0).abs() < 1e-12);
            assert_eq!(out.corrected, out.announced_bits[0] == 1);
        }
    }

    #[test]
    fn n5_bell_pair_over_all_branches() {
        let roles = RoleAssignment::new(5, 3, [0]).unwrap();
        let g = ghz_state(5).unwrap();
        let bell = ghz_state(2).unwrap();
        let mut total = 0.0;
        for b in 0..8u8 {
            let outcomes = [b & 1, (b >> 1) & 1, (b >> 2) & 1];
            let (p, s) = ame_branch(&g, &roles, &outcomes).unwrap();
            assert!((p - 0.125).abs() < 1e-12);
            assert!((s.inner(&bell).unwrap().re - 1.0).abs() < 1e-12);
            total += p;
        }
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn withholding_party_keeps_its_qubit() {
        let roles = RoleAssignment::new(5, 0, [2, 4]).unwrap();
        let g = ghz_state(5).unwrap();
        let out = ame_with(&g, &roles, Some(3), &mut Network::new(5, 8)).unwrap();
        assert_eq!(out.kept, vec![3]);
        assert_eq!(out.participant_state.n_qubits(), 4);
        // still a GHZ state up to a relative phase of ±1
        let plus = ghz_state(4).unwrap();
        let minus = apply_pauli_z(&plus, 0).unwrap();
        let f = out.participant_state.fidelity(&plus).unwrap() + out.participant_state.fidelity(&minus).unwrap();
        assert!((f - 1.0).abs() < 1e-12);
        assert!(ame_with(&g, &roles, Some(2), &mut Network::new(5, 8)).is_err());
    }

    #[test]
    fn wrong_register_size() {
        let roles = RoleAssignment::new(4, 0, [1]).unwrap();
        assert!(ame(&ghz_state(3).unwrap(), &roles, &mut Network::new(4, 0)).is_err());
        assert!(ame_branch(&ghz_state(4).unwrap(), &roles, &[0]).is_err());
    }

    #[test]
    fn silenced_party_aborts() {
        let roles = RoleAssignment::new(4, 0, [1]).unwrap();
        let mut net = Network::new(4, 0);
        net.silence(3);
        let err = ame(&ghz_state(4).unwrap(), &roles, &mut net).unwrap_err();
        assert!(err.is_abort());
    }

    /// Branch probabilities are uniform, so the announced vector (outcomes of
    /// non-participants, coins of participants) is uniform on {0,1}^n.
    #[test]
    fn announced_bits_uniform_by_branch_enumeration() {
        for n in 2..=6usize {
            let g = ghz_state(n).unwrap();
            let roles = RoleAssignment::new(n, 0, [1]).unwrap();
            let k = n - 2;
            for b in 0..(1u32 << k) {
                let outcomes: Vec<u8> = (0..k).map(|i| ((b >> i) & 1) as u8).collect();
                let (p, _) = ame_branch(&g, &roles, &outcomes).unwrap();
                assert!((p - 1.0 / (1u32 << k) as f64).abs() < 1e-12);
            }
        }
    }
}
