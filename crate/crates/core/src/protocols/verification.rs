//! GHZ verification by a random even-Y stabilizer test.

use serde::Serialize;

use crate::netmodel::{Bits, Network, PartyId};
use crate::qsim::StateVector;

use super::{basis_for, ProtocolError, Register, Sampled};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VerificationRecord {
    /// Holder of each tested qubit, in register order.
    pub parties: Vec<PartyId>,
    pub verifier: PartyId,
    /// `b_i` after the verifier's reset: 0 = X, 1 = Y.
    pub basis_bits: Vec<u8>,
    /// `m_i`: 0 for the +1 eigenvalue.
    pub outcomes: Vec<u8>,
    pub accepted: bool,
}

/// `Σ m_i ≡ ½ Σ b_i (mod 2)`, with `Σ b_i` counted over the integers.
///
/// Returns `None` when `Σ b_i` is odd.
pub fn parity_test(basis_bits: &[u8], outcomes: &[u8]) -> Option<bool> {
    let ys: usize = basis_bits.iter().map(|&b| b as usize).sum();
    if ys % 2 == 1 {
        return None;
    }
    let m = outcomes.iter().fold(0u8, |acc, x| acc ^ x);
    Some(m as usize == (ys / 2) % 2)
}

/// Verification on a `k`-party network holding a `k`-qubit state.
pub fn verification(state: &StateVector, verifier: usize, net: &mut Network) -> Result<VerificationRecord, ProtocolError> {
    let k = state.n_qubits();
    if net.n() != k {
        return Err(ProtocolError::Precondition(format!(
            "{k}-qubit state on a network of {}",
            net.n()
        )));
    }
    let parties: Vec<PartyId> = (0..k).collect();
    verify_participants(state, &parties, verifier, net)
}

/// Verification of the qubits held by `parties` (qubit `i` belongs to
/// `parties[i]`). Any further qubits in `state` are left untouched. Every
/// other network party announces two random bits.
pub fn verify_participants(
    state: &StateVector,
    parties: &[PartyId],
    verifier: PartyId,
    net: &mut Network,
) -> Result<VerificationRecord, ProtocolError> {
    if parties.len() > state.n_qubits() {
        return Err(ProtocolError::Precondition(format!(
            "{} parties for a {}-qubit state",
            parties.len(),
            state.n_qubits()
        )));
    }
    let Some(v_idx) = parties.iter().position(|&p| p == verifier) else {
        return Err(ProtocolError::Precondition(format!("verifier {verifier} holds no qubit")));
    };
    let mut owners = parties.to_vec();
    // extra qubits get owner ids that no real party has
    owners.extend((0..state.n_qubits() - parties.len()).map(|i| usize::MAX - i));
    let mut reg = Register::new(state.clone(), owners);

    net.begin_round("verification/step1");
    let mut basis_bits = vec![0u8; parties.len()];
    let mut outcomes = vec![0u8; parties.len()];
    for (i, &p) in parties.iter().enumerate() {
        if i == v_idx {
            continue;
        }
        let b = net.draw_bits(p, 1).0[0];
        let m = reg.measure(p, basis_for(b), &mut Sampled(net.nature()))?;
        net.record_local(p, Bits::one(m));
        basis_bits[i] = b;
        outcomes[i] = m;
    }
    // the verifier and everyone outside the test announce random (b, m)
    let mut announce = std::collections::BTreeMap::new();
    for p in 0..net.n() {
        let bits = match parties.iter().position(|&q| q == p) {
            Some(i) if i != v_idx => Bits(vec![basis_bits[i], outcomes[i]]),
            _ => net.draw_bits(p, 2),
        };
        announce.insert(p, bits);
    }

    net.begin_round("verification/step2");
    let announced = net.broadcast_round(announce)?;
    let heard: Vec<(PartyId, Bits)> = announced.into_iter().map(|a| (a.party, a.bits)).collect();

    // reset b_v from the participants' announcements only
    let b_v = parties
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != v_idx)
        .map(|(_, p)| heard.iter().find(|(q, _)| q == p).expect("participant announced").1 .0[0])
        .fold(0u8, |acc, b| acc ^ b);
    let m_v = reg.measure(verifier, basis_for(b_v), &mut Sampled(net.nature()))?;
    net.record_local(verifier, Bits(vec![b_v, m_v]));
    basis_bits[v_idx] = b_v;
    outcomes[v_idx] = m_v;

    let accepted = parity_test(&basis_bits, &outcomes)
        .ok_or_else(|| ProtocolError::Precondition("odd number of Y measurements after reset".into()))?;
    Ok(VerificationRecord {
        parties: parties.to_vec(),
        verifier,
        basis_bits,
        outcomes,
        accepted,
    })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::qsim::{ghz_state, rotated_ghz};

    fn acceptance_rate(state: &StateVector, trials: usize, seed: u64) -> f64 {
        let k = state.n_qubits();
        let mut net = Network::new(k, seed).without_recording();
        let accepted = (0..trials)
            .filter(|_| {
                let rec = verification(state, 0, &mut net).unwrap();
                assert_eq!(rec.basis_bits.iter().map(|&b| b as usize).sum::<usize>() % 2, 0);
                rec.accepted
            })
            .count();
        accepted as f64 / trials as f64
    }

    #[test]
    fn parity_rule() {
        assert_eq!(parity_test(&[0, 0, 0], &[0, 0, 0]), Some(true));
        assert_eq!(parity_test(&[1, 1, 0], &[1, 0, 0]), Some(true));
        assert_eq!(parity_test(&[1, 1, 0], &[0, 0, 0]), Some(false));
        assert_eq!(parity_test(&[1, 1, 1, 1], &[0, 0, 0, 0]), Some(true));
        assert_eq!(parity_test(&[1, 0, 0], &[0, 0, 0]), None);
    }

    #[test]
    fn ghz_always_accepted() {
        for k in 2..=5 {
            assert_eq!(acceptance_rate(&ghz_state(k).unwrap(), 500, k as u64), 1.0);
        }
    }

    #[test]
    fn product_state_half() {
        let zero = StateVector::zero(4).unwrap();
        let r = acceptance_rate(&zero, 10_000, 3);
        assert!((r - 0.5).abs() < 4.0 * (0.25f64 / 10_000.0).sqrt(), "{r}");
    }

    #[test]
    fn rotated_ghz_cos_squared() {
        for theta in [PI / 3.0, PI] {
            let s = rotated_ghz(3, theta).unwrap();
            let r = acceptance_rate(&s, 10_000, 5);
            let p = (theta / 2.0).cos().powi(2);
            let se = (p * (1.0 - p) / 10_000.0).sqrt().max(1e-9);
            assert!((r - p).abs() <= 4.0 * se + 1e-12, "θ={theta}: {r} vs {p}");
        }
    }

    #[test]
    fn extra_qubits_stay_unmeasured() {
        let g = ghz_state(4).unwrap();
        let mut net = Network::new(5, 1);
        let rec = verify_participants(&g, &[4, 1, 2], 4, &mut net).unwrap();
        assert_eq!(rec.parties, vec![4, 1, 2]);
        assert!(verify_participants(&g, &[0, 1], 3, &mut net).is_err());
    }

    #[test]
    fn silence_aborts() {
        let mut net = Network::new(3, 1);
        net.silence(0);
        assert!(verification(&ghz_state(3).unwrap(), 0, &mut net).unwrap_err().is_abort());
    }
}
