//! Key agreement: the unverified variant (notification, distillation,
//! Z-measurement) and the verifiable one that interleaves verification rounds
//! chosen by a public coin.

use rand::Rng;
use serde::Serialize;

use crate::netmodel::{Bits, Network, PartyId, RoleAssignment};
use crate::qsim::{
    ghz_prime_state, ghz_state, local_correct_ghz_prime, measure, sample_ensemble, werner_around,
    werner_weight_for_fidelity, MeasurementBasis, NoiseEnsemble, QsimError, StateVector,
};

use super::{ame_with, notification, verify_participants, ProtocolError, Register, Sampled, VerificationRecord};

/// Z-measures every qubit of `state`, in order.
pub fn keygen_round<R: Rng + ?Sized>(state: &StateVector, rng: &mut R) -> Result<Vec<u8>, QsimError> {
    let mut s = state.clone();
    let mut bits = Vec::with_capacity(state.n_qubits());
    for _ in 0..state.n_qubits() {
        let (b, post) = measure(&s, 0, MeasurementBasis::Z, rng)?;
        bits.push(b);
        s = post;
    }
    Ok(bits)
}

/// Emits the `n`-qubit states the parties receive.
#[derive(Clone, Debug)]
pub struct Source {
    ensemble: NoiseEnsemble,
    ghz_prime_correction: bool,
}

impl Source {
    /// Perfect GHZ states.
    pub fn honest(n: usize) -> Result<Self, QsimError> {
        Ok(Source::from_state(ghz_state(n)?))
    }

    pub fn from_state(state: StateVector) -> Self {
        Source::from_ensemble(NoiseEnsemble::pure(state))
    }

    pub fn from_ensemble(ensemble: NoiseEnsemble) -> Self {
        Source {
            ensemble,
            ghz_prime_correction: false,
        }
    }

    /// White-noise GHZ mixture with the given fidelity.
    pub fn werner(n: usize, fidelity: f64) -> Result<Self, QsimError> {
        let p = werner_weight_for_fidelity(n, fidelity)?;
        Ok(Source::from_ensemble(werner_around(ghz_state(n)?, p)?))
    }

    /// White-noise mixture around the photonic GHZ′ state; the parties apply
    /// the local Pauli correction to every emitted state.
    pub fn ghz_prime(fidelity: f64) -> Result<Self, QsimError> {
        let p = werner_weight_for_fidelity(4, fidelity)?;
        Ok(Source {
            ensemble: werner_around(ghz_prime_state(), p)?,
            ghz_prime_correction: true,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.ensemble.n_qubits()
    }

    /// The mixture the parties effectively share, after any local correction.
    pub fn effective_ensemble(&self) -> Result<NoiseEnsemble, QsimError> {
        if self.ghz_prime_correction {
            self.ensemble.map_states(local_correct_ghz_prime)
        } else {
            Ok(self.ensemble.clone())
        }
    }

    pub fn emit<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<StateVector, QsimError> {
        let s = sample_ensemble(&self.ensemble, rng);
        if self.ghz_prime_correction {
            local_correct_ghz_prime(&s)
        } else {
            Ok(s)
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AkaOutcome {
    pub participants: Vec<PartyId>,
    pub notified: Vec<u8>,
    /// One key per participant, in participant order.
    pub keys: Vec<Bits>,
}

/// Notification once, then distillation and Z-measurement of every state.
pub fn aka(roles: &RoleAssignment, states: &[StateVector], net: &mut Network) -> Result<AkaOutcome, ProtocolError> {
    let notified = notification(roles, net)?;
    let known = RoleAssignment::new(roles.n(), roles.alice(), notified.notified_set())?;
    let participants = known.participants();
    let mut keys = vec![Bits::default(); participants.len()];
    for state in states {
        let out = ame_with(state, &known, None, net)?;
        net.begin_round("aka/step3");
        let bits = keygen_round(&out.participant_state, net.nature())?;
        for (i, &p) in participants.iter().enumerate() {
            net.record_local(p, Bits::one(bits[i]));
            keys[i].0.push(bits[i]);
        }
    }
    Ok(AkaOutcome {
        participants,
        notified: notified.notified,
        keys,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct AvkaParams {
    /// Number of shared states.
    #[serde(rename = "L")]
    pub l: usize,
    /// Inverse KeyGen probability.
    #[serde(rename = "D")]
    pub d: u32,
}

impl AvkaParams {
    pub fn new(l: usize, d: u32) -> Result<Self, ProtocolError> {
        if l == 0 || d == 0 {
            return Err(ProtocolError::Precondition(format!("need L ≥ 1 and D ≥ 1, got L={l}, D={d}")));
        }
        Ok(AvkaParams { l, d })
    }

    pub fn keygen_probability(&self) -> f64 {
        1.0 / self.d as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum RoundType {
    Verification,
    KeyGen,
}

#[derive(Clone, Debug, Serialize)]
pub struct AvkaRound {
    pub index: usize,
    pub round_type: RoundType,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verification: Option<VerificationRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub key_bits: Option<Bits>,
}

#[derive(Clone, Debug, Serialize)]
pub struct AvkaResult {
    pub roles: RoleAssignment,
    pub params: AvkaParams,
    pub participants: Vec<PartyId>,
    pub notified: Vec<u8>,
    pub rounds: Vec<AvkaRound>,
    /// One key per participant, in participant order.
    pub key_bits: Vec<Bits>,
    pub keygen_rounds: usize,
    pub verification_rounds: usize,
    pub failed_verifications: usize,
    pub aborted: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub abort_reason: Option<String>,
    /// Alice's verdict: no abort and no failed verification round.
    pub validated: bool,
}

impl AvkaResult {
    pub fn key_length(&self) -> usize {
        self.key_bits.first().map_or(0, Bits::len)
    }

    pub fn verification_accept_rate(&self) -> Option<f64> {
        (self.verification_rounds > 0)
            .then(|| 1.0 - self.failed_verifications as f64 / self.verification_rounds as f64)
    }
}

/// Deviations from the honest protocol injected into a run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Deviation {
    /// A non-participant that skips its distillation measurement, keeps the
    /// qubit, and measures it in the given basis during KeyGen rounds.
    pub withholding: Option<(PartyId, MeasurementBasis)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct AvkaRun {
    pub result: AvkaResult,
    /// The withholding party's bit for every KeyGen round.
    pub adversary_guess: Bits,
}

pub fn avka(
    roles: &RoleAssignment,
    params: AvkaParams,
    source: &Source,
    net: &mut Network,
) -> Result<AvkaResult, ProtocolError> {
    avka_with(roles, params, source, Deviation::default(), net).map(|run| run.result)
}

/// Verifiable key agreement. A broadcast abort ends the run early and is
/// reported in the result, not as an error.
pub fn avka_with(
    roles: &RoleAssignment,
    params: AvkaParams,
    source: &Source,
    deviation: Deviation,
    net: &mut Network,
) -> Result<AvkaRun, ProtocolError> {
    AvkaParams::new(params.l, params.d)?;
    if source.n_qubits() != roles.n() || net.n() != roles.n() {
        return Err(ProtocolError::Precondition(format!(
            "source emits {} qubits, network has {} parties, roles name {}",
            source.n_qubits(),
            net.n(),
            roles.n()
        )));
    }
    let withholding = deviation.withholding.map(|(p, _)| p);
    if let Some(w) = withholding {
        if roles.is_participant(w) {
            return Err(ProtocolError::Precondition(format!("withholding party {w} is a participant")));
        }
    }

    let mut result = AvkaResult {
        roles: roles.clone(),
        params,
        participants: roles.participants(),
        notified: vec![0; roles.n()],
        rounds: Vec::with_capacity(params.l),
        key_bits: vec![Bits::default(); roles.m() + 1],
        keygen_rounds: 0,
        verification_rounds: 0,
        failed_verifications: 0,
        aborted: false,
        abort_reason: None,
        validated: false,
    };
    let mut guess = Bits::default();

    match run_rounds(roles, params, source, deviation, net, &mut result, &mut guess) {
        Ok(()) => {}
        Err(e) if e.is_abort() => {
            result.aborted = true;
            result.abort_reason = Some(e.to_string());
        }
        Err(e) => return Err(e),
    }
    result.validated = !result.aborted && result.failed_verifications == 0;
    Ok(AvkaRun {
        result,
        adversary_guess: guess,
    })
}

fn run_rounds(
    roles: &RoleAssignment,
    params: AvkaParams,
    source: &Source,
    deviation: Deviation,
    net: &mut Network,
    result: &mut AvkaResult,
    guess: &mut Bits,
) -> Result<(), ProtocolError> {
    let notified = notification(roles, net)?;
    result.notified = notified.notified.clone();
    // every party acts on what the notification told it
    let known = RoleAssignment::new(roles.n(), roles.alice(), notified.notified_set())?;
    let participants = known.participants();
    result.participants = participants.clone();
    result.key_bits = vec![Bits::default(); participants.len()];
    let withholding = deviation.withholding;

    for index in 0..params.l {
        let state = source.emit(net.source())?;
        let out = ame_with(&state, &known, withholding.map(|(p, _)| p), net)?;

        net.begin_round("avka/coin");
        let coin = net.public_coin(params.keygen_probability());
        if coin == 0 {
            let rec = verify_participants(&out.participant_state, &participants, roles.alice(), net)?;
            result.verification_rounds += 1;
            if !rec.accepted {
                result.failed_verifications += 1;
            }
            result.rounds.push(AvkaRound {
                index,
                round_type: RoundType::Verification,
                verification: Some(rec),
                key_bits: None,
            });
        } else {
            net.begin_round("avka/keygen");
            let mut owners = participants.clone();
            owners.extend(out.kept.iter().copied());
            let mut reg = Register::new(out.participant_state, owners);
            let mut bits = Vec::with_capacity(participants.len());
            for (i, &p) in participants.iter().enumerate() {
                let b = reg.measure(p, MeasurementBasis::Z, &mut Sampled(net.nature()))?;
                net.record_local(p, Bits::one(b));
                result.key_bits[i].0.push(b);
                bits.push(b);
            }
            if let Some((w, basis)) = withholding {
                let b = reg.measure(w, basis, &mut Sampled(net.nature()))?;
                net.record_local(w, Bits::one(b));
                guess.0.push(b);
            }
            result.keygen_rounds += 1;
            result.rounds.push(AvkaRound {
                index,
                round_type: RoundType::KeyGen,
                verification: None,
                key_bits: Some(Bits(bits)),
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::EntryKind;
    use crate::qsim::{density_from_ensemble, werner_ghz, StateVector};

    fn roles_4_2() -> RoleAssignment {
        RoleAssignment::new(4, 0, [1, 3]).unwrap()
    }

    #[test]
    fn keygen_examples() {
        let mut net = Network::new(3, 0);
        let g = ghz_state(3).unwrap();
        let mut ones = 0;
        for _ in 0..2000 {
            let bits = keygen_round(&g, net.nature()).unwrap();
            assert!(bits.iter().all(|&b| b == bits[0]));
            ones += bits[0] as usize;
        }
        assert!((ones as f64 / 2000.0 - 0.5).abs() < 4.0 * (0.25f64 / 2000.0).sqrt());
        let s = StateVector::basis_state(3, 0b010).unwrap();
        assert_eq!(keygen_round(&s, net.nature()).unwrap(), vec![0, 1, 0]);

        // a classical mixture of |000⟩ and |111⟩ looks exactly like GHZ here
        let mix = NoiseEnsemble::new(vec![
            (0.5, StateVector::basis_state(3, 0).unwrap()),
            (0.5, StateVector::basis_state(3, 7).unwrap()),
        ])
        .unwrap();
        let mut ones = 0;
        for _ in 0..2000 {
            let s = sample_ensemble(&mix, net.source());
            let bits = keygen_round(&s, net.nature()).unwrap();
            assert!(bits.iter().all(|&b| b == bits[0]));
            ones += bits[0] as usize;
        }
        assert!((ones as f64 / 2000.0 - 0.5).abs() < 4.0 * (0.25f64 / 2000.0).sqrt());
    }

    #[test]
    fn aka_empty_and_perfect() {
        let roles = RoleAssignment::new(4, 2, [0, 3]).unwrap();
        let out = aka(&roles, &[], &mut Network::new(4, 1)).unwrap();
        assert!(out.keys.iter().all(|k| k.is_empty()));

        let g = ghz_state(4).unwrap();
        let states = vec![g; 100];
        let out = aka(&roles, &states, &mut Network::new(4, 2)).unwrap();
        assert_eq!(out.participants, vec![2, 0, 3]);
        assert_eq!(out.keys[0], out.keys[1]);
        assert_eq!(out.keys[0], out.keys[2]);
        let ones: usize = out.keys[0].0.iter().map(|&b| b as usize).sum();
        assert!((ones as f64 / 100.0 - 0.5).abs() <= 0.15);
    }

    #[test]
    fn aka_werner_disagreement_matches_diagonal() {
        // pairwise disagreement between Alice (party 0) and Bob (party 1)
        // depends only on the Z diagonal: P(bit_0 ≠ bit_1)
        let p = 0.6;
        let e = werner_ghz(4, p).unwrap();
        let diag = density_from_ensemble(&e).unwrap().diagonal();
        let expect: f64 = (0..16)
            .filter(|z| ((z >> 3) & 1) != ((z >> 2) & 1))
            .map(|z| diag[z])
            .sum();
        let roles = RoleAssignment::new(4, 0, [1, 2]).unwrap();
        let mut net = Network::new(4, 13).without_recording();
        let rounds = 10_000;
        let states: Vec<StateVector> = (0..rounds).map(|_| sample_ensemble(&e, net.source())).collect();
        let out = aka(&roles, &states, &mut net).unwrap();
        let diff = out.keys[0].0.iter().zip(&out.keys[1].0).filter(|(a, b)| a != b).count();
        let rate = diff as f64 / rounds as f64;
        let se = (expect * (1.0 - expect) / rounds as f64).sqrt();
        assert!((rate - expect).abs() <= 4.0 * se, "{rate} vs {expect}");
    }

    #[test]
    fn d1_is_all_keygen() {
        let roles = roles_4_2();
        let res = avka(&roles, AvkaParams::new(50, 1).unwrap(), &Source::honest(4).unwrap(), &mut Network::new(4, 4)).unwrap();
        assert_eq!(res.keygen_rounds, 50);
        assert_eq!(res.key_length(), 50);
        assert!(res.validated);
        assert!(res.key_bits.iter().all(|k| *k == res.key_bits[0]));
    }

    #[test]
    fn round_types_follow_public_coins() {
        let roles = roles_4_2();
        let mut net = Network::new(4, 99);
        let res = avka(&roles, AvkaParams::new(60, 3).unwrap(), &Source::honest(4).unwrap(), &mut net).unwrap();
        let coins: Vec<u8> = net
            .transcript()
            .entries
            .iter()
            .filter(|e| e.kind == EntryKind::Beacon)
            .map(|e| e.bits.0[0])
            .collect();
        let types: Vec<u8> = res
            .rounds
            .iter()
            .map(|r| u8::from(r.round_type == RoundType::KeyGen))
            .collect();
        assert_eq!(coins, types);
        assert_eq!(res.key_length(), res.keygen_rounds);
        assert!(res.validated);
        for r in &res.rounds {
            if let Some(v) = &r.verification {
                assert_eq!(v.basis_bits.iter().map(|&b| b as usize).sum::<usize>() % 2, 0);
            }
        }
    }

    #[test]
    fn ghz_minus_source_fails_every_verification() {
        let roles = roles_4_2();
        let source = Source::from_state(crate::qsim::rotated_ghz(4, std::f64::consts::PI).unwrap());
        let res = avka(&roles, AvkaParams::new(40, 4).unwrap(), &source, &mut Network::new(4, 3)).unwrap();
        assert!(res.verification_rounds > 0);
        assert_eq!(res.failed_verifications, res.verification_rounds);
        assert!(!res.validated);
    }

    #[test]
    fn silenced_party_is_recorded_abort() {
        let roles = roles_4_2();
        let mut net = Network::new(4, 3);
        net.silence(2);
        let res = avka(&roles, AvkaParams::new(10, 2).unwrap(), &Source::honest(4).unwrap(), &mut net).unwrap();
        assert!(res.aborted && !res.validated);
        assert!(res.abort_reason.unwrap().contains("[2]"));
    }

    #[test]
    fn parameter_and_size_errors() {
        assert!(AvkaParams::new(0, 3).is_err());
        assert!(AvkaParams::new(3, 0).is_err());
        let roles = roles_4_2();
        let bad = AvkaParams { l: 5, d: 0 };
        assert!(avka(&roles, bad, &Source::honest(4).unwrap(), &mut Network::new(4, 0)).is_err());
        let p = AvkaParams::new(5, 2).unwrap();
        assert!(avka(&roles, p, &Source::honest(5).unwrap(), &mut Network::new(4, 0)).is_err());
    }

    #[test]
    fn ghz_prime_source_emits_corrected_states() {
        let s = Source::ghz_prime(1.0).unwrap();
        let mut net = Network::new(4, 0);
        let g4 = ghz_state(4).unwrap();
        for _ in 0..10 {
            assert!((s.emit(net.source()).unwrap().fidelity(&g4).unwrap() - 1.0).abs() < 1e-12);
        }
        let eff = density_from_ensemble(&Source::ghz_prime(0.81).unwrap().effective_ensemble().unwrap()).unwrap();
        let direct = density_from_ensemble(&Source::werner(4, 0.81).unwrap().effective_ensemble().unwrap()).unwrap();
        for (a, b) in eff.entries().iter().zip(direct.entries()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn result_json_shape() {
        let roles = roles_4_2();
        let res = avka(&roles, AvkaParams::new(8, 2).unwrap(), &Source::honest(4).unwrap(), &mut Network::new(4, 5)).unwrap();
        let v: serde_json::Value = serde_json::to_value(&res).unwrap();
        assert_eq!(v["params"]["L"], 8);
        assert_eq!(v["validated"], true);
        assert!(v["key_bits"][0].as_str().unwrap().chars().all(|c| c == '0' || c == '1'));
        assert_eq!(v["roles"]["alice"], 0);
    }
}
