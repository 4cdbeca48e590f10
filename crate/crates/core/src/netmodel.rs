//! Simulated classical network: private pairwise channels, a sequenced
//! broadcast channel, transcript capture and adversary views.
//!
//! The broadcast sequencer is trusted infrastructure. Each broadcast round
//! draws a uniform permutation of the announcing parties from its own stream,
//! and every observer sees the same ordered announcements.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::rng::{stream_rng, Stream};

pub type PartyId = usize;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetError {
    #[error("party {party} out of range for a network of {n}")]
    InvalidParty { party: PartyId, n: usize },
    #[error("party {0} cannot send a private message to itself")]
    SelfSend(PartyId),
    #[error("invalid role assignment: {0}")]
    Roles(String),
    #[error("invalid coalition: {0}")]
    Coalition(String),
    #[error("broadcast in {phase} aborted: no announcement from {missing:?}")]
    Abort { phase: String, missing: Vec<PartyId> },
}

/// Who is Alice, who are her receivers, out of `n` parties.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RoleAssignment {
    n: usize,
    alice: PartyId,
    receivers: BTreeSet<PartyId>,
}

impl RoleAssignment {
    pub fn new(n: usize, alice: PartyId, receivers: impl IntoIterator<Item = PartyId>) -> Result<Self, NetError> {
        if n < 2 {
            return Err(NetError::Roles(format!("need at least 2 parties, got {n}")));
        }
        if alice >= n {
            return Err(NetError::InvalidParty { party: alice, n });
        }
        let receivers: BTreeSet<PartyId> = receivers.into_iter().collect();
        if let Some(&bad) = receivers.iter().find(|&&r| r >= n) {
            return Err(NetError::InvalidParty { party: bad, n });
        }
        if receivers.contains(&alice) {
            return Err(NetError::Roles(format!("Alice ({alice}) cannot be her own receiver")));
        }
        Ok(RoleAssignment { n, alice, receivers })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alice(&self) -> PartyId {
        self.alice
    }

    pub fn receivers(&self) -> &BTreeSet<PartyId> {
        &self.receivers
    }

    /// Number of receivers.
    pub fn m(&self) -> usize {
        self.receivers.len()
    }

    /// Alice first, then receivers ascending.
    pub fn participants(&self) -> Vec<PartyId> {
        std::iter::once(self.alice).chain(self.receivers.iter().copied()).collect()
    }

    pub fn non_participants(&self) -> Vec<PartyId> {
        (0..self.n).filter(|p| !self.is_participant(*p)).collect()
    }

    pub fn is_participant(&self, p: PartyId) -> bool {
        p == self.alice || self.receivers.contains(&p)
    }
}

/// Bit string, serialized as `'0'/'1'` characters.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bits(pub Vec<u8>);

impl Bits {
    pub fn one(bit: u8) -> Self {
        Bits(vec![bit & 1])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn parity(&self) -> u8 {
        self.0.iter().fold(0, |acc, b| acc ^ b)
    }
}

impl fmt::Display for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            write!(f, "{}", if *b == 0 { '0' } else { '1' })?;
        }
        Ok(())
    }
}

impl Serialize for Bits {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EntryKind {
    Private { from: PartyId, to: PartyId },
    Broadcast { from: PartyId },
    /// Announcement of the public random source, which is not a party.
    Beacon,
}

impl EntryKind {
    fn rank(&self) -> u8 {
        match self {
            EntryKind::Beacon => 0,
            EntryKind::Broadcast { .. } => 1,
            EntryKind::Private { .. } => 2,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            EntryKind::Private { .. } => "private",
            EntryKind::Broadcast { .. } => "broadcast",
            EntryKind::Beacon => "beacon",
        }
    }

    pub fn from(&self) -> Option<PartyId> {
        match *self {
            EntryKind::Private { from, .. } | EntryKind::Broadcast { from } => Some(from),
            EntryKind::Beacon => None,
        }
    }

    pub fn to(&self) -> Option<PartyId> {
        match *self {
            EntryKind::Private { to, .. } => Some(to),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TranscriptEntry {
    pub phase: String,
    pub round: usize,
    pub kind: EntryKind,
    pub bits: Bits,
    /// Announcement slot, for broadcasts.
    pub position: Option<usize>,
}

#[derive(Serialize)]
struct EntryLine<'a> {
    phase: &'a str,
    round: usize,
    kind: &'static str,
    from: Option<PartyId>,
    to: Option<PartyId>,
    bits: &'a Bits,
    position: Option<usize>,
}

impl Serialize for TranscriptEntry {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        EntryLine {
            phase: &self.phase,
            round: self.round,
            kind: self.kind.label(),
            from: self.kind.from(),
            to: self.kind.to(),
            bits: &self.bits,
            position: self.position,
        }
        .serialize(serializer)
    }
}

/// Something a party drew or observed locally (random bits, measurement outcomes).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LocalRecord {
    pub party: PartyId,
    pub phase: String,
    pub round: usize,
    pub bits: Bits,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Transcript {
    pub n: usize,
    pub entries: Vec<TranscriptEntry>,
    pub local: Vec<LocalRecord>,
}

impl Transcript {
    /// One JSON object per entry: phase, round, kind, from, to, bits, position.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&serde_json::to_string(e).expect("entry serializes"));
            out.push('\n');
        }
        out
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ChannelCounters {
    pub private_bits_sent: u64,
    pub broadcast_bits_sent: u64,
}

/// One slot of a sequenced broadcast round.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Announcement {
    pub party: PartyId,
    pub position: usize,
    pub bits: Bits,
}

/// The classical fabric of one protocol run, plus all of its randomness.
#[derive(Debug)]
pub struct Network {
    n: usize,
    seed: u64,
    recording: bool,
    transcript: Transcript,
    counters: ChannelCounters,
    phase: String,
    round: usize,
    silenced: BTreeSet<PartyId>,
    party_rngs: Vec<ChaCha8Rng>,
    sequencer: ChaCha8Rng,
    coin: ChaCha8Rng,
    nature: ChaCha8Rng,
    source: ChaCha8Rng,
}

impl Network {
    pub fn new(n: usize, seed: u64) -> Self {
        Network {
            n,
            seed,
            recording: true,
            transcript: Transcript {
                n,
                ..Default::default()
            },
            counters: ChannelCounters::default(),
            phase: String::from("setup"),
            round: 0,
            silenced: BTreeSet::new(),
            party_rngs: (0..n).map(|p| stream_rng(seed, Stream::Party(p))).collect(),
            sequencer: stream_rng(seed, Stream::Sequencer),
            coin: stream_rng(seed, Stream::PublicCoin),
            nature: stream_rng(seed, Stream::Nature),
            source: stream_rng(seed, Stream::Source),
        }
    }

    /// Keeps counters but stores no transcript; for bulk statistics.
    pub fn without_recording(mut self) -> Self {
        self.recording = false;
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn counters(&self) -> ChannelCounters {
        self.counters
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }

    pub fn into_transcript(self) -> Transcript {
        self.transcript
    }

    /// Fault injection: the network drops every announcement of `party`.
    pub fn silence(&mut self, party: PartyId) {
        self.silenced.insert(party);
    }

    /// Starts a new round under the given phase tag; returns its index.
    pub fn begin_round(&mut self, phase: &str) -> usize {
        self.round += 1;
        self.phase.clear();
        self.phase.push_str(phase);
        self.round
    }

    pub fn round(&self) -> usize {
        self.round
    }

    fn check_party(&self, p: PartyId) -> Result<(), NetError> {
        if p >= self.n {
            return Err(NetError::InvalidParty { party: p, n: self.n });
        }
        Ok(())
    }

    fn push(&mut self, kind: EntryKind, bits: Bits, position: Option<usize>) {
        if self.recording {
            self.transcript.entries.push(TranscriptEntry {
                phase: self.phase.clone(),
                round: self.round,
                kind,
                bits,
                position,
            });
        }
    }

    pub fn send_private(&mut self, from: PartyId, to: PartyId, bits: Bits) -> Result<(), NetError> {
        self.check_party(from)?;
        self.check_party(to)?;
        if from == to {
            return Err(NetError::SelfSend(from));
        }
        self.counters.private_bits_sent += bits.len() as u64;
        self.push(EntryKind::Private { from, to }, bits, None);
        Ok(())
    }

    /// A share a party addresses to itself. It never touches a channel, but
    /// it is logged as a private entry and counted like any other share.
    pub fn deliver_local(&mut self, party: PartyId, bits: Bits) -> Result<(), NetError> {
        self.check_party(party)?;
        self.counters.private_bits_sent += bits.len() as u64;
        self.push(EntryKind::Private { from: party, to: party }, bits, None);
        Ok(())
    }

    /// Sequenced broadcast in which every party must announce.
    ///
    /// Returns the announcements ordered by their random slot. A missing or
    /// silenced announcement aborts the round.
    pub fn broadcast_round(&mut self, mut announcements: BTreeMap<PartyId, Bits>) -> Result<Vec<Announcement>, NetError> {
        if let Some(&bad) = announcements.keys().find(|&&p| p >= self.n) {
            return Err(NetError::InvalidParty { party: bad, n: self.n });
        }
        for p in &self.silenced {
            announcements.remove(p);
        }
        let missing: Vec<PartyId> = (0..self.n).filter(|p| !announcements.contains_key(p)).collect();
        if !missing.is_empty() {
            return Err(NetError::Abort {
                phase: self.phase.clone(),
                missing,
            });
        }
        let mut order: Vec<PartyId> = announcements.keys().copied().collect();
        order.shuffle(&mut self.sequencer);
        let mut out = Vec::with_capacity(order.len());
        for (position, party) in order.into_iter().enumerate() {
            let bits = announcements.remove(&party).expect("announcement present");
            self.counters.broadcast_bits_sent += bits.len() as u64;
            self.push(EntryKind::Broadcast { from: party }, bits.clone(), Some(position));
            out.push(Announcement { party, position, bits });
        }
        Ok(out)
    }

    /// Public random source: draws a bit with `Pr[1] = p_one` and announces it.
    pub fn public_coin(&mut self, p_one: f64) -> u8 {
        let bit = u8::from(self.coin.gen_bool(p_one));
        self.push(EntryKind::Beacon, Bits::one(bit), None);
        bit
    }

    /// `count` uniform bits from `party`'s private stream, logged as local randomness.
    pub fn draw_bits(&mut self, party: PartyId, count: usize) -> Bits {
        let rng = &mut self.party_rngs[party];
        let bits = Bits((0..count).map(|_| u8::from(rng.gen::<bool>())).collect());
        self.record_local(party, bits.clone());
        bits
    }

    pub fn record_local(&mut self, party: PartyId, bits: Bits) {
        if self.recording {
            self.transcript.local.push(LocalRecord {
                party,
                phase: self.phase.clone(),
                round: self.round,
                bits,
            });
        }
    }

    /// Randomness of the physical world: measurement outcomes.
    pub fn nature(&mut self) -> &mut ChaCha8Rng {
        &mut self.nature
    }

    /// Randomness of the entanglement source.
    pub fn source(&mut self) -> &mut ChaCha8Rng {
        &mut self.source
    }
}

/// Public bits by sender (`None` for the beacon), then parities of private
/// bits in, private bits out, and local records.
type RoundFeatures = (BTreeMap<Option<PartyId>, String>, [u8; 3]);

/// What a coalition of corrupted parties gets to see.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AdversaryView {
    pub coalition: BTreeSet<PartyId>,
    pub visible_entries: Vec<TranscriptEntry>,
    pub coalition_randomness: Vec<LocalRecord>,
}

impl AdversaryView {
    /// Canonical serialization: entries sorted by (round, kind, position,
    /// endpoints), then the coalition's local records sorted by (round, party).
    pub fn canonical_key(&self) -> String {
        let mut entries: Vec<&TranscriptEntry> = self.visible_entries.iter().collect();
        entries.sort_by_key(|e| (e.round, e.kind.rank(), e.position, e.kind.from(), e.kind.to()));
        let mut local: Vec<&LocalRecord> = self.coalition_randomness.iter().collect();
        local.sort_by_key(|l| (l.round, l.party));
        let mut key = String::new();
        for e in entries {
            key.push_str(&format!(
                "{}:{}:{}:{}:{}={};",
                e.round,
                e.kind.label(),
                e.position.map_or(String::from("-"), |p| p.to_string()),
                e.kind.from().map_or(String::from("-"), |p| p.to_string()),
                e.kind.to().map_or(String::from("-"), |p| p.to_string()),
                e.bits
            ));
        }
        key.push('|');
        for l in local {
            key.push_str(&format!("{}:{}={};", l.round, l.party, l.bits));
        }
        key
    }

    /// Coarse feature projection. Broadcast and beacon bits are kept per
    /// sender, with announcement positions dropped; private traffic is reduced
    /// to the per-round parity of bits into the coalition and of bits out of
    /// it, and the coalition's local records to one parity per round.
    pub fn projected_key(&self) -> String {
        let mut per_round: BTreeMap<usize, RoundFeatures> = BTreeMap::new();
        for e in &self.visible_entries {
            let (public, f) = per_round.entry(e.round).or_default();
            match e.kind {
                EntryKind::Broadcast { from } => {
                    public.insert(Some(from), e.bits.to_string());
                }
                EntryKind::Beacon => {
                    public.insert(None, e.bits.to_string());
                }
                EntryKind::Private { from, to } => {
                    if self.coalition.contains(&to) {
                        f[0] ^= e.bits.parity();
                    }
                    if self.coalition.contains(&from) {
                        f[1] ^= e.bits.parity();
                    }
                }
            }
        }
        for l in &self.coalition_randomness {
            per_round.entry(l.round).or_default().1[2] ^= l.bits.parity();
        }
        let mut key = String::new();
        for (r, (public, f)) in &per_round {
            key.push_str(&format!("{r}:"));
            for (from, bits) in public {
                key.push_str(&format!("{}={bits},", from.map_or(String::from("coin"), |p| p.to_string())));
            }
            key.push_str(&format!("{}{}{};", f[0], f[1], f[2]));
        }
        key
    }
}

/// Filters a transcript down to what `coalition` observes: every broadcast,
/// every private message with an endpoint in the coalition, and the
/// coalition's own local records.
pub fn extract_view(t: &Transcript, coalition: &BTreeSet<PartyId>) -> Result<AdversaryView, NetError> {
    if let Some(&bad) = coalition.iter().find(|&&p| p >= t.n) {
        return Err(NetError::InvalidParty { party: bad, n: t.n });
    }
    if coalition.len() + 2 > t.n {
        return Err(NetError::Coalition(format!(
            "{} corrupted parties out of {} (at most n − 2 allowed)",
            coalition.len(),
            t.n
        )));
    }
    let visible_entries = t
        .entries
        .iter()
        .filter(|e| match e.kind {
            EntryKind::Broadcast { .. } | EntryKind::Beacon => true,
            EntryKind::Private { from, to } => coalition.contains(&from) || coalition.contains(&to),
        })
        .cloned()
        .collect();
    let coalition_randomness = t
        .local
        .iter()
        .filter(|l| coalition.contains(&l.party))
        .cloned()
        .collect();
    Ok(AdversaryView {
        coalition: coalition.clone(),
        visible_entries,
        coalition_randomness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(xs: &[PartyId]) -> BTreeSet<PartyId> {
        xs.iter().copied().collect()
    }

    #[test]
    fn role_validation() {
        let r = RoleAssignment::new(5, 1, [3, 0]).unwrap();
        assert_eq!(r.participants(), vec![1, 0, 3]);
        assert_eq!(r.non_participants(), vec![2, 4]);
        assert_eq!(r.m(), 2);
        assert!(RoleAssignment::new(4, 1, [1]).is_err());
        assert!(RoleAssignment::new(4, 4, []).is_err());
        assert!(RoleAssignment::new(4, 0, [7]).is_err());
        assert!(RoleAssignment::new(1, 0, []).is_err());
    }

    #[test]
    fn private_send_counts_and_errors() {
        let mut net = Network::new(3, 1);
        net.begin_round("test");
        net.send_private(0, 1, Bits::one(1)).unwrap();
        assert_eq!(net.counters().private_bits_sent, 1);
        assert_eq!(net.send_private(2, 2, Bits::one(0)), Err(NetError::SelfSend(2)));
        assert!(matches!(net.send_private(0, 3, Bits::one(0)), Err(NetError::InvalidParty { .. })));
        assert_eq!(net.counters().private_bits_sent, 1);
    }

    #[test]
    fn honest_private_message_hidden_from_outsiders() {
        let mut net = Network::new(4, 2);
        net.begin_round("test");
        net.send_private(0, 1, Bits::one(1)).unwrap();
        net.send_private(2, 3, Bits::one(0)).unwrap();
        let view = extract_view(net.transcript(), &set(&[3])).unwrap();
        assert_eq!(view.visible_entries.len(), 1);
        assert_eq!(view.visible_entries[0].kind, EntryKind::Private { from: 2, to: 3 });
    }

    #[test]
    fn single_announcer_and_abort() {
        let mut net = Network::new(1, 0);
        net.begin_round("solo");
        let out = net.broadcast_round(BTreeMap::from([(0, Bits::one(1))])).unwrap();
        assert_eq!(out[0].position, 0);

        let mut net = Network::new(3, 0);
        net.begin_round("ame/announce");
        let err = net
            .broadcast_round(BTreeMap::from([(0, Bits::one(1)), (2, Bits::one(0))]))
            .unwrap_err();
        assert_eq!(
            err,
            NetError::Abort {
                phase: "ame/announce".into(),
                missing: vec![1]
            }
        );
        net.silence(2);
        let all = (0..3).map(|p| (p, Bits::one(0))).collect();
        assert!(matches!(net.broadcast_round(all), Err(NetError::Abort { .. })));
    }

    #[test]
    fn announcement_order_is_uniform() {
        let mut net = Network::new(4, 77).without_recording();
        let rounds = 10_000;
        let mut first = [0usize; 4];
        for _ in 0..rounds {
            let all = (0..4).map(|p| (p, Bits::one(0))).collect();
            let out = net.broadcast_round(all).unwrap();
            first[out[0].party] += 1;
            let mut positions: Vec<usize> = out.iter().map(|a| a.position).collect();
            positions.sort_unstable();
            assert_eq!(positions, vec![0, 1, 2, 3]);
        }
        for f in first {
            assert!((f as f64 / rounds as f64 - 0.25).abs() < 0.02);
        }
    }

    #[test]
    fn views_filter_and_nest() {
        let mut net = Network::new(5, 3);
        net.begin_round("r");
        for from in 0..5 {
            for to in 0..5 {
                if from != to {
                    net.send_private(from, to, Bits::one(((from + to) % 2) as u8)).unwrap();
                }
            }
        }
        net.broadcast_round((0..5).map(|p| (p, Bits::one(1))).collect()).unwrap();
        net.draw_bits(1, 3);
        let t = net.transcript();

        let empty = extract_view(t, &BTreeSet::new()).unwrap();
        assert!(empty
            .visible_entries
            .iter()
            .all(|e| matches!(e.kind, EntryKind::Broadcast { .. })));
        assert_eq!(empty.visible_entries.len(), 5);

        // all but parties 0 and 4: only the 0↔4 edge stays hidden
        let big = extract_view(t, &set(&[1, 2, 3])).unwrap();
        let hidden: Vec<_> = t
            .entries
            .iter()
            .filter(|e| !big.visible_entries.contains(e))
            .map(|e| e.kind)
            .collect();
        assert_eq!(
            hidden,
            vec![EntryKind::Private { from: 0, to: 4 }, EntryKind::Private { from: 4, to: 0 }]
        );
        assert_eq!(big.coalition_randomness.len(), 1);

        let small = extract_view(t, &set(&[2])).unwrap();
        assert!(small.visible_entries.iter().all(|e| big.visible_entries.contains(e)));
        assert!(extract_view(t, &set(&[0, 1, 2, 3])).is_err());
    }

    #[test]
    fn transcript_jsonl_fields() {
        let mut net = Network::new(3, 5);
        net.begin_round("demo");
        net.send_private(0, 2, Bits(vec![1, 0, 1])).unwrap();
        net.broadcast_round((0..3).map(|p| (p, Bits::one(1))).collect()).unwrap();
        let jsonl = net.transcript().to_jsonl();
        let lines: Vec<serde_json::Value> = jsonl.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0]["kind"], "private");
        assert_eq!(lines[0]["bits"], "101");
        assert_eq!(lines[0]["to"], 2);
        assert!(lines[0]["position"].is_null());
        assert_eq!(lines[1]["kind"], "broadcast");
        assert_eq!(lines[1]["position"], 0);
        assert_eq!(lines[1]["phase"], "demo");
    }

    #[test]
    fn same_seed_same_transcript() {
        let run = |seed| {
            let mut net = Network::new(4, seed);
            for _ in 0..5 {
                net.begin_round("x");
                let bits = (0..4).map(|p| (p, net.draw_bits(p, 2))).collect();
                net.broadcast_round(bits).unwrap();
            }
            net.into_transcript()
        };
        assert_eq!(run(10), run(10));
        assert_ne!(run(10), run(11));
    }
}
