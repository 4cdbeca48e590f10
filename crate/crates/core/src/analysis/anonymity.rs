//! Distinguishability of coalition views under two identity hypotheses.
//!
//! The plug-in TVD between two empirical histograms over `K` cells is biased
//! upward by roughly `√(K/(πN))` even when the distributions coincide, so it
//! cannot be compared with its own standard error. The reported `tvd` is a
//! held-out estimate instead: the first half of each sample picks the event
//! `A = {v : p̂(v) > q̂(v)}`, and the second half estimates `P(A) − Q(A)`. That
//! difference is unbiased for a lower bound on the true TVD and is exactly
//! zero in expectation when the hypotheses agree, with a plain two-proportion
//! standard error. The plug-in value is reported alongside.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;

use crate::netmodel::{extract_view, Bits, Network, PartyId, RoleAssignment};
use crate::protocols::{ame, notification, ProtocolError};
use crate::qsim::{ghz_state, measure, MeasurementBasis};
use crate::rng::derive_seed;

use super::AnalysisError;

/// One protocol execution on a fresh network.
pub type AnonymityRunner = dyn Fn(&RoleAssignment, &mut Network) -> Result<(), ProtocolError>;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TvdEstimate {
    /// Held-out estimate, clamped to `[0, 1]`.
    pub tvd: f64,
    pub stderr: f64,
    /// Signed held-out difference before clamping.
    pub held_out_difference: f64,
    /// Plug-in TVD over all samples (biased upward).
    pub plugin_tvd: f64,
    pub trials_per_hypothesis: usize,
    pub n: usize,
    /// Coalition size.
    pub t: usize,
    /// `min(1, 1/(n − t) + tvd)`.
    pub guessing_bound: f64,
    /// Whether views were reduced to the per-round projection.
    pub projected: bool,
    /// Distinct histogram cells over both hypotheses.
    pub distinct_views: usize,
    /// `tvd < 4·stderr`.
    pub below_threshold: bool,
}

pub fn notification_runner(roles: &RoleAssignment, net: &mut Network) -> Result<(), ProtocolError> {
    notification(roles, net).map(|_| ())
}

/// Distillation of a perfect GHZ state shared by all `n` parties.
pub fn ame_runner(roles: &RoleAssignment, net: &mut Network) -> Result<(), ProtocolError> {
    ame(&ghz_state(roles.n())?, roles, net).map(|_| ())
}

/// A broken distillation in which the receivers announce 0 instead of a
/// fresh coin. Used as a negative control: its views do depend on who the
/// receivers are.
pub fn leaky_ame_runner(roles: &RoleAssignment, net: &mut Network) -> Result<(), ProtocolError> {
    let n = roles.n();
    let mut state = ghz_state(n)?;
    net.begin_round("ame/step1");
    let mut announce = BTreeMap::new();
    // measure from the highest party down so qubit indices stay valid
    for p in roles.non_participants().into_iter().rev() {
        let (x, post) = measure(&state, p, MeasurementBasis::X, net.nature())?;
        state = post;
        net.record_local(p, Bits::one(x));
        announce.insert(p, Bits::one(x));
    }
    announce.insert(roles.alice(), net.draw_bits(roles.alice(), 1));
    for &r in roles.receivers() {
        announce.insert(r, Bits::one(0));
    }
    net.begin_round("ame/step2");
    net.broadcast_round(announce)?;
    Ok(())
}

fn check_hypotheses(a: &RoleAssignment, b: &RoleAssignment, coalition: &BTreeSet<PartyId>) -> Result<(), AnalysisError> {
    if a.n() != b.n() || a.m() != b.m() {
        return Err(AnalysisError::Input(format!(
            "hypotheses differ in shape: n={} m={} vs n={} m={}",
            a.n(),
            a.m(),
            b.n(),
            b.m()
        )));
    }
    if let Some(p) = coalition.iter().find(|&&p| p >= a.n()) {
        return Err(AnalysisError::Input(format!("coalition member {p} outside 0..{}", a.n())));
    }
    if coalition.len() + 2 > a.n() {
        return Err(AnalysisError::Input(format!(
            "coalition of {} in a network of {} (at most n − 2)",
            coalition.len(),
            a.n()
        )));
    }
    for h in [a, b] {
        if coalition.contains(&h.alice()) {
            return Err(AnalysisError::Input(format!("coalition contains Alice ({})", h.alice())));
        }
    }
    Ok(())
}

struct Samples {
    canonical: Vec<String>,
    projected: Vec<String>,
}

fn sample_views(
    runner: &AnonymityRunner,
    roles: &RoleAssignment,
    coalition: &BTreeSet<PartyId>,
    trials: usize,
    seed: u64,
) -> Result<Samples, AnalysisError> {
    let mut s = Samples {
        canonical: Vec::with_capacity(trials),
        projected: Vec::with_capacity(trials),
    };
    for t in 0..trials {
        let mut net = Network::new(roles.n(), derive_seed(seed, t as u64));
        runner(roles, &mut net)?;
        let view = extract_view(net.transcript(), coalition)?;
        s.canonical.push(view.canonical_key());
        s.projected.push(view.projected_key());
    }
    Ok(s)
}

fn histogram(keys: &[String]) -> HashMap<&str, usize> {
    let mut h = HashMap::new();
    for k in keys {
        *h.entry(k.as_str()).or_insert(0) += 1;
    }
    h
}

fn plugin_tvd(a: &[String], b: &[String]) -> f64 {
    let (ha, hb) = (histogram(a), histogram(b));
    let keys: BTreeSet<&str> = ha.keys().chain(hb.keys()).copied().collect();
    let (na, nb) = (a.len() as f64, b.len() as f64);
    0.5 * keys
        .iter()
        .map(|k| (*ha.get(k).unwrap_or(&0) as f64 / na - *hb.get(k).unwrap_or(&0) as f64 / nb).abs())
        .sum::<f64>()
}

/// Returns `(P̂(A) − Q̂(A), stderr)` on the second halves.
fn held_out(a: &[String], b: &[String]) -> (f64, f64) {
    let split = a.len() / 2;
    let (ha, hb) = (histogram(&a[..split]), histogram(&b[..split]));
    let in_a = |k: &String| ha.get(k.as_str()).copied().unwrap_or(0) > hb.get(k.as_str()).copied().unwrap_or(0);
    let n2 = (a.len() - split) as f64;
    let pa = a[split..].iter().filter(|k| in_a(k)).count() as f64 / n2;
    let qa = b[split..].iter().filter(|k| in_a(k)).count() as f64 / n2;
    // never below the one-count resolution of the second half
    let stderr = ((pa * (1.0 - pa) + qa * (1.0 - qa)) / n2).sqrt().max(1.0 / n2);
    (pa - qa, stderr)
}

/// Runs `runner` `trials` times under each hypothesis and compares the
/// coalition's views. Hypothesis `h ∈ {0, 1}`, trial `t` runs on a network
/// seeded with `derive_seed(derive_seed(seed, h), t)`.
///
/// Views are histogrammed by their canonical serialization unless that
/// yields more than `trials / 10` distinct cells, in which case the
/// per-round projection is used and `projected` is set.
pub fn estimate_anonymity_tvd(
    runner: &AnonymityRunner,
    hypothesis_a: &RoleAssignment,
    hypothesis_b: &RoleAssignment,
    coalition: &BTreeSet<PartyId>,
    trials: usize,
    seed: u64,
) -> Result<TvdEstimate, AnalysisError> {
    check_hypotheses(hypothesis_a, hypothesis_b, coalition)?;
    if trials < 2 {
        return Err(AnalysisError::Input("need at least 2 trials per hypothesis".into()));
    }
    let sa = sample_views(runner, hypothesis_a, coalition, trials, derive_seed(seed, 0))?;
    let sb = sample_views(runner, hypothesis_b, coalition, trials, derive_seed(seed, 1))?;

    let distinct = |a: &[String], b: &[String]| a.iter().chain(b).collect::<BTreeSet<_>>().len();
    let mut distinct_views = distinct(&sa.canonical, &sb.canonical);
    let projected = distinct_views > trials / 10;
    let (ka, kb) = if projected {
        distinct_views = distinct(&sa.projected, &sb.projected);
        (&sa.projected, &sb.projected)
    } else {
        (&sa.canonical, &sb.canonical)
    };

    let (diff, stderr) = held_out(ka, kb);
    let tvd = diff.clamp(0.0, 1.0);
    let n = hypothesis_a.n();
    let t = coalition.len();
    Ok(TvdEstimate {
        tvd,
        stderr,
        held_out_difference: diff,
        plugin_tvd: plugin_tvd(ka, kb),
        trials_per_hypothesis: trials,
        n,
        t,
        guessing_bound: (1.0 / (n - t) as f64 + tvd).min(1.0),
        projected,
        distinct_views,
        below_threshold: tvd < 4.0 * stderr,
    })
}
