//! Batch runner behind the `anon-cka` binary.
//!
//! Every command reads one TOML run configuration, validates all of it, and
//! only then computes. Exit codes: 0 success, 1 usage or configuration error,
//! 2 protocol rejection (failed verification, abort, unsatisfied check).

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::adversary::{run_with_adversary, AdversaryStrategy};
use crate::analysis::{
    ame_runner, check_theorem1, estimate_anonymity_tvd, leaky_ame_runner, notification_runner, reproduce_experiment,
    AnalysisError, AnonymityRunner, BoundCheck, ExperimentReport, TvdEstimate,
};
use crate::netmodel::{Bits, Network, PartyId, RoleAssignment};
use crate::protocols::{aka, avka, notification, AvkaParams, AvkaResult, ProtocolError, ShareTable, Source};
use crate::qsim::{
    ghz_state, rotated_ghz, werner_ghz, werner_weight_for_fidelity, MeasurementBasis, NoiseEnsemble, StateVector,
};

#[derive(Debug, Parser)]
#[command(name = "anon-cka", version, about = "Anonymous conference key agreement simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Run configuration (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Master seed; overrides the configuration.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Verifiable key agreement (plain key agreement when `D` is absent).
    Run,
    /// Acceptance rate of the verification test against 1 − ε²/2.
    Theorem1,
    /// Distinguishability of coalition views under two hypotheses.
    Anonymity,
    /// The three-configuration photonic experiment under white noise.
    Experiment,
    /// Prints the XOR share tables of one notification run.
    NotifyDemo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

fn default_trials() -> usize {
    1000
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub n: usize,
    pub alice: PartyId,
    pub receivers: Vec<PartyId>,
    #[serde(rename = "L")]
    pub l: Option<usize>,
    #[serde(rename = "D")]
    pub d: Option<u32>,
    #[serde(default)]
    pub noise: NoiseConfig,
    pub adversary: Option<AdversaryConfig>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    pub theorem1: Option<Theorem1Config>,
    pub anonymity: Option<AnonymityConfig>,
    pub experiment: Option<ExperimentConfigSection>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseModel {
    #[default]
    Pure,
    Werner,
    GhzPrime,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    #[serde(default)]
    pub model: NoiseModel,
    pub fidelity: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "strategy", rename_all = "snake_case", deny_unknown_fields)]
pub enum AdversaryConfig {
    HonestCurious {
        coalition: Vec<PartyId>,
    },
    DishonestSource {
        /// `ghz`, `ghz_minus`, `zero`, `rotated_ghz` (needs `theta`) or
        /// `werner` (needs `fidelity`).
        state: String,
        theta: Option<f64>,
        fidelity: Option<f64>,
    },
    WithholdingAgent {
        party: PartyId,
        #[serde(default = "default_basis")]
        later_basis: MeasurementBasis,
    },
}

fn default_basis() -> MeasurementBasis {
    MeasurementBasis::Z
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Theorem1Config {
    /// Register size; defaults to `n`.
    pub k: Option<usize>,
    #[serde(default)]
    pub theta_grid: Vec<f64>,
    #[serde(default)]
    pub fidelity_grid: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnonymityProtocol {
    #[default]
    Ame,
    Notification,
    /// Broken distillation used as a negative control.
    LeakyAme,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hypothesis {
    pub alice: PartyId,
    pub receivers: Vec<PartyId>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnonymityConfig {
    #[serde(default)]
    pub protocol: AnonymityProtocol,
    pub coalition: Vec<PartyId>,
    /// Defaults to the top-level roles.
    pub hypothesis_a: Option<Hypothesis>,
    pub hypothesis_b: Hypothesis,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfigSection {
    /// Defaults to `noise.fidelity`.
    pub fidelity: Option<f64>,
    #[serde(default = "default_true")]
    pub ghz_prime: bool,
}

/// A failure carrying its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 1,
        message: message.into(),
    }
}

impl From<AnalysisError> for Failure {
    fn from(e: AnalysisError) -> Self {
        usage(e.to_string())
    }
}

impl From<ProtocolError> for Failure {
    fn from(e: ProtocolError) -> Self {
        Failure {
            code: if e.is_abort() { 2 } else { 1 },
            message: e.to_string(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, Failure> {
        toml::from_str(text).map_err(|e| usage(format!("invalid configuration: {e}")))
    }

    pub fn roles(&self) -> Result<RoleAssignment, Failure> {
        RoleAssignment::new(self.n, self.alice, self.receivers.iter().copied()).map_err(|e| usage(e.to_string()))
    }

    fn check_trials(&self) -> Result<(), Failure> {
        if self.trials == 0 {
            return Err(usage("trials must be at least 1"));
        }
        Ok(())
    }

    pub fn source(&self) -> Result<Source, Failure> {
        let fidelity = || {
            self.noise
                .fidelity
                .ok_or_else(|| usage("noise.fidelity is required for this noise model"))
        };
        let s = match self.noise.model {
            NoiseModel::Pure => Source::honest(self.n),
            NoiseModel::Werner => Source::werner(self.n, fidelity()?),
            NoiseModel::GhzPrime => {
                if self.n != 4 {
                    return Err(usage("the ghz_prime noise model needs n = 4"));
                }
                Source::ghz_prime(fidelity()?)
            }
        };
        s.map_err(|e| usage(e.to_string()))
    }

    pub fn strategy(&self) -> Result<Option<AdversaryStrategy>, Failure> {
        let Some(a) = &self.adversary else {
            return Ok(None);
        };
        let s = match a {
            AdversaryConfig::HonestCurious { coalition } => AdversaryStrategy::HonestCurious {
                coalition: coalition.iter().copied().collect(),
            },
            AdversaryConfig::WithholdingAgent { party, later_basis } => AdversaryStrategy::WithholdingAgent {
                party: *party,
                later_basis: *later_basis,
            },
            AdversaryConfig::DishonestSource { state, theta, fidelity } => {
                let n = self.n;
                let generator = match state.as_str() {
                    "ghz" => Ok(NoiseEnsemble::pure(ghz_state(n).map_err(|e| usage(e.to_string()))?)),
                    "ghz_minus" => rotated_ghz(n, PI).map(NoiseEnsemble::pure),
                    "zero" => StateVector::zero(n).map(NoiseEnsemble::pure),
                    "rotated_ghz" => {
                        let theta = theta.ok_or_else(|| usage("rotated_ghz needs theta"))?;
                        rotated_ghz(n, theta).map(NoiseEnsemble::pure)
                    }
                    "werner" => {
                        let f = fidelity.ok_or_else(|| usage("werner needs fidelity"))?;
                        werner_weight_for_fidelity(n, f).and_then(|p| werner_ghz(n, p))
                    }
                    other => return Err(usage(format!("unknown dishonest source state {other:?}"))),
                }
                .map_err(|e| usage(e.to_string()))?;
                AdversaryStrategy::DishonestSource { generator }
            }
        };
        Ok(Some(s))
    }
}

/// Runs the CLI on `args` (program name first). Returns the exit code.
pub fn run_cli<I, T>(args: I, out: &mut impl Write, err: &mut impl Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = if e.use_stderr() {
                write!(err, "{e}")
            } else {
                write!(out, "{e}")
            };
            return code;
        }
    };
    match execute(&cli) {
        Ok((text, code)) => {
            let _ = out.write_all(text.as_bytes());
            code
        }
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn load(cli: &Cli) -> Result<RunConfig, Failure> {
    let path = cli.config.as_ref().ok_or_else(|| usage("--config PATH is required"))?;
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    let mut cfg = RunConfig::from_toml(&text)?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

/// Produces the full output text and exit code, or a failure.
pub fn execute(cli: &Cli) -> Result<(String, i32), Failure> {
    let cfg = load(cli)?;
    match cli.command {
        Command::Run => cmd_run(&cfg, cli.format.unwrap_or(Format::Json)),
        Command::Theorem1 => cmd_theorem1(&cfg, cli.format.unwrap_or(Format::Csv)),
        Command::Anonymity => cmd_anonymity(&cfg, cli.format.unwrap_or(Format::Json)),
        Command::Experiment => cmd_experiment(&cfg, cli.format.unwrap_or(Format::Json)),
        Command::NotifyDemo => cmd_notify_demo(&cfg, cli.format),
    }
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable output");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct RunOutput<'a> {
    #[serde(flatten)]
    result: &'a AvkaResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    adversary_key_guess: Option<Bits>,
}

pub fn cmd_run(cfg: &RunConfig, format: Format) -> Result<(String, i32), Failure> {
    let roles = cfg.roles()?;
    let source = cfg.source()?;
    let strategy = cfg.strategy()?;
    let l = cfg.l.ok_or_else(|| usage("L is required for run"))?;

    let Some(d) = cfg.d else {
        if strategy.is_some() {
            return Err(usage("an adversary needs the verifiable protocol (set D)"));
        }
        let mut net = Network::new(cfg.n, cfg.seed);
        let states = (0..l)
            .map(|_| source.emit(net.source()))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| usage(e.to_string()))?;
        let out = aka(&roles, &states, &mut net)?;
        let text = match format {
            Format::Json => json(&out),
            Format::Csv => {
                let mut s = String::from("party,key\n");
                for (p, k) in out.participants.iter().zip(&out.keys) {
                    s.push_str(&format!("{p},{k}\n"));
                }
                s
            }
        };
        return Ok((text, 0));
    };
    let params = AvkaParams::new(l, d).map_err(|e| usage(e.to_string()))?;
    if let Some(s) = &strategy {
        s.validate(&roles)?;
    }

    let (result, guess) = match &strategy {
        Some(s) => {
            let run = run_with_adversary(&roles, params, s, &source, cfg.seed)?;
            let guess = matches!(s, AdversaryStrategy::WithholdingAgent { .. }).then_some(run.adversary_key_guess);
            (run.result, guess)
        }
        None => (avka(&roles, params, &source, &mut Network::new(cfg.n, cfg.seed))?, None),
    };
    let code = if result.validated { 0 } else { 2 };
    let text = match format {
        Format::Json => json(&RunOutput {
            result: &result,
            adversary_key_guess: guess,
        }),
        Format::Csv => format!(
            "validated,aborted,keygen_rounds,verification_rounds,failed_verifications,key_length\n{},{},{},{},{},{}\n",
            result.validated,
            result.aborted,
            result.keygen_rounds,
            result.verification_rounds,
            result.failed_verifications,
            result.key_length()
        ),
    };
    Ok((text, code))
}

pub fn cmd_theorem1(cfg: &RunConfig, format: Format) -> Result<(String, i32), Failure> {
    cfg.check_trials()?;
    let section = cfg.theorem1.clone().unwrap_or_default();
    let k = section.k.unwrap_or(cfg.n);
    if k > crate::analysis::MAX_EXACT_QUBITS {
        return Err(usage(format!(
            "size error: {k} qubits; exact trace distance is limited to {}",
            crate::analysis::MAX_EXACT_QUBITS
        )));
    }
    let mut family = Vec::new();
    for &theta in &section.theta_grid {
        family.push(rotated_ghz(k, theta).map(NoiseEnsemble::pure).map_err(|e| usage(e.to_string()))?);
    }
    for &f in &section.fidelity_grid {
        family.push(
            werner_weight_for_fidelity(k, f)
                .and_then(|p| werner_ghz(k, p))
                .map_err(|e| usage(e.to_string()))?,
        );
    }
    let checks = check_theorem1(&family, cfg.trials, cfg.seed)?;
    let code = if checks.iter().all(|c| c.satisfied) { 0 } else { 2 };
    let text = match format {
        Format::Json => json(&checks),
        Format::Csv => {
            let mut s = format!("{}\n", BoundCheck::CSV_HEADER);
            for c in &checks {
                s.push_str(&c.csv_row());
                s.push('\n');
            }
            s
        }
    };
    Ok((text, code))
}

pub fn cmd_anonymity(cfg: &RunConfig, format: Format) -> Result<(String, i32), Failure> {
    cfg.check_trials()?;
    let section = cfg.anonymity.as_ref().ok_or_else(|| usage("missing [anonymity] section"))?;
    let hypothesis = |h: &Hypothesis| {
        RoleAssignment::new(cfg.n, h.alice, h.receivers.iter().copied()).map_err(|e| usage(e.to_string()))
    };
    let a = match &section.hypothesis_a {
        Some(h) => hypothesis(h)?,
        None => cfg.roles()?,
    };
    let b = hypothesis(&section.hypothesis_b)?;
    let coalition: BTreeSet<PartyId> = section.coalition.iter().copied().collect();
    let runner: &AnonymityRunner = match section.protocol {
        AnonymityProtocol::Ame => &ame_runner,
        AnonymityProtocol::Notification => &notification_runner,
        AnonymityProtocol::LeakyAme => &leaky_ame_runner,
    };
    let est: TvdEstimate = estimate_anonymity_tvd(runner, &a, &b, &coalition, cfg.trials, cfg.seed)?;
    let code = if est.below_threshold { 0 } else { 2 };
    let text = match format {
        Format::Json => json(&est),
        Format::Csv => format!(
            "tvd,stderr,plugin_tvd,guessing_bound,projected,trials_per_hypothesis\n{},{},{},{},{},{}\n",
            est.tvd, est.stderr, est.plugin_tvd, est.guessing_bound, est.projected, est.trials_per_hypothesis
        ),
    };
    Ok((text, code))
}

pub fn cmd_experiment(cfg: &RunConfig, format: Format) -> Result<(String, i32), Failure> {
    cfg.check_trials()?;
    let section = cfg.experiment.clone().unwrap_or(ExperimentConfigSection {
        fidelity: None,
        ghz_prime: true,
    });
    let fidelity = section
        .fidelity
        .or(cfg.noise.fidelity)
        .ok_or_else(|| usage("experiment.fidelity (or noise.fidelity) is required"))?;
    werner_weight_for_fidelity(4, fidelity).map_err(|e| usage(format!("infeasible fidelity: {e}")))?;
    let report: ExperimentReport = reproduce_experiment(fidelity, cfg.trials, cfg.seed, section.ghz_prime)?;
    let text = match format {
        Format::Json => json(&report),
        Format::Csv => report.to_csv(),
    };
    Ok((text, 0))
}

fn tables_csv(tables: &[ShareTable]) -> String {
    let n = tables.len();
    let mut s = String::from("target,sender");
    for k in 0..n {
        s.push_str(&format!(",r{k}"));
    }
    s.push_str(",parity\n");
    for t in tables {
        for (j, row) in t.rows.iter().enumerate() {
            s.push_str(&format!("{},{j}", t.target));
            for r in row {
                s.push_str(&format!(",{r}"));
            }
            s.push_str(&format!(",{}\n", t.row_parity(j)));
        }
    }
    s
}

pub fn cmd_notify_demo(cfg: &RunConfig, format: Option<Format>) -> Result<(String, i32), Failure> {
    let roles = cfg.roles()?;
    let mut net = Network::new(cfg.n, cfg.seed);
    let out = notification(&roles, &mut net)?;
    let text = match format {
        None => {
            let mut s = String::new();
            for t in &out.tables {
                s.push_str(&t.render(roles.alice()));
                s.push('\n');
            }
            s.push_str(&format!("notified: {:?}\n", out.notified_set()));
            s.push_str(&format!("private bits sent: {}\n", net.counters().private_bits_sent));
            s
        }
        Some(Format::Json) => {
            #[derive(Serialize)]
            struct Demo<'a> {
                notified: &'a [u8],
                tables: &'a [ShareTable],
                private_bits_sent: u64,
            }
            json(&Demo {
                notified: &out.notified,
                tables: &out.tables,
                private_bits_sent: net.counters().private_bits_sent,
            })
        }
        Some(Format::Csv) => tables_csv(&out.tables),
    };
    Ok((text, 0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> RunConfig {
        RunConfig::from_toml(text).unwrap()
    }

    #[test]
    fn missing_receivers_is_a_config_error() {
        let e = RunConfig::from_toml("n = 4\nalice = 0\nL = 10\nD = 2\n").unwrap_err();
        assert_eq!(e.code, 1);
        assert!(e.message.contains("receivers"));
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::from_toml("n = 4\nalice = 0\nreceivers = [1]\nbogus = 3\n").is_err());
    }

    #[test]
    fn honest_run_validates() {
        let c = cfg("n = 4\nalice = 0\nreceivers = [1, 2]\nL = 40\nD = 4\nseed = 3\n");
        let (text, code) = cmd_run(&c, Format::Json).unwrap();
        assert_eq!(code, 0);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["validated"], true);
        assert!(!v["key_bits"][0].as_str().unwrap().is_empty());
    }

    #[test]
    fn ghz_minus_source_is_rejected() {
        let c = cfg(concat!(
            "n = 4\nalice = 0\nreceivers = [1, 2]\nL = 40\nD = 4\n",
            "[adversary]\nstrategy = \"dishonest_source\"\nstate = \"ghz_minus\"\n"
        ));
        let (text, code) = cmd_run(&c, Format::Json).unwrap();
        assert_eq!(code, 2);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["failed_verifications"], v["verification_rounds"]);
    }

    #[test]
    fn aka_when_d_absent() {
        let c = cfg("n = 3\nalice = 0\nreceivers = [2]\nL = 5\n");
        let (text, code) = cmd_run(&c, Format::Csv).unwrap();
        assert_eq!(code, 0);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[1].split(',').nth(1), lines[2].split(',').nth(1));
    }

    #[test]
    fn theorem1_edge_cases() {
        let c = cfg("n = 4\nalice = 0\nreceivers = [1]\ntrials = 10\n[theorem1]\n");
        let (text, code) = cmd_theorem1(&c, Format::Csv).unwrap();
        assert_eq!((text.as_str(), code), ("epsilon,accept_rate,stderr,bound,satisfied\n", 0));
        let c = cfg("n = 4\nalice = 0\nreceivers = [1]\n[theorem1]\nk = 11\ntheta_grid = [0.0]\n");
        assert_eq!(cmd_theorem1(&c, Format::Csv).unwrap_err().code, 1);
    }

    #[test]
    fn anonymity_rejects_alice_in_coalition() {
        let c = cfg(concat!(
            "n = 4\nalice = 0\nreceivers = [1]\ntrials = 10\n",
            "[anonymity]\ncoalition = [0]\nhypothesis_b = { alice = 0, receivers = [2] }\n"
        ));
        assert_eq!(cmd_anonymity(&c, Format::Json).unwrap_err().code, 1);
    }

    #[test]
    fn experiment_fidelity_floor() {
        let c = cfg("n = 4\nalice = 0\nreceivers = [1]\ntrials = 10\n[experiment]\nfidelity = 0.05\n");
        assert_eq!(cmd_experiment(&c, Format::Json).unwrap_err().code, 1);
    }

    #[test]
    fn clap_errors_exit_1() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        assert_eq!(run_cli(["anon-cka", "frobnicate"], &mut out, &mut err), 1);
        assert_eq!(run_cli(["anon-cka", "run"], &mut out, &mut err), 1);
        assert!(String::from_utf8(err).unwrap().contains("--config"));
    }
}
