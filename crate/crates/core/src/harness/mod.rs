//! Seeded batch experiments over the protocols and attacks, plus the exact
//! concealment probe.
//!
//! Trial `i` of a config runs with seed `base_seed + i`: that seed drives
//! the trial's single generator (and, for Kent-style runs, the commitment
//! family drawn from it), so any row can be replayed alone with
//! [`run_trial`]. Trials run in index order and rows are written to the
//! configured output as they complete.

mod config;
pub mod exact;
mod report;

use std::path::PathBuf;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use thiserror::Error;

use crate::attacks::{epr_attack_bb84, AttackError, KentAttacker};
use crate::protocols::{
    Bb84Committer, Bb84Session, HonestBb84Alice, HonestKentAlice, KentCommitter, KentSession, OpenOutcome, ProtocolError,
    TestOutcome,
};
use crate::oneway::OneWayError;
use crate::qstate::QStateError;
use crate::SimRng;

pub use config::{
    AliceChoice, ExperimentConfig, KentShape, OpenBitPolicy, OutputSpec, ProbeVariant, ProtocolChoice, ReportFormat,
    DEFAULT_BB84_PHOTONS,
};
pub use exact::concealment_probe;
pub use report::{load_rows, read_csv_rows, Aggregate, OpenVerdict, Report, ReportWriter, TestVerdict, TrialRow, CSV_COLUMNS, REPORT_SCHEMA};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config field `{field}`: {message}")]
    Config { field: String, message: String },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed report: {0}")]
    Format(String),
    #[error("report is inconsistent: {0}")]
    Inconsistent(String),
    #[error("{0}")]
    TooLarge(String),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Attack(#[from] AttackError),
    #[error(transparent)]
    State(#[from] QStateError),
    #[error(transparent)]
    OneWay(#[from] OneWayError),
}

/// Stream for Bob's tie-breaking coin, kept apart from the protocol stream
/// so that guessing does not perturb the run.
const GUESS_STREAM: u64 = 1;
/// Stream for honest BB84 Alice's coin, which must be drawn before the
/// session's generator exists.
const PREP_STREAM: u64 = 2;

fn side_stream(seed: u64, stream: u64) -> SimRng {
    let mut rng = SimRng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn open_verdict(o: &OpenOutcome) -> OpenVerdict {
    match o {
        OpenOutcome::Accepted { .. } => OpenVerdict::Accept,
        OpenOutcome::Rejected { .. } => OpenVerdict::Reject,
        OpenOutcome::Aborted { .. } => OpenVerdict::Aborted,
    }
}

fn kent_trial<A: KentCommitter>(cfg: &ExperimentConfig, seed: u64, alice: A, attacker: bool) -> Result<TrialRow, HarnessError> {
    let params = cfg.kent_shape().params(seed)?;
    let mut s = KentSession::new(params, alice, cfg.bob)?;
    let model = exact::HonestModel::new(s.family())?;
    let mut row = TrialRow::new(seed);
    if !s.commit_phase()? {
        row.test_verdict = TestVerdict::Aborted;
        return Ok(row);
    }
    row.test_verdict = match s.test_phase()? {
        TestOutcome::Passed => TestVerdict::Pass,
        TestOutcome::AliceCaught { .. } => TestVerdict::Fail,
        TestOutcome::Aborted { .. } => TestVerdict::Aborted,
    };
    if row.test_verdict != TestVerdict::Pass {
        return Ok(row);
    }
    let fixed = cfg.open_bit_policy.fixed_bit();
    let mask_bit = match (attacker, fixed) {
        (_, Some(b)) => b,
        (true, None) => false,
        (false, None) => s.rng_mut().random(),
    };
    if !s.mask_phase(mask_bit)? {
        row.open_verdict = OpenVerdict::Aborted;
        return Ok(row);
    }
    row.bob_guess = Some(model.bayes_guess(s.transcript(), &mut side_stream(seed, GUESS_STREAM)));
    row.concealment = model.concealment(s.transcript())?;
    let opened = match (attacker, fixed) {
        (true, Some(b)) => b,
        (true, None) => s.rng_mut().random(),
        (false, _) => mask_bit ^ cfg.claim_complement,
    };
    row.opened_bit = Some(opened);
    row.invert_calls_before_open = s.audit().refused_calls() + s.audit().permitted_calls();
    let outcome = s.open_phase(opened)?;
    row.open_verdict = open_verdict(&outcome);
    row.decoded_bit = outcome.accepted_bit();
    Ok(row)
}

fn bb84_trial<A: Bb84Committer>(
    cfg: &ExperimentConfig,
    seed: u64,
    alice: A,
    honest_bit: Option<bool>,
) -> Result<TrialRow, HarnessError> {
    let mut s = Bb84Session::new(cfg.photon_count(), alice, cfg.bob, seed)?;
    let mut row = TrialRow::new(seed);
    if !s.commit_phase()? {
        row.open_verdict = OpenVerdict::Aborted;
        return Ok(row);
    }
    // Nothing classical has been sent yet, so Bob's guess is a coin and his
    // photon states are the same for both bits.
    row.bob_guess = Some(side_stream(seed, GUESS_STREAM).random());
    let opened = match honest_bit {
        Some(b) => b ^ cfg.claim_complement,
        None => cfg.open_bit_policy.fixed_bit().unwrap_or_else(|| s.rng_mut().random()),
    };
    row.opened_bit = Some(opened);
    let outcome = s.open_phase(opened)?;
    row.open_verdict = open_verdict(&outcome);
    row.decoded_bit = outcome.accepted_bit();
    Ok(row)
}

/// Runs trial `trial` of `cfg` on its own.
pub fn run_trial(cfg: &ExperimentConfig, trial: usize) -> Result<TrialRow, HarnessError> {
    let seed = cfg.trial_seed(trial);
    match (cfg.protocol, cfg.alice) {
        (ProtocolChoice::Kent, AliceChoice::Honest) => kent_trial(cfg, seed, HonestKentAlice::new(), false),
        (ProtocolChoice::Kent, AliceChoice::Attack) => kent_trial(cfg, seed, KentAttacker::new(), true),
        (ProtocolChoice::Bb84, AliceChoice::Honest) => {
            let bit = cfg.open_bit_policy.fixed_bit().unwrap_or_else(|| side_stream(seed, PREP_STREAM).random());
            bb84_trial(cfg, seed, HonestBb84Alice::new(bit), Some(bit))
        }
        (ProtocolChoice::Bb84, AliceChoice::Attack) => bb84_trial(cfg, seed, epr_attack_bb84(cfg.photon_count())?, None),
    }
}

/// Runs every trial, streaming rows to `cfg.output` when one is set.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Report, HarnessError> {
    cfg.validate()?;
    let start = Instant::now();
    let mut writer = cfg.output.as_ref().map(|o| ReportWriter::create(o, cfg)).transpose()?;
    let mut rows = Vec::with_capacity(cfg.trials);
    for i in 0..cfg.trials {
        let row = run_trial(cfg, i)?;
        if let Some(w) = writer.as_mut() {
            w.row(&row)?;
        }
        rows.push(row);
    }
    let aggregate = Aggregate::from_rows(&rows, start.elapsed().as_secs_f64());
    if let Some(w) = writer {
        w.finish(&aggregate)?;
    }
    log::info!(
        "{} trials: acceptance {:.4}, test pass rate {:?}",
        aggregate.trials,
        aggregate.open_acceptance_rate,
        aggregate.test_pass_rate
    );
    Ok(Report { schema: REPORT_SCHEMA, config: cfg.clone(), rows, aggregate })
}
