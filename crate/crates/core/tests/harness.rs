use std::path::Path;

use qbc_core::harness::exact::{kent_transcript_distribution, statistical_distance, transcript_key};
use qbc_core::harness::{
    concealment_probe, load_rows, run_experiment, AliceChoice, ExperimentConfig, HarnessError, KentShape, OpenBitPolicy,
    OutputSpec, ProbeVariant, ProtocolChoice, Report, ReportFormat,
};
use qbc_core::protocols::{family_for, BobMode, HonestKentAlice, KentParams, KentSession};

fn config(protocol: ProtocolChoice, alice: AliceChoice, trials: usize) -> ExperimentConfig {
    ExperimentConfig {
        protocol,
        alice,
        bob: BobMode::Deferred,
        kent: (protocol == ProtocolChoice::Kent).then_some(KentShape { total_photons: 6, retained_photons: 3, commitment_width: 2 }),
        photons: (protocol == ProtocolChoice::Bb84).then_some(3),
        trials,
        base_seed: 77,
        open_bit_policy: OpenBitPolicy::CoinAfterCommit,
        claim_complement: false,
        probe_variant: ProbeVariant::Standard,
        output: None,
    }
}

fn with_output(mut cfg: ExperimentConfig, path: &Path, format: ReportFormat) -> ExperimentConfig {
    cfg.output = Some(OutputSpec { path: path.to_path_buf(), format });
    cfg
}

/// The report text minus its last line, which holds the aggregate block and
/// therefore the wall time.
fn without_aggregate(text: &str) -> Vec<&str> {
    let lines: Vec<&str> = text.lines().collect();
    lines[..lines.len() - 1].to_vec()
}

#[test]
fn identical_configs_give_identical_reports() {
    let (da, db) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for alice in [AliceChoice::Honest, AliceChoice::Attack] {
        let (a, b) = (da.path().join("r.json"), db.path().join("r.json"));
        let base = config(ProtocolChoice::Kent, alice, 30);
        run_experiment(&with_output(base.clone(), &a, ReportFormat::Json)).unwrap();
        run_experiment(&with_output(base, &b, ReportFormat::Json)).unwrap();
        let (ta, tb) = (std::fs::read_to_string(&a).unwrap(), std::fs::read_to_string(&b).unwrap());
        // The config line embeds the output path, which differs by directory only.
        let (la, lb) = (without_aggregate(&ta), without_aggregate(&tb));
        assert_eq!(la[1..], lb[1..]);
        assert_eq!(la[0].replace(da.path().to_str().unwrap(), ""), lb[0].replace(db.path().to_str().unwrap(), ""));
        let (ra, rb) = (Report::from_json(&ta).unwrap(), Report::from_json(&tb).unwrap());
        assert!(ra.aggregate.agrees_with(&rb.aggregate));
    }
}

#[test]
fn written_reports_reload_consistently() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("r.json");
    let csv = dir.path().join("r.csv");
    let base = config(ProtocolChoice::Kent, AliceChoice::Attack, 25);
    let in_memory = run_experiment(&with_output(base.clone(), &json, ReportFormat::Json)).unwrap();
    run_experiment(&with_output(base, &csv, ReportFormat::Csv)).unwrap();

    let loaded = Report::load_json(&json).unwrap();
    assert_eq!(loaded.rows, in_memory.rows);
    assert!(loaded.aggregate.agrees_with(&in_memory.aggregate));
    assert_eq!(load_rows(&json).unwrap(), in_memory.rows);

    let from_csv = load_rows(&csv).unwrap();
    assert_eq!(from_csv.len(), in_memory.rows.len());
    for (c, r) in from_csv.iter().zip(&in_memory.rows) {
        assert_eq!(
            (c.seed, c.test_verdict, c.opened_bit, c.open_verdict, c.decoded_bit),
            (r.seed, r.test_verdict, r.opened_bit, r.open_verdict, r.decoded_bit)
        );
    }
}

#[test]
fn tampered_aggregates_are_rejected() {
    let report = run_experiment(&config(ProtocolChoice::Bb84, AliceChoice::Attack, 10)).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
    v["aggregate"]["open_acceptance_rate"] = serde_json::json!(0.5);
    let err = Report::from_json(&v.to_string()).unwrap_err();
    assert!(matches!(err, HarnessError::Inconsistent(_)));

    let mut v: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
    v["schema"] = serde_json::json!(2);
    assert!(matches!(Report::from_json(&v.to_string()), Err(HarnessError::Format(_))));
}

#[test]
fn unwritable_output_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("missing").join("r.csv");
    let err = run_experiment(&with_output(config(ProtocolChoice::Kent, AliceChoice::Honest, 2), &bad, ReportFormat::Csv));
    assert!(matches!(err, Err(HarnessError::Io { .. })));
}

#[test]
fn probes_of_sound_variants_are_zero() {
    for alice in [AliceChoice::Honest, AliceChoice::Attack] {
        let mut cfg = config(ProtocolChoice::Bb84, alice, 1);
        cfg.photons = Some(2);
        assert!(concealment_probe(&cfg).unwrap() <= 1e-12);
        let mut cfg = config(ProtocolChoice::Kent, alice, 1);
        cfg.kent = Some(KentShape { total_photons: 3, retained_photons: 2, commitment_width: 2 });
        assert!(concealment_probe(&cfg).unwrap() <= 1e-12, "{alice:?}");
    }
}

#[test]
fn probe_detects_a_leaked_z() {
    let mut cfg = config(ProtocolChoice::Kent, AliceChoice::Honest, 1);
    cfg.kent = Some(KentShape { total_photons: 3, retained_photons: 2, commitment_width: 2 });
    cfg.probe_variant = ProbeVariant::LeakZ;
    let d = concealment_probe(&cfg).unwrap();
    assert!(d > 0.4, "probe {d}");
}

#[test]
fn probe_refuses_large_instances() {
    let mut cfg = config(ProtocolChoice::Kent, AliceChoice::Honest, 1);
    cfg.kent = Some(KentShape { total_photons: 5, retained_photons: 2, commitment_width: 2 });
    assert!(matches!(concealment_probe(&cfg), Err(HarnessError::TooLarge(_))));
    let mut cfg = config(ProtocolChoice::Kent, AliceChoice::Attack, 1);
    cfg.kent = Some(KentShape { total_photons: 3, retained_photons: 2, commitment_width: 6 });
    assert!(matches!(concealment_probe(&cfg), Err(HarnessError::TooLarge(_))));
}

#[test]
fn bayes_optimal_bob_guesses_at_chance() {
    let trials = 10_000;
    let report = run_experiment(&config(ProtocolChoice::Kent, AliceChoice::Honest, trials)).unwrap();
    let rate = report.aggregate.bob_guess_rate.unwrap();
    let sigma = (0.25 / trials as f64).sqrt();
    assert!((rate - 0.5).abs() <= 5.0 * sigma, "guess rate {rate}");
    assert!(report.aggregate.mean_concealment < 1e-12);
}

#[test]
fn simulated_transcripts_lie_in_the_enumerated_support() {
    for seed in 0..200 {
        let params = KentParams::new(3, 2, 2, seed).unwrap();
        let fam = family_for(&params).unwrap();
        let bit = seed % 2 == 0;
        let mut s = KentSession::new(params, HonestKentAlice::new(), BobMode::Deferred).unwrap();
        s.commit_phase().unwrap();
        s.test_phase().unwrap();
        s.mask_phase(bit).unwrap();
        let key = transcript_key(s.transcript()).unwrap();
        let honest = kent_transcript_distribution(&fam, 3, 2, AliceChoice::Honest, bit).unwrap();
        let attack = kent_transcript_distribution(&fam, 3, 2, AliceChoice::Attack, bit).unwrap();
        assert!(honest.get(&key).copied().unwrap_or(0.0) > 0.0);
        assert!((honest.values().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(statistical_distance(&honest, &attack) <= 1e-12);
    }
}

#[test]
fn config_files_load_and_validate() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("c.json");
    std::fs::write(
        &p,
        r#"{"protocol":"bb84","alice":"attack","bob":"immediate","photons":4,"trials":3,"base_seed":1,
            "open_bit_policy":"fixed1","output":{"path":"x.csv","format":"csv"}}"#,
    )
    .unwrap();
    let cfg = ExperimentConfig::load(&p).unwrap();
    assert_eq!(cfg.bob, BobMode::Immediate);
    assert_eq!(cfg.output.as_ref().unwrap().format, ReportFormat::Csv);
    assert!(matches!(ExperimentConfig::load(&dir.path().join("nope.json")), Err(HarnessError::Io { .. })));
    std::fs::write(&p, r#"{"protocol":"bb84","alice":"attack","photons":64,"trials":3,"base_seed":1,"open_bit_policy":"fixed1"}"#).unwrap();
    assert!(matches!(ExperimentConfig::load(&p), Err(HarnessError::Config { ref field, .. }) if field == "photons"));
}
