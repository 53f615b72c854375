use qbc_core::attacks::{epr_attack_bb84, KentAttacker};
use qbc_core::protocols::{
    bb84_commit_protocol, BobMode, HonestBb84Alice, HonestKentAlice, KentCommitter, KentParams, KentSession, OpenOutcome,
    TestOutcome, Transcript,
};
use qbc_core::qstate::{trace_distance, DensityMatrix};

/// With `mixed_check` every retained photon must look maximally mixed to Bob
/// before the open phase, which holds for a deferred Bob facing the attacker.
fn full_run<A: KentCommitter>(
    alice: A,
    seed: u64,
    mode: BobMode,
    mask: bool,
    claim: bool,
    mixed_check: bool,
) -> (Transcript, OpenOutcome) {
    let params = KentParams::new(8, 4, 2, seed).unwrap();
    let mut s = KentSession::new(params, alice, mode).unwrap();
    assert!(s.commit_phase().unwrap());
    assert_eq!(s.test_phase().unwrap(), TestOutcome::Passed);
    assert!(s.mask_phase(mask).unwrap());
    for &i in s.retained().iter().filter(|_| mixed_check) {
        let rho = s.bob_reduced_state(i).unwrap();
        assert!(trace_distance(&rho, &DensityMatrix::maximally_mixed(2)).unwrap() < 1e-9);
    }
    let outcome = s.open_phase(claim).unwrap();
    (s.into_transcript(), outcome)
}

#[test]
fn honest_and_attack_transcripts_have_the_same_shape() {
    for seed in 0..100 {
        let bit = seed % 2 == 1;
        let (th, oh) = full_run(HonestKentAlice::new(), seed, BobMode::Deferred, bit, bit, false);
        let (ta, oa) = full_run(KentAttacker::new(), seed, BobMode::Deferred, false, bit, true);
        assert_eq!(th.shape(), ta.shape());
        assert_eq!(th.header, ta.header);
        assert_eq!(oh.accepted_bit(), Some(bit));
        assert_eq!(oa.accepted_bit(), Some(bit));
        assert!(th.is_complete() && ta.is_complete());
    }
}

#[test]
fn immediate_bob_accepts_the_attack_too() {
    for seed in 0..50 {
        for claim in [false, true] {
            let (t, o) = full_run(KentAttacker::new(), seed, BobMode::Immediate, false, claim, false);
            assert_eq!(o.accepted_bit(), Some(claim), "seed {seed}");
            assert!(t.validate().is_ok());
        }
    }
}

#[test]
fn transcripts_survive_a_jsonl_roundtrip() {
    let (t, _) = full_run(KentAttacker::new(), 3, BobMode::Deferred, false, true, true);
    let text = t.to_jsonl();
    let back = Transcript::read_jsonl(text.as_bytes()).unwrap();
    assert_eq!(back, t);
    assert_eq!(back.to_jsonl(), text);
}

#[test]
fn bb84_honest_and_epr_runs() {
    for seed in 0..50 {
        for mode in [BobMode::Deferred, BobMode::Immediate] {
            let honest = bb84_commit_protocol(HonestBb84Alice::new(true), mode, 6, true, seed).unwrap();
            assert_eq!(honest.outcome.accepted_bit(), Some(true));
            for claim in [false, true] {
                let epr = bb84_commit_protocol(epr_attack_bb84(6).unwrap(), mode, 6, claim, seed).unwrap();
                assert_eq!(epr.outcome.accepted_bit(), Some(claim));
                assert_eq!(epr.transcript.shape(), honest.transcript.shape());
            }
        }
    }
}
