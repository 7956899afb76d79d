use std::sync::Arc;

use cvpv_core::bits::BitString;
use cvpv_core::compilers::{
    cvpv_to_cr, run_rapid_fire, run_seq_rapid_fire, run_sequential, run_single_round, verdict_checks, Compiler,
    CompilerConfig, CompilerError, Geometry, HonestStrategy, Mode, ReceivedAnswer, RejectReason, FIRST_PROVER_ID,
};
use cvpv_core::crcore::{honest_transcript, mock_backend, Answer, CrError, CrProtocol, CrTranscript, RcsBackendConfig, RcsProtocol};
use cvpv_core::seed::Seed;
use cvpv_core::spacetime::{rat, TimeStamp};
use rand::RngCore;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn t(s: &str) -> TimeStamp {
    TimeStamp::parse(s).unwrap()
}

fn rcs(n: usize, k: usize, rounds: usize) -> Arc<dyn CrProtocol> {
    let cfg = RcsBackendConfig {
        n_qubits: n,
        depth: 12,
        k,
        gamma: if rounds == 1 { 1.0 } else { 0.5 },
        delta: 0.5,
        ..Default::default()
    };
    Arc::new(RcsProtocol::new(cfg, rounds).unwrap())
}

fn mock(kind: &str, rounds: usize) -> Arc<dyn CrProtocol> {
    Arc::new(mock_backend(kind, rounds).unwrap())
}

#[test]
fn honest_single_round_is_on_time_and_queries_once() {
    let out = run_single_round(&CompilerConfig::single(), rcs(6, 50, 1), &HonestStrategy::default(), Seed::from_u64(1))
        .unwrap();
    assert!(out.verdict.accept, "{:?}", out.verdict.reason);
    let r = &out.transcript.blocks[0].rounds[0];
    assert_eq!(r.answers[0].as_ref().unwrap().t, t("2"));
    assert_eq!(r.answers[1].as_ref().unwrap().t, t("2"));
    let prover: Vec<_> = out.queries.iter().filter(|q| q.party == FIRST_PROVER_ID).collect();
    assert_eq!(prover.len(), 1);
    let x = BitString::from_hex(128, &r.x).unwrap();
    let y = BitString::from_hex(128, &r.y).unwrap();
    assert_eq!(prover[0].input, x.xor(&y).unwrap());
    assert_eq!(prover[0].time, Some(t("1")));
    assert!(out.log.light_cone_violations().is_empty());
    assert!(out.violations.is_empty());
}

#[test]
fn sequential_prover_queries_at_half_steps() {
    let cfg = CompilerConfig::sequential(4);
    let out = run_sequential(&cfg, mock("coin-flip", 4), &HonestStrategy::default(), Seed::from_u64(2)).unwrap();
    assert!(out.verdict.accept);
    let times: Vec<_> = out
        .queries
        .iter()
        .filter(|q| q.party == FIRST_PROVER_ID)
        .map(|q| q.time.unwrap())
        .collect();
    assert_eq!(times, vec![t("0.5"), t("1.5"), t("2.5"), t("3.5")]);
    let due: Vec<_> = out.transcript.rounds().map(|r| r.answers[0].as_ref().unwrap().t).collect();
    assert_eq!(due, vec![t("1"), t("2"), t("3"), t("4")]);
}

#[test]
fn displaced_prover_misses_the_deadline() {
    let s = HonestStrategy::displaced(rat(1, 5));
    let out = run_single_round(&CompilerConfig::single(), mock("always-accept", 1), &s, Seed::ZERO).unwrap();
    assert_eq!(out.verdict.reason, Some(RejectReason::Timing));
    let r = &out.transcript.blocks[0].rounds[0];
    // shares meet at 1.2 at time 1.2, the answer needs another 1.2 to reach V_0
    assert_eq!(r.answers[0].as_ref().unwrap().t, t("2.4"));
    assert_eq!(r.answers[1].as_ref().unwrap().t, t("2"));
    assert!(out.verdict.diagnostics.mismatches.is_empty());
    assert!(out.verdict.diagnostics.cr.is_empty());
}

#[test]
fn rapid_fire_span_on_the_wide_geometry() {
    let cfg = CompilerConfig::rapid_fire(8, rat(1, 10)).with_geometry(Geometry::single_default());
    let out = run_rapid_fire(&cfg, mock("deterministic-answer", 8), &HonestStrategy::default(), Seed::from_u64(3))
        .unwrap();
    assert!(out.verdict.accept);
    let (first, last) = out.log.span().unwrap();
    assert_eq!(first, t("0"));
    assert_eq!(last.value(), rat(7, 10) + rat(2, 1));
    let due: Vec<_> = out.transcript.rounds().map(|r| r.answers[1].as_ref().unwrap().t).collect();
    assert_eq!(due[7], t("2.7"));
}

#[test]
fn one_block_of_seq_rapid_fire_is_rapid_fire() {
    let rf = CompilerConfig::rapid_fire(5, rat(1, 8));
    let srf = CompilerConfig::seq_rapid_fire(5, rat(1, 8), 1, 0.5);
    for seed in 0..3 {
        let a = run_rapid_fire(&rf, rcs(4, 5, 5), &HonestStrategy::default(), Seed::from_u64(seed)).unwrap();
        let b = run_seq_rapid_fire(&srf, rcs(4, 5, 5), &HonestStrategy::default(), Seed::from_u64(seed)).unwrap();
        assert_eq!(a.log, b.log);
        assert_eq!(a.log.to_jsonl(), b.log.to_jsonl());
        assert_eq!(a.transcript, b.transcript);
        assert_eq!(a.verdict, b.verdict);
    }
}

#[test]
fn seq_rapid_fire_counts_blocks() {
    let cfg = CompilerConfig::seq_rapid_fire(3, rat(1, 4), 4, 0.75);
    let out = run_seq_rapid_fire(&cfg, mock("always-accept", 3), &HonestStrategy::default(), Seed::ZERO).unwrap();
    assert!(out.verdict.accept);
    assert_eq!(out.transcript.blocks.len(), 4);
    assert_eq!(out.verdict.diagnostics.blocks_passed, 4);
    assert_eq!(out.verdict.diagnostics.blocks_required, 3);
    assert!(out.log.light_cone_violations().is_empty());
}

#[test]
fn mode_mismatch_and_backend_checks() {
    let single = CompilerConfig::single();
    let e = run_sequential(&single, mock("always-accept", 1), &HonestStrategy::default(), Seed::ZERO).unwrap_err();
    assert!(matches!(e, CompilerError::ConfigInvalid(_)));
    let e = Compiler::new(CompilerConfig::sequential(3), mock("always-accept", 2)).unwrap_err();
    assert!(matches!(e, CompilerError::ConfigInvalid(_)));
    let e = Compiler::new(CompilerConfig::rapid_fire(9, rat(1, 5)), mock("always-accept", 9)).unwrap_err();
    assert!(matches!(e, CompilerError::ConfigInvalid(_)));
}

/// Challenges depend on the previous answer.
#[derive(Debug)]
struct Chained;

impl CrProtocol for Chained {
    fn name(&self) -> String {
        "chained".into()
    }
    fn rounds(&self) -> usize {
        3
    }
    fn adaptive(&self) -> bool {
        true
    }
    fn challenge_bits(&self) -> usize {
        16
    }
    fn gen(&self, _i: usize, prior: &[Answer], _r: &Seed) -> Result<BitString, CrError> {
        let last = prior.last().cloned().unwrap_or_else(|| vec![0, 0]);
        let mut b = last.clone();
        b.resize(2, 0);
        b[1] = b[1].wrapping_add(1);
        Ok(BitString::from_bytes(16, &b))
    }
    fn prove(&self, i: usize, _: &[u8], chs: &[BitString], _: &[Answer], _: &mut dyn RngCore) -> Answer {
        chs[i - 1].as_bytes().to_vec()
    }
    fn guess(&self, _: &mut dyn RngCore) -> Answer {
        vec![0, 0]
    }
    fn verify(&self, chs: &[BitString], answers: &[Answer], _r: &Seed) -> CrTranscript {
        let ok = chs.iter().zip(answers).all(|(c, a)| c.as_bytes() == &a[..]);
        CrTranscript {
            rounds: vec![],
            total_score: None,
            accept: ok && chs.last().map(|c| c.as_bytes()[1]) == Some(3),
            vacuous: false,
            error: None,
        }
    }
}

#[test]
fn adaptive_backends_run_sequentially_but_not_rapid_fire() {
    let out = run_sequential(&CompilerConfig::sequential(3), Arc::new(Chained), &HonestStrategy::default(), Seed::ZERO)
        .unwrap();
    assert!(out.verdict.accept);
    let e = Compiler::new(CompilerConfig::rapid_fire(3, rat(1, 4)), Arc::new(Chained)).unwrap_err();
    assert!(matches!(e, CompilerError::ConfigInvalid(_)));
}

#[test]
fn checks_apply_in_fixed_order() {
    let compiler = Compiler::new(CompilerConfig::sequential(4), rcs(4, 4, 4)).unwrap();
    let base = compiler.run(&HonestStrategy::default(), Seed::from_u64(9)).unwrap();
    let cfg = compiler.config();
    let p = compiler.protocol().as_ref();

    let mut late = base.transcript.clone();
    late.blocks[0].rounds[0].answers[1].as_mut().unwrap().t = t("1.3");
    // also break consistency: timing must still win
    late.blocks[0].rounds[2].answers[1].as_mut().unwrap().ans[0] ^= 1;
    let v = verdict_checks(&late, cfg, p);
    assert_eq!(v.reason, Some(RejectReason::Timing));
    assert!(v.diagnostics.mismatches.is_empty());

    let mut split = base.transcript.clone();
    split.blocks[0].rounds[2].answers[1].as_mut().unwrap().ans[0] ^= 1;
    let v = verdict_checks(&split, cfg, p);
    assert_eq!(v.reason, Some(RejectReason::Consistency));
    assert_eq!(v.diagnostics.mismatches, vec![3]);

    let mut weak = base.transcript.clone();
    for r in &mut weak.blocks[0].rounds {
        // the same fixed string on both sides
        let junk = ReceivedAnswer { t: r.expected[0], ans: vec![0; 8] };
        r.answers = [Some(junk.clone()), Some(ReceivedAnswer { t: r.expected[1], ..junk })];
    }
    let v = verdict_checks(&weak, cfg, p);
    if v.accept {
        // zero samples can score well by chance on a 4-qubit circuit; make sure
        // the test still exercised the backend
        assert_eq!(v.diagnostics.cr.len(), 1);
    } else {
        assert_eq!(v.reason, Some(RejectReason::CRTest));
    }

    let mut missing = base.transcript.clone();
    missing.blocks[0].rounds[1].answers[0] = None;
    assert_eq!(verdict_checks(&missing, cfg, p).reason, Some(RejectReason::Timing));
}

#[test]
fn tolerance_window_is_symmetric() {
    let mut cfg = CompilerConfig::single();
    cfg.tau = rat(1, 4);
    let compiler = Compiler::new(cfg, mock("always-accept", 1)).unwrap();
    let base = compiler.run(&HonestStrategy::default(), Seed::ZERO).unwrap();
    for (when, ok) in [("1.75", true), ("2.25", true), ("1.7", false), ("2.3", false)] {
        let mut tr = base.transcript.clone();
        tr.blocks[0].rounds[0].answers[0].as_mut().unwrap().t = t(when);
        let v = verdict_checks(&tr, compiler.config(), compiler.protocol().as_ref());
        assert_eq!(v.accept, ok, "{when}");
    }
}

#[test]
fn adapter_challenge_bundles_the_shares() {
    let cfg = CompilerConfig::single();
    let inner = rcs(4, 10, 1);
    let adapter = cvpv_to_cr(&cfg, inner.clone()).unwrap();
    let compiler = Compiler::new(cfg, inner).unwrap();
    for s in 0..5 {
        let seed = Seed::from_u64(s);
        let direct = compiler.run(&HonestStrategy::default(), seed).unwrap();
        let r = &direct.transcript.blocks[0].rounds[0];
        let ch = adapter.gen(1, &[], &seed).unwrap();
        assert_eq!(ch.to_hex(), format!("{}{}{}", r.x, r.s, r.y));
        let rng = &mut compiler.setup(&seed).colluder_seed(0).rng();
        let (_, answers, t) = honest_transcript(&adapter, &seed, rng).unwrap();
        assert_eq!(t.accept, direct.verdict.accept);
        let (a0, a1) = cvpv_core::compilers::wire::decode_pair(&answers[0]).unwrap();
        assert_eq!(a0, a1);
        assert_eq!(a0, r.answers[0].as_ref().unwrap().ans);
    }
}

#[test]
fn adapter_rejects_split_answers_and_multi_block_configs() {
    let adapter = cvpv_to_cr(&CompilerConfig::sequential(2), mock("always-accept", 2)).unwrap();
    let r = Seed::ZERO;
    let chs = vec![adapter.gen(1, &[], &r).unwrap(), adapter.gen(2, &[vec![]], &r).unwrap()];
    let good = cvpv_core::compilers::wire::encode_pair(&vec![1], &vec![1]);
    let bad = cvpv_core::compilers::wire::encode_pair(&vec![1], &vec![2]);
    assert!(adapter.verify(&chs, &[good.clone(), good.clone()], &r).accept);
    assert!(!adapter.verify(&chs, &[good, bad], &r).accept);
    let multi = CompilerConfig::seq_rapid_fire(2, rat(1, 4), 3, 1.0);
    assert!(cvpv_to_cr(&multi, mock("always-accept", 2)).is_err());
    assert_eq!(adapter.challenge_bits(), 2 * 128 + 64);
}

#[test]
fn shares_seen_by_one_verifier_hide_the_challenge() {
    // 2 x 256 contingency table: top challenge bit vs first byte of s
    let compiler = Compiler::new(CompilerConfig::single(), mock("always-accept", 1)).unwrap();
    let mut table = [[0f64; 256]; 2];
    for i in 0..10_000u64 {
        let out = compiler.run(&HonestStrategy::default(), Seed::from_u64(i)).unwrap();
        let r = &out.transcript.blocks[0].rounds[0];
        let ch = hex::decode(&r.ch).unwrap();
        let s = hex::decode(&r.s).unwrap();
        table[(ch[0] >> 7) as usize][s[0] as usize] += 1.0;
    }
    let rows: Vec<f64> = table.iter().map(|r| r.iter().sum()).collect();
    let total: f64 = rows.iter().sum();
    let mut stat = 0.0;
    for c in 0..256 {
        let col = table[0][c] + table[1][c];
        for (row, &sum) in table.iter().zip(&rows) {
            let e = sum * col / total;
            if e > 0.0 {
                stat += (row[c] - e).powi(2) / e;
            }
        }
    }
    let p = 1.0 - ChiSquared::new(255.0).unwrap().cdf(stat);
    assert!(p > 0.01, "chi2 {stat}, p {p}");
}

#[test]
fn runs_are_deterministic() {
    let cfg = CompilerConfig::rapid_fire(4, rat(1, 8));
    let a = run_rapid_fire(&cfg, rcs(5, 3, 4), &HonestStrategy::default(), Seed::from_u64(77)).unwrap();
    let b = run_rapid_fire(&cfg, rcs(5, 3, 4), &HonestStrategy::default(), Seed::from_u64(77)).unwrap();
    assert_eq!(a.log.to_jsonl(), b.log.to_jsonl());
    assert_eq!(serde_json::to_string(&a.transcript).unwrap(), serde_json::to_string(&b.transcript).unwrap());
    assert_eq!(a.report(), b.report());
    assert_eq!(a.report()["verdict"], a.verdict.accept);
    assert_eq!(Mode::RapidFire.as_str(), "rapid-fire");
}
