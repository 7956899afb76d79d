use cvpv_core::crcore::{honest_transcript, mock_backend, Answer, CrProtocol, RcsBackendConfig, RcsProtocol};
use cvpv_core::seed::Seed;

fn rcs(delta: f64) -> RcsProtocol {
    let cfg = RcsBackendConfig {
        n_qubits: 8,
        depth: 12,
        k: 100,
        gamma: 0.5,
        delta,
        ..Default::default()
    };
    RcsProtocol::new(cfg, 16).unwrap()
}

fn uniform_run(p: &dyn CrProtocol, t: u64) -> bool {
    let r = Seed::from_u64(t).derive("r", &[]);
    let mut rng = Seed::from_u64(t).derive("prover", &[]).rng();
    let mut chs = Vec::new();
    let mut answers: Vec<Answer> = Vec::new();
    for i in 1..=p.rounds() {
        chs.push(p.gen(i, &answers, &r).unwrap());
        answers.push(p.guess(&mut rng));
    }
    p.verify(&chs, &answers, &r).accept
}

fn honest_run(p: &dyn CrProtocol, t: u64) -> bool {
    let r = Seed::from_u64(t).derive("r", &[]);
    let mut rng = Seed::from_u64(t).derive("prover", &[]).rng();
    honest_transcript(p, &r, &mut rng).unwrap().2.accept
}

#[test]
fn uniform_answers_are_rejected() {
    let p = rcs(0.5);
    let accepted = (0..200).filter(|t| uniform_run(&p, *t)).count();
    assert!(accepted <= 2, "{accepted}");
}

#[test]
fn honest_acceptance_falls_with_delta() {
    let ps = [rcs(0.1), rcs(0.5), rcs(0.9)];
    let mut counts = [0usize; 3];
    for t in 0..200 {
        let acc: Vec<bool> = ps.iter().map(|p| honest_run(p, t)).collect();
        // same answers, higher threshold
        assert!(acc.windows(2).all(|w| w[0] >= w[1]), "trial {t}: {acc:?}");
        for (c, a) in counts.iter_mut().zip(&acc) {
            *c += usize::from(*a);
        }
    }
    assert!(counts[1] >= 190, "{counts:?}");
}

#[test]
fn challenges_ignore_answer_history() {
    let p = rcs(0.5);
    let r = Seed::from_u64(3);
    let garbage: Vec<Answer> = (0..5).map(|i| vec![0xa5; i * 3]).collect();
    let other: Vec<Answer> = (0..5).map(|_| Vec::new()).collect();
    let a = p.gen(6, &garbage, &r).unwrap();
    assert_eq!(a, p.gen(6, &other, &r).unwrap());
    assert_eq!(a.len(), p.challenge_bits());
}

#[test]
fn coin_flip_guesses_match_at_two_to_minus_b() {
    let bits = 3;
    let p = mock_backend(&format!("coin-flip:{bits}"), 1).unwrap();
    let trials = 8000;
    let mut rng = Seed::from_u64(4).rng();
    let r = Seed::from_u64(5);
    let chs = vec![p.gen(1, &[], &r).unwrap()];
    let hits = (0..trials)
        .filter(|_| p.prove(1, &[], &chs, &[], &mut rng) == p.guess(&mut rng))
        .count();
    let q = 0.5f64.powi(bits);
    let sigma = (q * (1.0 - q) / trials as f64).sqrt();
    let rate = hits as f64 / trials as f64;
    assert!((rate - q).abs() <= 4.0 * sigma, "{rate}");
}
