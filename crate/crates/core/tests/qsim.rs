use cvpv_core::bits::BitString;
use cvpv_core::qsim::{build_circuit, collision_number, sample, simulate, AnsatzConfig, Circuit, Gate, SampleSet};
use cvpv_core::seed::Seed;
use num_complex::Complex64;

type Matrix = Vec<Vec<Complex64>>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    let (n, m) = (a.len(), b.len());
    let mut out = vec![vec![c(0.0, 0.0); n * m]; n * m];
    for i in 0..n {
        for j in 0..n {
            for k in 0..m {
                for l in 0..m {
                    out[i * m + k][j * m + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

/// Full unitary of a gate, qubit 0 as the leftmost tensor factor.
fn unitary(g: &Gate, n: usize) -> Matrix {
    let id = vec![vec![c(1.0, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(1.0, 0.0)]];
    let one = |q: usize, m: Matrix| {
        (0..n).fold(vec![vec![c(1.0, 0.0)]], |acc, k| kron(&acc, if k == q { &m } else { &id }))
    };
    match *g {
        Gate::X(q) => one(q, vec![vec![c(0.0, 0.0), c(1.0, 0.0)], vec![c(1.0, 0.0), c(0.0, 0.0)]]),
        Gate::Rz(q, t) => one(
            q,
            vec![
                vec![Complex64::from_polar(1.0, -t / 2.0), c(0.0, 0.0)],
                vec![c(0.0, 0.0), Complex64::from_polar(1.0, t / 2.0)],
            ],
        ),
        Gate::Ry(q, t) => {
            let (s, co) = (t / 2.0).sin_cos();
            one(q, vec![vec![c(co, 0.0), c(-s, 0.0)], vec![c(s, 0.0), c(co, 0.0)]])
        }
        Gate::Cz(a, b) => {
            let dim = 1 << n;
            let mut m = vec![vec![c(0.0, 0.0); dim]; dim];
            for (z, row) in m.iter_mut().enumerate() {
                let bit = |q: usize| (z >> (n - 1 - q)) & 1 == 1;
                row[z] = if bit(a) && bit(b) { c(-1.0, 0.0) } else { c(1.0, 0.0) };
            }
            m
        }
    }
}

fn reference_state(circ: &Circuit) -> Vec<Complex64> {
    let dim = 1 << circ.n_qubits;
    let mut v = vec![c(0.0, 0.0); dim];
    v[0] = c(1.0, 0.0);
    for g in &circ.gates {
        let u = unitary(g, circ.n_qubits);
        v = (0..dim).map(|i| (0..dim).map(|j| u[i][j] * v[j]).sum()).collect();
    }
    v
}

fn challenge(label: &str, i: u64) -> BitString {
    BitString::from_bytes(256, &Seed::from_u64(i).expand(label, 32))
}

fn ansatz(n: usize, d: usize) -> AnsatzConfig {
    AnsatzConfig { n_qubits: n, depth: d, seed_bits: 128 }
}

#[test]
fn simulator_matches_dense_matrix_products() {
    for n in 1..=4 {
        for i in 0..5 {
            let circ = build_circuit(&challenge("dense", i), &ansatz(n, 5)).unwrap();
            let got = simulate(&circ).unwrap();
            for (z, want) in reference_state(&circ).iter().enumerate() {
                assert!((got.amplitude(z) - want).norm() < 1e-12, "n={n} z={z}");
            }
        }
    }
}

#[test]
fn two_qubit_collision_number_follows_the_haar_value() {
    // for Haar-random states E[N sum p^2] = 2N/(N+1), which is 1.6 at N=4
    let haar = 2.0 * 4.0 / 5.0;
    let mean: f64 = (0..100)
        .map(|i| collision_number(&simulate(&build_circuit(&challenge("n2", i), &ansatz(2, 8)).unwrap()).unwrap().probabilities()))
        .sum::<f64>()
        / 100.0;
    assert!((mean - haar).abs() < 0.15, "{mean}");
}

#[test]
fn ideal_sampler_scores_near_two_over_n() {
    let n = 8;
    let dim = 256.0;
    let mut exact = 0.0;
    let mut mc = 0.0;
    let mut rng = Seed::from_u64(77).rng();
    for i in 0..50 {
        let circ = build_circuit(&challenge("n8", i), &ansatz(n, 12)).unwrap();
        let sv = simulate(&circ).unwrap();
        let p = sv.probabilities();
        let sum_sq: f64 = p.iter().map(|x| x * x).sum();
        let third: f64 = p.iter().map(|x| x * x * x).sum();
        exact += dim * sum_sq;
        let s = sample(&sv, 500, &mut rng);
        let score = s.samples.iter().map(|&z| p[z as usize]).sum::<f64>() / 500.0;
        // the sampled mean is an unbiased estimate of sum p^2
        let sigma = ((third - sum_sq * sum_sq) / 500.0).sqrt();
        assert!((score - sum_sq).abs() <= 5.0 * sigma, "challenge {i}");
        mc += dim * score;
    }
    let (exact, mc) = (exact / 50.0, mc / 50.0);
    assert!((1.8..=2.2).contains(&exact), "{exact}");
    assert!((1.7..=2.3).contains(&mc), "{mc}");
}

#[test]
fn uniform_sampler_has_mean_one_over_n() {
    let circ = build_circuit(&challenge("uni", 0), &ansatz(6, 10)).unwrap();
    let p = simulate(&circ).unwrap().probabilities();
    let mean = p.iter().sum::<f64>() / p.len() as f64;
    assert!((mean - 1.0 / 64.0).abs() < 1e-15);
}

#[test]
fn sampling_is_seeded() {
    let circ = build_circuit(&challenge("seeded", 0), &ansatz(5, 6)).unwrap();
    let sv = simulate(&circ).unwrap();
    let a = sample(&sv, 50, &mut Seed::from_u64(1).rng());
    let b = sample(&sv, 50, &mut Seed::from_u64(1).rng());
    assert_eq!(a, b);
    assert_eq!(SampleSet::decode(5, &a.encode()).unwrap(), a);
}
