use criterion::{black_box, criterion_group, criterion_main, Criterion};
use cvpv_bench::rcs;
use cvpv_core::compilers::{Compiler, CompilerConfig, HonestStrategy};
use cvpv_core::seed::Seed;
use cvpv_core::spacetime::rat;

fn single_round(c: &mut Criterion) {
    let compiler = Compiler::new(CompilerConfig::single(), rcs(8, 500, 1)).unwrap();
    let mut t = 0u64;
    c.bench_function("single round n=8 k=500", |b| {
        b.iter(|| {
            t += 1;
            compiler.run(black_box(&HonestStrategy::default()), Seed::from_u64(t)).unwrap()
        })
    });
}

fn rapid_fire(c: &mut Criterion) {
    let compiler = Compiler::new(CompilerConfig::rapid_fire(8, rat(1, 10)), rcs(8, 100, 8)).unwrap();
    let mut t = 0u64;
    c.bench_function("rapid-fire 8 rounds n=8 k=100", |b| {
        b.iter(|| {
            t += 1;
            compiler.run(black_box(&HonestStrategy::default()), Seed::from_u64(t)).unwrap()
        })
    });
}

criterion_group!(benches, single_round, rapid_fire);
criterion_main!(benches);
