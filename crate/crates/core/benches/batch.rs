use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use num_bigint::BigUint;

use banzkp::batch::{derive_seeds, honest_batch, honest_batch_sequential};
use banzkp::crypto::{draw_exponent, seeded_rng, ProtocolParams};

fn honest_runs(c: &mut Criterion) {
    let seeds = derive_seeds(1, 32);
    let mut g = c.benchmark_group("honest7 x32");
    g.sample_size(10);
    for bits in [1096, 2048] {
        g.bench_with_input(BenchmarkId::new("parallel", bits), &bits, |b, &bits| {
            b.iter(|| honest_batch(&seeds, bits).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("sequential", bits), &bits, |b, &bits| {
            b.iter(|| honest_batch_sequential(&seeds, bits).unwrap())
        });
    }
    g.finish();
}

fn modexp(c: &mut Criterion) {
    let mut g = c.benchmark_group("modexp");
    for bits in [1096, 2048] {
        let params = ProtocolParams::with_modulus_bits(bits).unwrap();
        let mut rng = seeded_rng(2);
        let base = BigUint::from(0xC0FFEEu32);
        let e = draw_exponent(&mut rng, &params);
        g.bench_with_input(BenchmarkId::from_parameter(bits), &e, |b, e| {
            b.iter(|| params.pow(&base, e).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, honest_runs, modexp);
criterion_main!(benches);
