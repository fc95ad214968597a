use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use num_bigint::BigInt;
use ramify_bench::{dense_series, pure};
use ramify_core::oracle::random_eisenstein;
use ramify_core::{
    compute_s, prop2_max_t, tau_v_search, Precision, SearchConfig, Tau, UniformizerChange, Variant,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn series_mul(c: &mut Criterion) {
    let mut group = c.benchmark_group("series_mul");
    for (p, n, t) in [(2u64, 8u32, 32usize), (3, 20, 64), (5, 40, 128)] {
        let prec = Precision::new(p, n, t).unwrap();
        let a = dense_series(&prec, 1);
        let b = dense_series(&prec, 2);
        group.bench_with_input(
            BenchmarkId::from_parameter(format!("p{p}_n{n}_t{t}")),
            &(a, b),
            |bench, (a, b)| bench.iter(|| black_box(a * b)),
        );
    }
    group.finish();
}

fn substitute(c: &mut Criterion) {
    let mut group = c.benchmark_group("substitute");
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for (p, e, n) in [(2u64, 4usize, 6u32), (3, 6, 6), (5, 10, 8)] {
        let poly = random_eisenstein(p, e, n, &mut rng);
        let change =
            UniformizerChange::new(p, (0..e as i64).map(|k| BigInt::from(k.max(1))).collect())
                .unwrap();
        group.bench_function(format!("p{p}_e{e}_n{n}"), |bench| {
            bench.iter(|| black_box(poly.substitute(&change, n).unwrap()))
        });
    }
    group.finish();
}

fn tau_search(c: &mut Criterion) {
    let mut group = c.benchmark_group("tau_search");
    group.sample_size(10);
    for (p, dp) in [(2u64, 2u32), (3, 2), (5, 1)] {
        let poly = pure(p, p as usize);
        let n = poly.m() + 3;
        group.bench_function(format!("pure_p{p}_dp{dp}"), |bench| {
            bench.iter(|| black_box(tau_v_search(&poly, dp, n, None).unwrap()))
        });
    }
    group.finish();
}

fn prop2(c: &mut Criterion) {
    let mut group = c.benchmark_group("prop2_max_t");
    group.sample_size(10);
    for (p, e, n) in [(2u64, 4usize, 2u32), (3, 3, 2), (2, 6, 2)] {
        let cfg = SearchConfig::new(pure(p, e), n);
        group.bench_function(format!("pure_p{p}_e{e}_n{n}"), |bench| {
            bench.iter(|| black_box(prop2_max_t(&cfg).unwrap()))
        });
    }
    group.finish();
}

fn bound_sweep(c: &mut Criterion) {
    c.bench_function("compute_s_sweep_p2_3_5_e60", |bench| {
        bench.iter(|| {
            let mut total = 0u64;
            for p in [2u64, 3, 5] {
                for e in 1..=60 {
                    for (tau, iota) in ramify_core::bounds::admissible_pairs(p, e) {
                        total += compute_s(p, e, Tau::Finite(tau), iota, Variant::Standard)
                            .unwrap()
                            .s;
                    }
                }
            }
            black_box(total)
        })
    });
}

criterion_group!(
    benches,
    series_mul,
    substitute,
    tau_search,
    prop2,
    bound_sweep
);
criterion_main!(benches);
