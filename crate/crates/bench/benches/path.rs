use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use sgl::{fit_path, MultinomialLoss};
use sgl_bench::{problem, with_screening};

fn screening(c: &mut Criterion) {
    let mut group = c.benchmark_group("path");
    group.sample_size(10);
    for features in [200, 1000] {
        let p = problem(100, features, 3, 0.5, 7);
        let loss = MultinomialLoss::new(&p.data);
        for on in [true, false] {
            let config = with_screening(&p.config, on);
            let label = if on { "screened" } else { "plain" };
            group.bench_with_input(BenchmarkId::new(label, features), &config, |b, config| {
                b.iter(|| fit_path(&loss, &p.spec, config).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, screening);
criterion_main!(benches);
