use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use swarmtsc_core::sim::{run_engagement, EngagementConfig, TacticLabel};

fn engagements(c: &mut Criterion) {
    let mut group = c.benchmark_group("engagement");
    for n in [10, 25] {
        for tactic in TacticLabel::ALL {
            let cfg = EngagementConfig::default()
                .with_size(n, n)
                .with_tactic(tactic)
                .with_seed(42);
            group.bench_with_input(BenchmarkId::new(tactic.name(), n), &cfg, |b, cfg| {
                b.iter(|| run_engagement(black_box(cfg)).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, engagements);
criterion_main!(benches);
