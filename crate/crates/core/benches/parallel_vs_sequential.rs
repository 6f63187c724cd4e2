use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use tmev_core::config::Config;
use tmev_core::corpus_gen::{generate, Generated};
use tmev_core::par::{self, Mode};
use tmev_core::scan::scan_source;

fn scan_all(mode: Mode, corpus: &[Generated], cfg: &Config) -> usize {
    par::map(mode, corpus, |g| scan_source(&g.name, &g.source, cfg).map(|r| r.len()).unwrap_or(0))
        .into_iter()
        .sum()
}

fn bench_scan(c: &mut Criterion) {
    let cfg = Config::default();
    let corpus = generate(cfg.seed, 200);
    let mut group = c.benchmark_group("scan_generated");
    group.sample_size(10);
    for mode in [Mode::Sequential, Mode::Parallel] {
        group.bench_with_input(BenchmarkId::from_parameter(format!("{mode:?}")), &corpus, |b, corpus| {
            b.iter(|| scan_all(mode, corpus, &cfg))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_scan);
criterion_main!(benches);
