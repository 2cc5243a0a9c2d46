use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use sisctl::balanced::CutStrategy;
use sisctl::crusade::appr_impe_with_mode;
use sisctl::generators::{erdos_renyi, path};
use sisctl::graph::Bag;
use sisctl::num::{int, rat};
use sisctl::par::ExecMode;
use sisctl::sim::{estimate_extinction_with_mode, PolicyConfig};

const MODES: [(&str, ExecMode); 2] = [("sequential", ExecMode::Sequential), ("parallel", ExecMode::Parallel)];

fn crusades(c: &mut Criterion) {
    let mut group = c.benchmark_group("appr_impe");
    group.sample_size(10);
    for n in [128usize, 256] {
        let g = erdos_renyi(n, 6.0 / n as f64, &[rat(1, 2), int(1)], 1).unwrap();
        let a = Bag::full(n);
        for (name, mode) in MODES {
            group.bench_with_input(BenchmarkId::new(name, n), &n, |b, _| {
                b.iter(|| appr_impe_with_mode(black_box(&g), &a, CutStrategy::Auto(12), mode).unwrap())
            });
        }
    }
    group.finish();
}

fn replicas(c: &mut Criterion) {
    let mut group = c.benchmark_group("estimate_extinction");
    group.sample_size(10);
    let g = path(32, int(1)).unwrap();
    let cfg = PolicyConfig::cure(100.0, 7);
    for (name, mode) in MODES {
        group.bench_function(name, |b| {
            b.iter(|| estimate_extinction_with_mode(black_box(&g), &Bag::full(32), &cfg, 64, None, mode).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, crusades, replicas);
criterion_main!(benches);
