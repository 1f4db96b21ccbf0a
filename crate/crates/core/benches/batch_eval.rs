//! Loss and gradient over a collocation batch: rayon pool vs a single thread.
//!
//! Build with `--no-default-features` to time the sequential fallback itself.

use std::time::Duration;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use empinn_core::harness::ExperimentConfig;
use empinn_core::network::init_params;
use empinn_core::pde::{sample_collocation, PinnObjective};

#[global_allocator]
static GLOBAL: mimalloc::MiMalloc = mimalloc::MiMalloc;

fn objective(preset: &str, residual: usize, width: usize) -> (Vec<f64>, PinnObjective) {
    let mut c = ExperimentConfig::preset(preset).unwrap();
    c.collocation.residual = residual;
    c.network.width = width;
    c.network.num_blocks = 1;
    let params = init_params(&c.network, 0).unwrap();
    let colloc = sample_collocation(&c.problem, c.collocation.counts(), 1, c.collocation.strategy).unwrap();
    let obj = PinnObjective::new(&c.problem, &c.network, &params, &colloc).unwrap();
    (params.flatten(), obj)
}

fn bench_eval(c: &mut Criterion) {
    let cases = [("allen_cahn_desk", 4096, 32), ("helmholtz_desk", 10_201, 64)];
    let mut group = c.benchmark_group("value_and_grad");
    group.sample_size(10).measurement_time(Duration::from_secs(10));
    for (preset, points, width) in cases {
        let (params, obj) = objective(preset, points, width);
        let all = rayon::current_num_threads();
        for threads in [all, 1] {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            let id = BenchmarkId::new(format!("{preset}/{points}pts"), format!("{threads}_threads"));
            group.bench_function(id, |b| b.iter(|| pool.install(|| obj.value_and_grad(&params).unwrap())));
            if all == 1 {
                break;
            }
        }
    }
    group.finish();
}

criterion_group!(benches, bench_eval);
criterion_main!(benches);
