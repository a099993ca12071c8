use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use splitkit_bench::{methods, GameFixture};

const DIMS: [usize; 2] = [8, 32];

fn bench_sweep(c: &mut Criterion) {
    let mut group = c.benchmark_group("sweep");
    for d in DIMS {
        for method in methods() {
            let fixture = GameFixture::new(method, d, 0);
            let mut iter = fixture.iteration();
            let state = fixture.warm_state(&mut iter, 50);
            let mut x = state.x.clone();
            group.bench_with_input(BenchmarkId::new(method, d), &d, |b, _| {
                b.iter(|| iter.sweep(black_box(&state.governor), &mut x))
            });
        }
    }
    group.finish();
}

fn bench_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("step");
    for d in DIMS {
        for method in methods() {
            let fixture = GameFixture::new(method, d, 0);
            let mut iter = fixture.iteration();
            let mut state = fixture.warm_state(&mut iter, 50);
            group.bench_with_input(BenchmarkId::new(method, d), &d, |b, _| {
                b.iter(|| black_box(iter.step(&mut state, 0.5)))
            });
        }
    }
    group.finish();
}

fn bench_gap(c: &mut Criterion) {
    let mut group = c.benchmark_group("gap");
    for d in DIMS {
        let fixture = GameFixture::new("sdyr", d, 0);
        let mut iter = fixture.iteration();
        let state = fixture.warm_state(&mut iter, 200);
        let mean = state.x.mean_block();
        let (u, v) = fixture.game.split(&mean);
        group.bench_with_input(BenchmarkId::from_parameter(d), &d, |b, _| {
            b.iter(|| splitkit::problems::primal_dual_gap(&fixture.game, black_box(u), black_box(v), 1e-9))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_sweep, bench_step, bench_gap);
criterion_main!(benches);
