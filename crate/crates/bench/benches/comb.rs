use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use clonelab::channel::insert_gate;
use clonelab::cloner::choi_r1_of_cloner;
use clonelab::eig::eig_hermitian;
use clonelab::optimizer::{build_problem, solve, Task};
use clonelab::protocol::{build_bases, canonical_bell, run_exact, Strategy};
use clonelab_bench::{fixed_hermitian, fixed_unitary};

fn eig(c: &mut Criterion) {
    let mut group = c.benchmark_group("eig_hermitian");
    for n in [16, 64, 256] {
        let h = fixed_hermitian(n, 7);
        group.bench_with_input(BenchmarkId::from_parameter(n), &h, |b, h| b.iter(|| eig_hermitian(h).unwrap()));
    }
    group.finish();
}

fn comb(c: &mut Criterion) {
    let mut group = c.benchmark_group("comb");
    group.sample_size(10);
    for d in [2, 3] {
        group.bench_with_input(BenchmarkId::new("build_r1", d), &d, |b, &d| b.iter(|| choi_r1_of_cloner(d).unwrap()));
        let r1 = choi_r1_of_cloner(d).unwrap();
        let u = fixed_unitary(d, 3);
        group.bench_with_input(BenchmarkId::new("insert_gate", d), &d, |b, _| b.iter(|| insert_gate(&r1, &u).unwrap()));
    }
    group.finish();
}

fn optimizer(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve");
    for d in 2..=4 {
        for task in [Task::Clone, Task::Learn] {
            let p = build_problem(d, task).unwrap();
            group.bench_with_input(BenchmarkId::new(task.to_string(), d), &p, |b, p| b.iter(|| solve(p, 1e-7).unwrap()));
        }
    }
    group.finish();
}

fn protocol(c: &mut Criterion) {
    let bases = build_bases(&canonical_bell()).unwrap();
    for s in Strategy::ALL {
        c.bench_function(&format!("protocol_exact/{s}"), |b| b.iter(|| run_exact(s, &bases).unwrap()));
    }
}

criterion_group!(benches, eig, comb, optimizer, protocol);
criterion_main!(benches);
