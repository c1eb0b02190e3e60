use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use trdecomp::als::solve_microstep;
use trdecomp::constructions::SpuriousInstance;
use trdecomp::experiments::{
    map_trials, run_oneloop_trial, run_trap_trial, OneLoopExperimentConfig, TrapExperimentConfig,
};
use trdecomp::tr::{random_cores, tau};
use trdecomp::unfolding::DEFAULT_RANK_TOL;

fn trap_trials(c: &mut Criterion) {
    let cfg = TrapExperimentConfig {
        c_values: vec![0.1, 0.2],
        trials_per_c: 4,
        ..Default::default()
    };
    let inst = SpuriousInstance::new(cfg.d, cfg.r, cfg.n).unwrap();
    let tau_u0 = tau(&inst.local_min);
    let jobs: Vec<(usize, usize)> = (0..2).flat_map(|ci| (0..4).map(move |t| (ci, t))).collect();
    let mut group = c.benchmark_group("trap_trials_d3_r3_n10");
    group.sample_size(10);
    group.bench_function("sequential", |b| {
        b.iter(|| {
            jobs.iter()
                .map(|&(ci, t)| run_trap_trial(&inst, &tau_u0, &cfg, ci, t))
                .collect::<Vec<_>>()
        })
    });
    group.bench_function(
        if cfg!(feature = "parallel") {
            "parallel"
        } else {
            "map_trials_sequential_build"
        },
        |b| {
            b.iter(|| {
                map_trials(jobs.clone(), |(ci, t)| {
                    run_trap_trial(&inst, &tau_u0, &cfg, ci, t)
                })
            })
        },
    );
    group.finish();
}

fn oneloop_trials(c: &mut Criterion) {
    let cfg = OneLoopExperimentConfig::new(3, 3, 10, 8, 0);
    let jobs: Vec<(usize, usize)> = (0..2).flat_map(|mi| (0..8).map(move |t| (mi, t))).collect();
    let mut group = c.benchmark_group("oneloop_trials_d3_r3_n10");
    group.sample_size(10);
    group.bench_function("sequential", |b| {
        b.iter(|| {
            jobs.iter()
                .map(|&(mi, t)| run_oneloop_trial(&cfg, mi, t))
                .collect::<Vec<_>>()
        })
    });
    group.bench_function(
        if cfg!(feature = "parallel") {
            "parallel"
        } else {
            "map_trials_sequential_build"
        },
        |b| b.iter(|| map_trials(jobs.clone(), |(mi, t)| run_oneloop_trial(&cfg, mi, t))),
    );
    group.finish();
}

fn kernels(c: &mut Criterion) {
    let mut group = c.benchmark_group("kernels");
    group.sample_size(20);
    for m in [4, 9] {
        let dims = [10, 10, 10];
        let u = random_cores(m, &dims, 1).unwrap();
        let t = tau(&random_cores(3, &dims, 2).unwrap());
        group.bench_with_input(BenchmarkId::new("tau", m), &u, |b, u| b.iter(|| tau(u)));
        group.bench_with_input(BenchmarkId::new("microstep", m), &u, |b, u| {
            b.iter(|| solve_microstep(&t, u, 2, DEFAULT_RANK_TOL).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, trap_trials, oneloop_trials, kernels);
criterion_main!(benches);
