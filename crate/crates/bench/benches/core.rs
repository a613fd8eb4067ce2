use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ensemble_core::oracle::{estimate_all, PotentialCovariance};
use ensemble_core::simulator::run_online;
use ensemble_core::theory::integrate;
use ensemble_core::{
    EnsembleSpec, GeometryParams, OrderState, RuleConfig, Schedule, SimConfig, SolverConfig,
};
use std::hint::black_box;

fn ode(c: &mut Criterion) {
    let mut group = c.benchmark_group("rk4_perceptron_t200");
    for k in [1usize, 10, 100] {
        let geom = GeometryParams::uniform(k, 0.7, 0.49).unwrap();
        let rule = RuleConfig::perceptron(0.2).unwrap();
        let solver = SolverConfig {
            dt: 1e-2,
            t_max: 200.0,
            sample_every: 1.0,
        };
        group.bench_with_input(BenchmarkId::from_parameter(k), &k, |b, &k| {
            b.iter(|| integrate(&geom, &rule, &solver, &OrderState::initial(k)).unwrap())
        });
    }
    group.finish();
}

fn simulation(c: &mut Criterion) {
    let mut group = c.benchmark_group("online_simulation_t1");
    group.sample_size(10);
    for n in [500usize, 2000] {
        let cfg = SimConfig {
            n,
            spec: EnsembleSpec::new(10, 0.7, 0.49, 1).unwrap(),
            rule: RuleConfig::hebbian(1.0).unwrap(),
            schedule: Schedule::RoundRobin,
            t_max: 1.0,
            measure_every: 1.0,
            test_inputs: 0,
            seed: 2,
        };
        group.bench_with_input(BenchmarkId::from_parameter(n), &cfg, |b, cfg| {
            b.iter(|| run_online(black_box(cfg)).unwrap())
        });
    }
    group.finish();
}

fn oracle(c: &mut Criterion) {
    let cov = PotentialCovariance::triple(0.7, 0.5, 0.6).unwrap();
    let rule = RuleConfig::perceptron(1.0).unwrap();
    c.bench_function("oracle_estimate_1e5", |b| {
        b.iter(|| estimate_all(&rule, &cov, 100_000, black_box(3)).unwrap())
    });
}

criterion_group!(benches, ode, simulation, oracle);
criterion_main!(benches);
