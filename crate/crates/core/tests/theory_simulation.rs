use ensemble_core::ensemble::{
    generate_ensemble, generate_true_teacher, verify_independent_overlap,
};
use ensemble_core::rng::derive_seed;
use ensemble_core::simulator::run_online;
use ensemble_core::theory::{
    find_min_error, gen_error, hebbian_closed_form, hebbian_rj, integrate, GeometryParams,
    OrderState, RuleConfig, SolverConfig,
};
use ensemble_core::{EnsembleSpec, Schedule, SimConfig};

fn sim(n: usize, rule: RuleConfig, seed: u64, t_max: f64, test_inputs: usize) -> SimConfig {
    SimConfig {
        n,
        spec: EnsembleSpec::new(10, 0.7, 0.49, derive_seed(seed, 1)).unwrap(),
        rule,
        schedule: Schedule::RoundRobin,
        t_max,
        measure_every: 0.5,
        test_inputs,
        seed,
    }
}

#[test]
fn halving_the_step_leaves_rj_unchanged() {
    let geom = GeometryParams::uniform(10, 0.7, 0.49).unwrap();
    for rule in [
        RuleConfig::hebbian(1.0).unwrap(),
        RuleConfig::perceptron(0.5).unwrap(),
    ] {
        let coarse = SolverConfig {
            dt: 1e-2,
            t_max: 20.0,
            sample_every: 1.0,
        };
        let fine = SolverConfig { dt: 5e-3, ..coarse };
        let a = integrate(&geom, &rule, &coarse, &OrderState::initial(10)).unwrap();
        let b = integrate(&geom, &rule, &fine, &OrderState::initial(10)).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.samples.iter().zip(&b.samples) {
            assert!(
                (x.r_j - y.r_j).abs() < 1e-8,
                "{rule:?} t={} {} vs {}",
                x.t,
                x.r_j,
                y.r_j
            );
        }
    }
}

#[test]
fn ode_integration_matches_hebbian_closed_form() {
    let geom = GeometryParams::uniform(5, 0.5, 0.7).unwrap();
    let solver = SolverConfig {
        dt: 1e-3,
        t_max: 30.0,
        sample_every: 0.5,
    };
    let traj = integrate(
        &geom,
        &RuleConfig::hebbian(2.0).unwrap(),
        &solver,
        &OrderState::initial(5),
    )
    .unwrap();
    for s in traj.samples.iter().skip(1) {
        let exact = hebbian_closed_form(s.t, 5, 0.7, 0.5, 2.0).unwrap();
        assert!(((s.r_j - exact.cos_j) / exact.cos_j).abs() < 1e-6);
        assert!(((s.l - exact.l) / exact.l).abs() < 1e-6);
    }
}

#[test]
fn hebbian_simulation_follows_closed_form() {
    let traj = run_online(&sim(2000, RuleConfig::hebbian(1.0).unwrap(), 3, 20.0, 0)).unwrap();
    for s in &traj.samples {
        let exact = gen_error(hebbian_rj(s.t, 10, 0.49, 0.7, 1.0).unwrap()).unwrap();
        assert!(
            (s.eps_g - exact).abs() < 0.02,
            "t={} sim {} theory {exact}",
            s.t,
            s.eps_g
        );
    }
}

#[test]
fn empirical_error_matches_analytic_error() {
    let traj = run_online(&sim(
        1000,
        RuleConfig::perceptron(0.5).unwrap(),
        8,
        5.0,
        10_000,
    ))
    .unwrap();
    for s in &traj.samples {
        let emp = s.eps_empirical.unwrap();
        let tol = 4.0 * (s.eps_g * (1.0 - s.eps_g) / 10_000.0).sqrt();
        assert!(
            (emp - s.eps_g).abs() < tol,
            "t={} empirical {emp} analytic {}",
            s.t,
            s.eps_g
        );
    }
}

#[test]
fn fluctuations_shrink_with_dimension() {
    let spread = |n: usize| {
        let finals: Vec<f64> = (0..4)
            .map(|seed| {
                let cfg = sim(n, RuleConfig::hebbian(1.0).unwrap(), seed, 5.0, 0);
                run_online(&cfg).unwrap().last().unwrap().eps_g
            })
            .collect();
        let mean = finals.iter().sum::<f64>() / finals.len() as f64;
        (finals.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (finals.len() - 1) as f64).sqrt()
    };
    let small = spread(500);
    let large = spread(8000);
    assert!(
        large < small,
        "N=8000 spread {large} vs N=500 spread {small}"
    );
}

#[test]
fn independently_flipped_pairs_have_squared_overlap() {
    for r0 in [0.5f64, 0.7] {
        let q0 = verify_independent_overlap(50_000, r0, 10, 5).unwrap();
        assert!((q0 - r0 * r0).abs() < 0.01, "R0={r0} q0={q0}");
    }
}

#[test]
fn generated_ensemble_hits_target_overlaps() {
    let a = generate_true_teacher(100_000, 1).unwrap();
    let spec = EnsembleSpec::new(6, 0.7, 0.6, 2).unwrap();
    let teachers = generate_ensemble(&a, &spec).unwrap();
    for (i, b) in teachers.iter().enumerate() {
        assert!((a.cosine(b).unwrap() - 0.7).abs() < 0.025);
        for c in &teachers[i + 1..] {
            assert!((b.cosine(c).unwrap() - 0.6).abs() < 0.025);
        }
    }
}

#[test]
fn perceptron_error_has_interior_minimum() {
    let geom = GeometryParams::uniform(10, 0.7, 0.49).unwrap();
    let solver = SolverConfig {
        dt: 1e-2,
        t_max: 200.0,
        sample_every: 0.5,
    };
    let traj = integrate(
        &geom,
        &RuleConfig::perceptron(0.2).unwrap(),
        &solver,
        &OrderState::initial(10),
    )
    .unwrap();
    let (t_min, eps_min) = find_min_error(&traj).unwrap();
    let last = traj.last().unwrap().eps_g;
    assert!(t_min > 5.0 && t_min < 100.0);
    assert!(eps_min < last - 0.05);
}

#[test]
fn simulation_is_reproducible() {
    let cfg = sim(300, RuleConfig::perceptron(1.0).unwrap(), 11, 3.0, 500);
    assert_eq!(run_online(&cfg).unwrap(), run_online(&cfg).unwrap());
}
