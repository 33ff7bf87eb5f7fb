use gdtune_core::gdtrace::{trace_param, trace_stepsize, GdConfig, MomentumVariant, ParamBinding, PwPolyObjective};
use gdtune_core::instances::{scalar_quadratic, Family, Instance, InstanceDistribution, ObjectiveSpec};
use gdtune_core::piecewise::pw_sup_diff;
use gdtune_core::rational::{int, ratio, Interval, Rational};
use gdtune_core::tuner::{
    draw_duals, empirical_pdim_lower_bound, erm_stepsize, momentum_grid_tune, schedule_coordinate_descent,
    uniform_convergence_experiment, ExperimentConfig, Sequential,
};
use gdtune_core::Error;

fn cfg(h: u32) -> GdConfig {
    GdConfig::new(h, ratio(1, 10), Interval::new(int(0), int(2)).unwrap()).unwrap()
}

fn quadratic(a: Rational) -> Instance {
    Instance {
        label: format!("quadratic {a}"),
        x0: Some(vec![int(1)]),
        objective: ObjectiveSpec::Poly(scalar_quadratic(&a)),
        validation: None,
    }
}

fn dual_of(a: Rational, h: u32) -> gdtune_core::DualCost {
    let f = PwPolyObjective::polynomial(scalar_quadratic(&a));
    trace_stepsize(&f, &[int(1)], &cfg(h)).unwrap().dual
}

#[test]
fn erm_on_repeated_quadratic() {
    let d = dual_of(int(1), 5);
    let r = erm_stepsize(&[d.clone(), d]).unwrap();
    assert_eq!(r.eta_hat, int(1));
    assert_eq!(r.train_mean, int(2));
    assert_eq!(r.m, 2);
}

#[test]
fn two_quadratics_shatter() {
    // With H = 5 the slow instance costs 5 wherever the fast one converges,
    // so no cell has both below threshold.
    let short = [dual_of(int(1), 5), dual_of(int(3), 5)];
    assert_eq!(empirical_pdim_lower_bound(&short, 2).unwrap(), 1);
    let duals = [dual_of(int(1), 6), dual_of(int(3), 6)];
    assert_eq!(empirical_pdim_lower_bound(&duals, 2).unwrap(), 2);
    let flat = PwPolyObjective::polynomial(gdtune_core::MultiPoly::var(1, 0));
    let c = trace_stepsize(&flat, &[int(1)], &cfg(5)).unwrap().dual;
    assert_eq!(empirical_pdim_lower_bound(&[c.clone(), c], 2).unwrap(), 0);
    assert_eq!(
        empirical_pdim_lower_bound(&duals, 4).unwrap_err(),
        Error::CapExceeded { requested: 4, cap: 3 }
    );
}

#[test]
fn degenerate_distribution_has_no_gap() {
    let exp = ExperimentConfig {
        dist: InstanceDistribution {
            family: Family::ScalarQuadratic { lo: int(1), hi: int(1) },
            seed: 3,
        },
        m_schedule: vec![1, 4],
        trials: 2,
        gd: cfg(5),
        test_size: Some(8),
        seed: 11,
    };
    let report = uniform_convergence_experiment(&exp, &Sequential).unwrap();
    assert_eq!(report.rows.len(), 4);
    for row in &report.rows {
        assert_eq!(row.sup_gap, int(0));
        assert_eq!(row.eta_hat, int(1));
        assert_eq!(row.train_mean, int(2));
    }
}

#[test]
fn single_instance_gap_is_sup_difference() {
    let dist = InstanceDistribution {
        family: Family::ScalarQuadratic { lo: ratio(1, 2), hi: int(2) },
        seed: 3,
    };
    let exp = ExperimentConfig {
        dist: dist.clone(),
        m_schedule: vec![1],
        trials: 1,
        gd: cfg(5),
        test_size: Some(16),
        seed: 5,
    };
    let report = uniform_convergence_experiment(&exp, &Sequential).unwrap();
    let row = &report.rows[0];
    let train_seed = gdtune_core::tuner::derive_seed(5, &[0, 1]);
    let (train, _) = draw_duals(&Sequential, &dist, train_seed, 1, &cfg(5)).unwrap();
    let (test, _) = draw_duals(&Sequential, &dist, report.test_seed, 16, &cfg(5)).unwrap();
    let test_mean = gdtune_core::piecewise::pwconst_mean(&test).unwrap();
    let single = train[0].map(|&v| Rational::from_integer(v.into()));
    assert_eq!(row.sup_gap, pw_sup_diff(&single, &test_mean).unwrap());
    assert!(row.sup_gap >= row.gap_at_eta());
}

#[test]
fn schedule_descent_never_increases_cost() {
    let sample: Vec<Instance> = [ratio(1, 2), int(1), ratio(3, 2), int(2)].into_iter().map(quadratic).collect();
    let res = schedule_coordinate_descent(&Sequential, &sample, &cfg(2), 1, &[ratio(1, 4), ratio(1, 4)]).unwrap();
    assert_eq!(res.updates.len(), 2);
    let first = &res.updates[0].before;
    let last = &res.updates.last().unwrap().after;
    assert!(last <= first);
    for w in res.updates.windows(2) {
        assert!(w[1].before <= w[0].before);
    }
}

#[test]
fn optimal_schedule_is_a_fixed_point() {
    // Cost 1 is out of reach since |f'(1)| = 1, and (1, 1) reaches cost 2.
    let sample = vec![quadratic(int(1))];
    let res = schedule_coordinate_descent(&Sequential, &sample, &cfg(2), 1, &[int(1), int(1)]).unwrap();
    assert_eq!(res.schedule, vec![int(1), int(1)]);
    assert!(res.updates.iter().all(|u| !u.accepted && u.after == int(2)));
}

#[test]
fn single_round_schedule_is_plain_erm() {
    let sample: Vec<Instance> = [int(1), ratio(3, 2)].into_iter().map(quadratic).collect();
    let res = schedule_coordinate_descent(&Sequential, &sample, &cfg(1), 1, &[int(1)]).unwrap();
    let plain = erm_stepsize(&[dual_of(int(1), 1), dual_of(ratio(3, 2), 1)]).unwrap();
    assert_eq!(res.updates[0].erm, plain);
}

#[test]
fn momentum_grid_reduces_to_plain() {
    let sample: Vec<Instance> = [ratio(3, 4), int(1), ratio(5, 4)].into_iter().map(quadratic).collect();
    let only_zero = momentum_grid_tune(&Sequential, &sample, &cfg(5), &[int(0)], MomentumVariant::VelocityFirst).unwrap();
    let duals: Vec<_> = [ratio(3, 4), int(1), ratio(5, 4)].into_iter().map(|a| dual_of(a, 5)).collect();
    assert_eq!(only_zero.best, erm_stepsize(&duals).unwrap());

    let two = momentum_grid_tune(&Sequential, &sample, &cfg(5), &[int(0), ratio(1, 2)], MomentumVariant::VelocityFirst)
        .unwrap();
    assert!(two.best.train_mean <= only_zero.best.train_mean);
    assert!(momentum_grid_tune(&Sequential, &sample, &cfg(5), &[int(-1)], MomentumVariant::VelocityFirst).is_err());
}

#[test]
fn momentum_dual_matches_float_runs() {
    use gdtune_core::gdtrace::{numeric_cost_at, CompiledObjective, FloatBinding};
    let f = PwPolyObjective::polynomial(scalar_quadratic(&int(1)));
    let oracle = CompiledObjective::new(&f).unwrap();
    for gamma in [int(0), ratio(1, 4), ratio(1, 2)] {
        let binding = ParamBinding::MomentumEta {
            x0: vec![int(1)],
            gamma,
            variant: MomentumVariant::VelocityFirst,
        };
        let dual = trace_param(&f, &binding, &cfg(5)).unwrap().dual;
        let bps: Vec<f64> = dual.breakpoints().iter().map(|b| b.to_f64()).collect();
        let fb = FloatBinding::from(&binding);
        for k in 0..=1000 {
            let t = 2.0 * k as f64 / 1000.0;
            if bps.iter().any(|b| (b - t).abs() <= 1e-6) {
                continue;
            }
            let exact = *dual.eval(&Rational::from_float(t).unwrap());
            assert_eq!(numeric_cost_at(&oracle, &fb, 5, 0.1, t).cost, exact, "t = {t}");
        }
    }
}
