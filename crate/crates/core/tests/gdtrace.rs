use gdtune_core::gdtrace::{
    exact_cost_at, numeric_dual, trace_param, trace_param_with, trace_stepsize, trace_validation,
    CompiledObjective, GdConfig, MomentumVariant, ParamBinding, PwPolyObjective, SignVector,
    TraceOptions,
};
use gdtune_core::polynomials::{MultiPoly, UniPoly};
use gdtune_core::rational::{int, ratio, Interval, Rational};
use gdtune_core::realroots::AlgebraicNumber;
use gdtune_core::Error;
use std::collections::BTreeMap;
use std::time::Instant;

fn half_square() -> PwPolyObjective {
    PwPolyObjective::polynomial(MultiPoly::from_terms(1, [(vec![2], ratio(1, 2))]).unwrap())
}

fn cfg(h: u32, lo: Rational, hi: Rational) -> GdConfig {
    GdConfig::new(h, ratio(1, 10), Interval::new(lo, hi).unwrap()).unwrap()
}

/// Roots of `(1 - t)^k = +-1/10` inside [0, 2].
fn closed_form_breakpoints(ks: impl Iterator<Item = u32>) -> Vec<AlgebraicNumber> {
    let mut out = Vec::new();
    for k in ks {
        // 100 (1 - t)^(2k) - 1
        let p = &UniPoly::new(vec![int(1), int(-1)]).pow(2 * k).scale(&int(100)) - &UniPoly::constant(int(1));
        let roots = gdtune_core::realroots::isolate_roots(&p, &Interval::new(int(0), int(2)).unwrap()).unwrap();
        out.extend(roots);
    }
    out.sort();
    out
}

#[test]
fn quadratic_stepsize_dual() {
    let start = Instant::now();
    let trace = trace_stepsize(&half_square(), &[int(1)], &cfg(5, int(0), int(2))).unwrap();
    let elapsed = start.elapsed();
    let dual = &trace.dual;
    assert_eq!(dual.breakpoints(), closed_form_breakpoints(1..=3).as_slice());
    assert_eq!(dual.values(), &[5, 4, 3, 2, 3, 4, 5]);
    assert_eq!(*dual.eval(&int(1)), 2);
    assert!(dual.breakpoints().contains(&AlgebraicNumber::from_rational(ratio(9, 10))));
    assert!(dual.breakpoints().contains(&AlgebraicNumber::from_rational(ratio(11, 10))));
    assert_eq!(trace.stats.degree_violations, 0);
    assert!(trace.stats.within_envelope());
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
}

#[test]
fn quadratic_last_round_resolution() {
    let opts = TraceOptions {
        keep_final: false,
        resolve_last_round: true,
    };
    let binding = ParamBinding::StepSize { x0: vec![int(1)] };
    let trace = trace_param_with(&half_square(), &binding, &cfg(5, int(0), int(2)), opts).unwrap();
    assert_eq!(trace.raw.breakpoints(), closed_form_breakpoints(1..=4).as_slice());
    assert_eq!(trace.dual.breakpoints(), closed_form_breakpoints(1..=3).as_slice());
}

fn relu_scalar() -> PwPolyObjective {
    let w = MultiPoly::var(1, 0);
    let one = MultiPoly::constant(1, int(1));
    let wm1 = &w - &one;
    let mut pieces = BTreeMap::new();
    pieces.insert(SignVector::parse("+").unwrap(), &wm1 * &wm1);
    pieces.insert(SignVector::parse("-").unwrap(), one);
    PwPolyObjective::piecewise(1, vec![w], pieces).unwrap()
}

fn sq(p: UniPoly) -> UniPoly {
    &p * &p
}

#[test]
fn relu_flat_piece() {
    let f = relu_scalar();
    let c = cfg(5, int(0), ratio(3, 2));
    let trace = trace_stepsize(&f, &[int(2)], &c).unwrap();
    let one = AlgebraicNumber::from_rational(int(1));
    assert_eq!(trace.dual.breakpoints().last(), Some(&one));
    assert_eq!(*trace.dual.values().last().unwrap(), 2);
    for t in [ratio(101, 100), ratio(5, 4), ratio(3, 2)] {
        assert_eq!(*trace.dual.eval(&t), 2);
    }
    // Away from the boundary the dual matches a direct rational run.
    let binding = ParamBinding::StepSize { x0: vec![int(2)] };
    for k in (1..150).filter(|&k| k != 100) {
        let t = ratio(k, 100);
        assert_eq!(*trace.dual.eval(&t), exact_cost_at(&f, &binding, &c, &t).unwrap(), "t = {t}");
    }

    let wm1 = &MultiPoly::var(1, 0) - &MultiPoly::constant(1, int(1));
    let fv = PwPolyObjective::polynomial(&wm1 * &wm1);
    let v = trace_validation(&f, &fv, &[int(2)], &c).unwrap();
    let last = v.values.pieces().last().unwrap();
    assert_eq!(last, &sq(UniPoly::new(vec![int(1), int(-2)])));
    assert_eq!(v.values.breakpoints().last(), Some(&one));
}

#[test]
fn flat_gradient_never_converges() {
    let f = PwPolyObjective::polynomial(MultiPoly::var(1, 0));
    let trace = trace_stepsize(&f, &[int(3)], &cfg(5, int(0), int(2))).unwrap();
    assert!(trace.dual.breakpoints().is_empty());
    assert_eq!(trace.dual.values(), &[5]);
}

#[test]
fn init_scale_breakpoints() {
    let binding = ParamBinding::InitScale {
        direction: vec![int(1)],
        eta: ratio(1, 2),
    };
    let trace = trace_param(&half_square(), &binding, &cfg(5, int(0), int(4))).unwrap();
    let expect: Vec<_> = (0..4).map(|k| AlgebraicNumber::from_rational(ratio(1 << k, 10))).collect();
    assert_eq!(trace.dual.breakpoints(), expect.as_slice());
    assert_eq!(trace.dual.values(), &[1, 2, 3, 4, 5]);
    assert_eq!(trace.stats.degree_violations, 0);
}

#[test]
fn schedule_coordinate_dual() {
    let binding = ParamBinding::ScheduleCoord {
        index: 0,
        x0: vec![int(1)],
        schedule: vec![int(0), int(1), int(1)],
    };
    let trace = trace_param(&half_square(), &binding, &cfg(3, int(0), int(2))).unwrap();
    let expect = [ratio(9, 10), ratio(11, 10)].map(AlgebraicNumber::from_rational);
    assert_eq!(trace.dual.breakpoints(), &expect);
    assert_eq!(trace.dual.values(), &[3, 2, 3]);
}

#[test]
fn zero_momentum_is_plain_descent() {
    let c = cfg(5, int(0), int(2));
    let plain = trace_stepsize(&half_square(), &[int(1)], &c).unwrap();
    let binding = ParamBinding::MomentumEta {
        x0: vec![int(1)],
        gamma: int(0),
        variant: MomentumVariant::VelocityFirst,
    };
    assert_eq!(trace_param(&half_square(), &binding, &c).unwrap().dual, plain.dual);
}

#[test]
fn literal_momentum_wastes_first_step() {
    // x_2 = x_1 + y_1 = x_1, so nothing can converge before round 3 unless x_1 already has.
    let binding = ParamBinding::MomentumEta {
        x0: vec![int(1)],
        gamma: ratio(1, 2),
        variant: MomentumVariant::Literal,
    };
    let c = cfg(5, int(0), int(2));
    let trace = trace_param(&half_square(), &binding, &c).unwrap();
    assert!(trace.dual.values().iter().all(|&v| v >= 3));
    for k in 1..40 {
        let t = ratio(k, 20);
        let b = trace.dual.breakpoints().iter().any(|b| b == &AlgebraicNumber::from_rational(t.clone()));
        if !b {
            assert_eq!(*trace.dual.eval(&t), exact_cost_at(&half_square(), &binding, &c, &t).unwrap());
        }
    }
}

#[test]
fn quadratic_validation_dual() {
    let fv = PwPolyObjective::polynomial(MultiPoly::from_terms(1, [(vec![2], int(1))]).unwrap());
    let v = trace_validation(&half_square(), &fv, &[int(1)], &cfg(5, int(0), int(2))).unwrap();
    let one_minus = UniPoly::new(vec![int(1), int(-1)]);
    assert_eq!(v.values.eval(&int(1)), int(0));
    // The cost-2 cell returns x_2 = 1 - t, cost-3 cells return x_3.
    let k = v.values.cell_index(&int(1));
    assert_eq!(v.values.pieces()[k], one_minus.pow(2));
    assert_eq!(v.values.pieces()[k - 1], one_minus.pow(4));
    assert_eq!(v.values.pieces()[k + 1], one_minus.pow(4));
    // Cells settling at cost 5 split by whether round 5 converged.
    assert_eq!(v.values.num_cells(), 9);
    assert_eq!(v.values.pieces()[0], one_minus.pow(10));

    let zero = PwPolyObjective::polynomial(MultiPoly::zero(1));
    let v = trace_validation(&half_square(), &zero, &[int(1)], &cfg(5, int(0), int(2))).unwrap();
    assert_eq!(v.values.num_cells(), 1);
    assert!(v.values.pieces()[0].is_zero());
}

#[test]
fn numeric_oracle_agrees_on_quadratic() {
    let c = cfg(5, int(0), int(2));
    let trace = trace_stepsize(&half_square(), &[int(1)], &c).unwrap();
    let oracle = CompiledObjective::new(&half_square()).unwrap();
    let binding = ParamBinding::StepSize { x0: vec![int(1)] };
    let nd = numeric_dual(&oracle, &binding, &c, 10_000, 20).unwrap();
    let bps: Vec<f64> = trace.dual.breakpoints().iter().map(|b| b.to_f64()).collect();
    let mut checked = 0;
    for (&t, &cost) in nd.params.iter().zip(&nd.costs) {
        if bps.iter().any(|b| (b - t).abs() <= 1e-6) {
            continue;
        }
        assert_eq!(cost, *trace.dual.eval(&Rational::from_float(t).unwrap()), "t = {t}");
        checked += 1;
    }
    assert!(checked > 9_990);
    assert_eq!(nd.jumps.len(), bps.len());
    for (j, b) in nd.jumps.iter().zip(&bps) {
        // Rounding in 1 - t may move a float jump by an ulp or so.
        assert!(j.lo - 1e-12 <= *b && *b <= j.hi + 1e-12 && j.hi - j.lo < 1e-8, "{j:?} vs {b}");
    }

    let flat = CompiledObjective::new(&PwPolyObjective::polynomial(MultiPoly::var(1, 0))).unwrap();
    let nd = numeric_dual(&flat, &binding, &c, 100, 20).unwrap();
    assert!(nd.jumps.is_empty() && nd.costs.iter().all(|&v| v == 5));
}

#[test]
fn boundary_identically_hit_is_degenerate() {
    // x0 = 0 sits on the boundary w for every step size, since the flat piece has zero gradient.
    let err = trace_stepsize(&relu_scalar(), &[int(0)], &cfg(3, int(0), int(1))).unwrap_err();
    assert!(matches!(err, Error::DegenerateTrajectory { .. }), "{err:?}");
}
