use gdtune::config::RunConfig;
use gdtune::format::{
    parse_instance, parse_piecewise, parse_pwconst, parse_pwpoly, pwconst_to_json, pwpoly_to_json, serialize_instance,
    Piecewise,
};
use gdtune::load::{builtin_text, load_instance, BUILTINS};
use gdtune::report::{merge_substitutions, read_csv, sidecar, write_csv};
use gdtune::CliError;
use gdtune_core::instances::{sample_instance, Activation, Family, InstanceDistribution};
use gdtune_core::rational::{int, ratio};
use gdtune_core::tuner::{uniform_convergence_experiment, ExperimentConfig, Sequential};
use gdtune_core::{trace_stepsize, trace_validation, GdConfig, Interval, Rational};

fn gd(h: u32, lo: Rational, hi: Rational) -> GdConfig {
    GdConfig::new(h, ratio(1, 10), Interval::new(lo, hi).unwrap()).unwrap()
}

fn parse_err(text: &str) -> (String, String) {
    match parse_instance(text) {
        Err(CliError::Parse { at, message }) => (at, message),
        other => panic!("expected a parse error, got {other:?}"),
    }
}

#[test]
fn builtins_round_trip() {
    for (name, text) in BUILTINS {
        let inst = parse_instance(text).unwrap();
        assert_eq!(inst.label, *name);
        assert_eq!(parse_instance(&serialize_instance(&inst)).unwrap(), inst);
    }
    assert!(builtin_text("nope").is_none());
    assert!(matches!(load_instance("builtin:nope"), Err(CliError::Config(_))));
}

#[test]
fn sampled_instances_round_trip() {
    let families = [
        Family::RandomPoly {
            d: 2,
            delta: 3,
            lo: int(-1),
            hi: int(1),
        },
        Family::RandomPwPoly {
            d: 2,
            delta: 2,
            p: 2,
            lo: int(-1),
            hi: int(1),
        },
        Family::NetMse {
            widths: vec![2, 2, 1],
            activation: Activation::Relu,
            samples: 3,
            free: vec![0, 5],
        },
        Family::ScalarQuadratic {
            lo: ratio(1, 2),
            hi: int(2),
        },
    ];
    for family in families {
        let dist = InstanceDistribution { family, seed: 4 };
        for k in 0..5 {
            let inst = sample_instance(&dist, 9, k).unwrap();
            let text = serialize_instance(&inst);
            assert_eq!(parse_instance(&text).unwrap(), inst, "{text}");
        }
    }
}

#[test]
fn duals_round_trip_exactly() {
    let inst = load_instance("builtin:quadratic").unwrap();
    let f = inst.objective.objective().unwrap();
    let c = gd(5, int(0), int(2));
    let trace = trace_stepsize(&f, &inst.x0_or_zero(), &c).unwrap();
    let text = pwconst_to_json(&trace.dual).to_string();
    assert_eq!(parse_pwconst::<u32>(&text).unwrap(), trace.dual);
    match parse_piecewise(&text).unwrap() {
        Piecewise::Cost(d) => assert_eq!(d, trace.dual),
        _ => panic!("integer values read as a cost dual"),
    }

    let mean = trace.dual.map(|v| Rational::new((*v).into(), 3.into()));
    let text = pwconst_to_json(&mean).to_string();
    assert_eq!(parse_pwconst::<Rational>(&text).unwrap(), mean);

    let relu = load_instance("builtin:relu_scalar").unwrap();
    let fv = relu.validation.as_ref().unwrap().objective().unwrap();
    let v = trace_validation(&relu.objective.objective().unwrap(), &fv, &relu.x0_or_zero(), &gd(5, int(0), ratio(3, 2)))
        .unwrap();
    let text = pwpoly_to_json(&v.values).to_string();
    assert_eq!(parse_pwpoly(&text).unwrap(), v.values);
    let nested = format!("{{\"values\": {text}}}");
    assert!(matches!(parse_piecewise(&nested).unwrap(), Piecewise::Poly(p) if p == v.values));
}

#[test]
fn exact_fields_reject_bad_numbers() {
    let base = r#"{"kind": "poly", "d": 1, "poly": [{"exp": [2], "coef": COEF}]}"#;
    let (at, msg) = parse_err(&base.replace("COEF", "\"1/0\""));
    assert_eq!(at, "instance.poly[0].coef");
    assert!(msg.contains("zero denominator"), "{msg}");

    let (at, msg) = parse_err(&base.replace("COEF", "0.5"));
    assert_eq!(at, "instance.poly[0].coef");
    assert!(msg.contains("floats"), "{msg}");

    let (_, msg) = parse_err(&base.replace("COEF", "\"0.5\""));
    assert!(msg.contains("not an exact rational"), "{msg}");

    // Bare integers are exact.
    assert!(parse_instance(&base.replace("COEF", "3")).is_ok());
}

#[test]
fn structural_errors_name_the_field() {
    let (at, msg) = parse_err(r#"{"kind": "poly", "d": 1, "poly": [{"exp": [2, 0], "coef": "1"}]}"#);
    assert_eq!(at, "instance.poly[0]");
    assert!(msg.contains("length 2"), "{msg}");

    let (at, msg) = parse_err(r#"{"kind": "cubic", "d": 1}"#);
    assert_eq!(at, "instance");
    assert!(msg.contains("cubic"));

    let net = r#"{"kind": "net", "d": 1, "net": {"widths": [1, 1, 1], "activation": "swish",
        "data": [{"input": ["1"], "target": ["0"]}], "free": [0], "frozen": ["0", "1", "0"]}}"#;
    let (at, msg) = parse_err(net);
    assert_eq!(at, "instance.net.activation");
    assert!(msg.contains("swish"), "{msg}");

    let (at, _) = parse_err("{\"kind\": \"poly\",\n  \"d\": }");
    assert!(at.starts_with("instance line 2, column"), "{at}");
}

#[test]
fn config_rejects_floats_and_applies_defaults() {
    let cfg = RunConfig::parse("[gd]\nH = 5\ntheta = \"1/10\"\ndomain = [0, \"3/2\"]\n").unwrap();
    let g = cfg.gd().unwrap();
    assert_eq!((g.max_iters, g.theta.clone()), (5, ratio(1, 10)));
    assert_eq!(g.domain.hi, ratio(3, 2));

    match RunConfig::parse("[gd]\nH = 5\ntheta = 0.1\n") {
        Err(CliError::Parse { at, message }) => {
            assert_eq!(at, "config line 3");
            assert!(message.contains("not exact"), "{message}");
        }
        other => panic!("{other:?}"),
    }
    assert!(matches!(RunConfig::parse("[gd]\nhorizon = 5\n"), Err(CliError::Parse { .. })));
    let no_domain = RunConfig::parse("[gd]\nH = 5\ntheta = \"1/10\"\n").unwrap();
    let err = no_domain.gd().unwrap_err();
    assert_eq!(err.exit_status(), 2);
}

#[test]
fn report_csv_round_trip() {
    let cfg = ExperimentConfig {
        dist: InstanceDistribution {
            family: Family::ScalarQuadratic {
                lo: ratio(1, 2),
                hi: int(2),
            },
            seed: 1,
        },
        m_schedule: vec![2, 4],
        trials: 2,
        gd: gd(4, int(0), int(2)),
        test_size: Some(16),
        seed: 5,
    };
    let report = uniform_convergence_experiment(&cfg, &Sequential).unwrap();
    let bytes = write_csv(&report).unwrap();
    let text = String::from_utf8(bytes.clone()).unwrap();
    assert!(text.starts_with("trial,m,eta_hat,train_mean,test_mean,sup_gap,wall_ms\n"));
    assert!(text.lines().nth(1).unwrap().ends_with(','), "wall_ms stays empty without timing");
    let mut rows = read_csv(&bytes).unwrap();
    merge_substitutions(&mut rows, &sidecar(&report)).unwrap();
    assert_eq!(rows, report.rows);
}
