use std::path::Path;
use std::process::{Command, Output};

use gdtune::format::{parse_piecewise, Piecewise};
use gdtune_core::rational::{int, ratio};
use gdtune_core::{trace_stepsize, AlgebraicNumber, GdConfig, Interval, PwPolyObjective};
use serde_json::Value;

const QUAD: [&str; 7] = ["--H", "5", "--theta", "1/10", "--domain", "0", "2"];

fn gdtune(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gdtune")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn error_record(o: &Output) -> Value {
    let err = String::from_utf8_lossy(&o.stderr);
    serde_json::from_str(err.lines().last().expect("error line")).expect("json error record")
}

fn with(base: &[&str], extra: &[&str]) -> Vec<String> {
    base.iter().chain(extra).map(|s| s.to_string()).collect()
}

fn run(args: Vec<String>) -> Output {
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    gdtune(&refs)
}

#[test]
fn trace_writes_the_exact_dual() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = run(with(&["trace", "builtin:quadratic", "--out", out], &QUAD));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("  9/10\n") && text.contains("  11/10\n"), "{text}");

    let json = std::fs::read_to_string(dir.path().join("trace.json")).unwrap();
    let Piecewise::Cost(dual) = parse_piecewise(&json).unwrap() else {
        panic!("trace output is a cost dual");
    };
    let half = PwPolyObjective::polynomial(gdtune_core::instances::scalar_quadratic(&int(1)));
    let cfg = GdConfig::new(5, ratio(1, 10), Interval::new(int(0), int(2)).unwrap()).unwrap();
    assert_eq!(dual, trace_stepsize(&half, &[int(1)], &cfg).unwrap().dual);
    assert!(dual.breakpoints().contains(&AlgebraicNumber::from_rational(ratio(9, 10))));

    // Plot vertices come straight from the written file.
    let o = run(vec!["plotdata".into(), dir.path().join("trace.json").display().to_string()]);
    assert!(o.status.success());
    let plot = stdout(&o);
    assert_eq!(plot.lines().count(), 2 * dual.num_cells());
    assert!(plot.starts_with("0 5\n"), "{plot}");
}

#[test]
fn bounds_prints_shape_values() {
    let o = gdtune(&["bounds", "--regime", "warren", "--degree", "2", "--s", "3", "--n", "1"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("≈ 65.23"), "{text}");
    assert!(text.contains("shape value, not a rigorous constant"));

    let o = gdtune(&["bounds", "--regime", "sample", "--H", "10", "--eps", "0.1", "--fail-prob", "0.01", "--delta", "3"]);
    assert!(stdout(&o).contains("≈ 155912.9"), "{}", stdout(&o));

    let o = gdtune(&["bounds", "--regime", "poly-pieces", "--H", "7", "--delta", "1"]);
    assert!(stdout(&o).contains("≈ 1.000000 "), "{}", stdout(&o));

    let o = gdtune(&["bounds", "--regime", "warren", "--degree", "2", "--s", "3"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_record(&o)["error"], "config_error");
}

#[test]
fn oracle_check_on_five_seeds() {
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/random_pwpoly.toml");
    let o = gdtune(&["oracle-check", "--config", config.to_str().unwrap(), "--seeds", "5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.trim_end().ends_with("0 mismatches"), "{text}");
    assert_eq!(text.lines().filter(|l| l.contains("@seed")).count(), 5);
}

#[test]
fn exit_codes_and_error_records() {
    // Missing domain is a configuration error.
    let o = gdtune(&["trace", "builtin:quadratic", "--H", "5", "--theta", "1/10"]);
    assert_eq!(o.status.code(), Some(2));
    let rec = error_record(&o);
    assert_eq!(rec["error"], "config_error");
    assert_eq!(rec["exit"], 2);

    let o = run(with(&["trace", "builtin:quadratic", "--theta", "0.1"], &QUAD[..4]));
    assert_eq!(o.status.code(), Some(2));

    // Degree grows by one per round, so a cap of 1 trips at round 3.
    let o = run(with(&["trace", "builtin:quadratic", "--budget-degree", "1"], &QUAD));
    assert_eq!(o.status.code(), Some(3));
    let rec = error_record(&o);
    assert_eq!(rec["error"], "symbolic_budget_exceeded");
    assert_eq!(rec["instance"], "quadratic");

    // The ReLU kink hit for every step size.
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("kink.json");
    let text = gdtune::load::builtin_text("relu_scalar")
        .unwrap()
        .replace("\"label\": \"relu_scalar\"", "\"label\": \"kink\"")
        .replace("\"x0\": [\"2\"]", "\"x0\": [\"0\"]");
    std::fs::write(&path, text).unwrap();
    let o = run(with(&["trace", path.to_str().unwrap()], &QUAD));
    assert_eq!(o.status.code(), Some(3));
    let rec = error_record(&o);
    assert_eq!(rec["error"], "degenerate_trajectory");
    assert_eq!(rec["instance"], "kink");

    std::fs::write(&path, "{\"kind\": \"poly\", \"d\": 1, \"poly\": [{\"exp\": [1], \"coef\": \"1/0\"}]}").unwrap();
    let o = run(with(&["trace", path.to_str().unwrap()], &QUAD));
    assert_eq!(o.status.code(), Some(2));
    let rec = error_record(&o);
    assert_eq!(rec["error"], "parse_error");
    assert!(rec["message"].as_str().unwrap().contains("poly[0].coef"));

    let o = run(with(&["trace", "/nonexistent/x.json"], &QUAD));
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_record(&o)["error"], "io_error");
}

#[test]
fn tuning_commands() {
    let o = run(with(&["tune", "builtin:quadratic", "builtin:quadratic"], &QUAD));
    assert!(stdout(&o).starts_with("argmin 1/1 "), "{}", stdout(&o));

    let o = run(with(&["momentum", "builtin:quadratic", "--gamma-grid", "0,1/2"], &QUAD));
    let text = stdout(&o);
    assert!(text.contains("gamma 0/1: argmin 1/1"), "{text}");

    let o = run(with(&["schedule", "builtin:quadratic", "--H", "2"], &QUAD[2..]));
    let text = stdout(&o);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(text.contains("schedule: [1/1, "), "{text}");

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("init.toml");
    std::fs::write(&cfg, "[init]\neta = \"1/2\"\n").unwrap();
    let o = run(vec![
        "init-scale".into(),
        "builtin:quadratic".into(),
        "--config".into(),
        cfg.display().to_string(),
        "--H".into(),
        "5".into(),
        "--theta".into(),
        "1/10".into(),
        "--domain".into(),
        "0".into(),
        "4".into(),
    ]);
    assert!(stdout(&o).contains("mean cost 1/1"), "{}", stdout(&o));

    let o = run(with(&["init-coord", "builtin:quadratic", "--config", cfg.to_str().unwrap(), "--domain", "-1", "1"], &QUAD[..4]));
    assert!(stdout(&o).starts_with("coordinate 0: argmin 0/1"), "{}", stdout(&o));

    let o = run(with(&["pdim", "builtin:quadratic"], &QUAD));
    assert!(stdout(&o).contains("lower bound 1 "), "{}", stdout(&o));

    let o = run(with(&["validate", "builtin:relu_scalar"], &["--H", "5", "--theta", "1/10", "--domain", "0", "3/2"]));
    assert!(stdout(&o).contains("minimum 0/1 (~0.000000) at 1/2"), "{}", stdout(&o));
}

#[test]
fn experiment_output_ignores_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    std::fs::write(
        &cfg,
        "seed = 3\n[gd]\nH = 4\ntheta = \"1/10\"\ndomain = [0, 2]\n\
         [distribution]\nfamily = \"scalar_quadratic\"\nlo = \"1/2\"\nhi = 2\n\
         [experiment]\nm_schedule = [4, 8]\ntrials = 3\n",
    )
    .unwrap();
    let base = ["experiment", "--config", cfg.to_str().unwrap()];
    let one = run(with(&base, &["--threads", "1"]));
    let three = run(with(&base, &["--threads", "3"]));
    assert!(one.status.success(), "{}", String::from_utf8_lossy(&one.stderr));
    assert_eq!(one.stdout, three.stdout);
    let csv = stdout(&one);
    assert_eq!(csv.lines().count(), 1 + 6);

    let timed = run(with(&base, &["--timing"]));
    let row = stdout(&timed).lines().nth(1).unwrap().to_string();
    assert!(!row.ends_with(','), "{row}");
}
