//! Experiment report: exact CSV rows plus a JSON metadata sidecar.
//!
//! Neither file carries timestamps or thread counts, so identical seeds give
//! identical bytes. `wall_ms` stays empty unless timing was requested.

use gdtune_core::instances::{Family, InstanceDistribution};
use gdtune_core::rational::format_rational;
use gdtune_core::tuner::{loglog_slope, ExperimentReport, ExperimentRow};
use serde_json::{json, Value};

use crate::error::{CliError, Result};
use crate::format::rat;

pub const CSV_HEADER: [&str; 7] = ["trial", "m", "eta_hat", "train_mean", "test_mean", "sup_gap", "wall_ms"];

pub fn write_csv(report: &ExperimentReport) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Config(format!("csv: {e}"));
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in &report.rows {
        w.write_record([
            r.trial.to_string(),
            r.m.to_string(),
            format_rational(&r.eta_hat),
            format_rational(&r.train_mean),
            format_rational(&r.test_mean),
            format_rational(&r.sup_gap),
            r.wall_ms.map(|t| format!("{t:.3}")).unwrap_or_default(),
        ])
        .map_err(io)?;
    }
    w.into_inner().map_err(|e| CliError::Config(format!("csv: {e}")))
}

/// Rows of a report CSV. Substitution counts live in the sidecar and are
/// left at zero here; see [`merge_substitutions`].
pub fn read_csv(bytes: &[u8]) -> Result<Vec<ExperimentRow>> {
    let mut r = csv::Reader::from_reader(bytes);
    let header = r.headers().map_err(|e| CliError::parse("csv header", e.to_string()))?;
    if header.iter().ne(CSV_HEADER) {
        return Err(CliError::parse("csv header", format!("expected {}", CSV_HEADER.join(","))));
    }
    let mut rows = Vec::new();
    for (k, rec) in r.records().enumerate() {
        let at = format!("csv row {}", k + 2);
        let rec = rec.map_err(|e| CliError::parse(&at, e.to_string()))?;
        let field = |i: usize| rec.get(i).unwrap_or("");
        let int = |i: usize| {
            field(i)
                .parse::<usize>()
                .map_err(|e| CliError::parse(format!("{at}, {}", CSV_HEADER[i]), e.to_string()))
        };
        let q = |i: usize| {
            gdtune_core::rational::parse_rational(field(i))
                .map_err(|e| CliError::parse(format!("{at}, {}", CSV_HEADER[i]), e.to_string()))
        };
        let wall_ms = match field(6) {
            "" => None,
            s => Some(
                s.parse::<f64>()
                    .map_err(|e| CliError::parse(format!("{at}, wall_ms"), e.to_string()))?,
            ),
        };
        rows.push(ExperimentRow {
            trial: int(0)?,
            m: int(1)?,
            eta_hat: q(2)?,
            train_mean: q(3)?,
            test_mean: q(4)?,
            sup_gap: q(5)?,
            substitutions: 0,
            wall_ms,
        });
    }
    Ok(rows)
}

pub fn family_json(dist: &InstanceDistribution) -> Value {
    let mut v = match &dist.family {
        Family::RandomPoly { d, delta, lo, hi } => {
            json!({ "d": d, "delta": delta, "lo": rat(lo), "hi": rat(hi) })
        }
        Family::RandomPwPoly { d, delta, p, lo, hi } => {
            json!({ "d": d, "delta": delta, "p": p, "lo": rat(lo), "hi": rat(hi) })
        }
        Family::NetMse {
            widths,
            activation,
            samples,
            free,
        } => json!({ "widths": widths, "activation": activation.name(), "samples": samples, "free": free }),
        Family::ScalarQuadratic { lo, hi } => json!({ "lo": rat(lo), "hi": rat(hi) }),
    };
    v["family"] = json!(dist.family.name());
    v["seed"] = json!(dist.seed);
    v
}

pub fn sidecar(report: &ExperimentReport) -> Value {
    let c = &report.config;
    let medians = report.median_sup_gap();
    json!({
        "distribution": family_json(&c.dist),
        "gd": {
            "H": c.gd.max_iters,
            "theta": rat(&c.gd.theta),
            "domain": [rat(&c.gd.domain.lo), rat(&c.gd.domain.hi)],
            "budget_degree": c.gd.budget.max_degree,
            "budget_bits": c.gd.budget.max_bits,
        },
        "seed": c.seed,
        "m_schedule": c.m_schedule,
        "trials": c.trials,
        "test_size": report.test_size,
        "test_seed": report.test_seed,
        "test_substitutions": report.test_substitutions,
        "test_breakpoints": report.test_breakpoints,
        "substitutions": report.rows.iter().map(|r| json!([r.trial, r.m, r.substitutions])).collect::<Vec<_>>(),
        "median_sup_gap": medians.iter().map(|(m, g)| json!({ "m": m, "median": g })).collect::<Vec<_>>(),
        "loglog_slope": loglog_slope(&medians.iter().map(|&(m, g)| (m as f64, g)).collect::<Vec<_>>()),
    })
}

/// Restores per-row substitution counts from a sidecar.
pub fn merge_substitutions(rows: &mut [ExperimentRow], sidecar: &Value) -> Result<()> {
    let subs = sidecar["substitutions"]
        .as_array()
        .ok_or_else(|| CliError::parse("sidecar.substitutions", "expected an array"))?;
    if subs.len() != rows.len() {
        return Err(CliError::parse("sidecar.substitutions", "row count differs from the csv"));
    }
    for (k, (row, s)) in rows.iter_mut().zip(subs).enumerate() {
        let get = |i: usize| s.get(i).and_then(Value::as_u64).map(|v| v as usize);
        match (get(0), get(1), get(2)) {
            (Some(t), Some(m), Some(n)) if t == row.trial && m == row.m => row.substitutions = n,
            _ => return Err(CliError::parse(format!("sidecar.substitutions[{k}]"), "does not match the csv row")),
        }
    }
    Ok(())
}
