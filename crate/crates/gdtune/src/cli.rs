use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use gdtune_core::gdtrace::{numeric_dual, trace_param_with, NumericDual, TraceOptions, TraceStats};
use gdtune_core::instances::{sample_instance, Instance};
use gdtune_core::piecewise::{pwpoly_min, PwConst};
use gdtune_core::rational::{format_rational, to_f64};
use gdtune_core::tuner::{
    bounds_calculator, derive_seed, empirical_pdim_lower_bound, instance_dual, loglog_slope,
    momentum_grid_tune, schedule_coordinate_descent, tune_param, uniform_convergence_experiment, BoundQuery,
    BoundValue, ErmResult, Executor, ExperimentConfig, PdimRow, PDIM_CAP,
};
use gdtune_core::{trace_validation, DualCost, GdConfig, ParamBinding, Rational, Trace};
use serde_json::{json, Value};

use crate::config::{parse_exact, parse_rational_list, parse_usize_list, Overrides, RunConfig};
use crate::error::{CliError, Result};
use crate::exec::RayonExecutor;
use crate::format::{algebraic_to_json, parse_piecewise, pwconst_to_json, pwpoly_to_json, rat, Piecewise};
use crate::load::{load_instance, resolve_sample};
use crate::report::{sidecar, write_csv};

#[derive(Debug, Parser)]
#[command(name = "gdtune", version, about = "Exact tuning of gradient descent hyperparameters")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Debug)]
pub struct RatList(pub Vec<Rational>);

#[derive(Clone, Debug)]
pub struct UsizeList(pub Vec<usize>);

fn rat_list(s: &str) -> std::result::Result<RatList, String> {
    parse_rational_list(s).map(RatList)
}

fn usize_list(s: &str) -> std::result::Result<UsizeList, String> {
    parse_usize_list(s).map(UsizeList)
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// TOML run configuration; flags override its fields.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Directory for JSON / CSV outputs. Without it results go to stdout.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Parameter domain, exact endpoints.
    #[arg(long, global = true, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true)]
    pub domain: Option<Vec<String>>,
    /// Iteration budget H.
    #[arg(long = "H", global = true, value_name = "N")]
    pub h: Option<u32>,
    #[arg(long, global = true, value_name = "NUM/DEN", value_parser = parse_exact)]
    pub theta: Option<Rational>,
    /// Grid size of the floating-point oracle.
    #[arg(long, global = true, value_name = "N")]
    pub grid: Option<usize>,
    #[arg(long, global = true, value_name = "a,b,c", value_parser = rat_list)]
    pub gamma_grid: Option<RatList>,
    #[arg(long, global = true, value_name = "a,b,c", value_parser = usize_list)]
    pub m_schedule: Option<UsizeList>,
    #[arg(long, global = true, value_name = "N")]
    pub trials: Option<usize>,
    #[arg(long, global = true, value_name = "N")]
    pub budget_degree: Option<usize>,
    /// Worker threads (default: one per core).
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
    /// Record wall-clock milliseconds in experiment rows.
    #[arg(long, global = true)]
    pub timing: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact dual of one instance.
    Trace(TraceArgs),
    /// Exact ERM over the step size.
    Tune(SampleArgs),
    /// Coordinate descent over the step-size schedule.
    Schedule(ScheduleArgs),
    /// Exact ERM over the step size for each momentum value.
    Momentum(SampleArgs),
    /// Exact ERM over the initialization scale.
    InitScale(SampleArgs),
    /// Exact ERM over one initial coordinate.
    InitCoord(InitCoordArgs),
    /// Validation-loss dual of one instance and its exact minimizer.
    Validate(InstanceArg),
    /// Train/test gap of ERM across sample sizes.
    Experiment,
    /// Empirical pseudo-dimension lower bound.
    Pdim(PdimArgs),
    /// Shape values of the sample complexity formulas.
    Bounds(Box<BoundsArgs>),
    /// Exact duals against the floating-point grid oracle.
    OracleCheck(OracleArgs),
    /// Vertices of a piecewise function as two-column text.
    Plotdata(PlotArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BindingKind {
    Stepsize,
    InitScale,
    InitCoord,
    Schedule,
    Momentum,
}

#[derive(Debug, Args)]
pub struct TraceArgs {
    /// Instance file or builtin:NAME.
    pub instance: String,
    #[arg(long, value_enum, default_value = "stepsize")]
    pub binding: BindingKind,
    /// Also emit the partition before merging equal neighbours.
    #[arg(long)]
    pub raw: bool,
}

#[derive(Debug, Args)]
pub struct InstanceArg {
    /// Instance file or builtin:NAME.
    pub instance: String,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    /// Instance files or builtin:NAME; defaults to the configured sample.
    pub instances: Vec<String>,
}

#[derive(Debug, Args)]
pub struct ScheduleArgs {
    #[command(flatten)]
    pub sample: SampleArgs,
    #[arg(long)]
    pub sweeps: Option<usize>,
}

#[derive(Debug, Args)]
pub struct InitCoordArgs {
    #[command(flatten)]
    pub sample: SampleArgs,
    /// Zero-based coordinate.
    #[arg(long)]
    pub index: Option<usize>,
}

#[derive(Debug, Args)]
pub struct PdimArgs {
    #[command(flatten)]
    pub sample: SampleArgs,
    #[arg(long)]
    pub m_max: Option<usize>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub sample: SampleArgs,
    /// Draw one instance from the configured distribution per seed,
    /// starting at --seed.
    #[arg(long, value_name = "N")]
    pub seeds: Option<u64>,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// JSON file holding a dual, a mean or a validation dual.
    pub input: PathBuf,
    /// Sample points per cell for piecewise polynomials.
    #[arg(long)]
    pub points: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Regime {
    Pdim,
    Sample,
    Warren,
    PiecewiseConstant,
    GoldbergJerrum,
    Khovanskii,
    PolyPieces,
    PwpolyPieces,
    ValidationPieces,
    PfaffianIntervals,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum RowKind {
    Polynomial,
    PiecewisePoly,
    Pfaffian,
    Schedule,
    InitVector,
    Validation,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(long, value_enum)]
    pub regime: Regime,
    /// Pdim row for the pdim and sample regimes.
    #[arg(long, value_enum, default_value = "polynomial")]
    pub row: RowKind,
    #[arg(long)]
    pub degree: Option<f64>,
    #[arg(long)]
    pub s: Option<f64>,
    #[arg(long)]
    pub n: Option<f64>,
    /// Objective degree.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Number of boundary polynomials.
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub d: Option<f64>,
    /// Pfaffian chain length.
    #[arg(long)]
    pub q: Option<f64>,
    /// Pfaffian chain degree.
    #[arg(long)]
    pub m: Option<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
    /// Failure probability.
    #[arg(long)]
    pub fail_prob: Option<f64>,
    #[arg(long)]
    pub pdim: Option<f64>,
    #[arg(long)]
    pub pieces: Option<f64>,
    #[arg(long)]
    pub predicates: Option<f64>,
    #[arg(long)]
    pub delta_v: Option<f64>,
    #[arg(long)]
    pub p_v: Option<f64>,
}

struct Env<'a> {
    cfg: RunConfig,
    exec: RayonExecutor,
    stdout: &'a mut dyn Write,
}

impl Env<'_> {
    fn say(&mut self, line: impl AsRef<str>) -> Result<()> {
        writeln!(self.stdout, "{}", line.as_ref()).map_err(|e| CliError::io(Path::new("<stdout>"), e))
    }

    fn out_dir(&self) -> Option<&Path> {
        self.cfg.out.as_deref()
    }

    /// Writes `bytes` to `out/name` when an output directory is set;
    /// returns whether it did.
    fn write_file(&mut self, name: &str, bytes: &[u8]) -> Result<bool> {
        let Some(dir) = self.out_dir() else {
            return Ok(false);
        };
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let path = dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        let shown = path.display().to_string();
        self.say(format!("wrote {shown}"))?;
        Ok(true)
    }

    fn emit_json(&mut self, name: &str, v: &Value) -> Result<()> {
        let mut s = serde_json::to_string_pretty(v).expect("json");
        s.push('\n');
        self.write_file(name, s.as_bytes())?;
        Ok(())
    }
}

pub fn overrides(g: &GlobalArgs) -> Result<Overrides> {
    let domain = match &g.domain {
        Some(ends) => {
            let lo = parse_exact(&ends[0]).map_err(|e| CliError::parse("--domain LO", e))?;
            let hi = parse_exact(&ends[1]).map_err(|e| CliError::parse("--domain HI", e))?;
            Some((lo, hi))
        }
        None => None,
    };
    Ok(Overrides {
        seed: g.seed,
        out: g.out.clone(),
        domain,
        h: g.h,
        theta: g.theta.clone(),
        grid: g.grid,
        gamma_grid: g.gamma_grid.as_ref().map(|l| l.0.clone()),
        m_schedule: g.m_schedule.as_ref().map(|l| l.0.clone()),
        trials: g.trials,
        budget_degree: g.budget_degree,
        threads: g.threads,
    })
}

pub fn run(cli: &Cli, stdout: &mut dyn Write) -> Result<()> {
    let mut cfg = match &cli.global.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    cfg.apply(&overrides(&cli.global)?);
    let exec = RayonExecutor::new(cfg.threads, cli.global.timing)?;
    let mut env = Env { cfg, exec, stdout };
    match &cli.command {
        Command::Trace(a) => cmd_trace(&mut env, a),
        Command::Tune(a) => cmd_tune(&mut env, a),
        Command::Schedule(a) => cmd_schedule(&mut env, a),
        Command::Momentum(a) => cmd_momentum(&mut env, a),
        Command::InitScale(a) => cmd_init_scale(&mut env, a),
        Command::InitCoord(a) => cmd_init_coord(&mut env, a),
        Command::Validate(a) => cmd_validate(&mut env, a),
        Command::Experiment => cmd_experiment(&mut env),
        Command::Pdim(a) => cmd_pdim(&mut env, a),
        Command::Bounds(a) => cmd_bounds(&mut env, a),
        Command::OracleCheck(a) => cmd_oracle_check(&mut env, a),
        Command::Plotdata(a) => cmd_plotdata(&mut env, a),
    }
}

fn approx(q: &Rational) -> String {
    format!("{:.6}", to_f64(q))
}

fn gd_json(gd: &GdConfig) -> Value {
    json!({
        "H": gd.max_iters,
        "theta": rat(&gd.theta),
        "domain": [rat(&gd.domain.lo), rat(&gd.domain.hi)],
    })
}

fn stats_json(s: &TraceStats) -> Value {
    json!({
        "delta": s.delta,
        "boundaries": s.num_boundaries,
        "round_max_degree": s.round_max_degree,
        "degree_violations": s.degree_violations,
        "raw_cells": s.raw_cells,
        "final_cells": s.final_cells,
        "piece_envelope": s.piece_envelope().to_string(),
    })
}

fn erm_json(e: &ErmResult) -> Value {
    json!({
        "m": e.m,
        "eta_hat": rat(&e.eta_hat),
        "train_mean": rat(&e.train_mean),
        "cell": [algebraic_to_json(&e.cell.0), algebraic_to_json(&e.cell.1)],
        "breakpoints": e.breakpoints,
        "mean": pwconst_to_json(&e.mean),
    })
}

fn erm_line(e: &ErmResult) -> String {
    format!(
        "argmin {} (~{}), mean cost {} (~{}) over {} instances, cell ({}, {}), {} breakpoints",
        format_rational(&e.eta_hat),
        approx(&e.eta_hat),
        format_rational(&e.train_mean),
        approx(&e.train_mean),
        e.m,
        e.cell.0,
        e.cell.1,
        e.breakpoints
    )
}

fn dual_lines<V: std::fmt::Display + Clone + PartialEq>(d: &PwConst<V>) -> Vec<String> {
    (0..d.num_cells())
        .map(|k| {
            let (a, b) = d.cell(k);
            format!("  ({:.9}, {:.9})  {}", a.to_f64(), b.to_f64(), d.values()[k])
        })
        .collect()
}

fn midpoint_schedule(gd: &GdConfig) -> Vec<Rational> {
    vec![gd.domain.midpoint(); gd.max_iters as usize]
}

fn binding_for(env: &Env, kind: BindingKind, inst: &Instance, gd: &GdConfig) -> Result<ParamBinding> {
    let cfg = &env.cfg;
    let x0 = inst.x0_or_zero();
    Ok(match kind {
        BindingKind::Stepsize => ParamBinding::StepSize { x0 },
        BindingKind::InitScale => ParamBinding::InitScale {
            direction: cfg.init_direction().unwrap_or(x0),
            eta: cfg.init_eta()?,
        },
        BindingKind::InitCoord => ParamBinding::InitCoord {
            index: cfg.init.index.unwrap_or(0),
            base: cfg.init_base().unwrap_or(x0),
            eta: cfg.init_eta()?,
        },
        BindingKind::Schedule => ParamBinding::ScheduleCoord {
            index: cfg.schedule.index.unwrap_or(0),
            x0,
            schedule: cfg.init_schedule().unwrap_or_else(|| midpoint_schedule(gd)),
        },
        BindingKind::Momentum => ParamBinding::MomentumEta {
            x0,
            gamma: cfg.gamma_grid()?.first().cloned().ok_or_else(|| CliError::Config("empty gamma grid".into()))?,
            variant: cfg.momentum_variant()?,
        },
    })
}

fn cmd_trace(env: &mut Env, a: &TraceArgs) -> Result<()> {
    let gd = env.cfg.gd()?;
    let inst = load_instance(&a.instance)?;
    let binding = binding_for(env, a.binding, &inst, &gd)?;
    let opts = TraceOptions {
        keep_final: false,
        resolve_last_round: a.raw,
    };
    let trace: Trace = inst
        .objective
        .objective()
        .and_then(|f| trace_param_with(&f, &binding, &gd, opts))
        .map_err(|e| e.in_instance(&inst.label))?;
    let mut doc = json!({
        "instance": inst.label,
        "binding": binding.name(),
        "gd": gd_json(&gd),
        "dual": pwconst_to_json(&trace.dual),
        "stats": stats_json(&trace.stats),
    });
    if a.raw {
        doc["raw"] = pwconst_to_json(&trace.raw);
    }
    env.say(format!(
        "{}: {} dual, H = {}, theta = {}, domain [{}, {}]",
        inst.label,
        binding.name(),
        gd.max_iters,
        format_rational(&gd.theta),
        format_rational(&gd.domain.lo),
        format_rational(&gd.domain.hi)
    ))?;
    env.say(format!("{} cells, breakpoints:", trace.dual.num_cells()))?;
    for b in trace.dual.breakpoints() {
        env.say(format!("  {b}"))?;
    }
    env.say("cells (approximate ends) and cost:")?;
    for line in dual_lines(&trace.dual) {
        env.say(line)?;
    }
    env.say(format!(
        "degree bound violations: {}, cells {} within envelope {}",
        trace.stats.degree_violations,
        trace.stats.final_cells,
        trace.stats.piece_envelope()
    ))?;
    env.emit_json("trace.json", &doc)
}

fn cmd_tune(env: &mut Env, a: &SampleArgs) -> Result<()> {
    let gd = env.cfg.gd()?;
    let sample = resolve_sample(&env.cfg, &a.instances)?;
    let erm = tune_param(&env.exec, &sample, &gd, |inst| ParamBinding::StepSize { x0: inst.x0_or_zero() })?;
    env.say(erm_line(&erm))?;
    let doc = json!({ "binding": "stepsize", "gd": gd_json(&gd), "erm": erm_json(&erm) });
    env.emit_json("tune.json", &doc)
}

fn cmd_init_scale(env: &mut Env, a: &SampleArgs) -> Result<()> {
    let gd = env.cfg.gd()?;
    let sample = resolve_sample(&env.cfg, &a.instances)?;
    let eta = env.cfg.init_eta()?;
    let direction = env.cfg.init_direction();
    let erm = tune_param(&env.exec, &sample, &gd, |inst| ParamBinding::InitScale {
        direction: direction.clone().unwrap_or_else(|| inst.x0_or_zero()),
        eta: eta.clone(),
    })?;
    env.say(erm_line(&erm))?;
    let doc = json!({ "binding": "init_scale", "eta": rat(&eta), "gd": gd_json(&gd), "erm": erm_json(&erm) });
    env.emit_json("init_scale.json", &doc)
}

fn cmd_init_coord(env: &mut Env, a: &InitCoordArgs) -> Result<()> {
    let gd = env.cfg.gd()?;
    let sample = resolve_sample(&env.cfg, &a.sample.instances)?;
    let eta = env.cfg.init_eta()?;
    let index = a.index.or(env.cfg.init.index).unwrap_or(0);
    let base = env.cfg.init_base();
    let erm = tune_param(&env.exec, &sample, &gd, |inst| ParamBinding::InitCoord {
        index,
        base: base.clone().unwrap_or_else(|| inst.x0_or_zero()),
        eta: eta.clone(),
    })?;
    env.say(format!("coordinate {index}: {}", erm_line(&erm)))?;
    let doc = json!({
        "binding": "init_coord",
        "index": index,
        "eta": rat(&eta),
        "gd": gd_json(&gd),
        "erm": erm_json(&erm),
    });
    env.emit_json("init_coord.json", &doc)
}

fn cmd_schedule(env: &mut Env, a: &ScheduleArgs) -> Result<()> {
    let gd = env.cfg.gd()?;
    let sample = resolve_sample(&env.cfg, &a.sample.instances)?;
    let sweeps = a.sweeps.or(env.cfg.schedule.sweeps).unwrap_or(1);
    let init = env.cfg.init_schedule().unwrap_or_else(|| midpoint_schedule(&gd));
    let res = schedule_coordinate_descent(&env.exec, &sample, &gd, sweeps, &init)?;
    for u in &res.updates {
        env.say(format!(
            "sweep {} coord {}: mean {} -> {}{}",
            u.sweep,
            u.coord,
            format_rational(&u.before),
            format_rational(&u.after),
            if u.accepted { "" } else { " (kept)" }
        ))?;
    }
    let shown: Vec<String> = res.schedule.iter().map(format_rational).collect();
    env.say(format!("schedule: [{}]", shown.join(", ")))?;
    let doc = json!({
        "gd": gd_json(&gd),
        "sweeps": sweeps,
        "init": init.iter().map(rat).collect::<Vec<_>>(),
        "schedule": res.schedule.iter().map(rat).collect::<Vec<_>>(),
        "updates": res.updates.iter().map(|u| json!({
            "sweep": u.sweep,
            "coord": u.coord,
            "before": rat(&u.before),
            "after": rat(&u.after),
            "accepted": u.accepted,
            "erm": erm_json(&u.erm),
        })).collect::<Vec<_>>(),
    });
    env.emit_json("schedule.json", &doc)
}

fn cmd_momentum(env: &mut Env, a: &SampleArgs) -> Result<()> {
    let gd = env.cfg.gd()?;
    let sample = resolve_sample(&env.cfg, &a.instances)?;
    let grid = env.cfg.gamma_grid()?;
    let variant = env.cfg.momentum_variant()?;
    let res = momentum_grid_tune(&env.exec, &sample, &gd, &grid, variant)?;
    for (g, e) in &res.per_gamma {
        env.say(format!("gamma {}: {}", format_rational(g), erm_line(e)))?;
    }
    env.say(format!(
        "best gamma {} with step size {} and mean cost {}",
        format_rational(&res.gamma),
        format_rational(&res.best.eta_hat),
        format_rational(&res.best.train_mean)
    ))?;
    let doc = json!({
        "gd": gd_json(&gd),
        "variant": format!("{variant:?}"),
        "gamma": rat(&res.gamma),
        "best": erm_json(&res.best),
        "per_gamma": res.per_gamma.iter().map(|(g, e)| json!({ "gamma": rat(g), "erm": erm_json(e) })).collect::<Vec<_>>(),
    });
    env.emit_json("momentum.json", &doc)
}

fn cmd_validate(env: &mut Env, a: &InstanceArg) -> Result<()> {
    let gd = env.cfg.gd()?;
    let inst = load_instance(&a.instance)?;
    let fv_spec = inst
        .validation
        .as_ref()
        .ok_or_else(|| CliError::Config(format!("instance {} has no validation objective", inst.label)))?;
    let v = inst
        .objective
        .objective()
        .and_then(|f| trace_validation(&f, &fv_spec.objective()?, &inst.x0_or_zero(), &gd))
        .map_err(|e| e.in_instance(&inst.label))?;
    let best = pwpoly_min(&v.values);
    env.say(format!("{}: validation dual with {} cells", inst.label, v.values.num_cells()))?;
    for k in 0..v.values.num_cells() {
        let (lo, hi) = v.values.cell(k);
        env.say(format!("  ({:.9}, {:.9})  {}", lo.to_f64(), hi.to_f64(), v.values.pieces()[k]))?;
    }
    let value = match best.value.exact() {
        Some(q) => format_rational(q),
        None => format!("in [{}, {}]", format_rational(&best.value.lo), format_rational(&best.value.hi)),
    };
    env.say(format!(
        "minimum {} (~{}) at {} in cell {}",
        value,
        approx(&best.value.lo),
        best.location,
        best.cell_index
    ))?;
    let doc = json!({
        "instance": inst.label,
        "gd": gd_json(&gd),
        "values": pwpoly_to_json(&v.values),
        "cost": pwconst_to_json(&v.cost),
        "min": {
            "location": algebraic_to_json(&best.location),
            "cell": best.cell_index,
            "value": [rat(&best.value.lo), rat(&best.value.hi)],
        },
    });
    env.emit_json("validate.json", &doc)
}

fn cmd_experiment(env: &mut Env) -> Result<()> {
    let gd = env.cfg.gd()?;
    let e = &env.cfg.experiment;
    let cfg = ExperimentConfig {
        dist: env.cfg.distribution()?,
        m_schedule: e
            .m_schedule
            .clone()
            .ok_or_else(|| CliError::Config("missing experiment.m_schedule (or --m-schedule)".into()))?,
        trials: e.trials.ok_or_else(|| CliError::Config("missing experiment.trials (or --trials)".into()))?,
        gd,
        test_size: e.test_size,
        seed: env.cfg.seed(),
    };
    let report = uniform_convergence_experiment(&cfg, &env.exec)?;
    let csv = write_csv(&report)?;
    let meta = sidecar(&report);
    if env.out_dir().is_none() {
        return env.stdout.write_all(&csv).map_err(|e| CliError::io(Path::new("<stdout>"), e));
    }
    env.write_file("experiment.csv", &csv)?;
    env.emit_json("experiment.json", &meta)?;
    let medians = report.median_sup_gap();
    for (m, g) in &medians {
        env.say(format!("m = {m}: median sup gap {g:.6}"))?;
    }
    let pts: Vec<(f64, f64)> = medians.iter().map(|&(m, g)| (m as f64, g)).collect();
    if let Some(s) = loglog_slope(&pts) {
        env.say(format!("log-log slope {s:.4}"))?;
    }
    Ok(())
}

fn stepsize_duals(env: &Env, sample: &[Instance], gd: &GdConfig) -> Result<Vec<DualCost>> {
    env.exec
        .map(sample.len(), |k| {
            let inst = &sample[k];
            instance_dual(inst, &ParamBinding::StepSize { x0: inst.x0_or_zero() }, gd)
        })
        .into_iter()
        .map(|r| r.map_err(CliError::from))
        .collect()
}

fn cmd_pdim(env: &mut Env, a: &PdimArgs) -> Result<()> {
    let gd = env.cfg.gd()?;
    let sample = resolve_sample(&env.cfg, &a.sample.instances)?;
    let m_max = a.m_max.or(env.cfg.pdim.m_max).unwrap_or(PDIM_CAP.min(sample.len()));
    let duals = stepsize_duals(env, &sample, &gd)?;
    let pdim = empirical_pdim_lower_bound(&duals, m_max)?;
    env.say(format!(
        "pseudo-dimension lower bound {pdim} over {} instances (m_max = {m_max})",
        sample.len()
    ))?;
    let doc = json!({ "gd": gd_json(&gd), "instances": sample.len(), "m_max": m_max, "pdim_lower_bound": pdim });
    env.emit_json("pdim.json", &doc)
}

fn need(v: Option<f64>, flag: &str) -> Result<f64> {
    v.ok_or_else(|| CliError::Config(format!("this regime needs --{flag}")))
}

fn bound_query(a: &BoundsArgs, h: Option<u32>) -> Result<BoundQuery> {
    let h = || h.map(f64::from).ok_or_else(|| CliError::Config("this regime needs --H".into()));
    let row = || -> Result<PdimRow> {
        Ok(match a.row {
            RowKind::Polynomial => PdimRow::Polynomial {
                h: h()?,
                delta: need(a.delta, "delta")?,
            },
            RowKind::PiecewisePoly => PdimRow::PiecewisePoly {
                h: h()?,
                p: need(a.p, "p")?,
                d: need(a.d, "d")?,
                delta: need(a.delta, "delta")?,
            },
            RowKind::Pfaffian => PdimRow::Pfaffian {
                h: h()?,
                q: need(a.q, "q")?,
                d: need(a.d, "d")?,
                delta: need(a.delta, "delta")?,
                m: need(a.m, "m")?,
            },
            RowKind::Schedule => PdimRow::Schedule {
                h: h()?,
                p: need(a.p, "p")?,
                d: need(a.d, "d")?,
                delta: need(a.delta, "delta")?,
            },
            RowKind::InitVector => PdimRow::InitVector {
                h: h()?,
                p: need(a.p, "p")?,
                d: need(a.d, "d")?,
                delta: need(a.delta, "delta")?,
            },
            RowKind::Validation => PdimRow::Validation {
                h: h()?,
                p: need(a.p, "p")?,
                d: need(a.d, "d")?,
                delta: need(a.delta, "delta")?,
                delta_v: need(a.delta_v, "delta-v")?,
                p_v: need(a.p_v, "p-v")?,
            },
        })
    };
    Ok(match a.regime {
        Regime::Pdim => BoundQuery::Pdim(row()?),
        Regime::Sample => match a.pdim {
            Some(pdim) => BoundQuery::SampleFromPdim {
                h: h()?,
                eps: need(a.eps, "eps")?,
                delta: need(a.fail_prob, "fail-prob")?,
                pdim,
            },
            None => BoundQuery::Sample {
                row: row()?,
                eps: need(a.eps, "eps")?,
                delta: need(a.fail_prob, "fail-prob")?,
            },
        },
        Regime::Warren => BoundQuery::Warren {
            degree: need(a.degree, "degree")?,
            s: need(a.s, "s")?,
            n: need(a.n, "n")?,
        },
        Regime::PiecewiseConstant => BoundQuery::PiecewiseConstant {
            pieces: need(a.pieces, "pieces")?,
        },
        Regime::GoldbergJerrum => BoundQuery::GoldbergJerrum {
            n: need(a.n, "n")?,
            degree: need(a.degree, "degree")?,
            predicates: need(a.predicates, "predicates")?,
        },
        Regime::Khovanskii => BoundQuery::Khovanskii {
            d: need(a.d, "d")?,
            q: need(a.q, "q")?,
            delta: need(a.delta, "delta")?,
            m: need(a.m, "m")?,
        },
        Regime::PolyPieces => BoundQuery::PolyPieces {
            h: h()?,
            delta: need(a.delta, "delta")?,
        },
        Regime::PwpolyPieces => BoundQuery::PwPolyPieces {
            h: h()?,
            p: need(a.p, "p")?,
            d: need(a.d, "d")?,
            delta: need(a.delta, "delta")?,
        },
        Regime::ValidationPieces => BoundQuery::ValidationPieces {
            h: h()?,
            p: need(a.p, "p")?,
            d: need(a.d, "d")?,
            delta: need(a.delta, "delta")?,
            p_v: need(a.p_v, "p-v")?,
        },
        Regime::PfaffianIntervals => BoundQuery::PfaffianIntervals {
            h: h()?,
            q: need(a.q, "q")?,
            d: need(a.d, "d")?,
            delta: need(a.delta, "delta")?,
            m: need(a.m, "m")?,
        },
    })
}

/// Plain decimal while it fits, `m.mmmmmme+N` from the log otherwise.
pub fn format_bound(v: &BoundValue) -> String {
    let l10 = v.log10();
    if l10.is_finite() && l10 < 15.0 {
        format!("{:.6}", v.value())
    } else if l10.is_finite() {
        let exp = l10.floor();
        format!("{:.6}e{}", 10f64.powf(l10 - exp), exp as i64)
    } else {
        format!("{}", v.value())
    }
}

fn cmd_bounds(env: &mut Env, a: &BoundsArgs) -> Result<()> {
    let q = bound_query(a, env.cfg.gd.h)?;
    let v = bounds_calculator(&q)?;
    let shown = format_bound(&v);
    env.say(format!("{}  ≈ {shown}  [{}]", v.formula, v.label))?;
    let doc = json!({
        "query": format!("{q:?}"),
        "formula": v.formula,
        "ln_value": v.ln_value,
        "value": shown,
        "label": v.label,
    });
    env.emit_json("bounds.json", &doc)
}

/// Grid points of `num` at least `sep` away from every exact breakpoint
/// whose cost differs from the exact dual.
pub fn oracle_mismatches(exact: &DualCost, num: &NumericDual, sep: f64) -> Vec<(f64, u32, u32)> {
    let bps: Vec<f64> = exact.breakpoints().iter().map(|b| b.to_f64()).collect();
    num.params
        .iter()
        .zip(&num.costs)
        .filter(|(t, _)| {
            let k = bps.partition_point(|b| b < t);
            let near = |j: usize| bps.get(j).is_some_and(|b| (b - **t).abs() <= sep);
            !(near(k) || (k > 0 && near(k - 1)))
        })
        .filter_map(|(&t, &c)| {
            let q = Rational::from_float(t).expect("finite grid point");
            let e = *exact.eval(&q);
            (e != c).then_some((t, e, c))
        })
        .collect()
}

fn cmd_oracle_check(env: &mut Env, a: &OracleArgs) -> Result<()> {
    let gd = env.cfg.gd()?;
    let sample = match a.seeds {
        Some(n) => {
            let dist = env.cfg.distribution()?;
            let base = env.cfg.seed();
            (0..n)
                .map(|s| {
                    let mut inst = sample_instance(&dist, derive_seed(base, &[s]), 0)?;
                    inst.label = format!("{}@seed{}", dist.family.name(), base + s);
                    Ok(inst)
                })
                .collect::<gdtune_core::Result<Vec<_>>>()?
        }
        None => resolve_sample(&env.cfg, &a.sample.instances)?,
    };
    let (grid, refine, sep) = (env.cfg.grid(), env.cfg.refine(), env.cfg.separation());
    let results = env.exec.map(sample.len(), |k| -> gdtune_core::Result<_> {
        let inst = &sample[k];
        let binding = ParamBinding::StepSize { x0: inst.x0_or_zero() };
        let run = || {
            let dual = instance_dual(inst, &binding, &gd)?;
            let oracle = inst.objective.oracle()?;
            let num = numeric_dual(oracle.as_ref(), &binding, &gd, grid, refine)?;
            Ok((dual.num_cells(), oracle_mismatches(&dual, &num, sep)))
        };
        run().map_err(|e: gdtune_core::Error| e.in_instance(&inst.label))
    });
    let mut total = 0;
    let mut rows = Vec::new();
    for (inst, r) in sample.iter().zip(results) {
        let (cells, bad) = r?;
        env.say(format!("{}: {cells} cells, {} mismatches", inst.label, bad.len()))?;
        for (t, e, c) in bad.iter().take(5) {
            env.say(format!("  t = {t}: exact {e}, numeric {c}"))?;
        }
        total += bad.len();
        rows.push(json!({
            "instance": inst.label,
            "cells": cells,
            "mismatches": bad.iter().map(|(t, e, c)| json!([t, e, c])).collect::<Vec<_>>(),
        }));
    }
    env.say(format!("{} instances, grid {grid}: {total} mismatches", sample.len()))?;
    let doc = json!({
        "gd": gd_json(&gd),
        "grid": grid,
        "separation": sep,
        "instances": rows,
        "mismatches": total,
    });
    env.emit_json("oracle_check.json", &doc)?;
    if total > 0 {
        return Err(CliError::Check(format!("{total} oracle mismatches")));
    }
    Ok(())
}

fn step_vertices<V: Clone + PartialEq>(f: &PwConst<V>, y: impl Fn(&V) -> f64) -> Vec<(f64, f64)> {
    let mut pts = Vec::with_capacity(2 * f.num_cells());
    for k in 0..f.num_cells() {
        let (a, b) = f.cell(k);
        let v = y(&f.values()[k]);
        pts.push((a.to_f64(), v));
        pts.push((b.to_f64(), v));
    }
    pts
}

fn cmd_plotdata(env: &mut Env, a: &PlotArgs) -> Result<()> {
    let text = std::fs::read_to_string(&a.input).map_err(|e| CliError::io(&a.input, e))?;
    let points = a.points.or(env.cfg.plot.points).unwrap_or(50).max(2);
    let pts = match parse_piecewise(&text)? {
        Piecewise::Cost(f) => step_vertices(&f, |v| f64::from(*v)),
        Piecewise::Mean(f) => step_vertices(&f, to_f64),
        Piecewise::Poly(f) => {
            let mut pts = Vec::new();
            for k in 0..f.num_cells() {
                let (lo, hi) = f.cell(k);
                let (lo, hi) = (lo.to_f64(), hi.to_f64());
                for j in 0..points {
                    let t = lo + (hi - lo) * j as f64 / (points - 1) as f64;
                    pts.push((t, f.pieces()[k].eval_f64(t)));
                }
            }
            pts
        }
    };
    let mut body = String::new();
    for (x, y) in pts {
        body.push_str(&format!("{x} {y}\n"));
    }
    if !env.write_file("plot.dat", body.as_bytes())? {
        env.stdout
            .write_all(body.as_bytes())
            .map_err(|e| CliError::io(Path::new("<stdout>"), e))?;
    }
    Ok(())
}
