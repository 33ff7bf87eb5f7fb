//! Hyperparameter selection over samples of instances.
//!
//! Everything here works on exact dual functions: empirical means are
//! rational step functions and minimizers are certified interior points of
//! their cells. The one floating-point corner is [`bounds_calculator`],
//! which evaluates asymptotic formulas with all constants set to one.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::gdtrace::{
    exact_cost_at, trace_param, DualCost, GdConfig, MomentumVariant, ParamBinding, PwPolyObjective,
};
use crate::instances::{sample_instance, Instance, InstanceDistribution};
use crate::piecewise::{pw_sup_diff, pw_zip, pwconst_argmin, pwconst_mean, PwConst};
use crate::rational::{int, Rational};
use crate::realroots::AlgebraicNumber;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ErmResult {
    /// Certified interior point of the leftmost minimizing cell.
    pub eta_hat: Rational,
    pub train_mean: Rational,
    pub cell: (AlgebraicNumber, AlgebraicNumber),
    pub m: usize,
    /// Breakpoints of the canonical mean dual.
    pub breakpoints: usize,
    pub mean: PwConst<Rational>,
}

/// Exact empirical risk minimization over a common parameter domain.
pub fn erm_stepsize(duals: &[DualCost]) -> Result<ErmResult> {
    if duals.is_empty() {
        return Err(Error::Empty("dual list"));
    }
    let mean = pwconst_mean(duals)?;
    let best = pwconst_argmin(&mean);
    Ok(ErmResult {
        eta_hat: best.eta_hat,
        train_mean: best.value,
        cell: best.cell,
        m: duals.len(),
        breakpoints: mean.breakpoints().len(),
        mean,
    })
}

/// Runs independent jobs; results come back in index order so that callers
/// stay deterministic whatever the schedule.
pub trait Executor: Sync {
    fn map<R, F>(&self, n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send;

    /// Milliseconds on some monotone clock, when timing is wanted.
    fn now_ms(&self) -> Option<f64> {
        None
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map<R, F>(&self, n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        (0..n).map(f).collect()
    }
}

/// SplitMix64 finalizer over a running state.
pub fn derive_seed(seed: u64, parts: &[u64]) -> u64 {
    let mut z = seed;
    for &p in parts {
        z = z.wrapping_add(p.wrapping_add(0x9e37_79b9_7f4a_7c15));
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^= z >> 31;
    }
    z
}

fn stepsize_binding(inst: &Instance) -> ParamBinding {
    ParamBinding::StepSize { x0: inst.x0_or_zero() }
}

/// Dual of one instance under `binding`, errors tagged with its label.
pub fn instance_dual(inst: &Instance, binding: &ParamBinding, cfg: &GdConfig) -> Result<DualCost> {
    let run = || -> Result<DualCost> {
        let f = inst.objective.objective()?;
        Ok(trace_param(&f, binding, cfg)?.dual)
    };
    run().map_err(|e| e.in_instance(&inst.label))
}

/// Duals of `count` instances drawn with sample seed `seed`. Instances whose
/// trace hits a budget or a degenerate trajectory are replaced by further
/// draws, in index order; at most `count` replacements are made.
pub fn draw_duals<E: Executor>(
    exec: &E,
    dist: &InstanceDistribution,
    seed: u64,
    count: usize,
    cfg: &GdConfig,
) -> Result<(Vec<DualCost>, usize)> {
    let attempt = |k: u64| -> Result<DualCost> {
        let inst = sample_instance(dist, seed, k)?;
        instance_dual(&inst, &stepsize_binding(&inst), cfg)
    };
    let mut results: Vec<Result<DualCost>> = exec.map(count, |k| attempt(k as u64));
    let mut next = count as u64;
    let mut substitutions = 0;
    for slot in results.iter_mut() {
        while let Err(e) = slot {
            if !e.is_resamplable() || substitutions >= count {
                return Err(e.clone());
            }
            substitutions += 1;
            *slot = attempt(next);
            next += 1;
        }
    }
    let duals = results.into_iter().collect::<Result<Vec<_>>>()?;
    Ok((duals, substitutions))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExperimentConfig {
    pub dist: InstanceDistribution,
    pub m_schedule: Vec<usize>,
    pub trials: usize,
    pub gd: GdConfig,
    /// Held-out sample size; `10 * max(m_schedule)` when absent.
    pub test_size: Option<usize>,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn test_size(&self) -> usize {
        self.test_size
            .unwrap_or_else(|| 10 * self.m_schedule.iter().copied().max().unwrap_or(1))
    }

    pub fn validate(&self) -> Result<()> {
        self.gd.validate()?;
        self.dist.validate()?;
        if self.m_schedule.is_empty() || self.m_schedule.contains(&0) {
            return Err(Error::InvalidConfig("m schedule needs positive sizes".into()));
        }
        if self.trials == 0 || self.test_size() == 0 {
            return Err(Error::InvalidConfig("trials and test size must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentRow {
    pub trial: usize,
    pub m: usize,
    pub eta_hat: Rational,
    pub train_mean: Rational,
    /// Held-out mean at `eta_hat`.
    pub test_mean: Rational,
    /// Exact sup over the domain of |train mean - test mean|.
    pub sup_gap: Rational,
    pub substitutions: usize,
    pub wall_ms: Option<f64>,
}

impl ExperimentRow {
    pub fn gap_at_eta(&self) -> Rational {
        (&self.train_mean - &self.test_mean).abs()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub test_size: usize,
    pub test_seed: u64,
    pub test_substitutions: usize,
    pub test_breakpoints: usize,
    pub rows: Vec<ExperimentRow>,
}

impl ExperimentReport {
    /// Median sup-gap per sample size, in schedule order.
    pub fn median_sup_gap(&self) -> Vec<(usize, f64)> {
        self.config
            .m_schedule
            .iter()
            .map(|&m| {
                let mut gaps: Vec<f64> = self
                    .rows
                    .iter()
                    .filter(|r| r.m == m)
                    .map(|r| crate::rational::to_f64(&r.sup_gap))
                    .collect();
                gaps.sort_by(f64::total_cmp);
                let n = gaps.len();
                let med = if n % 2 == 1 {
                    gaps[n / 2]
                } else {
                    0.5 * (gaps[n / 2 - 1] + gaps[n / 2])
                };
                (m, med)
            })
            .collect()
    }
}

/// Least-squares slope of `ln y` against `ln x`; pairs with a non-positive
/// coordinate are skipped.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|&(x, y)| (libm::log(x), libm::log(y)))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Train/test gap of exact ERM across sample sizes. One held-out sample of
/// [`ExperimentConfig::test_size`] instances proxies the expectation; every
/// `(trial, m)` pair draws its own training sample.
pub fn uniform_convergence_experiment<E: Executor>(cfg: &ExperimentConfig, exec: &E) -> Result<ExperimentReport> {
    cfg.validate()?;
    let test_size = cfg.test_size();
    let test_seed = derive_seed(cfg.seed, &[u64::MAX]);
    let (test_duals, test_substitutions) = draw_duals(exec, &cfg.dist, test_seed, test_size, &cfg.gd)?;
    let test_mean = pwconst_mean(&test_duals)?;
    drop(test_duals);

    let mut rows = Vec::with_capacity(cfg.trials * cfg.m_schedule.len());
    for trial in 0..cfg.trials {
        for &m in &cfg.m_schedule {
            let start = exec.now_ms();
            let seed = derive_seed(cfg.seed, &[trial as u64, m as u64]);
            let (duals, substitutions) = draw_duals(exec, &cfg.dist, seed, m, &cfg.gd)?;
            let erm = erm_stepsize(&duals)?;
            let sup_gap = pw_sup_diff(&erm.mean, &test_mean)?;
            let wall_ms = match (start, exec.now_ms()) {
                (Some(a), Some(b)) => Some(b - a),
                _ => None,
            };
            rows.push(ExperimentRow {
                trial,
                m,
                test_mean: test_mean.eval(&erm.eta_hat).clone(),
                eta_hat: erm.eta_hat,
                train_mean: erm.train_mean,
                sup_gap,
                substitutions,
                wall_ms,
            });
        }
    }
    Ok(ExperimentReport {
        config: cfg.clone(),
        test_size,
        test_seed,
        test_substitutions,
        test_breakpoints: test_mean.breakpoints().len(),
        rows,
    })
}

/// Exhaustive search cap for [`empirical_pdim_lower_bound`].
pub const PDIM_CAP: usize = 3;

fn witnesses(dual: &DualCost) -> Vec<Rational> {
    let mut vals: Vec<u32> = dual.values().to_vec();
    vals.sort_unstable();
    vals.dedup();
    vals.windows(2)
        .map(|w| Rational::new((w[0] + w[1]).into(), 2.into()))
        .collect()
}

fn shattered(duals: &[&DualCost]) -> Result<bool> {
    let m = duals.len();
    let wit: Vec<Vec<Rational>> = duals.iter().map(|d| witnesses(d)).collect();
    if wit.iter().any(Vec::is_empty) {
        return Ok(false);
    }
    // Value vectors on the cells of the common refinement.
    let cells = pw_zip(duals, |v| v.iter().map(|&&c| c).collect::<Vec<u32>>())?;
    let mut choice = vec![0usize; m];
    loop {
        let mut seen = vec![false; 1 << m];
        for vals in cells.values() {
            let mut pattern = 0usize;
            for (i, &c) in vals.iter().enumerate() {
                if Rational::from_integer(c.into()) > wit[i][choice[i]] {
                    pattern |= 1 << i;
                }
            }
            seen[pattern] = true;
        }
        if seen.iter().all(|&s| s) {
            return Ok(true);
        }
        // Next witness combination.
        let mut i = 0;
        loop {
            if i == m {
                return Ok(false);
            }
            choice[i] += 1;
            if choice[i] < wit[i].len() {
                break;
            }
            choice[i] = 0;
            i += 1;
        }
    }
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Largest `m <= m_max` such that some `m` of the instances are
/// pseudo-shattered by the costs `t -> dual_i(t)`, witnesses taken halfway
/// between consecutive values of each dual.
pub fn empirical_pdim_lower_bound(duals: &[DualCost], m_max: usize) -> Result<usize> {
    if m_max > PDIM_CAP {
        return Err(Error::CapExceeded {
            requested: m_max,
            cap: PDIM_CAP,
        });
    }
    let mut best = 0;
    for m in 1..=m_max.min(duals.len()) {
        let mut found = false;
        for subset in subsets(duals.len(), m) {
            let chosen: Vec<&DualCost> = subset.iter().map(|&i| &duals[i]).collect();
            if shattered(&chosen)? {
                found = true;
                break;
            }
        }
        if !found {
            break;
        }
        best = m;
    }
    Ok(best)
}

/// Pseudo-dimension rows of the sample complexity summary, in shape form.
#[derive(Clone, Debug, PartialEq)]
pub enum PdimRow {
    /// Polynomial objectives: `H ln Delta`.
    Polynomial { h: f64, delta: f64 },
    /// Piecewise polynomial step size, momentum and init scale: `H ln(p d Delta)`.
    PiecewisePoly { h: f64, p: f64, d: f64, delta: f64 },
    /// `q^2 d^2 H^2 + q d H ln(Delta + M)`.
    Pfaffian { h: f64, q: f64, d: f64, delta: f64, m: f64 },
    /// Whole schedule: `H^2 ln(p d Delta)`.
    Schedule { h: f64, p: f64, d: f64, delta: f64 },
    /// Initial vector: `d H ln(p d Delta)`.
    InitVector { h: f64, p: f64, d: f64, delta: f64 },
    /// Final-iterate validation loss: `H ln(p d Delta) + ln(Delta_v p_v)`.
    Validation {
        h: f64,
        p: f64,
        d: f64,
        delta: f64,
        delta_v: f64,
        p_v: f64,
    },
}

impl PdimRow {
    pub fn h(&self) -> f64 {
        match *self {
            PdimRow::Polynomial { h, .. }
            | PdimRow::PiecewisePoly { h, .. }
            | PdimRow::Pfaffian { h, .. }
            | PdimRow::Schedule { h, .. }
            | PdimRow::InitVector { h, .. }
            | PdimRow::Validation { h, .. } => h,
        }
    }

    fn value(&self) -> f64 {
        use libm::log;
        match *self {
            PdimRow::Polynomial { h, delta } => h * log(delta),
            PdimRow::PiecewisePoly { h, p, d, delta } => h * log(p * d * delta),
            PdimRow::Pfaffian { h, q, d, delta, m } => q * q * d * d * h * h + q * d * h * log(delta + m),
            PdimRow::Schedule { h, p, d, delta } => h * h * log(p * d * delta),
            PdimRow::InitVector { h, p, d, delta } => d * h * log(p * d * delta),
            PdimRow::Validation {
                h,
                p,
                d,
                delta,
                delta_v,
                p_v,
            } => h * log(p * d * delta) + log(delta_v * p_v),
        }
    }

    fn params(&self) -> Vec<f64> {
        match *self {
            PdimRow::Polynomial { h, delta } => vec![h, delta],
            PdimRow::PiecewisePoly { h, p, d, delta }
            | PdimRow::Schedule { h, p, d, delta }
            | PdimRow::InitVector { h, p, d, delta } => vec![h, p, d, delta],
            PdimRow::Pfaffian { h, q, d, delta, m } => vec![h, q, d, delta, m],
            PdimRow::Validation {
                h,
                p,
                d,
                delta,
                delta_v,
                p_v,
            } => vec![h, p, d, delta, delta_v, p_v],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum BoundQuery {
    Pdim(PdimRow),
    /// `(H / eps)^2 (Pdim + ln(1/delta))` with the row's Pdim shape.
    Sample { row: PdimRow, eps: f64, delta: f64 },
    /// Same with an explicit Pdim value.
    SampleFromPdim { h: f64, eps: f64, delta: f64, pdim: f64 },
    /// Sign-pattern count `(4 e degree s / n)^n`.
    Warren { degree: f64, s: f64, n: f64 },
    /// Pdim `ln N` of a class with `N`-piece duals.
    PiecewiseConstant { pieces: f64 },
    /// Pdim `n ln(degree * predicates)` of a bounded-complexity algorithm.
    GoldbergJerrum { n: f64, degree: f64, predicates: f64 },
    /// Component count `2^(dq(dq-1)/2) Delta^d [d^2 (Delta + M)]^(dq)`.
    Khovanskii { d: f64, q: f64, delta: f64, m: f64 },
    /// Predicted dual pieces `Delta^H`.
    PolyPieces { h: f64, delta: f64 },
    /// Predicted dual pieces `(2 p d Delta)^H`.
    PwPolyPieces { h: f64, p: f64, d: f64, delta: f64 },
    /// Predicted validation pieces `p_v + (2 p d Delta)^H`.
    ValidationPieces { h: f64, p: f64, d: f64, delta: f64, p_v: f64 },
    /// Interval count `sum_i 2^((q d i)^2) (Delta + M)^(q d i)` for a
    /// Pfaffian step-size dual over `H` rounds.
    PfaffianIntervals { h: f64, q: f64, d: f64, delta: f64, m: f64 },
}

pub const SHAPE_LABEL: &str = "shape value, not a rigorous constant";

#[derive(Clone, Debug, PartialEq)]
pub struct BoundValue {
    /// `ln` of the value; finite even when the value overflows `f64`.
    pub ln_value: f64,
    pub formula: &'static str,
    pub label: &'static str,
}

impl BoundValue {
    pub fn value(&self) -> f64 {
        libm::exp(self.ln_value)
    }

    pub fn log10(&self) -> f64 {
        self.ln_value / core::f64::consts::LN_10
    }
}

fn ln_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + libm::log(xs.iter().map(|x| libm::exp(x - m)).sum::<f64>())
}

/// Log of a value that may be zero or negative (then `-inf` / NaN).
fn ln(x: f64) -> f64 {
    libm::log(x)
}

impl BoundQuery {
    fn params(&self) -> Vec<f64> {
        match self {
            BoundQuery::Pdim(r) => r.params(),
            BoundQuery::Sample { row, eps, delta } => {
                let mut v = row.params();
                v.extend([*eps, *delta]);
                v
            }
            BoundQuery::SampleFromPdim { h, eps, delta, .. } => vec![*h, *eps, *delta],
            BoundQuery::Warren { degree, s, n } => vec![*degree, *s, *n],
            BoundQuery::PiecewiseConstant { pieces } => vec![*pieces],
            BoundQuery::GoldbergJerrum { n, degree, predicates } => vec![*n, *degree, *predicates],
            BoundQuery::Khovanskii { d, q, delta, m } => vec![*d, *q, *delta, *m],
            BoundQuery::PolyPieces { h, delta } => vec![*h, *delta],
            BoundQuery::PwPolyPieces { h, p, d, delta } => vec![*h, *p, *d, *delta],
            BoundQuery::ValidationPieces { h, p, d, delta, p_v } => vec![*h, *p, *d, *delta, *p_v],
            BoundQuery::PfaffianIntervals { h, q, d, delta, m } => vec![*h, *q, *d, *delta, *m],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.params().iter().all(|x| x.is_finite() && *x > 0.0);
        let ok = ok
            && match self {
                BoundQuery::Sample { delta, .. } => *delta < 1.0,
                BoundQuery::SampleFromPdim { delta, pdim, .. } => *delta < 1.0 && *pdim >= 0.0,
                _ => true,
            };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("bound parameters must be positive: {self:?}")))
        }
    }
}

/// Evaluates the formula behind `q` with every asymptotic constant set to 1.
pub fn bounds_calculator(q: &BoundQuery) -> Result<BoundValue> {
    q.validate()?;
    let (ln_value, formula) = match *q {
        BoundQuery::Pdim(ref row) => (ln(row.value()), "Pdim shape"),
        BoundQuery::Sample { ref row, eps, delta } => (
            2.0 * ln(row.h() / eps) + ln(row.value() + ln(1.0 / delta)),
            "(H/eps)^2 (Pdim + ln(1/delta))",
        ),
        BoundQuery::SampleFromPdim { h, eps, delta, pdim } => (
            2.0 * ln(h / eps) + ln(pdim + ln(1.0 / delta)),
            "(H/eps)^2 (Pdim + ln(1/delta))",
        ),
        BoundQuery::Warren { degree, s, n } => (
            n * ln(4.0 * core::f64::consts::E * degree * s / n),
            "(4 e degree s / n)^n",
        ),
        BoundQuery::PiecewiseConstant { pieces } => (ln(ln(pieces)), "ln N"),
        BoundQuery::GoldbergJerrum { n, degree, predicates } => {
            (ln(n * ln(degree * predicates)), "n ln(degree * predicates)")
        }
        BoundQuery::Khovanskii { d, q, delta, m } => (
            d * q * (d * q - 1.0) / 2.0 * core::f64::consts::LN_2 + d * ln(delta) + d * q * ln(d * d * (delta + m)),
            "2^(dq(dq-1)/2) Delta^d [d^2 (Delta + M)]^(dq)",
        ),
        BoundQuery::PolyPieces { h, delta } => (h * ln(delta), "Delta^H"),
        BoundQuery::PwPolyPieces { h, p, d, delta } => (h * ln(2.0 * p * d * delta), "(2 p d Delta)^H"),
        BoundQuery::ValidationPieces { h, p, d, delta, p_v } => (
            ln_sum_exp(&[ln(p_v), h * ln(2.0 * p * d * delta)]),
            "p_v + (2 p d Delta)^H",
        ),
        BoundQuery::PfaffianIntervals { h, q, d, delta, m } => {
            let terms: Vec<f64> = (1..=h.to_u64().unwrap_or(0).max(1))
                .map(|i| {
                    let k = q * d * i as f64;
                    k * k * core::f64::consts::LN_2 + k * ln(delta + m)
                })
                .collect();
            (ln_sum_exp(&terms), "sum_i 2^((q d i)^2) (Delta + M)^(q d i)")
        }
    };
    Ok(BoundValue {
        ln_value,
        formula,
        label: SHAPE_LABEL,
    })
}

/// Mean exact cost of `sample` at parameter `t`.
fn exact_mean(
    sample: &[(PwPolyObjective, ParamBinding)],
    cfg: &GdConfig,
    t: &Rational,
) -> Result<Rational> {
    let mut total = Rational::zero();
    for (f, b) in sample {
        total += Rational::from_integer(exact_cost_at(f, b, cfg, t)?.into());
    }
    Ok(total / int(sample.len() as i64))
}

/// ERM over one free parameter: each instance traced under the binding that
/// `bind` builds for it.
pub fn tune_param<E, B>(exec: &E, sample: &[Instance], cfg: &GdConfig, bind: B) -> Result<ErmResult>
where
    E: Executor,
    B: Fn(&Instance) -> ParamBinding + Sync + Send,
{
    if sample.is_empty() {
        return Err(Error::Empty("instance sample"));
    }
    let duals = exec
        .map(sample.len(), |k| instance_dual(&sample[k], &bind(&sample[k]), cfg))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    erm_stepsize(&duals)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoordinateUpdate {
    pub sweep: usize,
    /// Zero-based schedule coordinate.
    pub coord: usize,
    /// Exact empirical mean cost before the update.
    pub before: Rational,
    /// Exact empirical mean cost after the update.
    pub after: Rational,
    pub accepted: bool,
    pub erm: ErmResult,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScheduleResult {
    pub schedule: Vec<Rational>,
    pub updates: Vec<CoordinateUpdate>,
}

/// Cyclic exact coordinate descent over the step-size schedule. A
/// coordinate moves to the ERM point only when that strictly lowers the
/// exact empirical mean cost, so the cost never increases.
pub fn schedule_coordinate_descent<E: Executor>(
    exec: &E,
    sample: &[Instance],
    cfg: &GdConfig,
    sweeps: usize,
    init_schedule: &[Rational],
) -> Result<ScheduleResult> {
    if sweeps == 0 {
        return Err(Error::InvalidConfig("at least one sweep is required".into()));
    }
    if init_schedule.len() != cfg.max_iters as usize {
        return Err(Error::InvalidConfig(format!(
            "schedule has {} entries, expected H = {}",
            init_schedule.len(),
            cfg.max_iters
        )));
    }
    if sample.is_empty() {
        return Err(Error::Empty("instance sample"));
    }
    let objectives = sample
        .iter()
        .map(|inst| inst.objective.objective().map_err(|e| e.in_instance(&inst.label)))
        .collect::<Result<Vec<_>>>()?;
    let mut schedule = init_schedule.to_vec();
    let mut updates = Vec::new();
    for sweep in 0..sweeps {
        for coord in 0..schedule.len() {
            let bind = |inst: &Instance| ParamBinding::ScheduleCoord {
                index: coord,
                x0: inst.x0_or_zero(),
                schedule: schedule.clone(),
            };
            let pairs: Vec<(PwPolyObjective, ParamBinding)> =
                objectives.iter().cloned().zip(sample.iter().map(bind)).collect();
            let before = exact_mean(&pairs, cfg, &schedule[coord])?;
            let erm = tune_param(exec, sample, cfg, bind)?;
            let accepted = erm.train_mean < before;
            if accepted {
                schedule[coord] = erm.eta_hat.clone();
            }
            let after = if accepted { erm.train_mean.clone() } else { before.clone() };
            assert!(after <= before, "coordinate update increased the empirical cost");
            updates.push(CoordinateUpdate {
                sweep,
                coord,
                before,
                after,
                accepted,
                erm,
            });
        }
    }
    Ok(ScheduleResult { schedule, updates })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MomentumResult {
    pub gamma: Rational,
    pub best: ErmResult,
    pub per_gamma: Vec<(Rational, ErmResult)>,
}

/// Exact ERM over the step size for each momentum value on the grid; the
/// first grid value with the smallest mean wins.
pub fn momentum_grid_tune<E: Executor>(
    exec: &E,
    sample: &[Instance],
    cfg: &GdConfig,
    gamma_grid: &[Rational],
    variant: MomentumVariant,
) -> Result<MomentumResult> {
    if gamma_grid.is_empty() {
        return Err(Error::Empty("momentum grid"));
    }
    if gamma_grid.iter().any(Signed::is_negative) {
        return Err(Error::InvalidConfig("momentum values must be non-negative".into()));
    }
    let mut per_gamma: Vec<(Rational, ErmResult)> = Vec::with_capacity(gamma_grid.len());
    for gamma in gamma_grid {
        let erm = tune_param(exec, sample, cfg, |inst| ParamBinding::MomentumEta {
            x0: inst.x0_or_zero(),
            gamma: gamma.clone(),
            variant,
        })?;
        per_gamma.push((gamma.clone(), erm));
    }
    let mut best = 0;
    for (k, (_, e)) in per_gamma.iter().enumerate() {
        if e.train_mean < per_gamma[best].1.train_mean {
            best = k;
        }
    }
    Ok(MomentumResult {
        gamma: per_gamma[best].0.clone(),
        best: per_gamma[best].1.clone(),
        per_gamma,
    })
}

/// Renders a rational as `num/den` for reports.
pub fn show(r: &Rational) -> String {
    crate::rational::format_rational(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    fn step(domain: (i64, i64), bps: &[i64], values: &[u32]) -> DualCost {
        PwConst::new(
            crate::rational::Interval::new(int(domain.0), int(domain.1)).unwrap(),
            bps.iter().map(|&b| AlgebraicNumber::from_rational(int(b))).collect(),
            values.to_vec(),
        )
        .unwrap()
    }

    #[test]
    fn constant_dual_erm() {
        let r = erm_stepsize(&[step((0, 2), &[], &[5])]).unwrap();
        assert_eq!(r.eta_hat, int(1));
        assert_eq!(r.train_mean, int(5));
    }

    #[test]
    fn symmetric_collapse() {
        let r = erm_stepsize(&[step((0, 2), &[1], &[2, 3]), step((0, 2), &[1], &[3, 2])]).unwrap();
        assert_eq!(r.train_mean, ratio(5, 2));
        assert_eq!(r.eta_hat, int(1));
        assert_eq!(r.breakpoints, 0);
    }

    #[test]
    fn empty_and_mismatched() {
        assert_eq!(erm_stepsize(&[]).unwrap_err(), Error::Empty("dual list"));
        let e = erm_stepsize(&[step((0, 2), &[], &[5]), step((0, 3), &[], &[5])]).unwrap_err();
        assert_eq!(e, Error::DomainMismatch);
    }

    #[test]
    fn pdim_small_cases() {
        let flat = [step((0, 4), &[], &[3]), step((0, 4), &[], &[5])];
        assert_eq!(empirical_pdim_lower_bound(&flat, 2).unwrap(), 0);
        let one = [step((0, 4), &[2], &[1, 3])];
        assert_eq!(empirical_pdim_lower_bound(&one, 3).unwrap(), 1);
        // Patterns 00, 01, 10, 11 across cells.
        let two = [step((0, 4), &[1, 3], &[1, 2, 1]), step((0, 4), &[2], &[1, 2])];
        assert_eq!(empirical_pdim_lower_bound(&two, 2).unwrap(), 2);
        assert_eq!(
            empirical_pdim_lower_bound(&two, 4).unwrap_err(),
            Error::CapExceeded { requested: 4, cap: 3 }
        );
    }

    #[test]
    fn warren_and_sample_bound() {
        let w = bounds_calculator(&BoundQuery::Warren {
            degree: 2.0,
            s: 3.0,
            n: 1.0,
        })
        .unwrap();
        assert!((w.value() - 24.0 * core::f64::consts::E).abs() < 1e-9);
        let s = bounds_calculator(&BoundQuery::Sample {
            row: PdimRow::Polynomial { h: 10.0, delta: 3.0 },
            eps: 0.1,
            delta: 0.01,
        })
        .unwrap();
        let expect = 1e4 * (10.0 * libm::log(3.0) + libm::log(100.0));
        assert!((s.value() - expect).abs() / expect < 1e-12);
        assert_eq!(s.label, SHAPE_LABEL);
        let p = bounds_calculator(&BoundQuery::PolyPieces { h: 5.0, delta: 1.0 }).unwrap();
        assert_eq!(p.value(), 1.0);
        assert!(bounds_calculator(&BoundQuery::Warren {
            degree: 0.0,
            s: 1.0,
            n: 1.0
        })
        .is_err());
    }

    #[test]
    fn loglog_slope_of_power_law() {
        let pts: Vec<(f64, f64)> = [8.0, 32.0, 128.0].iter().map(|&m| (m, 3.0 / libm::sqrt(m))).collect();
        assert!((loglog_slope(&pts).unwrap() + 0.5).abs() < 1e-12);
    }

    #[test]
    fn seeds_differ() {
        assert_ne!(derive_seed(1, &[0, 8]), derive_seed(1, &[8, 0]));
        assert_eq!(derive_seed(1, &[3]), derive_seed(1, &[3]));
    }
}
