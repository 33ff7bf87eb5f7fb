use alloc::collections::BTreeMap;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;


use super::objective::{PwPolyObjective, SignVector};
use super::{DualCost, GdConfig, MomentumVariant, ParamBinding};
use crate::error::{Error, Result};
use crate::piecewise::{interior_midpoint, PwConst, PwPoly};
use crate::polynomials::{IntPoly, MultiPoly, PowerCache, UniPoly};
use crate::rational::{pow2_neg, to_f64, Rational};
use crate::realroots::{isolate_int, AlgebraicNumber, ISOLATION_BITS};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TraceOptions {
    /// Keep the returned point of every cell (needed for validation duals).
    pub keep_final: bool,
    /// Also split the last round at its convergence roots, even though both
    /// sides cost `H`. Only affects [`Trace::raw`].
    pub resolve_last_round: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceStats {
    pub dim: usize,
    pub num_boundaries: usize,
    /// Degree `Delta` of the objective.
    pub delta: u32,
    pub max_iters: u32,
    pub init_binding: bool,
    /// Largest coordinate degree among active curves at the start of each
    /// round; entry 0 is round 1.
    pub round_max_degree: Vec<usize>,
    pub round_active_cells: Vec<usize>,
    /// Rounds whose curve degree exceeded [`TraceStats::degree_bound`].
    pub degree_violations: usize,
    pub raw_cells: usize,
    pub final_cells: usize,
}

impl TraceStats {
    /// `Delta^(i-2)` for step-size style parameters (constant at round 1),
    /// `Delta^(i-1)` when the parameter enters through the initial point.
    pub fn degree_bound(&self, round: u32) -> u128 {
        let delta = u128::from(self.delta);
        match (self.init_binding, round) {
            (true, i) => delta.saturating_pow(i - 1),
            (false, 1) => 0,
            (false, i) => delta.saturating_pow(i - 2),
        }
    }

    /// `(2 Delta)^(H+1)` without boundaries, `(4 p d Delta)^(H+1)` with.
    pub fn piece_envelope(&self) -> u128 {
        let delta = u128::from(self.delta);
        let base = if self.num_boundaries == 0 {
            2 * delta
        } else {
            4 * self.num_boundaries as u128 * self.dim as u128 * delta
        };
        base.saturating_pow(self.max_iters + 1)
    }

    pub fn within_envelope(&self) -> bool {
        (self.final_cells as u128) <= self.piece_envelope()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    /// Canonical dual cost.
    pub dual: DualCost,
    /// Settlement partition before merging equal neighbours.
    pub raw: DualCost,
    pub stats: TraceStats,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValidationTrace {
    /// Validation objective at the returned point.
    pub values: PwPoly,
    pub cost: DualCost,
    pub stats: TraceStats,
}

pub fn trace_stepsize(f: &PwPolyObjective, x0: &[Rational], cfg: &GdConfig) -> Result<Trace> {
    trace_param(f, &ParamBinding::StepSize { x0: x0.to_vec() }, cfg)
}

pub fn trace_param(f: &PwPolyObjective, binding: &ParamBinding, cfg: &GdConfig) -> Result<Trace> {
    trace_param_with(f, binding, cfg, TraceOptions::default())
}

pub fn trace_param_with(
    f: &PwPolyObjective,
    binding: &ParamBinding,
    cfg: &GdConfig,
    opts: TraceOptions,
) -> Result<Trace> {
    let (trace, _) = Engine::new(f, binding, cfg, opts)?.run()?;
    Ok(trace)
}

pub fn trace_validation(
    f: &PwPolyObjective,
    fv: &PwPolyObjective,
    x0: &[Rational],
    cfg: &GdConfig,
) -> Result<ValidationTrace> {
    trace_validation_param(f, fv, &ParamBinding::StepSize { x0: x0.to_vec() }, cfg)
}

/// Piecewise polynomial `t -> f_v(returned point)`: the iterate at
/// convergence, or `x_{H+1}` where the run never converged. Cells are further
/// split where the returned point crosses a boundary of `f_v`.
pub fn trace_validation_param(
    f: &PwPolyObjective,
    fv: &PwPolyObjective,
    binding: &ParamBinding,
    cfg: &GdConfig,
) -> Result<ValidationTrace> {
    if fv.dim() != f.dim() {
        return Err(Error::Dimension {
            expected: f.dim(),
            found: fv.dim(),
        });
    }
    let opts = TraceOptions {
        keep_final: true,
        resolve_last_round: false,
    };
    let mut engine = Engine::new(f, binding, cfg, opts)?;
    let (trace, finals) = engine.run()?;
    let mut bps = Vec::new();
    let mut pieces = Vec::new();
    let mut fv_pieces: BTreeMap<SignVector, MultiPoly> = BTreeMap::new();
    for (k, cell) in finals.iter().enumerate() {
        if k > 0 {
            bps.push(cell.lo.clone());
        }
        let comps = fv
            .boundaries()
            .iter()
            .map(|b| Ok(IntPoly::from_rational(&b.compose_uni(&cell.curve, &cfg.budget)?)))
            .collect::<Result<Vec<_>>>()?;
        let cuts = engine.split_points(&comps, &cell.lo, &cell.hi, cfg.max_iters)?;
        let bounds = with_ends(&cell.lo, cuts, &cell.hi);
        for (j, w) in bounds.windows(2).enumerate() {
            if j > 0 {
                bps.push(w[0].clone());
            }
            let m = interior_midpoint(&w[0], &w[1]);
            let signs = SignVector::new(comps.iter().map(|c| c.sign_at(&m) > 0).collect());
            if !fv_pieces.contains_key(&signs) {
                fv_pieces.insert(signs.clone(), fv.piece(&signs)?);
            }
            pieces.push(fv_pieces[&signs].compose_uni(&cell.curve, &cfg.budget)?);
        }
    }
    let values = PwPoly::from_raw_parts(cfg.domain.clone(), bps, pieces).canonical();
    Ok(ValidationTrace {
        values,
        cost: trace.dual,
        stats: trace.stats,
    })
}

fn with_ends(lo: &AlgebraicNumber, mid: Vec<AlgebraicNumber>, hi: &AlgebraicNumber) -> Vec<AlgebraicNumber> {
    let mut out = Vec::with_capacity(mid.len() + 2);
    out.push(lo.clone());
    out.extend(mid);
    out.push(hi.clone());
    out
}

struct Curve {
    x: Arc<Vec<UniPoly>>,
    y: Option<Vec<UniPoly>>,
}

enum State {
    Active(Arc<Curve>),
    Settled {
        cost: u32,
        last: Option<Arc<Vec<UniPoly>>>,
    },
}

struct Seg {
    lo: AlgebraicNumber,
    hi: AlgebraicNumber,
    state: State,
}

struct FinalCell {
    lo: AlgebraicNumber,
    hi: AlgebraicNumber,
    curve: Arc<Vec<UniPoly>>,
}

/// Gradient data for one (curve, sign vector) pair within a round.
struct Step {
    grad: Vec<UniPoly>,
    /// `|grad|^2 - theta^2`, sign-preserving integer form.
    norm: IntPoly,
    next: Option<Arc<Curve>>,
}

struct Engine<'a> {
    f: &'a PwPolyObjective,
    binding: &'a ParamBinding,
    cfg: &'a GdConfig,
    opts: TraceOptions,
    gradients: BTreeMap<SignVector, Arc<Vec<MultiPoly>>>,
    roots: BTreeMap<IntPoly, Arc<Vec<AlgebraicNumber>>>,
    width: Rational,
}

impl<'a> Engine<'a> {
    fn new(
        f: &'a PwPolyObjective,
        binding: &'a ParamBinding,
        cfg: &'a GdConfig,
        opts: TraceOptions,
    ) -> Result<Self> {
        binding.validate(f.dim(), cfg)?;
        Ok(Engine {
            f,
            binding,
            cfg,
            opts,
            gradients: BTreeMap::new(),
            roots: BTreeMap::new(),
            width: pow2_neg(ISOLATION_BITS),
        })
    }

    fn initial_curve(&self) -> Curve {
        let t = UniPoly::identity();
        let consts = |v: &[Rational]| v.iter().cloned().map(UniPoly::constant).collect::<Vec<_>>();
        let x = match self.binding {
            ParamBinding::StepSize { x0 }
            | ParamBinding::ScheduleCoord { x0, .. }
            | ParamBinding::MomentumEta { x0, .. } => consts(x0),
            ParamBinding::InitScale { direction, .. } => direction.iter().map(|c| t.scale(c)).collect(),
            ParamBinding::InitCoord { index, base, .. } => {
                let mut x = consts(base);
                x[*index] = t;
                x
            }
        };
        let y = match self.binding {
            ParamBinding::MomentumEta { .. } => Some(vec![UniPoly::zero(); x.len()]),
            _ => None,
        };
        Curve { x: Arc::new(x), y }
    }

    /// Step size used by the update after round `i` (1-based).
    fn eta(&self, i: u32) -> UniPoly {
        match self.binding {
            ParamBinding::StepSize { .. } | ParamBinding::MomentumEta { .. } => UniPoly::identity(),
            ParamBinding::InitScale { eta, .. } | ParamBinding::InitCoord { eta, .. } => {
                UniPoly::constant(eta.clone())
            }
            ParamBinding::ScheduleCoord { index, schedule, .. } => {
                let k = (i - 1) as usize;
                if k == *index {
                    UniPoly::identity()
                } else {
                    UniPoly::constant(schedule[k].clone())
                }
            }
        }
    }

    fn gradient(&mut self, signs: &SignVector) -> Result<Arc<Vec<MultiPoly>>> {
        if let Some(g) = self.gradients.get(signs) {
            return Ok(g.clone());
        }
        let g = Arc::new(self.f.piece(signs)?.gradient());
        self.gradients.insert(signs.clone(), g.clone());
        Ok(g)
    }

    /// All real roots of `p` in the configured domain, memoized.
    fn roots_of(&mut self, p: &IntPoly) -> Arc<Vec<AlgebraicNumber>> {
        if p.degree() == 0 {
            return Arc::new(Vec::new());
        }
        if let Some(r) = self.roots.get(p) {
            return r.clone();
        }
        let r = Arc::new(isolate_int(&p.square_free(), &self.cfg.domain, &self.width));
        self.roots.insert(p.clone(), r.clone());
        r
    }

    /// Sorted distinct roots of the boundary compositions strictly inside
    /// `(lo, hi)`. A composition vanishing identically is an error.
    fn split_points(
        &mut self,
        comps: &[IntPoly],
        lo: &AlgebraicNumber,
        hi: &AlgebraicNumber,
        round: u32,
    ) -> Result<Vec<AlgebraicNumber>> {
        if let Some(k) = comps.iter().position(IntPoly::is_zero) {
            return Err(Error::DegenerateTrajectory {
                round,
                boundary: k,
                near: to_f64(&interior_midpoint(lo, hi)),
            });
        }
        let mut pts = Vec::new();
        for c in comps {
            let roots = self.roots_of(c);
            pts.extend_from_slice(inside(&roots, lo, hi));
        }
        if comps.len() > 1 {
            pts.sort();
            pts.dedup_by(|a, b| a.cmp_exact(b) == Ordering::Equal);
        }
        Ok(pts)
    }

    fn step(&mut self, curve: &Curve, signs: &SignVector) -> Result<Step> {
        let grad_polys = self.gradient(signs)?;
        let mut cache = PowerCache::new(&curve.x)?;
        let grad = grad_polys
            .iter()
            .map(|g| cache.compose(g, &self.cfg.budget))
            .collect::<Result<Vec<_>>>()?;
        let mut n = UniPoly::constant(-(&self.cfg.theta * &self.cfg.theta));
        for g in &grad {
            n = &n + &(g * g);
        }
        self.cfg.budget.check(&n)?;
        Ok(Step {
            grad,
            norm: IntPoly::from_rational(&n),
            next: None,
        })
    }

    fn next_curve(&self, i: u32, curve: &Curve, grad: &[UniPoly]) -> Result<Arc<Curve>> {
        let eta = self.eta(i);
        let budget = &self.cfg.budget;
        let (x, y) = match (self.binding, &curve.y) {
            (ParamBinding::MomentumEta { gamma, variant, .. }, Some(y)) => {
                let mut xs = Vec::with_capacity(grad.len());
                let mut ys = Vec::with_capacity(grad.len());
                for ((xj, yj), gj) in curve.x.iter().zip(y).zip(grad) {
                    let y_new = &yj.scale(gamma) - &(&eta * gj);
                    let x_new = match variant {
                        MomentumVariant::VelocityFirst => xj + &y_new,
                        MomentumVariant::Literal => xj + yj,
                    };
                    budget.check(&x_new)?;
                    budget.check(&y_new)?;
                    xs.push(x_new);
                    ys.push(y_new);
                }
                (xs, Some(ys))
            }
            _ => {
                let xs = curve
                    .x
                    .iter()
                    .zip(grad)
                    .map(|(xj, gj)| {
                        let x_new = xj - &(&eta * gj);
                        budget.check(&x_new)?;
                        Ok(x_new)
                    })
                    .collect::<Result<Vec<_>>>()?;
                (xs, None)
            }
        };
        Ok(Arc::new(Curve { x: Arc::new(x), y }))
    }

    fn run(&mut self) -> Result<(Trace, Vec<FinalCell>)> {
        let h = self.cfg.max_iters;
        let domain = self.cfg.domain.clone();
        let mut segs = vec![Seg {
            lo: AlgebraicNumber::from_rational(domain.lo.clone()),
            hi: AlgebraicNumber::from_rational(domain.hi.clone()),
            state: State::Active(Arc::new(self.initial_curve())),
        }];
        let mut stats = TraceStats {
            dim: self.f.dim(),
            num_boundaries: self.f.num_boundaries(),
            delta: self.f.degree(),
            max_iters: h,
            init_binding: self.binding.is_init(),
            round_max_degree: Vec::new(),
            round_active_cells: Vec::new(),
            degree_violations: 0,
            raw_cells: 0,
            final_cells: 0,
        };
        for i in 1..=h {
            let mut active = 0;
            let mut max_deg = 0;
            for s in &segs {
                if let State::Active(c) = &s.state {
                    active += 1;
                    max_deg = max_deg.max(c.x.iter().map(UniPoly::degree).max().unwrap_or(0));
                }
            }
            stats.round_max_degree.push(max_deg);
            stats.round_active_cells.push(active);
            if max_deg as u128 > stats.degree_bound(i) {
                stats.degree_violations += 1;
            }
            debug_assert!(max_deg as u128 <= stats.degree_bound(i), "curve degree bound violated");
            if active == 0 {
                break;
            }
            segs = self.round(i, segs)?;
        }
        debug_assert!(segs.windows(2).all(|w| w[0].hi == w[1].lo));
        debug_assert!(segs.iter().all(|s| matches!(s.state, State::Settled { .. })));

        let mut bps = Vec::with_capacity(segs.len());
        let mut values = Vec::with_capacity(segs.len());
        let mut finals = Vec::new();
        for (k, s) in segs.into_iter().enumerate() {
            if k > 0 {
                bps.push(s.lo.clone());
            }
            let State::Settled { cost, last } = s.state else {
                unreachable!("all cells settle by round H")
            };
            values.push(cost);
            if let Some(curve) = last {
                finals.push(FinalCell {
                    lo: s.lo,
                    hi: s.hi,
                    curve,
                });
            }
        }
        let raw = PwConst::from_raw_parts(domain, bps, values);
        let dual = raw.canonical();
        stats.raw_cells = raw.num_cells();
        stats.final_cells = dual.num_cells();
        Ok((Trace { dual, raw, stats }, finals))
    }

    fn round(&mut self, i: u32, segs: Vec<Seg>) -> Result<Vec<Seg>> {
        let last = i == self.cfg.max_iters;
        let mut out: Vec<Seg> = Vec::with_capacity(segs.len());
        let mut comps_cache: BTreeMap<usize, Arc<Vec<IntPoly>>> = BTreeMap::new();
        let mut steps: BTreeMap<(usize, SignVector), Step> = BTreeMap::new();
        for seg in segs {
            let curve = match seg.state {
                State::Active(c) => c,
                settled => {
                    out.push(Seg {
                        lo: seg.lo,
                        hi: seg.hi,
                        state: settled,
                    });
                    continue;
                }
            };
            let key = Arc::as_ptr(&curve) as usize;
            let comps = match comps_cache.get(&key) {
                Some(c) => c.clone(),
                None => {
                    let c = Arc::new(
                        self.f
                            .boundaries()
                            .iter()
                            .map(|b| Ok(IntPoly::from_rational(&b.compose_uni(&curve.x, &self.cfg.budget)?)))
                            .collect::<Result<Vec<_>>>()?,
                    );
                    comps_cache.insert(key, c.clone());
                    c
                }
            };
            let cuts = self.split_points(&comps, &seg.lo, &seg.hi, i)?;
            let bounds = with_ends(&seg.lo, cuts, &seg.hi);
            for w in bounds.windows(2) {
                let (a, b) = (&w[0], &w[1]);
                let signs = if comps.is_empty() {
                    SignVector::default()
                } else {
                    let m = interior_midpoint(a, b);
                    SignVector::new(comps.iter().map(|c| c.sign_at(&m) > 0).collect())
                };
                if last && !self.opts.keep_final && !self.opts.resolve_last_round {
                    // Still resolve the piece so a missing one is reported.
                    self.gradient(&signs)?;
                    push(&mut out, a, b, State::Settled { cost: i, last: None });
                    continue;
                }
                let skey = (key, signs);
                if !steps.contains_key(&skey) {
                    let st = self.step(&curve, &skey.1)?;
                    steps.insert(skey.clone(), st);
                }
                let norm = steps[&skey].norm.clone();
                let pts = if norm.is_zero() {
                    Vec::new()
                } else {
                    let roots = self.roots_of(&norm);
                    inside(&roots, a, b).to_vec()
                };
                let sub = with_ends(a, pts, b);
                for v in sub.windows(2) {
                    let (c, e) = (&v[0], &v[1]);
                    let converged = !norm.is_zero() && norm.sign_at(&interior_midpoint(c, e)) < 0;
                    let state = if converged {
                        State::Settled {
                            cost: i,
                            last: self.opts.keep_final.then(|| curve.x.clone()),
                        }
                    } else if last && !self.opts.keep_final {
                        State::Settled { cost: i, last: None }
                    } else {
                        let next = self.next_for(&mut steps, &skey, i, &curve)?;
                        if last {
                            State::Settled {
                                cost: i,
                                last: Some(next.x.clone()),
                            }
                        } else {
                            State::Active(next)
                        }
                    };
                    push(&mut out, c, e, state);
                }
            }
        }
        Ok(out)
    }

    fn next_for(
        &self,
        steps: &mut BTreeMap<(usize, SignVector), Step>,
        skey: &(usize, SignVector),
        i: u32,
        curve: &Curve,
    ) -> Result<Arc<Curve>> {
        let st = steps.get_mut(skey).expect("step computed before use");
        if st.next.is_none() {
            st.next = Some(self.next_curve(i, curve, &st.grad)?);
        }
        Ok(st.next.clone().unwrap())
    }
}

/// Appends a segment, merging it into the previous one when both are active
/// on the same curve.
fn push(out: &mut Vec<Seg>, lo: &AlgebraicNumber, hi: &AlgebraicNumber, state: State) {
    if let (Some(prev), State::Active(c)) = (out.last_mut(), &state) {
        if let State::Active(pc) = &prev.state {
            if Arc::ptr_eq(pc, c) {
                prev.hi = hi.clone();
                return;
            }
        }
    }
    out.push(Seg {
        lo: lo.clone(),
        hi: hi.clone(),
        state,
    });
}

/// The sub-slice of sorted `roots` lying strictly between `lo` and `hi`.
fn inside<'r>(roots: &'r [AlgebraicNumber], lo: &AlgebraicNumber, hi: &AlgebraicNumber) -> &'r [AlgebraicNumber] {
    let a = roots.partition_point(|r| r.cmp_exact(lo) != Ordering::Greater);
    let b = roots.partition_point(|r| r.cmp_exact(hi) == Ordering::Less);
    if a >= b {
        &[]
    } else {
        &roots[a..b]
    }
}
