use alloc::vec;
use alloc::vec::Vec;

use super::objective::{PwPolyObjective, SignVector};
use super::{GdConfig, MomentumVariant, ParamBinding};
use crate::error::{Error, Result};
use crate::polynomials::CompiledPoly;
use crate::rational::to_f64;

/// Anything whose gradient can be evaluated in floating point.
pub trait GradientOracle: Sync {
    fn dim(&self) -> usize;
    fn gradient(&self, x: &[f64], out: &mut [f64]);
}

/// Floating-point image of a [`PwPolyObjective`]: boundaries and the gradient
/// of every piece compiled to `f64` coefficients.
#[derive(Clone, Debug)]
pub struct CompiledObjective {
    dim: usize,
    boundaries: Vec<CompiledPoly>,
    /// Indexed by sign-vector mask.
    pieces: Vec<Option<Vec<CompiledPoly>>>,
}

/// Largest boundary count for which every piece is compiled up front.
const MAX_COMPILED_BOUNDARIES: usize = 16;

impl CompiledObjective {
    pub fn new(f: &PwPolyObjective) -> Result<Self> {
        let p = f.num_boundaries();
        if p > MAX_COMPILED_BOUNDARIES {
            return Err(Error::BudgetExceeded {
                count: p,
                cap: MAX_COMPILED_BOUNDARIES,
            });
        }
        let compile = |piece: &crate::polynomials::MultiPoly| {
            piece.gradient().iter().map(|g| g.compile()).collect::<Vec<_>>()
        };
        let mut pieces = vec![None; 1 << p];
        match f.table() {
            Some(table) => {
                for (s, piece) in table {
                    pieces[s.mask() as usize] = Some(compile(piece));
                }
            }
            None => {
                for (mask, slot) in pieces.iter_mut().enumerate() {
                    *slot = Some(compile(&f.piece(&SignVector::from_mask(mask as u64, p))?));
                }
            }
        }
        Ok(CompiledObjective {
            dim: f.dim(),
            boundaries: f.boundaries().iter().map(|b| b.compile()).collect(),
            pieces,
        })
    }
}

impl GradientOracle for CompiledObjective {
    fn dim(&self) -> usize {
        self.dim
    }

    /// A missing piece yields NaN, which the runner reports as non-finite.
    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let mask = self
            .boundaries
            .iter()
            .enumerate()
            .fold(0usize, |m, (k, b)| if b.eval(x) > 0.0 { m | (1 << k) } else { m });
        match &self.pieces[mask] {
            Some(g) => {
                for (o, gj) in out.iter_mut().zip(g) {
                    *o = gj.eval(x);
                }
            }
            None => out.fill(f64::NAN),
        }
    }
}

/// A [`ParamBinding`] with every fixed quantity rounded to `f64`.
#[derive(Clone, Debug, PartialEq)]
pub enum FloatBinding {
    StepSize { x0: Vec<f64> },
    InitScale { direction: Vec<f64>, eta: f64 },
    InitCoord { index: usize, base: Vec<f64>, eta: f64 },
    ScheduleCoord { index: usize, x0: Vec<f64>, schedule: Vec<f64> },
    MomentumEta { x0: Vec<f64>, gamma: f64, variant: MomentumVariant },
}

impl From<&ParamBinding> for FloatBinding {
    fn from(b: &ParamBinding) -> Self {
        let v = |xs: &[crate::rational::Rational]| xs.iter().map(to_f64).collect::<Vec<_>>();
        match b {
            ParamBinding::StepSize { x0 } => FloatBinding::StepSize { x0: v(x0) },
            ParamBinding::InitScale { direction, eta } => FloatBinding::InitScale {
                direction: v(direction),
                eta: to_f64(eta),
            },
            ParamBinding::InitCoord { index, base, eta } => FloatBinding::InitCoord {
                index: *index,
                base: v(base),
                eta: to_f64(eta),
            },
            ParamBinding::ScheduleCoord { index, x0, schedule } => FloatBinding::ScheduleCoord {
                index: *index,
                x0: v(x0),
                schedule: v(schedule),
            },
            ParamBinding::MomentumEta { x0, gamma, variant } => FloatBinding::MomentumEta {
                x0: v(x0),
                gamma: to_f64(gamma),
                variant: *variant,
            },
        }
    }
}

impl FloatBinding {
    fn initial(&self, t: f64) -> Vec<f64> {
        match self {
            FloatBinding::StepSize { x0 }
            | FloatBinding::ScheduleCoord { x0, .. }
            | FloatBinding::MomentumEta { x0, .. } => x0.clone(),
            FloatBinding::InitScale { direction, .. } => direction.iter().map(|c| c * t).collect(),
            FloatBinding::InitCoord { index, base, .. } => {
                let mut x = base.clone();
                x[*index] = t;
                x
            }
        }
    }

    fn eta(&self, round: u32, t: f64) -> f64 {
        match self {
            FloatBinding::StepSize { .. } | FloatBinding::MomentumEta { .. } => t,
            FloatBinding::InitScale { eta, .. } | FloatBinding::InitCoord { eta, .. } => *eta,
            FloatBinding::ScheduleCoord { index, schedule, .. } => {
                let k = (round - 1) as usize;
                if k == *index {
                    t
                } else {
                    schedule[k]
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NumericCost {
    pub cost: u32,
    /// An iterate or gradient overflowed; the cost is then `H`.
    pub nonfinite: bool,
}

/// Plain floating-point gradient descent at parameter value `t`.
pub fn numeric_cost_at(
    oracle: &dyn GradientOracle,
    binding: &FloatBinding,
    max_iters: u32,
    theta: f64,
    t: f64,
) -> NumericCost {
    let mut x = binding.initial(t);
    let mut y = vec![0.0; x.len()];
    let mut g = vec![0.0; x.len()];
    let theta2 = theta * theta;
    for i in 1..=max_iters {
        oracle.gradient(&x, &mut g);
        let norm2: f64 = g.iter().map(|v| v * v).sum();
        if !norm2.is_finite() || x.iter().any(|v| !v.is_finite()) {
            return NumericCost {
                cost: max_iters,
                nonfinite: true,
            };
        }
        if norm2 < theta2 {
            return NumericCost {
                cost: i,
                nonfinite: false,
            };
        }
        let eta = binding.eta(i, t);
        match binding {
            FloatBinding::MomentumEta { gamma, variant, .. } => {
                for j in 0..x.len() {
                    let y_new = gamma * y[j] - eta * g[j];
                    match variant {
                        MomentumVariant::VelocityFirst => x[j] += y_new,
                        MomentumVariant::Literal => x[j] += y[j],
                    }
                    y[j] = y_new;
                }
            }
            _ => {
                for j in 0..x.len() {
                    x[j] -= eta * g[j];
                }
            }
        }
    }
    NumericCost {
        cost: max_iters,
        nonfinite: false,
    }
}

/// A cost change localized between two parameter values.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jump {
    pub lo: f64,
    pub hi: f64,
    pub left: u32,
    pub right: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NumericDual {
    pub lo: f64,
    pub hi: f64,
    /// `grid + 1` equally spaced parameter values.
    pub params: Vec<f64>,
    pub costs: Vec<u32>,
    /// One per adjacent grid pair with differing costs, bisected.
    pub jumps: Vec<Jump>,
    /// Grid parameters whose run overflowed.
    pub nonfinite: Vec<f64>,
}

impl NumericDual {
    /// Step-function estimate: `(start, cost)` pairs, each jump placed at the
    /// midpoint of its residual interval.
    pub fn steps(&self) -> Vec<(f64, u32)> {
        let mut out = vec![(self.lo, self.costs[0])];
        for j in &self.jumps {
            out.push((0.5 * (j.lo + j.hi), j.right));
        }
        out
    }

    /// Residual uncertainty intervals around the detected jumps.
    pub fn unresolved(&self) -> Vec<(f64, f64)> {
        self.jumps.iter().map(|j| (j.lo, j.hi)).collect()
    }

    /// Fails with the first overflow, for callers that treat it as an error.
    pub fn check_finite(&self, max_iters: u32) -> Result<()> {
        match self.nonfinite.first() {
            Some(&param) => Err(Error::NonFiniteIterate {
                param,
                round: max_iters,
            }),
            None => Ok(()),
        }
    }
}

/// Grid scan of the cost with bisection at every jump.
pub fn numeric_dual(
    oracle: &dyn GradientOracle,
    binding: &ParamBinding,
    cfg: &GdConfig,
    grid: usize,
    refine_rounds: u32,
) -> Result<NumericDual> {
    if grid < 2 {
        return Err(Error::InvalidConfig("grid must be at least 2".into()));
    }
    if binding.dim() != oracle.dim() {
        return Err(Error::Dimension {
            expected: oracle.dim(),
            found: binding.dim(),
        });
    }
    cfg.validate()?;
    let fb = FloatBinding::from(binding);
    let theta = to_f64(&cfg.theta);
    let h = cfg.max_iters;
    let (lo, hi) = cfg.domain.to_f64();
    let params: Vec<f64> = (0..=grid)
        .map(|k| if k == grid { hi } else { lo + (hi - lo) * (k as f64) / (grid as f64) })
        .collect();
    let mut costs = Vec::with_capacity(params.len());
    let mut nonfinite = Vec::new();
    for &t in &params {
        let c = numeric_cost_at(oracle, &fb, h, theta, t);
        if c.nonfinite {
            nonfinite.push(t);
        }
        costs.push(c.cost);
    }
    let mut jumps = Vec::new();
    for k in 0..grid {
        if costs[k] == costs[k + 1] {
            continue;
        }
        let (mut a, mut b) = (params[k], params[k + 1]);
        let (ca, cb) = (costs[k], costs[k + 1]);
        for _ in 0..refine_rounds {
            let m = 0.5 * (a + b);
            if numeric_cost_at(oracle, &fb, h, theta, m).cost == ca {
                a = m;
            } else {
                b = m;
            }
        }
        jumps.push(Jump {
            lo: a,
            hi: b,
            left: ca,
            right: cb,
        });
    }
    Ok(NumericDual {
        lo,
        hi,
        params,
        costs,
        jumps,
        nonfinite,
    })
}
