use alloc::vec;
use alloc::vec::Vec;

use super::objective::PwPolyObjective;
use super::{GdConfig, MomentumVariant, ParamBinding};
use crate::error::Result;
use crate::rational::Rational;

/// Outcome of one exact rational gradient descent run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactRun {
    pub cost: u32,
    /// Iterate at convergence, or `x_{H+1}` when the run never converged.
    pub final_point: Vec<Rational>,
}

/// Runs gradient descent in exact rational arithmetic with the free
/// parameter set to `t`. On a boundary the non-positive piece is used.
pub fn exact_run(
    f: &PwPolyObjective,
    binding: &ParamBinding,
    cfg: &GdConfig,
    t: &Rational,
) -> Result<ExactRun> {
    binding.validate(f.dim(), cfg)?;
    let theta2 = &cfg.theta * &cfg.theta;
    let mut x: Vec<Rational> = match binding {
        ParamBinding::StepSize { x0 }
        | ParamBinding::ScheduleCoord { x0, .. }
        | ParamBinding::MomentumEta { x0, .. } => x0.clone(),
        ParamBinding::InitScale { direction, .. } => direction.iter().map(|c| c * t).collect(),
        ParamBinding::InitCoord { index, base, .. } => {
            let mut x = base.clone();
            x[*index] = t.clone();
            x
        }
    };
    let mut y = vec![Rational::from_integer(0.into()); x.len()];
    for i in 1..=cfg.max_iters {
        let g = f.gradient_at(&x)?;
        let norm2: Rational = g.iter().map(|v| v * v).sum();
        if norm2 < theta2 {
            return Ok(ExactRun {
                cost: i,
                final_point: x,
            });
        }
        let eta = match binding {
            ParamBinding::StepSize { .. } | ParamBinding::MomentumEta { .. } => t.clone(),
            ParamBinding::InitScale { eta, .. } | ParamBinding::InitCoord { eta, .. } => eta.clone(),
            ParamBinding::ScheduleCoord { index, schedule, .. } => {
                let k = (i - 1) as usize;
                if k == *index {
                    t.clone()
                } else {
                    schedule[k].clone()
                }
            }
        };
        match binding {
            ParamBinding::MomentumEta { gamma, variant, .. } => {
                for j in 0..x.len() {
                    let y_new = gamma * &y[j] - &eta * &g[j];
                    match variant {
                        MomentumVariant::VelocityFirst => x[j] += &y_new,
                        MomentumVariant::Literal => x[j] += &y[j],
                    }
                    y[j] = y_new;
                }
            }
            _ => {
                for j in 0..x.len() {
                    x[j] -= &eta * &g[j];
                }
            }
        }
    }
    Ok(ExactRun {
        cost: cfg.max_iters,
        final_point: x,
    })
}

pub fn exact_cost_at(
    f: &PwPolyObjective,
    binding: &ParamBinding,
    cfg: &GdConfig,
    t: &Rational,
) -> Result<u32> {
    exact_run(f, binding, cfg, t).map(|r| r.cost)
}
