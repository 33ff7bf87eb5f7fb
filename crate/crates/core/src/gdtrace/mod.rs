//! Gradient descent with one free hyperparameter.
//!
//! The symbolic trace carries every iterate as a vector of univariate
//! polynomials in the free parameter and splits the parameter domain into
//! cells on which the run is combinatorially identical, yielding the exact
//! iterations-to-convergence function. A floating-point runner over a grid
//! serves as an independent oracle and as the only mode for smooth networks.

mod exact;
mod numeric;
mod objective;
mod symbolic;

use alloc::format;
use alloc::vec::Vec;

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::piecewise::PwConst;
use crate::polynomials::Budget;
use crate::rational::{Interval, Rational};

pub use exact::{exact_cost_at, exact_run, ExactRun};
pub use numeric::{
    numeric_cost_at, numeric_dual, CompiledObjective, FloatBinding, GradientOracle, Jump, NumericCost,
    NumericDual,
};
pub use objective::{PieceSource, PwPolyObjective, SignVector};
pub use symbolic::{
    trace_param, trace_param_with, trace_stepsize, trace_validation, trace_validation_param, Trace,
    TraceOptions, TraceStats, ValidationTrace,
};

/// Iterations to convergence as a function of the free parameter.
pub type DualCost = PwConst<u32>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GdConfig {
    /// Maximum number of iterations `H`.
    pub max_iters: u32,
    /// Convergence threshold: stop at the first iterate with gradient norm
    /// strictly below `theta`.
    pub theta: Rational,
    /// Closed domain of the free parameter.
    pub domain: Interval,
    pub budget: Budget,
}

impl GdConfig {
    pub fn new(max_iters: u32, theta: Rational, domain: Interval) -> Result<Self> {
        let cfg = GdConfig {
            max_iters,
            theta,
            domain,
            budget: Budget::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_budget(mut self, budget: Budget) -> Self {
        self.budget = budget;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("H must be at least 1".into()));
        }
        if !self.theta.is_positive() {
            return Err(Error::InvalidConfig("theta must be positive".into()));
        }
        Ok(())
    }
}

/// Order of the two momentum updates.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum MomentumVariant {
    /// `y' = gamma y - eta grad f(x)`, then `x' = x + y'`.
    #[default]
    VelocityFirst,
    /// `x' = x + y` with the old velocity, so the first step does not move.
    Literal,
}

/// Which quantity is the free parameter `t`; everything else is fixed.
/// Coordinate indices are zero-based.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ParamBinding {
    /// `t` is the step size.
    StepSize { x0: Vec<Rational> },
    /// `x_1 = t * direction`, fixed step size.
    InitScale { direction: Vec<Rational>, eta: Rational },
    /// `x_1` is `base` with coordinate `index` replaced by `t`.
    InitCoord {
        index: usize,
        base: Vec<Rational>,
        eta: Rational,
    },
    /// Round `index + 1` uses step size `t`; the others use `schedule`.
    ScheduleCoord {
        index: usize,
        x0: Vec<Rational>,
        schedule: Vec<Rational>,
    },
    /// Heavy-ball momentum with fixed `gamma`; `t` is the step size.
    MomentumEta {
        x0: Vec<Rational>,
        gamma: Rational,
        variant: MomentumVariant,
    },
}

impl ParamBinding {
    pub fn name(&self) -> &'static str {
        match self {
            ParamBinding::StepSize { .. } => "stepsize",
            ParamBinding::InitScale { .. } => "init_scale",
            ParamBinding::InitCoord { .. } => "init_coord",
            ParamBinding::ScheduleCoord { .. } => "schedule_coord",
            ParamBinding::MomentumEta { .. } => "momentum_eta",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ParamBinding::StepSize { x0 }
            | ParamBinding::ScheduleCoord { x0, .. }
            | ParamBinding::MomentumEta { x0, .. } => x0.len(),
            ParamBinding::InitScale { direction, .. } => direction.len(),
            ParamBinding::InitCoord { base, .. } => base.len(),
        }
    }

    /// True when the free parameter enters through the initial point.
    pub fn is_init(&self) -> bool {
        matches!(self, ParamBinding::InitScale { .. } | ParamBinding::InitCoord { .. })
    }

    pub fn validate(&self, dim: usize, cfg: &GdConfig) -> Result<()> {
        cfg.validate()?;
        if self.dim() != dim {
            return Err(Error::Dimension {
                expected: dim,
                found: self.dim(),
            });
        }
        if !matches!(self, ParamBinding::InitCoord { .. }) && cfg.domain.lo.is_negative() {
            return Err(Error::InvalidConfig(format!(
                "{} domain must be non-negative",
                self.name()
            )));
        }
        match self {
            ParamBinding::InitCoord { index, .. } if *index >= dim => {
                Err(Error::InvalidConfig(format!("coordinate {index} out of range")))
            }
            ParamBinding::ScheduleCoord { index, schedule, .. } => {
                if schedule.len() != cfg.max_iters as usize {
                    return Err(Error::InvalidConfig(format!(
                        "schedule has {} entries, expected H = {}",
                        schedule.len(),
                        cfg.max_iters
                    )));
                }
                if *index >= schedule.len() {
                    return Err(Error::InvalidConfig(format!("schedule index {index} out of range")));
                }
                Ok(())
            }
            ParamBinding::MomentumEta { gamma, .. } if gamma.is_negative() => {
                Err(Error::InvalidConfig("gamma must be non-negative".into()))
            }
            ParamBinding::InitScale { direction, .. } if direction.iter().all(Zero::is_zero) => {
                Err(Error::InvalidConfig("direction must be nonzero".into()))
            }
            _ => Ok(()),
        }
    }
}
