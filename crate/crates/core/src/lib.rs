//! Exact dual cost functions for tuning gradient descent hyperparameters.
//!
//! For a fixed problem instance (an initial point and a piecewise-polynomial
//! objective), the number of iterations gradient descent needs to converge is a
//! piecewise-constant function of the step size (or of an initialization scale,
//! a single schedule entry, an initial coordinate, or the step size under fixed
//! momentum). This crate computes that function exactly: iterates are carried as
//! univariate polynomials over the rationals in the free parameter and every
//! breakpoint is a certified real algebraic number.
//!
//! On top of the exact traces sit empirical risk minimization over a sample of
//! instances, empirical pseudo-dimension search, and closed-form sample
//! complexity shapes.
//!
//! The crate is `no_std` and needs only `alloc`; file formats, the experiment
//! harness, and the command line live in the `gdtune` crate.

#![no_std]

extern crate alloc;

pub mod error;
pub mod gdtrace;
pub mod instances;
pub mod piecewise;
pub mod polynomials;
pub mod rational;
pub mod realroots;
pub mod tuner;

pub use error::{Error, Result};
pub use gdtrace::{
    trace_param, trace_stepsize, trace_validation, DualCost, GdConfig, MomentumVariant,
    ParamBinding, PwPolyObjective, SignVector, Trace,
};
pub use piecewise::{PwConst, PwPoly};
pub use polynomials::{Budget, MultiPoly, UniPoly};
pub use rational::{Interval, Rational};
pub use realroots::AlgebraicNumber;
