//! Rigorous verification of inter-sample constraint satisfaction for sampled
//! linear time-invariant systems.
//!
//! A continuous-time system `x' = A x + B u` driven by a zero-order hold
//! input may leave a polytope `{x : H x <= 1}` between two sampling
//! instants even when both samples lie inside. For one row `h^T` of `H`,
//! the worst excursion over a sampling period is
//!
//! ```text
//! f* = max_{t in [0, dt]} h^T phi(t, x0, u0)
//! ```
//!
//! which is non-convex in `t`. [`solver::solve`] computes an upper bound
//! within `epsilon` of `f*` by branch and bound, using interval enclosures
//! of `f'` and `f''` obtained from an interval matrix exponential.
//!
//! Module map:
//!
//! * [`interval`], [`matrix`]: interval arithmetic with outward rounding;
//! * [`matexp`]: interval and point matrix exponentials;
//! * [`facet`]: the objective `f`, its derivatives and their enclosures;
//! * [`overestimator`]: upper bounds on local maxima;
//! * [`solver`]: the branch-and-bound loop;
//! * [`verify`]: system ingestion, discretization and per-facet reports.

pub mod error;
pub mod facet;
pub mod interval;
pub mod matexp;
pub mod matrix;
pub mod overestimator;
pub mod solver;
pub mod verify;

pub use error::{Error, Result};
pub use facet::{AnalyticCase, DerivativeBounds, FacetProblem, PointValues};
pub use interval::{Interval, Rounding};
pub use matexp::{augmented_phi, interval_exp, point_exp, ExpParams, PointExp};
pub use matrix::IntervalMatrix;
pub use overestimator::{BoundCertificate, Overestimator, OverestimatorKind};
pub use solver::{solve, solve_with_trace, SolveReport, SolveStatus, SolverConfig, TraceEvent};
pub use verify::{QueryPoint, SystemSpec, VerificationReport};
