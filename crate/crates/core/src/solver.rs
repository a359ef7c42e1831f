//! Branch and bound for `max f(t)` over `[0, dt]`.
//!
//! Each node is a time interval with bounds on the local maximum over it.
//! Derivative enclosures classify a node as increasing, decreasing, convex
//! or concave, in which case the local maximum is computed directly;
//! otherwise an overestimator supplies an upper bound and the node remains a
//! candidate for bisection. The loop stops once the global bounds are within
//! `epsilon` of each other.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::facet::{inf_norm, AnalyticCase, FacetProblem, EIGEN_TOL};
use crate::interval::{Interval, Rounding};
use crate::matexp::ExpParams;
use crate::overestimator::{self, concave_max, concave_pad, default_tol_t, Overestimator, OverestimatorKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub epsilon: f64,
    pub exp: ExpParams,
    pub overestimator: OverestimatorKind,
    pub max_bisections: u64,
    /// Nodes narrower than this are not bisected; `None` means `2^-40 dt`.
    pub min_t_width: Option<f64>,
    pub rounding: Rounding,
    /// Relative tolerance of the eigenvector shortcut.
    pub eigen_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            epsilon: 1e-6,
            exp: ExpParams::default(),
            overestimator: OverestimatorKind::default(),
            max_bisections: 100_000,
            min_t_width: None,
            rounding: Rounding::Outward,
            eigen_tol: EIGEN_TOL,
        }
    }
}

impl SolverConfig {
    pub fn with_overestimator(mut self, kind: OverestimatorKind) -> Self {
        self.overestimator = kind;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    /// Checks `epsilon > 0` and the scaling condition
    /// `2^l (k + 2) > ||A [0, dt]||_inf` that guarantees termination.
    pub fn validate(&self, p: &FacetProblem) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::ConfigInvalid(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if let Some(w) = self.min_t_width {
            if w.is_nan() || w < 0.0 {
                return Err(Error::ConfigInvalid(format!("min_t_width must be non-negative, got {w}")));
            }
        }
        let norm = Rounding::Outward.up(inf_norm(p.a()) * p.dt());
        if !self.exp.admits(norm) {
            return Err(Error::ConfigInvalid(format!(
                "2^l (k + 2) = 2^{} * {} does not exceed ||A [0, dt]|| = {norm}; use l >= {}",
                self.exp.l,
                self.exp.k + 2,
                ExpParams::min_scaling(self.exp.k, norm)
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    EpsOptimal,
    BudgetExhausted,
    WidthFloor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub f_upper: f64,
    pub f_lower: f64,
    pub gap: f64,
    pub bisections: u64,
    pub convex_ops: u64,
    pub nodes_final: usize,
    pub status: SolveStatus,
    /// `eval_f(witness_t) == f_lower`.
    pub witness_t: f64,
    pub analytic_shortcut: AnalyticCase,
    pub wall_time: Duration,
}

/// One entry of the node list.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeTuple {
    pub t_interval: Interval,
    /// Bounds on the local maximum; [`Interval::ENTIRE`] until processed.
    pub fdagger: Interval,
    pub insertion_seq: u64,
}

impl NodeTuple {
    fn is_processed(&self) -> bool {
        !self.fdagger.is_entire()
    }
}

/// How a node's local maximum was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Increasing,
    Decreasing,
    Convex,
    Concave,
    Overestimated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TraceEvent {
    /// A node was processed.
    Node {
        seq: u64,
        t: Interval,
        fprime: Interval,
        fsecond: Interval,
        branch: Branch,
        fdagger: Interval,
        t_dagger: f64,
        #[serde(skip_serializing_if = "Option::is_none", default)]
        overestimator: Option<Overestimator>,
    },
    /// Global bounds after a sweep over the unprocessed nodes.
    Bounds {
        iteration: u64,
        f_lower: f64,
        f_upper: f64,
        nodes: usize,
    },
    /// A node was split at `t_mid`.
    Bisect { seq: u64, t_mid: f64 },
}

struct Clock(#[cfg(not(target_arch = "wasm32"))] std::time::Instant);

impl Clock {
    fn start() -> Self {
        #[cfg(not(target_arch = "wasm32"))]
        {
            Clock(std::time::Instant::now())
        }
        #[cfg(target_arch = "wasm32")]
        {
            Clock()
        }
    }

    fn elapsed(&self) -> Duration {
        #[cfg(not(target_arch = "wasm32"))]
        {
            self.0.elapsed()
        }
        #[cfg(target_arch = "wasm32")]
        {
            Duration::ZERO
        }
    }
}

pub fn solve(p: &FacetProblem, cfg: &SolverConfig) -> Result<SolveReport> {
    run(p, cfg, None)
}

pub fn solve_with_trace(p: &FacetProblem, cfg: &SolverConfig) -> Result<(SolveReport, Vec<TraceEvent>)> {
    let mut trace = Vec::new();
    let report = run(p, cfg, Some(&mut trace))?;
    Ok((report, trace))
}

struct Processed {
    fdagger: Interval,
    t_dagger: f64,
    branch: Branch,
    convex_op: bool,
    overestimator: Option<Overestimator>,
}

fn process(p: &FacetProblem, cfg: &SolverConfig, tint: Interval, tol_t: f64) -> Result<(Processed, Interval, Interval)> {
    let bounds = p.derivative_inclusions(tint, cfg.exp, cfg.rounding)?;
    let (fp, fs) = (bounds.fprime, bounds.fsecond);
    let (t_lo, t_hi) = (tint.lo(), tint.hi());
    let exact = |t: f64, value: f64, branch: Branch| Processed {
        fdagger: Interval::raw(value, value),
        t_dagger: t,
        branch,
        convex_op: false,
        overestimator: None,
    };

    let processed = if fp.lo() >= 0.0 {
        exact(t_hi, p.eval_f(t_hi)?, Branch::Increasing)
    } else if fp.hi() <= 0.0 {
        exact(t_lo, p.eval_f(t_lo)?, Branch::Decreasing)
    } else if fs.lo() >= 0.0 {
        let f_lo = p.eval_f(t_lo)?;
        let f_hi = p.eval_f(t_hi)?;
        if f_hi > f_lo {
            exact(t_hi, f_hi, Branch::Convex)
        } else {
            exact(t_lo, f_lo, Branch::Convex)
        }
    } else if fs.hi() <= 0.0 {
        let best = concave_max(|t| p.eval_f(t), tint, tol_t)?;
        let pad = concave_pad(fs.magnitude(), tol_t, best.value);
        Processed {
            fdagger: Interval::raw(best.value, best.value + pad),
            t_dagger: best.t,
            branch: Branch::Concave,
            convex_op: true,
            overestimator: None,
        }
    } else {
        let cert = overestimator::bound(cfg.overestimator, p, tint, fp, fs, tol_t)?;
        Processed {
            fdagger: Interval::raw(cert.f_value, cert.g_value),
            t_dagger: cert.t_dagger,
            branch: Branch::Overestimated,
            convex_op: cert.convex_op_used,
            overestimator: Some(cert.shape),
        }
    };
    Ok((processed, fp, fs))
}

fn run(p: &FacetProblem, cfg: &SolverConfig, mut trace: Option<&mut Vec<TraceEvent>>) -> Result<SolveReport> {
    let clock = Clock::start();
    cfg.validate(p)?;
    let dt = p.dt();
    let tol_t = default_tol_t(dt);
    let min_width = cfg.min_t_width.unwrap_or(dt * 2f64.powi(-40));

    let case = p.detect_analytic_case(cfg.eigen_tol);
    match case {
        AnalyticCase::ConstantF | AnalyticCase::EigenvectorH { .. } => {
            let (t, f) = p.solve_eigenvector_case()?;
            return Ok(SolveReport {
                f_upper: f,
                f_lower: f,
                gap: 0.0,
                bisections: 0,
                convex_ops: 0,
                nodes_final: 0,
                status: SolveStatus::EpsOptimal,
                witness_t: t,
                analytic_shortcut: case,
                wall_time: clock.elapsed(),
            });
        }
        AnalyticCase::NilpotentA { .. } | AnalyticCase::None => {}
    }

    let mut f_lower = p.eval_f(0.0)?;
    let mut witness_t = 0.0;
    let mut nodes = vec![NodeTuple {
        t_interval: p.horizon(),
        fdagger: Interval::ENTIRE,
        insertion_seq: 0,
    }];
    let mut next_seq = 1u64;
    let mut bisections = 0u64;
    let mut convex_ops = 0u64;
    let mut iteration = 0u64;

    let finish = |status, f_upper: f64, f_lower: f64, witness_t, bisections, convex_ops, nodes_final| SolveReport {
        f_upper: f_upper.max(f_lower),
        f_lower,
        gap: (f_upper - f_lower).max(0.0),
        bisections,
        convex_ops,
        nodes_final,
        status,
        witness_t,
        analytic_shortcut: case,
        wall_time: clock.elapsed(),
    };

    loop {
        for node in nodes.iter_mut().filter(|n| !n.is_processed()) {
            let (done, fp, fs) = process(p, cfg, node.t_interval, tol_t)?;
            node.fdagger = done.fdagger;
            if done.convex_op {
                convex_ops += 1;
            }
            if done.fdagger.lo() > f_lower {
                f_lower = done.fdagger.lo();
                witness_t = done.t_dagger;
            }
            if let Some(trace) = trace.as_deref_mut() {
                trace.push(TraceEvent::Node {
                    seq: node.insertion_seq,
                    t: node.t_interval,
                    fprime: fp,
                    fsecond: fs,
                    branch: done.branch,
                    fdagger: done.fdagger,
                    t_dagger: done.t_dagger,
                    overestimator: done.overestimator,
                });
            }
        }

        let f_upper = nodes
            .iter()
            .map(|n| n.fdagger.hi())
            .fold(f64::NEG_INFINITY, f64::max);
        if let Some(trace) = trace.as_deref_mut() {
            trace.push(TraceEvent::Bounds {
                iteration,
                f_lower,
                f_upper: f_upper.max(f_lower),
                nodes: nodes.len(),
            });
        }
        iteration += 1;

        if f_upper - f_lower <= cfg.epsilon {
            return Ok(finish(
                SolveStatus::EpsOptimal,
                f_upper,
                f_lower,
                witness_t,
                bisections,
                convex_ops,
                nodes.len(),
            ));
        }

        // Dominated nodes go, unless their bounds have already converged.
        nodes.retain(|n| !(n.fdagger.hi() <= f_lower && n.fdagger.width() > cfg.epsilon));

        if bisections >= cfg.max_bisections {
            return Ok(finish(
                SolveStatus::BudgetExhausted,
                f_upper,
                f_lower,
                witness_t,
                bisections,
                convex_ops,
                nodes.len(),
            ));
        }

        let Some(pick) = select_widest(&nodes) else {
            // Unreachable in exact arithmetic: an undominated node must remain.
            return Ok(finish(
                SolveStatus::EpsOptimal,
                f_lower,
                f_lower,
                witness_t,
                bisections,
                convex_ops,
                0,
            ));
        };
        if nodes[pick].t_interval.width() <= min_width {
            return Ok(finish(
                SolveStatus::WidthFloor,
                f_upper,
                f_lower,
                witness_t,
                bisections,
                convex_ops,
                nodes.len(),
            ));
        }

        let node = nodes.remove(pick);
        let (left, right) = node.t_interval.bisect();
        if let Some(trace) = trace.as_deref_mut() {
            trace.push(TraceEvent::Bisect {
                seq: node.insertion_seq,
                t_mid: left.hi(),
            });
        }
        for half in [left, right] {
            nodes.push(NodeTuple {
                t_interval: half,
                fdagger: Interval::ENTIRE,
                insertion_seq: next_seq,
            });
            next_seq += 1;
        }
        bisections += 1;
    }
}

/// Node with the widest local-maximum bounds; ties go to the oldest.
fn select_widest(nodes: &[NodeTuple]) -> Option<usize> {
    nodes
        .iter()
        .enumerate()
        .max_by(|(_, a), (_, b)| {
            a.fdagger
                .width()
                .total_cmp(&b.fdagger.width())
                .then(b.insertion_seq.cmp(&a.insertion_seq))
        })
        .map(|(i, _)| i)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};

    fn example1() -> FacetProblem {
        FacetProblem::new(
            dmatrix![0.0, 1.0; 0.0, 0.0],
            dmatrix![0.0; 1.0],
            dvector![25.0, 0.5],
            dvector![-1.0],
            dvector![0.04, 0.0],
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn example1_single_concave_node() {
        for kind in OverestimatorKind::ALL {
            let cfg = SolverConfig::default().with_overestimator(kind);
            let (r, trace) = solve_with_trace(&example1(), &cfg).unwrap();
            assert!((r.f_upper - 1.005).abs() < 1e-9, "{r:?}");
            assert!(r.gap <= 1e-9);
            assert_eq!(r.bisections, 0);
            assert_eq!(r.convex_ops, 1);
            assert_eq!(r.status, SolveStatus::EpsOptimal);
            let nodes: Vec<_> = trace
                .iter()
                .filter_map(|e| match e {
                    TraceEvent::Node { branch, .. } => Some(*branch),
                    _ => None,
                })
                .collect();
            assert_eq!(nodes, vec![Branch::Concave]);
        }
    }

    #[test]
    fn selection_prefers_width_then_age() {
        let mk = |w: f64, seq| NodeTuple {
            t_interval: Interval::raw(0.0, 1.0),
            fdagger: Interval::raw(0.0, w),
            insertion_seq: seq,
        };
        assert_eq!(select_widest(&[mk(1.0, 3), mk(2.0, 4), mk(2.0, 2)]), Some(2));
        assert_eq!(select_widest(&[]), None);
    }

    #[test]
    fn invalid_configs() {
        let p = example1();
        let cfg = SolverConfig::default().with_epsilon(0.0);
        assert!(matches!(solve(&p, &cfg), Err(Error::ConfigInvalid(_))));
        let cfg = SolverConfig {
            exp: ExpParams::new(0, 0),
            ..SolverConfig::default()
        };
        assert!(solve(&p, &cfg).is_ok());
        let fast = FacetProblem::new(
            dmatrix![0.0, 10.0; -10.0, 0.0],
            dmatrix![0.0; 1.0],
            dvector![1.0, 0.5],
            dvector![-1.0],
            dvector![0.5, 0.1],
            1.0,
        )
        .unwrap();
        let cfg = SolverConfig {
            exp: ExpParams::new(2, 1),
            ..SolverConfig::default()
        };
        assert!(matches!(solve(&fast, &cfg), Err(Error::ConfigInvalid(_))));
    }

    #[test]
    fn huge_epsilon_exits_after_first_sweep() {
        let p = FacetProblem::new(
            dmatrix![-1.0, 7.0; -7.0, -1.0],
            dmatrix![-1.0; 0.0],
            dvector![0.6, 0.7],
            dvector![1.0],
            dvector![-2.0, 2.0],
            1.0,
        )
        .unwrap();
        let (r, trace) = solve_with_trace(&p, &SolverConfig::default().with_epsilon(1e3)).unwrap();
        assert_eq!(r.bisections, 0);
        assert!(r.gap <= 1e3);
        assert_eq!(trace.iter().filter(|e| matches!(e, TraceEvent::Node { .. })).count(), 1);
    }

    #[test]
    fn constant_shortcut() {
        let p = FacetProblem::new(
            dmatrix![-1.0, 0.0; 0.0, -1.0],
            dmatrix![1.0; 0.0],
            dvector![1.0, 0.0],
            dvector![1.0],
            dvector![0.3, 0.7],
            0.5,
        )
        .unwrap();
        let r = solve(&p, &SolverConfig::default()).unwrap();
        assert_eq!(r.analytic_shortcut, AnalyticCase::ConstantF);
        assert_eq!((r.f_upper, r.f_lower, r.gap), (0.3, 0.3, 0.0));
    }
}
