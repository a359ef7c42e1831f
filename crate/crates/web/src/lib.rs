//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Each export takes and returns JSON strings. The `*_impl` functions hold
//! the logic and are tested natively.

use intersample::solver::{Branch, TraceEvent};
use intersample::verify::{self, ProblemFile, Verdict};
use intersample::{
    interval_exp, point_exp, solve_with_trace, ExpParams, Interval, IntervalMatrix, OverestimatorKind, Rounding,
    SolverConfig, VerificationReport,
};
use nalgebra::DMatrix;
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Debug, thiserror::Error)]
pub enum WebError {
    #[error(transparent)]
    Core(#[from] intersample::Error),
    #[error("bad input: {0}")]
    Input(String),
}

impl From<WebError> for JsValue {
    fn from(e: WebError) -> JsValue {
        JsValue::from_str(&e.to_string())
    }
}

fn config(kind: &str, epsilon: f64) -> Result<SolverConfig, WebError> {
    let kind: OverestimatorKind = kind.parse().map_err(WebError::Input)?;
    Ok(SolverConfig::default().with_epsilon(epsilon).with_overestimator(kind))
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("plain data serializes")
}

#[derive(Serialize)]
struct Sample {
    t: f64,
    f: f64,
}

#[derive(Serialize)]
struct Node {
    t_lo: f64,
    t_hi: f64,
    bound_lo: f64,
    bound_hi: f64,
    t_dagger: f64,
    branch: Branch,
}

#[derive(Serialize)]
struct FacetExploration {
    query: String,
    facet: usize,
    facet_count: usize,
    dt: f64,
    f_upper: f64,
    f_lower: f64,
    gap: f64,
    witness_t: f64,
    bisections: u64,
    convex_ops: u64,
    verdict: Verdict,
    curve: Vec<Sample>,
    nodes: Vec<Node>,
}

/// Solves one facet with its node history and a sampled curve of `f`.
pub fn explore_facet_impl(
    spec_json: &str,
    query: usize,
    facet: usize,
    kind: &str,
    epsilon: f64,
    samples: usize,
) -> Result<String, WebError> {
    let problem = ProblemFile::from_json(spec_json)?;
    let system = problem.system()?;
    let q = problem
        .queries()
        .into_iter()
        .nth(query)
        .ok_or_else(|| WebError::Input(format!("no query {query}")))?;
    let problems = verify::facet_problems(&system, &q)?;
    let facet_count = problems.len();
    let p = problems
        .get(facet)
        .ok_or_else(|| WebError::Input(format!("facet {facet} out of range (0..{facet_count})")))?;
    let (report, trace) = solve_with_trace(p, &config(kind, epsilon)?)?;
    let curve = verify::sample_outputs(&system, &q, facet, samples.max(2))?
        .into_iter()
        .map(|r| Sample { t: r.t, f: r.f })
        .collect();
    let nodes = trace
        .iter()
        .filter_map(|e| match e {
            TraceEvent::Node {
                t,
                fdagger,
                t_dagger,
                branch,
                ..
            } => Some(Node {
                t_lo: t.lo(),
                t_hi: t.hi(),
                bound_lo: fdagger.lo(),
                bound_hi: fdagger.hi(),
                t_dagger: *t_dagger,
                branch: *branch,
            }),
            _ => None,
        })
        .collect();
    Ok(to_json(&FacetExploration {
        query: q.label,
        facet,
        facet_count,
        dt: p.dt(),
        f_upper: report.f_upper,
        f_lower: report.f_lower,
        gap: report.gap,
        witness_t: report.witness_t,
        bisections: report.bisections,
        convex_ops: report.convex_ops,
        verdict: Verdict::of(&report),
        curve,
        nodes,
    }))
}

#[derive(Serialize)]
struct Enclosure {
    lo: Vec<Vec<f64>>,
    hi: Vec<Vec<f64>>,
    point: Vec<Vec<f64>>,
    max_width: f64,
}

/// Encloses `exp(A t)` for all `t` in `[t_lo, t_hi]`; `point` is `exp(A t_hi)`.
pub fn enclose_exp_impl(matrix_json: &str, t_lo: f64, t_hi: f64, k: u32, l: u32) -> Result<String, WebError> {
    let rows: Vec<Vec<f64>> = serde_json::from_str(matrix_json).map_err(|e| WebError::Input(e.to_string()))?;
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(WebError::Input("matrix must be square and non-empty".into()));
    }
    let a = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    let t = Interval::new(t_lo, t_hi)?;
    let c = IntervalMatrix::from_point_scaled(&a, t, Rounding::Outward)?;
    let e = interval_exp(&c, ExpParams::new(k, l), Rounding::Outward)?;
    let point = point_exp(&(&a * t_hi))?.value;
    let grid = |f: &dyn Fn(usize, usize) -> f64| (0..n).map(|i| (0..n).map(|j| f(i, j)).collect()).collect();
    Ok(to_json(&Enclosure {
        lo: grid(&|i, j| e.get(i, j).lo()),
        hi: grid(&|i, j| e.get(i, j).hi()),
        point: grid(&|i, j| point[(i, j)]),
        max_width: e.max_width(),
    }))
}

/// Full report for every query and facet, as the command line prints it.
pub fn verify_spec_impl(spec_json: &str, kind: &str, epsilon: f64) -> Result<String, WebError> {
    let problem = ProblemFile::from_json(spec_json)?;
    let system = problem.system()?;
    let cfg = config(kind, epsilon)?;
    let report: VerificationReport = verify::verify_all(&system, &problem.queries(), &cfg, None, 1)?;
    Ok(report.to_json())
}

#[wasm_bindgen]
pub fn explore_facet(
    spec_json: &str,
    query: usize,
    facet: usize,
    kind: &str,
    epsilon: f64,
    samples: usize,
) -> Result<String, JsValue> {
    Ok(explore_facet_impl(spec_json, query, facet, kind, epsilon, samples)?)
}

#[wasm_bindgen]
pub fn enclose_exp(matrix_json: &str, t_lo: f64, t_hi: f64, k: u32, l: u32) -> Result<String, JsValue> {
    Ok(enclose_exp_impl(matrix_json, t_lo, t_hi, k, l)?)
}

#[wasm_bindgen]
pub fn verify_spec(spec_json: &str, kind: &str, epsilon: f64) -> Result<String, JsValue> {
    Ok(verify_spec_impl(spec_json, kind, epsilon)?)
}
