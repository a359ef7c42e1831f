//! System ingestion, discretization and per-facet verification.
//!
//! Input is a single JSON document:
//!
//! ```json
//! {"A": [[0, 1], [0, 0]], "B": [[0], [1]], "dt": 1.0,
//!  "X": {"H": [[0.04, 0], [-0.04, 0], [0, 0.2], [0, -0.2]]},
//!  "U": {"H": [[1], [-1]]},
//!  "queries": [{"x0": [25, 0.5], "u0": [-1], "label": "corner"}]}
//! ```
//!
//! Matrices are row-major and every constraint row is normalized to a
//! right-hand side of 1.

use std::io::Write;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::facet::FacetProblem;
use crate::matexp::{augmented_phi, point_exp};
use crate::overestimator::OverestimatorKind;
use crate::solver::{solve, solve_with_trace, SolveReport, SolveStatus, SolverConfig, TraceEvent};
use crate::interval::Rounding;

/// Slack on `H x <= 1` membership checks, absorbing discretization noise.
pub const MEMBERSHIP_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub dt: f64,
    /// State constraints `H x <= 1`, one row per facet.
    pub hx: DMatrix<f64>,
    /// Input constraints `H_u u <= 1`.
    pub hu: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryPoint {
    pub x0: DVector<f64>,
    pub u0: DVector<f64>,
    pub label: String,
}

impl SystemSpec {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, dt: f64, hx: DMatrix<f64>, hu: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if !a.is_square() || b.nrows() != n {
            return Err(Error::DimensionMismatch(format!(
                "A is {}x{}, B is {}x{}",
                a.nrows(),
                a.ncols(),
                b.nrows(),
                b.ncols()
            )));
        }
        if hx.nrows() == 0 || hx.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "X needs a non-empty H with {n} columns, got {}x{}",
                hx.nrows(),
                hx.ncols()
            )));
        }
        if hu.nrows() == 0 || hu.ncols() != b.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "U needs a non-empty H with {} columns, got {}x{}",
                b.ncols(),
                hu.nrows(),
                hu.ncols()
            )));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidProblem(format!("sampling time must be positive, got {dt}")));
        }
        Ok(SystemSpec { a, b, dt, hx, hu })
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.b.ncols()
    }

    pub fn facet_count(&self) -> usize {
        self.hx.nrows()
    }

    fn check_query(&self, q: &QueryPoint) -> Result<()> {
        if q.x0.len() != self.state_dim() || q.u0.len() != self.input_dim() {
            return Err(Error::DimensionMismatch(format!(
                "query '{}' has x0 of length {} and u0 of length {}, expected {} and {}",
                q.label,
                q.x0.len(),
                q.u0.len(),
                self.state_dim(),
                self.input_dim()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfspaceSet {
    #[serde(rename = "H")]
    pub h: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryFile {
    pub x0: Vec<f64>,
    pub u0: Vec<f64>,
    #[serde(default)]
    pub label: Option<String>,
}

/// The on-disk JSON form of a verification problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemFile {
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
    pub dt: f64,
    #[serde(rename = "X")]
    pub x: HalfspaceSet,
    #[serde(rename = "U")]
    pub u: HalfspaceSet,
    #[serde(default)]
    pub queries: Vec<QueryFile>,
}

fn rows_to_matrix(name: &str, rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let cols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::DimensionMismatch(format!("{name} has rows of unequal length")));
    }
    if rows.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("matrix entry"));
    }
    Ok(DMatrix::from_row_iterator(rows.len(), cols, rows.iter().flatten().copied()))
}

impl ProblemFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidProblem(e.to_string()))
    }

    pub fn system(&self) -> Result<SystemSpec> {
        SystemSpec::new(
            rows_to_matrix("A", &self.a)?,
            rows_to_matrix("B", &self.b)?,
            self.dt,
            rows_to_matrix("X.H", &self.x.h)?,
            rows_to_matrix("U.H", &self.u.h)?,
        )
    }

    pub fn queries(&self) -> Vec<QueryPoint> {
        self.queries
            .iter()
            .enumerate()
            .map(|(i, q)| QueryPoint {
                x0: DVector::from_vec(q.x0.clone()),
                u0: DVector::from_vec(q.u0.clone()),
                label: q.label.clone().unwrap_or_else(|| format!("query{i}")),
            })
            .collect()
    }
}

/// Zero-order-hold discretization `(exp(A dt), int_0^dt exp(A s) ds B)`.
pub fn discretize(s: &SystemSpec) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let ahat = point_exp(&(&s.a * s.dt))?.value;
    let mut bhat = DMatrix::zeros(s.state_dim(), s.input_dim());
    for i in 0..s.input_dim() {
        let col = augmented_phi(&s.a, &s.b.column(i).into_owned(), s.dt)?;
        bhat.set_column(i, &col);
    }
    Ok((ahat, bhat))
}

/// One facet problem per row of `H`.
pub fn facet_problems(s: &SystemSpec, q: &QueryPoint) -> Result<Vec<FacetProblem>> {
    s.check_query(q)?;
    (0..s.facet_count())
        .map(|j| {
            FacetProblem::new(
                s.a.clone(),
                s.b.clone(),
                q.x0.clone(),
                q.u0.clone(),
                s.hx.row(j).transpose(),
                s.dt,
            )
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Satisfied,
    Violated,
    Inconclusive,
}

impl Verdict {
    /// Satisfied iff `f_upper <= 1`, certified violated iff `f_lower > 1`.
    pub fn of(r: &SolveReport) -> Verdict {
        if r.f_upper <= 1.0 {
            Verdict::Satisfied
        } else if r.f_lower > 1.0 {
            Verdict::Violated
        } else {
            Verdict::Inconclusive
        }
    }

    pub fn combine(verdicts: impl IntoIterator<Item = Verdict>) -> Verdict {
        let mut out = Verdict::Satisfied;
        for v in verdicts {
            match v {
                Verdict::Violated => return Verdict::Violated,
                Verdict::Inconclusive => out = Verdict::Inconclusive,
                Verdict::Satisfied => {}
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Membership {
    pub x0_in_x: bool,
    pub u0_in_u: bool,
    /// `A_hat x0 + B_hat u0 in X`.
    pub successor_in_x: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FacetReport {
    pub j: usize,
    #[serde(with = "reals")]
    pub h: Vec<f64>,
    #[serde(with = "real")]
    pub f_upper: f64,
    #[serde(with = "real")]
    pub f_lower: f64,
    #[serde(with = "real")]
    pub gap: f64,
    pub satisfied: bool,
    pub verdict: Verdict,
    pub bisections: u64,
    pub convex_ops: u64,
    pub status: SolveStatus,
    #[serde(with = "real")]
    pub witness_t: f64,
    #[serde(with = "real")]
    pub time_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryReport {
    pub query: String,
    pub membership: Membership,
    pub facets: Vec<FacetReport>,
    pub intersample_ok: bool,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    #[serde(with = "real")]
    pub epsilon: f64,
    pub k: u32,
    pub l: u32,
    pub overestimator: OverestimatorKind,
    pub rounding: Rounding,
}

impl From<&SolverConfig> for ConfigEcho {
    fn from(c: &SolverConfig) -> Self {
        ConfigEcho {
            epsilon: c.epsilon,
            k: c.exp.k,
            l: c.exp.l,
            overestimator: c.overestimator,
            rounding: c.rounding,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub config: ConfigEcho,
    pub queries: Vec<QueryReport>,
}

impl VerificationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidProblem(e.to_string()))
    }

    pub fn verdict(&self) -> Verdict {
        Verdict::combine(self.queries.iter().map(|q| q.verdict))
    }
}

fn inside(h: &DMatrix<f64>, x: &DVector<f64>) -> bool {
    (h * x).iter().all(|v| *v <= 1.0 + MEMBERSHIP_SLACK)
}

/// Membership of the query and its successor sample.
pub fn membership(s: &SystemSpec, q: &QueryPoint) -> Result<Membership> {
    s.check_query(q)?;
    let (ahat, bhat) = discretize(s)?;
    let next = &ahat * &q.x0 + &bhat * &q.u0;
    Ok(Membership {
        x0_in_x: inside(&s.hx, &q.x0),
        u0_in_u: inside(&s.hu, &q.u0),
        successor_in_x: inside(&s.hx, &next),
    })
}

/// Solves every selected facet (all when `facets` is `None`) on up to `jobs`
/// threads. Membership is reported alongside and does not gate the solves.
pub fn verify(
    s: &SystemSpec,
    q: &QueryPoint,
    cfg: &SolverConfig,
    facets: Option<&[usize]>,
    jobs: usize,
) -> Result<QueryReport> {
    verify_inner(s, q, cfg, facets, jobs, false).map(|(r, _)| r)
}

/// Solver traces keyed by facet index.
pub type FacetTraces = Vec<(usize, Vec<TraceEvent>)>;

/// [`verify`] that also returns each solved facet's trace, in facet order.
pub fn verify_traced(
    s: &SystemSpec,
    q: &QueryPoint,
    cfg: &SolverConfig,
    facets: Option<&[usize]>,
    jobs: usize,
) -> Result<(QueryReport, FacetTraces)> {
    verify_inner(s, q, cfg, facets, jobs, true)
}

fn verify_inner(
    s: &SystemSpec,
    q: &QueryPoint,
    cfg: &SolverConfig,
    facets: Option<&[usize]>,
    jobs: usize,
    traced: bool,
) -> Result<(QueryReport, FacetTraces)> {
    let membership = membership(s, q)?;
    let problems = facet_problems(s, q)?;
    let selected: Vec<usize> = match facets {
        Some(js) => {
            if let Some(bad) = js.iter().find(|j| **j >= problems.len()) {
                return Err(Error::InvalidProblem(format!(
                    "facet {bad} out of range (0..{})",
                    problems.len()
                )));
            }
            js.to_vec()
        }
        None => (0..problems.len()).collect(),
    };
    let solved = par_map(&selected, jobs, |&j| {
        if traced {
            solve_with_trace(&problems[j], cfg).map(|(r, t)| (j, r, t))
        } else {
            solve(&problems[j], cfg).map(|r| (j, r, Vec::new()))
        }
    });
    let mut reports = Vec::with_capacity(solved.len());
    let mut traces = Vec::new();
    for item in solved {
        let (j, r, trace) = item?;
        if traced {
            traces.push((j, trace));
        }
        let verdict = Verdict::of(&r);
        reports.push(FacetReport {
            j,
            h: problems[j].h().iter().copied().collect(),
            f_upper: r.f_upper,
            f_lower: r.f_lower,
            gap: r.gap,
            satisfied: verdict == Verdict::Satisfied,
            verdict,
            bisections: r.bisections,
            convex_ops: r.convex_ops,
            status: r.status,
            witness_t: r.witness_t,
            time_ms: r.wall_time.as_secs_f64() * 1e3,
        });
    }
    let verdict = Verdict::combine(reports.iter().map(|f| f.verdict));
    let report = QueryReport {
        query: q.label.clone(),
        membership,
        intersample_ok: verdict == Verdict::Satisfied,
        verdict,
        facets: reports,
    };
    Ok((report, traces))
}

pub fn verify_all(
    s: &SystemSpec,
    queries: &[QueryPoint],
    cfg: &SolverConfig,
    facets: Option<&[usize]>,
    jobs: usize,
) -> Result<VerificationReport> {
    let queries = queries
        .iter()
        .map(|q| verify(s, q, cfg, facets, jobs))
        .collect::<Result<Vec<_>>>()?;
    Ok(VerificationReport {
        config: cfg.into(),
        queries,
    })
}

/// Order-preserving map over `items` on up to `jobs` scoped threads.
fn par_map<T: Sync, R: Send>(items: &[T], jobs: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    if jobs <= 1 || items.len() <= 1 {
        return items.iter().map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<R>>> = items.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..jobs.min(items.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(item) = items.get(i) else { break };
                let r = f(item);
                *slots[i].lock().expect("slot lock") = Some(r);
            });
        }
    });
    slots
        .into_iter()
        .map(|m| m.into_inner().expect("slot lock").expect("every slot filled"))
        .collect()
}

/// `f(t)` and the state along the sampling period.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRow {
    pub t: f64,
    pub f: f64,
    pub x: DVector<f64>,
}

/// `n >= 2` uniform samples of facet `j` on `[0, dt]`, endpoints included.
pub fn sample_outputs(s: &SystemSpec, q: &QueryPoint, j: usize, n: usize) -> Result<Vec<SampleRow>> {
    if n < 2 {
        return Err(Error::InvalidProblem(format!("need at least 2 samples, got {n}")));
    }
    let problems = facet_problems(s, q)?;
    let p = problems
        .get(j)
        .ok_or_else(|| Error::InvalidProblem(format!("facet {j} out of range (0..{})", problems.len())))?;
    (0..n)
        .map(|i| {
            let t = if i == n - 1 {
                s.dt
            } else {
                s.dt * i as f64 / (n - 1) as f64
            };
            Ok(SampleRow {
                t,
                f: p.eval_f(t)?,
                x: p.state(t)?,
            })
        })
        .collect()
}

/// Writes samples as CSV with header `t,f,x1..xn`.
pub fn write_csv<W: Write>(rows: &[SampleRow], out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let n = rows.first().map_or(0, |r| r.x.len());
    let mut header = vec!["t".to_string(), "f".to_string()];
    header.extend((1..=n).map(|i| format!("x{i}")));
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![fmt_real(r.t), fmt_real(r.f)];
        rec.extend(r.x.iter().map(|x| fmt_real(*x)));
        w.write_record(&rec)?;
    }
    w.flush()
}

/// Decimal with 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

mod real {
    use serde::de::Deserializer;
    use serde::ser::{Error as _, Serializer};
    use serde::{Deserialize, Serialize};
    use serde_json::value::RawValue;

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            RawValue::from_string(super::fmt_real(*x))
                .map_err(S::Error::custom)?
                .serialize(s)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

mod reals {
    use serde::de::Deserializer;
    use serde::ser::{SerializeSeq, Serializer};
    use serde::Deserialize;

    struct Real(f64);

    impl serde::Serialize for Real {
        fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
            super::real::serialize(&self.0, s)
        }
    }

    pub fn serialize<S: Serializer>(xs: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(xs.len()))?;
        for x in xs {
            seq.serialize_element(&Real(*x))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Vec::<f64>::deserialize(d)
    }
}
