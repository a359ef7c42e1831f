use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use intersample::solver::TraceEvent;
use intersample::verify::{self, ProblemFile, QueryReport, Verdict};
use intersample::{ExpParams, OverestimatorKind, SolverConfig, VerificationReport};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "intersample", version, about = "Certify that sampled LTI trajectories stay inside a polytope between samples")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bound the worst inter-sample excursion for every query and facet.
    Verify(VerifyArgs),
}

#[derive(clap::Args)]
struct VerifyArgs {
    /// Problem file (JSON with A, B, dt, X, U, queries).
    spec: PathBuf,
    #[arg(long, default_value_t = 1e-6)]
    epsilon: f64,
    /// Taylor order of the interval exponential.
    #[arg(long, default_value_t = 10)]
    k: u32,
    /// Scaling exponent of the interval exponential.
    #[arg(long, default_value_t = 10)]
    l: u32,
    #[arg(long, default_value = "pwq", value_parser = parse_kind)]
    overestimator: OverestimatorKind,
    /// Restrict to these facet indices (repeatable).
    #[arg(long = "facet")]
    facets: Vec<usize>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Write sampled f(t) and state for the selected (or worst) facet.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long, default_value_t = 200)]
    samples: usize,
    /// Emit solver events as JSON lines, to PATH or stderr.
    #[arg(long, value_name = "PATH", num_args = 0..=1)]
    trace: Option<Option<PathBuf>>,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

fn parse_kind(s: &str) -> Result<OverestimatorKind, String> {
    s.parse()
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error(transparent)]
    Core(#[from] intersample::Error),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Serialize)]
struct TraceLine<'a> {
    query: &'a str,
    facet: usize,
    #[serde(flatten)]
    event: &'a TraceEvent,
}

fn main() -> ExitCode {
    // Usage errors share the input-error code; clap's own exit code 2 would
    // read as inconclusive.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 3 } else { 0 });
        }
    };
    let Command::Verify(args) = cli.command;
    match run(&args) {
        Ok(Verdict::Satisfied) => ExitCode::from(0),
        Ok(Verdict::Violated) => ExitCode::from(1),
        Ok(Verdict::Inconclusive) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}

fn run(args: &VerifyArgs) -> Result<Verdict, CliError> {
    let text = std::fs::read_to_string(&args.spec).map_err(io_err(&args.spec))?;
    let problem = ProblemFile::from_json(&text)?;
    let system = problem.system()?;
    let queries = problem.queries();
    let cfg = SolverConfig {
        exp: ExpParams::new(args.k, args.l),
        ..SolverConfig::default()
    }
    .with_epsilon(args.epsilon)
    .with_overestimator(args.overestimator);
    let facets = (!args.facets.is_empty()).then_some(args.facets.as_slice());
    let jobs = args.jobs.max(1);

    let mut trace_out: Option<Box<dyn Write>> = match &args.trace {
        None => None,
        Some(None) => Some(Box::new(io::stderr().lock())),
        Some(Some(p)) => Some(Box::new(BufWriter::new(File::create(p).map_err(io_err(p))?))),
    };

    let mut reports = Vec::with_capacity(queries.len());
    for q in &queries {
        let report = match trace_out.as_mut() {
            Some(out) => {
                let (report, traces) = verify::verify_traced(&system, q, &cfg, facets, jobs)?;
                write_trace(out, &q.label, &traces).map_err(io_err(Path::new("trace")))?;
                report
            }
            None => verify::verify(&system, q, &cfg, facets, jobs)?,
        };
        reports.push(report);
    }
    if let Some(out) = trace_out.as_mut() {
        out.flush().map_err(io_err(Path::new("trace")))?;
    }

    if let Some(path) = &args.csv {
        for (q, report) in queries.iter().zip(&reports) {
            let Some(j) = csv_facet(report) else { continue };
            let target = if queries.len() == 1 {
                path.clone()
            } else {
                labelled(path, &q.label)
            };
            let rows = verify::sample_outputs(&system, q, j, args.samples)?;
            let file = File::create(&target).map_err(io_err(&target))?;
            verify::write_csv(&rows, BufWriter::new(file)).map_err(io_err(&target))?;
        }
    }

    let report = VerificationReport {
        config: (&cfg).into(),
        queries: reports,
    };
    let json = report.to_json();
    match &args.output {
        Some(p) => std::fs::write(p, json + "\n").map_err(io_err(p))?,
        None => println!("{json}"),
    }
    for q in &report.queries {
        for f in &q.facets {
            eprintln!(
                "{} facet {}: f_upper {} f_lower {} {:?}",
                q.query,
                f.j,
                verify::fmt_real(f.f_upper),
                verify::fmt_real(f.f_lower),
                f.verdict
            );
        }
    }
    Ok(report.verdict())
}

fn write_trace(out: &mut dyn Write, query: &str, traces: &[(usize, Vec<TraceEvent>)]) -> io::Result<()> {
    for (facet, events) in traces {
        for event in events {
            let line = TraceLine {
                query,
                facet: *facet,
                event,
            };
            serde_json::to_writer(&mut *out, &line)?;
            out.write_all(b"\n")?;
        }
    }
    Ok(())
}

/// The facet plotted for a query: the solved facet with the largest upper
/// bound.
fn csv_facet(report: &QueryReport) -> Option<usize> {
    report
        .facets
        .iter()
        .max_by(|a, b| a.f_upper.total_cmp(&b.f_upper).then(b.j.cmp(&a.j)))
        .map(|f| f.j)
}

fn labelled(path: &Path, label: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("samples");
    let ext = path.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    path.with_file_name(format!("{stem}.{label}.{ext}"))
}
