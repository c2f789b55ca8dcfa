//! Command-line front end for `stablepoisson-core`.
//!
//! Problem files are TOML documents:
//!
//! ```toml
//! surface = "sphere"        # or "torus"
//! field = "(z - 0.5)*(z + 0.5)"
//!
//! [grid]                    # optional, defaults to 512 x 512
//! n1 = 512
//! n2 = 512
//!
//! [tolerances]              # optional
//! g_tol = 1e-3
//! rel_tol = 1e-3
//! abs_tol = 1e-2
//! eps0 = 0.01               # omit to derive from the zero set
//! ```
//!
//! Every command prints one JSON envelope (or DOT for `tree --dot`) and
//! exits 0; invalid input and validation failures print
//! `{"error": {stage, kind, detail}}` and exit 2.

mod json;
mod problem;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};
use stablepoisson_core::classify::{self, Mode, Status};
use stablepoisson_core::deform::{self, DeformMode};
use stablepoisson_core::{compute_invariants, PipelineError, Stage, SurfaceChart};

pub use json::{num, render};
pub use problem::{load_problem, Problem};

pub const TOOL: &str = "stablepoisson";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Exit status for invalid input or failed validation.
pub const EXIT_INVALID: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "stablepoisson", version, about = "Classifying invariants of stable Poisson structures on the sphere and torus")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ClassifyMode {
    Preserving,
    Reversing,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DeformKind {
    Volume,
    Period,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Zero curves, periods, volume and signed graph of one structure.
    Invariants {
        problem: PathBuf,
        /// Include the zero-curve polylines.
        #[arg(long)]
        curves: bool,
    },
    /// Decide equivalence of two structures.
    Classify {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, value_enum, default_value = "preserving")]
        mode: ClassifyMode,
    },
    /// One-curve sphere structure with the given period and volume.
    NormalForm {
        #[arg(long = "T", allow_negative_numbers = true)]
        period: f64,
        #[arg(long = "V", allow_negative_numbers = true)]
        volume: f64,
    },
    /// Signed region-adjacency graph.
    Tree {
        problem: PathBuf,
        /// Print Graphviz DOT instead of JSON.
        #[arg(long)]
        dot: bool,
    },
    /// Poisson cohomology dimensions and generators.
    Cohomology { problem: PathBuf },
    /// Apply a deformation and report the change of invariants.
    Deform {
        problem: PathBuf,
        #[arg(long, value_enum)]
        mode: DeformKind,
        /// Target curve (period mode).
        #[arg(long, default_value_t = 0)]
        curve: usize,
        #[arg(long, allow_negative_numbers = true)]
        epsilon: f64,
    },
}

/// A failure reported as `{"error": {stage, kind, detail}}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub stage: String,
    pub kind: String,
    pub detail: String,
}

impl CliError {
    pub fn input(kind: &str, detail: impl Into<String>) -> Self {
        CliError {
            stage: "input".into(),
            kind: kind.into(),
            detail: detail.into(),
        }
    }

    pub fn to_json(&self) -> Value {
        json!({"error": {"stage": self.stage, "kind": self.kind, "detail": self.detail}})
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        CliError {
            stage: e.stage.as_str().into(),
            kind: e.kind().into(),
            detail: e.error.to_string(),
        }
    }
}

fn at(stage: Stage) -> impl Fn(stablepoisson_core::Error) -> CliError {
    move |e| PipelineError::new(stage, e).into()
}

/// What a command prints.
#[derive(Debug, Clone, PartialEq)]
pub enum Output {
    Json(Value),
    Text(String),
}

impl Output {
    pub fn into_string(self) -> String {
        match self {
            Output::Json(v) => render(&v),
            Output::Text(s) => s,
        }
    }
}

/// Runs a parsed command line; returns the text to print and the exit code.
pub fn run(cli: &Cli) -> (String, i32) {
    match execute(&cli.command) {
        Ok(out) => (out.into_string(), 0),
        Err(e) => (render(&e.to_json()), EXIT_INVALID),
    }
}

pub fn execute(command: &Command) -> Result<Output, CliError> {
    match command {
        Command::Invariants { problem, curves } => cmd_invariants(problem, *curves),
        Command::Classify { a, b, mode } => cmd_classify(a, b, *mode),
        Command::NormalForm { period, volume } => cmd_normal_form(*period, *volume),
        Command::Tree { problem, dot } => cmd_tree(problem, *dot),
        Command::Cohomology { problem } => cmd_cohomology(problem),
        Command::Deform {
            problem,
            mode,
            curve,
            epsilon,
        } => cmd_deform(problem, *mode, *curve, *epsilon),
    }
}

fn envelope(input: Value, result: Value, warnings: Vec<String>) -> Value {
    json!({
        "tool": TOOL,
        "version": VERSION,
        "input": input,
        "result": result,
        "warnings": warnings,
    })
}

fn record_for(p: &Problem) -> Result<stablepoisson_core::InvariantRecord, CliError> {
    Ok(compute_invariants(
        &p.field,
        &SurfaceChart::new(p.surface),
        &p.grid,
        &p.tolerances,
    )?)
}

fn record_warnings(r: &stablepoisson_core::InvariantRecord, p: &Problem, out: &mut Vec<String>) {
    if r.volume_error_estimate > 0.5 * p.tolerances.abs_tol {
        out.push(format!(
            "volume error estimate {} exceeds half the volume tolerance",
            stablepoisson_core::significant(r.volume_error_estimate, 3)
        ));
    }
    if r.surface == stablepoisson_core::SurfaceKind::Sphere {
        let near = r
            .zero_set
            .curves
            .iter()
            .any(|c| c.points.iter().any(|q| q.s.abs() > 0.95));
        if near {
            out.push("a zero curve comes within 5% of a pole; consider rotating the field".into());
        }
    }
}

pub fn cmd_invariants(path: &Path, curves: bool) -> Result<Output, CliError> {
    let p = load_problem(path)?;
    let r = record_for(&p)?;
    let mut warnings = Vec::new();
    record_warnings(&r, &p, &mut warnings);
    Ok(Output::Json(envelope(
        p.echo(path),
        json::record(&r, curves),
        warnings,
    )))
}

pub fn cmd_classify(a: &Path, b: &Path, mode: ClassifyMode) -> Result<Output, CliError> {
    let pa = load_problem(a)?;
    let pb = load_problem(b)?;
    if pa.surface != pb.surface {
        return Err(at(Stage::Classify)(stablepoisson_core::Error::SurfaceMismatch {
            expected: pa.surface,
            found: pb.surface,
        }));
    }
    let ra = record_for(&pa)?;
    let rb = record_for(&pb)?;
    let rel = pa.tolerances.rel_tol;
    let abs = pa.tolerances.abs_tol;
    let mut warnings = Vec::new();
    record_warnings(&ra, &pa, &mut warnings);
    record_warnings(&rb, &pb, &mut warnings);
    let modes: &[Mode] = match mode {
        ClassifyMode::Preserving => &[Mode::Preserving],
        ClassifyMode::Reversing => &[Mode::Reversing],
        ClassifyMode::Both => &[Mode::Preserving, Mode::Reversing],
    };
    let mut verdicts = Map::new();
    for &m in modes {
        let v = classify::classify_pair(&ra, &rb, m, rel, abs).map_err(at(Stage::Classify))?;
        match v.status {
            Status::Undecided => warnings.push(format!(
                "{}: invariants match, but they are not known to be complete on the torus",
                m.as_str()
            )),
            Status::Equivalent => warnings.push(format!(
                "{}: EQUIVALENT holds up to the stated numeric tolerances",
                m.as_str()
            )),
            Status::NotEquivalent => {}
        }
        verdicts.insert(m.as_str().into(), json::verdict(&v));
    }
    let result = if verdicts.len() == 1 {
        verdicts.into_iter().next().map(|(_, v)| v).unwrap_or(Value::Null)
    } else {
        Value::Object(verdicts)
    };
    let input = json!({"a": pa.echo(a), "b": pb.echo(b), "mode": format!("{mode:?}").to_lowercase()});
    Ok(Output::Json(envelope(input, result, warnings)))
}

pub fn cmd_normal_form(period: f64, volume: f64) -> Result<Output, CliError> {
    let nf = classify::normal_form(period, volume).map_err(at(Stage::Classify))?;
    let result = json!({
        "field": nf.text,
        "coefficient": num(nf.coefficient),
        "beta": num(nf.beta),
    });
    let input = json!({"T": num(period), "V": num(volume)});
    Ok(Output::Json(envelope(input, result, Vec::new())))
}

pub fn cmd_tree(path: &Path, dot: bool) -> Result<Output, CliError> {
    let p = load_problem(path)?;
    let r = record_for(&p)?;
    if dot {
        return Ok(Output::Text(r.topology.to_dot()));
    }
    let mut warnings = Vec::new();
    record_warnings(&r, &p, &mut warnings);
    Ok(Output::Json(envelope(
        p.echo(path),
        json::graph(&r.topology, p.tolerances.weight_quantum),
        warnings,
    )))
}

pub fn cmd_cohomology(path: &Path) -> Result<Output, CliError> {
    let p = load_problem(path)?;
    let r = record_for(&p)?;
    let report = classify::cohomology_report(&r);
    let mut warnings = Vec::new();
    record_warnings(&r, &p, &mut warnings);
    Ok(Output::Json(envelope(
        p.echo(path),
        json::cohomology(&report, &r),
        warnings,
    )))
}

pub fn cmd_deform(path: &Path, kind: DeformKind, curve: usize, epsilon: f64) -> Result<Output, CliError> {
    let p = load_problem(path)?;
    let mode = match kind {
        DeformKind::Volume => DeformMode::Volume { epsilon },
        DeformKind::Period => DeformMode::Period { curve, epsilon },
    };
    let result = deform::deformation_report(&p.field, &p.grid, &p.tolerances, mode)?;
    let mut warnings = Vec::new();
    if matches!(kind, DeformKind::Volume) && epsilon.abs() > result.safe_bound {
        warnings.push(format!(
            "|epsilon| exceeds the safe bound {}",
            stablepoisson_core::significant(result.safe_bound, 6)
        ));
    }
    let mut input = p.echo(path);
    if let Value::Object(m) = &mut input {
        m.insert("mode".into(), json!(format!("{kind:?}").to_lowercase()));
        if matches!(kind, DeformKind::Period) {
            m.insert("curve".into(), json!(curve));
        }
        m.insert("epsilon".into(), num(epsilon));
    }
    Ok(Output::Json(envelope(input, json::deformation(&result), warnings)))
}
