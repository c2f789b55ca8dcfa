use std::path::Path;

use serde::Deserialize;
use serde_json::{json, Value};
use stablepoisson_core::{parse_field, GridSpec, ScalarField, Stage, SurfaceKind, Tolerances};

use crate::{at, num, CliError};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    surface: RawSurface,
    field: String,
    grid: Option<RawGrid>,
    tolerances: Option<RawTolerances>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "lowercase")]
enum RawSurface {
    Sphere,
    Torus,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    n1: usize,
    n2: usize,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTolerances {
    g_tol: Option<f64>,
    rel_tol: Option<f64>,
    abs_tol: Option<f64>,
    eps0: Option<f64>,
}

/// A validated problem file.
#[derive(Debug, Clone)]
pub struct Problem {
    pub surface: SurfaceKind,
    pub source: String,
    pub field: ScalarField,
    pub grid: GridSpec,
    pub tolerances: Tolerances,
}

impl Problem {
    pub fn from_toml(text: &str) -> Result<Problem, CliError> {
        let raw: RawProblem =
            toml::from_str(text).map_err(|e| CliError::input("InvalidProblem", e.message()))?;
        let surface = match raw.surface {
            RawSurface::Sphere => SurfaceKind::Sphere,
            RawSurface::Torus => SurfaceKind::Torus,
        };
        let field = parse_field(&raw.field, surface).map_err(at(Stage::Parse))?;
        let grid = match raw.grid {
            Some(g) => GridSpec::new(g.n1, g.n2).map_err(at(Stage::Sample))?,
            None => GridSpec::default(),
        };
        let t = raw.tolerances.unwrap_or_default();
        let defaults = Tolerances::default();
        let positive = |name: &str, v: Option<f64>, d: f64| -> Result<f64, CliError> {
            match v {
                None => Ok(d),
                Some(x) if x > 0.0 && x.is_finite() => Ok(x),
                Some(x) => Err(CliError::input(
                    "InvalidProblem",
                    format!("tolerance `{name}` must be positive, got {x}"),
                )),
            }
        };
        let tolerances = Tolerances {
            g_tol: positive("g_tol", t.g_tol, defaults.g_tol)?,
            rel_tol: positive("rel_tol", t.rel_tol, defaults.rel_tol)?,
            abs_tol: positive("abs_tol", t.abs_tol, defaults.abs_tol)?,
            eps0: match t.eps0 {
                None => None,
                Some(e) => Some(positive("eps0", Some(e), 0.0)?),
            },
            weight_quantum: defaults.weight_quantum,
        };
        Ok(Problem {
            surface,
            source: raw.field,
            field,
            grid,
            tolerances,
        })
    }

    /// Input echo for the output envelope.
    pub fn echo(&self, path: &Path) -> Value {
        let t = &self.tolerances;
        json!({
            "problem": path.display().to_string(),
            "surface": self.surface.name(),
            "field": self.source,
            "grid": {"n1": self.grid.n1, "n2": self.grid.n2},
            "tolerances": {
                "g_tol": num(t.g_tol),
                "rel_tol": num(t.rel_tol),
                "abs_tol": num(t.abs_tol),
                "eps0": t.eps0.map(num),
            },
        })
    }
}

pub fn load_problem(path: &Path) -> Result<Problem, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::input("Unreadable", format!("{}: {e}", path.display())))?;
    Problem::from_toml(&text)
}
