//! Equivalence verdicts, sphere normal forms, moduli coordinates and
//! Poisson cohomology data.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::chart::SurfaceKind;
use crate::dsl::{Expr, ScalarField, Var};
use crate::invariants::InvariantRecord;
use crate::math::{self, TAU};
use crate::topology::{self, CanonicalCode, DEFAULT_WEIGHT_QUANTUM};
use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Preserving,
    Reversing,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Preserving => "preserving",
            Mode::Reversing => "reversing",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Equivalent,
    NotEquivalent,
    Undecided,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Equivalent => "EQUIVALENT",
            Status::NotEquivalent => "NOT_EQUIVALENT",
            Status::Undecided => "UNDECIDED",
        }
    }
}

/// A compared quantity.
#[derive(Debug, Clone, PartialEq)]
pub enum Quantity {
    Count(usize),
    Real(f64),
    Text(String),
}

/// One row of the comparison table.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    /// `n`, `topology`, `nontrivial_curves`, `period` or `volume`.
    pub invariant: &'static str,
    /// Curve pair for period rows.
    pub curves: Option<(usize, usize)>,
    pub a: Quantity,
    pub b: Quantity,
    /// Tolerance minus discrepancy for numeric rows; `None` for exact rows.
    pub margin: Option<f64>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub status: Status,
    pub mode: Mode,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub comparisons: Vec<Comparison>,
    /// `(curve in a, curve in b)`; empty unless topology matched.
    pub matching: Vec<(usize, usize)>,
}

impl Verdict {
    /// The first failing comparison.
    pub fn witness(&self) -> Option<&Comparison> {
        self.comparisons.iter().find(|c| !c.passed)
    }
}

/// Decides whether `a` and `b` are globally equivalent.
///
/// In reversing mode `b` is replaced by the record of its pushforward under
/// an orientation-reversing map before the preserving comparison.
pub fn classify_pair(
    a: &InvariantRecord,
    b: &InvariantRecord,
    mode: Mode,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<Verdict, Error> {
    if a.surface != b.surface {
        return Err(Error::SurfaceMismatch {
            expected: a.surface,
            found: b.surface,
        });
    }
    let reversed;
    let b = match mode {
        Mode::Preserving => b,
        Mode::Reversing => {
            reversed = b.reversed();
            &reversed
        }
    };
    let mut verdict = Verdict {
        status: Status::NotEquivalent,
        mode,
        rel_tol,
        abs_tol,
        comparisons: Vec::new(),
        matching: Vec::new(),
    };
    let rows = &mut verdict.comparisons;

    let n_ok = a.n == b.n;
    rows.push(Comparison {
        invariant: "n",
        curves: None,
        a: Quantity::Count(a.n),
        b: Quantity::Count(b.n),
        margin: None,
        passed: n_ok,
    });
    if !n_ok {
        return Ok(verdict);
    }

    let matched = topology::best_match(&a.topology, &b.topology);
    rows.push(Comparison {
        invariant: "topology",
        curves: None,
        a: Quantity::Text(topology::topology_code(&a.topology).0),
        b: Quantity::Text(topology::topology_code(&b.topology).0),
        margin: None,
        passed: matched.is_some(),
    });
    let Some(matched) = matched else {
        return Ok(verdict);
    };
    if a.surface == SurfaceKind::Torus {
        let (ca, cb) = (
            a.topology.nontrivial_curve_count(),
            b.topology.nontrivial_curve_count(),
        );
        rows.push(Comparison {
            invariant: "nontrivial_curves",
            curves: None,
            a: Quantity::Count(ca),
            b: Quantity::Count(cb),
            margin: None,
            passed: ca == cb,
        });
        if ca != cb {
            return Ok(verdict);
        }
    }

    let mut periods_ok = true;
    for &(i, j) in &matched.curves {
        let (ta, tb) = (a.periods[i], b.periods[j]);
        let margin = rel_tol * ta.max(tb) - math::abs(ta - tb);
        periods_ok &= margin >= 0.0;
        rows.push(Comparison {
            invariant: "period",
            curves: Some((i, j)),
            a: Quantity::Real(ta),
            b: Quantity::Real(tb),
            margin: Some(margin),
            passed: margin >= 0.0,
        });
    }
    if !periods_ok {
        return Ok(verdict);
    }
    verdict.matching = matched.curves;

    let margin = abs_tol - math::abs(a.volume - b.volume);
    verdict.comparisons.push(Comparison {
        invariant: "volume",
        curves: None,
        a: Quantity::Real(a.volume),
        b: Quantity::Real(b.volume),
        margin: Some(margin),
        passed: margin >= 0.0,
    });
    if margin < 0.0 {
        return Ok(verdict);
    }
    verdict.status = match a.surface {
        SurfaceKind::Sphere => Status::Equivalent,
        SurfaceKind::Torus => Status::Undecided,
    };
    Ok(verdict)
}

/// The one-curve sphere structure `(2π/T)(z − β)` with prescribed period and volume.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalForm {
    pub coefficient: f64,
    pub beta: f64,
    pub field: ScalarField,
    /// Canonical text, e.g. `z`, `2*z`, `(z - 0.5)`, `2*(z - 0.5)`.
    pub text: String,
}

/// Normal form with modular period `T` and regularized volume `V`.
pub fn normal_form(period: f64, volume: f64) -> Result<NormalForm, Error> {
    if !(period > 0.0 && period.is_finite()) {
        return Err(Error::InvalidParameter(format!("period must be positive, got {period}")));
    }
    if !volume.is_finite() {
        return Err(Error::InvalidParameter(format!("volume must be finite, got {volume}")));
    }
    let a = TAU / period;
    let r = volume / period;
    let beta = if math::abs(r) > 700.0 {
        math::tanh(0.5 * r)
    } else {
        let e = math::exp(r);
        (e - 1.0) / (e + 1.0)
    };
    let expr = Expr::mul(Expr::Const(a), Expr::sub(Expr::var(Var::Z), Expr::Const(beta)));
    let field = ScalarField::new(expr, SurfaceKind::Sphere)?;
    Ok(NormalForm {
        coefficient: a,
        beta,
        field,
        text: normal_form_text(a, beta),
    })
}

fn normal_form_text(a: f64, beta: f64) -> String {
    let coeff = math::significant(a, 12);
    let shift = math::significant(math::abs(beta), 12);
    let inner = if shift == "0" {
        String::from("z")
    } else if beta > 0.0 {
        format!("(z - {shift})")
    } else {
        format!("(z + {shift})")
    };
    if coeff == "1" {
        inner
    } else {
        format!("{coeff}*{inner}")
    }
}

/// Canonical signed tree, sorted edge periods and volume.
#[derive(Debug, Clone, PartialEq)]
pub struct ModuliCoordinates {
    pub code: CanonicalCode,
    pub periods: Vec<f64>,
    pub volume: f64,
}

pub fn moduli_coordinates(a: &InvariantRecord) -> Result<ModuliCoordinates, Error> {
    if a.surface != SurfaceKind::Sphere {
        return Err(Error::TorusUnsupported);
    }
    let mut periods = a.periods.clone();
    periods.sort_by(f64::total_cmp);
    Ok(ModuliCoordinates {
        code: topology::canonical_code(&a.topology, DEFAULT_WEIGHT_QUANTUM),
        periods,
        volume: a.volume,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CohomologyReport {
    pub dims: [usize; 3],
    pub generators: [Vec<String>; 3],
    /// Zero curves that are nonzero in homology.
    pub nontrivial_curve_count: usize,
}

/// Dimensions `(1, 2g+n, n+1)` with generator descriptions.
pub fn cohomology_report(a: &InvariantRecord) -> CohomologyReport {
    let g = a.genus as usize;
    let n = a.n;
    let h0 = alloc::vec![String::from("constant functions")];
    let mut h1: Vec<String> = (0..n)
        .map(|i| format!("modular vector field localized at curve {i}"))
        .collect();
    if a.surface == SurfaceKind::Torus {
        h1.push(String::from("Hamiltonian lift of du"));
        h1.push(String::from("Hamiltonian lift of dv"));
    }
    let mut h2 = alloc::vec![String::from("reference bivector pi_0")];
    h2.extend((0..n).map(|i| format!("bump bivector pi_{} around curve {i}", i + 1)));
    let nontrivial = match a.surface {
        SurfaceKind::Sphere => 0,
        SurfaceKind::Torus => a.topology.nontrivial_curve_count(),
    };
    CohomologyReport {
        dims: [1, 2 * g + n, n + 1],
        generators: [h0, h1, h2],
        nontrivial_curve_count: nontrivial,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::Field;
    use crate::{compute_invariants, parse_field, GridSpec, SurfaceChart, Tolerances};
    use core::f64::consts::PI;

    fn record(text: &str) -> InvariantRecord {
        let f = parse_field(text, SurfaceKind::Sphere).unwrap();
        compute_invariants(&f, &SurfaceChart::sphere(), &GridSpec::new(256, 256).unwrap(), &Tolerances::default())
            .unwrap()
    }

    #[test]
    fn normal_form_examples() {
        let nf = normal_form(TAU, 0.0).unwrap();
        assert_eq!(nf.text, "z");
        let nf = normal_form(TAU, TAU * 3f64.ln()).unwrap();
        assert!((nf.beta - 0.5).abs() < 1e-12);
        assert_eq!(nf.text, "(z - 0.5)");
        assert_eq!(normal_form(PI, 0.0).unwrap().text, "2*z");
        assert_eq!(normal_form(PI, -PI * 3f64.ln()).unwrap().text, "2*(z + 0.5)");
        assert!(normal_form(-1.0, 0.0).is_err());
        let far = normal_form(1.0, 1e6).unwrap();
        assert!(far.beta <= 1.0 && far.beta > 0.999);
        let v = far.field.eval(crate::ChartPoint::new(0.0, 0.0)).unwrap();
        assert!(v.is_finite());
    }

    #[test]
    fn classify_examples() {
        let a = record("z - 0.5");
        let v = classify_pair(&a, &a, Mode::Preserving, 1e-3, 1e-2).unwrap();
        assert_eq!(v.status, Status::Equivalent);
        assert_eq!(v.matching, alloc::vec![(0, 0)]);

        let b = record("z + 0.5");
        let v = classify_pair(&a, &b, Mode::Preserving, 1e-3, 1e-2).unwrap();
        assert_eq!(v.status, Status::NotEquivalent);
        assert_eq!(v.witness().unwrap().invariant, "volume");

        let p = record("(z-0.5)*(z+0.5)");
        let q = record("-(z-0.5)*(z+0.5)");
        let v = classify_pair(&p, &q, Mode::Preserving, 1e-3, 1e-2).unwrap();
        assert_eq!(v.status, Status::NotEquivalent);
        assert_eq!(v.witness().unwrap().invariant, "topology");
        let v = classify_pair(&p, &q, Mode::Reversing, 1e-3, 1e-2).unwrap();
        assert_eq!(v.status, Status::Equivalent);
    }

    #[test]
    fn moduli_examples() {
        let z = moduli_coordinates(&record("z")).unwrap();
        let zb = moduli_coordinates(&record("z - 0.5")).unwrap();
        assert_eq!(z.code, zb.code);
        assert!((z.periods[0] - TAU).abs() < 1e-6);
        assert!(z.volume.abs() < 1e-2);
    }

    #[test]
    fn cohomology_examples() {
        let r = cohomology_report(&record("(z-0.5)*(z+0.5)"));
        assert_eq!(r.dims, [1, 2, 3]);
        assert_eq!(r.nontrivial_curve_count, 0);
        let f = parse_field("1", SurfaceKind::Sphere).unwrap();
        let rec = compute_invariants(&f, &SurfaceChart::sphere(), &GridSpec::new(32, 32).unwrap(), &Tolerances::default()).unwrap();
        assert_eq!(cohomology_report(&rec).dims, [1, 0, 1]);
    }
}
