//! Acceptance criteria on the default 512 x 512 grid.
//!
//! Each test prints one `criterion N: PASS|FAIL ...` line and asserts it.

use std::f64::consts::{PI, TAU};
use std::path::Path;
use std::process::Command;

use stablepoisson_core::classify::{classify_pair, cohomology_report, normal_form, Mode, Status};
use stablepoisson_core::deform::{deformation_report, DeformMode};
use stablepoisson_core::topology::Sign;
use stablepoisson_core::{
    compute_invariants, parse_field, Field, GridSpec, InvariantRecord, SurfaceChart, SurfaceKind,
    Tolerances,
};

const GRID: usize = 512;
const PERIOD_REL_TOL: f64 = 1e-3;
const VOLUME_ABS_TOL: f64 = 1e-2;
const RATIO_RANGE: (f64, f64) = (1.7, 2.3);
const EPS0_FACTORS: [f64; 2] = [0.05, 0.1];
const ERROR_ESTIMATE_FACTOR: f64 = 2.0;

fn grid() -> GridSpec {
    GridSpec::new(GRID, GRID).unwrap()
}

fn tolerances() -> Tolerances {
    Tolerances {
        rel_tol: PERIOD_REL_TOL,
        abs_tol: VOLUME_ABS_TOL,
        ..Tolerances::default()
    }
}

fn record_of<F: Field + ?Sized>(f: &F, tol: &Tolerances) -> InvariantRecord {
    let chart = SurfaceChart::new(f.surface());
    compute_invariants(f, &chart, &grid(), tol)
        .unwrap_or_else(|e| panic!("{}: {e}", f.describe()))
}

fn record(text: &str, surface: SurfaceKind) -> InvariantRecord {
    record_of(&parse_field(text, surface).unwrap(), &tolerances())
}

fn sphere(text: &str) -> InvariantRecord {
    record(text, SurfaceKind::Sphere)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// `(2π/a)·ln((1+b)/(1−b))` for `f = a(z − b)`.
fn family_volume(a: f64, b: f64) -> f64 {
    TAU / a * ((1.0 + b) / (1.0 - b)).ln()
}

fn family_field(a: f64, b: f64) -> String {
    format!("{a}*(z - ({b}))")
}

fn report(n: u32, ok: bool, detail: String) {
    println!("criterion {n}: {} {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {n} failed: {detail}");
}

fn signs_of(r: &InvariantRecord) -> (usize, usize) {
    let plus = r.topology.signs.iter().filter(|&&s| s == Sign::Plus).count();
    (plus, r.topology.signs.len() - plus)
}

#[test]
fn criterion_01_covariant_family() {
    let mut worst_t: f64 = 0.0;
    let mut worst_v: f64 = 0.0;
    for a in [1.0, 2.0] {
        for b in [-0.5, 0.0, 0.3, 0.7] {
            let r = sphere(&family_field(a, b));
            assert_eq!(r.n, 1);
            worst_t = worst_t.max(rel(r.periods[0], TAU / a));
            worst_v = worst_v.max((r.volume - family_volume(a, b)).abs());
        }
    }
    report(
        1,
        worst_t <= PERIOD_REL_TOL && worst_v <= VOLUME_ABS_TOL,
        format!("worst period rel err {worst_t:.2e}, worst volume abs err {worst_v:.2e}"),
    );
}

#[test]
fn criterion_02_normal_form_round_trip() {
    let mut worst_t: f64 = 0.0;
    let mut worst_v: f64 = 0.0;
    let mut shapes_ok = true;
    for t in [PI, TAU, 5.0] {
        for v in [-2.0, 0.0, 3.0] {
            let nf = normal_form(t, v).unwrap();
            let r = record_of(&nf.field, &tolerances());
            shapes_ok &= r.n == 1 && r.topology.is_tree && signs_of(&r) == (1, 1);
            worst_t = worst_t.max(rel(r.periods[0], t));
            worst_v = worst_v.max((r.volume - v).abs());
        }
    }
    report(
        2,
        shapes_ok && worst_t <= PERIOD_REL_TOL && worst_v <= VOLUME_ABS_TOL,
        format!("n=1 and tree {{+,-}}: {shapes_ok}, worst period rel err {worst_t:.2e}, worst volume abs err {worst_v:.2e}"),
    );
}

#[test]
fn criterion_03_sign_reversed_pair() {
    let a = sphere("(z-0.5)*(z+0.5)");
    let b = sphere("-(z-0.5)*(z+0.5)");
    let pres = classify_pair(&a, &b, Mode::Preserving, PERIOD_REL_TOL, VOLUME_ABS_TOL).unwrap();
    let rev = classify_pair(&a, &b, Mode::Reversing, PERIOD_REL_TOL, VOLUME_ABS_TOL).unwrap();
    let witness = pres.witness().map(|w| w.invariant);
    let periods_ok = rev.matching.len() == 2
        && rev
            .matching
            .iter()
            .all(|&(i, j)| rel(a.periods[i], b.periods[j]) <= PERIOD_REL_TOL);
    report(
        3,
        pres.status == Status::NotEquivalent
            && witness == Some("topology")
            && rev.status == Status::Equivalent
            && periods_ok,
        format!(
            "preserving {} (witness {witness:?}), reversing {} (periods matched: {periods_ok})",
            pres.status.as_str(),
            rev.status.as_str()
        ),
    );
}

#[test]
fn criterion_04_family_rigidity() {
    let base = sphere("z - 0.3");
    let shifted = sphere("z - 0.31");
    let doubled = sphere("2*(z - 0.3)");
    let negated = sphere("-(z - 0.3)");
    let c = |x: &InvariantRecord, m| classify_pair(&base, x, m, PERIOD_REL_TOL, VOLUME_ABS_TOL).unwrap();

    let v1 = c(&shifted, Mode::Preserving);
    let w1 = v1.witness().map(|w| w.invariant);
    let v2 = c(&doubled, Mode::Preserving);
    let w2 = v2.witness().cloned();
    let period_witness_ok = matches!(
        &w2,
        Some(w) if w.invariant == "period"
            && matches!((&w.a, &w.b), (stablepoisson_core::classify::Quantity::Real(x), stablepoisson_core::classify::Quantity::Real(y))
                if rel(*x, TAU) <= PERIOD_REL_TOL && rel(*y, PI) <= PERIOD_REL_TOL)
    );
    let v3p = c(&negated, Mode::Preserving);
    let v3r = c(&negated, Mode::Reversing);
    report(
        4,
        v1.status == Status::NotEquivalent
            && w1 == Some("volume")
            && v2.status == Status::NotEquivalent
            && period_witness_ok
            && v3p.status == Status::NotEquivalent
            && v3r.status == Status::Equivalent,
        format!(
            "b=0.3 vs 0.31: {} ({w1:?}); vs 2x: {} (period witness 2pi vs pi: {period_witness_ok}); vs -1x: preserving {}, reversing {}",
            v1.status.as_str(),
            v2.status.as_str(),
            v3p.status.as_str(),
            v3r.status.as_str()
        ),
    );
}

#[test]
fn criterion_05_multi_curve_tree() {
    let r = sphere("(z-0.5)*(z)*(z+0.5)");
    // oracle: d/dz (z³ - z/4) = 3z² - 1/4
    let fz = |z: f64| 3.0 * z * z - 0.25;
    let g = &r.topology;
    let mut degree = vec![0; g.vertex_count()];
    for e in &g.edges {
        degree[e.plus] += 1;
        degree[e.minus] += 1;
    }
    let mut sorted = degree.clone();
    sorted.sort();
    let path = g.is_tree && g.vertex_count() == 4 && sorted == [1, 1, 2, 2];
    let mut periods_ok = r.n == 3;
    let mut ends_ok = true;
    let mut worst: f64 = 0.0;
    for (k, c) in r.zero_set.curves.iter().enumerate() {
        let root = [-0.5, 0.0, 0.5]
            .into_iter()
            .min_by(|a, b| (c.points[0].s - a).abs().total_cmp(&(c.points[0].s - b).abs()))
            .unwrap();
        let expected = TAU / fz(root).abs();
        worst = worst.max(rel(r.periods[k], expected));
        periods_ok &= rel(r.periods[k], expected) <= PERIOD_REL_TOL;
        let e = g.edges.iter().find(|e| e.curve == k).unwrap();
        // top region (z > 0.5) is positive, bottom region (z < -0.5) negative
        if root == 0.5 {
            ends_ok &= degree[e.plus] == 1;
        }
        if root == -0.5 {
            ends_ok &= degree[e.minus] == 1;
        }
    }
    report(
        5,
        path && periods_ok && ends_ok,
        format!("path on 4 vertices: {path}, signs +,-,+,- from the top: {ends_ok}, worst period rel err {worst:.2e}"),
    );
}

#[test]
fn criterion_06_principal_value_convergence() {
    let text = "z - 0.3";
    let f = parse_field(text, SurfaceKind::Sphere).unwrap();
    let g_min = sphere(text).zero_set.g_min;
    let runs: Vec<InvariantRecord> = EPS0_FACTORS
        .iter()
        .map(|k| {
            let tol = Tolerances {
                eps0: Some(k * g_min),
                ..tolerances()
            };
            record_of(&f, &tol)
        })
        .collect();
    let seq = runs[1].volume_detail.sequence;
    let (d1, d2) = (seq[0] - seq[1], seq[1] - seq[2]);
    let ratio = d1 / d2;
    let linear = ratio.is_finite() && (RATIO_RANGE.0..=RATIO_RANGE.1).contains(&ratio);
    let spread = (runs[0].volume - runs[1].volume).abs();
    let allowed = ERROR_ESTIMATE_FACTOR * runs[0].volume_error_estimate.max(runs[1].volume_error_estimate);
    let independent = spread <= allowed;
    report(
        6,
        linear && independent,
        format!(
            "V_eps = {seq:?}, differences {d1:.3e}, {d2:.3e}, ratio {ratio:.3} (need {:?}); eps0 spread {spread:.2e} vs allowed {allowed:.2e}",
            RATIO_RANGE
        ),
    );
}

#[test]
fn criterion_07_rotation_invariance() {
    let a = sphere("z^2 + x/2 - 0.3");
    // rotation about the x-axis by 0.7 rad
    let b = sphere("(y*sin(0.7) + z*cos(0.7))^2 + x/2 - 0.3");
    let v = classify_pair(&a, &b, Mode::Preserving, PERIOD_REL_TOL, VOLUME_ABS_TOL).unwrap();
    let worst = v
        .matching
        .iter()
        .map(|&(i, j)| rel(b.periods[j], a.periods[i]))
        .fold(0.0, f64::max);
    report(
        7,
        v.status == Status::Equivalent && a.n == b.n && v.matching.len() == a.n && worst <= PERIOD_REL_TOL,
        format!("{} with worst period rel diff {worst:.2e}, volumes {:.6} vs {:.6}", v.status.as_str(), a.volume, b.volume),
    );
}

#[test]
fn criterion_08_cohomology_dimensions() {
    let mut ok = true;
    let mut lines = Vec::new();
    for (n, text) in [(0, "1"), (1, "z"), (2, "(z-0.5)*(z+0.5)"), (3, "(z-0.5)*z*(z+0.5)")] {
        let r = sphere(text);
        let c = cohomology_report(&r);
        ok &= r.n == n && c.dims == [1, n, n + 1] && c.nontrivial_curve_count == 0;
        lines.push(format!("n={n}: {:?}", c.dims));
    }
    let a = record("cos_u", SurfaceKind::Torus);
    let b = record("cos_u*cos(0.4) - sin_u*sin(0.4)", SurfaceKind::Torus);
    let ca = cohomology_report(&a);
    let v = classify_pair(&a, &b, Mode::Preserving, PERIOD_REL_TOL, VOLUME_ABS_TOL).unwrap();
    ok &= ca.dims == [1, 4, 3] && ca.nontrivial_curve_count == 2 && v.status == Status::Undecided;
    report(
        8,
        ok,
        format!(
            "sphere {}; torus cos_u {:?} with {} nontrivial curves, verdict vs shifted copy {}",
            lines.join(", "),
            ca.dims,
            ca.nontrivial_curve_count,
            v.status.as_str()
        ),
    );
}

/// Independent 1-D oracle for the volume change of `f = z` under the period
/// deformation: PV of `(1/z)·(1/(1+εB(z)) − 1)` over `[-1, 1]`, times `-2π`
/// for the sphere orientation, by symmetric midpoint pairs.
fn period_mode_volume_oracle(eps: f64, c: f64) -> f64 {
    let bump = |s: f64| {
        let a = s.abs();
        if a <= 0.5 * c {
            1.0
        } else if a >= c {
            0.0
        } else {
            let x = (a - 0.5 * c) / (0.5 * c);
            1.0 - (10.0 * x.powi(3) - 15.0 * x.powi(4) + 6.0 * x.powi(5))
        }
    };
    let m = 200_000;
    let h = 1.0 / m as f64;
    let mut acc = 0.0;
    for k in 0..m {
        let z = (k as f64 + 0.5) * h;
        let g = |s: f64| (1.0 / s) * (1.0 / (1.0 + eps * bump(s)) - 1.0);
        acc += (g(z) + g(-z)) * h;
    }
    -TAU * acc
}

#[test]
fn criterion_09_deformations() {
    let tol = tolerances();
    let spec = grid();
    let mut ok = true;
    let mut notes = Vec::new();

    for (a, b, eps) in [(1.0, 0.2, 0.1), (2.0, 0.3, 0.2), (1.0, -0.4, -0.15)] {
        let f = parse_field(&family_field(a, b), SurfaceKind::Sphere).unwrap();
        let d = deformation_report(&f, &spec, &tol, DeformMode::Volume { epsilon: eps }).unwrap();
        let dt = rel(d.after.periods[0], d.before.periods[0]);
        let expected = family_volume(a, b - eps / a) - family_volume(a, b);
        let dv = (d.volume_delta - expected).abs();
        ok &= dt <= PERIOD_REL_TOL && dv <= VOLUME_ABS_TOL;
        notes.push(format!("volume a={a} b={b} eps={eps}: dT/T {dt:.1e}, dV err {dv:.1e}"));
    }

    let f = parse_field("(z-0.3)*(z+0.4)", SurfaceKind::Sphere).unwrap();
    let before = record_of(&f, &tol);
    let target = before.zero_set.curves.iter().position(|c| c.points[0].s > 0.0).unwrap();
    let eps = 0.5;
    let d = deformation_report(&f, &spec, &tol, DeformMode::Period { curve: target, epsilon: eps }).unwrap();
    for (&(i, j), _) in d.matching.iter().zip(&d.period_deltas) {
        let expected = if i == target {
            d.before.periods[i] / (1.0 + eps)
        } else {
            d.before.periods[i]
        };
        let e = rel(d.after.periods[j], expected);
        ok &= e <= PERIOD_REL_TOL;
        notes.push(format!("period curve {i}: rel err {e:.1e}"));
    }

    let f = parse_field("z", SurfaceKind::Sphere).unwrap();
    let d = deformation_report(&f, &spec, &tol, DeformMode::Period { curve: 0, epsilon: eps }).unwrap();
    let c = d.before.zero_set.curves[0].collar_halfwidth;
    let oracle = period_mode_volume_oracle(eps, c);
    let t_err = rel(d.after.periods[0], TAU / (1.0 + eps));
    let v_err = (d.volume_delta - oracle).abs();
    ok &= oracle.abs() < 1e-9 && v_err <= VOLUME_ABS_TOL && t_err <= PERIOD_REL_TOL;
    notes.push(format!("period f=z: T rel err {t_err:.1e}, dV {:.1e} vs oracle {oracle:.1e}", d.volume_delta));

    report(9, ok, notes.join("; "));
}

fn run_cli(problem: &Path) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_stablepoisson"))
        .arg("invariants")
        .arg(problem)
        .output()
        .expect("run binary");
    assert_eq!(out.status.code(), Some(0));
    out.stdout
}

#[test]
fn criterion_10_deterministic_json() {
    let dir = tempfile::tempdir().unwrap();
    let mut identical = true;
    let mut files = 0;
    for a in [1.0, 2.0] {
        for b in [-0.5, 0.0, 0.3, 0.7] {
            let path = dir.path().join(format!("a{a}_b{b}.toml"));
            std::fs::write(
                &path,
                format!("surface = \"sphere\"\nfield = \"{}\"\n", family_field(a, b)),
            )
            .unwrap();
            identical &= run_cli(&path) == run_cli(&path);
            files += 1;
        }
    }
    report(10, identical, format!("{files} problem files, two runs each, byte-identical: {identical}"));
}
