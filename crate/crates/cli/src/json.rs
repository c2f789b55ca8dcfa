use serde_json::{json, Value};
use stablepoisson_core::classify::{Comparison, Quantity, Verdict};
use stablepoisson_core::topology::{canonical_code, topology_code, Sign};
use stablepoisson_core::zeroset::Orientation;
use stablepoisson_core::{
    significant, CohomologyReport, DeformMode, DeformationResult, InvariantRecord,
    SignedTopologyGraph, SurfaceKind,
};

/// A float rounded to 12 significant digits; non-finite values become `null`.
pub fn num(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    let rounded: f64 = significant(x, 12).parse().unwrap_or(x);
    json!(rounded)
}

fn nums(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| num(x)).collect())
}

/// Pretty JSON with a trailing newline.
pub fn render(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).unwrap_or_else(|_| "null".into());
    s.push('\n');
    s
}

fn sign(s: Sign) -> &'static str {
    match s {
        Sign::Plus => "+",
        Sign::Minus => "-",
    }
}

pub fn graph(g: &SignedTopologyGraph, quantum: f64) -> Value {
    let vertices: Vec<Value> = g
        .signs
        .iter()
        .enumerate()
        .map(|(id, &s)| json!({"id": id, "sign": sign(s)}))
        .collect();
    let edges: Vec<Value> = g
        .edges
        .iter()
        .map(|e| {
            json!({
                "curve": e.curve,
                "plus": e.plus,
                "minus": e.minus,
                "period": num(e.weight),
                "winding": e.winding.map(|w| json!([w.p, w.q])),
            })
        })
        .collect();
    let code = match g.surface {
        SurfaceKind::Sphere => Value::String(canonical_code(g, quantum).0),
        SurfaceKind::Torus => Value::Null,
    };
    json!({
        "vertices": vertices,
        "edges": edges,
        "is_tree": g.is_tree,
        "code": code,
        "signs_code": topology_code(g).0,
    })
}

pub fn record(r: &InvariantRecord, with_points: bool) -> Value {
    let curves: Vec<Value> = r
        .zero_set
        .curves
        .iter()
        .map(|c| {
            let mut m = json!({
                "orientation": match c.orientation {
                    Orientation::Forward => "forward",
                    Orientation::Backward => "backward",
                },
                "vertices": c.points.len(),
                "min_grad": num(c.min_grad),
                "collar_halfwidth": num(c.collar_halfwidth),
            });
            if with_points {
                let pts: Vec<Value> = c.points.iter().map(|p| json!([num(p.s), num(p.t)])).collect();
                m["points"] = Value::Array(pts);
            }
            m
        })
        .collect();
    let d = &r.volume_detail;
    json!({
        "surface": r.surface.name(),
        "genus": r.genus,
        "n": r.n,
        "periods": nums(&r.periods),
        "volume": num(r.volume),
        "volume_error_estimate": num(r.volume_error_estimate),
        "volume_cutoffs": {
            "eps0": num(d.eps0),
            "sequence": nums(&d.sequence),
        },
        "topology": graph(&r.topology, stablepoisson_core::topology::DEFAULT_WEIGHT_QUANTUM),
        "curves": curves,
    })
}

fn quantity(q: &Quantity) -> Value {
    match q {
        Quantity::Count(n) => json!(n),
        Quantity::Real(x) => num(*x),
        Quantity::Text(s) => json!(s),
    }
}

fn comparison(c: &Comparison) -> Value {
    json!({
        "invariant": c.invariant,
        "curves": c.curves.map(|(a, b)| json!([a, b])),
        "a": quantity(&c.a),
        "b": quantity(&c.b),
        "margin": c.margin.map(num),
        "passed": c.passed,
    })
}

pub fn verdict(v: &Verdict) -> Value {
    json!({
        "status": v.status.as_str(),
        "mode": v.mode.as_str(),
        "tolerances": {"rel_tol": num(v.rel_tol), "abs_tol": num(v.abs_tol)},
        "comparisons": v.comparisons.iter().map(comparison).collect::<Vec<_>>(),
        "witness": v.witness().map(comparison),
        "matching": v.matching.iter().map(|&(a, b)| json!([a, b])).collect::<Vec<_>>(),
    })
}

pub fn cohomology(c: &CohomologyReport, r: &InvariantRecord) -> Value {
    let windings: Vec<Value> = r
        .topology
        .edges
        .iter()
        .map(|e| e.winding.map(|w| json!([w.p, w.q])).unwrap_or(Value::Null))
        .collect();
    json!({
        "surface": r.surface.name(),
        "genus": r.genus,
        "n": r.n,
        "dims": c.dims,
        "generators": {"h0": c.generators[0], "h1": c.generators[1], "h2": c.generators[2]},
        "nontrivial_curve_count": c.nontrivial_curve_count,
        "windings": windings,
    })
}

pub fn deformation(d: &DeformationResult) -> Value {
    let (mode, curve) = match d.mode {
        DeformMode::Volume { .. } => ("volume", None),
        DeformMode::Period { curve, .. } => ("period", Some(curve)),
    };
    json!({
        "mode": mode,
        "curve": curve,
        "epsilon": num(d.mode.epsilon()),
        "deformed_field": d.deformed_field,
        "before": record(&d.before, false),
        "after": record(&d.after, false),
        "matching": d.matching.iter().map(|&(a, b)| json!([a, b])).collect::<Vec<_>>(),
        "deltas": {"periods": nums(&d.period_deltas), "volume": num(d.volume_delta)},
        "moved": {"periods": d.periods_moved, "volume": d.volume_moved},
        "safe_bound": num(d.safe_bound),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_keep_twelve_digits() {
        assert_eq!(num(std::f64::consts::TAU).to_string(), "6.28318530718");
        assert_eq!(num(0.1 + 0.2).to_string(), "0.3");
        assert_eq!(num(-2.5e-20).to_string(), "-2.5e-20");
        assert_eq!(num(f64::NAN), Value::Null);
    }
}
