//! The two deformation families: `π + ε·π₀` moves only the regularized
//! volume, `π + ε·πᵢ` (a bump around curve `i`) moves only the `i`-th period.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::chart::{self, GridSpec, SurfaceChart, SurfaceKind};
use crate::dsl::{Field, ScalarField};
use crate::error::StageExt;
use crate::invariants::{self, compute_invariants, InvariantRecord, Tolerances};
use crate::math::{self, TAU};
use crate::zeroset::{self, ZeroSet};
use crate::{ChartPoint, Error, PipelineError, Stage};

/// `f + ε`, rejected if the number of zero curves changes at `spec`.
pub fn deform_volume(
    field: &ScalarField,
    epsilon: f64,
    spec: &GridSpec,
    tol: &Tolerances,
) -> Result<ScalarField, Error> {
    if !epsilon.is_finite() {
        return Err(Error::InvalidParameter(format!("epsilon must be finite, got {epsilon}")));
    }
    let deformed = field.shifted(epsilon);
    let before = curve_count(field, spec, tol)?;
    let after = curve_count(&deformed, spec, tol)?;
    if before != after {
        return Err(Error::TopologyChanged { before, after });
    }
    Ok(deformed)
}

fn curve_count<F: Field + ?Sized>(field: &F, spec: &GridSpec, tol: &Tolerances) -> Result<usize, Error> {
    let chart = SurfaceChart::new(field.surface());
    let sample = chart::sample(field, &chart, spec)?;
    Ok(zeroset::extract_zero_set(field, &sample, &chart, tol.g_tol)?.n())
}

/// Even bump of `f`: 1 on `[-c/2, c/2]`, 0 outside `(-c, c)`, quintic
/// smoothstep in between.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bump {
    pub halfwidth: f64,
}

impl Bump {
    pub fn value(&self, f: f64) -> f64 {
        let c = self.halfwidth;
        let a = math::abs(f);
        if a <= 0.5 * c {
            1.0
        } else if a >= c {
            0.0
        } else {
            let x = (a - 0.5 * c) / (0.5 * c);
            1.0 - x * x * x * (10.0 + x * (-15.0 + 6.0 * x))
        }
    }

    /// `dB/df`.
    pub fn derivative(&self, f: f64) -> f64 {
        let c = self.halfwidth;
        let a = math::abs(f);
        if a <= 0.5 * c || a >= c {
            return 0.0;
        }
        let x = (a - 0.5 * c) / (0.5 * c);
        let ds = 30.0 * x * x * (1.0 - x) * (1.0 - x);
        let sign = if f < 0.0 { -1.0 } else { 1.0 };
        -ds * sign / (0.5 * c)
    }
}

/// `f·(1 + ε·B(f)·mask)` where `mask` selects the collar of one curve.
///
/// Inside `{|f| < c}` a point belongs to the curve its gradient flow lands
/// nearest to; collars of distinct curves are disjoint, so the mask is
/// locally constant wherever `B(f) ≠ 0`.
#[derive(Debug, Clone)]
pub struct BumpDeformedField {
    base: ScalarField,
    epsilon: f64,
    bump: Bump,
    curve: usize,
    locator: CurveLocator,
}

impl BumpDeformedField {
    pub fn base(&self) -> &ScalarField {
        &self.base
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn bump(&self) -> Bump {
        self.bump
    }

    fn factor_parts(&self, p: ChartPoint, f: f64) -> Result<(f64, f64), Error> {
        if math::abs(f) >= self.bump.halfwidth || self.epsilon == 0.0 {
            return Ok((0.0, 0.0));
        }
        if !self.locator.single() {
            let q = invariants::project_to_zero(&self.base, p)?;
            if self.locator.nearest(q) != self.curve {
                return Ok((0.0, 0.0));
            }
        }
        Ok((self.bump.value(f), self.bump.derivative(f)))
    }
}

impl Field for BumpDeformedField {
    fn surface(&self) -> SurfaceKind {
        self.base.surface()
    }

    fn eval(&self, p: ChartPoint) -> Result<f64, Error> {
        let f = self.base.eval(p)?;
        let (b, _) = self.factor_parts(p, f)?;
        Ok(f * (1.0 + self.epsilon * b))
    }

    fn partials(&self, p: ChartPoint) -> Result<(f64, f64), Error> {
        let f = self.base.eval(p)?;
        let (g1, g2) = self.base.partials(p)?;
        let (b, db) = self.factor_parts(p, f)?;
        let k = 1.0 + self.epsilon * (b + f * db);
        Ok((k * g1, k * g2))
    }

    fn describe(&self) -> String {
        format!(
            "({})*(1 + {}*B_{}(f))",
            self.base.describe(),
            math::significant(self.epsilon, 12),
            self.curve
        )
    }
}

/// Nearest zero curve to a chart point, via a bucket grid over polyline vertices.
#[derive(Debug, Clone)]
struct CurveLocator {
    kind: SurfaceKind,
    bucket: f64,
    cells: zeroset::Buckets,
    curves: usize,
}

impl CurveLocator {
    fn new(zs: &ZeroSet) -> Self {
        let bucket = 8.0 * zs.h1.max(zs.h2);
        let mut loc = CurveLocator {
            kind: zs.kind,
            bucket,
            cells: BTreeMap::new(),
            curves: zs.n(),
        };
        for (k, c) in zs.curves.iter().enumerate() {
            for p in &c.points {
                let (s, t) = loc.reduce(*p);
                loc.cells.entry(loc.key(s, t)).or_default().push((k, s, t));
            }
        }
        loc
    }

    fn single(&self) -> bool {
        self.curves <= 1
    }

    fn reduce(&self, p: ChartPoint) -> (f64, f64) {
        let s = match self.kind {
            SurfaceKind::Sphere => p.s,
            SurfaceKind::Torus => math::rem_euclid(p.s, TAU),
        };
        (s, math::rem_euclid(p.t, TAU))
    }

    fn key(&self, s: f64, t: f64) -> (i64, i64) {
        (math::floor(s / self.bucket) as i64, math::floor(t / self.bucket) as i64)
    }

    fn distance(&self, a: (f64, f64), b: (f64, f64)) -> f64 {
        let ds = match self.kind {
            SurfaceKind::Sphere => a.0 - b.0,
            SurfaceKind::Torus => math::wrap_delta(a.0 - b.0, TAU),
        };
        math::hypot(ds, math::wrap_delta(a.1 - b.1, TAU))
    }

    fn nearest(&self, p: ChartPoint) -> usize {
        let q = self.reduce(p);
        let (ks, kt) = self.key(q.0, q.1);
        let nb = math::floor(TAU / self.bucket) as i64 + 1;
        let mut best = (f64::INFINITY, usize::MAX);
        for ds in -1..=1 {
            for dt in -1..=1 {
                let s_key = match self.kind {
                    SurfaceKind::Sphere => ks + ds,
                    SurfaceKind::Torus => (ks + ds).rem_euclid(nb),
                };
                if let Some(pts) = self.cells.get(&(s_key, (kt + dt).rem_euclid(nb))) {
                    for &(k, s, t) in pts {
                        let d = self.distance(q, (s, t));
                        if d < best.0 {
                            best = (d, k);
                        }
                    }
                }
            }
        }
        if best.1 != usize::MAX {
            return best.1;
        }
        for pts in self.cells.values() {
            for &(k, s, t) in pts {
                let d = self.distance(q, (s, t));
                if d < best.0 {
                    best = (d, k);
                }
            }
        }
        best.1
    }
}

/// Multiplies `f` by `1 + ε·B(f)` inside the collar of curve `i`.
pub fn deform_period(
    field: &ScalarField,
    zeroset: &ZeroSet,
    i: usize,
    epsilon: f64,
) -> Result<BumpDeformedField, Error> {
    if !(epsilon > -1.0 && epsilon.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must exceed -1, got {epsilon}"
        )));
    }
    let halfwidth = zeroset::collar(zeroset, i)?;
    Ok(BumpDeformedField {
        base: field.clone(),
        epsilon,
        bump: Bump { halfwidth },
        curve: i,
        locator: CurveLocator::new(zeroset),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeformMode {
    /// `π + ε·π₀`.
    Volume { epsilon: f64 },
    /// `π + ε·πᵢ`.
    Period { curve: usize, epsilon: f64 },
}

impl DeformMode {
    pub fn epsilon(&self) -> f64 {
        match *self {
            DeformMode::Volume { epsilon } | DeformMode::Period { epsilon, .. } => epsilon,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeformationResult {
    pub mode: DeformMode,
    pub deformed_field: String,
    pub before: InvariantRecord,
    pub after: InvariantRecord,
    /// `(curve before, curve after)` by proximity.
    pub matching: Vec<(usize, usize)>,
    /// `T_after − T_before` per matched pair, in `matching` order.
    pub period_deltas: Vec<f64>,
    pub volume_delta: f64,
    /// Which period deltas exceed the relative tolerance.
    pub periods_moved: Vec<bool>,
    pub volume_moved: bool,
    /// `|ε|` below which the volume family cannot change the zero set.
    pub safe_bound: f64,
}

/// Applies a deformation and compares invariants before and after.
pub fn deformation_report(
    field: &ScalarField,
    spec: &GridSpec,
    tol: &Tolerances,
    mode: DeformMode,
) -> Result<DeformationResult, PipelineError> {
    let chart = SurfaceChart::new(field.surface());
    let before = compute_invariants(field, &chart, spec, tol)?;
    let safe_bound = 0.5
        * before
            .zero_set
            .curves
            .iter()
            .map(|c| c.collar_halfwidth)
            .fold(f64::INFINITY, f64::min);
    // Keep the cut-off band fixed in terms of f so volume deltas are not
    // mixed with cut-off effects. Near the bumped curve f' = (1+ε)f, so a
    // shrinking ε narrows the cut-off with it.
    let shrink = match mode {
        DeformMode::Period { epsilon, .. } => (1.0 + epsilon).min(1.0),
        DeformMode::Volume { .. } => 1.0,
    };
    let tol_after = Tolerances {
        eps0: tol
            .eps0
            .or(Some(before.volume_detail.eps0))
            .map(|e| e * shrink)
            .filter(|&e| e > 0.0),
        ..*tol
    };
    let (after, description) = match mode {
        DeformMode::Volume { epsilon } => {
            let g = deform_volume(field, epsilon, spec, tol).at(Stage::Deform)?;
            (compute_invariants(&g, &chart, spec, &tol_after)?, g.describe())
        }
        DeformMode::Period { curve, epsilon } => {
            let g = deform_period(field, &before.zero_set, curve, epsilon).at(Stage::Deform)?;
            (compute_invariants(&g, &chart, spec, &tol_after)?, g.describe())
        }
    };
    if after.n != before.n {
        return Err(PipelineError::new(
            Stage::Deform,
            Error::TopologyChanged {
                before: before.n,
                after: after.n,
            },
        ));
    }
    let matching = match_curves(&before.zero_set, &after.zero_set);
    let period_deltas: Vec<f64> = matching
        .iter()
        .map(|&(i, j)| after.periods[j] - before.periods[i])
        .collect();
    let periods_moved = matching
        .iter()
        .zip(&period_deltas)
        .map(|(&(i, _), d)| math::abs(*d) > tol.rel_tol * before.periods[i])
        .collect();
    let volume_delta = after.volume - before.volume;
    Ok(DeformationResult {
        mode,
        deformed_field: description,
        volume_moved: math::abs(volume_delta) > tol.abs_tol,
        before,
        after,
        matching,
        period_deltas,
        volume_delta,
        periods_moved,
        safe_bound,
    })
}

/// Pairs each curve with the nearest curve of the other set.
fn match_curves(a: &ZeroSet, b: &ZeroSet) -> Vec<(usize, usize)> {
    let loc = CurveLocator::new(b);
    a.curves
        .iter()
        .enumerate()
        .map(|(i, c)| (i, loc.nearest(c.points[0])))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_field;

    fn sphere(t: &str) -> ScalarField {
        parse_field(t, SurfaceKind::Sphere).unwrap()
    }

    #[test]
    fn bump_profile() {
        let b = Bump { halfwidth: 0.2 };
        assert_eq!(b.value(0.0), 1.0);
        assert_eq!(b.value(0.1), 1.0);
        assert_eq!(b.value(-0.2), 0.0);
        assert!((b.value(0.15) - 0.5).abs() < 1e-12);
        assert_eq!(b.value(0.13), b.value(-0.13));
        let h = 1e-6;
        for f in [0.11, 0.15, -0.17, 0.199] {
            let fd = (b.value(f + h) - b.value(f - h)) / (2.0 * h);
            assert!((fd - b.derivative(f)).abs() < 1e-5);
        }
    }

    #[test]
    fn volume_deformation_examples() {
        let spec = GridSpec::new(128, 128).unwrap();
        let tol = Tolerances::default();
        let g = deform_volume(&sphere("z - 0.2"), 0.1, &spec, &tol).unwrap();
        let v = g.eval(ChartPoint::new(0.1, 0.0)).unwrap();
        assert!(v.abs() < 1e-15);
        let e = deform_volume(&sphere("z - 0.95"), -0.1, &spec, &tol).unwrap_err();
        assert_eq!(e, Error::TopologyChanged { before: 1, after: 0 });
    }

    #[test]
    fn period_deformation_scales_gradient_on_curve() {
        let f = sphere("(z-0.3)*(z+0.4)");
        let chart = SurfaceChart::sphere();
        let s = chart::sample(&f, &chart, &GridSpec::new(256, 256).unwrap()).unwrap();
        let zs = zeroset::extract_zero_set(&f, &s, &chart, 1e-3).unwrap();
        let upper = zs.curves.iter().position(|c| c.points[0].s > 0.0).unwrap();
        let g = deform_period(&f, &zs, upper, 0.5).unwrap();
        let (a, _) = g.partials(ChartPoint::new(0.3, 1.0)).unwrap();
        assert!((a - 1.05).abs() < 1e-12);
        let (a, _) = g.partials(ChartPoint::new(-0.4, 1.0)).unwrap();
        assert!((a + 0.7).abs() < 1e-12);
        let id = deform_period(&f, &zs, upper, 0.0).unwrap();
        let p = ChartPoint::new(0.31, 2.0);
        assert_eq!(id.eval(p).unwrap(), f.eval(p).unwrap());
        assert!(deform_period(&f, &zs, upper, -1.0).is_err());
    }

    #[test]
    fn partials_match_finite_differences_in_transition_band() {
        let f = sphere("z");
        let chart = SurfaceChart::sphere();
        let s = chart::sample(&f, &chart, &GridSpec::new(128, 128).unwrap()).unwrap();
        let zs = zeroset::extract_zero_set(&f, &s, &chart, 1e-3).unwrap();
        let g = deform_period(&f, &zs, 0, 0.5).unwrap();
        let c = g.bump().halfwidth;
        let h = 1e-7;
        for z in [0.6 * c, 0.75 * c, -0.9 * c] {
            let p = ChartPoint::new(z, 0.3);
            let fd = (g.eval(ChartPoint::new(z + h, 0.3)).unwrap() - g.eval(ChartPoint::new(z - h, 0.3)).unwrap()) / (2.0 * h);
            let (a, _) = g.partials(p).unwrap();
            assert!((a - fd).abs() < 1e-6, "{a} vs {fd}");
        }
    }
}
