//! Modular periods and the regularized Liouville volume.
//!
//! The modular period of a zero curve is the travel time of the modular
//! field around it, `T = ∮ dℓ/|∇f|` in the chart. The regularized volume is
//! the principal value of `∫ ω₀/f`, realized as the limit of the cut-off
//! integrals `V_ε = ∫_{|f|>ε} ω₀/f`.

use alloc::vec;
use alloc::vec::Vec;

use crate::chart::{self, GridSample, GridSpec, SurfaceChart, SurfaceKind};
use crate::dsl::Field;
use crate::error::StageExt;
use crate::math;
use crate::topology::{self, SignedTopologyGraph};
use crate::zeroset::{self, OrientedZeroCurve, ZeroSet};
use crate::{ChartPoint, Error, PipelineError, Stage};

/// Numeric tolerances for the whole pipeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Minimum `|∇f|` on the zero set.
    pub g_tol: f64,
    /// Relative tolerance for period comparisons.
    pub rel_tol: f64,
    /// Absolute tolerance for volume comparisons.
    pub abs_tol: f64,
    /// Initial volume cut-off; derived from the zero set when `None`.
    pub eps0: Option<f64>,
    /// Quantum for the logarithm of edge weights in canonical codes.
    pub weight_quantum: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            g_tol: zeroset::DEFAULT_G_TOL,
            rel_tol: 1e-3,
            abs_tol: 1e-2,
            eps0: None,
            weight_quantum: topology::DEFAULT_WEIGHT_QUANTUM,
        }
    }
}

/// The classifying data of one structure.
#[derive(Debug, Clone, PartialEq)]
pub struct InvariantRecord {
    pub surface: SurfaceKind,
    pub genus: u32,
    pub n: usize,
    /// `periods[i]` belongs to `zero_set.curves[i]` and to the graph edge with curve id `i`.
    pub periods: Vec<f64>,
    pub volume: f64,
    pub volume_error_estimate: f64,
    pub volume_detail: VolumeEstimate,
    pub topology: SignedTopologyGraph,
    pub zero_set: ZeroSet,
}

impl InvariantRecord {
    /// The record of `ν_*π` for an orientation-reversing `ν`: signs flip,
    /// the volume changes sign, periods stay, curve orientations and
    /// winding classes reverse.
    pub fn reversed(&self) -> InvariantRecord {
        let mut r = self.clone();
        r.volume = -r.volume;
        r.volume_detail.value = -r.volume_detail.value;
        for v in &mut r.volume_detail.sequence {
            *v = -*v;
        }
        r.topology = r.topology.reversed();
        for c in &mut r.zero_set.curves {
            c.orientation = c.orientation.reversed();
        }
        r
    }
}

/// Outcome of the cut-off extrapolation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumeEstimate {
    pub value: f64,
    pub error_estimate: f64,
    /// Initial cut-off `ε₀`; zero when there are no curves.
    pub eps0: f64,
    /// `V_ε` at `ε₀`, `ε₀/2`, `ε₀/4`.
    pub sequence: [f64; 3],
}

/// Travel time of the modular field around `curve`.
///
/// Each polyline segment contributes `∫ dℓ/|∇f|`, estimated by the
/// trapezoid rule on the chord and on the two half-chords through the
/// midpoint projected back onto the curve, then combined by one Richardson
/// step.
pub fn modular_period<F: Field + ?Sized>(field: &F, curve: &OrientedZeroCurve) -> Result<f64, Error> {
    let pts = &curve.points;
    let weight = |p: ChartPoint| -> Result<f64, Error> {
        let (a, b) = field.partials(p)?;
        Ok(1.0 / math::hypot(a, b))
    };
    let mut total = 0.0;
    let mut w0 = weight(pts[0])?;
    for seg in pts.windows(2) {
        let (p0, p1) = (seg[0], seg[1]);
        let w1 = weight(p1)?;
        let mid = project_to_zero(field, ChartPoint::new(0.5 * (p0.s + p1.s), 0.5 * (p0.t + p1.t)))?;
        let wm = weight(mid)?;
        let len = |a: ChartPoint, b: ChartPoint| math::hypot(b.s - a.s, b.t - a.t);
        let coarse = len(p0, p1) * 0.5 * (w0 + w1);
        let fine = 0.5 * (len(p0, mid) * (w0 + wm) + len(mid, p1) * (wm + w1));
        total += (4.0 * fine - coarse) / 3.0;
        w0 = w1;
    }
    Ok(total)
}

/// Newton steps along the gradient onto `{f = 0}`.
pub(crate) fn project_to_zero<F: Field + ?Sized>(field: &F, mut p: ChartPoint) -> Result<ChartPoint, Error> {
    for _ in 0..4 {
        let f = field.eval(p)?;
        if f == 0.0 {
            break;
        }
        let (a, b) = field.partials(p)?;
        let g2 = a * a + b * b;
        if g2 == 0.0 {
            break;
        }
        p.s -= f * a / g2;
        p.t -= f * b / g2;
        if math::abs(f) < 1e-15 {
            break;
        }
    }
    Ok(p)
}

/// Default initial cut-off: inside every collar and well below the gradient margin.
pub fn default_eps0(zeroset: &ZeroSet) -> f64 {
    if zeroset.n() == 0 {
        return 0.0;
    }
    let min_collar = zeroset
        .curves
        .iter()
        .map(|c| c.collar_halfwidth)
        .fold(f64::INFINITY, f64::min);
    (0.1 * zeroset.g_min).min(0.5 * min_collar)
}

/// How the cut-off band `{|h| < ε}` is drawn.
#[derive(Debug, Clone, Copy, Default)]
pub struct Cutoff<'a> {
    /// Samples of a positive `m` on the same grid; the cut-off function is
    /// `h = f·m`. `None` means `h = f`.
    pub weight: Option<&'a GridSample>,
    /// Wobble of the cut-off sequence below this level is not reported as
    /// [`Error::NonConvergent`].
    pub noise_floor: f64,
}

/// Principal value of `∫ ω₀/f`, extrapolated from `ε₀, ε₀/2, ε₀/4`.
///
/// On each grid triangle `f` is replaced by its linear interpolant, whose
/// distribution of values is a tent; `∫ 1/s` against that tent restricted
/// to `|s| > ε` is evaluated in closed form. With a weight `m` the band is
/// `|f| > ε/m̄` with `m̄` the triangle mean of `m`. Without zero curves the
/// cut-off is irrelevant and `V` is the plain integral.
pub fn regularized_volume(
    sample: &GridSample,
    zeroset: &ZeroSet,
    eps0: f64,
    cutoff: Cutoff<'_>,
) -> Result<VolumeEstimate, Error> {
    let orientation = SurfaceChart::new(sample.kind).volume_orientation();
    let eps0 = if zeroset.n() == 0 { 0.0 } else { eps0 };
    if zeroset.n() > 0 && !(eps0 > 0.0 && eps0.is_finite()) {
        return Err(Error::InvalidParameter(alloc::format!(
            "volume cut-off must be positive, got {eps0}"
        )));
    }
    if let Some(w) = cutoff.weight {
        if w.values.len() != sample.values.len() {
            return Err(Error::ShapeMismatch {
                expected: sample.values.len(),
                found: w.values.len(),
            });
        }
        if let Some(bad) = w.values.iter().find(|m| !(**m > 0.0 && m.is_finite())) {
            return Err(Error::InvalidParameter(alloc::format!(
                "cut-off weight must be positive, found {bad}"
            )));
        }
    }
    let cuts = [eps0, 0.5 * eps0, 0.25 * eps0];
    let (sums, magnitude) = cutoff_integrals(sample, cutoff.weight, cuts);
    let sequence = sums.map(|v| orientation * v);
    let [v0, v1, v2] = sequence;
    if zeroset.n() == 0 {
        return Ok(VolumeEstimate {
            value: v0,
            error_estimate: rounding_floor(magnitude),
            eps0,
            sequence,
        });
    }
    let d1 = v0 - v1;
    let d2 = v1 - v2;
    let floor = rounding_floor(magnitude);
    if math::abs(d2) > math::abs(d1) && math::abs(d2) > floor.max(cutoff.noise_floor) {
        return Err(Error::NonConvergent { first: d1, second: d2 });
    }
    Ok(VolumeEstimate {
        value: 2.0 * v2 - v1,
        // residual of the linear model across all three cut-offs
        error_estimate: math::abs(v0 - 3.0 * v1 + 2.0 * v2) + floor,
        eps0,
        sequence,
    })
}

/// Accumulated rounding level of a sum whose terms have total magnitude `m`.
pub fn rounding_floor(magnitude: f64) -> f64 {
    64.0 * f64::EPSILON * magnitude
}

/// `∫_{|f|>ε} dA/f` in chart measure for each cut-off, plus `Σ|terms|`.
fn cutoff_integrals(sample: &GridSample, weight: Option<&GridSample>, cuts: [f64; 3]) -> ([f64; 3], f64) {
    let tri_area = 0.5 * sample.h1 * sample.h2;
    let row = |ci: usize| -> ([f64; 3], f64) {
        let ni = sample.next_row(ci).expect("cell row");
        let mut acc = [0.0; 3];
        let mut mag = 0.0;
        for cj in 0..sample.n2 {
            let nj = sample.next_col(cj);
            let f0 = sample.value(ci, cj);
            let f1 = sample.value(ni, cj);
            let f2 = sample.value(ni, nj);
            let f3 = sample.value(ci, nj);
            let m = weight.map(|w| [w.value(ci, cj), w.value(ni, cj), w.value(ni, nj), w.value(ci, nj)]);
            for (tri, idx) in [([f0, f1, f2], [0, 1, 2]), ([f0, f2, f3], [0, 2, 3])] {
                let scale = m.map_or(1.0, |m| 3.0 / (m[idx[0]] + m[idx[1]] + m[idx[2]]));
                for (k, &eps) in cuts.iter().enumerate() {
                    let v = triangle_integral(tri, tri_area, eps * scale);
                    acc[k] += v;
                    if k == 2 {
                        mag += math::abs(v);
                    }
                }
            }
        }
        (acc, mag)
    };
    #[cfg(feature = "parallel")]
    let rows: Vec<([f64; 3], f64)> = {
        use rayon::prelude::*;
        (0..sample.cell_rows()).into_par_iter().map(row).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let rows: Vec<([f64; 3], f64)> = (0..sample.cell_rows()).map(row).collect();

    let mut total = [0.0; 3];
    let mut mag = 0.0;
    for (r, m) in rows {
        for k in 0..3 {
            total[k] += r[k];
        }
        mag += m;
    }
    (total, mag)
}

/// `∫ 1{|f|>ε}/f dA` over a triangle of area `area` on which `f` is linear
/// with vertex values `vals`.
pub(crate) fn triangle_integral(mut vals: [f64; 3], area: f64, eps: f64) -> f64 {
    vals.sort_by(f64::total_cmp);
    let [a, b, c] = vals;
    if c - a <= 1e-14 * (math::abs(a) + math::abs(c)) {
        let f = (a + b + c) / 3.0;
        return if math::abs(f) > eps { area / f } else { 0.0 };
    }
    // value density: linear up from a to the peak at b, down to c
    let k = 2.0 * area / (c - a);
    let mut total = 0.0;
    if b > a {
        let m = k / (b - a);
        total += linear_over_s(-m * a, m, a, b, eps);
    }
    if c > b {
        let m = -k / (c - b);
        total += linear_over_s(-m * c, m, b, c, eps);
    }
    total
}

/// `∫_{lo}^{hi} (c0 + m·s)/s ds` over the part of `[lo, hi]` with `|s| > ε`.
fn linear_over_s(c0: f64, m: f64, lo: f64, hi: f64, eps: f64) -> f64 {
    let mut total = 0.0;
    // negative side
    let (nlo, nhi) = (lo, hi.min(-eps));
    if nlo < nhi {
        total += piece(c0, m, nlo, nhi);
    }
    let (plo, phi) = (lo.max(eps), hi);
    if plo < phi {
        total += piece(c0, m, plo, phi);
    }
    total
}

/// `∫_{lo}^{hi} (c0 + m·s)/s ds` for `[lo, hi]` on one side of zero.
fn piece(c0: f64, m: f64, lo: f64, hi: f64) -> f64 {
    let width = hi - lo;
    let near = math::abs(lo).min(math::abs(hi));
    if near == 0.0 {
        // only reachable with ε = 0, where the interval cannot touch zero
        return 0.0;
    }
    if width <= 0.1 * near {
        // 4-point Gauss-Legendre; the integrand is smooth and the log form cancels
        const X: [f64; 2] = [0.339_981_043_584_856_3, 0.861_136_311_594_052_6];
        const W: [f64; 2] = [0.652_145_154_862_546_1, 0.347_854_845_137_453_9];
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * width;
        let mut acc = 0.0;
        for (x, w) in X.iter().zip(W) {
            for s in [mid - half * x, mid + half * x] {
                acc += w * (c0 + m * s) / s;
            }
        }
        return acc * half;
    }
    c0 * math::log(hi / lo) + m * width
}

/// Cut-off wobble below this fraction of `abs_tol` cannot move a verdict.
pub const VOLUME_NOISE_FRACTION: f64 = 0.1;

/// Runs the whole pipeline on one field.
pub fn compute_invariants<F: Field + ?Sized>(
    field: &F,
    chart: &SurfaceChart,
    spec: &GridSpec,
    tol: &Tolerances,
) -> Result<InvariantRecord, PipelineError> {
    let sample = chart::sample(field, chart, spec).at(Stage::Sample)?;
    let zero_set = zeroset::extract_zero_set(field, &sample, chart, tol.g_tol).at(Stage::ZeroSet)?;
    for i in 0..zero_set.n() {
        zeroset::collar(&zero_set, i).at(Stage::ZeroSet)?;
    }
    let regions = topology::RegionStructure::build(&sample, &zero_set).at(Stage::Topology)?;
    let periods = curve_periods(field, &zero_set).at(Stage::Periods)?;
    let graph = regions.into_graph(&zero_set, &periods).at(Stage::Topology)?;
    let eps0 = tol.eps0.unwrap_or_else(|| default_eps0(&zero_set));
    let cutoff = Cutoff {
        weight: None,
        noise_floor: VOLUME_NOISE_FRACTION * tol.abs_tol,
    };
    let volume = regularized_volume(&sample, &zero_set, eps0, cutoff).at(Stage::Volume)?;
    Ok(InvariantRecord {
        surface: chart.kind,
        genus: chart.genus(),
        n: zero_set.n(),
        periods,
        volume: volume.value,
        volume_error_estimate: volume.error_estimate,
        volume_detail: volume,
        topology: graph,
        zero_set,
    })
}

fn curve_periods<F: Field + ?Sized>(field: &F, zs: &ZeroSet) -> Result<Vec<f64>, Error> {
    #[cfg(feature = "parallel")]
    let results: Vec<Result<f64, Error>> = {
        use rayon::prelude::*;
        zs.curves.par_iter().map(|c| modular_period(field, c)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Result<f64, Error>> = zs.curves.iter().map(|c| modular_period(field, c)).collect();
    let mut out = vec![0.0; results.len()];
    for (slot, r) in out.iter_mut().zip(results) {
        *slot = r?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_field;
    use core::f64::consts::{PI, TAU};

    fn invariants(text: &str, n: usize) -> Result<InvariantRecord, PipelineError> {
        let f = parse_field(text, SurfaceKind::Sphere).unwrap();
        compute_invariants(
            &f,
            &SurfaceChart::sphere(),
            &GridSpec::new(n, n).unwrap(),
            &Tolerances::default(),
        )
    }

    #[test]
    fn triangle_integral_matches_brute_force() {
        // oracle: dense midpoint sampling of the triangle (0,0),(1,0),(0,1)
        let cases = [([0.3, 0.7, 1.9], 0.0), ([-0.4, 0.2, 0.9], 0.05), ([-2.0, -1.0, -0.5], 0.0), ([1.0, 1.0 + 1e-9, 1.0], 0.0)];
        for (vals, eps) in cases {
            let m = 800;
            let mut brute = 0.0;
            let cell = 1.0 / m as f64;
            for i in 0..m {
                for j in 0..m - i {
                    // lower-left sub-triangle centroid
                    let x = (i as f64 + 1.0 / 3.0) * cell;
                    let y = (j as f64 + 1.0 / 3.0) * cell;
                    let f = vals[0] + (vals[1] - vals[0]) * x + (vals[2] - vals[0]) * y;
                    if f.abs() > eps {
                        brute += 0.5 * cell * cell / f;
                    }
                    if j + 1 < m - i {
                        let x = (i as f64 + 2.0 / 3.0) * cell;
                        let y = (j as f64 + 2.0 / 3.0) * cell;
                        let f = vals[0] + (vals[1] - vals[0]) * x + (vals[2] - vals[0]) * y;
                        if f.abs() > eps {
                            brute += 0.5 * cell * cell / f;
                        }
                    }
                }
            }
            let exact = triangle_integral(vals, 0.5, eps);
            assert!((exact - brute).abs() < 2e-3 * brute.abs().max(1.0), "{vals:?}: {exact} vs {brute}");
        }
    }

    #[test]
    fn period_examples() {
        let r = invariants("z - 0.5", 256).unwrap();
        assert!((r.periods[0] - TAU).abs() < 1e-6 * TAU);
        let r = invariants("2*(z - 0.5)", 256).unwrap();
        assert!((r.periods[0] - PI).abs() < 1e-6 * PI);
        let r = invariants("(z-0.3)*(z+0.4)", 256).unwrap();
        let upper = r.zero_set.curves.iter().position(|c| c.points[0].s > 0.0).unwrap();
        assert!((r.periods[upper] - TAU / 0.7).abs() < 1e-6 * TAU / 0.7);
    }

    #[test]
    fn volume_examples() {
        let v = |t: &str| invariants(t, 256).unwrap().volume;
        let ln3 = 3f64.ln();
        assert!(v("z").abs() < 1e-2);
        assert!((v("z - 0.5") - TAU * ln3).abs() < 1e-2);
        assert!((v("z + 0.5") + TAU * ln3).abs() < 1e-2);
    }

    #[test]
    fn symplectic_record() {
        let r = invariants("1", 64).unwrap();
        assert_eq!(r.n, 0);
        assert!(r.periods.is_empty());
        // dz∧dθ is negatively oriented for the outward normal
        assert!((r.volume + 2.0 * TAU).abs() < 1e-10);
        let r = invariants("-1", 64).unwrap();
        assert!((r.volume - 2.0 * TAU).abs() < 1e-10);
    }

    #[test]
    fn degenerate_zero_reports_stage() {
        let e = invariants("z^2", 128).unwrap_err();
        assert_eq!(e.stage, Stage::ZeroSet);
        assert_eq!(e.kind(), "NonRegularZero");
    }

    #[test]
    fn reversal_is_an_involution() {
        let r = invariants("(z-0.3)*(z+0.4)", 128).unwrap();
        assert_eq!(r.reversed().reversed(), r);
        assert_eq!(r.reversed().volume, -r.volume);
    }
}
