//! Zero curves of `f`: extraction by marching squares, regularity checks,
//! orientation by the modular vector field, and collar widths.
//!
//! In the chart the modular field of `f·π₀` with respect to the reference
//! area form is `X = f_t ∂_s - f_s ∂_t`; it is tangent to every zero curve and
//! each polyline is traversed along it.

use alloc::collections::{BTreeMap, BinaryHeap};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::chart::{GridSample, SurfaceChart, SurfaceKind};
use crate::dsl::Field;
use crate::math::{self, TAU};
use crate::{ChartPoint, Error};

/// Default lower bound on `|∇f|` along a zero curve.
pub const DEFAULT_G_TOL: f64 = 1e-3;
/// Collar halfwidths are capped at this fraction of the global gradient margin.
pub const COLLAR_CAP_FACTOR: f64 = 0.2;
/// Distinct curves must stay this many cells apart.
pub const MIN_SEPARATION_CELLS: f64 = 2.0;
/// The band `{|f| < c}` must span at least this many cells across a curve.
pub const MIN_COLLAR_CELLS: f64 = 4.0;

const NO_LINK: u32 = u32::MAX;

/// Spatial hash of curve vertices: bucket -> `(curve, s, t)`.
pub(crate) type Buckets = BTreeMap<(i64, i64), Vec<(usize, f64, f64)>>;

/// Direction of traversal relative to the extraction order (smallest
/// crossing-edge id first, then towards its smaller-id neighbour).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    Forward,
    Backward,
}

impl Orientation {
    pub fn reversed(self) -> Orientation {
        match self {
            Orientation::Forward => Orientation::Backward,
            Orientation::Backward => Orientation::Forward,
        }
    }
}

/// A closed zero curve traversed along the modular vector field.
#[derive(Debug, Clone, PartialEq)]
pub struct OrientedZeroCurve {
    /// Unwrapped chart polyline; the last point is the first point shifted by
    /// whole periods.
    pub points: Vec<ChartPoint>,
    pub orientation: Orientation,
    /// Minimum chart-Euclidean `|∇f|` over the vertices.
    pub min_grad: f64,
    /// Largest `c` (capped) such that the component of `{|f| < c}` around
    /// this curve meets no other curve and no polar row.
    pub collar_halfwidth: f64,
    /// Largest change of `f` across one grid cell along the curve.
    pub cell_variation: f64,
    pub(crate) edges: Vec<u32>,
}

impl OrientedZeroCurve {
    /// Net unwrapped displacement from first to last point.
    pub fn displacement(&self) -> (f64, f64) {
        let a = self.points[0];
        let b = self.points[self.points.len() - 1];
        (b.s - a.s, b.t - a.t)
    }

    /// Chart-Euclidean polyline length.
    pub fn chart_length(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| math::hypot(w[1].s - w[0].s, w[1].t - w[0].t))
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZeroSet {
    pub kind: SurfaceKind,
    pub curves: Vec<OrientedZeroCurve>,
    /// Minimum of `min_grad` over all curves (`+∞` when there are none).
    pub g_min: f64,
    /// Grid spacing the curves were extracted at.
    pub h1: f64,
    pub h2: f64,
    /// Saddle cells (by lower-left node index) and whether their centre is positive.
    pub(crate) saddles: BTreeMap<usize, bool>,
}

impl ZeroSet {
    pub fn n(&self) -> usize {
        self.curves.len()
    }

    pub fn collar_cap(&self) -> f64 {
        COLLAR_CAP_FACTOR * self.g_min
    }
}

/// Grid edges: `S` edges run along the first coordinate, `T` edges along the second.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Edge {
    S { i: usize, j: usize },
    T { i: usize, j: usize },
}

struct EdgeIndex {
    n2: usize,
    s_count: usize,
}

impl EdgeIndex {
    fn new(sample: &GridSample) -> Self {
        EdgeIndex {
            n2: sample.n2,
            s_count: sample.cell_rows() * sample.n2,
        }
    }

    fn total(&self, sample: &GridSample) -> usize {
        self.s_count + sample.rows() * self.n2
    }

    fn id(&self, e: Edge) -> u32 {
        (match e {
            Edge::S { i, j } => i * self.n2 + j,
            Edge::T { i, j } => self.s_count + i * self.n2 + j,
        }) as u32
    }

    fn edge(&self, id: u32) -> Edge {
        let id = id as usize;
        if id < self.s_count {
            Edge::S {
                i: id / self.n2,
                j: id % self.n2,
            }
        } else {
            let k = id - self.s_count;
            Edge::T {
                i: k / self.n2,
                j: k % self.n2,
            }
        }
    }

    /// Node endpoints `(i, j)` of an edge.
    fn ends(&self, sample: &GridSample, e: Edge) -> ((usize, usize), (usize, usize)) {
        match e {
            Edge::S { i, j } => ((i, j), (sample.next_row(i).expect("cell row"), j)),
            Edge::T { i, j } => ((i, j), (i, sample.next_col(j))),
        }
    }
}

#[inline]
fn positive(v: f64) -> bool {
    v >= 0.0
}

/// Extracts, validates and orients the zero curves of `field`.
pub fn extract_zero_set<F: Field + ?Sized>(
    field: &F,
    sample: &GridSample,
    chart: &SurfaceChart,
    g_tol: f64,
) -> Result<ZeroSet, Error> {
    if field.surface() != chart.kind || sample.kind != chart.kind {
        return Err(Error::SurfaceMismatch {
            expected: chart.kind,
            found: field.surface(),
        });
    }
    let idx = EdgeIndex::new(sample);
    let mut links = vec![[NO_LINK; 2]; idx.total(sample)];
    let mut crossing_point: BTreeMap<u32, ChartPoint> = BTreeMap::new();
    let mut saddles: BTreeMap<usize, bool> = BTreeMap::new();

    for ci in 0..sample.cell_rows() {
        let ni = sample.next_row(ci).expect("cell row has an upper node row");
        for cj in 0..sample.n2 {
            let nj = sample.next_col(cj);
            let corners = [(ci, cj), (ni, cj), (ni, nj), (ci, nj)];
            let pos = corners.map(|(i, j)| positive(sample.value(i, j)));
            let edges = [
                Edge::S { i: ci, j: cj },
                Edge::T { i: ni, j: cj },
                Edge::S { i: ci, j: nj },
                Edge::T { i: ci, j: cj },
            ];
            // edge k joins corners k and k+1 (mod 4)
            let crossed: Vec<usize> = (0..4).filter(|&k| pos[k] != pos[(k + 1) % 4]).collect();
            let pairs: Vec<(usize, usize)> = match crossed.len() {
                0 => continue,
                2 => vec![(crossed[0], crossed[1])],
                4 => {
                    let centre = cell_centre_sign(field, sample, ci, cj)?;
                    saddles.insert(sample.index(ci, cj), centre);
                    if centre == pos[0] {
                        // corners 0 and 2 joined through the centre: cut off 1 and 3
                        vec![(0, 1), (2, 3)]
                    } else {
                        vec![(3, 0), (1, 2)]
                    }
                }
                _ => unreachable!("a closed square crosses an even number of times"),
            };
            for (a, b) in pairs {
                let (ea, eb) = (idx.id(edges[a]), idx.id(edges[b]));
                for (from, to) in [(ea, eb), (eb, ea)] {
                    let slot = &mut links[from as usize];
                    if slot[0] == NO_LINK {
                        slot[0] = to;
                    } else {
                        slot[1] = to;
                    }
                }
                for e in [ea, eb] {
                    if let alloc::collections::btree_map::Entry::Vacant(v) = crossing_point.entry(e) {
                        v.insert(crossing(field, sample, idx.edge(e), &idx)?);
                    }
                }
            }
        }
    }

    // Chain edges into closed loops.
    let mut visited = vec![false; links.len()];
    let mut loops: Vec<Vec<u32>> = Vec::new();
    for &start in crossing_point.keys() {
        if visited[start as usize] {
            continue;
        }
        let first = links[start as usize];
        if first[0] == NO_LINK || first[1] == NO_LINK {
            return Err(Error::AmbiguousTopology(format!("open contour at edge {start}")));
        }
        let mut chain = vec![start];
        visited[start as usize] = true;
        let mut prev = start;
        let mut cur = first[0].min(first[1]);
        while cur != start {
            if visited[cur as usize] {
                return Err(Error::AmbiguousTopology(format!("contour revisits edge {cur}")));
            }
            visited[cur as usize] = true;
            chain.push(cur);
            let l = links[cur as usize];
            if l[0] == NO_LINK || l[1] == NO_LINK {
                return Err(Error::AmbiguousTopology(format!("open contour at edge {cur}")));
            }
            let next = if l[0] != prev { l[0] } else { l[1] };
            prev = cur;
            cur = next;
        }
        loops.push(chain);
    }

    let mut curves = Vec::with_capacity(loops.len());
    for (k, chain) in loops.into_iter().enumerate() {
        let raw: Vec<ChartPoint> = chain.iter().map(|e| crossing_point[e]).collect();
        let curve = orient_curve(field, sample, chain, raw)?;
        if touches_pole(sample, &idx, &curve.edges) {
            return Err(Error::PoleContact { curve: k });
        }
        if curve.min_grad < g_tol {
            let p = weakest_vertex(field, &curve)?;
            return Err(Error::NonRegularZero {
                min_grad: curve.min_grad,
                tol: g_tol,
                s: p.s,
                t: p.t,
            });
        }
        curves.push(curve);
    }

    scan_touching_zeros(field, sample, g_tol)?;
    check_separation(sample, &curves)?;

    let g_min = curves.iter().map(|c| c.min_grad).fold(f64::INFINITY, f64::min);
    let mut zs = ZeroSet {
        kind: chart.kind,
        curves,
        g_min,
        h1: sample.h1,
        h2: sample.h2,
        saddles,
    };
    let cap = zs.collar_cap();
    let widths: Vec<f64> = (0..zs.n())
        .map(|k| bottleneck_collar(sample, &idx, &zs.curves, k, cap))
        .collect();
    for (c, w) in zs.curves.iter_mut().zip(widths) {
        c.collar_halfwidth = w;
    }
    Ok(zs)
}

/// Collar halfwidth of curve `i`, failing if the grid cannot resolve it.
pub fn collar(zeroset: &ZeroSet, i: usize) -> Result<f64, Error> {
    let curve = zeroset
        .curves
        .get(i)
        .ok_or_else(|| Error::InvalidParameter(format!("no zero curve with index {i}")))?;
    let required = 0.5 * MIN_COLLAR_CELLS * curve.cell_variation;
    if curve.collar_halfwidth < required {
        return Err(Error::CollarTooThin {
            curve: i,
            halfwidth: curve.collar_halfwidth,
            required,
        });
    }
    Ok(curve.collar_halfwidth)
}

fn cell_centre_sign<F: Field + ?Sized>(
    field: &F,
    sample: &GridSample,
    i: usize,
    j: usize,
) -> Result<bool, Error> {
    let p = sample.point(i, j);
    let at = |fs: f64, ft: f64| field.eval(ChartPoint::new(p.s + fs * sample.h1, p.t + ft * sample.h2));
    let c = at(0.5, 0.5)?;
    if c != 0.0 {
        return Ok(positive(c));
    }
    let quarters = at(0.25, 0.25)? + at(0.75, 0.25)? + at(0.25, 0.75)? + at(0.75, 0.75)?;
    if quarters != 0.0 {
        return Ok(positive(quarters));
    }
    Err(Error::AmbiguousTopology(format!(
        "saddle cell ({i}, {j}) undecided at two resolutions"
    )))
}

/// Linear interpolation along the edge followed by one Newton step with the
/// exact partial along the edge direction.
fn crossing<F: Field + ?Sized>(
    field: &F,
    sample: &GridSample,
    e: Edge,
    idx: &EdgeIndex,
) -> Result<ChartPoint, Error> {
    let ((ai, aj), (bi, bj)) = idx.ends(sample, e);
    let fa = sample.value(ai, aj);
    let fb = sample.value(bi, bj);
    let frac = fa / (fa - fb);
    let a = sample.point(ai, aj);
    let (mut p, along_first) = match e {
        Edge::S { .. } => (ChartPoint::new(a.s + frac * sample.h1, a.t), true),
        Edge::T { .. } => (ChartPoint::new(a.s, a.t + frac * sample.h2), false),
    };
    let f = field.eval(p)?;
    let (d1, d2) = field.partials(p)?;
    let slope = if along_first { d1 } else { d2 };
    if f != 0.0 && slope != 0.0 {
        let step = f / slope;
        if along_first {
            let s = p.s - step;
            if s >= a.s && s <= a.s + sample.h1 {
                p.s = s;
            }
        } else {
            let t = p.t - step;
            if t >= a.t && t <= a.t + sample.h2 {
                p.t = t;
            }
        }
    }
    Ok(p)
}

/// Unwraps the loop, closes it, and orients it along the modular field.
fn orient_curve<F: Field + ?Sized>(
    field: &F,
    sample: &GridSample,
    mut edges: Vec<u32>,
    raw: Vec<ChartPoint>,
) -> Result<OrientedZeroCurve, Error> {
    let s_period = if sample.kind.first_periodic() {
        Some(TAU)
    } else {
        None
    };
    let unwrap_next = |prev: ChartPoint, p: ChartPoint| -> ChartPoint {
        let ds = match s_period {
            Some(per) => math::wrap_delta(p.s - prev.s, per),
            None => p.s - prev.s,
        };
        let dt = math::wrap_delta(p.t - prev.t, TAU);
        ChartPoint::new(prev.s + ds, prev.t + dt)
    };
    let mut pts: Vec<ChartPoint> = Vec::with_capacity(raw.len() + 1);
    for p in raw {
        let q = match pts.last() {
            Some(&prev) => unwrap_next(prev, p),
            None => p,
        };
        if let Some(&prev) = pts.last() {
            if math::hypot(q.s - prev.s, q.t - prev.t) < 1e-14 {
                continue;
            }
        }
        pts.push(q);
    }
    while pts.len() > 1 {
        let closing = unwrap_next(pts[pts.len() - 1], pts[0]);
        let (fs, ft) = (closing.s - pts[0].s, closing.t - pts[0].t);
        let last = pts[pts.len() - 1];
        let back = ChartPoint::new(last.s - fs, last.t - ft);
        if math::hypot(back.s - pts[0].s, back.t - pts[0].t) < 1e-14 {
            pts.pop();
        } else {
            break;
        }
    }
    if pts.len() < 3 {
        return Err(Error::AmbiguousTopology(
            "zero curve smaller than a grid cell".into(),
        ));
    }
    let closing = unwrap_next(pts[pts.len() - 1], pts[0]);
    pts.push(closing);

    // Score the traversal against X = (f_t, -f_s).
    let m = pts.len() - 1;
    let mut grads = Vec::with_capacity(m);
    for p in &pts[..m] {
        grads.push(field.partials(*p)?);
    }
    let tangent = |k: usize| -> (f64, f64) {
        let next = pts[k + 1];
        let prev = if k == 0 {
            let last = pts[m - 1];
            let (fs, ft) = (pts[m].s - pts[0].s, pts[m].t - pts[0].t);
            ChartPoint::new(last.s - fs, last.t - ft)
        } else {
            pts[k - 1]
        };
        (next.s - prev.s, next.t - prev.t)
    };
    let mut score = 0.0;
    for (k, &(fs, ft)) in grads.iter().enumerate() {
        let (ds, dt) = tangent(k);
        let norm = math::hypot(ds, dt) * math::hypot(fs, ft);
        if norm > 0.0 {
            score += (ds * ft - dt * fs) / norm;
        }
    }
    let orientation = if score >= 0.0 {
        Orientation::Forward
    } else {
        pts.reverse();
        edges.reverse();
        Orientation::Backward
    };
    // the vertex set is unchanged by reversal, up to a period shift
    let min_grad = grads
        .iter()
        .map(|&(a, b)| math::hypot(a, b))
        .fold(f64::INFINITY, f64::min);
    let cell_variation = grads
        .iter()
        .map(|&(a, b)| math::abs(a) * sample.h1 + math::abs(b) * sample.h2)
        .fold(0.0, f64::max);
    Ok(OrientedZeroCurve {
        points: pts,
        orientation,
        min_grad,
        collar_halfwidth: f64::INFINITY,
        cell_variation,
        edges,
    })
}

fn weakest_vertex<F: Field + ?Sized>(field: &F, c: &OrientedZeroCurve) -> Result<ChartPoint, Error> {
    let mut best = (f64::INFINITY, c.points[0]);
    for p in &c.points {
        let (a, b) = field.partials(*p)?;
        let g = math::hypot(a, b);
        if g < best.0 {
            best = (g, *p);
        }
    }
    Ok(best.1)
}

fn touches_pole(sample: &GridSample, idx: &EdgeIndex, edges: &[u32]) -> bool {
    if sample.kind != SurfaceKind::Sphere {
        return false;
    }
    let n1 = sample.n1;
    edges.iter().any(|&e| match idx.edge(e) {
        Edge::S { i, .. } => i < 2 || i + 2 >= n1,
        Edge::T { i, .. } => i <= 2 || i + 2 >= n1,
    })
}

/// Detects zeros of `f` that do not change sign (e.g. `f = z²`), which the
/// sign-based contouring cannot see. Starting from near-zero local minima of
/// `|f|`, Gauss-Newton steps towards the zero level; landing on a zero with
/// `|∇f| < g_tol` means 0 is not a regular value.
fn scan_touching_zeros<F: Field + ?Sized>(
    field: &F,
    sample: &GridSample,
    g_tol: f64,
) -> Result<(), Error> {
    let h_max = sample.h1.max(sample.h2);
    let h_min = sample.h1.min(sample.h2);
    let rows = sample.rows();
    let periodic_rows = sample.kind.first_periodic();
    for i in 0..rows {
        if sample.is_pole_row(i) {
            continue;
        }
        for j in 0..sample.n2 {
            let k = sample.index(i, j);
            let v = math::abs(sample.values[k]);
            let mut local_min = true;
            let mut neigh_grad: f64 = crate::chart::grad_norm_at(sample, k);
            for di in [-1i64, 0, 1] {
                let ii = i as i64 + di;
                let ii = if periodic_rows {
                    ii.rem_euclid(rows as i64) as usize
                } else if ii < 0 || ii >= rows as i64 {
                    continue;
                } else {
                    ii as usize
                };
                for dj in [-1i64, 0, 1] {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let jj = (j as i64 + dj).rem_euclid(sample.n2 as i64) as usize;
                    let kk = sample.index(ii, jj);
                    if math::abs(sample.values[kk]) < v {
                        local_min = false;
                    }
                    if !sample.is_pole_row(ii) {
                        neigh_grad = neigh_grad.max(crate::chart::grad_norm_at(sample, kk));
                    }
                }
            }
            if !local_min || v > 2.0 * h_max * neigh_grad + 1e-300 {
                continue;
            }
            if let Some(p) = descend_to_zero(field, sample, sample.point(i, j), g_tol, h_min, h_max)? {
                let (a, b) = field.partials(p)?;
                return Err(Error::NonRegularZero {
                    min_grad: math::hypot(a, b),
                    tol: g_tol,
                    s: p.s,
                    t: p.t,
                });
            }
        }
    }
    Ok(())
}

fn descend_to_zero<F: Field + ?Sized>(
    field: &F,
    sample: &GridSample,
    mut p: ChartPoint,
    g_tol: f64,
    h_min: f64,
    h_max: f64,
) -> Result<Option<ChartPoint>, Error> {
    let s_lo = -1.0 + 2.0 * sample.h1;
    let s_hi = 1.0 - 2.0 * sample.h1;
    for _ in 0..64 {
        let f = field.eval(p)?;
        let (a, b) = field.partials(p)?;
        let g2 = a * a + b * b;
        let g = math::sqrt(g2);
        if g < g_tol && math::abs(f) < g_tol * h_min {
            return Ok(Some(p));
        }
        if g2 == 0.0 || (math::abs(f) < 1e-13 && g >= g_tol) {
            return Ok(None);
        }
        let mut ds = -f * a / g2;
        let mut dt = -f * b / g2;
        let len = math::hypot(ds, dt);
        if len > h_max {
            ds *= h_max / len;
            dt *= h_max / len;
        }
        p.s += ds;
        p.t += dt;
        if sample.kind == SurfaceKind::Sphere {
            p.s = p.s.clamp(s_lo, s_hi);
        }
    }
    Ok(None)
}

/// Distinct curves closer than [`MIN_SEPARATION_CELLS`] cannot be told apart.
fn check_separation(sample: &GridSample, curves: &[OrientedZeroCurve]) -> Result<(), Error> {
    if curves.len() < 2 {
        return Ok(());
    }
    let per_t = sample.n2 as f64;
    let per_s = if sample.kind.first_periodic() {
        Some(sample.n1 as f64)
    } else {
        None
    };
    let scaled = |p: &ChartPoint| -> (f64, f64) {
        let s = (p.s - sample.s0) / sample.h1;
        let t = p.t / sample.h2;
        let s = match per_s {
            Some(per) => math::rem_euclid(s, per),
            None => s,
        };
        (s, math::rem_euclid(t, per_t))
    };
    let bucket = |x: f64| math::floor(x / MIN_SEPARATION_CELLS) as i64;
    let nb_s = per_s.map(|p| bucket(p - 1e-9) + 1);
    let nb_t = bucket(per_t - 1e-9) + 1;
    let mut grid = Buckets::new();
    for (k, c) in curves.iter().enumerate() {
        for p in &c.points {
            let (s, t) = scaled(p);
            grid.entry((bucket(s), bucket(t))).or_default().push((k, s, t));
        }
    }
    for (&(bs, bt), members) in &grid {
        for ds in -1..=1 {
            for dt in -1..=1 {
                let ks = match nb_s {
                    Some(n) => (bs + ds).rem_euclid(n),
                    None => bs + ds,
                };
                let kt = (bt + dt).rem_euclid(nb_t);
                let Some(others) = grid.get(&(ks, kt)) else {
                    continue;
                };
                for &(ca, sa, ta) in members {
                    for &(cb, sb, tb) in others {
                        if ca == cb {
                            continue;
                        }
                        let d_s = match per_s {
                            Some(per) => math::wrap_delta(sa - sb, per),
                            None => sa - sb,
                        };
                        let d_t = math::wrap_delta(ta - tb, per_t);
                        if math::hypot(d_s, d_t) < MIN_SEPARATION_CELLS {
                            return Err(Error::AmbiguousTopology(format!(
                                "zero curves {ca} and {cb} are closer than {MIN_SEPARATION_CELLS} cells"
                            )));
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

#[derive(PartialEq)]
struct Queued(f64, usize);

impl Eq for Queued {}

impl Ord for Queued {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Minimax path value of `|f|` from curve `k` to any other curve or polar
/// row, over the 4-neighbour node graph, capped at `cap`.
fn bottleneck_collar(
    sample: &GridSample,
    idx: &EdgeIndex,
    curves: &[OrientedZeroCurve],
    k: usize,
    cap: f64,
) -> f64 {
    let n = sample.len();
    let rows = sample.rows();
    let mut target = vec![false; n];
    let mut seed = vec![false; n];
    for (c, curve) in curves.iter().enumerate() {
        for &e in &curve.edges {
            let (a, b) = idx.ends(sample, idx.edge(e));
            for (i, j) in [a, b] {
                let node = sample.index(i, j);
                if c == k {
                    seed[node] = true;
                } else {
                    target[node] = true;
                }
            }
        }
    }
    if sample.kind == SurfaceKind::Sphere {
        for i in [0, 1, rows - 2, rows - 1] {
            for j in 0..sample.n2 {
                target[sample.index(i, j)] = true;
            }
        }
    }
    let mut best = vec![f64::INFINITY; n];
    let mut heap = BinaryHeap::new();
    for node in 0..n {
        if seed[node] {
            let c = math::abs(sample.values[node]);
            best[node] = c;
            heap.push(Queued(c, node));
        }
    }
    while let Some(Queued(cost, node)) = heap.pop() {
        if cost > best[node] {
            continue;
        }
        if cost >= cap {
            return cap;
        }
        if target[node] && !seed[node] {
            return cost;
        }
        if target[node] && seed[node] {
            // another curve shares this node
            return cost;
        }
        let (i, j) = (node / sample.n2, node % sample.n2);
        let mut neighbours = [None; 4];
        neighbours[0] = Some((i, sample.next_col(j)));
        neighbours[1] = Some((i, if j == 0 { sample.n2 - 1 } else { j - 1 }));
        neighbours[2] = sample.next_row(i).map(|ii| (ii, j));
        neighbours[3] = if i > 0 {
            Some((i - 1, j))
        } else if sample.kind.first_periodic() {
            Some((rows - 1, j))
        } else {
            None
        };
        for (ii, jj) in neighbours.into_iter().flatten() {
            let m = sample.index(ii, jj);
            let c = cost.max(math::abs(sample.values[m]));
            if c < best[m] {
                best[m] = c;
                heap.push(Queued(c, m));
            }
        }
    }
    cap
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::{sample as sample_field, GridSpec};
    use crate::dsl::parse_field;

    fn run(text: &str, kind: SurfaceKind, n: usize) -> (GridSample, Result<ZeroSet, Error>) {
        let f = parse_field(text, kind).unwrap();
        let chart = SurfaceChart::new(kind);
        let s = sample_field(&f, &chart, &GridSpec::new(n, n).unwrap()).unwrap();
        let zs = extract_zero_set(&f, &s, &chart, DEFAULT_G_TOL);
        (s, zs)
    }

    #[test]
    fn equator_runs_against_theta() {
        let (_, zs) = run("z", SurfaceKind::Sphere, 128);
        let zs = zs.unwrap();
        assert_eq!(zs.n(), 1);
        let c = &zs.curves[0];
        assert!(c.points.iter().all(|p| p.s.abs() < 1e-12));
        assert!((c.chart_length() - TAU).abs() < 1e-9);
        let (ds, dt) = c.displacement();
        assert!(ds.abs() < 1e-12 && (dt + TAU).abs() < 1e-9, "dt = {dt}");
        assert!((c.min_grad - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_parallels_have_opposite_orientation() {
        let (_, zs) = run("z^2 - 0.25", SurfaceKind::Sphere, 128);
        let zs = zs.unwrap();
        assert_eq!(zs.n(), 2);
        let dts: Vec<f64> = zs.curves.iter().map(|c| c.displacement().1).collect();
        assert!(dts[0] * dts[1] < 0.0);
        for c in &zs.curves {
            let z0 = c.points[0].s;
            assert!((z0.abs() - 0.5).abs() < 1e-9);
        }
    }

    #[test]
    fn degenerate_zero_rejected() {
        let (_, zs) = run("z^2", SurfaceKind::Sphere, 128);
        assert!(matches!(zs, Err(Error::NonRegularZero { .. })));
        // grid that misses the double root
        let (_, zs) = run("(z - 0.0011)^2", SurfaceKind::Sphere, 100);
        assert!(matches!(zs, Err(Error::NonRegularZero { .. })));
        let (_, zs) = run("z^3", SurfaceKind::Sphere, 128);
        assert!(matches!(zs, Err(Error::NonRegularZero { .. })));
    }

    #[test]
    fn pole_contact_rejected() {
        let (_, zs) = run("z - 0.995", SurfaceKind::Sphere, 256);
        assert!(matches!(zs, Err(Error::PoleContact { curve: 0 })));
    }

    #[test]
    fn reversing_f_reverses_orientation() {
        for text in ["z^2 + x/2 - 0.3", "(z-0.3)*(z+0.4)"] {
            let (_, a) = run(text, SurfaceKind::Sphere, 128);
            let neg = alloc::format!("-({text})");
            let (_, b) = run(&neg, SurfaceKind::Sphere, 128);
            let (a, b) = (a.unwrap(), b.unwrap());
            assert_eq!(a.n(), b.n());
            for (ca, cb) in a.curves.iter().zip(&b.curves) {
                assert_eq!(ca.orientation, cb.orientation.reversed());
            }
        }
    }

    #[test]
    fn modular_direction_at_every_vertex() {
        let f = parse_field("z^2 + x/2 - 0.3", SurfaceKind::Sphere).unwrap();
        let chart = SurfaceChart::sphere();
        let s = sample_field(&f, &chart, &GridSpec::new(128, 128).unwrap()).unwrap();
        let zs = extract_zero_set(&f, &s, &chart, DEFAULT_G_TOL).unwrap();
        for c in &zs.curves {
            for w in c.points.windows(2) {
                let (a, b) = f.partials_chart(w[0]).unwrap();
                let d = (w[1].s - w[0].s, w[1].t - w[0].t);
                assert!(d.0 * b - d.1 * a > 0.0);
            }
        }
    }

    #[test]
    fn torus_parallel_circles() {
        let (_, zs) = run("cos_u", SurfaceKind::Torus, 64);
        let zs = zs.unwrap();
        assert_eq!(zs.n(), 2);
        for c in &zs.curves {
            let (du, dv) = c.displacement();
            assert!(du.abs() < 1e-9 && (dv.abs() - TAU).abs() < 1e-9);
        }
    }

    #[test]
    fn collar_examples() {
        let (_, zs) = run("z", SurfaceKind::Sphere, 256);
        let zs = zs.unwrap();
        let c = collar(&zs, 0).unwrap();
        assert!((c - zs.collar_cap()).abs() < 1e-12);

        let (_, zs) = run("(z-0.3)*(z+0.4)", SurfaceKind::Sphere, 256);
        let zs = zs.unwrap();
        let midpoint = (0.35f64) * 0.35;
        for k in 0..2 {
            let c = collar(&zs, k).unwrap();
            assert!(c <= midpoint + 1e-12, "collar {c}");
            assert!(c > 0.9 * midpoint, "collar {c}");
        }
    }

    #[test]
    fn collar_too_thin_at_low_resolution() {
        let (_, zs) = run("(z-0.1)*(z+0.1)", SurfaceKind::Sphere, 32);
        let zs = zs.unwrap();
        assert_eq!(zs.n(), 2);
        assert!(matches!(collar(&zs, 0), Err(Error::CollarTooThin { .. })));
    }

    #[test]
    fn close_curves_are_ambiguous() {
        let (_, zs) = run("(z-0.05)*(z+0.05)", SurfaceKind::Sphere, 16);
        assert!(zs.is_err());
    }
}
