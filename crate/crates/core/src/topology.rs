//! Signed region-adjacency graph of the complement of the zero set,
//! canonical codes, tolerance-based graph matching and torus winding classes.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write;

use crate::chart::{GridSample, SurfaceKind};
use crate::math::{self, TAU};
use crate::zeroset::{OrientedZeroCurve, ZeroSet};
use crate::Error;

/// Default quantum for `ln T` in canonical codes.
pub const DEFAULT_WEIGHT_QUANTUM: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn of(v: f64) -> Sign {
        if v >= 0.0 {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }

    pub fn flipped(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    pub fn ascii(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Minus => '-',
        }
    }
}

/// Winding pair `(p, q)` of a torus curve in `(u, v)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HomologyClass {
    pub p: i64,
    pub q: i64,
}

impl HomologyClass {
    pub fn is_trivial(&self) -> bool {
        self.p == 0 && self.q == 0
    }

    pub fn negated(self) -> HomologyClass {
        HomologyClass {
            p: -self.p,
            q: -self.q,
        }
    }
}

/// Integer winding pair of a closed torus polyline.
pub fn winding_numbers(curve: &OrientedZeroCurve) -> Result<HomologyClass, Error> {
    let (du, dv) = curve.displacement();
    let round = |d: f64| -> Result<i64, Error> {
        let x = d / TAU;
        let r = math::round(x);
        if math::abs(x - r) > 1e-3 {
            return Err(Error::NonInteger { value: x });
        }
        Ok(r as i64)
    };
    Ok(HomologyClass {
        p: round(du)?,
        q: round(dv)?,
    })
}

/// A zero curve as a graph edge between the regions on its two sides.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphEdge {
    pub curve: usize,
    /// Region where `f > 0`.
    pub plus: usize,
    /// Region where `f < 0`.
    pub minus: usize,
    /// Modular period.
    pub weight: f64,
    /// Torus winding class; `None` on the sphere.
    pub winding: Option<HomologyClass>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignedTopologyGraph {
    pub surface: SurfaceKind,
    pub signs: Vec<Sign>,
    pub edges: Vec<GraphEdge>,
    pub is_tree: bool,
}

impl SignedTopologyGraph {
    pub fn vertex_count(&self) -> usize {
        self.signs.len()
    }

    /// Same graph with every sign flipped and windings reversed.
    pub fn reversed(&self) -> SignedTopologyGraph {
        SignedTopologyGraph {
            surface: self.surface,
            signs: self.signs.iter().map(|s| s.flipped()).collect(),
            edges: self
                .edges
                .iter()
                .map(|e| GraphEdge {
                    curve: e.curve,
                    plus: e.minus,
                    minus: e.plus,
                    weight: e.weight,
                    winding: e.winding.map(HomologyClass::negated),
                })
                .collect(),
            is_tree: self.is_tree,
        }
    }

    /// Curves whose winding class is nonzero.
    pub fn nontrivial_curve_count(&self) -> usize {
        self.edges
            .iter()
            .filter(|e| e.winding.is_some_and(|w| !w.is_trivial()))
            .count()
    }

    fn endpoints(&self, e: &GraphEdge) -> (usize, usize) {
        (e.plus, e.minus)
    }

    fn degree(&self) -> Vec<usize> {
        let mut d = vec![0; self.vertex_count()];
        for e in &self.edges {
            d[e.plus] += 1;
            d[e.minus] += 1;
        }
        d
    }

    fn is_connected(&self) -> bool {
        let n = self.vertex_count();
        if n == 0 {
            return true;
        }
        let mut uf = UnionFind::new(n);
        for e in &self.edges {
            uf.union(e.plus, e.minus);
        }
        let r = uf.find(0);
        (1..n).all(|v| uf.find(v) == r)
    }

    /// Graphviz rendering: vertex labels `+`/`−`, edge labels the periods.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("graph regions {\n");
        for (v, sign) in self.signs.iter().enumerate() {
            let label = match sign {
                Sign::Plus => "+",
                Sign::Minus => "\u{2212}",
            };
            let _ = writeln!(s, "  v{v} [label=\"{label}\"];");
        }
        for e in &self.edges {
            let _ = writeln!(
                s,
                "  v{} -- v{} [label=\"{}\", curve={}];",
                e.plus,
                e.minus,
                math::significant(e.weight, 6),
                e.curve
            );
        }
        s.push_str("}\n");
        s
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // smaller root wins so labels follow node order
            if ra < rb {
                self.parent[rb] = ra;
            } else {
                self.parent[ra] = rb;
            }
        }
    }
}

/// Regions of the complement of the zero set and the curve-region incidence,
/// before periods are attached.
#[derive(Debug, Clone)]
pub struct RegionStructure {
    surface: SurfaceKind,
    signs: Vec<Sign>,
    /// `(plus, minus)` region of each curve.
    sides: Vec<(usize, usize)>,
}

impl RegionStructure {
    /// Flood-fills same-sign grid nodes (saddle cells joined through their
    /// centre, consistently with the contouring) and reads off, for each
    /// curve, the regions on its two sides.
    pub fn build(sample: &GridSample, zeroset: &ZeroSet) -> Result<Self, Error> {
        let n = sample.len();
        let mut uf = UnionFind::new(n);
        let rows = sample.rows();
        for i in 0..rows {
            for j in 0..sample.n2 {
                let k = sample.index(i, j);
                let s = Sign::of(sample.values[k]);
                let right = sample.index(i, sample.next_col(j));
                if Sign::of(sample.values[right]) == s {
                    uf.union(k, right);
                }
                if let Some(ni) = sample.next_row(i) {
                    let up = sample.index(ni, j);
                    if Sign::of(sample.values[up]) == s {
                        uf.union(k, up);
                    }
                }
            }
        }
        // saddles: the diagonal matching the centre's sign is connected
        for (&k0, &centre_positive) in &zeroset.saddles {
            let (ci, cj) = (k0 / sample.n2, k0 % sample.n2);
            let ni = sample.next_row(ci).expect("cell row");
            let nj = sample.next_col(cj);
            let positive_corner0 = sample.values[k0] >= 0.0;
            if centre_positive == positive_corner0 {
                uf.union(k0, sample.index(ni, nj));
            } else {
                uf.union(sample.index(ni, cj), sample.index(ci, nj));
            }
        }

        let mut signs = Vec::new();
        let mut root_label: BTreeMap<usize, usize> = BTreeMap::new();
        let label: Vec<usize> = (0..n)
            .map(|k| {
                let r = uf.find(k);
                *root_label.entry(r).or_insert_with(|| {
                    signs.push(Sign::of(sample.values[r]));
                    signs.len() - 1
                })
            })
            .collect();

        let idx_ends = |e: u32| -> (usize, usize) {
            let s_count = sample.cell_rows() * sample.n2;
            let e = e as usize;
            if e < s_count {
                let (i, j) = (e / sample.n2, e % sample.n2);
                let ni = sample.next_row(i).expect("cell row");
                (sample.index(i, j), sample.index(ni, j))
            } else {
                let k = e - s_count;
                let (i, j) = (k / sample.n2, k % sample.n2);
                (sample.index(i, j), sample.index(i, sample.next_col(j)))
            }
        };

        let mut sides = Vec::with_capacity(zeroset.n());
        for c in &zeroset.curves {
            let mut plus = None;
            let mut minus = None;
            for &e in &c.edges {
                let (a, b) = idx_ends(e);
                for node in [a, b] {
                    let region = label[node];
                    let slot = if signs[region] == Sign::Plus {
                        &mut plus
                    } else {
                        &mut minus
                    };
                    match *slot {
                        None => *slot = Some(region),
                        Some(r) if r == region => {}
                        Some(_) => return Err(Error::SignInconsistent { region }),
                    }
                }
            }
            match (plus, minus) {
                (Some(p), Some(m)) => sides.push((p, m)),
                (Some(r), None) | (None, Some(r)) => return Err(Error::SignInconsistent { region: r }),
                (None, None) => unreachable!("a curve crosses at least one edge"),
            }
        }

        let structure = RegionStructure {
            surface: sample.kind,
            signs,
            sides,
        };
        if sample.kind == SurfaceKind::Sphere {
            let v = structure.signs.len();
            let e = structure.sides.len();
            let probe = structure.clone().graph_with(&vec![1.0; e], vec![None; e]);
            if v != e + 1 || !probe.is_connected() {
                return Err(Error::TreeViolation { vertices: v, edges: e });
            }
        }
        Ok(structure)
    }

    pub fn vertex_count(&self) -> usize {
        self.signs.len()
    }

    /// Attaches periods (and, on the torus, winding classes) to the curve edges.
    pub fn into_graph(self, zeroset: &ZeroSet, periods: &[f64]) -> Result<SignedTopologyGraph, Error> {
        if periods.len() != self.sides.len() {
            return Err(Error::ShapeMismatch {
                expected: self.sides.len(),
                found: periods.len(),
            });
        }
        let windings = match self.surface {
            SurfaceKind::Sphere => vec![None; periods.len()],
            SurfaceKind::Torus => zeroset
                .curves
                .iter()
                .map(|c| winding_numbers(c).map(Some))
                .collect::<Result<Vec<_>, _>>()?,
        };
        Ok(self.graph_with(periods, windings))
    }

    fn graph_with(self, periods: &[f64], windings: Vec<Option<HomologyClass>>) -> SignedTopologyGraph {
        let edges: Vec<GraphEdge> = self
            .sides
            .iter()
            .zip(periods)
            .zip(windings)
            .enumerate()
            .map(|(curve, ((&(plus, minus), &weight), winding))| GraphEdge {
                curve,
                plus,
                minus,
                weight,
                winding,
            })
            .collect();
        let mut g = SignedTopologyGraph {
            surface: self.surface,
            signs: self.signs,
            edges,
            is_tree: false,
        };
        g.is_tree = g.edges.len() + 1 == g.vertex_count() && g.is_connected();
        g
    }
}

/// Builds the signed graph for a zero set with known periods.
pub fn build_region_graph(
    sample: &GridSample,
    zeroset: &ZeroSet,
    periods: &[f64],
) -> Result<SignedTopologyGraph, Error> {
    RegionStructure::build(sample, zeroset)?.into_graph(zeroset, periods)
}

/// Isomorphism-class key of a signed graph with quantized weights.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CanonicalCode(pub String);

impl core::fmt::Display for CanonicalCode {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(&self.0)
    }
}

/// Quantized `ln T`; equal quanta imply a relative difference below `q`.
fn quantize(weight: f64, quantum: f64) -> i64 {
    math::round(math::log(weight) / quantum) as i64
}

/// Canonical code including quantized weights.
pub fn canonical_code(graph: &SignedTopologyGraph, weight_quantum: f64) -> CanonicalCode {
    code_with(graph, Some(weight_quantum))
}

/// Canonical code of the signed graph alone, ignoring weights.
pub fn topology_code(graph: &SignedTopologyGraph) -> CanonicalCode {
    code_with(graph, None)
}

fn code_with(graph: &SignedTopologyGraph, quantum: Option<f64>) -> CanonicalCode {
    let labels: Vec<Option<i64>> = graph
        .edges
        .iter()
        .map(|e| quantum.map(|q| quantize(e.weight, q)))
        .collect();
    if graph.vertex_count() == 0 {
        return CanonicalCode(String::new());
    }
    if graph.is_tree {
        CanonicalCode(tree_code(graph, &labels))
    } else {
        CanonicalCode(general_code(graph, &labels))
    }
}

fn adjacency(graph: &SignedTopologyGraph) -> Vec<Vec<(usize, usize)>> {
    let mut adj = vec![Vec::new(); graph.vertex_count()];
    for (k, e) in graph.edges.iter().enumerate() {
        let (a, b) = graph.endpoints(e);
        adj[a].push((b, k));
        adj[b].push((a, k));
    }
    adj
}

/// AHU encoding rooted at the centre(s); the smaller string wins.
fn tree_code(graph: &SignedTopologyGraph, labels: &[Option<i64>]) -> String {
    let adj = adjacency(graph);
    let n = graph.vertex_count();
    // centres by repeated leaf stripping
    let mut degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut remaining = n;
    let mut layer: Vec<usize> = (0..n).filter(|&v| degree[v] <= 1).collect();
    let mut removed = vec![false; n];
    while remaining > 2 {
        let mut next = Vec::new();
        for &v in &layer {
            removed[v] = true;
            remaining -= 1;
            for &(w, _) in &adj[v] {
                if !removed[w] {
                    degree[w] -= 1;
                    if degree[w] == 1 {
                        next.push(w);
                    }
                }
            }
        }
        layer = next;
    }
    let centres: Vec<usize> = (0..n).filter(|&v| !removed[v]).collect();
    centres
        .into_iter()
        .map(|c| rooted_code(graph, &adj, labels, c, usize::MAX))
        .min()
        .expect("a nonempty tree has a centre")
}

fn rooted_code(
    graph: &SignedTopologyGraph,
    adj: &[Vec<(usize, usize)>],
    labels: &[Option<i64>],
    v: usize,
    parent: usize,
) -> String {
    let mut children: Vec<String> = adj[v]
        .iter()
        .filter(|&&(w, _)| w != parent)
        .map(|&(w, k)| {
            let sub = rooted_code(graph, adj, labels, w, v);
            match labels[k] {
                Some(q) => format!("{q}:{sub}"),
                None => sub,
            }
        })
        .collect();
    children.sort();
    let mut s = String::new();
    s.push(graph.signs[v].ascii());
    if !children.is_empty() {
        s.push('(');
        s.push_str(&children.join(","));
        s.push(')');
    }
    s
}

/// Colour refinement with individualization; the minimum leaf encoding is canonical.
fn general_code(graph: &SignedTopologyGraph, labels: &[Option<i64>]) -> String {
    let adj = adjacency(graph);
    let initial: Vec<u64> = graph.signs.iter().map(|&s| s as u64).collect();
    let mut best: Option<String> = None;
    search_code(graph, &adj, labels, initial, &mut best);
    best.expect("search visits at least one leaf")
}

/// A vertex colour with its sorted `(edge label, neighbour colour)` list.
type Signature = (u64, Vec<(Option<i64>, u64)>);

fn refine(adj: &[Vec<(usize, usize)>], labels: &[Option<i64>], mut colour: Vec<u64>) -> Vec<u64> {
    loop {
        let signatures: Vec<Signature> = (0..colour.len())
            .map(|v| {
                let mut nb: Vec<(Option<i64>, u64)> =
                    adj[v].iter().map(|&(w, k)| (labels[k], colour[w])).collect();
                nb.sort();
                (colour[v], nb)
            })
            .collect();
        let mut distinct = signatures.clone();
        distinct.sort();
        distinct.dedup();
        let next: Vec<u64> = signatures
            .iter()
            .map(|s| distinct.binary_search(s).expect("present") as u64)
            .collect();
        let classes_before = {
            let mut c = colour.clone();
            c.sort();
            c.dedup();
            c.len()
        };
        if distinct.len() == classes_before {
            return next;
        }
        colour = next;
    }
}

fn search_code(
    graph: &SignedTopologyGraph,
    adj: &[Vec<(usize, usize)>],
    labels: &[Option<i64>],
    colour: Vec<u64>,
    best: &mut Option<String>,
) {
    let colour = refine(adj, labels, colour);
    let n = colour.len();
    let mut counts: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for (v, &c) in colour.iter().enumerate() {
        counts.entry(c).or_default().push(v);
    }
    let Some(cell) = counts.values().find(|vs| vs.len() > 1) else {
        let code = leaf_code(graph, labels, &colour);
        if best.as_ref().is_none_or(|b| code < *b) {
            *best = Some(code);
        }
        return;
    };
    for &v in cell {
        // individualize v: it sorts before the rest of its class
        let next: Vec<u64> = (0..n)
            .map(|w| 2 * colour[w] + u64::from(!(colour[w] == colour[v] && w == v)))
            .collect();
        search_code(graph, adj, labels, next, best);
    }
}

fn leaf_code(graph: &SignedTopologyGraph, labels: &[Option<i64>], colour: &[u64]) -> String {
    let mut order: Vec<usize> = (0..colour.len()).collect();
    order.sort_by_key(|&v| colour[v]);
    let mut position = vec![0; colour.len()];
    for (p, &v) in order.iter().enumerate() {
        position[v] = p;
    }
    let signs: String = order.iter().map(|&v| graph.signs[v].ascii()).collect();
    let mut edges: Vec<(usize, usize, Option<i64>)> = graph
        .edges
        .iter()
        .zip(labels)
        .map(|(e, &l)| {
            let (a, b) = (position[e.plus], position[e.minus]);
            (a.min(b), a.max(b), l)
        })
        .collect();
    edges.sort();
    let mut s = format!("G{}:{signs}|", colour.len());
    for (a, b, l) in edges {
        match l {
            Some(q) => {
                let _ = write!(s, "{a}-{b}@{q};");
            }
            None => {
                let _ = write!(s, "{a}-{b};");
            }
        }
    }
    s
}

/// Result of matching two signed graphs.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphMatch {
    /// `(curve in first graph, curve in second graph)`, sorted by the first.
    pub curves: Vec<(usize, usize)>,
    /// Largest `|Tₐ − T_b| / max(Tₐ, T_b)` over matched curves.
    pub worst_relative: f64,
}

/// Sign-preserving isomorphism minimizing the worst relative period
/// discrepancy; `None` when the signed graphs are not isomorphic.
pub fn best_match(g1: &SignedTopologyGraph, g2: &SignedTopologyGraph) -> Option<GraphMatch> {
    let n = g1.vertex_count();
    if n != g2.vertex_count() || g1.edges.len() != g2.edges.len() {
        return None;
    }
    let count = |g: &SignedTopologyGraph| g.signs.iter().filter(|&&s| s == Sign::Plus).count();
    if count(g1) != count(g2) {
        return None;
    }
    let d1 = g1.degree();
    let d2 = g2.degree();
    let order = search_order(g1);
    let mut state = MatchState {
        g1,
        g2,
        d1,
        d2,
        order,
        map: vec![usize::MAX; n],
        used: vec![false; n],
        best: None,
    };
    state.extend(0, 0.0);
    let (map, worst) = state.best?;
    Some(GraphMatch {
        curves: curve_matching(g1, g2, &map),
        worst_relative: worst,
    })
}

/// Tolerance matching: `Some` if some sign-preserving isomorphism keeps every
/// period within `rel_tol`.
pub fn graphs_equivalent(
    g1: &SignedTopologyGraph,
    g2: &SignedTopologyGraph,
    rel_tol: f64,
) -> Option<GraphMatch> {
    best_match(g1, g2).filter(|m| m.worst_relative <= rel_tol)
}

/// Breadth-first vertex order so that each new vertex has a mapped neighbour.
fn search_order(g: &SignedTopologyGraph) -> Vec<usize> {
    let adj = adjacency(g);
    let n = g.vertex_count();
    let mut seen = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for s in 0..n {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut queue = alloc::collections::VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &(w, _) in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
    }
    order
}

fn relative(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == 0.0 {
        0.0
    } else {
        math::abs(a - b) / m
    }
}

fn weights_between(g: &SignedTopologyGraph, a: usize, b: usize) -> Vec<f64> {
    let mut w: Vec<f64> = g
        .edges
        .iter()
        .filter(|e| (e.plus == a && e.minus == b) || (e.plus == b && e.minus == a))
        .map(|e| e.weight)
        .collect();
    w.sort_by(f64::total_cmp);
    w
}

struct MatchState<'a> {
    g1: &'a SignedTopologyGraph,
    g2: &'a SignedTopologyGraph,
    d1: Vec<usize>,
    d2: Vec<usize>,
    order: Vec<usize>,
    map: Vec<usize>,
    used: Vec<bool>,
    best: Option<(Vec<usize>, f64)>,
}

impl MatchState<'_> {
    fn extend(&mut self, depth: usize, worst: f64) {
        if let Some((_, b)) = &self.best {
            if worst >= *b {
                return;
            }
        }
        if depth == self.order.len() {
            self.best = Some((self.map.clone(), worst));
            return;
        }
        let v = self.order[depth];
        for w in 0..self.g2.vertex_count() {
            if self.used[w] || self.g2.signs[w] != self.g1.signs[v] || self.d2[w] != self.d1[v] {
                continue;
            }
            let mut step_worst = worst;
            let mut ok = true;
            for &u in &self.order[..depth] {
                let a = weights_between(self.g1, v, u);
                let b = weights_between(self.g2, w, self.map[u]);
                if a.len() != b.len() {
                    ok = false;
                    break;
                }
                for (x, y) in a.iter().zip(&b) {
                    step_worst = step_worst.max(relative(*x, *y));
                }
            }
            if !ok {
                continue;
            }
            self.map[v] = w;
            self.used[w] = true;
            self.extend(depth + 1, step_worst);
            self.used[w] = false;
            self.map[v] = usize::MAX;
        }
    }
}

/// Pairs parallel edges between matched vertex pairs in weight order.
fn curve_matching(g1: &SignedTopologyGraph, g2: &SignedTopologyGraph, map: &[usize]) -> Vec<(usize, usize)> {
    let mut groups1: BTreeMap<(usize, usize), Vec<&GraphEdge>> = BTreeMap::new();
    for e in &g1.edges {
        groups1.entry((map[e.plus], map[e.minus])).or_default().push(e);
    }
    let mut groups2: BTreeMap<(usize, usize), Vec<&GraphEdge>> = BTreeMap::new();
    for e in &g2.edges {
        groups2.entry((e.plus, e.minus)).or_default().push(e);
    }
    let mut out = Vec::new();
    for (key, mut a) in groups1 {
        let mut b = groups2.remove(&key).unwrap_or_default();
        a.sort_by(|x, y| x.weight.total_cmp(&y.weight));
        b.sort_by(|x, y| x.weight.total_cmp(&y.weight));
        out.extend(a.iter().zip(&b).map(|(x, y)| (x.curve, y.curve)));
    }
    out.sort();
    out
}
