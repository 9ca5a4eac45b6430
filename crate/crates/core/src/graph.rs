//! Measurement graphs, lateration orderings, and complex-distance frameworks.
//!
//! Vertex 0 is the origin anchor; vertex `k ≥ 1` is signal entry `x_k`. A
//! coordinate measurement `e_k` is the edge `(0, k)`. Any pair measurement on
//! `(j, k)` (difference, sum or imaginary difference) is the edge `(j, k)`.

use std::collections::{BTreeSet, VecDeque};
use std::fmt::Write as _;

use num_complex::Complex64;

use crate::ensemble::{Ensemble, MeasurementVector};
use crate::signal::Signal;
use crate::{Error, Result};

/// Largest vertex count for which [`is_lateration`] searches seed cliques itself.
pub const EXHAUSTIVE_SEED_LIMIT: usize = 32;

/// Agreement threshold for complex distances, relative to `max(1, |c|)`.
pub const DISTANCE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeasurementGraph {
    n_sensors: usize,
    edges: BTreeSet<(usize, usize)>,
    anchors: BTreeSet<usize>,
}

impl MeasurementGraph {
    /// Graph on vertices `0..=n_sensors` with the origin as the only anchor.
    /// Edges are unordered; duplicates collapse.
    pub fn new(n_sensors: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (u, v) in edges {
            if u == v {
                return Err(Error::InvalidGraph(format!("self-loop at vertex {u}")));
            }
            if u > n_sensors || v > n_sensors {
                return Err(Error::InvalidGraph(format!("edge ({u},{v}) outside 0..={n_sensors}")));
            }
            set.insert((u.min(v), u.max(v)));
        }
        Ok(MeasurementGraph { n_sensors, edges: set, anchors: BTreeSet::from([0]) })
    }

    pub fn n_sensors(&self) -> usize {
        self.n_sensors
    }

    pub fn vertex_count(&self) -> usize {
        self.n_sensors + 1
    }

    pub fn edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.edges
    }

    pub fn anchors(&self) -> &BTreeSet<usize> {
        &self.anchors
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edges.contains(&(u.min(v), u.max(v)))
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertex_count()];
        for &(u, v) in &self.edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        adj
    }

    /// One `u v` line per edge, sorted.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for (u, v) in &self.edges {
            writeln!(out, "{u} {v}").unwrap();
        }
        out
    }

    /// Parses the `u v` format; blank lines and `#` comments are skipped. The
    /// sensor count is the largest vertex label seen.
    pub fn from_edge_list(text: &str) -> Result<Self> {
        let mut edges = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parsed: Vec<usize> = line
                .split_whitespace()
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::InvalidGraph(format!("line {}: {e}", lineno + 1)))?;
            match parsed[..] {
                [u, v] => edges.push((u, v)),
                _ => return Err(Error::InvalidGraph(format!("line {}: expected `u v`", lineno + 1))),
            }
        }
        let n_sensors = edges.iter().map(|&(u, v)| u.max(v)).max().unwrap_or(0);
        MeasurementGraph::new(n_sensors, edges)
    }
}

/// The graph `G_Φ` of a structured ensemble.
pub fn graph_from_ensemble(ensemble: &Ensemble) -> Result<MeasurementGraph> {
    let mut edges = Vec::with_capacity(ensemble.len());
    for v in ensemble.vectors() {
        match *v {
            MeasurementVector::Coord { k } => edges.push((0, k)),
            MeasurementVector::Diff { j, k }
            | MeasurementVector::Sum { j, k }
            | MeasurementVector::DiffImag { j, k } => edges.push((j, k)),
            MeasurementVector::Dense(_) => return Err(Error::UnstructuredVector),
        }
    }
    MeasurementGraph::new(ensemble.n(), edges)
}

/// Looks for a `d`-lateration ordering: a `(d+1)`-clique followed by vertices
/// that each have at least `d+1` neighbours earlier in the ordering.
///
/// With `seed_clique` the search starts from that clique only. Without it every
/// `(d+1)`-clique is tried in lexicographic order, which is allowed only up to
/// [`EXHAUSTIVE_SEED_LIMIT`] vertices. For a fixed seed greedy placement is
/// complete: placing a vertex never removes a candidate, so getting stuck means
/// no ordering exists from that seed.
///
/// Returns `Ok(Some(ordering))` on success and `Ok(None)` when no seed works.
pub fn is_lateration(
    graph: &MeasurementGraph,
    d: usize,
    seed_clique: Option<&[usize]>,
) -> Result<Option<Vec<usize>>> {
    if !(1..=2).contains(&d) {
        return Err(Error::BadDimension(d));
    }
    let nv = graph.vertex_count();
    if nv < d + 1 {
        return Err(Error::InvalidGraph(format!("{nv} vertices cannot hold a {}-clique", d + 1)));
    }
    let adj = graph.adjacency();

    if let Some(seed) = seed_clique {
        if seed.len() != d + 1 || !is_clique(graph, seed) {
            return Err(Error::InvalidGraph(format!("seed {seed:?} is not a {}-clique", d + 1)));
        }
        return Ok(peel(&adj, d, seed));
    }

    if nv > EXHAUSTIVE_SEED_LIMIT {
        return Err(Error::SeedRequired { vertices: nv, limit: EXHAUSTIVE_SEED_LIMIT });
    }
    for seed in cliques(graph, d + 1) {
        if let Some(order) = peel(&adj, d, &seed) {
            return Ok(Some(order));
        }
    }
    Ok(None)
}

fn is_clique(graph: &MeasurementGraph, vs: &[usize]) -> bool {
    let distinct: BTreeSet<_> = vs.iter().collect();
    distinct.len() == vs.len()
        && vs.iter().all(|&v| v < graph.vertex_count())
        && vs.iter().enumerate().all(|(i, &u)| vs[i + 1..].iter().all(|&v| graph.has_edge(u, v)))
}

fn cliques(graph: &MeasurementGraph, size: usize) -> Vec<Vec<usize>> {
    fn extend(graph: &MeasurementGraph, size: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for v in start..graph.vertex_count() {
            if cur.iter().all(|&u| graph.has_edge(u, v)) {
                cur.push(v);
                extend(graph, size, v + 1, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    extend(graph, size, 0, &mut Vec::with_capacity(size), &mut out);
    out
}

fn peel(adj: &[Vec<usize>], d: usize, seed: &[usize]) -> Option<Vec<usize>> {
    let nv = adj.len();
    let mut placed = vec![false; nv];
    let mut support = vec![0usize; nv];
    let mut order = Vec::with_capacity(nv);
    let mut ready = VecDeque::new();

    let mut place = |v: usize, placed: &mut Vec<bool>, order: &mut Vec<usize>, ready: &mut VecDeque<usize>| {
        placed[v] = true;
        order.push(v);
        for &u in &adj[v] {
            support[u] += 1;
            if !placed[u] && support[u] == d + 1 {
                ready.push_back(u);
            }
        }
    };
    for &v in seed {
        place(v, &mut placed, &mut order, &mut ready);
    }
    while let Some(v) = ready.pop_front() {
        if !placed[v] {
            place(v, &mut placed, &mut order, &mut ready);
        }
    }
    (order.len() == nv).then_some(order)
}

/// `c(w, z) = Σ (w_j − z_j)²`, a complex number in general.
pub fn complex_distance(w: &[Complex64], z: &[Complex64]) -> Result<Complex64> {
    if w.len() != z.len() {
        return Err(Error::DimensionMismatch { expected: w.len(), got: z.len() });
    }
    Ok(w.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum())
}

/// A graph together with a placement of its vertices in `C`.
#[derive(Debug, Clone, PartialEq)]
pub struct Framework {
    graph: MeasurementGraph,
    placement: Vec<Complex64>,
}

impl Framework {
    pub fn new(graph: MeasurementGraph, placement: Vec<Complex64>) -> Result<Self> {
        if placement.len() != graph.vertex_count() {
            return Err(Error::DimensionMismatch { expected: graph.vertex_count(), got: placement.len() });
        }
        Ok(Framework { graph, placement })
    }

    /// The configuration induced by a signal: `p(0) = 0`, `p(k) = x_k`.
    pub fn from_signal(graph: MeasurementGraph, x: &Signal) -> Result<Self> {
        let mut placement = Vec::with_capacity(x.len() + 1);
        placement.push(Complex64::new(0.0, 0.0));
        placement.extend_from_slice(x.entries());
        Framework::new(graph, placement)
    }

    pub fn graph(&self) -> &MeasurementGraph {
        &self.graph
    }

    pub fn placement(&self) -> &[Complex64] {
        &self.placement
    }

    fn dist(&self, i: usize, j: usize) -> Complex64 {
        let d = self.placement[i] - self.placement[j];
        d * d
    }
}

fn close(a: Complex64, b: Complex64) -> bool {
    (a - b).norm() <= DISTANCE_TOL * 1f64.max(a.norm()).max(b.norm())
}

/// Equal complex distances on every edge of the shared graph.
pub fn frameworks_equivalent(f1: &Framework, f2: &Framework) -> Result<bool> {
    if f1.graph != f2.graph {
        return Err(Error::GraphMismatch);
    }
    Ok(f1.graph.edges().iter().all(|&(i, j)| close(f1.dist(i, j), f2.dist(i, j))))
}

/// Equal complex distances on every vertex pair.
pub fn configurations_congruent(p: &Framework, q: &Framework) -> Result<bool> {
    let nv = p.graph.vertex_count();
    if nv != q.graph.vertex_count() {
        return Err(Error::GraphMismatch);
    }
    Ok((0..nv).all(|i| (i + 1..nv).all(|j| close(p.dist(i, j), q.dist(i, j)))))
}
