//! Weighted undirected graphs, node subsets and random instances with planted cliques.
//!
//! A [`Graph`] keeps node weights next to a symmetric, zero-diagonal, non-negative
//! adjacency matrix. Edge weights live on the matrix (unweighted graphs use 1).
//! Loop weights never appear here; they belong to the encoding.

mod io;

use std::fmt;

use nalgebra::DMatrix;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use io::{load_graph, save_graph, GraphFormat};

#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    weights: Vec<f64>,
    adjacency: DMatrix<f64>,
}

impl Graph {
    /// Builds a graph after checking every invariant (square, symmetric, zero
    /// diagonal, finite and non-negative entries).
    pub fn new(weights: Vec<f64>, adjacency: DMatrix<f64>) -> Result<Self> {
        let m = weights.len();
        if m == 0 {
            return Err(Error::invalid("graph must have at least one node"));
        }
        if adjacency.nrows() != m || adjacency.ncols() != m {
            return Err(Error::invalid(format!(
                "adjacency is {}x{} but there are {m} node weights",
                adjacency.nrows(),
                adjacency.ncols()
            )));
        }
        for (i, &w) in weights.iter().enumerate() {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::BadValue {
                    location: format!("node weight {i}"),
                    value: w,
                });
            }
        }
        for i in 0..m {
            for j in 0..m {
                let a = adjacency[(i, j)];
                if !a.is_finite() || a < 0.0 {
                    return Err(Error::BadValue {
                        location: format!("adjacency ({i}, {j})"),
                        value: a,
                    });
                }
            }
            if adjacency[(i, i)] != 0.0 {
                return Err(Error::invalid(format!(
                    "adjacency diagonal ({i}, {i}) is {}, expected 0",
                    adjacency[(i, i)]
                )));
            }
            for j in (i + 1)..m {
                if adjacency[(i, j)] != adjacency[(j, i)] {
                    return Err(Error::Asymmetric {
                        row: i,
                        col: j,
                        upper: adjacency[(i, j)],
                        lower: adjacency[(j, i)],
                    });
                }
            }
        }
        Ok(Graph { weights, adjacency })
    }

    /// Unit node weights.
    pub fn unweighted(adjacency: DMatrix<f64>) -> Result<Self> {
        let m = adjacency.nrows();
        Graph::new(vec![1.0; m], adjacency)
    }

    pub fn from_edges(m: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut a = DMatrix::zeros(m, m);
        for &(u, v) in edges {
            if u >= m || v >= m || u == v {
                return Err(Error::invalid(format!("bad edge ({u}, {v}) for {m} nodes")));
            }
            a[(u, v)] = 1.0;
            a[(v, u)] = 1.0;
        }
        Graph::unweighted(a)
    }

    pub fn complete(m: usize) -> Result<Self> {
        let a = DMatrix::from_fn(m, m, |i, j| if i == j { 0.0 } else { 1.0 });
        Graph::unweighted(a)
    }

    pub fn node_count(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn adjacency(&self) -> &DMatrix<f64> {
        &self.adjacency
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u != v && self.adjacency[(u, v)] > 0.0
    }

    pub fn edge_count(&self) -> usize {
        let m = self.node_count();
        (0..m)
            .flat_map(|i| ((i + 1)..m).map(move |j| (i, j)))
            .filter(|&(i, j)| self.adjacency[(i, j)] > 0.0)
            .count()
    }

    pub fn is_unweighted(&self) -> bool {
        self.weights.iter().all(|&w| w == 1.0)
    }

    /// Returns a copy with the nodes relabelled so that old node `i` becomes `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Graph> {
        let m = self.node_count();
        let mut seen = vec![false; m];
        if perm.len() != m || perm.iter().any(|&p| p >= m || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::invalid("not a permutation"));
        }
        let mut w = vec![0.0; m];
        let mut a = DMatrix::zeros(m, m);
        for i in 0..m {
            w[perm[i]] = self.weights[i];
            for j in 0..m {
                a[(perm[i], perm[j])] = self.adjacency[(i, j)];
            }
        }
        Graph::new(w, a)
    }
}

/// Sorted, duplicate-free node indices. A detection pattern with clicks on these
/// nodes is read as the induced subgraph.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
#[serde(transparent)]
pub struct NodeSubset(Vec<usize>);

impl NodeSubset {
    /// Sorts and validates `members` against a graph of `m` nodes.
    pub fn new(mut members: Vec<usize>, m: usize) -> Result<Self> {
        members.sort_unstable();
        if let Some(w) = members.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::invalid(format!("duplicate node {} in subset", w[0])));
        }
        if let Some(&last) = members.last() {
            if last >= m {
                return Err(Error::invalid(format!("node {last} out of range for {m} nodes")));
            }
        }
        Ok(NodeSubset(members))
    }

    /// Caller guarantees the members are strictly increasing.
    pub(crate) fn from_sorted(members: Vec<usize>) -> Self {
        debug_assert!(members.windows(2).all(|w| w[0] < w[1]));
        NodeSubset(members)
    }

    pub fn empty() -> Self {
        NodeSubset(Vec::new())
    }

    pub fn full(m: usize) -> Self {
        NodeSubset((0..m).collect())
    }

    pub fn members(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, v: usize) -> bool {
        self.0.binary_search(&v).is_ok()
    }

    pub fn validate_for(&self, g: &Graph) -> Result<()> {
        match self.0.last() {
            Some(&v) if v >= g.node_count() => Err(Error::invalid(format!(
                "node {v} out of range for {} nodes",
                g.node_count()
            ))),
            _ => Ok(()),
        }
    }

    pub(crate) fn insert(&mut self, v: usize) {
        if let Err(pos) = self.0.binary_search(&v) {
            self.0.insert(pos, v);
        }
    }

    pub(crate) fn remove(&mut self, v: usize) {
        if let Ok(pos) = self.0.binary_search(&v) {
            self.0.remove(pos);
        }
    }

    /// 0/1 indicator of length `m`.
    pub fn indicator(&self, m: usize) -> Vec<u32> {
        let mut counts = vec![0; m];
        for &v in &self.0 {
            counts[v] = 1;
        }
        counts
    }
}

impl fmt::Display for NodeSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str("-")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// G(M, p) with unit edge and node weights. Pairs are visited in row-major
/// upper-triangle order, one uniform draw each.
pub fn erdos_renyi(m: usize, p: f64, seed: u64) -> Result<Graph> {
    if m == 0 {
        return Err(Error::invalid("erdos_renyi needs at least one node"));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!("edge probability {p} outside [0, 1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in (i + 1)..m {
            if rng.gen::<f64>() < p {
                a[(i, j)] = 1.0;
                a[(j, i)] = 1.0;
            }
        }
    }
    Graph::unweighted(a)
}

/// Completes a uniformly random `size`-subset of `g`. Missing edges are added with
/// weight 1; existing edge weights are kept.
pub fn plant_clique(g: &Graph, size: usize, seed: u64) -> Result<(Graph, NodeSubset)> {
    let m = g.node_count();
    if size == 0 || size > m {
        return Err(Error::invalid(format!("clique size {size} outside [1, {m}]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let mut members = index::sample(&mut rng, m, size).into_vec();
    members.sort_unstable();
    let mut a = g.adjacency().clone();
    for (k, &u) in members.iter().enumerate() {
        for &v in &members[k + 1..] {
            if a[(u, v)] == 0.0 {
                a[(u, v)] = 1.0;
                a[(v, u)] = 1.0;
            }
        }
    }
    let planted = Graph::new(g.weights().to_vec(), a)?;
    Ok((planted, NodeSubset::from_sorted(members)))
}

pub fn is_clique(g: &Graph, s: &NodeSubset) -> bool {
    let v = s.members();
    v.iter()
        .enumerate()
        .all(|(k, &a)| v[k + 1..].iter().all(|&b| g.has_edge(a, b)))
}

pub fn clique_weight(g: &Graph, s: &NodeSubset) -> f64 {
    s.members().iter().map(|&v| g.weights()[v]).sum()
}

/// Every maximum-weight clique of `g`, found by Bron–Kerbosch with pivoting.
/// Only meant for certifying fixtures, so graphs are limited to 64 nodes.
pub fn maximum_cliques(g: &Graph) -> Result<(f64, Vec<NodeSubset>)> {
    let m = g.node_count();
    if m > 64 {
        return Err(Error::ResourceGuard(format!(
            "exhaustive clique search limited to 64 nodes, got {m}"
        )));
    }
    let nbr: Vec<u64> = (0..m)
        .map(|i| (0..m).filter(|&j| g.has_edge(i, j)).fold(0u64, |acc, j| acc | (1 << j)))
        .collect();
    let all = if m == 64 { u64::MAX } else { (1u64 << m) - 1 };

    struct Search<'a> {
        nbr: &'a [u64],
        weights: &'a [f64],
        best: f64,
        found: Vec<u64>,
    }

    impl Search<'_> {
        fn weight(&self, mut set: u64) -> f64 {
            let mut w = 0.0;
            while set != 0 {
                w += self.weights[set.trailing_zeros() as usize];
                set &= set - 1;
            }
            w
        }

        fn expand(&mut self, r: u64, mut p: u64, mut x: u64) {
            // weight bound: current clique plus every remaining candidate
            let bound = self.weight(r) + self.weight(p);
            if bound < self.best - 1e-12 * self.best.abs().max(1.0) {
                return;
            }
            if p == 0 {
                if x == 0 {
                    let w = self.weight(r);
                    let tol = 1e-12 * w.abs().max(1.0);
                    if w > self.best + tol {
                        self.best = w;
                        self.found.clear();
                        self.found.push(r);
                    } else if (w - self.best).abs() <= tol {
                        self.found.push(r);
                    }
                }
                return;
            }
            let pivot = {
                let ux = p | x;
                let mut best_u = ux.trailing_zeros() as usize;
                let mut best_cnt = 0;
                let mut t = ux;
                while t != 0 {
                    let u = t.trailing_zeros() as usize;
                    let cnt = (p & self.nbr[u]).count_ones();
                    if cnt > best_cnt {
                        best_cnt = cnt;
                        best_u = u;
                    }
                    t &= t - 1;
                }
                best_u
            };
            let mut cand = p & !self.nbr[pivot];
            while cand != 0 {
                let v = cand.trailing_zeros() as usize;
                let bit = 1u64 << v;
                self.expand(r | bit, p & self.nbr[v], x & self.nbr[v]);
                p &= !bit;
                x |= bit;
                cand &= cand - 1;
            }
        }
    }

    let mut search = Search {
        nbr: &nbr,
        weights: g.weights(),
        best: f64::NEG_INFINITY,
        found: Vec::new(),
    };
    search.expand(0, all, 0);
    let cliques = search
        .found
        .iter()
        .map(|&set| NodeSubset::from_sorted((0..m).filter(|&i| set >> i & 1 == 1).collect()))
        .collect();
    Ok((search.best, cliques))
}

/// A planted-clique instance whose planted subset is certified to be the unique
/// maximum-weight clique.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub graph: Graph,
    pub clique: NodeSubset,
    /// Seed that produced the certified instance (the first one tried from the
    /// requested seed upward).
    pub seed: u64,
}

/// Generator spec for a certified fixture: `ER(nodes, p)` with a planted clique.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixtureSpec {
    pub nodes: usize,
    pub clique_size: usize,
    pub p: f64,
    pub seed: u64,
}

impl FixtureSpec {
    pub fn new(nodes: usize, clique_size: usize, p: f64, seed: u64) -> Self {
        FixtureSpec {
            nodes,
            clique_size,
            p,
            seed,
        }
    }

    /// Tries seeds `seed, seed + 1, ...` until the planted clique is the unique
    /// maximum clique. ER graphs can contain accidental cliques as large as the
    /// planted one, so certification is exhaustive.
    pub fn build(&self) -> Result<Fixture> {
        for seed in self.seed..self.seed + 1000 {
            let base = erdos_renyi(self.nodes, self.p, seed)?;
            let (graph, clique) = plant_clique(&base, self.clique_size, seed)?;
            if certify(&graph, &clique)? {
                return Ok(Fixture {
                    graph,
                    clique,
                    seed,
                });
            }
        }
        Err(Error::invalid(format!(
            "no certifiable planted clique for {self:?} within 1000 seeds"
        )))
    }
}

/// True when `target` is the unique maximum-weight clique of `g`.
pub fn certify(g: &Graph, target: &NodeSubset) -> Result<bool> {
    if !is_clique(g, target) {
        return Ok(false);
    }
    let (_, cliques) = maximum_cliques(g)?;
    Ok(cliques.len() == 1 && &cliques[0] == target)
}
