// Copyright 2026 The dp-apsd Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Weighted undirected graphs and distance matrices.
//!
//! Vertices are dense indices `0..n`. Edge keys are normalised so that the
//! smaller endpoint comes first, which gives every edge a canonical order.

mod apsd;

pub use apsd::{
    components_after_removal, dijkstra, exact_apsd, exact_apsd_with, k_hop_apsd, k_hop_apsd_with,
    l1_weight_distance, sssp_apsd, sssp_apsd_with,
};
pub(crate) use apsd::components_masked;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("self-loop on vertex {0}")]
    SelfLoop(usize),
    #[error("vertex {vertex} out of range for a graph with {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("edge ({0}, {1}) does not exist")]
    MissingEdge(usize, usize),
    #[error("weight of edge ({u}, {v}) is not finite")]
    NonFiniteWeight { u: usize, v: usize },
    #[error("edge ({u}, {v}) has negative weight {weight}")]
    NegativeWeight { u: usize, v: usize, weight: f64 },
    #[error("weight maps are defined over different edge sets")]
    EdgeSetMismatch,
    #[error("hop bound must be at least 1, got {0}")]
    InvalidHopBound(usize),
    #[error("invalid path: {0}")]
    InvalidPath(String),
}

/// Unordered vertex pair stored with `u < v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
}

impl Edge {
    pub fn new(a: usize, b: usize) -> Self {
        if a <= b {
            Edge { u: a, v: b }
        } else {
            Edge { u: b, v: a }
        }
    }

    /// The endpoint that is not `x`; `x` must be an endpoint.
    pub fn other(&self, x: usize) -> usize {
        if x == self.u {
            self.v
        } else {
            self.u
        }
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.u, self.v)
    }
}

/// Edge weights keyed by canonical edge.
pub type WeightMap = BTreeMap<Edge, f64>;

/// An undirected graph with one finite real weight per edge.
///
/// Weights of input graphs are non-negative; noisy graphs produced by the
/// mechanism may carry negative weights, so the type itself only requires
/// finiteness. Algorithms that need non-negative weights check for them.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    n: usize,
    weights: WeightMap,
}

impl WeightedGraph {
    pub fn new(n: usize) -> Self {
        WeightedGraph {
            n,
            weights: WeightMap::new(),
        }
    }

    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut g = WeightedGraph::new(n);
        for (u, v, w) in edges {
            g.add_edge(u, v, w)?;
        }
        Ok(g)
    }

    fn check_pair(&self, u: usize, v: usize, w: f64) -> Result<Edge, GraphError> {
        for x in [u, v] {
            if x >= self.n {
                return Err(GraphError::VertexOutOfRange { vertex: x, n: self.n });
            }
        }
        if u == v {
            return Err(GraphError::SelfLoop(u));
        }
        if !w.is_finite() {
            return Err(GraphError::NonFiniteWeight { u, v });
        }
        Ok(Edge::new(u, v))
    }

    pub fn add_edge(&mut self, u: usize, v: usize, w: f64) -> Result<(), GraphError> {
        let e = self.check_pair(u, v, w)?;
        if self.weights.contains_key(&e) {
            return Err(GraphError::DuplicateEdge(e.u, e.v));
        }
        self.weights.insert(e, w);
        Ok(())
    }

    /// Inserts the edge, or lowers its weight to `w` if it already exists
    /// with a larger one. Returns whether the graph changed.
    pub fn insert_or_lower(&mut self, u: usize, v: usize, w: f64) -> Result<bool, GraphError> {
        let e = self.check_pair(u, v, w)?;
        match self.weights.get_mut(&e) {
            None => {
                self.weights.insert(e, w);
                Ok(true)
            }
            Some(cur) if w < *cur => {
                *cur = w;
                Ok(true)
            }
            Some(_) => Ok(false),
        }
    }

    pub fn set_weight(&mut self, u: usize, v: usize, w: f64) -> Result<(), GraphError> {
        let e = self.check_pair(u, v, w)?;
        match self.weights.get_mut(&e) {
            Some(cur) => {
                *cur = w;
                Ok(())
            }
            None => Err(GraphError::MissingEdge(e.u, e.v)),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.weights.len()
    }

    pub fn weight(&self, u: usize, v: usize) -> Option<f64> {
        self.weights.get(&Edge::new(u, v)).copied()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.weights.contains_key(&Edge::new(u, v))
    }

    /// Edges in canonical order.
    pub fn edges(&self) -> impl Iterator<Item = (Edge, f64)> + '_ {
        self.weights.iter().map(|(e, w)| (*e, *w))
    }

    pub fn weights(&self) -> &WeightMap {
        &self.weights
    }

    /// Same topology with a replacement weight map.
    pub fn with_weights(&self, weights: WeightMap) -> Result<Self, GraphError> {
        if weights.len() != self.weights.len()
            || !weights.keys().zip(self.weights.keys()).all(|(a, b)| a == b)
        {
            return Err(GraphError::EdgeSetMismatch);
        }
        if let Some((e, _)) = weights.iter().find(|(_, w)| !w.is_finite()) {
            return Err(GraphError::NonFiniteWeight { u: e.u, v: e.v });
        }
        Ok(WeightedGraph { n: self.n, weights })
    }

    /// Same topology, each weight replaced by `f(edge, weight)`.
    pub fn map_weights<F>(&self, mut f: F) -> Result<Self, GraphError>
    where
        F: FnMut(Edge, f64) -> f64,
    {
        let weights: WeightMap = self.edges().map(|(e, w)| (e, f(e, w))).collect();
        self.with_weights(weights)
    }

    pub fn min_weight(&self) -> Option<f64> {
        self.weights.values().copied().reduce(f64::min)
    }

    pub fn ensure_nonnegative(&self) -> Result<(), GraphError> {
        match self.weights.iter().find(|(_, w)| **w < 0.0) {
            Some((e, w)) => Err(GraphError::NegativeWeight {
                u: e.u,
                v: e.v,
                weight: *w,
            }),
            None => Ok(()),
        }
    }

    pub fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.n];
        for (e, w) in self.edges() {
            adj[e.u].push((e.v, w));
            adj[e.v].push((e.u, w));
        }
        adj
    }

    pub fn csr(&self) -> Csr {
        Csr::from_graph(self)
    }

    pub fn degree(&self, v: usize) -> usize {
        self.weights
            .keys()
            .filter(|e| e.u == v || e.v == v)
            .count()
    }

    pub fn is_connected(&self) -> bool {
        self.n <= 1 || components_after_removal(self, &[]).len() == 1
    }
}

/// Compressed adjacency (both directions of every edge).
#[derive(Debug, Clone)]
pub struct Csr {
    pub offsets: Vec<usize>,
    pub targets: Vec<usize>,
    pub weights: Vec<f64>,
}

impl Csr {
    pub fn from_graph(g: &WeightedGraph) -> Self {
        let n = g.n();
        let mut degree = vec![0usize; n + 1];
        for (e, _) in g.edges() {
            degree[e.u] += 1;
            degree[e.v] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut acc = 0;
        offsets.push(0);
        for d in degree.iter().take(n) {
            acc += d;
            offsets.push(acc);
        }
        let mut fill = offsets.clone();
        let mut targets = vec![0usize; acc];
        let mut weights = vec![0.0f64; acc];
        for (e, w) in g.edges() {
            for (a, b) in [(e.u, e.v), (e.v, e.u)] {
                targets[fill[a]] = b;
                weights[fill[a]] = w;
                fill[a] += 1;
            }
        }
        Csr {
            offsets,
            targets,
            weights,
        }
    }

    pub fn n(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.offsets[v]..self.offsets[v + 1];
        self.targets[r.clone()]
            .iter()
            .copied()
            .zip(self.weights[r].iter().copied())
    }
}

/// Dense symmetric matrix of pairwise distances; `f64::INFINITY` marks
/// unreachable pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    /// Zero diagonal, every other entry unreachable.
    pub fn unreachable(n: usize) -> Self {
        let mut data = vec![f64::INFINITY; n * n];
        for v in 0..n {
            data[v * n + v] = 0.0;
        }
        DistanceMatrix { n, data }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for r in rows {
            assert_eq!(r.len(), n, "distance matrix rows must be square");
            data.extend(r);
        }
        DistanceMatrix { n, data }
    }

    pub(crate) fn from_raw(n: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), n * n);
        DistanceMatrix { n, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.data[u * self.n + v]
    }

    pub fn set(&mut self, u: usize, v: usize, d: f64) {
        self.data[u * self.n + v] = d;
    }

    /// Sets both `(u, v)` and `(v, u)`.
    pub fn set_symmetric(&mut self, u: usize, v: usize, d: f64) {
        self.set(u, v, d);
        self.set(v, u, d);
    }

    pub fn row(&self, u: usize) -> &[f64] {
        &self.data[u * self.n..(u + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Copies the upper triangle onto the lower one and zeroes the diagonal.
    pub fn symmetrize_from_upper(&mut self) {
        let n = self.n;
        for u in 0..n {
            self.data[u * n + u] = 0.0;
            for v in (u + 1)..n {
                self.data[v * n + u] = self.data[u * n + v];
            }
        }
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|u| (u + 1..self.n).all(|v| self.get(u, v).to_bits() == self.get(v, u).to_bits()))
    }

    /// Largest entrywise absolute difference. Two infinite entries of the
    /// same sign count as equal.
    pub fn max_abs_diff(&self, other: &DistanceMatrix) -> f64 {
        assert_eq!(self.n, other.n, "matrix sizes differ");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| entry_diff(*a, *b))
            .fold(0.0, f64::max)
    }

    /// Mean absolute difference over unordered off-diagonal pairs.
    pub fn mean_abs_diff(&self, other: &DistanceMatrix) -> f64 {
        assert_eq!(self.n, other.n, "matrix sizes differ");
        let n = self.n;
        if n < 2 {
            return 0.0;
        }
        let mut sum = 0.0;
        for u in 0..n {
            for v in (u + 1)..n {
                sum += entry_diff(self.get(u, v), other.get(u, v));
            }
        }
        sum / ((n * (n - 1) / 2) as f64)
    }

    pub fn approx_eq(&self, other: &DistanceMatrix, tol: f64) -> bool {
        self.n == other.n && self.max_abs_diff(other) <= tol
    }
}

fn entry_diff(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs()
    }
}

/// A walk `v0, v1, ..., vℓ` along edges of a graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Path {
    vertices: Vec<usize>,
}

impl Path {
    pub fn new(g: &WeightedGraph, vertices: Vec<usize>) -> Result<Self, GraphError> {
        if vertices.is_empty() {
            return Err(GraphError::InvalidPath("no vertices".into()));
        }
        if let Some(&x) = vertices.iter().find(|&&x| x >= g.n()) {
            return Err(GraphError::VertexOutOfRange { vertex: x, n: g.n() });
        }
        for pair in vertices.windows(2) {
            if !g.has_edge(pair[0], pair[1]) {
                return Err(GraphError::InvalidPath(format!(
                    "{} and {} are not adjacent",
                    pair[0], pair[1]
                )));
            }
        }
        Ok(Path { vertices })
    }

    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    pub fn hops(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn weight(&self, g: &WeightedGraph) -> f64 {
        self.vertices
            .windows(2)
            .map(|p| g.weight(p[0], p[1]).expect("path edges exist"))
            .sum()
    }
}
