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

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{Csr, DistanceMatrix, GraphError, WeightMap, WeightedGraph};
use crate::par::{self, Execution};

/// Exact all-pairs shortest distances by Floyd–Warshall relaxation.
///
/// Requires non-negative weights. Disconnected pairs are `+inf`.
pub fn exact_apsd(g: &WeightedGraph) -> Result<DistanceMatrix, GraphError> {
    exact_apsd_with(g, Execution::default())
}

pub fn exact_apsd_with(g: &WeightedGraph, exec: Execution) -> Result<DistanceMatrix, GraphError> {
    g.ensure_nonnegative()?;
    let n = g.n();
    let mut d = DistanceMatrix::unreachable(n);
    for (e, w) in g.edges() {
        d.set_symmetric(e.u, e.v, w);
    }
    if n == 0 {
        return Ok(d);
    }
    let mut data = d.data;
    let mut pivot = vec![0.0; n];
    for k in 0..n {
        pivot.copy_from_slice(&data[k * n..(k + 1) * n]);
        let pivot = &pivot;
        par::for_each_chunk_mut(exec, &mut data, n, |_, row| {
            let dik = row[k];
            if dik == f64::INFINITY {
                return;
            }
            for (x, &dkj) in row.iter_mut().zip(pivot) {
                let cand = dik + dkj;
                if cand < *x {
                    *x = cand;
                }
            }
        });
    }
    let mut d = DistanceMatrix::from_raw(n, data);
    d.symmetrize_from_upper();
    Ok(d)
}

#[derive(Clone, Copy, PartialEq)]
struct HeapItem {
    dist: f64,
    vertex: usize,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Single-source distances over a non-negatively weighted adjacency.
pub fn dijkstra(csr: &Csr, source: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; csr.n()];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(HeapItem {
        dist: 0.0,
        vertex: source,
    });
    while let Some(HeapItem { dist: d, vertex: v }) = heap.pop() {
        if d > dist[v] {
            continue;
        }
        for (z, w) in csr.neighbors(v) {
            let cand = d + w;
            if cand < dist[z] {
                dist[z] = cand;
                heap.push(HeapItem {
                    dist: cand,
                    vertex: z,
                });
            }
        }
    }
    dist
}

/// Exact all-pairs distances by running Dijkstra from every vertex.
/// Much faster than [`exact_apsd`] on sparse graphs.
pub fn sssp_apsd(g: &WeightedGraph) -> Result<DistanceMatrix, GraphError> {
    sssp_apsd_with(g, Execution::default())
}

pub fn sssp_apsd_with(g: &WeightedGraph, exec: Execution) -> Result<DistanceMatrix, GraphError> {
    g.ensure_nonnegative()?;
    let n = g.n();
    let csr = g.csr();
    let mut data = vec![0.0; n * n];
    if n > 0 {
        par::for_each_chunk_mut(exec, &mut data, n, |s, row| {
            row.copy_from_slice(&dijkstra(&csr, s));
        });
    }
    let mut d = DistanceMatrix::from_raw(n, data);
    d.symmetrize_from_upper();
    Ok(d)
}

const LANES: usize = 8;
type Lanes = [f64; LANES];

/// Hop-limited distances from up to `LANES` sources at once.
///
/// `cur[u][l]` holds the minimum weight of a walk from `sources[l]` to `u`
/// with at most `j` edges after round `j`. Stops early once a round changes
/// nothing, since every later round would repeat it.
fn k_hop_block(csr: &Csr, sources: &[usize], k: usize) -> Vec<Lanes> {
    let n = csr.n();
    let mut cur = vec![[f64::INFINITY; LANES]; n];
    for (l, &s) in sources.iter().enumerate() {
        cur[s][l] = 0.0;
    }
    let mut next = cur.clone();
    for _ in 0..k {
        let mut changed = false;
        for (u, slot) in next.iter_mut().enumerate() {
            let r = csr.offsets[u]..csr.offsets[u + 1];
            let mut best = cur[u];
            for (&z, &w) in csr.targets[r.clone()].iter().zip(&csr.weights[r]) {
                let from = &cur[z];
                for l in 0..LANES {
                    let cand = from[l] + w;
                    best[l] = if cand < best[l] { cand } else { best[l] };
                }
            }
            changed |= best != cur[u];
            *slot = best;
        }
        std::mem::swap(&mut cur, &mut next);
        if !changed {
            break;
        }
    }
    cur
}

/// All-pairs `k`-hop distances: the minimum weight over walks with at most
/// `k` edges, by the layered recurrence `d(v,u,j) = min_z d(v,z,j-1) + w(z,u)`.
///
/// Negative weights are allowed; the hop bound keeps every value finite or
/// `+inf`. The diagonal is reported as the empty path (zero) and the matrix
/// is symmetrised from its upper triangle.
pub fn k_hop_apsd(g: &WeightedGraph, k: usize) -> Result<DistanceMatrix, GraphError> {
    k_hop_apsd_with(g, k, Execution::default())
}

pub fn k_hop_apsd_with(
    g: &WeightedGraph,
    k: usize,
    exec: Execution,
) -> Result<DistanceMatrix, GraphError> {
    if k < 1 {
        return Err(GraphError::InvalidHopBound(k));
    }
    let n = g.n();
    let csr = g.csr();
    let mut data = vec![0.0; n * n];
    if n > 0 {
        par::for_each_chunk_mut(exec, &mut data, LANES * n, |block, rows| {
            let first = block * LANES;
            let sources: Vec<usize> = (first..(first + LANES).min(n)).collect();
            let dist = k_hop_block(&csr, &sources, k);
            for (l, row) in rows.chunks_mut(n).enumerate() {
                for (x, lanes) in row.iter_mut().zip(&dist) {
                    *x = lanes[l];
                }
            }
        });
    }
    let mut d = DistanceMatrix::from_raw(n, data);
    d.symmetrize_from_upper();
    Ok(d)
}

/// ℓ1 distance between two weight functions on the same edge set.
pub fn l1_weight_distance(a: &WeightMap, b: &WeightMap) -> Result<f64, GraphError> {
    if a.len() != b.len() {
        return Err(GraphError::EdgeSetMismatch);
    }
    a.iter().zip(b).try_fold(0.0, |acc, ((ea, wa), (eb, wb))| {
        if ea != eb {
            Err(GraphError::EdgeSetMismatch)
        } else {
            Ok(acc + (wa - wb).abs())
        }
    })
}

/// Connected components of the subgraph induced on `V \ removed`, each
/// sorted, listed by smallest vertex.
pub fn components_after_removal(g: &WeightedGraph, removed: &[usize]) -> Vec<Vec<usize>> {
    let csr = g.csr();
    let mut blocked = vec![false; g.n()];
    for &r in removed {
        if r < g.n() {
            blocked[r] = true;
        }
    }
    components_masked(&csr, &blocked)
}

pub(crate) fn components_masked(csr: &Csr, blocked: &[bool]) -> Vec<Vec<usize>> {
    let n = csr.n();
    let mut seen = blocked.to_vec();
    let mut out = Vec::new();
    let mut stack = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        stack.push(start);
        let mut comp = Vec::new();
        while let Some(v) = stack.pop() {
            comp.push(v);
            for (z, _) in csr.neighbors(v) {
                if !seen[z] {
                    seen[z] = true;
                    stack.push(z);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}
