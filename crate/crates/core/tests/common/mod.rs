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

//! Instance builders shared by the integration tests.

#![allow(dead_code)]

use dp_apsd::graph::WeightedGraph;
use dp_apsd::harness::{generate_partial_ktree, GeneratorParams, InstanceBundle};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn ktree(n: usize, k: usize, seed: u64) -> InstanceBundle {
    generate_partial_ktree(GeneratorParams::new(n, k, seed)).unwrap()
}

pub fn partial_ktree(n: usize, k: usize, keep: f64, seed: u64) -> InstanceBundle {
    generate_partial_ktree(GeneratorParams::new(n, k, seed).keep(keep)).unwrap()
}

/// Erdős–Rényi graph with weights uniform in `[0, 10)`.
pub fn random_graph(n: usize, p: f64, seed: u64) -> WeightedGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = WeightedGraph::new(n);
    for u in 0..n {
        for v in (u + 1)..n {
            if rng.random_bool(p) {
                g.add_edge(u, v, rng.random_range(0.0..10.0)).unwrap();
            }
        }
    }
    g
}

pub fn path(n: usize, w: f64) -> WeightedGraph {
    WeightedGraph::from_edges(n, (1..n).map(|i| (i - 1, i, w))).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// k-path on `n` vertices: `i` is adjacent to `i-1, …, i-k`, weights uniform
/// in `[1, 10)`. Bags `{i, …, i+k}` form a chain of width `k`. Shortest
/// paths need about `n / k` hops, unlike the shallow random k-trees.
pub fn kpath(n: usize, k: usize, seed: u64) -> (WeightedGraph, dp_apsd::TreeDecomposition) {
    let mut rng = rng(seed);
    let mut g = WeightedGraph::new(n);
    for i in 1..n {
        for j in i.saturating_sub(k)..i {
            g.add_edge(j, i, rng.random_range(1.0..10.0)).unwrap();
        }
    }
    let bags: Vec<Vec<usize>> = (0..n.saturating_sub(k).max(1))
        .map(|i| (i..(i + k + 1).min(n)).collect())
        .collect();
    let edges = (1..bags.len()).map(|i| (i - 1, i)).collect();
    (g, dp_apsd::TreeDecomposition::new(bags, edges))
}
