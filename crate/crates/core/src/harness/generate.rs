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

use std::collections::HashMap;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::HarnessError;
use crate::graph::{Edge, WeightedGraph};
use crate::treedec::TreeDecomposition;

/// External vertex names, indexed by internal vertex id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl LabelMap {
    /// Labels `"1"..="n"`, the numbering used by the text formats.
    pub fn one_based(n: usize) -> Self {
        LabelMap::from_names((1..=n).map(|i| i.to_string()).collect())
            .expect("distinct numeric labels")
    }

    /// Fails if two vertices share a name.
    pub fn from_names(names: Vec<String>) -> Option<Self> {
        let mut index = HashMap::with_capacity(names.len());
        for (i, name) in names.iter().enumerate() {
            if index.insert(name.clone(), i).is_some() {
                return None;
            }
        }
        Some(LabelMap { names, index })
    }

    pub fn name(&self, v: usize) -> &str {
        &self.names[v]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Provenance {
    File {
        graph: String,
        decomposition: Option<String>,
    },
    Generated {
        seed: u64,
        n: usize,
        k: usize,
        density: f64,
    },
}

/// A graph, a decomposition valid for it, and where both came from.
#[derive(Debug, Clone)]
pub struct InstanceBundle {
    pub graph: WeightedGraph,
    pub decomposition: TreeDecomposition,
    pub labels: LabelMap,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeneratorParams {
    pub n: usize,
    pub k: usize,
    /// Probability of keeping each edge that is not needed for connectivity.
    pub edge_keep_prob: f64,
    pub weight_range: (f64, f64),
    /// Draw integer weights uniformly from the integers in `weight_range`.
    pub integer_weights: bool,
    pub seed: u64,
}

impl GeneratorParams {
    pub fn new(n: usize, k: usize, seed: u64) -> Self {
        GeneratorParams {
            n,
            k,
            edge_keep_prob: 1.0,
            weight_range: (0.0, 10.0),
            integer_weights: false,
            seed,
        }
    }

    pub fn keep(mut self, p: f64) -> Self {
        self.edge_keep_prob = p;
        self
    }
}

/// Random connected partial k-tree with its natural width-`k` decomposition.
///
/// Starts from a `(k+1)`-clique and attaches each further vertex to a
/// uniformly chosen existing `k`-clique; every attachment creates one bag.
/// One edge per attachment (plus a path through the initial clique) is kept
/// unconditionally so that the graph stays connected; every other edge
/// survives with probability `edge_keep_prob`.
pub fn generate_partial_ktree(params: GeneratorParams) -> Result<InstanceBundle, HarnessError> {
    let GeneratorParams {
        n,
        k,
        edge_keep_prob,
        weight_range: (lo, hi),
        integer_weights,
        seed,
    } = params;
    if k < 1 || n <= k {
        return Err(HarnessError::InvalidGenerator(format!(
            "need n > k >= 1, got n = {n}, k = {k}"
        )));
    }
    if !(edge_keep_prob > 0.0 && edge_keep_prob <= 1.0) {
        return Err(HarnessError::InvalidGenerator(format!(
            "edge keep probability must lie in (0, 1], got {edge_keep_prob}"
        )));
    }
    if !(lo >= 0.0 && lo <= hi && hi.is_finite()) {
        return Err(HarnessError::InvalidGenerator(format!(
            "weight range must satisfy 0 <= lo <= hi, got [{lo}, {hi}]"
        )));
    }
    if integer_weights && lo.ceil() > hi.floor() {
        return Err(HarnessError::InvalidGenerator(format!(
            "no integer lies in [{lo}, {hi}]"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bags: Vec<Vec<usize>> = vec![(0..=k).collect()];
    let mut tree_edges = Vec::with_capacity(n - k);
    // (k-clique, a bag containing it)
    let mut cliques: Vec<(Vec<usize>, usize)> = (0..=k)
        .map(|skip| ((0..=k).filter(|&x| x != skip).collect(), 0))
        .collect();
    let mut edges: Vec<(Edge, bool)> = Vec::new();
    for a in 0..=k {
        for b in a + 1..=k {
            edges.push((Edge::new(a, b), b == a + 1));
        }
    }

    for v in (k + 1)..n {
        let (clique, host) = cliques.choose(&mut rng).expect("clique list never empty").clone();
        let anchor = *clique.choose(&mut rng).expect("k >= 1");
        for &x in &clique {
            edges.push((Edge::new(x, v), x == anchor));
        }
        let bag_id = bags.len();
        let mut bag = clique.clone();
        bag.push(v);
        bags.push(bag);
        tree_edges.push((host, bag_id));
        for skip in 0..clique.len() {
            let mut next: Vec<usize> = clique
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != skip)
                .map(|(_, &x)| x)
                .collect();
            next.push(v);
            cliques.push((next, bag_id));
        }
    }

    let mut graph = WeightedGraph::new(n);
    for (e, critical) in edges {
        let keep = critical || edge_keep_prob >= 1.0 || rng.random_bool(edge_keep_prob);
        if !keep {
            continue;
        }
        let w = if integer_weights {
            rng.random_range(lo.ceil() as i64..=hi.floor() as i64) as f64
        } else if hi > lo {
            rng.random_range(lo..hi)
        } else {
            lo
        };
        graph
            .add_edge(e.u, e.v, w)
            .expect("generated edges are distinct and in range");
    }

    Ok(InstanceBundle {
        graph,
        decomposition: TreeDecomposition::new(bags, tree_edges),
        labels: LabelMap::one_based(n),
        provenance: Provenance::Generated {
            seed,
            n,
            k,
            density: edge_keep_prob,
        },
    })
}
