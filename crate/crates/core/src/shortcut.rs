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

//! Shortcut construction over a separator recursion.
//!
//! [`compute_edges`] recursively removes a balanced separator bag `S`,
//! emits the distances from the extended starting set `V0 ∪ S` to every
//! separator vertex, and recurses into each component glued back to `S`.
//! Small subgraphs (at most `6(p+1)` vertices) emit all their pairwise
//! distances. [`construct_graph`] folds the emitted triples into the input
//! graph, keeping the minimum weight per pair; in that graph every distance
//! is realised within `2·⌈max(2, log_1.5 n)⌉` hops.
//!
//! Every call records its subgraph edge set and shortcut count in a
//! [`CallTrace`], from which [`sensitivity_bound`] derives an instance-exact
//! bound on the ℓ1 sensitivity of the emitted weights.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::graph::{self, dijkstra, Edge, GraphError, WeightedGraph};
use crate::treedec::{
    find_separator_bag, reduce_decomposition, validate_decomposition, DecompositionError,
    TreeDecomposition,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ShortcutError {
    #[error(transparent)]
    Decomposition(#[from] DecompositionError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("starting vertex {0} is not a vertex of the graph")]
    StartOutOfRange(usize),
}

/// One emitted triple: the distance between `u < v` inside the subgraph of
/// recursion call `call`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Shortcut {
    pub u: usize,
    pub v: usize,
    pub weight: f64,
    pub call: usize,
}

/// Triples in emission order. The order depends only on the topology and
/// the decomposition, so lists computed for two weightings of the same
/// graph line up position by position.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ShortcutList {
    pub triples: Vec<Shortcut>,
}

impl ShortcutList {
    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.triples.iter().map(|s| s.weight).collect()
    }

    /// ℓ1 distance between two aligned lists; `None` if they do not align.
    pub fn l1_distance(&self, other: &ShortcutList) -> Option<f64> {
        if self.len() != other.len() {
            return None;
        }
        let mut sum = 0.0;
        for (a, b) in self.triples.iter().zip(&other.triples) {
            if (a.u, a.v, a.call) != (b.u, b.v, b.call) {
                return None;
            }
            sum += (a.weight - b.weight).abs();
        }
        Some(sum)
    }
}

/// Which vertices a child call inherits as its starting set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StartSetRule {
    /// `V(H_i) ∩ (V0 ∪ S)`: the child keeps the separator it is glued to.
    #[default]
    SubgraphIntersection,
    /// `V(C_i) ∩ (V0 ∪ S)`: only the component's own vertices. Since `C_i`
    /// never meets `S` this never grows the starting set, and hop
    /// preservation can fail; kept for comparison.
    ComponentIntersection,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ShortcutOptions {
    pub start_set_rule: StartSetRule,
}

/// Telemetry for one recursion call.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CallRecord {
    pub id: usize,
    pub parent: Option<usize>,
    /// Root is depth 0.
    pub depth: usize,
    pub vertex_count: usize,
    /// Starting set `V0`, global vertex ids.
    pub start_set: Vec<usize>,
    /// `|V0 ∪ S|`; equals `|V0|` in a base case.
    pub extended_start_size: usize,
    /// Index of the separator bag in this call's decomposition.
    pub separator_bag: Option<usize>,
    /// Separator vertices, global ids; empty for base cases.
    pub separator: Vec<usize>,
    pub base_case: bool,
    pub shortcut_count: usize,
    /// Edges of this call's subgraph, global ids, canonical order.
    #[serde(skip)]
    pub edges: Vec<Edge>,
    pub children: Vec<usize>,
}

/// Every call of one run, in depth-first preorder (children by component
/// order).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CallTrace {
    /// Width `p` of the root decomposition; fixes the base-case threshold.
    pub width: usize,
    pub calls: Vec<CallRecord>,
}

impl CallTrace {
    pub fn root(&self) -> &CallRecord {
        &self.calls[0]
    }

    /// Number of recursion levels (a lone base case has one).
    pub fn levels(&self) -> usize {
        self.calls.iter().map(|c| c.depth).max().map_or(0, |d| d + 1)
    }

    pub fn shortcut_count(&self) -> usize {
        self.calls.iter().map(|c| c.shortcut_count).sum()
    }

    pub fn max_start_set(&self) -> usize {
        self.calls.iter().map(|c| c.start_set.len()).max().unwrap_or(0)
    }

    pub fn base_case_limit(&self) -> usize {
        base_case_limit(self.width)
    }
}

fn base_case_limit(width: usize) -> usize {
    6 * (width + 1)
}

/// The graph `G'` obtained by adding every shortcut to `G`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntermediateGraph {
    pub graph: WeightedGraph,
}

impl IntermediateGraph {
    /// Copies `g` and inserts each triple, keeping the smaller weight when
    /// the pair is already an edge.
    pub fn from_shortcuts(g: &WeightedGraph, shortcuts: &ShortcutList) -> Result<Self, GraphError> {
        let mut graph = g.clone();
        for s in &shortcuts.triples {
            graph.insert_or_lower(s.u, s.v, s.weight)?;
        }
        Ok(IntermediateGraph { graph })
    }

    pub fn edge_count(&self) -> usize {
        self.graph.edge_count()
    }
}

struct Builder {
    width: usize,
    rule: StartSetRule,
    shortcuts: Vec<Shortcut>,
    calls: Vec<CallRecord>,
}

struct Subproblem {
    graph: WeightedGraph,
    /// Local index -> global vertex id, ascending.
    labels: Vec<usize>,
    decomposition: TreeDecomposition,
    /// Local ids, ascending.
    start: Vec<usize>,
}

impl Builder {
    fn emit(&mut self, call: usize, a: usize, b: usize, weight: f64) {
        let e = Edge::new(a, b);
        self.shortcuts.push(Shortcut {
            u: e.u,
            v: e.v,
            weight,
            call,
        });
    }

    fn run(
        &mut self,
        sub: Subproblem,
        depth: usize,
        parent: Option<usize>,
    ) -> Result<usize, ShortcutError> {
        let Subproblem {
            graph: local,
            labels,
            decomposition: td,
            start,
        } = sub;
        let id = self.calls.len();
        let n = local.n();
        let edges: Vec<Edge> = local
            .edges()
            .map(|(e, _)| Edge::new(labels[e.u], labels[e.v]))
            .collect();
        self.calls.push(CallRecord {
            id,
            parent,
            depth,
            vertex_count: n,
            start_set: start.iter().map(|&v| labels[v]).collect(),
            extended_start_size: start.len(),
            separator_bag: None,
            separator: Vec::new(),
            base_case: true,
            shortcut_count: 0,
            edges,
            children: Vec::new(),
        });
        let before = self.shortcuts.len();
        let csr = local.csr();

        if n <= base_case_limit(self.width) {
            for u in 0..n {
                let dist = dijkstra(&csr, u);
                for v in (u + 1)..n {
                    if dist[v].is_finite() {
                        self.emit(id, labels[u], labels[v], dist[v]);
                    }
                }
            }
            self.calls[id].shortcut_count = self.shortcuts.len() - before;
            return Ok(id);
        }

        let bag = find_separator_bag(&local, &td)?;
        let separator = td.bag(bag).to_vec();
        let extended: Vec<usize> = start
            .iter()
            .chain(&separator)
            .copied()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();

        let mut seen = BTreeSet::new();
        for &v in &extended {
            let dist = dijkstra(&csr, v);
            for &u in &separator {
                if u == v || !dist[u].is_finite() || !seen.insert(Edge::new(u, v)) {
                    continue;
                }
                self.emit(id, labels[v], labels[u], dist[u]);
            }
        }
        {
            let rec = &mut self.calls[id];
            rec.base_case = false;
            rec.separator_bag = Some(bag);
            rec.separator = separator.iter().map(|&v| labels[v]).collect();
            rec.extended_start_size = extended.len();
            rec.shortcut_count = self.shortcuts.len() - before;
        }

        let mut in_separator = vec![false; n];
        for &s in &separator {
            in_separator[s] = true;
        }
        let components = graph::components_masked(&csr, &in_separator);
        for comp in components {
            let mut in_comp = vec![false; n];
            for &x in &comp {
                in_comp[x] = true;
            }
            let mut hv: Vec<usize> = comp.iter().chain(&separator).copied().collect();
            hv.sort_unstable();
            let local_of = |x: usize| hv.binary_search(&x).ok();

            let mut h = WeightedGraph::new(hv.len());
            for &x in &comp {
                for (z, w) in csr.neighbors(x) {
                    if in_comp[z] && z < x {
                        continue;
                    }
                    let (a, b) = (local_of(x).unwrap(), local_of(z).unwrap());
                    h.add_edge(a, b, w)?;
                }
            }
            let th = reduce_decomposition(&td, &hv)?.relabel(local_of);
            let inherited: Vec<usize> = match self.rule {
                StartSetRule::SubgraphIntersection => {
                    extended.iter().filter_map(|&v| local_of(v)).collect()
                }
                StartSetRule::ComponentIntersection => extended
                    .iter()
                    .filter(|&&v| in_comp[v])
                    .filter_map(|&v| local_of(v))
                    .collect(),
            };
            let child = Subproblem {
                graph: h,
                labels: hv.iter().map(|&x| labels[x]).collect(),
                decomposition: th,
                start: inherited,
            };
            let cid = self.run(child, depth + 1, Some(id))?;
            self.calls[id].children.push(cid);
        }
        Ok(id)
    }
}

/// Runs the separator recursion from starting set `start` and returns the
/// emitted shortcut triples together with the call trace.
pub fn compute_edges(
    g: &WeightedGraph,
    t: &TreeDecomposition,
    start: &[usize],
) -> Result<(ShortcutList, CallTrace), ShortcutError> {
    compute_edges_with(g, t, start, ShortcutOptions::default())
}

pub fn compute_edges_with(
    g: &WeightedGraph,
    t: &TreeDecomposition,
    start: &[usize],
    options: ShortcutOptions,
) -> Result<(ShortcutList, CallTrace), ShortcutError> {
    g.ensure_nonnegative()?;
    let report = validate_decomposition(g, t);
    if !report.is_ok() {
        return Err(DecompositionError::Invalid(report).into());
    }
    if let Some(&v) = start.iter().find(|&&v| v >= g.n()) {
        return Err(ShortcutError::StartOutOfRange(v));
    }
    let mut start = start.to_vec();
    start.sort_unstable();
    start.dedup();

    let width = t.width();
    let mut builder = Builder {
        width,
        rule: options.start_set_rule,
        shortcuts: Vec::new(),
        calls: Vec::new(),
    };
    let root = Subproblem {
        graph: g.clone(),
        labels: (0..g.n()).collect(),
        decomposition: t.clone(),
        start,
    };
    builder.run(root, 0, None)?;
    Ok((
        ShortcutList {
            triples: builder.shortcuts,
        },
        CallTrace {
            width,
            calls: builder.calls,
        },
    ))
}

/// Builds the intermediate graph `G'` and the call trace.
pub fn construct_graph(
    g: &WeightedGraph,
    t: &TreeDecomposition,
    start: &[usize],
) -> Result<(IntermediateGraph, CallTrace), ShortcutError> {
    construct_graph_with(g, t, start, ShortcutOptions::default())
}

pub fn construct_graph_with(
    g: &WeightedGraph,
    t: &TreeDecomposition,
    start: &[usize],
    options: ShortcutOptions,
) -> Result<(IntermediateGraph, CallTrace), ShortcutError> {
    let (shortcuts, trace) = compute_edges_with(g, t, start, options)?;
    let ig = IntermediateGraph::from_shortcuts(g, &shortcuts)?;
    Ok((ig, trace))
}

/// Hop budgets `(h1, h)` for an `n`-vertex graph: `h1 = ⌈max(2, log_1.5 n)⌉`
/// reaches everything from the root separator, `h = 2·h1` reaches all pairs.
pub fn hop_budgets(n: usize) -> (usize, usize) {
    let log = if n > 1 {
        (n as f64).ln() / 1.5f64.ln()
    } else {
        0.0
    };
    let h1 = log.max(2.0).ceil() as usize;
    (h1, 2 * h1)
}

/// Per-edge accounting of how many emitted weights can move when that
/// edge's weight moves.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityAccount {
    pub delta: f64,
    /// Sum of shortcut counts over the calls whose subgraph holds the edge.
    pub per_edge: BTreeMap<Edge, f64>,
}

impl SensitivityAccount {
    /// The edge attaining `delta` (smallest such edge).
    pub fn argmax(&self) -> Option<Edge> {
        self.per_edge
            .iter()
            .find(|(_, c)| **c == self.delta)
            .map(|(e, _)| *e)
    }
}

/// Instance-exact ℓ1 sensitivity of the shortcut weights.
///
/// Each emitted weight is a shortest distance inside one call's subgraph and
/// so moves by at most `|δ|` when one of that subgraph's edges moves by `δ`.
/// Summing shortcut counts over the calls holding an edge bounds the total
/// movement caused by that edge; the maximum over edges bounds the ℓ1 change
/// for any unit-ℓ1 perturbation.
pub fn sensitivity_bound(trace: &CallTrace, g: &WeightedGraph) -> SensitivityAccount {
    let mut per_edge: BTreeMap<Edge, f64> = g.edges().map(|(e, _)| (e, 0.0)).collect();
    for call in &trace.calls {
        let count = call.shortcut_count as f64;
        for e in &call.edges {
            if let Some(c) = per_edge.get_mut(e) {
                *c += count;
            }
        }
    }
    let delta = per_edge.values().copied().fold(0.0, f64::max);
    SensitivityAccount { delta, per_edge }
}

/// Reference scale `(p+1)²·⌈log₂ n⌉²` for comparing measured sensitivity
/// against its asymptotic form.
pub fn sensitivity_scale(width: usize, n: usize) -> f64 {
    let log = (n.max(2) as f64).log2().ceil();
    ((width + 1) as f64).powi(2) * log * log
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::exact_apsd;

    fn path(n: usize, w: impl Fn(usize) -> f64) -> WeightedGraph {
        WeightedGraph::from_edges(n, (0..n - 1).map(|i| (i, i + 1, w(i)))).unwrap()
    }

    fn path_td(n: usize) -> TreeDecomposition {
        TreeDecomposition::new(
            (0..n - 1).map(|i| vec![i, i + 1]).collect(),
            (0..n - 2).map(|i| (i, i + 1)).collect(),
        )
    }

    #[test]
    fn base_case_emits_all_pairs() {
        let g = path(3, |i| (i + 1) as f64);
        let (list, trace) = compute_edges(&g, &path_td(3), &[]).unwrap();
        let triples: Vec<_> = list.triples.iter().map(|s| (s.u, s.v, s.weight)).collect();
        assert_eq!(triples, vec![(0, 1, 1.0), (0, 2, 3.0), (1, 2, 2.0)]);
        assert_eq!(trace.calls.len(), 1);
        assert!(trace.root().base_case);

        let (ig, _) = construct_graph(&g, &path_td(3), &[]).unwrap();
        assert_eq!(ig.graph.weight(0, 1), Some(1.0));
        assert_eq!(ig.graph.weight(1, 2), Some(2.0));
        assert_eq!(ig.graph.weight(0, 2), Some(3.0));
    }

    #[test]
    fn duplicate_larger_triple_leaves_weight() {
        let g = path(3, |_| 1.0);
        let list = ShortcutList {
            triples: vec![
                Shortcut { u: 0, v: 2, weight: 2.0, call: 0 },
                Shortcut { u: 0, v: 2, weight: 5.0, call: 1 },
            ],
        };
        let ig = IntermediateGraph::from_shortcuts(&g, &list).unwrap();
        assert_eq!(ig.graph.weight(0, 2), Some(2.0));
    }

    #[test]
    fn path_shortcuts_are_exact_distances() {
        let g = path(13, |_| 1.0);
        let (list, trace) = compute_edges(&g, &path_td(13), &[]).unwrap();
        assert!(!trace.root().base_case);
        for s in &list.triples {
            assert_eq!(s.weight, (s.v - s.u) as f64);
        }
    }

    #[test]
    fn single_edge_sensitivity_is_one() {
        let g = WeightedGraph::from_edges(2, [(0, 1, 4.0)]).unwrap();
        let t = TreeDecomposition::single_bag(vec![0, 1]);
        let (_, trace) = compute_edges(&g, &t, &[]).unwrap();
        assert_eq!(sensitivity_bound(&trace, &g).delta, 1.0);
    }

    #[test]
    fn p3_sensitivity_and_perturbation() {
        let g = path(3, |i| (i + 1) as f64);
        let t = path_td(3);
        let (list, trace) = compute_edges(&g, &t, &[]).unwrap();
        let acct = sensitivity_bound(&trace, &g);
        assert_eq!(acct.delta, 3.0);
        let bumped = g.map_weights(|e, w| if e == Edge::new(0, 1) { w + 1.0 } else { w }).unwrap();
        let (list2, _) = compute_edges(&bumped, &t, &[]).unwrap();
        assert_eq!(list.l1_distance(&list2), Some(2.0));
    }

    #[test]
    fn rejects_invalid_inputs() {
        let g = path(4, |_| 1.0);
        let bad = TreeDecomposition::new(vec![vec![0, 1], vec![2, 3]], vec![(0, 1)]);
        assert!(matches!(
            compute_edges(&g, &bad, &[]),
            Err(ShortcutError::Decomposition(DecompositionError::Invalid(_)))
        ));
        assert_eq!(
            compute_edges(&g, &path_td(4), &[9]),
            Err(ShortcutError::StartOutOfRange(9))
        );
    }

    #[test]
    fn hop_budget_values() {
        assert_eq!(hop_budgets(1), (2, 4));
        assert_eq!(hop_budgets(4), (4, 8));
        // log_1.5 120 ≈ 11.81
        assert_eq!(hop_budgets(120), (12, 24));
        // log_1.5 512 ≈ 15.39
        assert_eq!(hop_budgets(512), (16, 32));
        // 1.5^2 = 2.25 < 3
        assert_eq!(hop_budgets(3), (3, 6));
    }

    #[test]
    fn long_path_hop_preservation() {
        let g = path(40, |i| 1.0 + (i % 3) as f64);
        let t = path_td(40);
        let (ig, trace) = construct_graph(&g, &t, &[]).unwrap();
        let (_, h) = hop_budgets(40);
        let exact = exact_apsd(&g).unwrap();
        let hop = graph::k_hop_apsd(&ig.graph, h).unwrap();
        assert!(exact.max_abs_diff(&hop) < 1e-9);
        assert!(trace.levels() >= 2);
    }
}
