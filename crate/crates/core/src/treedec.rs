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

//! Tree decompositions: validation, restriction to a vertex subset,
//! balanced separator bags and a min-degree construction heuristic.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::graph::{Csr, Edge, WeightedGraph};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DecompositionError {
    #[error("cannot reduce a decomposition to an empty vertex set")]
    EmptyVertexSet,
    #[error("no bag among {bags} splits the graph into components of at most half its {n} vertices")]
    NoBalancedBag { bags: usize, n: usize },
    #[error("invalid tree decomposition: {0}")]
    Invalid(ValidationReport),
}

/// A tree whose nodes carry bags of graph vertices.
///
/// Bags are kept sorted and duplicate-free; tree edges are stored as
/// `(low, high)` pairs in sorted order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeDecomposition {
    bags: Vec<Vec<usize>>,
    tree_edges: Vec<(usize, usize)>,
}

impl TreeDecomposition {
    pub fn new(bags: Vec<Vec<usize>>, tree_edges: Vec<(usize, usize)>) -> Self {
        let bags = bags
            .into_iter()
            .map(|mut b| {
                b.sort_unstable();
                b.dedup();
                b
            })
            .collect();
        let mut tree_edges: Vec<_> = tree_edges
            .into_iter()
            .map(|(a, b)| if a <= b { (a, b) } else { (b, a) })
            .collect();
        tree_edges.sort_unstable();
        TreeDecomposition { bags, tree_edges }
    }

    pub fn single_bag(vertices: Vec<usize>) -> Self {
        TreeDecomposition::new(vec![vertices], Vec::new())
    }

    pub fn bags(&self) -> &[Vec<usize>] {
        &self.bags
    }

    pub fn bag(&self, i: usize) -> &[usize] {
        &self.bags[i]
    }

    pub fn tree_edges(&self) -> &[(usize, usize)] {
        &self.tree_edges
    }

    pub fn len(&self) -> usize {
        self.bags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bags.is_empty()
    }

    /// Largest bag size minus one (zero for an empty decomposition).
    pub fn width(&self) -> usize {
        self.bags
            .iter()
            .map(Vec::len)
            .max()
            .unwrap_or(0)
            .saturating_sub(1)
    }

    pub fn max_bag_size(&self) -> usize {
        self.bags.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Neighbour lists of the bag tree; out-of-range edges are skipped.
    pub fn tree_adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.bags.len()];
        for &(a, b) in &self.tree_edges {
            if a < adj.len() && b < adj.len() && a != b {
                adj[a].push(b);
                adj[b].push(a);
            }
        }
        adj
    }

    /// Renames every vertex through `map`. Vertices mapped to `None` are
    /// dropped from their bags.
    pub fn relabel(&self, map: impl Fn(usize) -> Option<usize>) -> Self {
        let bags = self
            .bags
            .iter()
            .map(|b| b.iter().filter_map(|&v| map(v)).collect())
            .collect();
        TreeDecomposition::new(bags, self.tree_edges.clone())
    }
}

/// A single way a decomposition fails to be valid for a graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    NoBags,
    BagVertexOutOfRange { bag: usize, vertex: usize },
    TreeEdgeOutOfRange { a: usize, b: usize },
    NotATree(String),
    VertexUncovered(usize),
    EdgeUncovered(Edge),
    VertexBagsDisconnected(usize),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoBags => write!(f, "decomposition has no bags"),
            Violation::BagVertexOutOfRange { bag, vertex } => {
                write!(f, "bag {bag} contains out-of-range vertex {vertex}")
            }
            Violation::TreeEdgeOutOfRange { a, b } => {
                write!(f, "tree edge ({a}, {b}) refers to a missing bag")
            }
            Violation::NotATree(why) => write!(f, "bag graph is not a tree: {why}"),
            Violation::VertexUncovered(v) => write!(f, "vertex {v} is in no bag"),
            Violation::EdgeUncovered(e) => write!(f, "edge {e} is in no bag"),
            Violation::VertexBagsDisconnected(v) => {
                write!(f, "bags containing vertex {v} are not connected in the tree")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return write!(f, "ok");
        }
        let parts: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        write!(f, "{}", parts.join("; "))
    }
}

/// Checks coverage of vertices and edges, the connected-subtree property
/// and that the bag graph is a tree. Every violation found is reported.
pub fn validate_decomposition(g: &WeightedGraph, t: &TreeDecomposition) -> ValidationReport {
    let n = g.n();
    let m = t.len();
    let mut violations = Vec::new();
    if m == 0 {
        if n > 0 {
            violations.push(Violation::NoBags);
        }
        return ValidationReport { violations };
    }

    // bag membership per vertex
    let mut holders: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, bag) in t.bags().iter().enumerate() {
        for &v in bag {
            if v >= n {
                violations.push(Violation::BagVertexOutOfRange { bag: i, vertex: v });
            } else {
                holders[v].push(i);
            }
        }
    }

    let mut parent: Vec<usize> = (0..m).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut cyclic = false;
    for &(a, b) in t.tree_edges() {
        if a >= m || b >= m {
            violations.push(Violation::TreeEdgeOutOfRange { a, b });
            continue;
        }
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra == rb {
            cyclic = true;
        } else {
            parent[ra] = rb;
        }
    }
    if cyclic {
        violations.push(Violation::NotATree("contains a cycle".into()));
    }
    let roots = (0..m).filter(|&i| find(&mut parent, i) == i).count();
    if roots > 1 {
        violations.push(Violation::NotATree(format!("{roots} disconnected pieces")));
    }

    for (v, h) in holders.iter().enumerate() {
        if h.is_empty() {
            violations.push(Violation::VertexUncovered(v));
        }
    }

    for (e, _) in g.edges() {
        let covered = sorted_intersects(&holders[e.u], &holders[e.v]);
        if !covered {
            violations.push(Violation::EdgeUncovered(e));
        }
    }

    let adj = t.tree_adjacency();
    let mut mark = vec![usize::MAX; m];
    let mut queue = VecDeque::new();
    for (v, h) in holders.iter().enumerate() {
        if h.len() < 2 {
            continue;
        }
        for &b in h {
            mark[b] = v;
        }
        let mut reached = 1;
        let mut visited = vec![h[0]];
        mark[h[0]] = usize::MAX - 1;
        queue.push_back(h[0]);
        while let Some(b) = queue.pop_front() {
            for &c in &adj[b] {
                if mark[c] == v {
                    mark[c] = usize::MAX - 1;
                    visited.push(c);
                    reached += 1;
                    queue.push_back(c);
                }
            }
        }
        if reached != h.len() {
            violations.push(Violation::VertexBagsDisconnected(v));
        }
        for &b in h {
            mark[b] = usize::MAX;
        }
        for b in visited {
            mark[b] = usize::MAX;
        }
    }

    ValidationReport { violations }
}

fn sorted_intersects(a: &[usize], b: &[usize]) -> bool {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => return true,
        }
    }
    false
}

fn is_sorted_subset(small: &[usize], large: &[usize]) -> bool {
    if small.len() > large.len() {
        return false;
    }
    let mut j = 0;
    for &x in small {
        while j < large.len() && large[j] < x {
            j += 1;
        }
        if j == large.len() || large[j] != x {
            return false;
        }
        j += 1;
    }
    true
}

/// Restricts `t` to the vertices in `keep`, then contracts every bag that is
/// a subset of a tree-adjacent bag into that neighbour. When two adjacent
/// bags are equal the higher-indexed one goes. Surviving bags keep their
/// relative order.
///
/// Bags left empty by the restriction are dropped first; the pieces of the
/// tree they held together share no vertex, so they are re-linked in index
/// order.
pub fn reduce_decomposition(
    t: &TreeDecomposition,
    keep: &[usize],
) -> Result<TreeDecomposition, DecompositionError> {
    if keep.is_empty() {
        return Err(DecompositionError::EmptyVertexSet);
    }
    let bound = keep.iter().max().map_or(0, |&v| v + 1);
    let mut kept = vec![false; bound];
    for &v in keep {
        kept[v] = true;
    }
    let mut bags: Vec<Vec<usize>> = t
        .bags()
        .iter()
        .map(|b| b.iter().copied().filter(|&v| v < bound && kept[v]).collect())
        .collect();
    let m = bags.len();
    let mut alive: Vec<bool> = bags.iter().map(|b| !b.is_empty()).collect();
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); m];
    for &(a, b) in t.tree_edges() {
        if a < m && b < m && a != b && alive[a] && alive[b] {
            adj[a].insert(b);
            adj[b].insert(a);
        }
    }
    let mut seen = vec![false; m];
    let mut previous: Option<usize> = None;
    for root in 0..m {
        if !alive[root] || seen[root] {
            continue;
        }
        seen[root] = true;
        let mut stack = vec![root];
        while let Some(x) = stack.pop() {
            for &y in &adj[x] {
                if !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
        if let Some(p) = previous {
            adj[p].insert(root);
            adj[root].insert(p);
        }
        previous = Some(root);
    }

    // Bag contents never change, so after an absorption only the freshly
    // created adjacencies can enable another one.
    let mut queue: BTreeSet<usize> = (0..m).filter(|&i| alive[i]).collect();
    while let Some(i) = queue.pop_first() {
        if !alive[i] {
            continue;
        }
        let absorb = adj[i]
            .iter()
            .copied()
            .find(|&j| is_sorted_subset(&bags[i], &bags[j]));
        let Some(j) = absorb else { continue };
        let (gone, into) = if bags[i].len() == bags[j].len() {
            (i.max(j), i.min(j))
        } else {
            (i, j)
        };
        let moved: Vec<usize> = std::mem::take(&mut adj[gone]).into_iter().collect();
        for &y in &moved {
            adj[y].remove(&gone);
            if y != into && adj[into].insert(y) {
                adj[y].insert(into);
                queue.insert(y);
            }
        }
        alive[gone] = false;
        bags[gone].clear();
        queue.insert(into);
    }

    let mut index = vec![usize::MAX; m];
    let mut out_bags = Vec::new();
    for i in 0..m {
        if alive[i] {
            index[i] = out_bags.len();
            out_bags.push(std::mem::take(&mut bags[i]));
        }
    }
    let mut out_edges = Vec::new();
    for i in 0..m {
        if !alive[i] {
            continue;
        }
        for &j in &adj[i] {
            if i < j {
                out_edges.push((index[i], index[j]));
            }
        }
    }
    Ok(TreeDecomposition::new(out_bags, out_edges))
}

/// Size of the largest component of `G \ removed`, giving up as soon as
/// one exceeds `limit`.
fn largest_component_bounded(csr: &Csr, blocked: &mut [bool], limit: usize) -> usize {
    let n = csr.n();
    let mut seen = blocked.to_vec();
    let mut stack = Vec::new();
    let mut largest = 0;
    for s in 0..n {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        stack.push(s);
        let mut size = 0;
        while let Some(v) = stack.pop() {
            size += 1;
            for (z, _) in csr.neighbors(v) {
                if !seen[z] {
                    seen[z] = true;
                    stack.push(z);
                }
            }
        }
        largest = largest.max(size);
        if largest > limit {
            break;
        }
    }
    largest
}

/// Largest component size of `G` after deleting `removed`.
pub fn largest_component_after_removal(g: &WeightedGraph, removed: &[usize]) -> usize {
    let csr = g.csr();
    let mut blocked = vec![false; g.n()];
    for &v in removed {
        blocked[v] = true;
    }
    largest_component_bounded(&csr, &mut blocked, usize::MAX)
}

/// Smallest bag index whose removal leaves only components with at most
/// `|V| / 2` vertices.
pub fn find_separator_bag(
    g: &WeightedGraph,
    t: &TreeDecomposition,
) -> Result<usize, DecompositionError> {
    let n = g.n();
    let csr = g.csr();
    let mut blocked = vec![false; n];
    let half = n / 2;
    for (i, bag) in t.bags().iter().enumerate() {
        if bag.iter().any(|&v| v >= n) {
            continue;
        }
        for &v in bag {
            blocked[v] = true;
        }
        let largest = largest_component_bounded(&csr, &mut blocked, half);
        for &v in bag {
            blocked[v] = false;
        }
        if largest <= half {
            return Ok(i);
        }
    }
    Err(DecompositionError::NoBalancedBag { bags: t.len(), n })
}

/// Tree decomposition from a min-degree elimination ordering (ties go to
/// the smaller vertex), with subset bags contracted away.
pub fn heuristic_decomposition(g: &WeightedGraph) -> TreeDecomposition {
    let n = g.n();
    if n == 0 {
        return TreeDecomposition::new(Vec::new(), Vec::new());
    }
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for (e, _) in g.edges() {
        adj[e.u].insert(e.v);
        adj[e.v].insert(e.u);
    }
    let mut pq: BTreeSet<(usize, usize)> = (0..n).map(|v| (adj[v].len(), v)).collect();
    let mut position = vec![usize::MAX; n];
    let mut order = Vec::with_capacity(n);
    let mut bags = Vec::with_capacity(n);
    let mut later: Vec<Vec<usize>> = Vec::with_capacity(n);

    while let Some((_, v)) = pq.pop_first() {
        position[v] = order.len();
        order.push(v);
        let nbrs: Vec<usize> = adj[v].iter().copied().collect();
        for &a in &nbrs {
            pq.remove(&(adj[a].len(), a));
            adj[a].remove(&v);
        }
        for (i, &a) in nbrs.iter().enumerate() {
            for &b in &nbrs[i + 1..] {
                adj[a].insert(b);
                adj[b].insert(a);
            }
        }
        for &a in &nbrs {
            pq.insert((adj[a].len(), a));
        }
        adj[v].clear();
        let mut bag = nbrs.clone();
        bag.push(v);
        bags.push(bag);
        later.push(nbrs);
    }

    let mut edges = Vec::with_capacity(n);
    let mut roots = Vec::new();
    for (step, nbrs) in later.iter().enumerate() {
        match nbrs.iter().map(|&x| position[x]).min() {
            Some(parent) => edges.push((step, parent)),
            None => roots.push(step),
        }
    }
    for pair in roots.windows(2) {
        edges.push((pair[0], pair[1]));
    }
    let t = TreeDecomposition::new(bags, edges);
    let all: Vec<usize> = (0..n).collect();
    reduce_decomposition(&t, &all).expect("vertex set is non-empty")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::components_after_removal;

    fn path(n: usize) -> WeightedGraph {
        WeightedGraph::from_edges(n, (0..n - 1).map(|i| (i, i + 1, 1.0))).unwrap()
    }

    fn path_decomposition(n: usize) -> TreeDecomposition {
        TreeDecomposition::new(
            (0..n - 1).map(|i| vec![i, i + 1]).collect(),
            (0..n - 2).map(|i| (i, i + 1)).collect(),
        )
    }

    #[test]
    fn canonical_path_decomposition_is_valid() {
        let t = path_decomposition(3);
        assert!(validate_decomposition(&path(3), &t).is_ok());
        assert_eq!(t.width(), 1);
    }

    #[test]
    fn uncovered_edge_is_reported() {
        let t = TreeDecomposition::new(vec![vec![0, 1], vec![2]], vec![(0, 1)]);
        let r = validate_decomposition(&path(3), &t);
        assert_eq!(r.violations, vec![Violation::EdgeUncovered(Edge::new(1, 2))]);
    }

    #[test]
    fn disconnected_vertex_bags_are_reported() {
        // bag tree 0 - 1 - 2 with bags {a,b}, {c,d}, {a,d}
        let t = TreeDecomposition::new(vec![vec![0, 1], vec![2, 3], vec![0, 3]], vec![(0, 1), (1, 2)]);
        let r = validate_decomposition(&path(4), &t);
        assert!(r.violations.contains(&Violation::VertexBagsDisconnected(0)));
        assert!(r.violations.contains(&Violation::EdgeUncovered(Edge::new(1, 2))));
    }

    #[test]
    fn non_tree_bag_graphs_are_reported() {
        let t = TreeDecomposition::new(vec![vec![0, 1], vec![1, 2]], vec![]);
        let r = validate_decomposition(&path(3), &t);
        assert!(matches!(r.violations[0], Violation::NotATree(_)));
        let t = TreeDecomposition::new(
            vec![vec![0, 1], vec![1, 2], vec![1]],
            vec![(0, 1), (1, 2), (0, 2)],
        );
        assert!(!validate_decomposition(&path(3), &t).is_ok());
        let t = TreeDecomposition::new(vec![vec![0, 1], vec![1, 5]], vec![(0, 1)]);
        let r = validate_decomposition(&path(3), &t);
        assert!(r
            .violations
            .contains(&Violation::BagVertexOutOfRange { bag: 1, vertex: 5 }));
    }

    #[test]
    fn reduce_absorbs_subset_bag() {
        let t = path_decomposition(3);
        let r = reduce_decomposition(&t, &[0, 1]).unwrap();
        assert_eq!(r.bags(), &[vec![0, 1]]);
        assert!(r.tree_edges().is_empty());
    }

    #[test]
    fn reduce_to_everything_only_drops_subset_bags() {
        let t = path_decomposition(5);
        assert_eq!(reduce_decomposition(&t, &[0, 1, 2, 3, 4]).unwrap(), t);
        let t = TreeDecomposition::new(vec![vec![0, 1], vec![1], vec![1, 2]], vec![(0, 1), (1, 2)]);
        let r = reduce_decomposition(&t, &[0, 1, 2]).unwrap();
        assert_eq!(r, TreeDecomposition::new(vec![vec![0, 1], vec![1, 2]], vec![(0, 1)]));
    }

    #[test]
    fn reduce_equal_bags_drops_higher_index() {
        let t = TreeDecomposition::new(vec![vec![0, 1, 9], vec![0, 1, 8]], vec![(0, 1)]);
        let r = reduce_decomposition(&t, &[0, 1]).unwrap();
        assert_eq!(r.bags(), &[vec![0, 1]]);
        assert_eq!(reduce_decomposition(&t, &[]), Err(DecompositionError::EmptyVertexSet));
    }

    #[test]
    fn reduce_relinks_pieces_split_by_empty_bags() {
        let t = path_decomposition(6);
        let r = reduce_decomposition(&t, &[0, 1, 4, 5]).unwrap();
        assert_eq!(r.bags(), &[vec![0, 1], vec![4, 5]]);
        assert_eq!(r.tree_edges(), &[(0, 1)]);
        let g = WeightedGraph::from_edges(4, [(0, 1, 1.0), (2, 3, 1.0)]).unwrap();
        let mapped = r.relabel(|v| [0, 1, 4, 5].iter().position(|&x| x == v));
        assert!(validate_decomposition(&g, &mapped).is_ok());
    }

    #[test]
    fn separator_on_path_of_seven() {
        let g = path(7);
        let t = path_decomposition(7);
        // Exhaustive scan: which bags leave components of size <= 3?
        let qualifying: Vec<usize> = (0..t.len())
            .filter(|&i| {
                components_after_removal(&g, t.bag(i))
                    .iter()
                    .all(|c| 2 * c.len() <= 7)
            })
            .collect();
        assert_eq!(qualifying, vec![2, 3]);
        assert_eq!(find_separator_bag(&g, &t).unwrap(), 2);
    }

    #[test]
    fn single_bag_is_its_own_separator() {
        let g = path(4);
        let t = TreeDecomposition::single_bag(vec![0, 1, 2, 3]);
        assert_eq!(find_separator_bag(&g, &t).unwrap(), 0);
    }

    #[test]
    fn separator_search_fails_on_unbalanced_decomposition() {
        let g = path(7);
        let t = TreeDecomposition::new(vec![vec![0, 1]], vec![]);
        assert!(matches!(
            find_separator_bag(&g, &t),
            Err(DecompositionError::NoBalancedBag { .. })
        ));
    }

    #[test]
    fn heuristic_widths() {
        let tree = WeightedGraph::from_edges(
            6,
            [(0, 1, 1.0), (0, 2, 1.0), (2, 3, 1.0), (2, 4, 1.0), (4, 5, 1.0)],
        )
        .unwrap();
        let t = heuristic_decomposition(&tree);
        assert!(validate_decomposition(&tree, &t).is_ok());
        assert_eq!(t.width(), 1);

        for k in 2..7 {
            let mut edges = Vec::new();
            for a in 0..k {
                for b in a + 1..k {
                    edges.push((a, b, 1.0));
                }
            }
            let clique = WeightedGraph::from_edges(k, edges).unwrap();
            let t = heuristic_decomposition(&clique);
            assert!(validate_decomposition(&clique, &t).is_ok());
            assert_eq!(t.width(), k - 1);
        }
    }

    #[test]
    fn heuristic_handles_disconnected_graphs() {
        let g = WeightedGraph::from_edges(5, [(0, 1, 1.0), (3, 4, 1.0)]).unwrap();
        let t = heuristic_decomposition(&g);
        assert!(validate_decomposition(&g, &t).is_ok());
    }
}
