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

//! Line-oriented text formats.
//!
//! Weighted graphs:
//!
//! ```text
//! c comment
//! p wgr <n> <m>
//! e <u> <v> <weight>
//! ```
//!
//! Vertices are numbered from 1. The unweighted PACE header `p tw <n> <m>`
//! with bare `<u> <v>` edge lines is also accepted (unit weights).
//!
//! Tree decompositions follow the PACE `.td` layout:
//!
//! ```text
//! s td <bags> <max_bag_size> <n>
//! b <id> <v>...
//! <id> <id>
//! ```
//!
//! Serialisation is canonical: edges and tree edges sorted, bag vertices
//! sorted, weights printed so that they parse back bit-exactly.

use std::fmt::Write;

use thiserror::Error;

use crate::graph::{GraphError, WeightedGraph};
use crate::treedec::TreeDecomposition;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {reason}")]
pub struct CodecError {
    pub line: usize,
    pub reason: String,
}

fn err(line: usize, reason: impl Into<String>) -> CodecError {
    CodecError {
        line,
        reason: reason.into(),
    }
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.is_empty() || toks[0] == "c" {
            None
        } else {
            Some((i + 1, toks))
        }
    })
}

fn parse_num<T: std::str::FromStr>(line: usize, tok: &str, what: &str) -> Result<T, CodecError> {
    tok.parse()
        .map_err(|_| err(line, format!("invalid {what} '{tok}'")))
}

fn parse_vertex(line: usize, tok: &str, n: usize) -> Result<usize, CodecError> {
    let v: usize = parse_num(line, tok, "vertex")?;
    if v == 0 || v > n {
        return Err(err(line, format!("vertex {v} out of range 1..={n}")));
    }
    Ok(v - 1)
}

pub fn parse_graph(text: &str) -> Result<WeightedGraph, CodecError> {
    let mut header: Option<(usize, usize, bool)> = None;
    let mut g = WeightedGraph::new(0);
    let mut last_line = 0;
    for (line, toks) in content_lines(text) {
        last_line = line;
        match (header, toks[0]) {
            (None, "p") => {
                if toks.len() != 4 || !(toks[1] == "wgr" || toks[1] == "tw") {
                    return Err(err(line, "expected header 'p wgr <n> <m>'"));
                }
                let n = parse_num(line, toks[2], "vertex count")?;
                let m = parse_num(line, toks[3], "edge count")?;
                header = Some((n, m, toks[1] == "wgr"));
                g = WeightedGraph::new(n);
            }
            (None, _) => return Err(err(line, "edge before header")),
            (Some(_), "p") => return Err(err(line, "duplicate header")),
            (Some((n, _, weighted)), _) => {
                let (u, v, w) = if weighted {
                    if toks[0] != "e" || toks.len() != 4 {
                        return Err(err(line, "expected 'e <u> <v> <weight>'"));
                    }
                    let w: f64 = parse_num(line, toks[3], "weight")?;
                    (toks[1], toks[2], w)
                } else {
                    if toks.len() != 2 {
                        return Err(err(line, "expected '<u> <v>'"));
                    }
                    (toks[0], toks[1], 1.0)
                };
                let u = parse_vertex(line, u, n)?;
                let v = parse_vertex(line, v, n)?;
                if !w.is_finite() {
                    return Err(err(line, "weight is not finite"));
                }
                if w < 0.0 {
                    return Err(err(line, format!("negative weight {w}")));
                }
                g.add_edge(u, v, w).map_err(|e| match e {
                    GraphError::SelfLoop(x) => err(line, format!("self-loop on vertex {}", x + 1)),
                    GraphError::DuplicateEdge(a, b) => {
                        err(line, format!("duplicate edge {} {}", a + 1, b + 1))
                    }
                    other => err(line, other.to_string()),
                })?;
            }
        }
    }
    let Some((_, m, _)) = header else {
        return Err(err(last_line, "missing header 'p wgr <n> <m>'"));
    };
    if g.edge_count() != m {
        return Err(err(
            last_line,
            format!("header declares {m} edges, found {}", g.edge_count()),
        ));
    }
    Ok(g)
}

pub fn serialize_graph(g: &WeightedGraph) -> String {
    let mut out = String::new();
    writeln!(out, "p wgr {} {}", g.n(), g.edge_count()).unwrap();
    for (e, w) in g.edges() {
        writeln!(out, "e {} {} {:?}", e.u + 1, e.v + 1, w).unwrap();
    }
    out
}

/// A parsed `.td` file: the decomposition and the vertex count it names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TdFile {
    pub decomposition: TreeDecomposition,
    pub vertex_count: usize,
}

pub fn parse_td(text: &str) -> Result<TdFile, CodecError> {
    let mut header: Option<(usize, usize, usize)> = None;
    let mut bags: Vec<Option<Vec<usize>>> = Vec::new();
    let mut edges = Vec::new();
    let mut last_line = 0;
    for (line, toks) in content_lines(text) {
        last_line = line;
        match (header, toks[0]) {
            (None, "s") => {
                if toks.len() != 5 || toks[1] != "td" {
                    return Err(err(line, "expected header 's td <bags> <max_bag_size> <n>'"));
                }
                let nb = parse_num(line, toks[2], "bag count")?;
                let mb = parse_num(line, toks[3], "maximum bag size")?;
                let n = parse_num(line, toks[4], "vertex count")?;
                header = Some((nb, mb, n));
                bags = vec![None; nb];
            }
            (None, _) => return Err(err(line, "content before header")),
            (Some(_), "s") => return Err(err(line, "duplicate header")),
            (Some((nb, mb, n)), "b") => {
                if toks.len() < 2 {
                    return Err(err(line, "expected 'b <id> <v>...'"));
                }
                let id: usize = parse_num(line, toks[1], "bag id")?;
                if id == 0 || id > nb {
                    return Err(err(line, format!("bag id {id} out of range 1..={nb}")));
                }
                if bags[id - 1].is_some() {
                    return Err(err(line, format!("bag {id} defined twice")));
                }
                let mut bag = toks[2..]
                    .iter()
                    .map(|t| parse_vertex(line, t, n))
                    .collect::<Result<Vec<_>, _>>()?;
                bag.sort_unstable();
                if bag.windows(2).any(|p| p[0] == p[1]) {
                    return Err(err(line, "bag lists a vertex twice"));
                }
                if bag.len() > mb {
                    return Err(err(
                        line,
                        format!("bag {id} has {} vertices, header allows {mb}", bag.len()),
                    ));
                }
                bags[id - 1] = Some(bag);
            }
            (Some((nb, _, _)), _) => {
                if toks.len() != 2 {
                    return Err(err(line, "expected tree edge '<id> <id>'"));
                }
                let a: usize = parse_num(line, toks[0], "bag id")?;
                let b: usize = parse_num(line, toks[1], "bag id")?;
                for x in [a, b] {
                    if x == 0 || x > nb {
                        return Err(err(line, format!("bag id {x} out of range 1..={nb}")));
                    }
                }
                edges.push((a - 1, b - 1));
            }
        }
    }
    let Some((_, mb, n)) = header else {
        return Err(err(last_line, "missing header 's td <bags> <max_bag_size> <n>'"));
    };
    let bags = bags
        .into_iter()
        .enumerate()
        .map(|(i, b)| b.ok_or_else(|| err(last_line, format!("bag {} never defined", i + 1))))
        .collect::<Result<Vec<_>, _>>()?;
    let actual = bags.iter().map(Vec::len).max().unwrap_or(0);
    if actual != mb {
        return Err(err(
            last_line,
            format!("header declares maximum bag size {mb}, largest bag has {actual}"),
        ));
    }
    Ok(TdFile {
        decomposition: TreeDecomposition::new(bags, edges),
        vertex_count: n,
    })
}

pub fn serialize_td(t: &TreeDecomposition, n: usize) -> String {
    let mut out = String::new();
    writeln!(out, "s td {} {} {}", t.len(), t.max_bag_size(), n).unwrap();
    for (i, bag) in t.bags().iter().enumerate() {
        write!(out, "b {}", i + 1).unwrap();
        for v in bag {
            write!(out, " {}", v + 1).unwrap();
        }
        out.push('\n');
    }
    for &(a, b) in t.tree_edges() {
        writeln!(out, "{} {}", a + 1, b + 1).unwrap();
    }
    out
}
