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

//! Differentially private all-pairs shortest distances for graphs of low
//! tree-width.
//!
//! The release pipeline has three stages:
//!
//! 1. [`shortcut::construct_graph`] recursively splits the graph along
//!    balanced separator bags of a tree decomposition and adds shortcut
//!    edges, so that every true distance is realised by a path with
//!    `O(log n)` hops.
//! 2. [`mechanism`] perturbs every edge of that intermediate graph with
//!    Laplace noise calibrated to its ℓ1 sensitivity.
//! 3. Hop-limited shortest distances ([`graph::k_hop_apsd`]) are computed on
//!    the noisy graph as post-processing.
//!
//! [`harness`] holds instance generation, the text codecs and the
//! experiment sweep used by the command-line tool.

pub mod graph;
pub mod harness;
pub mod mechanism;
pub mod par;
pub mod shortcut;
pub mod treedec;

pub use graph::{DistanceMatrix, Edge, GraphError, Path, WeightMap, WeightedGraph};
pub use mechanism::{
    private_apsd, LaplaceSampler, MechanismError, MechanismOutput, NoiseMode, PrivacyParams,
};
pub use par::Execution;
pub use shortcut::{CallTrace, IntermediateGraph, SensitivityAccount, ShortcutList};
pub use treedec::{TreeDecomposition, ValidationReport};
