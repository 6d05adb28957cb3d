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

//! Instance generation, text codecs and the experiment sweep.

mod codec;
mod experiment;
mod generate;

pub use codec::{parse_graph, parse_td, serialize_graph, serialize_td, CodecError, TdFile};
pub use experiment::{
    derive_seed, log_log_slope, run_experiment, CellSummary, ExperimentConfig, ExperimentReport, ExperimentSummary,
    MechanismKind, TrialRow,
};
pub use generate::{generate_partial_ktree, GeneratorParams, InstanceBundle, LabelMap, Provenance};

use thiserror::Error;

use crate::mechanism::MechanismError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid generator parameters: {0}")]
    InvalidGenerator(String),
    #[error(transparent)]
    Mechanism(#[from] MechanismError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
