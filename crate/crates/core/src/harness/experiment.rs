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

//! Seeded sweeps comparing the private release against the baselines.
//!
//! Every trial draws its instance and its noise from seeds derived from the
//! configuration seed and the trial's coordinates, never from scheduling, so
//! a report is a pure function of its configuration.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;

use super::generate::{generate_partial_ktree, GeneratorParams};
use super::HarnessError;
use crate::graph::{sssp_apsd, DistanceMatrix};
use crate::mechanism::{
    input_perturbation_apsd, output_perturbation_apsd, output_perturbation_scale,
    theoretical_error_bound, HopBudget, NoiseMode, PreparedMechanism, PrivacyParams, DEFAULT_C,
};
use crate::par::{self, Execution};
use crate::shortcut::StartSetRule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MechanismKind {
    Main,
    InputPerturbation,
    OutputPerturbation,
}

impl MechanismKind {
    pub fn name(self) -> &'static str {
        match self {
            MechanismKind::Main => "main",
            MechanismKind::InputPerturbation => "input-perturbation",
            MechanismKind::OutputPerturbation => "output-perturbation",
        }
    }

    fn stream(self) -> u64 {
        match self {
            MechanismKind::Main => 1,
            MechanismKind::InputPerturbation => 2,
            MechanismKind::OutputPerturbation => 3,
        }
    }
}

impl FromStr for MechanismKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "main" => Ok(MechanismKind::Main),
            "input" | "input-perturbation" => Ok(MechanismKind::InputPerturbation),
            "output" | "output-perturbation" => Ok(MechanismKind::OutputPerturbation),
            other => Err(format!("unknown mechanism '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub sizes: Vec<usize>,
    pub k: usize,
    pub trials: usize,
    pub epsilon: f64,
    pub gamma: f64,
    pub mechanisms: Vec<MechanismKind>,
    pub seed: u64,
    pub noise_mode: NoiseMode,
    pub c: f64,
    pub hop_budget: HopBudget,
    pub clamp_negative: bool,
    pub edge_keep_prob: f64,
    pub weight_range: (f64, f64),
    pub integer_weights: bool,
    /// Wall-clock times make the CSV non-reproducible; off leaves the
    /// column empty.
    pub record_timing: bool,
    pub csv_path: Option<PathBuf>,
    pub json_path: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            sizes: vec![64, 128, 256],
            k: 2,
            trials: 5,
            epsilon: 1.0,
            gamma: 0.1,
            mechanisms: vec![MechanismKind::Main, MechanismKind::InputPerturbation],
            seed: 0,
            noise_mode: NoiseMode::ExactSensitivity,
            c: DEFAULT_C,
            hop_budget: HopBudget::Auto,
            clamp_negative: false,
            edge_keep_prob: 1.0,
            weight_range: (0.0, 10.0),
            integer_weights: false,
            record_timing: false,
            csv_path: None,
            json_path: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::InvalidConfig(m));
        if self.trials < 1 {
            return bad("trials must be at least 1".into());
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad(format!("gamma must lie in (0, 1), got {}", self.gamma));
        }
        if self.sizes.is_empty() || self.mechanisms.is_empty() {
            return bad("need at least one size and one mechanism".into());
        }
        if let Some(&n) = self.sizes.iter().find(|&&n| n <= self.k) {
            return bad(format!("size {n} must exceed k = {}", self.k));
        }
        self.privacy_params().validate()?;
        Ok(())
    }

    pub fn privacy_params(&self) -> PrivacyParams {
        PrivacyParams {
            epsilon: self.epsilon,
            noise_mode: self.noise_mode,
            c: self.c,
            hop_budget: self.hop_budget,
            clamp_negative: self.clamp_negative,
        }
    }
}

/// One CSV row: a single (mechanism, n, trial) measurement.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRow {
    pub mechanism: MechanismKind,
    pub n: usize,
    pub trial: usize,
    pub width: usize,
    pub status: String,
    pub max_abs_error: Option<f64>,
    pub mean_abs_error: Option<f64>,
    pub runtime_ms: Option<f64>,
    pub noise_scale: Option<f64>,
    pub delta: Option<f64>,
    pub depth: Option<usize>,
    pub hop_budget: Option<usize>,
    pub error_bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellSummary {
    pub mechanism: MechanismKind,
    pub n: usize,
    pub trials_ok: usize,
    pub trials_failed: usize,
    pub complete: bool,
    pub median_max_abs_error: Option<f64>,
    pub median_mean_abs_error: Option<f64>,
    pub median_noise_scale: Option<f64>,
    /// Fraction of trials whose max error exceeds the high-probability bound
    /// (main mechanism only).
    pub exceedance_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSummary {
    pub config: ExperimentConfig,
    pub toggles: BTreeMap<String, String>,
    pub cells: Vec<CellSummary>,
    /// Least-squares slope of log₂(median max error) against log₂ n.
    pub slopes: BTreeMap<String, Option<f64>>,
    pub incomplete_cells: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub rows: Vec<TrialRow>,
    pub summary: ExperimentSummary,
}

impl ExperimentReport {
    pub fn to_csv(&self) -> Result<String, HarnessError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            w.serialize(row)?;
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn summary_json(&self) -> Result<String, HarnessError> {
        Ok(serde_json::to_string_pretty(&self.summary)?)
    }

    /// Writes the CSV and JSON files named in the configuration, if any.
    pub fn write_outputs(&self) -> Result<(), HarnessError> {
        if let Some(p) = &self.summary.config.csv_path {
            std::fs::write(p, self.to_csv()?)?;
        }
        if let Some(p) = &self.summary.config.json_path {
            std::fs::write(p, self.summary_json()? + "\n")?;
        }
        Ok(())
    }

    pub fn cell(&self, mechanism: MechanismKind, n: usize) -> Option<&CellSummary> {
        self.summary
            .cells
            .iter()
            .find(|c| c.mechanism == mechanism && c.n == n)
    }

    pub fn slope(&self, mechanism: MechanismKind) -> Option<f64> {
        self.summary.slopes.get(mechanism.name()).copied().flatten()
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Seed for a sub-stream identified by `tags`.
pub fn derive_seed(base: u64, tags: &[u64]) -> u64 {
    tags.iter()
        .fold(splitmix64(base), |acc, &t| splitmix64(acc ^ splitmix64(t)))
}

struct Measurement {
    distances: DistanceMatrix,
    noise_scale: f64,
    delta: f64,
    depth: Option<usize>,
    hop_budget: usize,
}

fn measure(
    kind: MechanismKind,
    bundle: &super::InstanceBundle,
    params: &PrivacyParams,
    seed: u64,
) -> Result<Measurement, HarnessError> {
    let g = &bundle.graph;
    let n = g.n();
    Ok(match kind {
        MechanismKind::Main => {
            let prepared = PreparedMechanism::prepare(g, &bundle.decomposition)?;
            let out = prepared.release(params, seed)?;
            Measurement {
                distances: out.distances,
                noise_scale: out.noise_scale,
                delta: prepared.account().delta,
                depth: Some(out.depth),
                hop_budget: out.hop_budget,
            }
        }
        MechanismKind::InputPerturbation => Measurement {
            distances: input_perturbation_apsd(g, params.epsilon, seed)?,
            noise_scale: 1.0 / params.epsilon,
            delta: 1.0,
            depth: None,
            hop_budget: n.saturating_sub(1).max(1),
        },
        MechanismKind::OutputPerturbation => Measurement {
            distances: output_perturbation_apsd(g, params.epsilon, seed)?,
            noise_scale: output_perturbation_scale(n, params.epsilon),
            delta: (n * n.saturating_sub(1) / 2) as f64,
            depth: None,
            hop_budget: 0,
        },
    })
}

fn run_cell(config: &ExperimentConfig, n: usize, trial: usize) -> Vec<TrialRow> {
    let params = config.privacy_params();
    let gen = GeneratorParams {
        n,
        k: config.k,
        edge_keep_prob: config.edge_keep_prob,
        weight_range: config.weight_range,
        integer_weights: config.integer_weights,
        seed: derive_seed(config.seed, &[n as u64, trial as u64, 0]),
    };
    let failed = |kind: MechanismKind, width: usize, msg: String| TrialRow {
        mechanism: kind,
        n,
        trial,
        width,
        status: format!("error: {msg}"),
        max_abs_error: None,
        mean_abs_error: None,
        runtime_ms: None,
        noise_scale: None,
        delta: None,
        depth: None,
        hop_budget: None,
        error_bound: None,
    };
    let prepared = generate_partial_ktree(gen).and_then(|b| {
        let exact = sssp_apsd(&b.graph).map_err(crate::mechanism::MechanismError::from)?;
        Ok((b, exact))
    });
    let (bundle, exact) = match prepared {
        Ok(x) => x,
        Err(e) => {
            return config
                .mechanisms
                .iter()
                .map(|&k| failed(k, config.k, e.to_string()))
                .collect()
        }
    };
    let width = bundle.decomposition.width();

    config
        .mechanisms
        .iter()
        .map(|&kind| {
            let seed = derive_seed(config.seed, &[n as u64, trial as u64, kind.stream()]);
            let started = Instant::now();
            let result = measure(kind, &bundle, &params, seed);
            let elapsed = started.elapsed().as_secs_f64() * 1e3;
            match result {
                Ok(m) => {
                    let error_bound = (kind == MechanismKind::Main
                        && config.noise_mode != NoiseMode::Disabled)
                        .then(|| {
                            theoretical_error_bound(n, width, config.c, config.epsilon, config.gamma)
                                .ok()
                        })
                        .flatten();
                    TrialRow {
                        mechanism: kind,
                        n,
                        trial,
                        width,
                        status: "ok".into(),
                        max_abs_error: Some(m.distances.max_abs_diff(&exact)),
                        mean_abs_error: Some(m.distances.mean_abs_diff(&exact)),
                        runtime_ms: config.record_timing.then_some(elapsed),
                        noise_scale: Some(m.noise_scale),
                        delta: Some(m.delta),
                        depth: m.depth,
                        hop_budget: Some(m.hop_budget),
                        error_bound,
                    }
                }
                Err(e) => failed(kind, width, e.to_string()),
            }
        })
        .collect()
}

fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let m = values.len() / 2;
    Some(if values.len() % 2 == 1 {
        values[m]
    } else {
        0.5 * (values[m - 1] + values[m])
    })
}

/// Least-squares slope of `ys` against `xs`.
fn slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Log-log slope of medians; cells with non-positive medians are skipped.
pub fn log_log_slope(points: &[(usize, f64)]) -> Option<f64> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = points
        .iter()
        .filter(|(_, y)| *y > 0.0 && y.is_finite())
        .map(|&(n, y)| ((n as f64).log2(), y.log2()))
        .unzip();
    slope(&xs, &ys)
}

fn toggles(config: &ExperimentConfig) -> BTreeMap<String, String> {
    let mut t = BTreeMap::new();
    let mut put = |k: &str, v: String| {
        t.insert(k.to_string(), v);
    };
    put("noise_mode", format!("{:?}", config.noise_mode));
    put("c", config.c.to_string());
    put(
        "hop_budget",
        match config.hop_budget {
            HopBudget::Auto => "auto: 2*ceil(max(2, log_1.5 n))".into(),
            HopBudget::Fixed(h) => h.to_string(),
        },
    );
    put("clamp_negative", config.clamp_negative.to_string());
    put("start_set_rule", format!("{:?}", StartSetRule::default()));
    put("base_case", "|V| <= 6(p+1), unordered pairs u<v".into());
    put("separator_tie_break", "smallest qualifying bag index".into());
    put("paper_noise_scale", "c*(p+1)^2*log2(n)^2/epsilon".into());
    put("error_bound", "2*c^2*log2(n/gamma)*p^2*log2(n)^3/epsilon".into());
    put("log_base", "2 for bounds, 1.5 for hop budgets and depth".into());
    put("diagonal", "released as exact zeros".into());
    put("ground_truth", "Dijkstra from every vertex".into());
    t
}

/// Runs every (mechanism, size, trial) cell and aggregates the results.
/// Failing trials are recorded, not propagated.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport, HarnessError> {
    config.validate()?;
    let cells: Vec<(usize, usize)> = config
        .sizes
        .iter()
        .flat_map(|&n| (0..config.trials).map(move |t| (n, t)))
        .collect();
    let per_cell = par::map_slice(Execution::default(), &cells, |&(n, t)| run_cell(config, n, t));

    let mut rows = Vec::with_capacity(cells.len() * config.mechanisms.len());
    for (mi, _) in config.mechanisms.iter().enumerate() {
        for cell_rows in &per_cell {
            rows.push(cell_rows[mi].clone());
        }
    }

    let mut summaries = Vec::new();
    let mut slopes = BTreeMap::new();
    let mut incomplete = Vec::new();
    for &kind in &config.mechanisms {
        let mut points = Vec::new();
        for &n in &config.sizes {
            let cell: Vec<&TrialRow> = rows
                .iter()
                .filter(|r| r.mechanism == kind && r.n == n)
                .collect();
            let ok: Vec<&&TrialRow> = cell.iter().filter(|r| r.status == "ok").collect();
            let failed = cell.len() - ok.len();
            let mut max_errs: Vec<f64> = ok.iter().filter_map(|r| r.max_abs_error).collect();
            let mut mean_errs: Vec<f64> = ok.iter().filter_map(|r| r.mean_abs_error).collect();
            let mut scales: Vec<f64> = ok.iter().filter_map(|r| r.noise_scale).collect();
            let exceed: Vec<bool> = ok
                .iter()
                .filter_map(|r| Some(r.max_abs_error? > r.error_bound?))
                .collect();
            let exceedance_rate = (!exceed.is_empty())
                .then(|| exceed.iter().filter(|&&x| x).count() as f64 / exceed.len() as f64);
            let med = median(&mut max_errs);
            if let Some(m) = med {
                points.push((n, m));
            }
            if failed > 0 {
                incomplete.push(format!("{} n={n}: {failed} failed", kind.name()));
            }
            summaries.push(CellSummary {
                mechanism: kind,
                n,
                trials_ok: ok.len(),
                trials_failed: failed,
                complete: failed == 0,
                median_max_abs_error: med,
                median_mean_abs_error: median(&mut mean_errs),
                median_noise_scale: median(&mut scales),
                exceedance_rate,
            });
        }
        slopes.insert(kind.name().to_string(), log_log_slope(&points));
    }

    Ok(ExperimentReport {
        rows,
        summary: ExperimentSummary {
            config: config.clone(),
            toggles: toggles(config),
            cells: summaries,
            slopes,
            incomplete_cells: incomplete,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_exact_power_law() {
        let pts: Vec<(usize, f64)> = [16usize, 32, 64, 128]
            .iter()
            .map(|&n| (n, 3.0 * (n as f64).powf(0.75)))
            .collect();
        assert!((log_log_slope(&pts).unwrap() - 0.75).abs() < 1e-12);
        assert_eq!(log_log_slope(&pts[..1]), None);
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(&mut []), None);
    }

    #[test]
    fn seeds_depend_on_every_tag() {
        let a = derive_seed(1, &[16, 0, 1]);
        assert_ne!(a, derive_seed(1, &[16, 1, 1]));
        assert_ne!(a, derive_seed(1, &[16, 0, 2]));
        assert_ne!(a, derive_seed(2, &[16, 0, 1]));
        assert_eq!(a, derive_seed(1, &[16, 0, 1]));
    }

    #[test]
    fn zero_noise_cell_has_no_error() {
        let config = ExperimentConfig {
            sizes: vec![16],
            trials: 1,
            mechanisms: vec![MechanismKind::Main],
            noise_mode: NoiseMode::Disabled,
            ..Default::default()
        };
        let report = run_experiment(&config).unwrap();
        assert_eq!(report.rows.len(), 1);
        assert!(report.rows[0].max_abs_error.unwrap() < 1e-9);
    }

    #[test]
    fn rejects_invalid_config() {
        let mut c = ExperimentConfig {
            trials: 0,
            ..Default::default()
        };
        assert!(run_experiment(&c).is_err());
        c.trials = 1;
        c.gamma = 1.0;
        assert!(run_experiment(&c).is_err());
        c.gamma = 0.1;
        c.sizes = vec![2];
        assert!(run_experiment(&c).is_err());
    }

    #[test]
    fn mechanism_names_parse() {
        for k in [
            MechanismKind::Main,
            MechanismKind::InputPerturbation,
            MechanismKind::OutputPerturbation,
        ] {
            assert_eq!(k.name().parse::<MechanismKind>().unwrap(), k);
        }
        assert_eq!("input".parse::<MechanismKind>().unwrap(), MechanismKind::InputPerturbation);
        assert!("bogus".parse::<MechanismKind>().is_err());
    }
}
