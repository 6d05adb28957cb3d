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

//! The ε-differentially private release and the two baselines it is
//! compared against.
//!
//! Noise is drawn through [`LaplaceSampler`], a counter-indexed stream: the
//! draw for an edge `(u, v)` sits at a fixed index derived from the pair, so
//! adding or removing other edges never shifts it.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::graph::{exact_apsd, k_hop_apsd, DistanceMatrix, Edge, GraphError, WeightedGraph};
use crate::shortcut::{
    construct_graph, hop_budgets, sensitivity_bound, CallTrace, IntermediateGraph,
    SensitivityAccount, ShortcutError,
};
use crate::treedec::TreeDecomposition;

/// Default constant for the formula-based noise scale; must exceed
/// `2 / log₂ 1.5 ≈ 3.42`.
pub const DEFAULT_C: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MechanismError {
    #[error("privacy parameter epsilon must be positive and finite, got {0}")]
    InvalidEpsilon(f64),
    #[error("Laplace scale must be positive and finite, got {0}")]
    InvalidScale(f64),
    #[error("constant c must exceed 2/log2(1.5) ≈ 3.419 in paper-formula mode, got {0}")]
    InvalidConstant(f64),
    #[error("gamma must lie in (0, 1), got {0}")]
    InvalidGamma(f64),
    #[error("hop budget must be at least 1")]
    InvalidHopBudget,
    #[error("{0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Shortcut(#[from] ShortcutError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseMode {
    /// `b = Δ / ε` with `Δ` from the per-instance sensitivity account.
    #[default]
    ExactSensitivity,
    /// `b = c·(p+1)²·log₂²(n) / ε`.
    PaperFormula,
    /// No noise; releases the hop-limited distances of `G'` as is.
    Disabled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum HopBudget {
    /// `2·⌈max(2, log_1.5 n)⌉`.
    #[default]
    Auto,
    Fixed(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrivacyParams {
    pub epsilon: f64,
    pub noise_mode: NoiseMode,
    pub c: f64,
    pub hop_budget: HopBudget,
    /// Clamp noisy weights at zero before post-processing. Biases the
    /// output; for experiments only.
    pub clamp_negative: bool,
}

impl PrivacyParams {
    pub fn new(epsilon: f64) -> Self {
        PrivacyParams {
            epsilon,
            noise_mode: NoiseMode::default(),
            c: DEFAULT_C,
            hop_budget: HopBudget::Auto,
            clamp_negative: false,
        }
    }

    pub fn with_mode(mut self, mode: NoiseMode) -> Self {
        self.noise_mode = mode;
        self
    }

    pub fn validate(&self) -> Result<(), MechanismError> {
        if self.noise_mode != NoiseMode::Disabled
            && !(self.epsilon > 0.0 && self.epsilon.is_finite())
        {
            return Err(MechanismError::InvalidEpsilon(self.epsilon));
        }
        if self.noise_mode == NoiseMode::PaperFormula
            && !(self.c > 2.0 / 1.5f64.log2() && self.c.is_finite())
        {
            return Err(MechanismError::InvalidConstant(self.c));
        }
        if self.hop_budget == HopBudget::Fixed(0) {
            return Err(MechanismError::InvalidHopBudget);
        }
        Ok(())
    }

    pub fn resolve_hop_budget(&self, n: usize) -> usize {
        match self.hop_budget {
            HopBudget::Auto => hop_budgets(n).1,
            HopBudget::Fixed(h) => h,
        }
    }
}

/// Inverse-CDF transform of `u ∈ (-1/2, 1/2)` into a Laplace(0, b) draw.
pub fn laplace_from_uniform(u: f64, b: f64) -> f64 {
    -b * u.signum() * (1.0 - 2.0 * u.abs()).ln()
}

/// Deterministic, random-access stream of uniforms and Laplace draws.
#[derive(Debug, Clone)]
pub struct LaplaceSampler {
    seed: u64,
    counter: u64,
    rng: ChaCha8Rng,
}

impl LaplaceSampler {
    pub fn new(seed: u64) -> Self {
        LaplaceSampler {
            seed,
            counter: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn counter(&self) -> u64 {
        self.counter
    }

    /// Uniform in the open interval `(-1/2, 1/2)` at stream position `index`.
    pub fn uniform_at(&mut self, index: u64) -> f64 {
        // two 32-bit words per draw
        self.rng.set_word_pos(u128::from(index) * 2);
        let bits = self.rng.next_u64() >> 11;
        (bits as f64 + 0.5) / (1u64 << 53) as f64 - 0.5
    }

    pub fn draw_at(&mut self, index: u64, b: f64) -> f64 {
        if b == 0.0 {
            return 0.0;
        }
        laplace_from_uniform(self.uniform_at(index), b)
    }

    pub fn next_uniform(&mut self) -> f64 {
        let u = self.uniform_at(self.counter);
        self.counter += 1;
        u
    }
}

/// Stream index reserved for the pair `(u, v)`.
pub fn pair_index(e: Edge) -> u64 {
    ((e.u as u64) << 32) | e.v as u64
}

/// Next Laplace(0, b) draw from `sampler`.
pub fn laplace_sample(b: f64, sampler: &mut LaplaceSampler) -> Result<f64, MechanismError> {
    if !(b > 0.0 && b.is_finite()) {
        return Err(MechanismError::InvalidScale(b));
    }
    Ok(laplace_from_uniform(sampler.next_uniform(), b))
}

/// Noisy distances plus the metadata needed to audit the release.
#[derive(Debug, Clone, PartialEq)]
pub struct MechanismOutput {
    pub distances: DistanceMatrix,
    pub noise_scale: f64,
    pub hop_budget: usize,
    /// Sensitivity the noise was calibrated to (`b·ε`).
    pub delta_used: f64,
    pub seed: u64,
    pub depth: usize,
    pub shortcut_count: usize,
    pub intermediate_edges: usize,
}

/// Stage one of the release, reusable across noise draws.
#[derive(Debug, Clone)]
pub struct PreparedMechanism {
    n: usize,
    width: usize,
    intermediate: IntermediateGraph,
    trace: CallTrace,
    account: SensitivityAccount,
}

impl PreparedMechanism {
    pub fn prepare(g: &WeightedGraph, t: &TreeDecomposition) -> Result<Self, MechanismError> {
        let (intermediate, trace) = construct_graph(g, t, &[])?;
        let account = sensitivity_bound(&trace, g);
        Ok(PreparedMechanism {
            n: g.n(),
            width: t.width(),
            intermediate,
            trace,
            account,
        })
    }

    pub fn intermediate(&self) -> &IntermediateGraph {
        &self.intermediate
    }

    pub fn trace(&self) -> &CallTrace {
        &self.trace
    }

    pub fn account(&self) -> &SensitivityAccount {
        &self.account
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn noise_scale(&self, params: &PrivacyParams) -> f64 {
        match params.noise_mode {
            NoiseMode::Disabled => 0.0,
            NoiseMode::ExactSensitivity => self.account.delta / params.epsilon,
            NoiseMode::PaperFormula => paper_noise_scale(self.n, self.width, params.c, params.epsilon),
        }
    }

    /// `G'` with an independent Laplace(b) draw added to every edge.
    pub fn noisy_graph(&self, b: f64, seed: u64, clamp: bool) -> Result<WeightedGraph, GraphError> {
        let mut sampler = LaplaceSampler::new(seed);
        self.intermediate.graph.map_weights(|e, w| {
            let noisy = w + sampler.draw_at(pair_index(e), b);
            if clamp {
                noisy.max(0.0)
            } else {
                noisy
            }
        })
    }

    pub fn release(&self, params: &PrivacyParams, seed: u64) -> Result<MechanismOutput, MechanismError> {
        params.validate()?;
        let b = self.noise_scale(params);
        let noisy = self.noisy_graph(b, seed, params.clamp_negative)?;
        let h = params.resolve_hop_budget(self.n);
        let distances = post_process(&noisy, h)?;
        Ok(MechanismOutput {
            distances,
            noise_scale: b,
            hop_budget: h,
            delta_used: if b == 0.0 { 0.0 } else { b * params.epsilon },
            seed,
            depth: self.trace.levels(),
            shortcut_count: self.trace.shortcut_count(),
            intermediate_edges: self.intermediate.edge_count(),
        })
    }
}

/// Post-processing sees only the noisy graph and the hop budget.
fn post_process(noisy: &WeightedGraph, hops: usize) -> Result<DistanceMatrix, GraphError> {
    k_hop_apsd(noisy, hops)
}

/// `c·(p+1)²·log₂²(n) / ε`.
pub fn paper_noise_scale(n: usize, width: usize, c: f64, epsilon: f64) -> f64 {
    let log = (n.max(1) as f64).log2();
    c * ((width + 1) as f64).powi(2) * log * log / epsilon
}

/// Full pipeline: shortcut graph, Laplace noise, hop-limited distances.
pub fn private_apsd(
    g: &WeightedGraph,
    t: &TreeDecomposition,
    params: &PrivacyParams,
    seed: u64,
) -> Result<MechanismOutput, MechanismError> {
    params.validate()?;
    PreparedMechanism::prepare(g, t)?.release(params, seed)
}

fn check_epsilon(epsilon: f64) -> Result<(), MechanismError> {
    if epsilon > 0.0 && epsilon.is_finite() {
        Ok(())
    } else {
        Err(MechanismError::InvalidEpsilon(epsilon))
    }
}

/// Baseline: Laplace(1/ε) on every input edge, then `(n-1)`-hop distances
/// on the noisy graph (negative weights included).
pub fn input_perturbation_apsd(
    g: &WeightedGraph,
    epsilon: f64,
    seed: u64,
) -> Result<DistanceMatrix, MechanismError> {
    check_epsilon(epsilon)?;
    g.ensure_nonnegative()?;
    let b = 1.0 / epsilon;
    let mut sampler = LaplaceSampler::new(seed);
    let noisy = g.map_weights(|e, w| w + sampler.draw_at(pair_index(e), b))?;
    Ok(k_hop_apsd(&noisy, g.n().saturating_sub(1).max(1))?)
}

/// Laplace scale used by [`output_perturbation_apsd`]: `n(n-1) / (2ε)`.
pub fn output_perturbation_scale(n: usize, epsilon: f64) -> f64 {
    (n * n.saturating_sub(1)) as f64 / (2.0 * epsilon)
}

/// Baseline: exact distances with independent Laplace noise on each of the
/// `n(n-1)/2` released pairs.
pub fn output_perturbation_apsd(
    g: &WeightedGraph,
    epsilon: f64,
    seed: u64,
) -> Result<DistanceMatrix, MechanismError> {
    check_epsilon(epsilon)?;
    let mut d = exact_apsd(g)?;
    let b = output_perturbation_scale(g.n(), epsilon);
    let mut sampler = LaplaceSampler::new(seed);
    for u in 0..g.n() {
        for v in (u + 1)..g.n() {
            let x = d.get(u, v) + sampler.draw_at(pair_index(Edge::new(u, v)), b);
            d.set_symmetric(u, v, x);
        }
    }
    Ok(d)
}

/// High-probability error bound `2c²·log₂(n/γ)·p²·log₂³(n)/ε`. Reporting only.
pub fn theoretical_error_bound(
    n: usize,
    width: usize,
    c: f64,
    epsilon: f64,
    gamma: f64,
) -> Result<f64, MechanismError> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(MechanismError::InvalidGamma(gamma));
    }
    check_epsilon(epsilon)?;
    if n == 0 || width == 0 || c.is_nan() || c <= 0.0 {
        return Err(MechanismError::InvalidArgument(
            "n, p and c must be positive".into(),
        ));
    }
    let n = n as f64;
    let p = width as f64;
    Ok(2.0 * c * c * (n / gamma).log2() * p * p * n.log2().powi(3) / epsilon)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p3() -> (WeightedGraph, TreeDecomposition) {
        let g = WeightedGraph::from_edges(3, [(0, 1, 1.0), (1, 2, 2.0)]).unwrap();
        let t = TreeDecomposition::new(vec![vec![0, 1], vec![1, 2]], vec![(0, 1)]);
        (g, t)
    }

    #[test]
    fn inverse_cdf_values() {
        assert_eq!(laplace_from_uniform(0.0, 1.0), 0.0);
        assert!((laplace_from_uniform(0.25, 1.0) - 2f64.ln()).abs() < 1e-15);
        assert!((laplace_from_uniform(-0.25, 3.0) + 3.0 * 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn sampler_rejects_bad_scale() {
        let mut s = LaplaceSampler::new(1);
        assert!(laplace_sample(0.0, &mut s).is_err());
        assert!(laplace_sample(-2.0, &mut s).is_err());
        assert_eq!(s.counter(), 0);
        laplace_sample(1.0, &mut s).unwrap();
        assert_eq!(s.counter(), 1);
    }

    #[test]
    fn sampler_is_random_access() {
        let mut a = LaplaceSampler::new(9);
        let seq: Vec<f64> = (0..5).map(|_| a.next_uniform()).collect();
        let mut b = LaplaceSampler::new(9);
        assert_eq!(b.uniform_at(3), seq[3]);
        assert_eq!(b.uniform_at(0), seq[0]);
        for u in seq {
            assert!(u > -0.5 && u < 0.5);
        }
        assert_ne!(LaplaceSampler::new(10).uniform_at(0), b.uniform_at(0));
    }

    #[test]
    fn params_validation() {
        assert!(PrivacyParams::new(0.0).validate().is_err());
        assert!(PrivacyParams::new(0.0)
            .with_mode(NoiseMode::Disabled)
            .validate()
            .is_ok());
        let mut p = PrivacyParams::new(1.0).with_mode(NoiseMode::PaperFormula);
        p.c = 3.0;
        assert_eq!(p.validate(), Err(MechanismError::InvalidConstant(3.0)));
        p.c = 5.0;
        assert!(p.validate().is_ok());
    }

    #[test]
    fn disabled_noise_recovers_exact() {
        let (g, t) = p3();
        let params = PrivacyParams::new(1.0).with_mode(NoiseMode::Disabled);
        let out = private_apsd(&g, &t, &params, 3).unwrap();
        assert_eq!(out.noise_scale, 0.0);
        assert!(out.distances.approx_eq(&exact_apsd(&g).unwrap(), 1e-9));
    }

    #[test]
    fn noise_scale_matches_mode() {
        let (g, t) = p3();
        let prepared = PreparedMechanism::prepare(&g, &t).unwrap();
        let exact = PrivacyParams::new(2.0);
        assert_eq!(prepared.noise_scale(&exact) * 2.0, prepared.account().delta);
        let paper = PrivacyParams::new(2.0).with_mode(NoiseMode::PaperFormula);
        let expected = 5.0 * 4.0 * 3f64.log2().powi(2);
        assert!((prepared.noise_scale(&paper) * 2.0 - expected).abs() < 1e-12);
    }

    #[test]
    fn release_is_deterministic_and_symmetric() {
        let (g, t) = p3();
        let params = PrivacyParams::new(0.5);
        let a = private_apsd(&g, &t, &params, 42).unwrap();
        let b = private_apsd(&g, &t, &params, 42).unwrap();
        assert_eq!(a, b);
        assert!(a.distances.is_symmetric());
        assert_eq!(a.distances.get(1, 1), 0.0);
        let c = private_apsd(&g, &t, &params, 43).unwrap();
        assert_ne!(a.distances, c.distances);
    }

    #[test]
    fn clamping_keeps_weights_nonnegative() {
        let (g, t) = p3();
        let prepared = PreparedMechanism::prepare(&g, &t).unwrap();
        let noisy = prepared.noisy_graph(100.0, 5, true).unwrap();
        assert!(noisy.min_weight().unwrap() >= 0.0);
    }

    #[test]
    fn output_perturbation_single_edge_scale() {
        assert_eq!(output_perturbation_scale(2, 1.0), 1.0);
        let g = WeightedGraph::from_edges(2, [(0, 1, 3.0)]).unwrap();
        let d = output_perturbation_apsd(&g, 1.0, 8).unwrap();
        let noise = LaplaceSampler::new(8).draw_at(pair_index(Edge::new(0, 1)), 1.0);
        assert_eq!(d.get(0, 1) - noise, 3.0);
        assert_eq!(d.get(1, 0), d.get(0, 1));
    }

    #[test]
    fn baselines_reject_bad_epsilon() {
        let (g, _) = p3();
        assert!(input_perturbation_apsd(&g, 0.0, 1).is_err());
        assert!(output_perturbation_apsd(&g, -1.0, 1).is_err());
    }

    #[test]
    fn error_bound_formula() {
        let b = theoretical_error_bound(1024, 2, 5.0, 1.0, 0.1).unwrap();
        let expected = 200_000.0 * 10240f64.log2();
        assert!((b - expected).abs() < 1e-6 * expected);
        assert!((b - 2.66e6).abs() < 0.01e6);
        let half = theoretical_error_bound(1024, 2, 5.0, 2.0, 0.1).unwrap();
        assert!((b / half - 2.0).abs() < 1e-12);
        assert!(theoretical_error_bound(1024, 2, 5.0, 1.0, 1.0).is_err());
        assert!(theoretical_error_bound(1024, 2, 5.0, 1.0, 0.0).is_err());
        let near_one = theoretical_error_bound(1024, 2, 5.0, 1.0, 1.0 - 1e-12).unwrap();
        let limit = 2.0 * 25.0 * 10.0 * 4.0 * 1000.0;
        assert!((near_one - limit).abs() < 1e-6 * limit);
    }
}
