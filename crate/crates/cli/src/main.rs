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

//! `dp-apsd` command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 malformed input, 3 invalid
//! decomposition.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use dp_apsd::graph::{exact_apsd, DistanceMatrix, WeightedGraph};
use dp_apsd::harness::{
    generate_partial_ktree, parse_graph, parse_td, run_experiment, serialize_graph, serialize_td,
    ExperimentConfig, GeneratorParams, MechanismKind,
};
use dp_apsd::mechanism::{
    input_perturbation_apsd, output_perturbation_apsd, output_perturbation_scale,
    theoretical_error_bound, HopBudget, NoiseMode, PreparedMechanism, PrivacyParams,
};
use dp_apsd::treedec::{heuristic_decomposition, validate_decomposition, TreeDecomposition};

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(m: impl ToString) -> Self {
        Failure { code: 1, message: m.to_string() }
    }
    fn input(m: impl ToString) -> Self {
        Failure { code: 2, message: m.to_string() }
    }
    fn decomposition(m: impl ToString) -> Self {
        Failure { code: 3, message: m.to_string() }
    }
}

type CliResult<T> = Result<T, Failure>;

#[derive(Parser, Debug)]
#[command(name = "dp-apsd", version, about = "Differentially private all-pairs shortest distances")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a random partial k-tree and its decomposition.
    Gen(GenArgs),
    /// Check a decomposition against a graph.
    Validate(InputArgs),
    /// Exact shortest distances.
    Exact(ExactArgs),
    /// Private release via the shortcut graph.
    Private(PrivateArgs),
    /// Input- or output-perturbation baseline.
    Baseline(BaselineArgs),
    /// Seeded experiment sweep.
    Bench(BenchArgs),
    /// Print the sensitivity and per-edge contributions.
    Sensitivity(SensitivityArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Csv,
    Json,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum NoiseArg {
    ExactSensitivity,
    Paper,
    Disabled,
}

impl From<NoiseArg> for NoiseMode {
    fn from(n: NoiseArg) -> Self {
        match n {
            NoiseArg::ExactSensitivity => NoiseMode::ExactSensitivity,
            NoiseArg::Paper => NoiseMode::PaperFormula,
            NoiseArg::Disabled => NoiseMode::Disabled,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum BaselineKind {
    Input,
    Output,
}

fn parse_hop_budget(s: &str) -> Result<HopBudget, String> {
    if s == "auto" {
        return Ok(HopBudget::Auto);
    }
    match s.parse::<usize>() {
        Ok(h) if h >= 1 => Ok(HopBudget::Fixed(h)),
        _ => Err(format!("expected 'auto' or a positive integer, got '{s}'")),
    }
}

#[derive(Args, Debug)]
struct InputArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Decomposition file; a min-degree heuristic is used when absent.
    #[arg(long)]
    td: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct OutputArgs {
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args, Debug)]
struct PrivacyArgs {
    #[arg(long, default_value_t = 1.0)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.1)]
    gamma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "exact-sensitivity")]
    noise_mode: NoiseArg,
    #[arg(long, default_value_t = dp_apsd::mechanism::DEFAULT_C)]
    c: f64,
    #[arg(long, default_value = "auto", value_parser = parse_hop_budget)]
    hop_budget: HopBudget,
    /// Clamp noisy weights at zero (biased; experiments only).
    #[arg(long)]
    clamp: bool,
}

impl PrivacyArgs {
    fn params(&self) -> PrivacyParams {
        PrivacyParams {
            epsilon: self.epsilon,
            noise_mode: self.noise_mode.into(),
            c: self.c,
            hop_budget: self.hop_budget,
            clamp_negative: self.clamp,
        }
    }
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long, default_value_t = 1.0)]
    keep: f64,
    #[arg(long, default_value_t = 0.0)]
    min_weight: f64,
    #[arg(long, default_value_t = 10.0)]
    max_weight: f64,
    #[arg(long)]
    integer_weights: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Graph output path (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Decomposition output path.
    #[arg(long)]
    td: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ExactArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct PrivateArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    privacy: PrivacyArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct BaselineArgs {
    #[arg(long, value_enum)]
    kind: BaselineKind,
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    privacy: PrivacyArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "64,128,256")]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long, default_value_t = 5)]
    trials: usize,
    #[arg(long, value_delimiter = ',', default_value = "main,input")]
    mechanisms: Vec<String>,
    #[arg(long, default_value_t = 1.0)]
    keep: f64,
    #[arg(long)]
    integer_weights: bool,
    /// Record wall-clock runtimes (makes the CSV non-reproducible).
    #[arg(long)]
    timing: bool,
    #[command(flatten)]
    privacy: PrivacyArgs,
    /// Per-trial CSV path; the JSON summary goes to `--json` or stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args, Debug)]
struct SensitivityArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    output: OutputArgs,
}

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))
}

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| Failure::usage(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_graph(path: &Path) -> CliResult<WeightedGraph> {
    parse_graph(&read(path)?).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn load_instance(args: &InputArgs) -> CliResult<(WeightedGraph, TreeDecomposition)> {
    let g = load_graph(&args.graph)?;
    let t = match &args.td {
        Some(path) => {
            let file = parse_td(&read(path)?)
                .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
            if file.vertex_count != g.n() {
                return Err(Failure::decomposition(format!(
                    "decomposition covers {} vertices but the graph has {}",
                    file.vertex_count,
                    g.n()
                )));
            }
            file.decomposition
        }
        None => heuristic_decomposition(&g),
    };
    let report = validate_decomposition(&g, &t);
    if !report.is_ok() {
        return Err(Failure::decomposition(format!("invalid decomposition (0-based vertex ids): {report}")));
    }
    Ok((g, t))
}

fn finite(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

fn render_matrix(d: &DistanceMatrix, format: Format, meta: Value) -> String {
    let n = d.n();
    match format {
        Format::Csv => {
            let mut s = String::from("u,v,distance\n");
            for u in 0..n {
                for v in (u + 1)..n {
                    let x = d.get(u, v);
                    let cell = if x.is_finite() { format!("{x:?}") } else { "inf".into() };
                    writeln!(s, "{},{},{}", u + 1, v + 1, cell).unwrap();
                }
            }
            s
        }
        Format::Json => {
            let rows: Vec<Vec<Value>> = (0..n)
                .map(|u| d.row(u).iter().map(|&x| finite(x)).collect())
                .collect();
            let mut obj = meta;
            obj["n"] = json!(n);
            obj["distances"] = json!(rows);
            serde_json::to_string_pretty(&obj).unwrap() + "\n"
        }
    }
}

fn mechanism_failure(e: impl std::fmt::Display) -> Failure {
    Failure::usage(e)
}

fn cmd_gen(a: GenArgs) -> CliResult<()> {
    let params = GeneratorParams {
        n: a.n,
        k: a.k,
        edge_keep_prob: a.keep,
        weight_range: (a.min_weight, a.max_weight),
        integer_weights: a.integer_weights,
        seed: a.seed,
    };
    let bundle = generate_partial_ktree(params).map_err(Failure::usage)?;
    emit(a.out.as_deref(), &serialize_graph(&bundle.graph))?;
    if let Some(td) = &a.td {
        emit(Some(td), &serialize_td(&bundle.decomposition, a.n))?;
    }
    Ok(())
}

fn cmd_validate(a: InputArgs) -> CliResult<()> {
    let (g, t) = load_instance(&a)?;
    println!(
        "ok: {} vertices, {} edges, {} bags, width {}",
        g.n(),
        g.edge_count(),
        t.len(),
        t.width()
    );
    Ok(())
}

fn cmd_exact(a: ExactArgs) -> CliResult<()> {
    let g = load_graph(&a.input.graph)?;
    let d = exact_apsd(&g).map_err(Failure::input)?;
    let text = render_matrix(&d, a.output.format, json!({ "mechanism": "exact" }));
    emit(a.output.out.as_deref(), &text)
}

fn cmd_private(a: PrivateArgs) -> CliResult<()> {
    let (g, t) = load_instance(&a.input)?;
    let params = a.privacy.params();
    params.validate().map_err(Failure::usage)?;
    let prepared = PreparedMechanism::prepare(&g, &t).map_err(Failure::input)?;
    let out = prepared.release(&params, a.privacy.seed).map_err(mechanism_failure)?;
    let bound = theoretical_error_bound(g.n(), t.width(), params.c, params.epsilon, a.privacy.gamma)
        .ok()
        .map(finite);
    let meta = json!({
        "mechanism": "main",
        "epsilon": params.epsilon,
        "seed": out.seed,
        "noise_mode": params.noise_mode,
        "noise_scale": out.noise_scale,
        "delta": prepared.account().delta,
        "hop_budget": out.hop_budget,
        "depth": out.depth,
        "width": t.width(),
        "shortcuts": out.shortcut_count,
        "intermediate_edges": out.intermediate_edges,
        "error_bound": bound,
    });
    emit(a.output.out.as_deref(), &render_matrix(&out.distances, a.output.format, meta))
}

fn cmd_baseline(a: BaselineArgs) -> CliResult<()> {
    let g = load_graph(&a.input.graph)?;
    let eps = a.privacy.epsilon;
    let (d, name, b) = match a.kind {
        BaselineKind::Input => (
            input_perturbation_apsd(&g, eps, a.privacy.seed).map_err(mechanism_failure)?,
            "input-perturbation",
            1.0 / eps,
        ),
        BaselineKind::Output => (
            output_perturbation_apsd(&g, eps, a.privacy.seed).map_err(mechanism_failure)?,
            "output-perturbation",
            output_perturbation_scale(g.n(), eps),
        ),
    };
    let meta = json!({
        "mechanism": name,
        "epsilon": eps,
        "seed": a.privacy.seed,
        "noise_scale": b,
    });
    emit(a.output.out.as_deref(), &render_matrix(&d, a.output.format, meta))
}

fn cmd_bench(a: BenchArgs) -> CliResult<()> {
    let mechanisms = a
        .mechanisms
        .iter()
        .map(|m| m.parse::<MechanismKind>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(Failure::usage)?;
    let p = a.privacy.params();
    let config = ExperimentConfig {
        sizes: a.sizes,
        k: a.k,
        trials: a.trials,
        epsilon: p.epsilon,
        gamma: a.privacy.gamma,
        mechanisms,
        seed: a.privacy.seed,
        noise_mode: p.noise_mode,
        c: p.c,
        hop_budget: p.hop_budget,
        clamp_negative: p.clamp_negative,
        edge_keep_prob: a.keep,
        integer_weights: a.integer_weights,
        record_timing: a.timing,
        csv_path: a.out.clone(),
        json_path: a.json.clone(),
        ..ExperimentConfig::default()
    };
    let report = run_experiment(&config).map_err(Failure::usage)?;
    report.write_outputs().map_err(Failure::usage)?;
    // Whatever was not sent to a file goes to stdout, picked by --format.
    match a.format {
        Format::Csv if a.out.is_none() => print!("{}", report.to_csv().map_err(Failure::usage)?),
        Format::Json if a.json.is_none() => {
            println!("{}", report.summary_json().map_err(Failure::usage)?)
        }
        _ => {}
    }
    Ok(())
}

fn cmd_sensitivity(a: SensitivityArgs) -> CliResult<()> {
    let (g, t) = load_instance(&a.input)?;
    let prepared = PreparedMechanism::prepare(&g, &t).map_err(Failure::input)?;
    let account = prepared.account();
    let text = match a.output.format {
        Format::Csv => {
            let mut s = format!("# delta,{:?}\nu,v,contribution\n", account.delta);
            for (e, c) in &account.per_edge {
                writeln!(s, "{},{},{:?}", e.u + 1, e.v + 1, c).unwrap();
            }
            s
        }
        Format::Json => {
            let per_edge: Vec<Value> = account
                .per_edge
                .iter()
                .map(|(e, c)| json!({ "u": e.u + 1, "v": e.v + 1, "contribution": c }))
                .collect();
            let argmax = account.argmax().map(|e| json!([e.u + 1, e.v + 1]));
            let obj = json!({
                "delta": account.delta,
                "argmax": argmax,
                "width": t.width(),
                "depth": prepared.trace().levels(),
                "shortcuts": prepared.trace().shortcut_count(),
                "per_edge": per_edge,
            });
            serde_json::to_string_pretty(&obj).unwrap() + "\n"
        }
    };
    emit(a.output.out.as_deref(), &text)
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Validate(a) => cmd_validate(a),
        Command::Exact(a) => cmd_exact(a),
        Command::Private(a) => cmd_private(a),
        Command::Baseline(a) => cmd_baseline(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Sensitivity(a) => cmd_sensitivity(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
