//! Command-line driver: loads a model spec, dispatches to the solvers and
//! the simulator, and renders reports as JSON, CSV, or a fixed-width table.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::solve_dense;
use crate::model::{classify_regime, load_model, CouplingFamily, ModelSpec, Regime, RegimeClass};
use crate::sim::{
    democracy_deficit_exact, democracy_deficit_sampled, estimate_moments,
    exact_margin_distribution, exact_moments, gibbs_sample, verify_optimality, ChainConfig,
    Moments, OptimalityReport, SigmaMode,
};
use crate::strong::{
    minimize_f, mixed_cluster_weights, solve_curie_weiss, strong_weight_solution, WeightSolution,
};
use crate::weak::{check_feasibility, closed_form_weights, solve_weak_weights, weak_system};

/// Exit status for validation failures (bad spec, guard violations, ...).
pub const EXIT_VALIDATION: i32 = 2;
/// Exit status for regime or feasibility refusals.
pub const EXIT_REFUSAL: i32 = 3;

#[derive(Parser)]
#[command(
    name = "council",
    version,
    about = "Optimal council weights for two-tier voting under mean-field voter models"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Table,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SigmaModeArg {
    /// sqrt(N): weak-regime normalisation
    SqrtN,
    /// N: strong-regime normalisation
    N,
    /// pick by classifying the regime
    Auto,
}

#[derive(Args)]
struct CommonOpts {
    /// Model spec (JSON)
    spec: PathBuf,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Write the report here instead of stdout
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SamplerOpts {
    #[arg(long, default_value_t = 4)]
    chains: usize,
    /// Recorded sweeps per chain
    #[arg(long, default_value_t = 10_000)]
    sweeps: usize,
    #[arg(long, default_value_t = 1_000)]
    burn_in: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Cmd {
    /// Classify the interaction regime (weak / critical / strong)
    Regime {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Compute optimal council weights
    Weights {
        #[command(flatten)]
        common: CommonOpts,
        /// Exit nonzero when some optimal weight is negative
        #[arg(long)]
        strict: bool,
    },
    /// Largest root of the mean-field fixed-point equation
    Cw {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Global minima of the strong-regime free-energy function
    MinimizeF {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Exact moments by enumeration (requires finite_sizes)
    Exact {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Monte Carlo moments from heat-bath Gibbs chains
    Simulate {
        #[command(flatten)]
        common: CommonOpts,
        #[command(flatten)]
        sampler: SamplerOpts,
        /// Also dump raw samples as CSV to this path
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// Democracy deficit of candidate weights at finite sizes
    Deficit {
        #[command(flatten)]
        common: CommonOpts,
        #[command(flatten)]
        sampler: SamplerOpts,
        /// Comma-separated candidate weights (default: asymptotic optimum)
        #[arg(long)]
        weights: Option<String>,
        #[arg(long, value_enum, default_value = "auto")]
        sigma_mode: SigmaModeArg,
    },
    /// Check candidate weights against the empirically estimated normal
    /// equations
    Verify {
        #[command(flatten)]
        common: CommonOpts,
        #[command(flatten)]
        sampler: SamplerOpts,
        #[arg(long)]
        weights: Option<String>,
        #[arg(long, value_enum, default_value = "auto")]
        sigma_mode: SigmaModeArg,
    },
}

/// Entry point: parses arguments from the process environment and returns
/// the process exit status.
pub fn run() -> i32 {
    init_threads();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Regime(_) => EXIT_REFUSAL,
                _ => EXIT_VALIDATION,
            }
        }
    }
}

fn init_threads() {
    if let Ok(v) = std::env::var("COUNCIL_WEIGHTS_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            if n > 0 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct RegimeReport {
    regime: RegimeClass,
}

#[derive(Serialize)]
struct WeightsReport {
    regime: Regime,
    #[serde(flatten)]
    solution: WeightSolution,
    #[serde(skip_serializing_if = "Option::is_none")]
    coefficients: Option<crate::weak::ClosedFormCoefficients>,
    #[serde(skip_serializing_if = "Option::is_none")]
    feasibility: Option<crate::weak::FeasibilityReport>,
}

#[derive(Serialize)]
struct StatsReport {
    method: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    config: Option<ChainConfig>,
    moments: Moments,
}

#[derive(Serialize)]
struct DeficitReport {
    method: &'static str,
    sigma: f64,
    weights: Vec<f64>,
    deficit: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    standard_error: Option<f64>,
}

#[derive(Serialize)]
struct VerifyReport {
    method: &'static str,
    sigma: f64,
    #[serde(flatten)]
    report: OptimalityReport,
}

fn dispatch(cmd: Cmd) -> Result<i32> {
    match cmd {
        Cmd::Regime { common } => {
            let model = load_model(&common.spec)?;
            let report = RegimeReport { regime: classify_regime(&model.coupling) };
            emit(&common, &report, |r| {
                let mut s = format!("regime: {:?}\n", r.regime.tag);
                if let Some(per) = &r.regime.per_cluster {
                    for (i, c) in per.iter().enumerate() {
                        s.push_str(&format!("cluster {i}: {:?}\n", c.tag));
                    }
                }
                s
            })
        }
        Cmd::Weights { common, strict } => {
            let model = load_model(&common.spec)?;
            let (report, infeasible) = weights_report(&model)?;
            let code = emit(&common, &report, render_weights_table)?;
            if strict && infeasible {
                eprintln!(
                    "error: some optimal weight is negative; no real voting system attains \
                     the minimal democracy deficit"
                );
                return Ok(EXIT_REFUSAL);
            }
            Ok(code)
        }
        Cmd::Cw { common } => {
            let model = load_model(&common.spec)?;
            let beta = match model.coupling.family() {
                CouplingFamily::Homogeneous { beta } => *beta,
                other => {
                    return Err(Error::Invalid(format!(
                        "the fixed-point equation applies to the homogeneous family, \
                         spec uses {}",
                        other.name()
                    )))
                }
            };
            let root = solve_curie_weiss(beta, model.sizes.alphas())?;
            emit(&common, &root, |r| {
                let mut s = format!(
                    "beta: {}\nroot: {:.16e}\nresidual: {:.3e}\n",
                    r.beta, r.root, r.residual
                );
                for (l, t) in r.per_group_tanh.iter().enumerate() {
                    s.push_str(&format!("tanh(root/sqrt(alpha_{})): {:.16e}\n", l + 1, t));
                }
                if let Some(note) = &r.scaling_note {
                    s.push_str(&format!("note: {note}\n"));
                }
                s
            })
        }
        Cmd::MinimizeF { common } => {
            let model = load_model(&common.spec)?;
            let minima = minimize_f(&model.coupling, model.sizes.alphas())?;
            emit(&common, &minima, |m| {
                let mut s = format!("f_value: {:.16e}\n", m.f_value);
                for (p, sig) in m.minimizers.iter().zip(&m.orthant_signatures) {
                    s.push_str(&format!("minimizer {sig:?}: {p:?}\n"));
                }
                s
            })
        }
        Cmd::Exact { common } => {
            let model = load_model(&common.spec)?;
            let dist = exact_margin_distribution(&model.coupling, &model.sizes)?;
            let report = StatsReport {
                method: "exact",
                config: None,
                moments: exact_moments(&dist),
            };
            emit(&common, &report, render_stats_table)
        }
        Cmd::Simulate { common, sampler, dump } => {
            let model = load_model(&common.spec)?;
            let config = ChainConfig {
                chains: sampler.chains,
                sweeps: sampler.sweeps,
                burn_in: sampler.burn_in,
                seed: sampler.seed,
            };
            let set = gibbs_sample(&model.coupling, &model.sizes, &config)?;
            if let Some(path) = dump {
                let mut file = std::fs::File::create(path)?;
                crate::sim::write_samples_csv(&set, &mut file)?;
            }
            let report = StatsReport {
                method: "mcmc",
                config: Some(config),
                moments: estimate_moments(&set)?,
            };
            emit(&common, &report, render_stats_table)
        }
        Cmd::Deficit { common, sampler, weights, sigma_mode } => {
            let model = load_model(&common.spec)?;
            let w = candidate_weights(&model, weights.as_deref())?;
            let mode = resolve_sigma(&model, sigma_mode);
            let total = model
                .sizes
                .total_finite()
                .ok_or_else(|| Error::Invalid("deficit requires finite group sizes".into()))?;
            let sigma = mode.value(total);
            let report = if enumerable(&model) {
                let dist = exact_margin_distribution(&model.coupling, &model.sizes)?;
                DeficitReport {
                    method: "exact",
                    sigma,
                    deficit: democracy_deficit_exact(&dist, &w, mode)?,
                    weights: w,
                    standard_error: None,
                }
            } else {
                let config = ChainConfig {
                    chains: sampler.chains,
                    sweeps: sampler.sweeps,
                    burn_in: sampler.burn_in,
                    seed: sampler.seed,
                };
                let set = gibbs_sample(&model.coupling, &model.sizes, &config)?;
                let (deficit, se) = democracy_deficit_sampled(&set, &w, mode)?;
                DeficitReport {
                    method: "mcmc",
                    sigma,
                    deficit,
                    weights: w,
                    standard_error: Some(se),
                }
            };
            emit(&common, &report, |r| {
                let mut s = format!(
                    "method: {}\nsigma: {}\ndeficit: {:.16e}\n",
                    r.method, r.sigma, r.deficit
                );
                if let Some(se) = r.standard_error {
                    s.push_str(&format!("standard_error: {se:.3e}\n"));
                }
                s
            })
        }
        Cmd::Verify { common, sampler, weights, sigma_mode } => {
            let model = load_model(&common.spec)?;
            let w = candidate_weights(&model, weights.as_deref())?;
            let mode = resolve_sigma(&model, sigma_mode);
            let total = model
                .sizes
                .total_finite()
                .ok_or_else(|| Error::Invalid("verify requires finite group sizes".into()))?;
            let sigma = mode.value(total);
            let (method, moments) = if enumerable(&model) {
                let dist = exact_margin_distribution(&model.coupling, &model.sizes)?;
                ("exact", exact_moments(&dist))
            } else {
                let config = ChainConfig {
                    chains: sampler.chains,
                    sweeps: sampler.sweeps,
                    burn_in: sampler.burn_in,
                    seed: sampler.seed,
                };
                let set = gibbs_sample(&model.coupling, &model.sizes, &config)?;
                ("mcmc", estimate_moments(&set)?)
            };
            let report = VerifyReport {
                method,
                sigma,
                report: verify_optimality(&moments, sigma, &w)?,
            };
            emit(&common, &report, |r| {
                format!(
                    "method: {}\nsigma: {}\nmax_deviation: {:.3e}\nestimated: {:?}\ncandidate: {:?}\n",
                    r.method, r.sigma, r.report.max_deviation,
                    r.report.estimated_weights, r.report.candidate_weights
                )
            })
        }
    }
}

fn weights_report(model: &ModelSpec) -> Result<(WeightsReport, bool)> {
    let regime = classify_regime(&model.coupling);
    let alphas = model.sizes.alphas();
    match (regime.tag, model.coupling.family()) {
        (_, CouplingFamily::Block { .. }) => {
            let solution = mixed_cluster_weights(&model.coupling, alphas)?;
            Ok((
                WeightsReport {
                    regime: regime.tag,
                    solution,
                    coefficients: None,
                    feasibility: None,
                },
                false,
            ))
        }
        (Regime::Weak, _) => {
            let weights = solve_weak_weights(&model.coupling, alphas)?;
            let coefficients = closed_form_weights(&model.coupling, alphas)
                .ok()
                .map(|(_, c)| c);
            let feasibility = check_feasibility(&weights);
            let infeasible = !feasibility.all_nonnegative;
            Ok((
                WeightsReport {
                    regime: Regime::Weak,
                    solution: WeightSolution::Unique { weights },
                    coefficients,
                    feasibility: Some(feasibility),
                },
                infeasible,
            ))
        }
        (Regime::Critical, _) => Err(Error::Regime(
            "critical regime: the asymptotic weight theory does not apply at the \
             phase transition"
                .into(),
        )),
        (Regime::Strong, _) => {
            let solution = strong_weight_solution(&model.coupling, alphas, None)?;
            Ok((
                WeightsReport { regime: Regime::Strong, solution, coefficients: None, feasibility: None },
                false,
            ))
        }
    }
}

fn candidate_weights(model: &ModelSpec, arg: Option<&str>) -> Result<Vec<f64>> {
    if let Some(text) = arg {
        let w: std::result::Result<Vec<f64>, _> =
            text.split(',').map(|t| t.trim().parse::<f64>()).collect();
        let w = w.map_err(|e| Error::Invalid(format!("bad --weights list: {e}")))?;
        if w.len() != model.m() {
            return Err(Error::Dimension(format!(
                "{} weights for M = {}",
                w.len(),
                model.m()
            )));
        }
        return Ok(w);
    }
    // default: the asymptotic optimum, unnormalised so the deficit is
    // meaningful
    match classify_regime(&model.coupling).tag {
        Regime::Weak => {
            let sys = weak_system(&model.coupling, model.sizes.alphas())?;
            solve_dense(&sys.a, &sys.b)
        }
        Regime::Critical => Err(Error::Regime(
            "critical regime: no default weights; pass --weights".into(),
        )),
        Regime::Strong => {
            match strong_weight_solution(&model.coupling, model.sizes.alphas(), None)? {
                WeightSolution::Unique { weights } => Ok(weights),
                WeightSolution::Zero { m } => Ok(vec![0.0; m]),
                other => Err(Error::Invalid(format!(
                    "the optimal weights are degenerate ({}); pass an explicit --weights list",
                    solution_tag(&other)
                ))),
            }
        }
    }
}

fn solution_tag(s: &WeightSolution) -> &'static str {
    match s {
        WeightSolution::Unique { .. } => "unique",
        WeightSolution::AnyPositive { .. } => "any_positive",
        WeightSolution::ClusterConstrained { .. } => "cluster_constrained",
        WeightSolution::Zero { .. } => "zero",
        WeightSolution::PerCluster { .. } => "per_cluster",
    }
}

fn resolve_sigma(model: &ModelSpec, arg: SigmaModeArg) -> SigmaMode {
    match arg {
        SigmaModeArg::SqrtN => SigmaMode::SqrtN,
        SigmaModeArg::N => SigmaMode::N,
        SigmaModeArg::Auto => match classify_regime(&model.coupling).tag {
            Regime::Weak => SigmaMode::SqrtN,
            _ => SigmaMode::N,
        },
    }
}

fn enumerable(model: &ModelSpec) -> bool {
    model
        .sizes
        .finite_sizes()
        .map(|sizes| {
            sizes
                .iter()
                .try_fold(1u64, |acc, &n| {
                    let next = acc.saturating_mul(n + 1);
                    (next <= 10_000_000).then_some(next)
                })
                .is_some()
        })
        .unwrap_or(false)
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

fn emit<T: Serialize>(
    common: &CommonOpts,
    report: &T,
    table: impl Fn(&T) -> String,
) -> Result<i32> {
    let bytes = match common.format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(report)?;
            s.push('\n');
            s.into_bytes()
        }
        Format::Csv => render_csv(report)?,
        Format::Table => table(report).into_bytes(),
    };
    match &common.output {
        Some(path) => std::fs::write(path, bytes)?,
        None => {
            use std::io::Write;
            std::io::stdout().write_all(&bytes)?;
        }
    }
    Ok(0)
}

// CSV: flatten the report's JSON representation into `path,value` rows.
// Numbers render with 17 significant digits so they round-trip exactly.
fn render_csv<T: Serialize>(report: &T) -> Result<Vec<u8>> {
    let value = serde_json::to_value(report)?;
    let mut rows = vec!["field,value".to_string()];
    flatten_value("", &value, &mut rows);
    let mut out = rows.join("\n");
    out.push('\n');
    Ok(out.into_bytes())
}

fn flatten_value(prefix: &str, value: &serde_json::Value, rows: &mut Vec<String>) {
    use serde_json::Value;
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten_value(&key, v, rows);
            }
        }
        Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                flatten_value(&format!("{prefix}[{i}]"), v, rows);
            }
        }
        Value::Number(n) => {
            let rendered = if let Some(f) = n.as_f64() {
                if n.is_f64() {
                    format!("{f:.16e}")
                } else {
                    n.to_string()
                }
            } else {
                n.to_string()
            };
            rows.push(format!("{prefix},{rendered}"));
        }
        other => rows.push(format!("{prefix},{other}")),
    }
}

fn render_weights_table(r: &WeightsReport) -> String {
    let mut s = format!("regime: {:?}\n", r.regime);
    s.push_str(&render_solution(&r.solution));
    if let Some(c) = &r.coefficients {
        s.push_str(&format!(
            "closed form ({}): first {:.16e}  second {:.16e}  a {:.16e}  eta {:.16e}\n",
            c.scenario, c.first, c.second, c.a, c.eta
        ));
    }
    if let Some(f) = &r.feasibility {
        if f.all_nonnegative {
            s.push_str("feasibility: all weights nonnegative\n");
        } else {
            s.push_str(&format!(
                "feasibility: negative weights for groups {:?}\n",
                f.offending_groups
            ));
        }
    }
    s
}

fn render_solution(sol: &WeightSolution) -> String {
    match sol {
        WeightSolution::Unique { weights } => format!("weights: {weights:?}\n"),
        WeightSolution::AnyPositive { weight_sum } => format!(
            "any positive weights are optimal (weight sum pinned to {weight_sum:.16e})\n"
        ),
        WeightSolution::ClusterConstrained { cluster_sizes, theta } => format!(
            "weights free within clusters ({}, {}); cluster-weight difference theta = {theta:.16e}\n",
            cluster_sizes.0, cluster_sizes.1
        ),
        WeightSolution::Zero { m } => format!("all {m} weights are zero\n"),
        WeightSolution::PerCluster { sigma, clusters } => {
            let mut s = format!("per-cluster solution, sigma scale {sigma:?}\n");
            for c in clusters {
                s.push_str(&format!(
                    "cluster at {} (len {}, {:?}): {}",
                    c.start,
                    c.len,
                    c.regime,
                    render_solution(&c.solution)
                ));
                if let Some(note) = &c.note {
                    s.push_str(&format!("  note: {note}\n"));
                }
            }
            s
        }
    }
}

fn render_stats_table(r: &StatsReport) -> String {
    let mut s = format!("method: {}\nsamples: {}\n", r.method, r.moments.samples);
    s.push_str("E[chi chi]:\n");
    for row in &r.moments.chi_chi {
        s.push_str("  ");
        for v in row {
            s.push_str(&format!("{v:>22.15e} "));
        }
        s.push('\n');
    }
    s.push_str("E[chi S]: ");
    for v in &r.moments.chi_s {
        s.push_str(&format!("{v:.15e} "));
    }
    s.push('\n');
    if r.method == "mcmc" {
        s.push_str("se(E[chi S]): ");
        for v in &r.moments.chi_s_se {
            s.push_str(&format!("{v:.3e} "));
        }
        s.push('\n');
    }
    s.push_str(&format!("E|S|: {:.15e}\n", r.moments.abs_s_mean));
    s
}
