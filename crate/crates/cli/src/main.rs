//! Command-line front end: CSV/JSON tables for Stirling triangles, Gibbs
//! weights, exact-vs-approximate comparisons, discovery estimates, Monte
//! Carlo sampling, and the identity validation suite.
//!
//! Exit codes: 0 success, 2 usage, 3 numerical failure, 4 unsupported
//! parameters. Identical invocations (same flags, seed, precision) produce
//! byte-identical output.

use std::io::Write as _;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gibbs_core::approx::{
    discovery_approx, noncentral_stirling_approx, posterior_ratio_approx, prior_weight_approx,
};
use gibbs_core::models::{take_escalation_events, GibbsModel, PartitionState};
use gibbs_core::posterior::{discovery_exact, expected_new_species, posterior_ratio_exact};
use gibbs_core::sampler::{mc_discovery, sample_partition, stream_seed, SamplerConfig};
use gibbs_core::special::StableNormalization;
use gibbs_core::stirling::{
    build_triangle, central_toscano, noncentral_convolution, noncentral_direct, NoncentralParams,
};
use gibbs_core::Error;

mod render;
mod table;
mod validate;

use table::{Cell, Table};

#[derive(Parser)]
#[command(
    name = "gibbs",
    version,
    about = "Exact and Stirling-approximated weights of exchangeable Gibbs partition models"
)]
struct Cli {
    /// Working precision in bits of mantissa.
    #[arg(long, global = true, env = "GIBBS_PRECISION_BITS", default_value_t = 128)]
    precision: u32,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write the table to a file instead of standard output.
    #[arg(long, global = true)]
    output: Option<std::path::PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Generalized Stirling number tables.
    #[command(subcommand)]
    Stirling(StirlingCmd),
    /// Exact Gibbs weights V_{n,k} with backward-recursion residuals.
    Weights(WeightsArgs),
    /// Exact-vs-approximate comparison tables.
    #[command(subcommand)]
    Approx(ApproxCmd),
    /// Species-discovery probability at draw n+m+1.
    Discovery(DiscoveryArgs),
    /// Posterior expected number of new species in an m-sample.
    ExpectedNew(ExpectedNewArgs),
    /// Empirical pmf of the number of blocks K_n under the model.
    Sample(SampleArgs),
    /// Run the identity validation suites and report residuals.
    Validate(ValidateArgs),
}

#[derive(Subcommand)]
enum StirlingCmd {
    /// Central numbers S_{n,k} for all 1 ≤ k ≤ n ≤ n-max.
    Central(CentralArgs),
    /// Non-central numbers S_{m,k*} with non-centrality r = n − kα.
    Noncentral(NoncentralArgs),
}

#[derive(Args)]
struct CentralArgs {
    #[arg(long)]
    alpha: f64,
    #[arg(long = "n-max")]
    n_max: usize,
    #[arg(long, value_enum, default_value_t = CentralRoute::Recurrence)]
    route: CentralRoute,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum CentralRoute {
    Recurrence,
    Toscano,
}

#[derive(Args)]
struct NoncentralArgs {
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    n: u32,
    #[arg(long)]
    k: u32,
    #[arg(long)]
    m: u32,
    /// Largest k* to tabulate (default m).
    #[arg(long = "kstar-max")]
    kstar_max: Option<u32>,
    #[arg(long, value_enum, default_value_t = NoncentralRoute::Convolution)]
    route: NoncentralRoute,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum NoncentralRoute {
    Convolution,
    Direct,
}

#[derive(Args)]
struct WeightsArgs {
    /// Model spec: pd:<alpha>,<theta> | ngg:<alpha>,<beta> | nig:<beta>.
    #[arg(long)]
    model: String,
    #[arg(long = "n-max")]
    n_max: u32,
}

#[derive(Subcommand)]
enum ApproxCmd {
    /// Prior weight V_{n,k} vs its Stirling approximation.
    Prior(ApproxPriorArgs),
    /// Posterior ratio V_{n+m,k+k*}/V_{n,k} vs its approximation.
    Posterior(ApproxPosteriorArgs),
    /// Non-central Stirling numbers vs the integral approximation.
    Stirling(ApproxStirlingArgs),
}

#[derive(Args)]
struct ApproxPriorArgs {
    #[arg(long)]
    model: String,
    /// Ladder of sample sizes, comma separated.
    #[arg(long, value_delimiter = ',')]
    n: Vec<u32>,
    /// Fixed block count; defaults to round(n^alpha) per rung.
    #[arg(long)]
    k: Option<u32>,
}

#[derive(Args)]
struct ApproxPosteriorArgs {
    #[arg(long)]
    model: String,
    #[arg(long)]
    n: u32,
    #[arg(long)]
    k: u32,
    /// Ladder of additional sample sizes, comma separated.
    #[arg(long, value_delimiter = ',')]
    m: Vec<u32>,
    /// Fixed number of new blocks; defaults to round(m^alpha) per rung.
    #[arg(long)]
    kstar: Option<u32>,
}

#[derive(Args)]
struct ApproxStirlingArgs {
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    n: u32,
    #[arg(long)]
    k: u32,
    #[arg(long, value_delimiter = ',')]
    m: Vec<u32>,
    /// Defaults to round(m^alpha) per rung.
    #[arg(long)]
    kstar: Option<u32>,
    /// Scale constant c of the stable convention (Laplace exponent (cλ)^α).
    #[arg(long = "stable-scale", default_value_t = 1.0)]
    stable_scale: f64,
}

#[derive(Args)]
struct DiscoveryArgs {
    #[arg(long)]
    model: String,
    #[arg(long)]
    n: u32,
    #[arg(long)]
    k: u32,
    /// Observed block sizes (comma separated); validated against n and k.
    /// When omitted, an equal split is synthesized (discovery depends on
    /// the state only through (n, k)).
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<u32>>,
    #[arg(long)]
    m: u32,
    #[arg(long, value_enum, default_value_t = DiscoveryMethod::All)]
    method: DiscoveryMethod,
    #[arg(long, default_value_t = 100_000)]
    reps: u64,
    #[arg(long, default_value_t = 17)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum DiscoveryMethod {
    Exact,
    Approx,
    Mc,
    All,
}

#[derive(Args)]
struct ExpectedNewArgs {
    #[arg(long)]
    model: String,
    #[arg(long)]
    n: u32,
    #[arg(long)]
    k: u32,
    #[arg(long)]
    m: u32,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    model: String,
    #[arg(long)]
    n: u32,
    #[arg(long)]
    reps: u64,
    #[arg(long, default_value_t = 17)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long, value_enum, default_value_t = Suite::All)]
    suite: Suite,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    All,
    Stirling,
    Models,
    Posterior,
    Approx,
}

/// Parse `pd:<alpha>,<theta> | ngg:<alpha>,<beta> | nig:<beta>`; errors name
/// the offending field. A malformed spec is a usage error; a well-formed
/// spec with out-of-domain values surfaces as an unsupported-parameter
/// error from the library.
fn parse_model(spec: &str, prec: u32) -> Result<GibbsModel, RunError> {
    let usage = |msg: String| RunError::Usage(msg);
    let (family, params) = spec
        .split_once(':')
        .ok_or_else(|| usage(format!("model spec '{spec}': expected '<family>:<params>'")))?;
    let parse_field = |field: &str, raw: &str| -> Result<f64, RunError> {
        raw.trim().parse::<f64>().map_err(|_| {
            usage(format!(
                "model spec '{spec}': field '{field}' is not a number: '{raw}'"
            ))
        })
    };
    match family {
        "pd" => {
            let (a, t) = params.split_once(',').ok_or_else(|| {
                usage(format!(
                    "model spec '{spec}': pd needs two parameters '<alpha>,<theta>'"
                ))
            })?;
            let alpha = parse_field("alpha", a)?;
            let theta = parse_field("theta", t)?;
            Ok(GibbsModel::poisson_dirichlet(alpha, theta, prec)?)
        }
        "ngg" => {
            let (a, b) = params.split_once(',').ok_or_else(|| {
                usage(format!(
                    "model spec '{spec}': ngg needs two parameters '<alpha>,<beta>'"
                ))
            })?;
            let alpha = parse_field("alpha", a)?;
            let beta = parse_field("beta", b)?;
            Ok(GibbsModel::normalized_gg(alpha, beta, prec)?)
        }
        "nig" => {
            let beta = parse_field("beta", params)?;
            Ok(GibbsModel::normalized_ig(beta, prec)?)
        }
        other => Err(usage(format!(
            "model spec '{spec}': unknown family '{other}' (expected pd, ngg, or nig)"
        ))),
    }
}

fn state_for(n: u32, k: u32, sizes: Option<&[u32]>) -> Result<PartitionState, String> {
    match sizes {
        Some(sizes) => {
            let state = PartitionState::new(sizes.to_vec()).map_err(|e| e.to_string())?;
            if state.n() != n || state.k() != k {
                return Err(format!(
                    "--sizes sums to (n={}, k={}) but (n={n}, k={k}) was requested",
                    state.n(),
                    state.k()
                ));
            }
            Ok(state)
        }
        None => {
            if k == 0 || k > n {
                return Err(format!("need 1 ≤ k ≤ n, got n={n}, k={k}"));
            }
            let base = n / k;
            let extra = (n % k) as usize;
            let mut sizes = vec![base; k as usize];
            for s in sizes.iter_mut().take(extra) {
                *s += 1;
            }
            PartitionState::new(sizes).map_err(|e| e.to_string())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let prec = cli.precision;
    let mut table = match run(&cli.command, prec) {
        Ok(t) => t,
        Err(RunError::Usage(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
        Err(RunError::Lib(e)) => {
            eprintln!("error: {e}");
            return ExitCode::from(match e {
                Error::Domain(_) | Error::Unsupported(_) => 4,
                Error::Precision(_) | Error::Numerical(_) | Error::Capacity(_) => 3,
            });
        }
    };
    let escalations = take_escalation_events();
    if escalations > 0 {
        table
            .diagnostics
            .push(format!("precision auto-escalation events: {escalations}"));
    }
    for d in &table.diagnostics {
        eprintln!("note: {d}");
    }
    let rendered = match cli.format {
        Format::Csv => table.to_csv(),
        Format::Json => table.to_json(),
    };
    match cli.output {
        Some(path) => {
            if let Err(e) = std::fs::write(&path, rendered) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return ExitCode::from(3);
            }
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(rendered.as_bytes()).is_err() {
                return ExitCode::from(3);
            }
        }
    }
    if table.failed {
        return ExitCode::from(3);
    }
    ExitCode::SUCCESS
}

enum RunError {
    Usage(String),
    Lib(Error),
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        RunError::Lib(e)
    }
}

fn run(cmd: &Command, prec: u32) -> Result<Table, RunError> {
    match cmd {
        Command::Stirling(StirlingCmd::Central(a)) => cmd_stirling_central(a, prec),
        Command::Stirling(StirlingCmd::Noncentral(a)) => cmd_stirling_noncentral(a, prec),
        Command::Weights(a) => cmd_weights(a, prec),
        Command::Approx(ApproxCmd::Prior(a)) => cmd_approx_prior(a, prec),
        Command::Approx(ApproxCmd::Posterior(a)) => cmd_approx_posterior(a, prec),
        Command::Approx(ApproxCmd::Stirling(a)) => cmd_approx_stirling(a, prec),
        Command::Discovery(a) => cmd_discovery(a, prec),
        Command::ExpectedNew(a) => cmd_expected_new(a, prec),
        Command::Sample(a) => cmd_sample(a, prec),
        Command::Validate(a) => Ok(validate::run_suite(a.suite, prec)),
    }
}

fn cmd_stirling_central(args: &CentralArgs, prec: u32) -> Result<Table, RunError> {
    let mut table = Table::new(
        "stirling central",
        vec![
            ("alpha", args.alpha.to_string()),
            ("n_max", args.n_max.to_string()),
            ("precision", prec.to_string()),
        ],
        &["n", "k", "value"],
        prec,
    );
    match args.route {
        CentralRoute::Recurrence => {
            let t = build_triangle(args.alpha, args.n_max, prec)?;
            for n in 1..=args.n_max {
                for k in 1..=n {
                    table.push(vec![
                        Cell::Int(n as i64),
                        Cell::Int(k as i64),
                        Cell::Real(t.entry(n, k)?),
                    ]);
                }
            }
        }
        CentralRoute::Toscano => {
            for n in 1..=args.n_max {
                for k in 1..=n {
                    table.push(vec![
                        Cell::Int(n as i64),
                        Cell::Int(k as i64),
                        Cell::Real(central_toscano(n, k, args.alpha, prec)?),
                    ]);
                }
            }
        }
    }
    Ok(table)
}

fn cmd_stirling_noncentral(args: &NoncentralArgs, prec: u32) -> Result<Table, RunError> {
    let params = NoncentralParams::new(args.alpha, args.n, args.k)?;
    let kstar_max = args.kstar_max.unwrap_or(args.m).min(args.m);
    let mut table = Table::new(
        "stirling noncentral",
        vec![
            ("alpha", args.alpha.to_string()),
            ("n", args.n.to_string()),
            ("k", args.k.to_string()),
            ("m", args.m.to_string()),
            ("precision", prec.to_string()),
        ],
        &["m", "kstar", "value"],
        prec,
    );
    let triangle = match args.route {
        NoncentralRoute::Convolution => Some(build_triangle(args.alpha, args.m as usize, prec)?),
        NoncentralRoute::Direct => None,
    };
    for k_star in 0..=kstar_max {
        let v = match &triangle {
            Some(t) => noncentral_convolution(args.m as usize, k_star as usize, &params, t)?,
            None => noncentral_direct(args.m as usize, k_star as usize, &params, prec)?,
        };
        table.push(vec![
            Cell::Int(args.m as i64),
            Cell::Int(k_star as i64),
            Cell::Real(v),
        ]);
    }
    Ok(table)
}

fn cmd_weights(args: &WeightsArgs, prec: u32) -> Result<Table, RunError> {
    let model = parse_model(&args.model, prec)?;
    let mut table = Table::new(
        "weights",
        vec![
            ("model", args.model.clone()),
            ("n_max", args.n_max.to_string()),
            ("precision", prec.to_string()),
        ],
        &["n", "k", "value", "residual"],
        prec,
    );
    for n in 1..=args.n_max {
        for k in 1..=n {
            let v = model.weight(n, k)?;
            let r = model.recursion_residual(n, k)?;
            table.push(vec![
                Cell::Int(n as i64),
                Cell::Int(k as i64),
                Cell::Real(v),
                Cell::Real(r),
            ]);
        }
    }
    Ok(table)
}

fn cmd_approx_prior(args: &ApproxPriorArgs, prec: u32) -> Result<Table, RunError> {
    let model = parse_model(&args.model, prec)?;
    let mut table = Table::new(
        "approx prior",
        vec![
            ("model", args.model.clone()),
            ("precision", prec.to_string()),
        ],
        &["n", "k", "exact", "approx", "rel_error"],
        prec,
    );
    for &n in &args.n {
        let k = args
            .k
            .unwrap_or_else(|| (n as f64).powf(model.alpha()).round() as u32)
            .clamp(1, n);
        let exact = model.weight(n, k)?;
        let approx = prior_weight_approx(&model, n, k)?;
        let rel = (&approx - &exact).abs() / exact.abs();
        table.push(vec![
            Cell::Int(n as i64),
            Cell::Int(k as i64),
            Cell::Real(exact),
            Cell::Real(approx),
            Cell::Real(rel),
        ]);
    }
    Ok(table)
}

fn cmd_approx_posterior(args: &ApproxPosteriorArgs, prec: u32) -> Result<Table, RunError> {
    let model = parse_model(&args.model, prec)?;
    let mut table = Table::new(
        "approx posterior",
        vec![
            ("model", args.model.clone()),
            ("n", args.n.to_string()),
            ("k", args.k.to_string()),
            ("precision", prec.to_string()),
        ],
        &["m", "kstar", "exact", "approx", "rel_error"],
        prec,
    );
    for &m in &args.m {
        let k_star = args
            .kstar
            .unwrap_or_else(|| (m as f64).powf(model.alpha()).round() as u32)
            .clamp(1, m);
        let exact = posterior_ratio_exact(&model, args.n, args.k, m, k_star)?;
        let approx = posterior_ratio_approx(&model, args.n, args.k, m, k_star)?;
        let rel = (&approx - &exact).abs() / exact.abs();
        table.push(vec![
            Cell::Int(m as i64),
            Cell::Int(k_star as i64),
            Cell::Real(exact),
            Cell::Real(approx),
            Cell::Real(rel),
        ]);
    }
    Ok(table)
}

fn cmd_approx_stirling(args: &ApproxStirlingArgs, prec: u32) -> Result<Table, RunError> {
    let params = NoncentralParams::new(args.alpha, args.n, args.k)?;
    let norm = StableNormalization::new(args.stable_scale)?;
    let mut table = Table::new(
        "approx stirling",
        vec![
            ("alpha", args.alpha.to_string()),
            ("n", args.n.to_string()),
            ("k", args.k.to_string()),
            ("stable_scale", args.stable_scale.to_string()),
            ("precision", prec.to_string()),
        ],
        &["m", "kstar", "exact", "approx", "rel_error"],
        prec,
    );
    for &m in &args.m {
        let k_star = args
            .kstar
            .unwrap_or_else(|| (m as f64).powf(args.alpha).round() as u32)
            .clamp(1, m);
        let triangle = build_triangle(args.alpha, m as usize, prec + 32)?;
        let exact = noncentral_convolution(m as usize, k_star as usize, &params, &triangle)?;
        let approx = noncentral_stirling_approx(m, k_star, &params, norm, prec)?;
        let rel = (&approx - &exact).abs() / exact.abs();
        table.push(vec![
            Cell::Int(m as i64),
            Cell::Int(k_star as i64),
            Cell::Real(exact),
            Cell::Real(approx),
            Cell::Real(rel),
        ]);
    }
    Ok(table)
}

fn cmd_discovery(args: &DiscoveryArgs, prec: u32) -> Result<Table, RunError> {
    let model = parse_model(&args.model, prec)?;
    let state = state_for(args.n, args.k, args.sizes.as_deref()).map_err(RunError::Usage)?;
    let mut table = Table::new(
        "discovery",
        vec![
            ("model", args.model.clone()),
            ("n", args.n.to_string()),
            ("k", args.k.to_string()),
            ("m", args.m.to_string()),
            ("reps", args.reps.to_string()),
            ("seed", args.seed.to_string()),
            ("precision", prec.to_string()),
        ],
        &["method", "value", "std_error"],
        prec,
    );
    let all = args.method == DiscoveryMethod::All;
    if all || args.method == DiscoveryMethod::Exact {
        let v = discovery_exact(&model, args.n, args.k, args.m)?;
        table.push(vec![
            Cell::Str("exact".into()),
            Cell::Real(v),
            Cell::Str(String::new()),
        ]);
    }
    if all || args.method == DiscoveryMethod::Approx {
        let out = discovery_approx(&model, args.n, args.k, args.m)?;
        if let Some(w) = out.warning {
            table.diagnostics.push(w);
        }
        table.push(vec![
            Cell::Str("approx".into()),
            Cell::Real(out.value),
            Cell::Str(String::new()),
        ]);
    }
    if all || args.method == DiscoveryMethod::Mc {
        let config = SamplerConfig {
            threads: args.threads,
            force_full_precision: false,
        };
        let est = mc_discovery(&model, &state, args.m, args.reps, args.seed, &config)?;
        table.push(vec![
            Cell::Str("mc".into()),
            Cell::F64(est.mean),
            Cell::F64(est.std_error),
        ]);
    }
    Ok(table)
}

fn cmd_expected_new(args: &ExpectedNewArgs, prec: u32) -> Result<Table, RunError> {
    let model = parse_model(&args.model, prec)?;
    let mut table = Table::new(
        "expected-new",
        vec![
            ("model", args.model.clone()),
            ("precision", prec.to_string()),
        ],
        &["n", "k", "m", "value"],
        prec,
    );
    let v = expected_new_species(&model, args.n, args.k, args.m)?;
    table.push(vec![
        Cell::Int(args.n as i64),
        Cell::Int(args.k as i64),
        Cell::Int(args.m as i64),
        Cell::Real(v),
    ]);
    Ok(table)
}

fn cmd_sample(args: &SampleArgs, prec: u32) -> Result<Table, RunError> {
    let model = parse_model(&args.model, prec)?;
    let mut table = Table::new(
        "sample",
        vec![
            ("model", args.model.clone()),
            ("n", args.n.to_string()),
            ("reps", args.reps.to_string()),
            ("seed", args.seed.to_string()),
            ("precision", prec.to_string()),
        ],
        &["k", "count", "frequency"],
        prec,
    );
    // Partitioning replicates over threads does not change per-replicate
    // draws (each has its own stream), so counts are thread-invariant.
    let mut counts = vec![0u64; args.n as usize + 1];
    if args.threads <= 1 {
        for rep in 0..args.reps {
            let s = sample_partition(&model, args.n, stream_seed(args.seed, rep))?;
            counts[s.k() as usize] += 1;
        }
    } else {
        let chunk = args.reps.div_ceil(args.threads as u64);
        let model = &model;
        let partials: Vec<gibbs_core::Result<Vec<u64>>> = std::thread::scope(|scope| {
            let mut handles = Vec::new();
            for t in 0..args.threads as u64 {
                let lo = t * chunk;
                let hi = ((t + 1) * chunk).min(args.reps);
                handles.push(scope.spawn(move || {
                    let mut local = vec![0u64; args.n as usize + 1];
                    for rep in lo..hi {
                        let s = sample_partition(model, args.n, stream_seed(args.seed, rep))?;
                        local[s.k() as usize] += 1;
                    }
                    Ok(local)
                }));
            }
            handles
                .into_iter()
                .map(|h| h.join().expect("sample worker panicked"))
                .collect()
        });
        for partial in partials {
            for (c, p) in counts.iter_mut().zip(partial?) {
                *c += p;
            }
        }
    }
    for (k, &count) in counts.iter().enumerate().skip(1) {
        if count > 0 {
            table.push(vec![
                Cell::Int(k as i64),
                Cell::Int(count as i64),
                Cell::F64(count as f64 / args.reps as f64),
            ]);
        }
    }
    Ok(table)
}

