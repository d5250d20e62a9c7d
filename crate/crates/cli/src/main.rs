//! Command-line front end: simulation harnesses, classifiers, error
//! constructions, and the verification suites behind one binary.
//!
//! Diagnostics go to stderr; result data goes to `--out` or stdout, so
//! emitted CSV can be piped directly. Identical flags and seed produce
//! byte-identical output regardless of `--threads`.

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use crelab::dataio::{
    classify_studies, load_studies, round_sig6, write_report, ClassifyOptions, Report,
};
use crelab::error::Error as LibError;
use crelab::experiments::{
    fig1_csv, fig1_data, run_fig3, run_prop_suite_with_margin, run_sweep, FigThreeConfig,
    SuiteId, SweepConfig, DEFAULT_QUADRANT_MARGIN,
};
use crelab::lottery::CommonRatioProblem;
use crelab::testkit::CiMethod;
use crelab::valuation::{construct_mean_target, construct_sign_target};
use std::path::PathBuf;
use std::process::ExitCode;

const USAGE_EXIT: u8 = 1;
const DATA_EXIT: u8 = 2;
const VERIFY_EXIT: u8 = 3;

#[derive(Parser)]
#[command(name = "crelab", version, about = "Stochastic-choice laboratory for common ratio effect tests")]
struct Cli {
    /// Master seed (default: the CRELAB_SEED environment variable, else 42).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Write results to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    /// Worker threads for parallel experiments; results are identical for
    /// any value.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate prospect-theory choice frequencies and classify the
    /// replication cloud under the strong and band geometries.
    Simulate(SimulateArgs),
    /// Enumerate the deterministic preference sweep over a parameter grid.
    Sweep(SweepArgs),
    /// Closed-form achievable-mean rectangles per gamma.
    Bounds(BoundsArgs),
    /// Build noise laws hitting a mean or sign target for the valuation
    /// tests.
    Construct(ConstructArgs),
    /// Classify study records and aggregate prevalence tables.
    Classify(ClassifyArgs),
    /// Run verification suites; exits 3 when any assertion fails.
    Verify(VerifyArgs),
    /// Emit plot-ready CSV data for a named figure.
    Figure(FigureArgs),
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, default_value_t = 0.8)]
    gamma: f64,
    #[arg(long, default_value_t = 0.7)]
    sigma: f64,
    #[arg(long, default_value_t = 12.0)]
    x: f64,
    #[arg(long, default_value_t = 30.0)]
    y: f64,
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    #[arg(long, default_value_t = 0.2)]
    r: f64,
    /// Half-width of the uniform choice error.
    #[arg(long, default_value_t = 1.8)]
    noise: f64,
    /// Choices per task behind each frequency.
    #[arg(long, default_value_t = 100)]
    choices: usize,
    #[arg(long, default_value_t = 10_000)]
    reps: usize,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, default_value_t = 0.8)]
    gamma: f64,
    #[arg(long, default_value_t = 0.8)]
    sigma: f64,
    /// Comma-separated prize grid for x (default 1..10).
    #[arg(long, value_delimiter = ',')]
    xs: Option<Vec<f64>>,
    /// Comma-separated prize grid for y (default 1..10).
    #[arg(long, value_delimiter = ',')]
    ys: Option<Vec<f64>>,
    /// Comma-separated probability grid for p (default 0.1..0.9).
    #[arg(long, value_delimiter = ',')]
    ps: Option<Vec<f64>>,
    /// Comma-separated probability grid for r (default 0.1..0.9).
    #[arg(long, value_delimiter = ',')]
    rs: Option<Vec<f64>>,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long, default_value_t = 30.0)]
    y: f64,
    #[arg(long, default_value_t = 0.8)]
    p: f64,
    #[arg(long, value_delimiter = ',', default_values_t = [0.25, 0.5, 0.8, 1.0])]
    gammas: Vec<f64>,
}

#[derive(Args)]
struct ConstructArgs {
    /// Target expected valuations "z1,z2" for the mean test.
    #[arg(long, value_delimiter = ',', conflicts_with = "target_sign")]
    target_mean: Option<Vec<f64>>,
    /// Target exceedance probability for the sign test.
    #[arg(long)]
    target_sign: Option<f64>,
    #[arg(long, default_value_t = 30.0)]
    y: f64,
    #[arg(long, default_value_t = 0.8)]
    p: f64,
    #[arg(long, default_value_t = 0.4)]
    r: f64,
    /// Wide-support half-width of the sign construction.
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    /// Analytic tolerance of the mean construction.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
}

#[derive(Args)]
struct ClassifyArgs {
    /// Studies CSV (count or frequency schema).
    #[arg(long)]
    input: PathBuf,
    /// Confidence level for interval-consistency flags.
    #[arg(long)]
    ci: Option<f64>,
    /// Weak-test tolerance.
    #[arg(long, default_value_t = 0.0)]
    tol: f64,
    /// Use Clopper-Pearson intervals instead of the normal approximation.
    #[arg(long)]
    clopper_pearson: bool,
    /// Weight per-source frequency averages by participants.
    #[arg(long)]
    weighted_means: bool,
}

#[derive(Args)]
struct VerifyArgs {
    /// Suite id or `all`.
    #[arg(long, default_value = "all")]
    suite: String,
    /// Samples per Monte Carlo assertion (minimum 1e5).
    #[arg(long, default_value_t = 1_000_000)]
    budget: u64,
    /// Exclusion margin around 1/2 for quadrant assertions.
    #[arg(long, default_value_t = DEFAULT_QUADRANT_MARGIN)]
    margin: f64,
}

#[derive(Args)]
struct FigureArgs {
    /// fig1 or fig3.
    #[arg(long)]
    id: String,
}

struct CliError {
    code: u8,
    msg: String,
}

impl From<LibError> for CliError {
    fn from(e: LibError) -> Self {
        let code = match e {
            LibError::Data(_) | LibError::DataAt { .. } | LibError::Io(_) => DATA_EXIT,
            _ => USAGE_EXIT,
        };
        CliError {
            code,
            msg: e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version are successful exits.
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprint!("{e}");
            return ExitCode::from(USAGE_EXIT);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.msg);
            ExitCode::from(e.code)
        }
    }
}

fn resolve_seed(cli_seed: Option<u64>) -> u64 {
    cli_seed
        .or_else(|| {
            std::env::var("CRELAB_SEED")
                .ok()
                .and_then(|s| s.trim().parse().ok())
        })
        .unwrap_or(42)
}

/// Rounds every float in a JSON tree to 6 significant digits.
fn round_json(value: &mut serde_json::Value) {
    match value {
        serde_json::Value::Number(n) => {
            if n.as_i64().is_none() && n.as_u64().is_none() {
                if let Some(f) = n.as_f64() {
                    if let Some(rounded) = serde_json::Number::from_f64(round_sig6(f)) {
                        *value = serde_json::Value::Number(rounded);
                    }
                }
            }
        }
        serde_json::Value::Array(items) => items.iter_mut().for_each(round_json),
        serde_json::Value::Object(map) => map.values_mut().for_each(round_json),
        _ => {}
    }
}

fn emit(out: &Option<PathBuf>, content: &str) -> Result<u8, CliError> {
    match out {
        Some(path) => write_report(content, path)?,
        None => print!("{content}"),
    }
    Ok(0)
}

fn json_report<T: serde::Serialize>(
    seed: Option<u64>,
    config: serde_json::Value,
    results: T,
) -> Result<String, CliError> {
    let report = Report::new(seed, config, results);
    let mut value = serde_json::to_value(&report).map_err(|e| CliError {
        code: DATA_EXIT,
        msg: e.to_string(),
    })?;
    round_json(&mut value);
    serde_json::to_string_pretty(&value)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| CliError {
            code: DATA_EXIT,
            msg: e.to_string(),
        })
}

fn run(cli: Cli) -> Result<u8, CliError> {
    if let Some(threads) = cli.threads {
        // Results are schedule-independent; the pool size only sets the
        // worker budget. A pool may already exist in test harnesses.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    let seed = resolve_seed(cli.seed);
    match &cli.cmd {
        Cmd::Simulate(args) => {
            let cfg = FigThreeConfig {
                gamma: args.gamma,
                sigma: args.sigma,
                problem: CommonRatioProblem::new(args.x, args.y, args.p, args.r)?,
                noise_halfwidth: args.noise,
                choices_per_frequency: args.choices,
                replications: args.reps,
                seed,
            };
            let counts = run_fig3(&cfg)?;
            let content = match cli.format {
                Format::Json => json_report(
                    Some(seed),
                    serde_json::to_value(&cfg).unwrap_or_default(),
                    &counts,
                )?,
                Format::Csv => counts.pairs_csv(),
            };
            emit(&cli.out, &content)
        }
        Cmd::Sweep(args) => {
            let mut cfg = SweepConfig {
                gamma: args.gamma,
                sigma: args.sigma,
                ..SweepConfig::default()
            };
            if let Some(xs) = &args.xs {
                cfg.xs = xs.clone();
            }
            if let Some(ys) = &args.ys {
                cfg.ys = ys.clone();
            }
            if let Some(ps) = &args.ps {
                cfg.ps = ps.clone();
            }
            if let Some(rs) = &args.rs {
                cfg.rs = rs.clone();
            }
            let summary = run_sweep(&cfg)?;
            let content = match cli.format {
                // Deterministic operation: no seed in the metadata.
                Format::Json => json_report(
                    None,
                    serde_json::to_value(&cfg).unwrap_or_default(),
                    &summary,
                )?,
                Format::Csv => summary.cells_csv(),
            };
            emit(&cli.out, &content)
        }
        Cmd::Bounds(args) => {
            let rects = fig1_data(args.y, args.p, &args.gammas)?;
            let content = match cli.format {
                Format::Json => json_report(
                    None,
                    serde_json::json!({"y": args.y, "p": args.p, "gammas": args.gammas}),
                    &rects,
                )?,
                Format::Csv => fig1_csv(&rects),
            };
            emit(&cli.out, &content)
        }
        Cmd::Construct(args) => {
            let config = serde_json::json!({
                "y": args.y, "p": args.p, "r": args.r, "c": args.c, "tol": args.tol,
            });
            let content = match (&args.target_mean, args.target_sign) {
                (Some(z), None) => {
                    if z.len() != 2 {
                        return Err(CliError {
                            code: USAGE_EXIT,
                            msg: "--target-mean takes exactly two values: z1,z2".to_string(),
                        });
                    }
                    let built =
                        construct_mean_target(z[0], z[1], args.y, args.p, args.r, args.tol)?;
                    json_report(None, config, &built)?
                }
                (None, Some(q)) => {
                    let built = construct_sign_target(q, args.c)?;
                    json_report(None, config, built)?
                }
                _ => {
                    return Err(CliError {
                        code: USAGE_EXIT,
                        msg: "exactly one of --target-mean or --target-sign is required"
                            .to_string(),
                    })
                }
            };
            emit(&cli.out, &content)
        }
        Cmd::Classify(args) => {
            let records = load_studies(&args.input)?;
            let options = ClassifyOptions {
                tol: args.tol,
                ci_level: args.ci,
                ci_method: if args.clopper_pearson {
                    CiMethod::ClopperPearson
                } else {
                    CiMethod::Wald
                },
                participant_weighted_means: args.weighted_means,
            };
            let table = classify_studies(&records, &options)?;
            let content = match cli.format {
                Format::Json => json_report(
                    None,
                    serde_json::json!({
                        "input": args.input.display().to_string(),
                        "tol": args.tol,
                        "ci": args.ci,
                    }),
                    &table,
                )?,
                Format::Csv => table.to_csv_string(),
            };
            emit(&cli.out, &content)
        }
        Cmd::Verify(args) => {
            let suites: Vec<SuiteId> = if args.suite.eq_ignore_ascii_case("all") {
                SuiteId::all().to_vec()
            } else {
                vec![SuiteId::parse(&args.suite)?]
            };
            let mut reports = Vec::with_capacity(suites.len());
            let mut all_passed = true;
            for id in suites {
                let report = run_prop_suite_with_margin(id, seed, args.budget, args.margin)?;
                for a in &report.assertions {
                    eprintln!(
                        "[{}] {} :: {} ({})",
                        if a.pass { "PASS" } else { "FAIL" },
                        report.suite,
                        a.name,
                        a.tolerance
                    );
                }
                all_passed &= report.passed;
                reports.push(report);
            }
            let content = json_report(
                Some(seed),
                serde_json::json!({
                    "suite": args.suite,
                    "budget": args.budget,
                    "margin": args.margin,
                }),
                &reports,
            )?;
            emit(&cli.out, &content)?;
            Ok(if all_passed { 0 } else { VERIFY_EXIT })
        }
        Cmd::Figure(args) => {
            let content = match args.id.as_str() {
                "fig1" => fig1_csv(&fig1_data(30.0, 0.8, &[0.25, 0.5, 0.8, 1.0])?),
                "fig3" => {
                    let cfg = FigThreeConfig {
                        seed,
                        ..FigThreeConfig::default()
                    };
                    run_fig3(&cfg)?.pairs_csv()
                }
                other => {
                    return Err(CliError {
                        code: USAGE_EXIT,
                        msg: format!("unknown figure `{other}`; known figures: fig1, fig3"),
                    })
                }
            };
            emit(&cli.out, &content)
        }
    }
}
