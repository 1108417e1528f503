//! Command-line front end for the `quasiprob` library.
//!
//! Subcommands: `eprb-sweep` writes the planar EPRB sweep as CSV,
//! `viability` decides whether a probability can match a quasi-distribution's
//! positive marginals, `match` solves a marginal-matching problem directly,
//! `fine` evaluates the CHSH or three-variable Bell inequalities, and
//! `diosi-demo` exhibits a linear-positivity failure on a product state.
//!
//! Exit codes separate scientific verdicts from failures: 0 for success
//! (including an Unknown viability status, which is a refusal rather than a
//! verdict), 2 for a negative verdict (non-viable, infeasible, an inequality
//! FAIL, or no counterexample found), and 1 for errors of any kind. Console
//! numbers are printed at 12 significant digits; JSON artifacts keep full
//! precision so they re-validate exactly when read back.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use quasiprob::fine::{bell_satisfied, bell_values, chsh_satisfied, chsh_values};
use quasiprob::viability::viability_test;
use quasiprob::{composite, eprb, sig12};
use quasiprob::{BellInput, ChshInput, MatchingProblem, Mode, QuasiDistribution, Status, Verdict};

/// Exit code for negative scientific verdicts, as opposed to crashes.
const VERDICT_EXIT: u8 = 2;

#[derive(Parser)]
#[command(
    name = "quasiprob",
    version,
    about = "Quasi-probability viability toolkit"
)]
struct Cli {
    /// Numeric tolerance for verdicts and verification.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,

    /// Seed for randomized sampling. Accepted for reproducibility plumbing;
    /// every current subcommand is deterministic and ignores it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Write the primary output to this file instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep the planar EPRB configuration over theta and emit the CSV table.
    EprbSweep(SweepArgs),
    /// Report whether a probability exists matching a quasi-distribution's
    /// nonnegative marginals.
    Viability(ViabilityArgs),
    /// Solve a marginal-matching feasibility problem given as JSON.
    Match(MatchArgs),
    /// Evaluate the CHSH inequalities (or, with --bell, the three-variable
    /// Bell inequalities) for given pair correlators.
    Fine(FineArgs),
    /// Search a direction grid for two strings that are linearly positive
    /// per subsystem while their product is not.
    DiosiDemo(DiosiArgs),
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct SweepArgs {
    /// Lower end of the theta grid.
    #[arg(long, default_value_t = 0.0)]
    theta_min: f64,

    /// Upper end of the theta grid.
    #[arg(long, default_value_t = std::f64::consts::TAU)]
    theta_max: f64,

    /// Number of grid points, endpoints included (at least 2).
    #[arg(long, default_value_t = 1000)]
    steps: usize,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    /// Use the maximal nonnegative marginals of the input itself.
    AllPositive,
    /// Use the subset family from --subsets.
    Specified,
}

#[derive(Args)]
struct ViabilityArgs {
    /// Path to the quasi-distribution JSON
    /// ({"variables":[{"label":..,"arity":..},..],"values":[..]}).
    #[arg(long)]
    input: PathBuf,

    /// Path to a JSON list of marginal subsets (0-based variable indices),
    /// for example [[0,2],[1,3]].
    #[arg(long)]
    subsets: Option<PathBuf>,

    /// Marginal family selection; defaults to specified when --subsets is
    /// given and all-positive otherwise.
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,

    /// Also write the report JSON to this file.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct MatchArgs {
    /// Path to the problem JSON
    /// ({"space":{..},"targets":[{"subset":[..],"values":[..]},..],
    /// "zero_support":[[..],..]}).
    #[arg(long)]
    input: PathBuf,

    /// Write the feasible witness distribution JSON here.
    #[arg(long)]
    witness_out: Option<PathBuf>,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct FineArgs {
    /// Check the three-variable Bell form instead of CHSH.
    #[arg(long)]
    bell: bool,

    /// Pair correlator C12 (Bell form only).
    #[arg(long)]
    c12: Option<f64>,

    /// Pair correlator C13.
    #[arg(long)]
    c13: Option<f64>,

    /// Pair correlator C14 (CHSH form only).
    #[arg(long)]
    c14: Option<f64>,

    /// Pair correlator C23.
    #[arg(long)]
    c23: Option<f64>,

    /// Pair correlator C24 (CHSH form only).
    #[arg(long)]
    c24: Option<f64>,
}

#[derive(Args)]
struct DiosiArgs {
    /// Polar grid resolution; the azimuthal resolution is twice this.
    #[arg(long, default_value_t = 12)]
    grid: usize,

    /// Minimum size of the product-trace violation to report.
    #[arg(long, default_value_t = 1e-3)]
    min_violation: f64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Usage errors go to stderr and exit 1; --help and --version go
            // to stdout and exit 0.
            let failed = err.use_stderr();
            let _ = err.print();
            return if failed {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    if cli.tol.is_nan() || cli.tol <= 0.0 {
        bail!("--tol must be a positive number, got {}", cli.tol);
    }
    let out = cli.out.as_deref();
    match cli.command {
        Command::EprbSweep(args) => run_sweep(&args, cli.tol, out),
        Command::Viability(args) => run_viability(&args, cli.tol, out),
        Command::Match(args) => run_match(&args, cli.tol, out),
        Command::Fine(args) => run_fine(&args, cli.tol, out),
        Command::DiosiDemo(args) => run_diosi(&args, out),
    }
}

/// Writes a fully materialized artifact to `--out` or standard output.
/// Building the text first keeps runs byte-identical either way.
fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => write_file(path, text),
        None => {
            std::io::stdout()
                .write_all(text.as_bytes())
                .context("writing to standard output")?;
            Ok(())
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("cannot parse {}", path.display()))
}

fn pretty_json<T: serde::Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value).context("serializing report")?;
    text.push('\n');
    Ok(text)
}

fn run_sweep(args: &SweepArgs, tol: f64, out: Option<&Path>) -> Result<ExitCode> {
    let rows = eprb::sweep(args.theta_min, args.theta_max, args.steps, tol)?;
    let mut csv = Vec::new();
    eprb::write_sweep_csv(&rows, &mut csv).context("formatting CSV")?;
    let text = String::from_utf8(csv).expect("CSV output is ASCII");
    emit(out, &text)?;
    Ok(ExitCode::SUCCESS)
}

fn run_viability(args: &ViabilityArgs, tol: f64, out: Option<&Path>) -> Result<ExitCode> {
    let q: QuasiDistribution = read_json(&args.input)?;
    let subsets: Option<Vec<Vec<usize>>> = match &args.subsets {
        Some(path) => Some(read_json(path)?),
        None => None,
    };
    let mode = match (args.mode, subsets) {
        (Some(ModeArg::AllPositive), Some(_)) => {
            bail!("--subsets has no effect with --mode all-positive; drop one of the two")
        }
        (Some(ModeArg::Specified), None) => {
            bail!("--mode specified requires --subsets")
        }
        (Some(ModeArg::Specified) | None, Some(subsets)) => Mode::Specified(subsets),
        (Some(ModeArg::AllPositive) | None, None) => Mode::AllPositive,
    };
    let report = viability_test(&q, mode, tol)?;
    let text = pretty_json(&report)?;
    emit(out, &text)?;
    if let Some(path) = &args.report {
        write_file(path, &text)?;
    }
    Ok(match report.status {
        Status::Viable | Status::Unknown => ExitCode::SUCCESS,
        Status::NonViable => ExitCode::from(VERDICT_EXIT),
    })
}

fn run_match(args: &MatchArgs, tol: f64, out: Option<&Path>) -> Result<ExitCode> {
    let problem: MatchingProblem = read_json(&args.input)?;
    let result = problem.solve(tol)?;
    let summary = serde_json::json!({
        "verdict": result.verdict,
        "phase1_objective": result.phase1_objective,
        "residual": result.residual,
        "numerically_marginal": result.numerically_marginal,
    });
    emit(out, &pretty_json(&summary)?)?;
    if let (Some(witness), Some(path)) = (&result.witness, &args.witness_out) {
        write_file(path, &pretty_json(witness)?)?;
    }
    Ok(match result.verdict {
        Verdict::Feasible => ExitCode::SUCCESS,
        Verdict::Infeasible => ExitCode::from(VERDICT_EXIT),
    })
}

fn require(value: Option<f64>, flag: &str, form: &str) -> Result<f64> {
    value.with_context(|| format!("{flag} is required for the {form} form"))
}

fn run_fine(args: &FineArgs, tol: f64, out: Option<&Path>) -> Result<ExitCode> {
    let (labels, values, ok) = if args.bell {
        if args.c14.is_some() || args.c24.is_some() {
            bail!("--c14/--c24 do not apply to --bell, which uses --c12 --c13 --c23");
        }
        let input = BellInput {
            c12: require(args.c12, "--c12", "Bell")?,
            c13: require(args.c13, "--c13", "Bell")?,
            c23: require(args.c23, "--c23", "Bell")?,
        };
        (
            ["B1", "B2", "B3", "B4"],
            bell_values(&input)?,
            bell_satisfied(&input, tol)?,
        )
    } else {
        if args.c12.is_some() {
            bail!("--c12 applies only to --bell; the CHSH form uses --c13 --c14 --c23 --c24");
        }
        let input = ChshInput {
            c13: require(args.c13, "--c13", "CHSH")?,
            c14: require(args.c14, "--c14", "CHSH")?,
            c23: require(args.c23, "--c23", "CHSH")?,
            c24: require(args.c24, "--c24", "CHSH")?,
        };
        (
            ["S1", "S2", "S3", "S4"],
            chsh_values(&input)?,
            chsh_satisfied(&input, tol),
        )
    };
    let mut text = String::new();
    for (label, value) in labels.iter().zip(values) {
        writeln!(text, "{label} = {}", sig12(value)).expect("writing to a String cannot fail");
    }
    writeln!(text, "{}", if ok { "PASS" } else { "FAIL" })
        .expect("writing to a String cannot fail");
    emit(out, &text)?;
    Ok(if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(VERDICT_EXIT)
    })
}

fn format_direction(d: [f64; 3]) -> String {
    format!("({}, {}, {})", sig12(d[0]), sig12(d[1]), sig12(d[2]))
}

fn run_diosi(args: &DiosiArgs, out: Option<&Path>) -> Result<ExitCode> {
    let demo = composite::diosi_demo(2 * args.grid, args.grid, args.min_violation)?;
    let Some(result) = demo else {
        emit(
            out,
            "no counterexample at this grid resolution and violation threshold\n",
        )?;
        return Ok(ExitCode::from(VERDICT_EXIT));
    };
    let c = result.counterexample;
    let mut text = String::new();
    let mut line = |s: String| writeln!(text, "{s}").expect("writing to a String cannot fail");
    line(format!("Re z_A = {}", sig12(c.re_a)));
    line(format!("Re z_B = {}", sig12(c.re_b)));
    line(format!("Re(z_A z_B) = {}", sig12(c.re_product)));
    line(format!("u_A = {}", format_direction(result.u_a)));
    line(format!("v_A = {}", format_direction(result.v_a)));
    line(format!("u_B = {}", format_direction(result.u_b)));
    line(format!("v_B = {}", format_direction(result.v_b)));
    emit(out, &text)?;
    Ok(ExitCode::SUCCESS)
}
