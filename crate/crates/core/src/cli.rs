//! The `utf` command line tool.
//!
//! Machine-readable JSON goes to stdout (or to `--out` / `--report` files);
//! diagnostics and summaries go to stderr. Exit codes: 0 success, 1 a
//! verification check failed, 2 bad input (arguments, files, functions,
//! contours), 3 numerical breakdown (non-convergence, singular resolvents).

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::decomp::decompose;
use crate::error::{Error, Result};
use crate::generate::{commuting_pair, near_defective, rng, spectral, triangular, Kind};
use crate::holo::{calc_contour, calc_triangular, contour_for, parse, Contour, DEFAULT_NODES};
use crate::io::{matrix_to_json, read_matrix, write_text};
use crate::linalg::{eigenvalues, Matrix, OrderingTag};
use crate::tracial::{brown_measure, fk_determinant, BrownMeasure};
use crate::verify::{run_suite, Config, Status};

#[derive(Parser, Debug)]
#[command(name = "utf", version, about = "Upper triangular forms, Brown measures and holomorphic calculus")]
pub struct Cli {
    /// Multiplies every default verification tolerance.
    #[arg(long, global = true, default_value_t = 1.0)]
    pub tol_scale: f64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write a seeded random instance.
    Gen(GenArgs),
    /// Split a matrix into its normal and nilpotent parts.
    Decompose(DecomposeArgs),
    /// Apply a holomorphic function to a matrix.
    Calc(CalcArgs),
    /// Run every check against a matrix and write a report.
    Verify(VerifyArgs),
    /// Print the Brown measure and Fuglede-Kadison determinant.
    Brown(BrownArgs),
}

#[derive(Args, Debug)]
pub struct Seed {
    /// Root seed; falls back to UTF_SEED, then 0.
    #[arg(long, env = "UTF_SEED", default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct GenArgs {
    /// triangular, spectral, commuting-pair or near-defective.
    pub kind: Kind,
    #[arg(long)]
    pub n: usize,
    #[command(flatten)]
    pub seed: Seed,
    /// Output file. For commuting-pair, N goes here and Q to the sibling
    /// file with `-q` appended to the stem.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct DecomposeArgs {
    pub input: PathBuf,
    /// Eigenvalue order along the flag: modulus or real-imag.
    #[arg(long, default_value = "modulus")]
    pub order: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Contour,
    Schur,
    Both,
}

#[derive(Args, Debug)]
pub struct CalcArgs {
    pub input: PathBuf,
    /// Function of `z`, for example "exp(z)" or "1/(z-3)".
    #[arg(long = "fn")]
    pub function: String,
    #[arg(long, value_enum, default_value_t = Method::Schur)]
    pub method: Method,
    /// Quadrature nodes per circle.
    #[arg(long, default_value_t = DEFAULT_NODES)]
    pub nodes: usize,
    /// Contour as inline JSON or a path to a JSON file; chosen automatically
    /// when absent.
    #[arg(long)]
    pub contour: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    pub input: PathBuf,
    #[arg(long = "fn")]
    pub function: String,
    #[command(flatten)]
    pub seed: Seed,
    #[arg(long, default_value_t = DEFAULT_NODES)]
    pub nodes: usize,
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Leave wall-clock timings out of the report.
    #[arg(long)]
    pub omit_timings: bool,
}

#[derive(Args, Debug)]
pub struct BrownArgs {
    pub input: PathBuf,
}

/// Exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NonConvergence { .. } | Error::SingularResolvent { .. } | Error::SingularMatrix { .. } => 3,
        _ => 2,
    }
}

/// Output of a command: stdout text and the exit code.
pub struct Outcome {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

impl Outcome {
    fn ok(stdout: String, stderr: String) -> Self {
        Self { stdout, stderr, code: 0 }
    }
}

fn emit(out: Option<&Path>, json: String) -> Result<String> {
    match out {
        Some(path) => {
            write_text(path, &json)?;
            Ok(String::new())
        }
        None => Ok(json + "\n"),
    }
}

/// `dir/stem-q.ext` next to `path`.
pub fn sibling_q(path: &Path) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}-q.{}", ext.to_string_lossy()),
        None => format!("{stem}-q"),
    };
    path.with_file_name(name)
}

fn cmd_gen(args: &GenArgs) -> Result<Outcome> {
    if args.n < 2 {
        return Err(Error::InvalidInput(format!("n must be at least 2, got {}", args.n)));
    }
    let mut r = rng(args.seed.seed);
    let matrix = match args.kind {
        Kind::Triangular => triangular(&mut r, args.n).matrix,
        Kind::Spectral => spectral(&mut r, args.n).matrix,
        Kind::NearDefective => near_defective(&mut r, args.n).matrix,
        Kind::CommutingPair => {
            let (n, q, _) = commuting_pair(&mut r, args.n);
            return match &args.out {
                Some(path) => {
                    write_text(path, &matrix_to_json(&n))?;
                    let q_path = sibling_q(path);
                    write_text(&q_path, &matrix_to_json(&q))?;
                    Ok(Outcome::ok(String::new(), format!("wrote {} and {}\n", path.display(), q_path.display())))
                }
                None => {
                    #[derive(Serialize)]
                    struct Pair<'a> {
                        #[serde(rename = "N")]
                        n: &'a Matrix,
                        #[serde(rename = "Q")]
                        q: &'a Matrix,
                    }
                    let json = serde_json::to_string(&Pair { n: &n, q: &q })?;
                    Ok(Outcome::ok(json + "\n", String::new()))
                }
            };
        }
    };
    Ok(Outcome::ok(emit(args.out.as_deref(), matrix_to_json(&matrix))?, String::new()))
}

fn cmd_decompose(args: &DecomposeArgs) -> Result<Outcome> {
    let t = read_matrix(&args.input)?;
    let order = OrderingTag::from_name(&args.order)
        .ok_or_else(|| Error::InvalidInput(format!("unknown order `{}`", args.order)))?;
    let d = decompose(&t, order)?;
    let q_form = d.q_part.compress(d.flag.basis());
    let radius = q_form.diag().iter().map(|z| z.norm()).fold(0.0, f64::max);
    let atoms = brown_measure(&d.n_part)?.atoms().len();
    let summary = format!(
        "||Q||_F = {:.6e}, spectral radius of Q = {:.3e}, ||N||_F = {:.6e}, Brown atoms = {atoms}\n",
        d.q_part.norm_fro(),
        radius,
        d.n_part.norm_fro()
    );
    let json = serde_json::to_string(&d)?;
    Ok(Outcome::ok(emit(args.out.as_deref(), json)?, summary))
}

fn load_contour(spec: &str) -> Result<Contour> {
    let text = if spec.trim_start().starts_with('{') {
        spec.to_string()
    } else {
        std::fs::read_to_string(spec)?
    };
    Contour::from_json(&text)
}

fn cmd_calc(args: &CalcArgs) -> Result<Outcome> {
    let h = parse(&args.function)?;
    let t = read_matrix(&args.input)?;
    let contour = || -> Result<Contour> {
        match &args.contour {
            Some(spec) => load_contour(spec),
            None => contour_for(&[&t], &h, args.nodes),
        }
    };
    let mut stderr = String::new();
    let result = match args.method {
        Method::Schur => calc_triangular(&t, &h)?,
        Method::Contour => calc_contour(&t, &h, &contour()?)?,
        Method::Both => {
            let schur = calc_triangular(&t, &h)?;
            let quad = calc_contour(&t, &h, &contour()?)?;
            let residual = quad.rel_dist(&schur, 1.0);
            writeln!(stderr, "cross-method residual = {residual:.3e}").ok();
            schur
        }
    };
    Ok(Outcome::ok(emit(args.out.as_deref(), matrix_to_json(&result))?, stderr))
}

fn cmd_verify(args: &VerifyArgs, tol_scale: f64) -> Result<Outcome> {
    let h = parse(&args.function)?;
    let t = read_matrix(&args.input)?;
    if !(tol_scale > 0.0 && tol_scale.is_finite()) {
        return Err(Error::InvalidInput(format!("--tol-scale must be positive, got {tol_scale}")));
    }
    // h must be usable on T before any check runs
    let d = decompose(&t, OrderingTag::ModulusArgument)?;
    contour_for(&[&t, &d.n_part], &h, args.nodes)?;
    let cfg = Config {
        tol_scale,
        nodes: args.nodes,
        ..Config::default()
    };
    let mut report = run_suite(&t, &h, &cfg, args.seed.seed);
    if args.omit_timings {
        report = report.without_timings();
    }
    let mut stderr = String::new();
    for c in &report.checks {
        writeln!(stderr, "{}", c.summary()).ok();
    }
    let failed = report.checks.iter().filter(|c| c.status() == Status::Failed).count();
    writeln!(stderr, "{} checks, {failed} failed", report.checks.len()).ok();
    let stdout = emit(args.report.as_deref(), report.to_json())?;
    Ok(Outcome {
        stdout,
        stderr,
        code: if failed == 0 { 0 } else { 1 },
    })
}

#[derive(Serialize)]
struct BrownOutput<'a> {
    brown_measure: &'a BrownMeasure,
    fk_determinant: f64,
}

fn cmd_brown(args: &BrownArgs) -> Result<Outcome> {
    let t = read_matrix(&args.input)?;
    let mu = brown_measure(&t)?;
    let delta = fk_determinant(&t)?;
    let json = serde_json::to_string(&BrownOutput {
        brown_measure: &mu,
        fk_determinant: delta,
    })?;
    let spectrum = eigenvalues(&t)?;
    let stderr = format!("{} eigenvalues, {} atoms, Delta = {delta:.8}\n", spectrum.len(), mu.atoms().len());
    Ok(Outcome::ok(json + "\n", stderr))
}

/// Runs a parsed command line.
pub fn execute(cli: &Cli) -> Outcome {
    let result = match &cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Decompose(a) => cmd_decompose(a),
        Command::Calc(a) => cmd_calc(a),
        Command::Verify(a) => cmd_verify(a, cli.tol_scale),
        Command::Brown(a) => cmd_brown(a),
    };
    result.unwrap_or_else(|e| Outcome {
        stdout: String::new(),
        stderr: format!("error: {e}\n"),
        code: exit_code(&e),
    })
}

/// Entry point for the binary. Returns the process exit code.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            e.print().ok();
            return code;
        }
    };
    let outcome = execute(&cli);
    print!("{}", outcome.stdout);
    eprint!("{}", outcome.stderr);
    outcome.code
}
