//! `qgauss`: moments, norm certificates, spectra and q-sweeps for
//! polynomials in q-Gaussians.
//!
//! Exit codes: 0 success, 2 usage or input error, 3 budget exhausted
//! (results are still printed), 1 anything else.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qgauss_core::bounds::certify_norm_fixed;
use qgauss_core::numfmt::sig17;
use qgauss_core::spectra::{spectrum_estimate_with_dim, write_sweep_csv, SweepOutput};
use qgauss_core::{
    certify_norm, fock, moment_oracle, parse, sweep, Budget, Error, NcPolynomial, NormCertificate,
    SweepOptions,
};

/// Largest |q| accepted by the norm, spectrum and sweep commands.
const Q_LIMIT: f64 = 0.999;

#[derive(Parser, Debug)]
#[command(
    name = "qgauss",
    version,
    about = "Moments, certified norms and spectra of polynomials in q-Gaussians"
)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Vacuum moment tau(P).
    Moment(MomentArgs),
    /// Certified bracket for the operator norm of P.
    Norm(NormArgs),
    /// Eigenvalues of the compression of a self-adjoint P (JSON).
    Spectrum(SpectrumArgs),
    /// Norm certificates across a uniform q grid (CSV or JSON).
    Sweep(SweepArgs),
}

#[derive(Args, Debug)]
struct PolyArgs {
    /// Polynomial, e.g. "X1*X2 + X2*X1 - 0.5*X1^2".
    #[arg(long)]
    poly: String,
    /// Number of generators; may only raise the count inferred from the polynomial.
    #[arg(long)]
    d: Option<usize>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Method {
    Wick,
    Fock,
}

#[derive(Args, Debug)]
struct MomentArgs {
    #[command(flatten)]
    poly: PolyArgs,
    #[arg(long, allow_hyphen_values = true)]
    q: f64,
    #[arg(long, value_enum, default_value = "fock")]
    method: Method,
}

#[derive(Args, Debug)]
struct BudgetArgs {
    /// Highest Fock level a powered bound may reach.
    #[arg(long, default_value_t = Budget::default().max_level)]
    max_level: usize,
    /// Largest letter-type block allowed at that level.
    #[arg(long, default_value_t = Budget::default().max_block_dim)]
    max_block_dim: u128,
}

impl BudgetArgs {
    fn budget(&self) -> Budget {
        Budget {
            max_level: self.max_level,
            max_block_dim: self.max_block_dim,
        }
    }
}

#[derive(Args, Debug)]
struct NormArgs {
    #[command(flatten)]
    poly: PolyArgs,
    #[arg(long, allow_hyphen_values = true)]
    q: f64,
    /// Escalate n until upper - lower <= gap.
    #[arg(long, conflicts_with = "n")]
    gap: Option<f64>,
    /// Use a single fixed n instead of escalating.
    #[arg(long)]
    n: Option<usize>,
    #[command(flatten)]
    budget: BudgetArgs,
}

#[derive(Args, Debug)]
struct SpectrumArgs {
    #[command(flatten)]
    poly: PolyArgs,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    q: f64,
    /// Truncation level N (at least the degree of P).
    #[arg(long)]
    level: Option<usize>,
    /// Output file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    poly: PolyArgs,
    #[arg(long, allow_hyphen_values = true)]
    q_from: f64,
    #[arg(long, allow_hyphen_values = true)]
    q_to: f64,
    #[arg(long)]
    steps: usize,
    #[arg(long, default_value_t = SweepOptions::default().target_gap)]
    gap: f64,
    #[command(flatten)]
    budget: BudgetArgs,
    /// Also compute spectra at this truncation level.
    #[arg(long)]
    level: Option<usize>,
    /// Where to write the spectra (JSON array); requires --level.
    #[arg(long, requires = "level")]
    spectra_out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Output file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Budget,
    Internal(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse(_)
            | Error::QOutOfRange { .. }
            | Error::GeneratorIndex { .. }
            | Error::InvalidArgument(_)
            | Error::NotSelfAdjoint(_)
            | Error::LevelBelowDegree { .. } => Failure::Usage(e.to_string()),
            Error::Budget(_) | Error::GramNotPositive(_) => Failure::Internal(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Internal(format!("I/O error: {e}"))
    }
}

type CmdResult = Result<(), Failure>;

fn load_poly(args: &PolyArgs) -> Result<NcPolynomial, Failure> {
    let p = parse(&args.poly).map_err(|e| {
        let caret = format!("{}^", " ".repeat(e.position));
        Failure::Usage(format!("parse error: {e}\n  {}\n  {caret}", args.poly))
    })?;
    Ok(p.with_dim(args.d.unwrap_or(0)))
}

fn check_q(q: f64, limit: f64, what: &str) -> Result<(), Failure> {
    if q.is_finite() && q.abs() <= limit {
        Ok(())
    } else {
        Err(Failure::Usage(format!(
            "{what} requires |q| <= {limit}, got {q}"
        )))
    }
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run_moment(args: &MomentArgs) -> CmdResult {
    let p = load_poly(&args.poly)?;
    let value = match args.method {
        Method::Wick => {
            check_q(args.q, 1.0, "moment")?;
            moment_oracle(&p, args.q)?
        }
        Method::Fock => {
            check_q(args.q, 1.0, "moment")?;
            if args.q.abs() == 1.0 {
                return Err(Failure::Usage(
                    "the Fock engine needs |q| < 1; use --method wick at q = +-1".into(),
                ));
            }
            fock::moment_fock(&p, args.q)?
        }
    };
    println!("{}", sig17(value));
    Ok(())
}

fn print_certificate(cert: &NormCertificate) -> io::Result<()> {
    let mut out = io::stdout().lock();
    writeln!(out, "lower={}", sig17(cert.lower))?;
    writeln!(out, "upper={}", sig17(cert.upper))?;
    writeln!(out, "direct_upper={}", sig17(cert.upper_direct))?;
    writeln!(out, "n_used={}", cert.n_used)?;
    writeln!(out, "exhausted={}", cert.exhausted_budget)?;
    Ok(())
}

fn run_norm(args: &NormArgs) -> CmdResult {
    let p = load_poly(&args.poly)?;
    check_q(args.q, Q_LIMIT, "norm")?;
    let budget = args.budget.budget();
    let cert = match (args.gap, args.n) {
        (_, Some(n)) => certify_norm_fixed(&p, args.q, n, &budget)?,
        (Some(gap), None) => certify_norm(&p, args.q, gap, &budget)?,
        (None, None) => {
            return Err(Failure::Usage("norm needs either --gap or --n".into()));
        }
    };
    print_certificate(&cert)?;
    if cert.exhausted_budget {
        if let Some(r) = &cert.refusal {
            eprintln!("budget exhausted: {r}");
        }
        return Err(Failure::Budget);
    }
    Ok(())
}

fn run_spectrum(args: &SpectrumArgs) -> CmdResult {
    let p = load_poly(&args.poly)?;
    check_q(args.q, Q_LIMIT, "spectrum")?;
    if !p.is_self_adjoint() {
        return Err(Error::NotSelfAdjoint(
            p.asymmetric_terms()
                .iter()
                .map(|w| format!("{w:?}"))
                .collect::<Vec<_>>()
                .join(", "),
        )
        .into());
    }
    let level = args.level.unwrap_or_else(|| p.degree().max(8));
    let s = spectrum_estimate_with_dim(&p, args.q, level, p.dim())?;
    let mut out = output(&args.out)?;
    writeln!(out, "{}", s.to_json())?;
    out.flush()?;
    Ok(())
}

fn write_rows_json(out: &mut dyn Write, result: &SweepOutput) -> io::Result<()> {
    let rows: Vec<serde_json::Value> = result
        .rows
        .iter()
        .map(|r| {
            serde_json::json!({
                "q": r.q,
                "lower": r.lower,
                "upper": r.upper,
                "direct_upper": r.direct_upper,
                "n_used": r.n_used,
                "level_used": r.level_used,
            })
        })
        .collect();
    writeln!(
        out,
        "{}",
        serde_json::to_string_pretty(&rows).map_err(io::Error::other)?
    )
}

fn run_sweep(args: &SweepArgs) -> CmdResult {
    let p = load_poly(&args.poly)?;
    check_q(args.q_from, Q_LIMIT, "sweep")?;
    check_q(args.q_to, Q_LIMIT, "sweep")?;
    let options = SweepOptions {
        target_gap: args.gap,
        budget: args.budget.budget(),
        spectrum_level: args.level,
        d: p.dim(),
    };
    let result = sweep(&p, args.q_from, args.q_to, args.steps, &options)?;
    let mut out = output(&args.out)?;
    match args.format {
        Format::Csv => write_sweep_csv(&result.rows, &mut out)?,
        Format::Json => write_rows_json(&mut out, &result)?,
    }
    out.flush()?;
    if let (Some(path), Some(spectra)) = (&args.spectra_out, &result.spectra) {
        let mut f = BufWriter::new(File::create(path)?);
        writeln!(
            f,
            "{}",
            serde_json::to_string_pretty(spectra).map_err(io::Error::other)?
        )?;
        f.flush()?;
    }
    let exhausted = result.rows.iter().filter(|r| r.exhausted_budget).count();
    if exhausted > 0 {
        eprintln!("budget exhausted before the target gap at {exhausted} grid point(s)");
        return Err(Failure::Budget);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
        {
            eprintln!("error: could not configure {t} threads: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match &cli.command {
        Command::Moment(a) => run_moment(a),
        Command::Norm(a) => run_norm(a),
        Command::Spectrum(a) => run_spectrum(a),
        Command::Sweep(a) => run_sweep(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Budget) => ExitCode::from(3),
        Err(Failure::Internal(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
