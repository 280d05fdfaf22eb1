use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use klpath::io::{path_svg, write_histogram_csv, write_path_csv, write_series_csv};
use klpath::kloosterman::{kl_closed, kl_complete, kl_naive, partial_sums_stream, KloostermanParams};
use klpath::random_series::{series_moment_mc, series_sample_paths};
use klpath::statistics::{empirical_moment, value_histogram, MomentSpec};
use klpath::verify::{run_suite, Suite, DEFAULT_SEED};
use klpath::PrimePowerModulus;

/// Largest modulus `path` will stream.
const PATH_MAX_MODULUS: u64 = 100_000_000;

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Lib(#[from] klpath::Error),
    #[error("{0}")]
    Usage(String),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("verification failed")]
    Verification,
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Verification => 1,
            CliError::Lib(klpath::Error::UnsupportedRegime(_) | klpath::Error::PrecisionUnsupported { .. }) => 3,
            CliError::Lib(klpath::Error::ResourceLimit(_)) => 4,
            CliError::Lib(_) | CliError::Usage(_) => 2,
            CliError::Io(_) => 2,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

/// Kloosterman sums and paths modulo odd prime powers.
#[derive(Debug, Parser)]
#[command(name = "klpath", version)]
struct Cli {
    /// Worker threads (default: all logical cores).
    #[arg(long, global = true, env = "KLPATH_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate a complete normalised Kloosterman sum.
    Sum(SumArgs),
    /// Write the Kloosterman path as CSV and/or SVG.
    Path(PathArgs),
    /// Sample paths of the truncated random Fourier series.
    Series(SeriesArgs),
    /// Empirical path moment averaged over the units a.
    Moments(MomentsArgs),
    /// Run verification suites.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
struct ModulusArgs {
    #[arg(long)]
    p: u64,
    #[arg(long)]
    n: u32,
}

impl ModulusArgs {
    fn resolve(&self) -> CliResult<PrimePowerModulus> {
        Ok(PrimePowerModulus::new(self.p, self.n)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SumMethod {
    Naive,
    Closed,
    Both,
}

#[derive(Debug, Args)]
struct SumArgs {
    #[command(flatten)]
    modulus: ModulusArgs,
    #[arg(long, default_value_t = 1, allow_negative_numbers = true)]
    a: i64,
    #[arg(long, default_value_t = 1, allow_negative_numbers = true)]
    b: i64,
    #[arg(long, value_enum, default_value_t = SumMethod::Both)]
    method: SumMethod,
}

#[derive(Debug, Args)]
struct PathArgs {
    #[command(flatten)]
    modulus: ModulusArgs,
    #[arg(long, default_value_t = 1, allow_negative_numbers = true)]
    a: i64,
    #[arg(long, default_value_t = 1, allow_negative_numbers = true)]
    b: i64,
    /// CSV output file; without --csv or --svg the CSV goes to stdout.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SeriesArgs {
    /// Truncation order H.
    #[arg(long = "H", short = 'H', default_value_t = 1024)]
    h_max: usize,
    #[arg(long, default_value_t = 16)]
    samples: usize,
    /// Number of equally spaced times in [0, 1], endpoints included.
    #[arg(long, default_value_t = 257)]
    grid: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct MomentsArgs {
    #[command(flatten)]
    modulus: ModulusArgs,
    #[arg(long, default_value_t = 1)]
    b0: u64,
    /// Strictly increasing times in [0, 1].
    #[arg(long, value_delimiter = ',', default_value = "1")]
    t: Vec<f64>,
    /// Powers of the conjugate, one per time (default all 0).
    #[arg(long, value_delimiter = ',')]
    conj: Vec<u32>,
    /// Powers, one per time.
    #[arg(long, value_delimiter = ',', default_value = "2")]
    powers: Vec<u32>,
    /// Use the step function instead of the interpolated path.
    #[arg(long)]
    step: bool,
    /// Also estimate the same moment for the random series with this many samples.
    #[arg(long)]
    series_samples: Option<usize>,
    #[arg(long = "H", short = 'H', default_value_t = 1024)]
    h_max: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Write `value,count` of the complete sums Kl(a, b0) to this file.
    #[arg(long)]
    histogram: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long, default_value = "all", value_parser = parse_suite)]
    suite: Suite,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Print the reports as one JSON document instead of summary lines.
    #[arg(long)]
    json: bool,
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    s.parse().map_err(|e: klpath::Error| e.to_string())
}

fn print_json(value: &Value) -> CliResult<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value).map_err(io::Error::from)?;
    writeln!(out)?;
    Ok(())
}

fn output(path: Option<&PathBuf>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn cmd_sum(args: &SumArgs, threads: usize) -> CliResult<()> {
    let m = args.modulus.resolve()?;
    let params = KloostermanParams::new(m, args.a, args.b);
    let started = Instant::now();
    let closed = match args.method {
        SumMethod::Naive => None,
        _ => Some(kl_closed(&params)?),
    };
    let naive = match args.method {
        SumMethod::Closed => None,
        _ => Some(kl_naive(&params)),
    };
    let mut report = json!({
        "config": {
            "command": "sum", "p": m.p(), "n": m.n(), "a": args.a, "b": args.b,
            "method": format!("{:?}", args.method).to_lowercase(), "threads": threads,
        },
        "q": m.q(),
    });
    if let Some(v) = closed {
        report["closed"] = json!(v);
    }
    if let Some(z) = naive {
        report["naive"] = json!({ "re": z.re, "im": z.im });
    }
    if let (Some(c), Some(z)) = (closed, naive) {
        report["max_abs_diff"] = json!((c - z.re).abs().max(z.im.abs()));
    }
    report["seconds"] = json!(started.elapsed().as_secs_f64());
    print_json(&report)
}

fn cmd_path(args: &PathArgs, threads: usize) -> CliResult<()> {
    let m = args.modulus.resolve()?;
    if m.q() > PATH_MAX_MODULUS {
        return Err(klpath::Error::ResourceLimit(format!(
            "path output limited to q <= {PATH_MAX_MODULUS}"
        ))
        .into());
    }
    let params = KloostermanParams::new(m, args.a, args.b);
    let started = Instant::now();
    let points: Vec<_> = partial_sums_stream(&params)?.collect();
    let config = json!({
        "command": "path", "p": m.p(), "n": m.n(), "a": args.a, "b": args.b,
        "csv": args.csv, "svg": args.svg, "threads": threads,
    });
    if args.csv.is_none() && args.svg.is_none() {
        let mut out = output(None)?;
        writeln!(out, "# {config}")?;
        write_path_csv(&mut out, &points)?;
        out.flush()?;
        return Ok(());
    }
    if let Some(path) = &args.csv {
        let mut out = output(Some(path))?;
        write_path_csv(&mut out, &points)?;
        out.flush()?;
    }
    if let Some(path) = &args.svg {
        let vertices: Vec<(f64, f64)> = points.iter().map(|p| (p.value.re, p.value.im)).collect();
        std::fs::write(path, path_svg(&vertices))?;
    }
    let end = points.last().map(|p| p.value).unwrap_or_default();
    print_json(&json!({
        "config": config,
        "vertices": points.len(),
        "endpoint": { "re": end.re, "im": end.im },
        "seconds": started.elapsed().as_secs_f64(),
    }))
}

fn cmd_series(args: &SeriesArgs) -> CliResult<()> {
    if args.h_max == 0 || args.samples == 0 || args.grid == 0 {
        return Err(CliError::Usage("--H, --samples and --grid must be at least 1".into()));
    }
    let grid: Vec<f64> = if args.grid == 1 {
        vec![1.0]
    } else {
        (0..args.grid).map(|i| i as f64 / (args.grid - 1) as f64).collect()
    };
    let paths = series_sample_paths(&grid, args.h_max, args.samples, args.seed);
    let mut out = output(args.out.as_ref())?;
    write_series_csv(&mut out, &grid, &paths, args.seed, args.h_max, args.samples)?;
    out.flush()?;
    Ok(())
}

fn cmd_moments(args: &MomentsArgs, threads: usize) -> CliResult<()> {
    let m = args.modulus.resolve()?;
    let conj = if args.conj.is_empty() {
        vec![0; args.t.len()]
    } else {
        args.conj.clone()
    };
    let spec = MomentSpec::new(args.t.clone(), conj.clone(), args.powers.clone(), args.b0)?;
    let started = Instant::now();
    let value = empirical_moment(&spec, &m, args.step)?;
    let mut report = json!({
        "config": {
            "command": "moments", "p": m.p(), "n": m.n(), "b0": args.b0, "t": args.t,
            "conj": conj, "powers": args.powers, "step": args.step,
            "series_samples": args.series_samples, "H": args.h_max, "seed": args.seed,
            "histogram": args.histogram, "threads": threads,
        },
        "value": { "re": value.re, "im": value.im },
    });
    if let Some(samples) = args.series_samples {
        if samples == 0 || args.h_max == 0 {
            return Err(CliError::Usage("--series-samples and --H must be at least 1".into()));
        }
        let mc = series_moment_mc(&spec.t, &spec.conj_powers, &spec.powers, args.h_max, samples, args.seed);
        report["series"] = json!({
            "re": mc.mean.re, "im": mc.mean.im, "std_error": mc.std_error, "samples": mc.samples,
        });
    }
    if let Some(path) = &args.histogram {
        let values: Vec<f64> = m
            .units()
            .map(|a| kl_complete(&KloostermanParams::new(m, a as i64, args.b0 as i64)))
            .collect();
        let mut out = output(Some(path))?;
        write_histogram_csv(&mut out, &value_histogram(&values))?;
        out.flush()?;
    }
    report["seconds"] = json!(started.elapsed().as_secs_f64());
    print_json(&report)
}

fn cmd_verify(args: &VerifyArgs, threads: usize) -> CliResult<()> {
    let reports = run_suite(args.suite, args.seed)?;
    let pass = reports.iter().all(|r| r.pass);
    if args.json {
        print_json(&json!({
            "config": { "command": "verify", "suite": args.suite.name(), "seed": args.seed, "threads": threads },
            "pass": pass,
            "reports": reports,
        }))?;
    } else {
        println!("# suite={} seed={} threads={threads}", args.suite, args.seed);
        for r in &reports {
            println!("{}", r.summary_line());
        }
    }
    if pass {
        Ok(())
    } else {
        Err(CliError::Verification)
    }
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let threads = rayon::current_num_threads();
    match &cli.command {
        Command::Sum(args) => cmd_sum(args, threads),
        Command::Path(args) => cmd_path(args, threads),
        Command::Series(args) => cmd_series(args),
        Command::Moments(args) => cmd_moments(args, threads),
        Command::Verify(args) => cmd_verify(args, threads),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if !matches!(e, CliError::Verification) {
                eprintln!("error: {e}");
            }
            ExitCode::from(e.exit_code())
        }
    }
}
