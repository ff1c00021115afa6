use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use sigforge::bounds::{binary_tsc_bound, welch_bound, BoundTable};
use sigforge::harness::{
    emit_report, one_shot_experiment, parse_report, upscale_chain, AuditMode, ChainReport, HarnessOptions,
    Method, Report, ReportFormat,
};
use sigforge::sigcore::{hadamard_set, load_set, save_set, tsc};

const EXIT_VALIDATION: u8 = 2;
const EXIT_INTERNAL: u8 = 3;

#[derive(Parser)]
#[command(name = "sigforge", version, about = "Optimal upward scaling of minimum-TSC binary signature sets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print K, L, TSC and bounds of a set file
    Tsc { set: PathBuf },
    /// Evaluate the Welch and binary TSC bounds
    Bound {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        l: usize,
        /// Binary bound case table (TOML)
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// Add one signature to a set
    Extend {
        set: PathBuf,
        #[command(flatten)]
        run: RunArgs,
        /// Write the extended set here
        #[arg(long)]
        save_set: Option<PathBuf>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Add signatures one at a time up to a target size
    Chain {
        #[arg(required_unless_present = "hadamard", conflicts_with = "hadamard")]
        set: Option<PathBuf>,
        /// Start from the Sylvester Hadamard set of this order
        #[arg(long)]
        hadamard: Option<usize>,
        /// Target number of signatures
        #[arg(long)]
        to: usize,
        #[command(flatten)]
        run: RunArgs,
        /// Write the final set here
        #[arg(long)]
        save_set: Option<PathBuf>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Compare all methods on one extension of each set
    Compare {
        sets: Vec<PathBuf>,
        #[arg(long)]
        table: Option<PathBuf>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Re-emit a saved JSON report
    Report {
        input: PathBuf,
        #[arg(long, value_enum)]
        format: FormatArg,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_enum, default_value = "sd")]
    method: MethodArg,
    /// Cross-check every step against exhaustive search
    #[arg(long, conflicts_with = "no_audit")]
    audit: bool,
    #[arg(long)]
    no_audit: bool,
    #[arg(long)]
    table: Option<PathBuf>,
}

#[derive(Args)]
struct OutputArgs {
    /// Machine-readable output format; prints a summary when omitted
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Write the report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Sd,
    Ml,
    Quant,
    Descent,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::Sd => Method::Sd,
            MethodArg::Ml => Method::Ml,
            MethodArg::Quant => Method::Quant,
            MethodArg::Descent => Method::Descent,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

impl From<FormatArg> for ReportFormat {
    fn from(f: FormatArg) -> ReportFormat {
        match f {
            FormatArg::Json => ReportFormat::Json,
            FormatArg::Csv => ReportFormat::Csv,
        }
    }
}

/// Failure carrying the process exit code.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl From<sigforge::Error> for Failure {
    fn from(e: sigforge::Error) -> Self {
        let code = if e.is_internal() { EXIT_INTERNAL } else { EXIT_VALIDATION };
        Failure { code, error: e.into() }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        Failure { code: EXIT_VALIDATION, error }
    }
}

fn options(table: Option<&Path>, run: Option<&RunArgs>) -> Result<HarnessOptions, Failure> {
    let mut opts = HarnessOptions::from_env()?;
    if let Some(path) = table {
        opts.bound_table = Some(BoundTable::load(path)?);
    }
    if let Some(run) = run {
        opts.audit = match (run.audit, run.no_audit) {
            (true, _) => AuditMode::On,
            (_, true) => AuditMode::Off,
            _ => AuditMode::Auto,
        };
    }
    Ok(opts)
}

fn write_output(report: &Report, output: &OutputArgs) -> Result<bool, Failure> {
    let format = match (output.format, &output.out) {
        (Some(f), _) => f.into(),
        (None, Some(path)) if path.extension().is_some_and(|e| e == "csv") => ReportFormat::Csv,
        (None, Some(_)) => ReportFormat::Json,
        (None, None) => return Ok(false),
    };
    let bytes = emit_report(report, format)?;
    match &output.out {
        Some(path) => fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))?,
        None => {
            use std::io::Write;
            std::io::stdout().write_all(&bytes).context("writing report to stdout")?;
        }
    }
    Ok(true)
}

fn print_chain(report: &ChainReport) {
    println!(
        "start {} (K={}, L={}, TSC={}) method={}",
        report.initial.source, report.initial.k, report.initial.l, report.initial.tsc, report.method
    );
    println!("{:>5} {:>10} {:>8} {:>10} {:>10} {:>8} {:>8}", "K+1", "TSC", "metric", "radius", "welch", "nodes", "audit");
    for r in &report.records {
        let audit = match r.audit {
            Some(a) if a.agrees => "ok".to_string(),
            Some(a) => format!("ML={}", a.ml_metric),
            None => "-".to_string(),
        };
        println!(
            "{:>5} {:>10} {:>8} {:>10} {:>10} {:>8} {:>8}",
            r.k_before + 1,
            r.tsc_after,
            r.metric,
            r.radius_c,
            r.welch_after.value,
            r.nodes_visited,
            audit
        );
    }
}

fn finish_chain(report: ChainReport, save: Option<&Path>, initial: &sigforge::SignatureSet, output: &OutputArgs) -> Result<(), Failure> {
    if let Some(path) = save {
        save_set(&report.final_set(initial)?, path)?;
    }
    let agree = report.all_agree();
    let wrapped = Report::Chain(report);
    if !write_output(&wrapped, output)? {
        let Report::Chain(c) = &wrapped else { unreachable!("built above") };
        print_chain(c);
    }
    if !agree {
        return Err(Failure {
            code: EXIT_INTERNAL,
            error: anyhow::anyhow!("sphere search disagreed with exhaustive search in audit mode"),
        });
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Tsc { set } => {
            let s = load_set(&set)?;
            let (k, l) = (s.size(), s.signature_len());
            println!("K={k} L={l} TSC={}", tsc(&s));
            println!("welch_bound={}", welch_bound(k, l).value);
            if let Ok(b) = binary_tsc_bound(k, l, None) {
                println!("binary_bound={} ({})", b.value, b.kind);
            }
        }
        Command::Bound { k, l, table } => {
            if k == 0 || l == 0 {
                return Err(anyhow::anyhow!("K and L must be positive").into());
            }
            let table = table.map(BoundTable::load).transpose()?;
            println!("welch_bound={}", welch_bound(k, l).value);
            let b = binary_tsc_bound(k, l, table.as_ref())?;
            println!("binary_bound={} ({})", b.value, b.kind);
        }
        Command::Extend { set, run, save_set: save, output } => {
            let initial = load_set(&set)?;
            let opts = options(run.table.as_deref(), Some(&run))?;
            let source = set.display().to_string();
            let report = upscale_chain(&initial, &source, initial.size() + 1, run.method.into(), &opts)?;
            if output.format.is_none() && output.out.is_none() {
                println!("{}", report.records[0].signature);
            }
            finish_chain(report, save.as_deref(), &initial, &output)?;
        }
        Command::Chain { set, hadamard, to, run, save_set: save, output } => {
            let (initial, source) = match (set, hadamard) {
                (Some(path), _) => (load_set(&path)?, path.display().to_string()),
                (None, Some(l)) => (hadamard_set(l)?, format!("hadamard-{l}")),
                (None, None) => unreachable!("clap requires one of the two"),
            };
            let opts = options(run.table.as_deref(), Some(&run))?;
            let report = upscale_chain(&initial, &source, to, run.method.into(), &opts)?;
            finish_chain(report, save.as_deref(), &initial, &output)?;
        }
        Command::Compare { sets, table, output } => {
            let opts = options(table.as_deref(), None)?;
            let report = one_shot_experiment(&sets, &opts);
            let (internal, failed) = (report.has_internal_errors(), report.has_errors());
            let wrapped = Report::Comparison(report);
            if !write_output(&wrapped, &output)? {
                let Report::Comparison(c) = &wrapped else { unreachable!("built above") };
                println!(
                    "{:<24} {:>5} {:>8} {:>8} {:>8} {:>8} {:>8}",
                    "source", "K+1", "quant", "descent*", "SD", "ML", "SD-bound"
                );
                for e in &c.entries {
                    match (&e.row, &e.error) {
                        (Some(r), _) => println!(
                            "{:<24} {:>5} {:>8} {:>8} {:>8} {:>8} {:>8}",
                            e.source,
                            r.k_after,
                            r.tsc_quant,
                            r.tsc_descent,
                            r.tsc_sd,
                            r.tsc_ml,
                            r.gap_sd.map(|g| g.to_string()).unwrap_or_else(|| "-".into())
                        ),
                        (None, Some(err)) => println!("{:<24} error: {err}", e.source),
                        (None, None) => {}
                    }
                }
                println!("* descent is a local-search stand-in, not the published slowest-descent method");
            }
            if internal {
                return Err(Failure { code: EXIT_INTERNAL, error: anyhow::anyhow!("internal consistency failure in batch") });
            }
            if failed {
                return Err(anyhow::anyhow!("some sets could not be processed").into());
            }
        }
        Command::Report { input, format, out } => {
            let bytes = fs::read(&input).with_context(|| format!("reading {}", input.display()))?;
            let report = parse_report(&bytes)?;
            let output = OutputArgs { format: Some(format), out: Some(out) };
            write_output(&report, &output)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
