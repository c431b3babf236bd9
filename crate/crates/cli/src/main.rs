use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use zfalg::suite::{emit_report, run_suite, ModeName, ReportFormat, SuiteConfig, SuiteName};

#[derive(Parser)]
#[command(
    name = "zfalg",
    version,
    about = "Exact checks of ZF, RTT and boundary algebras"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run check suites from a JSON config.
    Check(CheckArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Exact,
    Float,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    Json,
}

#[derive(clap::Args)]
struct CheckArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's suite list; repeatable.
    #[arg(long = "suite", num_args = 1..)]
    suites: Vec<String>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Tolerance for float mode.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, value_enum, default_value = "text")]
    report: FormatArg,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn check(args: CheckArgs) -> Result<i32, String> {
    let mut config = SuiteConfig::load(&args.config).map_err(|e| e.to_string())?;
    if !args.suites.is_empty() {
        config.suites = args
            .suites
            .iter()
            .map(|s| s.parse::<SuiteName>())
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
    }
    match args.mode {
        Some(ModeArg::Exact) => config.mode = ModeName::Exact,
        Some(ModeArg::Float) => config.mode = ModeName::Float,
        None => {}
    }
    if args.tol.is_some() {
        config.tolerance = args.tol;
    }
    let report = run_suite(&config).map_err(|e| e.to_string())?;
    let format = match args.report {
        FormatArg::Text => ReportFormat::Text,
        FormatArg::Json => ReportFormat::Json,
    };
    let text = emit_report(&report, format);
    match &args.out {
        Some(path) => std::fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(report.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Check(args) => check(args).unwrap_or_else(|e| {
            eprintln!("error: {e}");
            2
        }),
    };
    ExitCode::from(code as u8)
}
