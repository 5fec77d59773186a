use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use summa_core::document::{Document, HorizonDoc, Model};
use summa_core::runner::{replay, run, RunOptions};
use summa_core::scalar::ScalarMode;
use summa_core::SummaError;

#[derive(Parser)]
#[command(name = "summa", version, about = "Run summability checks declared in a JSON document")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every task and print the report.
    Run(RunArgs),
    /// Parse and resolve a document without running it.
    Validate { path: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Args)]
struct RunArgs {
    path: PathBuf,
    #[arg(long, default_value = "exact")]
    mode: ScalarMode,
    /// Horizon N; tmax becomes N/2 unless the task sets it.
    #[arg(long)]
    horizon: Option<usize>,
    /// Tolerance as `p/q`.
    #[arg(long)]
    eps: Option<String>,
    /// Exit with status 1 when any condition fails.
    #[arg(long)]
    strict: bool,
    /// Recompute the witness `<task>/<condition>` instead of printing the report.
    #[arg(long, value_name = "ID")]
    replay_witness: Option<String>,
    /// Recorded in the report; the checks themselves are deterministic.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    /// Add wall-clock times per task (breaks byte-identical reports).
    #[arg(long)]
    timing: bool,
}

fn load(path: &Path) -> Result<Document, ExitCode> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        ExitCode::from(2)
    })?;
    Document::parse(&text).map_err(fail)
}

fn fail(e: SummaError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(if e.is_schema_error() { 2 } else { 3 })
}

fn execute(args: RunArgs) -> Result<ExitCode, ExitCode> {
    let doc = load(&args.path)?;
    let opts = RunOptions {
        mode: args.mode,
        overrides: HorizonDoc { n: args.horizon, eps: args.eps, tmax: None, nu_max: None },
        timing: args.timing,
        seed: args.seed,
    };
    if let Some(id) = &args.replay_witness {
        let r = replay(&doc, &opts, id).map_err(fail)?;
        match args.format {
            Format::Text => print!("{}", r.to_text()),
            Format::Json => println!("{}", r.to_json()),
        }
        return Ok(ExitCode::from(if r.reproduced { 0 } else { 1 }));
    }
    let report = run(&doc, &opts).map_err(fail)?;
    match args.format {
        Format::Text => print!("{}", report.to_text()),
        Format::Json => println!("{}", report.to_json()),
    }
    Ok(ExitCode::from(report.exit_code(args.strict) as u8))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => execute(args),
        Command::Validate { path } => load(&path).and_then(|doc| {
            Model::resolve(&doc, ScalarMode::Exact).map_err(fail)?;
            println!("{}: ok ({} tasks)", path.display(), doc.tasks.len());
            Ok(ExitCode::SUCCESS)
        }),
    };
    result.unwrap_or_else(|code| code)
}
