mod commands;
mod config;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::ConfigArgs;

/// Compiler, simulator and activity/energy reports for the ternary accelerator.
#[derive(Parser, Debug)]
#[command(name = "cutie", version)]
struct Cli {
    #[command(flatten)]
    config: ConfigArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compile a .ctnet manifest into one or more .ctprog programs.
    Compile(commands::CompileArgs),
    /// Simulate programs on an input tensor.
    Run(commands::RunArgs),
    /// Thermometer-encode integer pixels.
    Encode(commands::EncodeArgs),
    /// Cycle, activity and energy reports from a recorded trace.
    Report(commands::ReportArgs),
    /// External-memory traffic of tiled execution.
    Tiling(commands::TilingArgs),
    /// Incremental ternary quantization of a weight tensor.
    Quantize(commands::QuantizeArgs),
    /// Write the reference network (or a random one) and an encoded input.
    Zoo(commands::ZooArgs),
}

/// Bad flags or inputs; exit code 2.
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

/// Simulator and golden model disagree; exit code 3.
#[derive(Debug)]
pub struct Mismatch {
    pub index: usize,
    pub simulator: i8,
    pub golden: i8,
}

impl fmt::Display for Mismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "MISMATCH at index {}: simulator {} golden {}",
            self.index, self.simulator, self.golden
        )
    }
}

impl std::error::Error for Mismatch {}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<Mismatch>().is_some() {
        return 3;
    }
    match e.downcast_ref::<cutie::Error>() {
        Some(cutie::Error::Capacity(_) | cutie::Error::QueueOverflow { .. }) => 4,
        _ => 2,
    }
}

fn report(e: &anyhow::Error) {
    if let Some(cutie::Error::Validation(vs)) = e.downcast_ref::<cutie::Error>() {
        eprintln!("error: {e}");
        for v in vs {
            eprintln!("  {v}");
        }
        return;
    }
    eprintln!("error: {e:#}");
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = config::RunConfig::resolve(&cli.config).and_then(|cfg| match cli.command {
        Command::Compile(a) => commands::compile(&cfg, a),
        Command::Run(a) => commands::run(&cfg, a),
        Command::Encode(a) => commands::encode(a),
        Command::Report(a) => commands::report(&cfg, a),
        Command::Tiling(a) => commands::tiling(&cfg, a),
        Command::Quantize(a) => commands::quantize(&cfg, a),
        Command::Zoo(a) => commands::zoo(&cfg, a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report(&e);
            ExitCode::from(exit_code(&e))
        }
    }
}

/// `path` with `.{i}` inserted before the extension.
pub fn numbered(path: &std::path::Path, i: usize) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}.{i}.{}", ext.to_string_lossy()),
        None => format!("{stem}.{i}"),
    };
    path.with_file_name(name)
}
