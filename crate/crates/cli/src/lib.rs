//! `stgen`: P&ID to Structured Text, end to end or one stage at a time.
//!
//! Exit codes: 0 on success, 1 when a stage reports an error, 2 on bad
//! usage.

pub mod commands;
pub mod config;
pub mod scenario;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::Config;

#[derive(Debug, Parser)]
#[command(name = "stgen", version, about = "Generate, check, simulate and export IEC 61131-3 Structured Text")]
pub struct Cli {
    /// TOML file with default settings; flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Normalize a diagram image and cut it into overlapping tiles.
    Preprocess(PreprocessArgs),
    /// Run a generation plan: detection, code tasks, checks, repair, export.
    Generate(GenerateArgs),
    /// Parse, check and lint Structured Text files.
    Check(CheckArgs),
    /// Run a POU for a number of scans and write the trace.
    Simulate(SimulateArgs),
    /// Bundle the `.st` files of a directory into a PLCopen XML project.
    Export(ExportArgs),
}

#[derive(Debug, Args, Default)]
pub struct TileArgs {
    /// Tile edge length in pixels.
    #[arg(long, value_name = "PX")]
    pub tile: Option<u32>,
    /// Overlap between neighbouring tiles in pixels.
    #[arg(long, value_name = "PX")]
    pub overlap: Option<u32>,
    /// Skip the percentile contrast stretch.
    #[arg(long)]
    pub no_stretch: bool,
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    /// PNG, JPEG or TIFF image.
    pub image: PathBuf,
    /// Run directory (default: configured output directory).
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub tiles: TileArgs,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Diagram images to tile, or directories of ready tiles. Replaces the
    /// tiles named in the plan.
    pub inputs: Vec<PathBuf>,
    /// Plan file listing tile groups and tasks.
    #[arg(long, value_name = "FILE")]
    pub plan: PathBuf,
    /// Answer requests from a scripted mock.
    #[arg(long, value_name = "FILE", conflicts_with = "live")]
    pub mock: Option<PathBuf>,
    /// Use the HTTP chat endpoint; the key is read from STGEN_API_KEY.
    #[arg(long)]
    pub live: bool,
    #[arg(long, value_name = "URL")]
    pub endpoint: Option<String>,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Tile groups processed in parallel.
    #[arg(long, value_name = "N")]
    pub workers: Option<usize>,
    /// Repair rounds per candidate.
    #[arg(long, value_name = "N")]
    pub max_rounds: Option<u32>,
    /// Task cycle time of the exported project.
    #[arg(long, value_name = "MS")]
    pub cycle_ms: Option<i64>,
    #[command(flatten)]
    pub tiles: TileArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum Format {
    /// `file:line:col: severity[code]: message`
    #[default]
    Text,
    /// One JSON record per line.
    Json,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[arg(required = true)]
    pub files: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    pub file: PathBuf,
    /// Program or function block to run.
    #[arg(long)]
    pub entry: String,
    #[arg(long)]
    pub scans: u64,
    /// TOML file with input overrides and watch list.
    #[arg(long, value_name = "FILE")]
    pub scenario: Option<PathBuf>,
    /// Comma-separated variables to record; dotted paths reach into instances.
    #[arg(long, value_delimiter = ',')]
    pub watch: Vec<String>,
    #[arg(long, value_name = "MS")]
    pub cycle_ms: Option<i64>,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    /// Directory holding the `.st` files.
    pub dir: PathBuf,
    /// Where to write project.xml and manifest.json (default: DIR).
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Project name (default: the directory name).
    #[arg(long)]
    pub name: Option<String>,
    #[arg(long, value_name = "MS")]
    pub cycle_ms: Option<i64>,
}

/// Parse `args` (program name first) and run; returns the exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let config = match &cli.config {
        Some(p) => match Config::load(p) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e:#}");
                return 2;
            }
        },
        None => Config::default(),
    };
    let result = match cli.command {
        Command::Preprocess(a) => commands::preprocess(config, a),
        Command::Generate(a) => commands::generate(config, a),
        Command::Check(a) => commands::check(a),
        Command::Simulate(a) => commands::simulate(config, a),
        Command::Export(a) => commands::export(config, a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(run_cli(["stgen", "frobnicate"]), 2);
        assert_eq!(run_cli(["stgen", "simulate", "x.st"]), 2);
        assert_eq!(run_cli(["stgen", "check"]), 2);
        assert_eq!(run_cli(["stgen", "--help"]), 0);
        assert_eq!(run_cli(["stgen", "generate", "--plan", "p", "--mock", "m", "--live"]), 2);
    }
}
