//! The `guard-can` command line.
//!
//! Every config key is also a flag: `encoder.epochs` becomes
//! `--encoder-epochs`. Flags override the `--config` file.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data or I/O error,
//! 4 training divergence.

pub mod config;
pub mod stages;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Arg, ArgAction, ArgMatches, Command, CommandFactory, FromArgMatches, Parser, Subcommand};

pub use config::{PipelineConfig, Preset, SynthConfig, KEYS};
pub use stages::{Layout, Mode, StageError};

use crate::error::Error;

#[derive(Debug, Parser)]
#[command(name = "guard-can", version, about = "Graph + GRU intrusion detection for CAN bus logs")]
struct Cli {
    /// Config file of `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Cmd {
    /// Generate a synthetic CAN log.
    Synth,
    /// Window the input log and split it into train/val/test.
    Preprocess,
    /// Arbitration-ID entropy across window sizes.
    Entropy,
    /// Train the graph encoder on normal windows.
    TrainEncoder,
    /// Embed every split with the trained encoder.
    Embed,
    /// Train the GRU detector on embedding sequences.
    TrainDetector,
    /// Score the test split.
    Detect,
    /// Compute metrics from the detection reports.
    Evaluate,
    /// Run preprocess through evaluate, skipping up-to-date stages.
    Run,
    /// Run the pipeline over the window size / sequence length grid.
    Sweep,
}

/// Flag name for a config key.
pub fn flag_name(key: &str) -> String {
    key.replace(['.', '_'], "-")
}

fn command() -> Command {
    Cli::command().args(KEYS.iter().map(|&(key, default, help)| {
        let mut help = help.to_string();
        if !default.is_empty() {
            help = if help.is_empty() { format!("[default: {default}]") } else { format!("{help} [default: {default}]") };
        }
        let action = if matches!(key, "synth.ecu" | "synth.attack") { ArgAction::Append } else { ArgAction::Set };
        Arg::new(key)
            .long(flag_name(key))
            .value_name("VALUE")
            .help(help)
            .action(action)
            .global(true)
    }))
}

fn overrides(m: &ArgMatches) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for &(key, _, _) in KEYS {
        if let Some(values) = m.get_many::<String>(key) {
            out.extend(values.map(|v| (key.to_string(), v.clone())));
        }
    }
    out
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => 2,
        Error::Divergence(_) => 4,
        _ => 3,
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return 2;
        }
    };
    let sub = matches.subcommand().map(|(_, m)| m).unwrap_or(&matches);
    let cfg = match PipelineConfig::load(cli.config.as_deref(), &overrides(sub)) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    match execute(cli.command, &cfg) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e.error)
        }
    }
}

fn execute(cmd: Cmd, cfg: &PipelineConfig) -> Result<(), StageError> {
    let layout = Layout::new(&cfg.work_dir);
    match cmd {
        Cmd::Synth => {
            let (path, frames) = stages::cmd_synth(cfg)?;
            print!("{}", crate::synth::format_class_counts(&frames));
            println!("wrote {}", path.display());
        }
        Cmd::Preprocess => {
            stages::cmd_preprocess(cfg, &layout, Mode::Force)?;
        }
        Cmd::Entropy => {
            let path = stages::cmd_entropy(cfg)?;
            println!("wrote {}", path.display());
        }
        Cmd::TrainEncoder => {
            stages::cmd_train_encoder(cfg, &layout, Mode::Force)?;
        }
        Cmd::Embed => {
            stages::cmd_embed(cfg, &layout, Mode::Force)?;
        }
        Cmd::TrainDetector => {
            stages::cmd_train_detector(cfg, &layout, Mode::Force)?;
        }
        Cmd::Detect => {
            stages::cmd_detect(cfg, &layout, Mode::Force)?;
        }
        Cmd::Evaluate => print!("{}", stages::cmd_evaluate(cfg, &layout, Mode::Force)?),
        Cmd::Run => print!("{}", stages::cmd_run(cfg)?),
        Cmd::Sweep => {
            let path = stages::cmd_sweep(cfg)?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}
