//! `recon`: generate synthetic humans, train the coarse and displacement
//! networks, reconstruct meshes and score them.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches, Parser, Subcommand};

use config::{keys_help, RawConfig, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "recon", version, about = "Single-image clothed human reconstruction toolkit")]
struct Cli {
    /// Flat `key = value` config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one config key, e.g. `--set k=512`. Repeatable; later wins.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    _overrides: Vec<String>,
    /// Master seed; wins over every other source.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a synthetic dataset.
    GenData {
        /// Output directory (default: data_dir).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train the coarse occupancy network.
    TrainCoarse {
        /// Dataset directory (default: data_dir).
        #[arg(long)]
        data: Option<PathBuf>,
        /// Checkpoint to write.
        #[arg(long)]
        out: PathBuf,
        /// Loss log CSV (epoch,mean_loss,wall_seconds).
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Train the displacement network.
    TrainDisp {
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Coarse checkpoint; when given, the network learns to correct its
        /// reconstructions instead of the smoothed ground truth.
        #[arg(long)]
        coarse: Option<PathBuf>,
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Reconstruct one dataset item; writes smooth.obj, and detailed.obj
    /// when a displacement checkpoint is given.
    Reconstruct {
        #[arg(long)]
        coarse: PathBuf,
        #[arg(long)]
        disp: Option<PathBuf>,
        #[arg(long)]
        data: Option<PathBuf>,
        /// Dataset item index.
        #[arg(long)]
        item: usize,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare a predicted mesh with a ground-truth mesh.
    Evaluate {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        /// Also write the report as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_config(cli: &Cli) -> Result<RunConfig, commands::Failure> {
    let mut raw = RawConfig::default();
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path).map_err(|e| commands::Failure::Io(format!("{}: {e}", path.display())))?;
        raw.apply_text(&text)?;
    }
    raw.apply_env(std::env::vars())?;
    for s in set_flags(std::env::args().skip(1)) {
        raw.apply_set(&s)?;
    }
    if let Some(seed) = cli.seed {
        raw.set("seed", &seed.to_string())?;
    }
    Ok(RunConfig::from_raw(&raw)?)
}

/// `--set` values in command-line order. clap keeps only the last level's
/// list for a global argument, so a `--set` before the subcommand would be
/// lost when another follows it.
fn set_flags(mut args: impl Iterator<Item = String>) -> Vec<String> {
    let mut out = Vec::new();
    while let Some(a) = args.next() {
        if a == "--" {
            break;
        }
        if a == "--set" {
            out.extend(args.next());
        } else if let Some(v) = a.strip_prefix("--set=") {
            out.push(v.to_string());
        }
    }
    out
}

fn main() -> ExitCode {
    let matches = Cli::command().after_help(keys_help()).get_matches();
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    let result = load_config(&cli).and_then(|cfg| commands::run(&cli.command, &cfg));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::set_flags;

    #[test]
    fn set_flags_keep_order_across_levels() {
        let args = ["--set", "k=1", "train-coarse", "--out", "x", "--set=k=2", "--set", "tau=0.5"];
        assert_eq!(set_flags(args.iter().map(|s| s.to_string())), ["k=1", "k=2", "tau=0.5"]);
    }
}
