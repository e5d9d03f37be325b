// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pcwqed_cli::commands::SPECTRUM_CSV;
use pcwqed_cli::{cmd_analyze, cmd_g2, cmd_spectrum, cmd_sweep, CliError, RunConfig, Runtime};
use pcwqed_core::ensemble::Progress;

#[derive(Parser)]
#[command(name = "pcwqed", version, about = "Weak-probe scattering off random atomic chains on a photonic crystal waveguide")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ensemble-averaged transmission and reflection spectra.
    Spectrum(Common),
    /// Spectra and extracted dip quantities across one swept parameter.
    Sweep(Common),
    /// Ensemble-averaged second-order correlation of the output field.
    G2(Common),
    /// Dip analysis of an existing spectrum table.
    Analyze {
        #[command(flatten)]
        common: Common,
        /// Spectrum CSV to analyse (default: <out>/spectrum.csv).
        #[arg(long)]
        input: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Overrides the master seed in the config.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, env = "PCWQED_WORKERS", default_value_t = 0)]
    workers: usize,
    /// Output directory (default: output.dir from the config).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Suppress progress messages.
    #[arg(long)]
    quiet: bool,
}

impl Common {
    fn load(&self) -> Result<RunConfig, CliError> {
        let text = std::fs::read_to_string(&self.config).map_err(|source| CliError::Io {
            path: self.config.clone(),
            source,
        })?;
        let mut cfg = RunConfig::from_toml(&text)
            .map_err(|e| CliError::Config(format!("{}: {}", self.config.display(), e.to_string().trim_start_matches("config error: "))))?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        Ok(cfg)
    }

    fn out_dir(&self, cfg: &RunConfig) -> PathBuf {
        self.out.clone().unwrap_or_else(|| cfg.output.dir.clone())
    }
}

fn report(p: Progress) {
    eprintln!("pcwqed: {}/{} samples ({} failed)", p.done, p.total, p.failed);
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (common, input) = match &cli.command {
        Command::Spectrum(c) | Command::Sweep(c) | Command::G2(c) => (c, None),
        Command::Analyze { common, input } => (common, input.clone()),
    };
    let cfg = common.load()?;
    let rt = Runtime {
        workers: common.workers,
        out_dir: common.out_dir(&cfg),
        progress: if common.quiet { None } else { Some(&report) },
    };
    match cli.command {
        Command::Spectrum(_) => cmd_spectrum(&cfg, &rt).map(drop),
        Command::Sweep(_) => cmd_sweep(&cfg, &rt).map(drop),
        Command::G2(_) => cmd_g2(&cfg, &rt).map(drop),
        Command::Analyze { .. } => {
            let input = input.unwrap_or_else(|| rt.out_dir.join(SPECTRUM_CSV));
            cmd_analyze(&cfg, &rt, &input).map(drop)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pcwqed: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
