use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use multiphase_cli::config::{RunConfig, DEFAULT_SEED};
use multiphase_cli::{cmd_bounds, cmd_reproduce, cmd_simulate, CliError, Figure, Scale};
use multiphase_core::experiments::ExportFormat;

#[derive(Parser)]
#[command(name = "multiphase", version, about = "Two-phase Bayesian estimation: bounds and particle-filter simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed; overrides the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (results do not depend on it).
    #[arg(long)]
    threads: Option<usize>,
    /// csv or json.
    #[arg(long)]
    format: Option<ExportFormat>,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the Cramér-Rao, Van Trees and Ziv-Zakai bounds over a schedule.
    Bounds {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run the Monte Carlo particle-filter study of a config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Regenerate the data of a built-in study.
    Reproduce {
        /// fig3, fig4, fig5 or fig6
        figure: Figure,
        /// full or desk (at most 100 probes and 100 runs)
        #[arg(default_value = "desk")]
        scale: Scale,
        #[command(flatten)]
        common: Common,
    },
}

fn run(command: Command) -> Result<(), CliError> {
    let common = match &command {
        Command::Bounds { common, .. } | Command::Simulate { common, .. } | Command::Reproduce { common, .. } => common,
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = common.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be >= 1".into()));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| CliError::Config(e.to_string()))?;

    let outputs = pool.install(|| match &command {
        Command::Bounds { config, common } | Command::Simulate { config, common } => {
            let mut cfg = RunConfig::from_path(config)?;
            if let Some(seed) = common.seed {
                cfg.spec.master_seed = seed;
            }
            let out = common
                .out
                .clone()
                .or_else(|| cfg.output.dir.clone())
                .unwrap_or_else(|| PathBuf::from("out"));
            let format = common.format.or(cfg.output.format).unwrap_or_default();
            if matches!(command, Command::Bounds { .. }) {
                cmd_bounds(&cfg, &out, format)
            } else {
                cmd_simulate(&cfg, &out, format)
            }
        }
        Command::Reproduce { figure, scale, common } => {
            let out = common.out.clone().unwrap_or_else(|| PathBuf::from("out"));
            cmd_reproduce(
                *figure,
                *scale,
                common.seed.unwrap_or(DEFAULT_SEED),
                &out,
                common.format.unwrap_or_default(),
            )
        }
    })?;
    for f in &outputs.files {
        println!("{}", outputs.dir.join(f).display());
    }
    println!("{}", outputs.dir.join("manifest.json").display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
