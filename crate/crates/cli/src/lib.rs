//! Driver for the quenched limit theorem experiments: configuration,
//! subcommands and report files.

pub mod config;
pub mod output;
pub mod pipeline;

use std::path::PathBuf;

use clap::Parser;

pub use pipeline::Command;

/// Exit code for a configuration that failed to load or validate.
pub const EXIT_INVALID_CONFIG: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "qcl", version, about = "Quenched limit theorems for random hyperbolic toral maps")]
pub struct Cli {
    /// What to compute
    #[arg(value_enum)]
    pub command: Command,
    /// Experiment config (TOML, or JSON for a `.json` extension)
    #[arg(long)]
    pub config: PathBuf,
    /// Override a config field, e.g. `--set grid.k=32`
    #[arg(long = "set", value_name = "PATH=VALUE")]
    pub set: Vec<String>,
    /// Worker threads (default: all cores)
    #[arg(long)]
    pub workers: Option<usize>,
    /// Output directory; overrides `output_dir` in the config
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Run the CLI and return the process exit code.
pub fn run(cli: Cli) -> i32 {
    let seed = std::env::var("QCL_SEED").ok();
    let cfg = match config::load(&cli.config, &cli.set, seed.as_deref()) {
        Ok(c) => c,
        Err(errors) => {
            for e in errors {
                eprintln!("qcl: invalid config: {e}");
            }
            return EXIT_INVALID_CONFIG;
        }
    };
    let root = cli.out.unwrap_or_else(|| PathBuf::from(&cfg.output_dir));
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = cli.workers {
        builder = builder.num_threads(w.max(1));
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("qcl: cannot start worker pool: {e}");
            return 1;
        }
    };
    pool.install(|| {
        let out = match output::OutputDir::create(&root) {
            Ok(o) => o,
            Err(e) => {
                eprintln!("qcl: cannot create {}: {e}", root.display());
                return 1;
            }
        };
        let result = pipeline::Run::new(&cfg, out).and_then(|r| r.execute(cli.command));
        match result {
            Ok((code, _)) => code,
            Err(e) => {
                eprintln!("qcl: {e}");
                1
            }
        }
    })
}
