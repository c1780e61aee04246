//! `prethermal` experiment runner.
//!
//! Exit status: 0 on success, 2 for usage or schema errors (nothing written),
//! 3 for errors raised by the numerical modules.

mod commands;
mod config;

use clap::Parser;
use commands::{Subcommand, Table};
use config::SchemaError;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

const THREADS_ENV: &str = "PRETHERMAL_THREADS";

#[derive(Debug, Parser)]
#[command(name = "prethermal", version, about = "Floquet prethermalization experiments")]
struct Cli {
    #[arg(value_enum)]
    subcommand: Subcommand,
    /// TOML experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Override a config field, e.g. `--set lattice.extents=[6]`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory.
    #[arg(long, default_value = "prethermal-out")]
    out: PathBuf,
    /// Worker threads; falls back to PRETHERMAL_THREADS.
    #[arg(long)]
    threads: Option<usize>,
}

enum Failure {
    Schema(SchemaError),
    Module(prethermal::Error),
    Io(PathBuf, std::io::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Schema(_) => 2,
            Failure::Module(_) | Failure::Io(..) => 3,
        }
    }
}

fn threads(cli: &Cli) -> Result<Option<usize>, SchemaError> {
    let n = match cli.threads {
        Some(n) => Some(n),
        None => match std::env::var(THREADS_ENV) {
            Ok(s) => Some(s.trim().parse().map_err(|_| SchemaError::new(THREADS_ENV, format!("not a count: '{s}'")))?),
            Err(_) => None,
        },
    };
    if n == Some(0) {
        return Err(SchemaError::new("--threads", "must be at least 1"));
    }
    Ok(n)
}

fn write_csv(dir: &Path, table: &Table) -> Result<(), Failure> {
    let path = dir.join(table.file);
    let io = |e: csv::Error| Failure::Io(path.clone(), e.into());
    let mut w = csv::Writer::from_path(&path).map_err(io)?;
    w.write_record(&table.header).map_err(io)?;
    for row in &table.rows {
        w.write_record(row).map_err(io)?;
    }
    w.flush().map_err(|e| Failure::Io(path.clone(), e))
}

fn manifest(cli: &Cli, cfg: &config::ExperimentConfig, threads: usize, seconds: f64, files: &[&str]) -> String {
    let mut run = toml::Table::new();
    run.insert("subcommand".into(), cli.subcommand.name().into());
    run.insert("version".into(), env!("CARGO_PKG_VERSION").into());
    run.insert("wall_time_s".into(), seconds.into());
    run.insert("threads".into(), (threads as i64).into());
    run.insert("artifacts".into(), files.iter().map(|f| toml::Value::from(*f)).collect::<Vec<_>>().into());
    let mut doc = toml::Table::new();
    doc.insert("run".into(), run.into());
    doc.insert("config".into(), toml::Value::try_from(cfg).expect("config serializes"));
    toml::to_string(&doc).expect("manifest serializes")
}

fn execute(cli: &Cli) -> Result<(), Failure> {
    let start = Instant::now();
    let text = std::fs::read_to_string(&cli.config)
        .map_err(|e| Failure::Schema(SchemaError::new("--config", format!("{}: {e}", cli.config.display()))))?;
    let cfg = config::load(&text, &cli.overrides).map_err(Failure::Schema)?;
    commands::check(&cfg, cli.subcommand).map_err(Failure::Schema)?;
    let n_threads = threads(cli).map_err(Failure::Schema)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = n_threads {
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| Failure::Module(prethermal::Error::Resource(e.to_string())))?;
    let used = pool.current_num_threads();
    let tables = pool.install(|| commands::run(&cfg, cli.subcommand)).map_err(Failure::Module)?;

    std::fs::create_dir_all(&cli.out).map_err(|e| Failure::Io(cli.out.clone(), e))?;
    for t in &tables {
        write_csv(&cli.out, t)?;
    }
    let files: Vec<&str> = tables.iter().map(|t| t.file).collect();
    let path = cli.out.join("manifest.toml");
    let text = manifest(cli, &cfg, used, start.elapsed().as_secs_f64(), &files);
    std::fs::write(&path, text).map_err(|e| Failure::Io(path, e))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Schema(e) => eprintln!("config error: {e}"),
                Failure::Module(e) => eprintln!("{} failed: {e}", cli.subcommand.name()),
                Failure::Io(p, e) => eprintln!("cannot write {}: {e}", p.display()),
            }
            ExitCode::from(f.code())
        }
    }
}
