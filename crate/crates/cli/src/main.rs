//! `ants-lab`: run treasure-search sweeps, adversary probes and self-tests.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use ants_core::experiment::{
    run_adversary, run_sweep, write_adversary_csv, write_sweep_csv, AdversaryConfig, SweepConfig,
};
use ants_core::selftest::{broken_spiral, run_selftest, SelftestOptions};
use ants_core::Error;
use clap::{Parser, Subcommand};

const EXIT_CONFIG: u8 = 1;
const EXIT_INVALID: u8 = 2;
const EXIT_IO: u8 = 3;
const EXIT_SELFTEST: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "ants-lab", version, about = "Multi-agent treasure search on the grid")]
struct Cli {
    /// Worker threads for trial execution (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Log progress to stderr.
    #[arg(long, short, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a parameter sweep and write one CSV row per (strategy, D, k).
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate visit probabilities of every cell at distance D.
    Adversary {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the embedded invariant suites.
    Selftest {
        /// Replace the spiral with a defective one.
        #[arg(long, hide = true)]
        broken_spiral: bool,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => EXIT_CONFIG,
        Error::InvalidParameter(_) => EXIT_INVALID,
        Error::Io(_) => EXIT_IO,
    }
}

fn create(path: &Path) -> ants_core::Result<fs::File> {
    fs::File::create(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("cannot write {}: {e}", path.display()))))
}

/// Small TOML record written next to each output file.
fn write_manifest(output: &Path, command: &str, config: &Path, master_seed: u64, rows: usize) -> ants_core::Result<()> {
    let mut table = toml::Table::new();
    table.insert("program".into(), format!("ants-lab {}", env!("CARGO_PKG_VERSION")).into());
    table.insert("command".into(), command.into());
    table.insert("config".into(), config.display().to_string().into());
    table.insert("output".into(), output.display().to_string().into());
    // TOML integers are signed
    let seed = match i64::try_from(master_seed) {
        Ok(v) => toml::Value::from(v),
        Err(_) => toml::Value::from(master_seed.to_string()),
    };
    table.insert("master_seed".into(), seed);
    table.insert("rows".into(), (rows as i64).into());
    let mut path = output.as_os_str().to_owned();
    path.push(".manifest.toml");
    let text = toml::to_string(&table).map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    fs::write(&path, text)?;
    Ok(())
}

fn simulate(config: &Path, out: Option<PathBuf>) -> ants_core::Result<()> {
    let cfg = SweepConfig::load(config)?;
    let output = out.unwrap_or_else(|| cfg.output.clone());
    let rows = run_sweep(&cfg)?;
    write_sweep_csv(&rows, create(&output)?)?;
    write_manifest(&output, "simulate", config, cfg.master_seed, rows.len())?;
    log::info!("wrote {} rows to {}", rows.len(), output.display());
    Ok(())
}

fn adversary(config: &Path, out: Option<PathBuf>) -> ants_core::Result<()> {
    let cfg = AdversaryConfig::load(config)?;
    let output = out.unwrap_or_else(|| cfg.output.clone());
    let placement = run_adversary(&cfg)?;
    write_adversary_csv(&placement, create(&output)?)?;
    write_manifest(&output, "adversary", config, cfg.master_seed, placement.candidates.len())?;
    log::info!("argmin {} with probability {}", placement.cell, placement.visit_probability);
    Ok(())
}

fn selftest(broken: bool) -> ExitCode {
    let mut opts = SelftestOptions::default();
    if broken {
        opts.spiral = broken_spiral;
    }
    let report = run_selftest(&opts);
    print!("{}", report.table());
    match report.first_failure() {
        None => ExitCode::SUCCESS,
        Some(s) => {
            eprintln!("selftest failed: {}", s.name);
            ExitCode::from(EXIT_SELFTEST)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = if cli.verbose { log::LevelFilter::Info } else { log::LevelFilter::Warn };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();

    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(EXIT_INVALID);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("could not size the thread pool: {e}");
        }
    }

    let result = match cli.command {
        Command::Simulate { config, out } => simulate(&config, out),
        Command::Adversary { config, out } => adversary(&config, out),
        Command::Selftest { broken_spiral } => return selftest(broken_spiral),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
