use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use privsense::engine::experiments::{Experiment, DEFAULT_REPLICATIONS};
use privsense::{run_simulation, run_sweep, Error, SimConfig, SweepSpec, SweepTable};

#[derive(Parser)]
#[command(name = "privsense", version, about = "Privacy-aware event detection simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write run.csv
    Run {
        /// key = value configuration file; defaults are used when omitted
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the seed from the configuration
        #[arg(long)]
        seed: Option<u64>,
        /// Extra `key=value` overrides, applied after the file
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a parameter sweep and write sweep.csv and final.csv
    Sweep {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one of the canned experiments
    Experiment {
        #[arg(value_parser = parse_experiment)]
        name: Experiment,
        /// Base configuration the experiment's axes are applied to
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_REPLICATIONS)]
        replications: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Communication profiles of the literature algorithms
    Profiles {
        /// Print the catalog as CSV
        #[arg(long)]
        list: bool,
    },
}

fn parse_experiment(s: &str) -> Result<Experiment, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn load_config(path: Option<&Path>) -> anyhow::Result<SimConfig> {
    match path {
        Some(p) => Ok(SimConfig::from_file(p)?),
        None => Ok(SimConfig::default()),
    }
}

fn create(dir: &Path, name: &str) -> anyhow::Result<BufWriter<File>> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn write_table(table: &SweepTable, out: &Path) -> anyhow::Result<()> {
    table.write_sweep_csv(create(out, "sweep.csv")?)?;
    table.write_final_csv(create(out, "final.csv")?)?;
    Ok(())
}

fn execute(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Run { config, seed, overrides, out } => {
            let mut cfg = load_config(config.as_deref())?;
            for kv in &overrides {
                let (k, v) = kv
                    .split_once('=')
                    .ok_or_else(|| Error::Config(format!("override `{kv}` is not key=value")))?;
                cfg.set(k.trim(), v.trim())?;
            }
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            let record = run_simulation(&cfg)?;
            let mut w = create(&out, "run.csv")?;
            record.write_csv(&mut w)?;
            w.flush()?;
            if let Some(last) = record.last() {
                eprintln!(
                    "{} iterations: F {:.4}, privacy {:.0}, communication {:.0}",
                    record.len(),
                    last.f_measure,
                    last.cum_privacy_cost,
                    last.cum_comm_cost
                );
            }
        }
        Command::Sweep { spec, out } => {
            let spec = SweepSpec::from_file(&spec)?;
            write_table(&run_sweep(&spec)?, &out)?;
        }
        Command::Experiment { name, config, replications, out } => {
            let base = load_config(config.as_deref())?;
            write_table(&name.run(&base, replications)?, &out)?;
        }
        Command::Profiles { list } => {
            if list {
                privsense::agent::write_catalog_csv(io::stdout().lock())?;
            } else {
                for p in privsense::profile_catalog() {
                    println!("{}", p.name);
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let config_error = e.downcast_ref::<Error>().is_some_and(Error::is_config);
            ExitCode::from(if config_error { 2 } else { 1 })
        }
    }
}
