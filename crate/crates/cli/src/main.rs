//! `kljn`: command-line front end for the KLJN current-injection simulator.
//!
//! Every subcommand reads an optional flat `key = value` config file, applies
//! command-line overrides, runs one experiment and writes its CSV files,
//! `config.txt` and `summary.txt` into the output directory.
//!
//! Exit codes: 0 success, 2 usage error, 3 configuration error,
//! 4 simulation error (domain, shape or inference), 5 I/O error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kljn_core::harness::{
    parse_config, run_defense_experiment, run_privacy_experiment, run_single_bit, run_table1,
    write_report, write_single_bit, ExperimentReport, SimConfig, Table1Grid, VariantKind,
};
use kljn_core::Error;

#[derive(Debug, Parser)]
#[command(
    name = "kljn",
    version,
    about = "KLJN key exchange under current-injection attack"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Eve's success probability for every cable variant and injection level.
    Table1(Common),
    /// Paired attacked / clean bits judged by the current comparison defense
    /// (1000 m cable unless the config chooses a variant).
    Defense(Common),
    /// Eve's success before and after XOR privacy amplification.
    Privacy(Common),
    /// Dump every waveform of a single bit exchange.
    SingleBit {
        #[command(flatten)]
        common: Common,
        /// Index of the bit to simulate.
        #[arg(long, default_value_t = 0)]
        bit: u64,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed; overrides `master_seed` from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Number of bit exchanges; overrides `n_bits`.
    #[arg(long)]
    bits: Option<usize>,
    /// Worker threads (0 = all cores); overrides `threads`.
    #[arg(long)]
    threads: Option<usize>,
}

impl Common {
    fn load(&self, default: SimConfig) -> Result<SimConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => parse_config(path)?,
            None => default,
        };
        if let Some(seed) = self.seed {
            cfg.master_seed = seed;
        }
        if let Some(bits) = self.bits {
            cfg.n_bits = bits;
        }
        if let Some(threads) = self.threads {
            cfg.threads = threads;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn finish(report: &ExperimentReport, out: &Path) -> Result<(), Error> {
    write_report(report, out)?;
    print!("{}", report.summary());
    println!("\nwrote results to {}", out.display());
    Ok(())
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::Table1(common) => {
            let cfg = common.load(SimConfig::default())?;
            let report = run_table1(&cfg, &Table1Grid::standard(cfg.n_segments))?;
            finish(&report, &common.out)
        }
        Command::Defense(common) => {
            let default = SimConfig {
                variant_kind: VariantKind::Cable,
                ..SimConfig::default()
            };
            let cfg = common.load(default)?;
            finish(&run_defense_experiment(&cfg)?, &common.out)
        }
        Command::Privacy(common) => {
            let cfg = common.load(SimConfig::default())?;
            finish(&run_privacy_experiment(&cfg)?, &common.out)
        }
        Command::SingleBit { common, bit } => {
            let cfg = common.load(SimConfig::default())?;
            let record = run_single_bit(&cfg, bit)?;
            write_single_bit(&record, &common.out)?;
            println!(
                "bit {bit}: {} (alice {} ohm, bob {} ohm); wrote {}",
                record.classification.label(),
                record.alice_choice.resistance,
                record.bob_choice.resistance,
                common.out.join("single_bit.csv").display()
            );
            Ok(())
        }
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config { .. } => 3,
        Error::Domain(_) | Error::Shape(_) | Error::Inference(_) => 4,
        Error::Io { .. } => 5,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("kljn: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
