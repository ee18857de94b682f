use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use mequi::harness::{pin_constants, run, ExperimentConfig, Task};

#[derive(Parser)]
#[command(name = "mequi", version, about = "Multidistance and mean equicontinuity experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Besicovitch m-distance of a tuple
    Bes(Common),
    /// Pointwise test, sensitivity search or dichotomy
    Classify(Common),
    /// Fibre cardinalities over the odometer factor
    Fibre(Common),
    /// Factor mean equicontinuity modulus table
    Modulus(Common),
    /// Continuity probe for the Besicovitch m-distance
    Probe(Common),
    /// Seeded multidistance and factor-map axiom suite
    Axioms(Common),
    /// Run the oracle experiments and write the constants file
    Pin {
        #[arg(long, default_value = "configs/pin.toml")]
        config: PathBuf,
        #[arg(long, default_value = "configs/constants.toml")]
        out: PathBuf,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        quiet: bool,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's seed
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config's output path
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    quiet: bool,
}

fn pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            bail!("--threads must be positive");
        }
        b = b.num_threads(n);
    }
    Ok(b.build()?)
}

fn experiment(task: Task, args: Common) -> Result<i32> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if cfg.task != task {
        bail!("{} describes task `{}`, not `{}`", args.config.display(), cfg.task.name(), task.name());
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(out) = args.out {
        cfg.output = Some(out.to_str().context("output path is not UTF-8")?.to_string());
    }
    let record = pool(args.threads)?.install(|| run(&cfg))?;
    if cfg.output.is_none() {
        print!("{}", record.payload.render());
    }
    if !args.quiet {
        eprintln!("{}", record.payload.summary());
        eprintln!("config {} | {} | {:.2}s", &record.config_hash[..12], record.version, record.wall_time);
    }
    Ok(record.payload.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Bes(a) => experiment(Task::Bes, a),
        Command::Classify(a) => experiment(Task::Classify, a),
        Command::Fibre(a) => experiment(Task::Fibre, a),
        Command::Modulus(a) => experiment(Task::Modulus, a),
        Command::Probe(a) => experiment(Task::Probe, a),
        Command::Axioms(a) => experiment(Task::Axioms, a),
        Command::Pin { config, out, threads, quiet } => (|| {
            let constants = pool(threads)?.install(|| pin_constants(&config))?;
            mequi::harness::run::write_atomic(&out, constants.render().as_bytes())?;
            if !quiet {
                eprintln!("pinned {} constants to {}", constants.oracle.len(), out.display());
            }
            Ok(0)
        })(),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
