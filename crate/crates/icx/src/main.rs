use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use icx::harness::{self, HarnessError, RawRunOptions};

#[derive(Parser)]
#[command(
    name = "icx",
    version,
    about = "Instruction-cache access, energy, and sizing analysis for ISA-extended programs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the identify-select-substitute-simulate-energy pipeline over a
    /// cache-size sweep and write reduction.csv, energy.csv, verdicts.csv
    /// and run.json
    Run(RunArgs),
    /// Replay a per-benchmark AMAT table through the downsizing rule and
    /// write verdicts.csv (uses the bundled table when no file is given)
    Verdicts(VerdictsArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Static program file
    #[arg(long)]
    program: Option<PathBuf>,
    /// Dynamic trace file (requires --program)
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Synthetic workload: straight-loop(n,iters), hot-cold(hot,cold,repeats)
    /// or uniform-random(n,events[,seed])
    #[arg(long)]
    synth: Option<String>,
    /// Custom-instruction mode: auto, none, or file=<selection file>
    #[arg(long)]
    ci: Option<String>,
    /// Comma-separated capacity sweep, e.g. 1K,2K,4K,8K,16K,32K
    #[arg(long)]
    sizes: Option<String>,
    /// Block size in bytes
    #[arg(long)]
    block: Option<u64>,
    /// Ways per set, or `full`
    #[arg(long)]
    ways: Option<String>,
    /// Replacement policy: lru or fifo
    #[arg(long)]
    repl: Option<String>,
    /// Instruction width in bytes (overrides the program file)
    #[arg(long)]
    width: Option<u32>,
    /// Energy parameter file; defaults to the built-in 45 nm table
    #[arg(long)]
    energy_params: Option<PathBuf>,
    /// Miss-to-hit cost ratio
    #[arg(long)]
    k_factor: Option<f64>,
    /// AMAT form: weighted or textbook
    #[arg(long)]
    amat_convention: Option<String>,
    /// Longest candidate sequence; defaults to the block capacity
    #[arg(long)]
    max_len: Option<usize>,
    /// Register-input bound for candidates
    #[arg(long)]
    max_inputs: Option<usize>,
    /// Register-output bound for candidates
    #[arg(long)]
    max_outputs: Option<usize>,
    /// Maximum number of custom instructions to select
    #[arg(long)]
    budget: Option<usize>,
    /// Report directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for synthetic workloads
    #[arg(long)]
    seed: Option<u64>,
    /// TOML file supplying any of the flags above; flags win over the file
    #[arg(long)]
    config: Option<PathBuf>,
}

impl RunArgs {
    fn into_options(self) -> (RawRunOptions, Option<PathBuf>) {
        let options = RawRunOptions {
            program: self.program,
            trace: self.trace,
            synth: self.synth,
            ci: self.ci,
            sizes: self.sizes,
            block: self.block,
            ways: self.ways,
            repl: self.repl,
            width: self.width,
            energy_params: self.energy_params,
            k_factor: self.k_factor,
            amat_convention: self.amat_convention,
            max_len: self.max_len,
            max_inputs: self.max_inputs,
            max_outputs: self.max_outputs,
            budget: self.budget,
            out: self.out,
            seed: self.seed,
        };
        (options, self.config)
    }
}

#[derive(Args)]
struct VerdictsArgs {
    /// AMAT fixture file; omit to use the bundled table
    #[arg(long)]
    amat_fixture: Option<PathBuf>,
    /// Report directory
    #[arg(long)]
    out: PathBuf,
}

fn cmd_run(args: RunArgs) -> Result<(), HarnessError> {
    let (flags, config_file) = args.into_options();
    let options = match config_file {
        Some(path) => flags.overlay(harness::load_options_file(&path)?),
        None => flags,
    };
    let config = options.resolve()?;
    let artifacts = harness::run(&config)?;
    for warning in &artifacts.warnings {
        eprintln!("warning: {warning}");
    }
    println!(
        "selected {} custom instruction(s); code size {} -> {}",
        artifacts.selection.len(),
        artifacts.code_size_before,
        artifacts.code_size_after
    );
    for (&size, before) in &artifacts.baseline {
        let after = &artifacts.extended[&size];
        println!(
            "{:>8} B: accesses {} -> {}, misses {} -> {}",
            size,
            before.total(),
            after.total(),
            before.misses,
            after.misses
        );
    }
    println!(
        "wrote reduction.csv, energy.csv, verdicts.csv, run.json to {}",
        config.out_dir.display()
    );
    Ok(())
}

fn cmd_verdicts(args: VerdictsArgs) -> Result<(), HarnessError> {
    let verdicts = harness::run_fixture_verdicts(args.amat_fixture.as_deref(), &args.out)?;
    let accepted = verdicts.iter().filter(|v| v.verdict.accepted).count();
    println!(
        "{} verdicts ({} accepted); wrote verdicts.csv to {}",
        verdicts.len(),
        accepted,
        args.out.display()
    );
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Verdicts(args) => cmd_verdicts(args),
    };
    if let Err(err) = result {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
