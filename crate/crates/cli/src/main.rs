mod commands;
mod config;
mod output;

use clap::{Args, Parser, Subcommand};
use config::{Overrides, RunConfig};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "coexist", version, about = "Bifurcation analysis of cross-diffusion systems on an interval")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Principal eigenvalue, in drift and gauge form for invasion problems.
    Eig(Common),
    /// Semitrivial branch over a range of growth rates.
    Semitrivial(Common),
    /// Tables of μ_λ and λ_μ.
    Curves(Common),
    /// Continuation of the coexistence branch from a bifurcation point.
    Branch(Common),
    /// Classification of a (λ, μ) grid.
    Region(Common),
    /// Structural hypotheses of the model.
    Check(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let (common, run): (&Common, fn(&RunConfig) -> Result<(), commands::CliError>) = match &cli.command {
        Command::Eig(c) => (c, commands::eig),
        Command::Semitrivial(c) => (c, commands::semitrivial),
        Command::Curves(c) => (c, commands::curves),
        Command::Branch(c) => (c, commands::branch),
        Command::Region(c) => (c, commands::region),
        Command::Check(c) => (c, commands::check),
    };
    let overrides = Overrides { out: common.out.clone(), n: common.n, seed: common.seed };
    let cfg = match RunConfig::load(&common.config, &overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };
    match run(&cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
