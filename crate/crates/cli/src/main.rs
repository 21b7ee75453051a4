mod commands;
mod settings;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use trap_core::experiment::CONFIG_SCHEMA;
use trap_core::Error;

use settings::ConfigArgs;

/// Data-poisoning workbench for LDP trajectory collection.
#[derive(Debug, Parser)]
#[command(name = "trap", version, arg_required_else_help = true)]
struct Cli {
    /// Print the annotated config template and exit.
    #[arg(long)]
    print_schema: bool,

    #[command(flatten)]
    config: ConfigArgs,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write seeded random-walk trajectories as cell CSV.
    SynthData(commands::SynthData),
    /// Sample target patterns from a dataset.
    SamplePatterns(commands::SamplePatterns),
    /// Build a fake trajectory set plus a JSON manifest.
    GenerateFakes(commands::GenerateFakes),
    /// Run no-attack / IPA / OPA under each defense and report metrics.
    Attack(commands::Attack),
    /// AvgScore / AvgPR of a dataset, optionally against a baseline.
    Evaluate(commands::Evaluate),
    /// Run the config's sweep grid, one report per cell.
    Sweep(commands::Sweep),
}

fn exit_code(e: &Error) -> u8 {
    match e.root() {
        Error::Config(_) | Error::Argument(_) => 2,
        Error::Data(_)
        | Error::Parse { .. }
        | Error::Domain { .. }
        | Error::Range { .. }
        | Error::Io(_)
        | Error::Json(_) => 3,
        Error::Capacity { .. } => 4,
        Error::UnderFill { .. } => 5,
        Error::Stage { .. } => unreachable!("root peels stage wrappers"),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if cli.print_schema {
        print!("{CONFIG_SCHEMA}");
        return ExitCode::SUCCESS;
    }
    let Some(command) = cli.command else {
        eprintln!("error: no subcommand given (see --help)");
        return ExitCode::from(2);
    };
    let result = cli.config.resolve().and_then(|cfg| match command {
        Command::SynthData(c) => c.run(&cfg),
        Command::SamplePatterns(c) => c.run(&cfg),
        Command::GenerateFakes(c) => c.run(&cfg),
        Command::Attack(c) => c.run(&cfg),
        Command::Evaluate(c) => c.run(&cfg),
        Command::Sweep(c) => c.run(&cfg),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
