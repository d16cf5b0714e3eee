use std::process::ExitCode;

use baro_cli::{run_eoc, run_single, CliError, EocConfig, RunArgs, EXIT_FAILURE, EXIT_OK};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "baro",
    version,
    about = "AP IMEX finite-volume solver for low-Mach barotropic Euler"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation.
    Run(RunArgs),
    /// Grid-convergence study against a fine reference run.
    Eoc {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated study grid sizes.
        #[arg(long, value_delimiter = ',', required = true)]
        grids: Vec<usize>,
        /// Reference grid size; a multiple of every study size.
        #[arg(long)]
        reference: usize,
    },
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(args) => {
            let config = args.resolve()?;
            let outcome = run_single(&config)?;
            eprintln!(
                "finished: t = {}, {} steps, output in {}",
                outcome.t,
                outcome.steps,
                config.out_dir.display()
            );
        }
        Command::Eoc {
            run,
            grids,
            reference,
        } => {
            let mut run = run;
            // the study overrides the grid size, so nx is not required here
            if run.nx.is_none() {
                run.nx = Some(reference.to_string());
            }
            let config = EocConfig::new(run.resolve()?, grids, reference)?;
            let table = run_eoc(&config)?;
            for row in &table.rows {
                let cols: Vec<String> = row
                    .errors
                    .iter()
                    .zip(&row.eoc)
                    .map(|(e, o)| match o {
                        Some(o) => format!("{e:.3e} ({o:.4})"),
                        None => format!("{e:.3e}"),
                    })
                    .collect();
                eprintln!("N = {:>5}: {}", row.n, cols.join("  "));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    // clap's own usage errors exit with 2, which is reserved for blow-ups
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() {
                EXIT_FAILURE
            } else {
                EXIT_OK
            } as u8);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::from(EXIT_OK as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
