use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use casimir_friction::identities::{run_identities, seed_from_env};
use casimir_friction::{convergence_report, exit, parse_config, run_scenario, CliError, Refinement, ScenarioConfig};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "casimir-friction", version, about = "Casimir friction dissipation routes: sweeps, convergence and identity checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario sweep and write results.csv and equivalence.txt.
    Run {
        config: PathBuf,
        /// Output directory (overrides run.output).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads for sweep points.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Refine one parameter of the scenario's base point and tabulate the observable.
    Converge {
        config: PathBuf,
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long)]
        steps: usize,
    },
    /// Check the closed-form identities (seeded by CF_SEED).
    Identities,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    #[value(name = "halve_eta")]
    HalveEta,
    #[value(name = "add_levels")]
    AddLevels,
    #[value(name = "halve_tolerance")]
    HalveTolerance,
}

fn load(path: &Path) -> Result<ScenarioConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let dir = path.parent().unwrap_or(Path::new("."));
    Ok(parse_config(&text, dir)?)
}

fn run(command: Command) -> Result<bool, CliError> {
    match command {
        Command::Run { config, out, threads } => {
            if let Some(n) = threads {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global()
                    .map_err(|e| CliError::Usage(format!("--threads: {e}")))?;
            }
            let cfg = load(&config)?;
            let dir = out.unwrap_or_else(|| cfg.output.clone());
            let report = run_scenario(&cfg)?;
            report.write(&dir)?;
            print!("{}", report.equivalence_text());
            println!("{} rows written to {}", report.rows.len(), dir.join("results.csv").display());
            Ok(report.passed())
        }
        Command::Converge { config, mode, steps } => {
            let cfg = load(&config)?;
            let mode = match mode {
                Mode::HalveEta => Refinement::HalveEta,
                Mode::AddLevels => Refinement::AddLevels,
                Mode::HalveTolerance => Refinement::HalveTolerance,
            };
            let table = convergence_report(&cfg, mode, steps)?;
            print!("{}", table.render());
            Ok(table.passed())
        }
        Command::Identities => {
            let seed = seed_from_env();
            println!("identity suite (seed {seed})");
            let checks = run_identities(seed)?;
            for c in &checks {
                println!("{}", c.line());
            }
            Ok(checks.iter().all(|c| c.pass()))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse().command) {
        Ok(true) => ExitCode::from(exit::PASS),
        Ok(false) => ExitCode::from(exit::FAIL),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit::ERROR)
        }
    }
}
