//! `ies-sched`: schedule a heat-and-electricity system from a scenario document.
//!
//! Every flag can also be set through an `IES_`-prefixed environment variable,
//! e.g. `IES_MODE=all` or `IES_MC_SAMPLES=0`. Flags win over the environment.
//!
//! Exit codes: 0 when every run solved and passed validation, 1 when some run
//! did not, 2 for configuration, scenario or I/O errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use ies_core::cli::{parse_chance, run, ModeSelection, RunConfig, SolverChoice};
use ies_core::scheduler::ChanceFormulation;

#[derive(Debug, Parser)]
#[command(name = "ies-sched", version, about = "Chance-constrained day-ahead scheduling of an integrated heat and power system")]
struct Args {
    /// Scenario document (JSON).
    #[arg(long, env = "IES_SCENARIO")]
    scenario: PathBuf,

    /// Operating mode 1..6, or `all`. Defaults to the scenario's mode.
    #[arg(long, env = "IES_MODE", value_parser = parse_mode)]
    mode: Option<ModeSelection>,

    /// Comma-separated confidence levels. Defaults to the scenario's alpha.
    #[arg(long, env = "IES_ALPHA", value_delimiter = ',', num_args = 1..)]
    alpha: Option<Vec<f64>>,

    /// Chance-constraint formulation: binary or quantile.
    #[arg(long, env = "IES_CHANCE", value_parser = parse_chance_arg)]
    chance: Option<ChanceFormulation>,

    /// embedded, or lp-export to only write .lp files.
    #[arg(long, env = "IES_SOLVER", default_value = "embedded", value_parser = parse_solver)]
    solver: SolverChoice,

    /// Discretization step in MW, overriding the scenario.
    #[arg(long, env = "IES_Q")]
    q: Option<f64>,

    /// Monte Carlo samples per period for the coverage check; 0 skips it.
    #[arg(long, env = "IES_MC_SAMPLES", default_value_t = 100_000)]
    mc_samples: usize,

    #[arg(long, env = "IES_SEED", default_value_t = 2024)]
    seed: u64,

    /// Output directory, created if missing.
    #[arg(long, env = "IES_OUT", default_value = "results")]
    out: PathBuf,
}

fn parse_mode(s: &str) -> Result<ModeSelection, String> {
    s.parse().map_err(|e: ies_core::Error| e.to_string())
}

fn parse_chance_arg(s: &str) -> Result<ChanceFormulation, String> {
    parse_chance(s).map_err(|e| e.to_string())
}

fn parse_solver(s: &str) -> Result<SolverChoice, String> {
    s.parse().map_err(|e: ies_core::Error| e.to_string())
}

fn main() -> ExitCode {
    let args = Args::parse();
    let cfg = RunConfig {
        scenario: args.scenario,
        modes: args.mode,
        alphas: args.alpha,
        chance: args.chance,
        solver: args.solver,
        q: args.q,
        mc_samples: args.mc_samples,
        seed: args.seed,
        out: args.out,
    };
    match run(&cfg) {
        Ok(summary) => {
            for r in &summary.runs {
                let obj = r.objective.map(|o| format!("{o:.3}")).unwrap_or_else(|| "-".into());
                let valid = match r.validation_pass {
                    Some(true) => "valid",
                    Some(false) => "INVALID",
                    None => "-",
                };
                println!("{:<18} {:<10} alpha {:<5} objective {:>14} {}", r.tag, r.status, r.alpha, obj, valid);
            }
            println!("outputs in {}", cfg.out.display());
            ExitCode::from(summary.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
