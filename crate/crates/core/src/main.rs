use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use zoll_lab::geometry::MANIFOLD_INFO;
use zoll_lab::scenarios::{
    describe, load_config, resolve, run_scenario, scenario_info, ConfigError, Overrides,
    RunError, ScenarioConfig, EXIT_CONFIG, SCENARIOS,
};

#[derive(Parser)]
#[command(name = "zoll-lab", version, about = "Seeded experiments on magnetic geodesic flows")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write results.csv and summary.json.
    Run {
        scenario: String,
        /// TOML or JSON (by extension) config; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Enumerate a registry.
    List { what: Registry },
    /// Show a scenario's config keys and column schema.
    Describe { scenario: String },
}

#[derive(Clone, Copy, ValueEnum)]
enum Registry {
    Manifolds,
    Scenarios,
}

fn config_error(e: &ConfigError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(EXIT_CONFIG as u8)
}

fn run(
    scenario: &str,
    config: Option<PathBuf>,
    overrides: Overrides,
) -> ExitCode {
    if let Err(e) = scenario_info(scenario) {
        return config_error(&e);
    }
    let cfg = match config.as_deref().map(load_config).transpose() {
        Ok(c) => c.unwrap_or_else(ScenarioConfig::default),
        Err(e) => return config_error(&e),
    };
    let resolved = match resolve(scenario, &cfg, &overrides) {
        Ok(r) => r,
        Err(e) => return config_error(&e),
    };
    match run_scenario(&resolved) {
        Ok(outcome) => {
            for r in &outcome.summary.rules {
                let value = r.value.map_or("n/a".to_string(), |v| format!("{v:.6e}"));
                println!(
                    "{} {:<34} {value} ({})",
                    if r.pass { "PASS" } else { "FAIL" },
                    r.id,
                    r.threshold
                );
            }
            for n in &outcome.summary.notes {
                println!("note: {n}");
            }
            println!("{}: {} -> {}", outcome.summary.scenario, outcome.summary.verdict, outcome.dir.display());
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            if let RunError::Numerical { dump, .. } = &e {
                eprintln!("failing state: {dump}");
                eprintln!("state written to {}", resolved.out.join("failure.json").display());
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { scenario, config, out, seed, tol, workers } => {
            run(&scenario, config, Overrides { out, seed, tol, workers })
        }
        Command::List { what: Registry::Manifolds } => {
            for m in MANIFOLD_INFO {
                let params: Vec<String> = m.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
                println!("{:<18} [{}] {}", m.name, params.join(", "), m.summary);
            }
            ExitCode::SUCCESS
        }
        Command::List { what: Registry::Scenarios } => {
            for s in SCENARIOS {
                println!("{:<16} {}", s.name, s.summary);
            }
            ExitCode::SUCCESS
        }
        Command::Describe { scenario } => match describe(&scenario) {
            Ok(text) => {
                print!("{text}");
                ExitCode::SUCCESS
            }
            Err(e) => config_error(&e),
        },
    }
}
