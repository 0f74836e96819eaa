use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use nelson_lab::config::BUNDLED;
use nelson_lab::{emit_report, run_scenario, ExperimentId, LabError, ScenarioConfig};

/// Run Nelson model experiments from a scenario file.
#[derive(Parser, Debug)]
#[command(name = "nelson-lab", version)]
struct Cli {
    /// Scenario file, or the name of a bundled scenario.
    #[arg(long, required_unless_present = "list")]
    scenario: Option<String>,
    /// Output directory (created if missing).
    #[arg(long, default_value = "nelson-lab-out")]
    out: PathBuf,
    /// Worker threads; overrides the scenario.
    #[arg(long)]
    threads: Option<usize>,
    /// Random seed; overrides the scenario.
    #[arg(long)]
    seed: Option<u64>,
    /// Run only these experiment ids (repeatable).
    #[arg(long)]
    only: Vec<String>,
    /// List bundled scenarios and experiment ids, then exit.
    #[arg(long)]
    list: bool,
}

fn list() {
    println!("bundled scenarios:");
    for (name, _) in BUNDLED {
        println!("  {name}");
    }
    println!("experiments:");
    for id in ExperimentId::ALL {
        println!(
            "  {:<22} criterion {:>2}  {}",
            id.as_str(),
            id.criterion(),
            id.description()
        );
    }
}

fn run(cli: &Cli) -> Result<bool, LabError> {
    let spec = cli.scenario.as_deref().expect("clap enforces --scenario");
    let mut config = ScenarioConfig::load(spec)?;
    if let Some(t) = cli.threads {
        config.threads = t;
    }
    if let Some(s) = cli.seed {
        config.seed = s;
    }
    config.validate()?;
    let only = cli
        .only
        .iter()
        .map(|s| {
            ExperimentId::parse(s)
                .ok_or_else(|| LabError::Config(format!("unknown experiment id {s}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let result = run_scenario(&config, &only)?;
    emit_report(&result, &cli.out)?;
    for o in &result.outcomes {
        println!(
            "criterion {:>2} {:<22} {}  {}",
            o.criterion,
            o.id.as_str(),
            if o.passed { "PASS" } else { "FAIL" },
            o.detail
        );
        for w in &o.warnings {
            println!("    warning: {w}");
        }
    }
    println!("outputs in {}", cli.out.display());
    Ok(result.passed())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if cli.list {
        list();
        return ExitCode::SUCCESS;
    }
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
