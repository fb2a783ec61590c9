use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use urnlab_cli::{parse_config, run, Command, Hooks, Overrides, Status};

#[derive(Parser)]
#[command(name = "urnlab", version, about = "Classify, predict and verify limit laws of reducible urn models")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides run.output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    horizon: Option<u64>,
    #[arg(long, global = true)]
    ensemble: Option<usize>,
    /// Upper bound on horizon x ensemble.
    #[arg(long, global = true)]
    cap: Option<u64>,
    #[arg(long, global = true, hide = true, default_value_t = 1.0)]
    inject_variance_scale: f64,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Identify the structural family and its spectral data.
    Classify,
    /// Emit the predicted limit law of every tracked combination.
    Predict,
    /// Exact martingale identities at small horizons.
    OracleCheck,
    /// Write one trajectory.
    Simulate,
    /// Run the Monte Carlo ensemble and judge every prediction.
    Verify,
    /// Everything above.
    All,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(Status::Usage as u8) } else { ExitCode::SUCCESS };
        }
    };
    let Some(path) = cli.config.as_ref() else {
        eprintln!("error: --config is required");
        return ExitCode::from(Status::Usage as u8);
    };
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: reading {}: {e}", path.display());
            return ExitCode::from(Status::Usage as u8);
        }
    };
    let overrides = Overrides {
        seed: cli.seed,
        horizon: cli.horizon,
        ensemble: cli.ensemble,
        cap: cli.cap,
        output: cli.out.clone(),
    };
    let plan = match parse_config(&text, &overrides) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(Status::Usage as u8);
        }
    };
    let command = match cli.command {
        Cmd::Classify => Command::Classify,
        Cmd::Predict => Command::Predict,
        Cmd::OracleCheck => Command::OracleCheck,
        Cmd::Simulate => Command::Simulate,
        Cmd::Verify => Command::Verify,
        Cmd::All => Command::All,
    };
    let hooks = Hooks { variance_scale: cli.inject_variance_scale };
    match run(command, &plan, hooks, &mut std::io::stdout()) {
        Ok(status) => ExitCode::from(status as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(Status::Fail as u8)
        }
    }
}
