use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use targetflow::io::batch::{id_from_path, run_batch, BatchOptions, Mode};
use targetflow::io::config::parse_unchecked;

#[derive(Parser)]
#[command(
    name = "targetflow",
    version,
    about = "Forced curve-shortening flow towards a target curve"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run each configuration and write its configured outputs.
    Simulate(BatchArgs),
    /// Write only the forcing-field figure of each configuration.
    Field(BatchArgs),
    /// Run each configuration and its checks; exit nonzero if any fails.
    Verify(BatchArgs),
    /// Verify with the ambient front-tracking comparison enabled.
    Compare(BatchArgs),
}

#[derive(Args)]
struct BatchArgs {
    /// Configuration files (TOML).
    #[arg(required = true)]
    configs: Vec<PathBuf>,
    /// Output directory, overriding `outputs.out_dir` of every run.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Seed for fuzzed inputs; simulations themselves are deterministic.
    #[arg(long)]
    seed: Option<u64>,
    /// Runs executed concurrently (0: one per core).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (mode, args) = match cli.command {
        Command::Simulate(a) => (Mode::Simulate, a),
        Command::Field(a) => (Mode::Field, a),
        Command::Verify(a) => (Mode::Verify, a),
        Command::Compare(a) => (Mode::Compare, a),
    };
    if let Some(seed) = args.seed {
        log::info!("seed {seed}");
    }

    let mut runs = Vec::new();
    for path in &args.configs {
        let parsed = fs::read_to_string(path)
            .map_err(targetflow::Error::from)
            .and_then(|text| parse_unchecked(&text));
        match parsed {
            Ok(cfg) => {
                let id = cfg.id.clone().unwrap_or_else(|| id_from_path(path));
                runs.push((id, cfg));
            }
            Err(e) => {
                eprintln!("{}: {e}", path.display());
                return ExitCode::from(2);
            }
        }
    }

    let opts = BatchOptions {
        mode,
        out_dir: args.out_dir.clone(),
        jobs: args.jobs,
    };
    let report = run_batch(&runs, &opts);
    let dir = args
        .out_dir
        .or_else(|| runs.first().map(|(_, c)| c.outputs.out_dir.clone()))
        .unwrap_or_else(|| PathBuf::from("out"));
    let path = dir.join("report.json");
    if let Err(e) = fs::create_dir_all(&dir).and_then(|_| fs::write(&path, report.to_json())) {
        eprintln!("{}: {e}", path.display());
        return ExitCode::from(2);
    }

    for run in &report.runs {
        match &run.error {
            Some(e) => println!("{}: error: {e}", run.id),
            None => {
                for c in &run.checks {
                    println!(
                        "{}: {} {} (margin {:e})",
                        run.id,
                        c.name,
                        if c.pass { "pass" } else { "FAIL" },
                        c.margin
                    );
                }
            }
        }
    }
    println!("report written to {}", path.display());
    ExitCode::from(report.exit_code() as u8)
}
