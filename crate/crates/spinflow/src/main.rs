use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use spinflow::config::parse_config;
use spinflow::presets::{preset, scenario_presets};
use spinflow::runner::run_experiment;

#[derive(Parser)]
#[command(
    name = "spinflow",
    version,
    about = "Simulator for one-directional nuclear polarization transport in optically pumped electron/nuclear spin chains"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment from a TOML config file.
    Run {
        config: PathBuf,
        /// Output directory (default: $SPINFLOW_OUT or ./spinflow-out).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Trajectory-level worker threads.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Run a named preset scenario.
    Preset {
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// List the available presets.
    ListPresets,
    /// Parse and validate a config file without running it.
    Validate { config: PathBuf },
}

fn default_out() -> PathBuf {
    std::env::var_os("SPINFLOW_OUT")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("spinflow-out"))
}

fn fail(err: &spinflow::Error) -> ExitCode {
    let doc = serde_json::json!({
        "error": err.to_string(),
    });
    eprintln!("{}", serde_json::to_string_pretty(&doc).unwrap());
    ExitCode::FAILURE
}

fn main() -> ExitCode {
    spinflow::blas_guard::ensure_single_thread_blas();
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, out, seed, threads } => {
            let mut spec = match parse_config(&config) {
                Ok(s) => s,
                Err(e) => return fail(&e),
            };
            if let Some(s) = seed {
                spec.master_seed = s;
            }
            let out_dir = out.unwrap_or_else(default_out);
            match run_experiment(&spec, &out_dir, threads) {
                Ok(result) => {
                    println!("wrote {}", result.observables_csv.display());
                    if let Some(g) = result.grid_csv {
                        println!("wrote {}", g.display());
                    }
                    println!("wrote {}", result.metadata_json.display());
                    ExitCode::SUCCESS
                }
                Err(e) => fail(&e),
            }
        }
        Command::Preset { name, out, seed, threads } => {
            let mut spec = match preset(&name) {
                Ok(s) => s,
                Err(e) => return fail(&e),
            };
            if let Some(s) = seed {
                spec.master_seed = s;
            }
            let out_dir = out.unwrap_or_else(default_out).join(&name);
            match run_experiment(&spec, &out_dir, threads) {
                Ok(result) => {
                    println!("wrote {}", result.observables_csv.display());
                    if let Some(g) = result.grid_csv {
                        println!("wrote {}", g.display());
                    }
                    println!("wrote {}", result.metadata_json.display());
                    ExitCode::SUCCESS
                }
                Err(e) => fail(&e),
            }
        }
        Command::ListPresets => match scenario_presets() {
            Ok(list) => {
                for (name, spec) in list {
                    println!("{name:18} {:?}", spec.scenario);
                }
                ExitCode::SUCCESS
            }
            Err(e) => fail(&e),
        },
        Command::Validate { config } => match parse_config(&config) {
            Ok(spec) => {
                println!("valid: scenario {:?}", spec.scenario);
                ExitCode::SUCCESS
            }
            Err(e) => fail(&e),
        },
    }
}
