use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use lattice_sternberg::config::{load_config, Stage};
use lattice_sternberg::pipeline::{run_pipeline, write_json, ErrorInfo, RunOptions};

#[derive(Parser)]
#[command(name = "lattice-sternberg", version, about = "Decay norms, normal forms and Sternberg conjugacies on lattices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run pipeline stages from a JSON config.
    Run {
        config: PathBuf,
        /// Stage to run; repeat for several. Defaults to the config's list.
        #[arg(long, value_enum)]
        stage: Vec<StageArg>,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
        /// Multiply the window radius, for stability studies.
        #[arg(long, default_value_t = 1.0)]
        window_scale: f64,
        #[arg(long)]
        seed_override: Option<u64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum StageArg {
    Decay,
    Norms,
    Spectrum,
    Nf,
    Conj,
}

impl From<StageArg> for Stage {
    fn from(s: StageArg) -> Self {
        match s {
            StageArg::Decay => Stage::Decay,
            StageArg::Norms => Stage::Norms,
            StageArg::Spectrum => Stage::Spectrum,
            StageArg::Nf => Stage::Nf,
            StageArg::Conj => Stage::Conj,
        }
    }
}

fn main() -> ExitCode {
    let Command::Run { config, stage, out_dir, window_scale, seed_override } = Cli::parse().command;
    let cfg = match load_config(&config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            let info = ErrorInfo::from(&e);
            if std::fs::create_dir_all(&out_dir).is_ok() {
                let _ = write_json(&out_dir.join("report_config.json"), &serde_json::json!({ "status": "error", "error": info }));
            }
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let opts = RunOptions {
        stages: if stage.is_empty() { None } else { Some(stage.into_iter().map(Stage::from).collect()) },
        out_dir,
        window_scale,
        seed_override,
    };
    match run_pipeline(&cfg, &opts) {
        Ok(outcome) => {
            for r in &outcome.reports {
                let detail = match &r.error {
                    Some(e) => format!(" {}: {}", e.kind, e.message),
                    None => {
                        let failed: Vec<&str> = r.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
                        if failed.is_empty() { String::new() } else { format!(" failed checks: {}", failed.join(", ")) }
                    }
                };
                println!("{:<9} {:?}{}", r.stage.name(), r.status, detail);
            }
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
