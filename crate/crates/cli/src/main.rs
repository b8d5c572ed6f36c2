use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use impurity_vqe_cli::config::ExperimentConfig;
use impurity_vqe_cli::output::write_json;
use impurity_vqe_cli::pipeline::{self, StageError};
use impurity_vqe_cli::verify::{self, Status};

const EXIT_VERIFY_FAILED: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(name = "impurity-vqe", version, about = "VQE and spectral-moment experiments on star-geometry impurity models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// More logging; repeat for debug output.
    #[arg(long, short, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand)]
enum Command {
    /// Runs the full pipeline for one experiment configuration.
    Run(RunArgs),
    /// Exact-diagonalization-only pipeline for the same configuration.
    EdReference(RunArgs),
    /// Recomputes references and invariants for a finished run directory.
    Verify {
        /// Run directory.
        dir: PathBuf,
    },
    /// Prints parameter counts of the standard ansatz families.
    CountParams,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Replaces the VQE and noise seeds.
    #[arg(long)]
    seed_override: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure {n} threads: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    }
    match cli.command {
        Command::Run(args) => run(&args, false),
        Command::EdReference(args) => run(&args, true),
        Command::Verify { dir } => run_verify(&dir),
        Command::CountParams => {
            println!("ansatz,model,n_params");
            for (label, model, n) in pipeline::parameter_table() {
                println!("{label},{model},{n}");
            }
            ExitCode::SUCCESS
        }
    }
}

fn run(args: &RunArgs, oracle_only: bool) -> ExitCode {
    let cfg = match ExperimentConfig::load(&args.config).and_then(|c| c.resolve(args.out.as_deref(), args.seed_override)) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            let dir = args.out.clone().unwrap_or_else(|| PathBuf::from("."));
            write_error(&dir, &StageError { stage: "config", message: e });
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    match pipeline::run(&cfg, oracle_only) {
        Ok(meta) => {
            match meta.final_energy {
                Some(e) => println!("E = {e:.12} (ED {:.12})", meta.ed_energy),
                None => println!("E_ED = {:.12}", meta.ed_energy),
            }
            println!("results in {}", cfg.output_dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            write_error(&cfg.output_dir, &e);
            ExitCode::from(EXIT_NUMERICAL)
        }
    }
}

fn write_error(dir: &Path, e: &StageError) {
    if std::fs::create_dir_all(dir).is_ok() {
        if let Err(w) = write_json(&dir.join("error.json"), e) {
            eprintln!("error: cannot write error record: {w}");
        }
    }
}

fn run_verify(dir: &Path) -> ExitCode {
    match verify::verify(dir) {
        Ok(report) => {
            for c in &report.checks {
                let tag = match c.status {
                    Status::Pass => "PASS",
                    Status::Fail => "FAIL",
                    Status::Info => "INFO",
                };
                println!("{tag} {}: {}", c.name, c.detail);
            }
            if report.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_VERIFY_FAILED)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}
