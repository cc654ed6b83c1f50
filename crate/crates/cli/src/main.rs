use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use onh_cli::{exit, CliError, Overrides, Pipeline, PipelineConfig, Stage};

#[derive(Parser)]
#[command(name = "onhbf", version, about = "ONH biomechanics to visual-field pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Pipeline configuration (JSON). Defaults apply to omitted fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Global seed; overrides the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; overrides the config file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Zero the strain channel of the trained model.
    #[arg(long, global = true)]
    no_strain: bool,
    /// Re-run even when outputs are current.
    #[arg(long, global = true)]
    force: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Generate phantom volumes, deformations and field labels.
    GenCohort,
    /// Extract aligned, cropped point clouds from baseline volumes.
    Extract,
    /// Track displacement and strain between baseline and deformed volumes.
    Dvc,
    /// Attach effective strain to the point clouds.
    Attach,
    /// Train one arm over all folds and save checkpoints.
    Train,
    /// Train both arms over all folds and compare them.
    Ablate,
    /// Summarize the ablation with per-stage timing.
    Report,
    /// Run every stage enabled in the config, in order.
    Run,
    /// Print the effective configuration.
    ShowConfig,
}

fn print_report(pipeline: &Pipeline) -> Result<(), CliError> {
    let text = onh_core::io::read_bytes(&pipeline.report_path())?;
    print!("{}", String::from_utf8_lossy(&text));
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let overrides = Overrides { seed: cli.seed, out: cli.out.clone(), no_strain: cli.no_strain };
    let result = PipelineConfig::load(cli.config.as_deref(), &overrides).and_then(|cfg| {
        let pipeline = Pipeline::new(cfg, cli.force);
        let stage = match cli.command {
            Command::GenCohort => Stage::GenCohort,
            Command::Extract => Stage::Extract,
            Command::Dvc => Stage::Dvc,
            Command::Attach => Stage::Attach,
            Command::Train => Stage::Train,
            Command::Ablate => Stage::Ablate,
            Command::Report => Stage::Report,
            Command::Run => {
                pipeline.run_all()?;
                if pipeline.cfg.stages.report {
                    print_report(&pipeline)?;
                }
                return Ok(());
            }
            Command::ShowConfig => {
                println!("{}", serde_json::to_string_pretty(&pipeline.cfg).expect("config serializes"));
                return Ok(());
            }
        };
        pipeline.run_stage(stage)?;
        if stage == Stage::Report {
            print_report(&pipeline)?;
        }
        Ok(())
    });
    match result {
        Ok(()) => ExitCode::from(exit::OK as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
