mod commands;
mod config;
mod imageio;
mod manifest;

use anyhow::Result;
use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

/// Marks a failure as caller misuse (exit code 1) rather than bad input
/// data (exit code 2).
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Parser)]
#[command(
    name = "facefront",
    version,
    about = "Face landmarking, frontalization and video-matching evaluation toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the built-in synthetic depth template, its landmarks and the
    /// matching texture image.
    GenTemplate {
        /// Output directory (created if missing).
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Train the cascade landmarker on a directory of image/annotation
    /// pairs (x.png + x.lm).
    TrainLandmarker {
        /// TOML configuration; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        train_dir: PathBuf,
        #[arg(long)]
        model_out: PathBuf,
    },
    /// Run a trained landmarker on one image.
    Landmark {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        image: PathBuf,
        /// Output landmark text file.
        #[arg(long)]
        out: PathBuf,
        /// Initialization box as x,y,width,height; defaults to the full
        /// image.
        #[arg(long)]
        init_box: Option<String>,
    },
    /// Frontalize a directory of face images. Landmarks come from x.lm
    /// sidecar files, or from the landmarker when a model is given.
    Frontalize {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        template_depth: PathBuf,
        #[arg(long)]
        template_landmarks: PathBuf,
        #[arg(long)]
        input_dir: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Score accumulated video descriptors and write ROC/CMC/score CSVs.
    Evaluate {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Directory holding the descriptor files named in the labels CSV.
        #[arg(long)]
        descriptor_dir: PathBuf,
        /// CSV with header file,subject,video.
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Render the synthetic template across the configured yaw bins, run
    /// the frontalization pipeline on each render and report yields.
    YieldSweep {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Optional landmarker model; ground-truth render landmarks are
        /// used when omitted.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Print a model summary.
    InspectModel {
        #[arg(long)]
        model: PathBuf,
        /// Also export the full model as JSON.
        #[arg(long)]
        json_out: Option<PathBuf>,
    },
}

fn load_config(path: &Option<PathBuf>) -> Result<config::PipelineConfig> {
    match path {
        Some(p) => config::PipelineConfig::load(p)
            .map_err(|e| UsageError(format!("{e:#}")).into()),
        None => Ok(config::PipelineConfig::default()),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenTemplate { out_dir } => commands::gen_template::run(&out_dir),
        Command::TrainLandmarker {
            config,
            train_dir,
            model_out,
        } => {
            let cfg = load_config(&config)?;
            commands::train::run(&cfg, &train_dir, &model_out)
        }
        Command::Landmark {
            model,
            image,
            out,
            init_box,
        } => commands::landmark::run(&model, &image, &out, init_box.as_deref()),
        Command::Frontalize {
            config,
            model,
            template_depth,
            template_landmarks,
            input_dir,
            out_dir,
        } => {
            let cfg = load_config(&config)?;
            commands::frontalize::run(
                &cfg,
                model.as_deref(),
                &template_depth,
                &template_landmarks,
                &input_dir,
                &out_dir,
            )
        }
        Command::Evaluate {
            config,
            descriptor_dir,
            labels,
            out_dir,
        } => {
            let cfg = load_config(&config)?;
            commands::evaluate::run(&cfg, &descriptor_dir, &labels, &out_dir)
        }
        Command::YieldSweep {
            config,
            model,
            out_dir,
        } => {
            let cfg = load_config(&config)?;
            commands::sweep::run(&cfg, model.as_deref(), &out_dir)
        }
        Command::InspectModel { model, json_out } => {
            commands::inspect::run(&model, json_out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
