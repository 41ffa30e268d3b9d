use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use srres::Error;

mod commands;

#[derive(Parser, Debug)]
#[command(name = "srres", version, about = "Residual CNN super-resolution: train, evaluate, upscale, analyze")]
struct Cli {
    /// Seed for weight initialization and data shuffling.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// key=value training config; command-line flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

/// Training hyperparameter overrides shared by `train` and `shapes-experiment`.
#[derive(Args, Debug, Default)]
struct TrainFlags {
    #[arg(long)]
    epochs: Option<String>,
    #[arg(long)]
    lr: Option<String>,
    #[arg(long)]
    lr_step: Option<String>,
    #[arg(long)]
    momentum: Option<String>,
    #[arg(long)]
    weight_decay: Option<String>,
    #[arg(long)]
    clip_tau: Option<String>,
    #[arg(long)]
    batch: Option<String>,
    #[arg(long)]
    patch: Option<String>,
    /// Comma-separated subset of 2,3,4.
    #[arg(long)]
    scales: Option<String>,
    /// `residual` (predict hr - lr) or `direct`.
    #[arg(long)]
    objective: Option<String>,
    /// Patch grid stride; defaults to the manifest value.
    #[arg(long)]
    stride: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train a network and write its checkpoint and history CSV.
    Train {
        /// Manifest file or directory of training images.
        #[arg(long)]
        data: PathBuf,
        /// Output checkpoint.
        #[arg(long)]
        out: PathBuf,
        /// Architecture string such as 16_3,32_3,64_3.
        #[arg(long)]
        arch: Option<String>,
        /// Directory of held-out images scored each epoch; enables the `best` checkpoint.
        #[arg(long)]
        val: Option<PathBuf>,
        /// History CSV path (default: <out>.history.csv).
        #[arg(long)]
        history: Option<PathBuf>,
        #[command(flatten)]
        flags: TrainFlags,
    },
    /// Score a checkpoint against bicubic upscaling.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Directory of ground-truth images.
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = "2,3,4")]
        scales: String,
        /// Report CSV to write.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-image CSV to write.
        #[arg(long)]
        per_image: Option<PathBuf>,
    },
    /// Upscale one image by an integer factor.
    Upscale {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        scale: usize,
        #[arg(long)]
        output: PathBuf,
    },
    /// Print structural facts about an architecture.
    Analyze {
        arch: String,
        /// Second architecture to compare parameter counts against.
        #[arg(long)]
        compare: Option<String>,
    },
    /// Train the five width-profile families at matched depth and tabulate them.
    ShapesExperiment {
        /// Maximum width N (at least 8).
        #[arg(long)]
        base_width: usize,
        /// Manifest file or directory of training images.
        #[arg(long)]
        data: PathBuf,
        /// Held-out images; without it the last fifth of the training images is held out.
        #[arg(long)]
        val: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        flags: TrainFlags,
    },
    /// Write the simulated low-resolution version of an image as PNG.
    Degrade {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        scale: usize,
        /// Degraded image at the original grid size.
        #[arg(long)]
        output: PathBuf,
        /// Also write the downscaled image before re-upscaling.
        #[arg(long)]
        small: Option<PathBuf>,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Usage(_) | Error::Parse { .. } | Error::Config { .. } => 1,
        Error::NonFiniteGradient(_) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start {n} threads: {e}");
            return ExitCode::from(1);
        }
    }
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
