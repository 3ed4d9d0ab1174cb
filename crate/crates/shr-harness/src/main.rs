//! `shr` command line: synth | train | tune-lambdas | eval | register |
//! make-model.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use shr_harness::config::RunConfig;
use shr_harness::{eval, load_or_make_model, register, synth, train, tune};

#[derive(Parser)]
#[command(
    name = "shr",
    about = "Occlusion-robust 3D-to-2D facial model registration via SensiblePoint hypothesis refinement"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration JSON; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configured root seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Head model JSON; a deterministic synthetic head is used when omitted.
    #[arg(long)]
    model: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate scene bundles for all splits plus the reference database.
    Synth {
        #[command(flatten)]
        common: Common,
        /// Output dataset directory (scenes/ and refdb/ are created inside).
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit the visibility model and train the three SP policies.
    Train {
        #[command(flatten)]
        common: Common,
        /// Dataset directory produced by `synth`.
        #[arg(long)]
        data: PathBuf,
        /// Output directory for model files.
        #[arg(long)]
        out: PathBuf,
    },
    /// Tune the score weights on the validation split.
    TuneLambdas {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: PathBuf,
        /// Directory with trained models.
        #[arg(long)]
        models: PathBuf,
        /// Where to write the tuned weights JSON (printed when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate all four methods on the test split.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        models: PathBuf,
        /// Report output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Register one scene bundle and emit pose + overlay data.
    Register {
        #[command(flatten)]
        common: Common,
        /// Scene bundle directory.
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        models: PathBuf,
        /// Reference database directory (defaults to <scene>/../../../../refdb).
        #[arg(long)]
        refdb: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the deterministic synthetic head model to a JSON file.
    MakeModel {
        #[arg(long, default_value_t = 2000)]
        points: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_config(common: &Common) -> Result<RunConfig, shr_harness::HarnessError> {
    let mut config = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        config.root_seed = seed;
    }
    Ok(config)
}

fn run() -> Result<(), Box<dyn std::error::Error>> {
    match Cli::parse().command {
        Command::Synth { common, out } => {
            let config = load_config(&common)?;
            let model = load_or_make_model(&config, common.model.as_deref())?;
            synth::cmd_synth(&config, &model, &out)?;
            println!("dataset written to {}", out.display());
        }
        Command::Train { common, data, out } => {
            let config = load_config(&common)?;
            let model = load_or_make_model(&config, common.model.as_deref())?;
            let outcome = train::cmd_train(&config, &model, &data, &out)?;
            println!(
                "trained on {} scene rollouts ({} skipped); models in {}",
                outcome.scenes_used,
                outcome.scenes_skipped,
                out.display()
            );
        }
        Command::TuneLambdas { common, data, models, out } => {
            let config = load_config(&common)?;
            let model = load_or_make_model(&config, common.model.as_deref())?;
            let weights = tune::cmd_tune_lambdas(&config, &model, &data, &models)?;
            let text = serde_json::to_string_pretty(&weights)?;
            match out {
                Some(path) => {
                    std::fs::write(&path, &text)?;
                    println!("tuned weights written to {}", path.display());
                }
                None => println!("{text}"),
            }
        }
        Command::Eval { common, data, models, out } => {
            let config = load_config(&common)?;
            let model = load_or_make_model(&config, common.model.as_deref())?;
            let report = eval::cmd_eval(&config, &model, &data, &models, &out)?;
            println!("report with {} rows written to {}", report.rows.len(), out.display());
        }
        Command::Register { common, scene, models, refdb, out } => {
            let config = load_config(&common)?;
            let model = load_or_make_model(&config, common.model.as_deref())?;
            let refdb_dir = match refdb {
                Some(p) => p,
                None => scene
                    .ancestors()
                    .nth(4)
                    .map(|p| p.join("refdb"))
                    .ok_or("cannot infer refdb location; pass --refdb")?,
            };
            let pose = register::cmd_register(&config, &model, &scene, &models, &refdb_dir, &out)?;
            println!(
                "registered: scale {:.4}, translation ({:.1}, {:.1}); outputs in {}",
                pose.scale,
                pose.translation[0],
                pose.translation[1],
                out.display()
            );
        }
        Command::MakeModel { points, seed, out } => {
            let model = shr_core::geometry::make_synthetic_head(points, seed);
            std::fs::write(&out, model.to_json())?;
            println!("model with {points} points written to {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
