mod commands;
mod config;
mod error;
mod files;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use config::RunConfig;
use error::CliError;

/// Curvature smoothing and smoothing-based saliency for point clouds.
#[derive(Debug, Parser)]
#[command(name = "curvsal", version)]
struct Cli {
    /// JSON run config; flags override its values.
    #[arg(long, global = true, env = "CURVSAL_CONFIG")]
    config: Option<PathBuf>,

    /// Override any config value, e.g. `--set smooth.k_max=80`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Seed for surface sampling, training and the synthetic corpus.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Points sampled from each OFF mesh.
    #[arg(long, global = true)]
    points: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Smooth one shape into a sequence of levels and score the smoothing.
    Smooth(SmoothArgs),
    /// Train the toy classifier.
    Train(TrainArgs),
    /// Compute saliency masks for one or more shapes.
    Saliency(SaliencyArgs),
    /// Deletion/insertion curves and per-class AUC tables.
    Eval(EvalArgs),
    /// Write the synthetic labeled corpus as PLY files.
    Generate(GenerateArgs),
}

#[derive(Debug, Args, Serialize)]
struct SmoothArgs {
    /// OFF mesh or PLY cloud.
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Number of smoothed levels written after the input level.
    #[arg(long)]
    levels: Option<usize>,
    #[arg(long)]
    iterations: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
struct TrainArgs {
    /// Train on the generated synthetic corpus.
    #[arg(long, conflicts_with = "data", required_unless_present = "data")]
    synthetic: bool,
    /// Dataset root with one subdirectory per class.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    epochs: Option<usize>,
    /// Synthetic shapes per class.
    #[arg(long)]
    per_class: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Pcigos,
    Maskonly,
    Igonly,
    Zheng,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Pcigos => "pcigos",
            Method::Maskonly => "maskonly",
            Method::Igonly => "igonly",
            Method::Zheng => "zheng",
        }
    }
}

#[derive(Debug, Args, Serialize)]
struct SaliencyArgs {
    /// Shape files or directories.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Method::Pcigos)]
    method: Method,
    /// Class to explain, by name or index. Defaults to the class directory
    /// of each input, else the predicted class.
    #[arg(long)]
    class: Option<String>,
    #[arg(long)]
    anchors: Option<usize>,
    #[arg(long)]
    opt_steps: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Curvature,
    Point,
    All,
}

#[derive(Debug, Args, Serialize)]
struct EvalArgs {
    /// Shape files or directories.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Directory of `<shape>.mask.csv` files from `saliency`. Without it the
    /// masks are computed with `--method`.
    #[arg(long)]
    masks: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Method::Pcigos)]
    method: Method,
    #[arg(long, value_enum, default_value_t = Mode::All)]
    mode: Mode,
    #[arg(long)]
    class: Option<String>,
}

#[derive(Debug, Args, Serialize)]
struct GenerateArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    per_class: Option<usize>,
}

fn build_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut c = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    for s in &cli.set {
        c.set(s)?;
    }
    if let Some(seed) = cli.seed {
        c.sample_seed = seed;
        c.train.seed = seed;
        c.synthetic.seed = seed;
    }
    if let Some(p) = cli.points {
        c.points = p;
        c.synthetic.points = p;
    }
    match &cli.command {
        Command::Smooth(a) => {
            if let Some(l) = a.levels {
                c.smooth.levels = l;
            }
            if let Some(i) = a.iterations {
                c.smooth.iterations = i;
            }
        }
        Command::Train(a) => {
            if let Some(e) = a.epochs {
                c.train.epochs = e;
            }
            if let Some(n) = a.per_class {
                c.synthetic.per_class = n;
            }
        }
        Command::Saliency(a) => {
            if let Some(n) = a.anchors {
                c.mask.anchors = n;
            }
            if let Some(n) = a.opt_steps {
                c.mask.opt_steps = n;
                c.mask.mask_only_steps = n;
            }
        }
        Command::Generate(a) => {
            if let Some(n) = a.per_class {
                c.synthetic.per_class = n;
            }
        }
        Command::Eval(_) => {}
    }
    c.validate()?;
    Ok(c)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config = build_config(&cli)?;
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    }
    match &cli.command {
        Command::Smooth(a) => commands::smooth(a, &config),
        Command::Train(a) => commands::train(a, &config),
        Command::Saliency(a) => commands::saliency(a, &config),
        Command::Eval(a) => commands::eval(a, &config),
        Command::Generate(a) => commands::generate(a, &config),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
