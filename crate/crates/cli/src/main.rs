use std::path::{Path, PathBuf};
use std::process::ExitCode;

use augforge_core::backends::{BackendDescriptor, BackendDescriptors};
use augforge_core::pipeline::{
    run_baseline, run_structured, run_video, stats, validate_dataset, PipelineConfig, PipelineError, RunSummary,
};
use augforge_core::structured::BaselineMode;
use clap::{Args, Parser, Subcommand, ValueEnum};

const EXIT_USAGE: u8 = 1;
const EXIT_INVALID: u8 = 2;
const EXIT_BUDGET: u8 = 3;

#[derive(Parser)]
#[command(name = "augforge", version, about = "Augment robot demonstration datasets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Structured-regime augmentation of tabletop episodes.
    AugmentStructured(RunArgs),
    /// Video-regime augmentation of RGB trajectories.
    AugmentVideo {
        #[command(flatten)]
        run: RunArgs,
        /// Copy the source trajectories into the output as well.
        #[arg(long)]
        include_originals: bool,
    },
    /// Check a dataset against its manifest and schema.
    Validate {
        #[arg(long)]
        input: PathBuf,
    },
    /// Summarise a dataset.
    Stats {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Run one of the comparison augmentations.
    Baseline {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        mode: BaselineMode,
        /// Directory of texture patches.
        #[arg(long)]
        patches: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// JSON run configuration; the flags below override its fields.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    num_augmentations: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    backend: Option<BackendChoice>,
    #[arg(long, env = "AUGFORGE_BACKEND_URL")]
    backend_url: Option<String>,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendChoice {
    Mock,
    Http,
}

impl RunArgs {
    fn config(&self) -> Result<PipelineConfig, PipelineError> {
        let mut cfg = PipelineConfig::load(&self.config)?;
        if let Some(n) = self.num_augmentations {
            cfg.num_augmentations = n;
        }
        if let Some(s) = self.seed {
            cfg.global_seed = s;
        }
        if let Some(w) = self.workers {
            cfg.workers = w;
        }
        match self.backend {
            Some(BackendChoice::Mock) => cfg.backends = BackendDescriptors::default(),
            Some(BackendChoice::Http) => {
                let url = self
                    .backend_url
                    .clone()
                    .ok_or_else(|| PipelineError::Config("--backend http needs --backend-url".into()))?;
                cfg.backends = BackendDescriptors::all(BackendDescriptor::http(url));
            }
            None => {}
        }
        cfg.check()?;
        Ok(cfg)
    }
}

fn report(s: &RunSummary, output: &Path) {
    println!(
        "wrote {} episodes to {} ({} of {} items failed)",
        s.manifest.episodes.len(),
        output.display(),
        s.failed,
        s.total
    );
}

fn run(cmd: Command) -> Result<(), PipelineError> {
    match cmd {
        Command::AugmentStructured(a) => {
            let cfg = a.config()?;
            report(&run_structured(&cfg, &a.input, &a.output)?, &a.output);
        }
        Command::AugmentVideo { run: a, include_originals } => {
            let mut cfg = a.config()?;
            cfg.include_originals |= include_originals;
            report(&run_video(&cfg, &a.input, &a.output)?, &a.output);
        }
        Command::Validate { input } => {
            let problems = validate_dataset(&input)?;
            if !problems.is_empty() {
                return Err(PipelineError::Validation(problems));
            }
            println!("{}: ok", input.display());
        }
        Command::Stats { input, json } => {
            let s = stats(&input)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&s).expect("stats serialise"));
            } else {
                print!("{s}");
            }
        }
        Command::Baseline { input, output, mode, patches, seed } => {
            let cfg = PipelineConfig { global_seed: seed.unwrap_or(0), ..PipelineConfig::default() };
            report(&run_baseline(&cfg, &input, &output, mode, &patches)?, &output);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(PipelineError::Validation(problems)) => {
            eprintln!("validation failed with {} problems:", problems.len());
            for p in &problems {
                eprintln!("  {p}");
            }
            ExitCode::from(EXIT_INVALID)
        }
        Err(e @ PipelineError::FailureBudget { .. }) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_BUDGET)
        }
        // An unreadable dataset is a validation failure too.
        Err(e @ PipelineError::Data(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INVALID)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
