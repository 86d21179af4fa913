use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use collabnet::ingest::InputFormat;
use collabnet::pipeline::{run_all, run_stage, PipelineConfig, PipelineError, Stage};

/// Deduplicated collaboration networks, gender and field mixing metrics, and
/// heavy-tail fits from per-scientist publication lists.
#[derive(Parser, Debug)]
#[command(name = "collabnet", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Options,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Generate a synthetic corpus with ground truth
    Synth,
    /// Parse and validate the input records
    Ingest,
    /// Cluster duplicate publication records
    Dedup,
    /// Build the collaboration network
    Build,
    /// Per-scientist metrics, field tables, histograms and curves
    Metrics,
    /// Fit degree and weight distributions
    Fit,
    /// Write all tables, figure data and the run manifest
    Report,
    /// Run every stage from `synth` to `report`
    All,
}

#[derive(Args, Debug)]
struct Options {
    /// key = value config file; flags override it
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory shared by all stages
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Input records for `ingest` (default: <out>/corpus.jsonl)
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    /// Input format: jsonl or csv
    #[arg(long, global = true)]
    format: Option<InputFormat>,
    /// Titles closer than this fraction of the longer one are duplicates
    #[arg(long, global = true)]
    dedup_threshold: Option<f64>,
    /// Log-bin ratio for the distribution fits
    #[arg(long, global = true)]
    bin_ratio: Option<f64>,
    /// Seed for the synthetic corpus
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (results do not depend on it)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Any config key, e.g. --set homophily=0.5 (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    sets: Vec<String>,
}

fn config(opts: &Options) -> Result<PipelineConfig, PipelineError> {
    let mut cfg = PipelineConfig::default();
    if let Some(path) = &opts.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::Usage(format!("config {}: {e}", path.display())))?;
        cfg.apply_file_text(&text)?;
    }
    for s in &opts.sets {
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| PipelineError::Usage(format!("--set expects KEY=VALUE, got `{s}`")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    if let Some(p) = &opts.out {
        cfg.out = p.clone();
    }
    if let Some(p) = &opts.input {
        cfg.input = Some(p.clone());
    }
    if let Some(f) = opts.format {
        cfg.format = f;
    }
    if let Some(t) = opts.dedup_threshold {
        cfg.dedup_threshold = t;
    }
    if let Some(r) = opts.bin_ratio {
        cfg.bin_ratio = r;
    }
    if let Some(s) = opts.seed {
        cfg.synth.seed = s;
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<Vec<String>, PipelineError> {
    if let Some(n) = cli.opts.threads {
        if n == 0 {
            return Err(PipelineError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| PipelineError::Usage(e.to_string()))?;
    }
    let cfg = config(&cli.opts)?;
    let stage = match cli.command {
        Command::Synth => Stage::Synth,
        Command::Ingest => Stage::Ingest,
        Command::Dedup => Stage::Dedup,
        Command::Build => Stage::Build,
        Command::Metrics => Stage::Metrics,
        Command::Fit => Stage::Fit,
        Command::Report => Stage::Report,
        Command::All => return run_all(&cfg),
    };
    run_stage(stage, &cfg)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(lines) => {
            for l in lines {
                println!("{l}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
