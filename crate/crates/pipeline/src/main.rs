use std::path::PathBuf;
use std::process::ExitCode;

use acousmap_pipeline::{Pipeline, PipelineConfig, Stage, StageOutcome};
use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "acousmap", version, about = "Acoustic heatmap dataset and evaluation pipeline")]
struct Cli {
    /// JSON config; keys it omits take their defaults.
    #[arg(long, global = true, env = "ACOUSMAP_CONFIG")]
    config: Option<PathBuf>,

    /// Master seed, overriding the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output root holding every artifact and the manifest.
    #[arg(long, global = true, default_value = "acousmap-out")]
    out: PathBuf,

    /// Config override `path.to.key=value`; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    /// Rerun even when the recorded outputs are current.
    #[arg(long, global = true)]
    force: bool,

    /// Error bound `PARAM=x` or `MODEL.PARAM=x` checked by evaluate; repeatable.
    #[arg(long = "max-error", global = true, value_name = "KEY=BOUND")]
    max_error: Vec<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate scenes, receivers and sources.
    GenScenes,
    /// Assign train/test splits.
    Split,
    /// Record the simulator setup and write reference RIRs.
    Simulate,
    /// Extract acoustic parameters for every pair.
    ExtractParams,
    /// Build label heatmaps and fit the normalizer.
    MakeLabels,
    /// Build model input features.
    MakeFeatures,
    /// Run the baseline predictors.
    Baseline,
    /// Score predictions and write reports.
    Evaluate,
    /// Render label and prediction images.
    Plot,
    /// Write golden loss tensors.
    ExportGolden,
    /// Run every stage from gen-scenes through evaluate.
    RunAll,
    /// Print the effective config.
    ShowConfig,
}

impl Command {
    fn stage(&self) -> Option<Stage> {
        Some(match self {
            Command::GenScenes => Stage::GenScenes,
            Command::Split => Stage::Split,
            Command::Simulate => Stage::Simulate,
            Command::ExtractParams => Stage::ExtractParams,
            Command::MakeLabels => Stage::MakeLabels,
            Command::MakeFeatures => Stage::MakeFeatures,
            Command::Baseline => Stage::Baseline,
            Command::Evaluate => Stage::Evaluate,
            Command::Plot => Stage::Plot,
            Command::ExportGolden => Stage::ExportGolden,
            Command::RunAll | Command::ShowConfig => return None,
        })
    }
}

fn report(outcome: &StageOutcome) {
    let state = if outcome.skipped { "up to date" } else { "done" };
    println!("{:<15} {state:<10} {:>8.1} s  output {}", outcome.stage.name(), outcome.elapsed.as_secs_f64(), &outcome.output_sha256[..12]);
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run() -> Result<ExitCode> {
    let cli = Cli::parse();
    let mut overrides = cli.overrides.clone();
    if let Some(seed) = cli.seed {
        overrides.push(format!("seed={seed}"));
    }
    for bound in &cli.max_error {
        let (key, value) = bound.split_once('=').with_context(|| format!("--max-error `{bound}` is not KEY=BOUND"))?;
        // keys may contain dots, so they are set as one JSON object
        overrides.push(format!("evaluate.max_error={}", serde_json::json!({ key: value.parse::<f64>()? })));
    }
    let config = PipelineConfig::load(cli.config.as_deref(), &overrides).context("loading config")?;
    if matches!(cli.command, Command::ShowConfig) {
        println!("{}", serde_json::to_string_pretty(&config)?);
        return Ok(ExitCode::SUCCESS);
    }
    let mut pipeline = Pipeline::new(&cli.out, config).with_context(|| format!("opening {}", cli.out.display()))?;
    let outcomes = match cli.command.stage() {
        Some(stage) => vec![pipeline.run(stage, cli.force)?],
        None => pipeline.run_all(cli.force)?,
    };
    let mut violations = Vec::new();
    for o in &outcomes {
        report(o);
        violations.extend(o.violations.iter().cloned());
    }
    if let Some(m) = pipeline.manifest() {
        println!("manifest {}", m.hash()?);
    }
    if let Some(table) = outcomes.iter().find(|o| o.stage == Stage::Evaluate) {
        if !table.reports.is_empty() {
            print!("{}", acousmap_core::eval::report_table(&table.reports));
        }
    }
    if violations.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        for v in &violations {
            eprintln!("threshold violated: {v}");
        }
        Ok(ExitCode::FAILURE)
    }
}
