use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use partcap::metrics::{evaluate, read_sentences};
use partcap::pipeline::{ExperimentConfig, Pipeline, Stage};

#[derive(Parser)]
#[command(name = "partcap", about = "Part-based shape captioning pipeline")]
struct Cli {
    /// Flat `key = value` config file; missing keys keep their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Extra `key=value` overrides, applied after the config file.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Run directory.
    #[arg(long, global = true, env = "PARTCAP_OUT", default_value = "runs/default")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthetic shapes, meshes and template captions.
    Generate,
    /// Labeled voxel grids from surface samples.
    Voxelize,
    /// Geometry and colored views of every shape.
    Render,
    /// Part-geometry boxes from highlight renders.
    Gengt,
    /// Train the detector on geometry views.
    TrainGeomDetector,
    /// Map confident detections onto colored views.
    TransferGt,
    /// Fine-tune the detector on colored views.
    FinetuneDetector,
    /// Per-class pooled shape features.
    ExtractFeatures,
    /// Train the GRU captioner.
    TrainCaptioner,
    /// Greedy captions for the evaluation split.
    Caption,
    /// Score captions against references.
    Eval,
    /// Write the results table.
    Report,
    /// Every stage in order; unchanged stages are skipped.
    RunAll,
    /// Score candidate captions against references (JSON: id -> [sentences]).
    Score {
        #[arg(long)]
        candidates: PathBuf,
        #[arg(long)]
        references: PathBuf,
    },
    /// Print the effective config.
    ShowConfig,
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::read(p)?,
        None => ExperimentConfig::default(),
    };
    for kv in &cli.overrides {
        let Some((k, v)) = kv.split_once('=') else {
            bail!("override `{kv}` is not key=value");
        };
        cfg.set(k.trim(), v.trim())?;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn score(candidates: &PathBuf, references: &PathBuf) -> Result<()> {
    let cands: BTreeMap<String, String> = read_sentences(candidates)?
        .into_iter()
        .map(|(k, mut v)| {
            if v.len() != 1 {
                bail!("`{k}` needs exactly one candidate, found {}", v.len());
            }
            Ok((k, v.remove(0)))
        })
        .collect::<Result<_>>()?;
    let refs = read_sentences(references)?;
    let e = evaluate(&cands, &refs)?;
    print!("{}", e.table_text());
    let cb: Vec<String> = e.corpus_bleu.iter().map(|v| format!("{v:.4}")).collect();
    println!("corpus BLEU-1..4: {}", cb.join(" "));
    println!("exact match: {:.4}", e.exact_match_rate);
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let stage = match &cli.command {
        Command::Score { candidates, references } => return score(candidates, references),
        Command::ShowConfig => {
            print!("{}", load_config(&cli)?.to_text());
            return Ok(());
        }
        Command::RunAll => None,
        Command::Generate => Some(Stage::Generate),
        Command::Voxelize => Some(Stage::Voxelize),
        Command::Render => Some(Stage::Render),
        Command::Gengt => Some(Stage::GenGt),
        Command::TrainGeomDetector => Some(Stage::TrainGeomDetector),
        Command::TransferGt => Some(Stage::TransferGt),
        Command::FinetuneDetector => Some(Stage::FinetuneDetector),
        Command::ExtractFeatures => Some(Stage::ExtractFeatures),
        Command::TrainCaptioner => Some(Stage::TrainCaptioner),
        Command::Caption => Some(Stage::Caption),
        Command::Eval => Some(Stage::Eval),
        Command::Report => Some(Stage::Report),
    };
    let pipeline = Pipeline::new(load_config(&cli)?, &cli.out)?;
    let stages = match stage {
        Some(s) => vec![s],
        None => Stage::ALL.to_vec(),
    };
    for s in stages {
        let outcome = pipeline.run_stage(s).with_context(|| format!("stage {s} failed"))?;
        eprintln!("{s:<20} {outcome:?}");
    }
    if stage.is_none() || stage == Some(Stage::Report) {
        let report = pipeline.stage_dir(Stage::Report).join("report.txt");
        print!("{}", std::fs::read_to_string(&report).with_context(|| report.display().to_string())?);
    }
    Ok(())
}
