//! Command-line surface: train, predict, eval, verify, grid, stats, split.

use std::fs;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::booster::{train, Ensemble, TrainConfig};
use crate::dataset::RankingDataset;
use crate::error::{Error, Result};
use crate::metrics::{evaluate, MetricReport};
use crate::model;
use crate::objective::Objective;
use crate::split::{Criterion, OleMode};
use crate::tree::GrowthOrder;
use crate::verify::{theorem_suite, VerificationReport};

#[derive(Debug, Parser)]
#[command(name = "olerank", version, about = "Gradient-boosted learning to rank with pluggable split criteria")]
pub struct Cli {
    /// Worker threads (default: available parallelism). Results do not
    /// depend on this.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model and write the model file plus a per-iteration CSV log.
    Train(TrainArgs),
    /// Score a dataset with a trained model.
    Predict(PredictArgs),
    /// Evaluate a model: NDCG at cutoffs and ERR, printed as percentages.
    Eval(EvalArgs),
    /// Run the verification suite; exits non-zero if any check fails.
    Verify(VerifyArgs),
    /// Run the six-configuration grid (leaves 10/20 x learning rate
    /// 0.06/0.10/0.12) and write one model and log per configuration.
    Grid(GridArgs),
    /// Print dataset summary counts.
    Stats(StatsArgs),
    /// Split a dataset into parts by query with a seeded shuffle.
    Split(SplitArgs),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Objective: mart | mcrank | lambdamart | rankexp
    #[arg(long)]
    pub objective: String,
    /// Split criterion: se | wse | rwse | ole | mart
    #[arg(long)]
    pub criterion: String,
    #[arg(long, default_value_t = 10)]
    pub leaves: usize,
    #[arg(long = "learning-rate", default_value_t = 0.1)]
    pub learning_rate: f64,
    /// Boosting iterations. Defaults to 2500 for mcrank and 1000 otherwise.
    #[arg(long)]
    pub trees: Option<usize>,
    #[arg(long)]
    pub valid: Option<PathBuf>,
    /// Random seed. Training is deterministic; the seed only participates in
    /// utilities that sample (dataset splitting, verification instances).
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Training log path (default: `<out>.log.csv`).
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// OLE curvature handling for pair-wise objectives: exact | additive
    #[arg(long = "ole-mode", default_value = "exact")]
    pub ole_mode: String,
    /// Frontier expansion order: width | depth
    #[arg(long, default_value = "width")]
    pub growth: String,
    #[arg(long = "min-samples-leaf", default_value_t = 1)]
    pub min_samples_leaf: usize,
    /// NDCG truncation for LambdaMART pair weights (default: full list).
    #[arg(long = "lambda-cutoff")]
    pub lambda_cutoff: Option<usize>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Output path for one score per document line (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Comma-separated NDCG cutoffs.
    #[arg(long, default_value = "1,3,10")]
    pub cutoffs: String,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 2024)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub cases: usize,
    /// Also write the report as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub objective: String,
    #[arg(long, default_value = "ole")]
    pub criterion: String,
    #[arg(long)]
    pub trees: Option<usize>,
    #[arg(long)]
    pub valid: Option<PathBuf>,
    #[arg(long = "out-dir")]
    pub out_dir: PathBuf,
    #[arg(long = "ole-mode", default_value = "exact")]
    pub ole_mode: String,
    #[arg(long = "min-samples-leaf", default_value_t = 1)]
    pub min_samples_leaf: usize,
    #[arg(long = "lambda-cutoff")]
    pub lambda_cutoff: Option<usize>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub data: PathBuf,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Comma-separated fractions summing to 1, one output file per part.
    #[arg(long, default_value = "0.6,0.2,0.2")]
    pub fractions: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output files are `<prefix>.part<i>.letor`.
    #[arg(long = "out-prefix")]
    pub out_prefix: String,
}

fn load_dataset(path: &Path) -> Result<RankingDataset> {
    let file = File::open(path)
        .map_err(|e| Error::Invalid(format!("cannot open {}: {e}", path.display())))?;
    RankingDataset::parse_letor(file)
}

fn parse_cutoffs(text: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| Error::Config(format!("bad cutoff `{t}`")))
        })
        .collect()
}

fn default_trees(objective: Objective) -> usize {
    match objective {
        Objective::McRank => 2500,
        _ => 1000,
    }
}

#[allow(clippy::too_many_arguments)] // mirrors the flag surface
fn build_config(
    objective: &str,
    criterion: &str,
    leaves: usize,
    learning_rate: f64,
    trees: Option<usize>,
    ole_mode: &str,
    growth: &str,
    min_samples_leaf: usize,
    lambda_cutoff: Option<usize>,
) -> Result<TrainConfig> {
    let objective = Objective::from_id(objective)?;
    let cfg = TrainConfig {
        objective,
        criterion: Criterion::from_id(criterion)?,
        leaves,
        learning_rate,
        trees: trees.unwrap_or_else(|| default_trees(objective)),
        min_samples_leaf,
        ole_mode: OleMode::from_id(ole_mode)?,
        growth: GrowthOrder::from_id(growth)?,
        lambda_cutoff,
        metric_cutoffs: vec![1, 3, 10],
    };
    cfg.validate()?;
    Ok(cfg)
}

/// CSV with the fixed header `iter,train_loss,ndcg1,ndcg3,ndcg10,err`;
/// metric columns stay empty without a validation set.
fn write_training_log(ens: &Ensemble, path: &Path) -> Result<()> {
    let mut out = String::from("iter,train_loss,ndcg1,ndcg3,ndcg10,err\n");
    for (i, rec) in ens.log().iterations.iter().enumerate() {
        match &rec.valid {
            Some(m) => {
                let ndcg: Vec<f64> = m.ndcg_at.iter().map(|(_, v)| *v).collect();
                out.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    i + 1,
                    rec.train_loss,
                    ndcg[0],
                    ndcg[1],
                    ndcg[2],
                    m.err
                ));
            }
            None => {
                out.push_str(&format!("{},{},,,,\n", i + 1, rec.train_loss));
            }
        }
    }
    fs::write(path, out)?;
    Ok(())
}

fn print_report(report: &MetricReport) {
    for (k, v) in &report.ndcg_at {
        println!("NDCG@{k} {:.2}", v * 100.0);
    }
    println!("ERR {:.2}", report.err * 100.0);
}

fn run_train(args: &TrainArgs) -> Result<()> {
    let cfg = build_config(
        &args.objective,
        &args.criterion,
        args.leaves,
        args.learning_rate,
        args.trees,
        &args.ole_mode,
        &args.growth,
        args.min_samples_leaf,
        args.lambda_cutoff,
    )?;
    let ds = load_dataset(&args.data)?;
    let valid = args.valid.as_deref().map(load_dataset).transpose()?;
    println!(
        "training {} / {} on {} queries, {} docs, {} features (leaves {}, lr {}, trees {})",
        cfg.objective.id(),
        cfg.criterion.id(),
        ds.num_queries(),
        ds.num_docs(),
        ds.num_features(),
        cfg.leaves,
        cfg.learning_rate,
        cfg.trees
    );
    let ens = train(&ds, &cfg, valid.as_ref())?;
    model::save(&ens, &args.out)?;
    let log_path = args
        .log
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{}.log.csv", args.out.display())));
    write_training_log(&ens, &log_path)?;
    if let Some(loss) = ens.log().final_loss() {
        println!("final training loss {loss}");
    }
    println!("model written to {}", args.out.display());
    println!("log written to {}", log_path.display());
    Ok(())
}

fn run_predict(args: &PredictArgs) -> Result<()> {
    let ens = model::load(&args.model)?;
    let ds = load_dataset(&args.data)?;
    let scores = ens.predict_scores(&ds)?;
    let mut text = String::new();
    for s in &scores {
        text.push_str(&format!("{s}\n"));
    }
    match &args.out {
        Some(path) => fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn run_eval(args: &EvalArgs) -> Result<()> {
    let ens = model::load(&args.model)?;
    let ds = load_dataset(&args.data)?;
    let cutoffs = parse_cutoffs(&args.cutoffs)?;
    let scores = ens.predict_scores(&ds)?;
    let report = evaluate(&ds, &scores, &cutoffs)?;
    print_report(&report);
    Ok(())
}

fn run_verify(args: &VerifyArgs) -> Result<i32> {
    let report: VerificationReport = theorem_suite(args.seed, args.cases);
    print!("{}", report.render_text());
    if let Some(path) = &args.out {
        let json = serde_json::to_string_pretty(&report)
            .map_err(|e| Error::Internal(format!("report serialization: {e}")))?;
        fs::write(path, json)?;
    }
    Ok(if report.passed() { 0 } else { 1 })
}

fn run_grid(args: &GridArgs) -> Result<()> {
    fs::create_dir_all(&args.out_dir)?;
    let ds = load_dataset(&args.data)?;
    let valid = args.valid.as_deref().map(load_dataset).transpose()?;
    for leaves in [10usize, 20] {
        for lr in [0.06f64, 0.10, 0.12] {
            let cfg = build_config(
                &args.objective,
                &args.criterion,
                leaves,
                lr,
                args.trees,
                &args.ole_mode,
                "width",
                args.min_samples_leaf,
                args.lambda_cutoff,
            )?;
            let ens = train(&ds, &cfg, valid.as_ref())?;
            let stem = format!(
                "{}_{}_l{}_a{:.2}",
                cfg.objective.id(),
                cfg.criterion.id(),
                leaves,
                lr
            );
            let model_path = args.out_dir.join(format!("{stem}.model"));
            let log_path = args.out_dir.join(format!("{stem}.log.csv"));
            model::save(&ens, &model_path)?;
            write_training_log(&ens, &log_path)?;
            match ens.log().final_loss() {
                Some(loss) => println!("{stem}: final training loss {loss}"),
                None => println!("{stem}: empty run"),
            }
        }
    }
    Ok(())
}

fn run_stats(args: &StatsArgs) -> Result<()> {
    let ds = load_dataset(&args.data)?;
    let s = ds.stats();
    println!("queries {}", s.num_queries);
    println!("documents {}", s.num_docs);
    println!("docs/query {}", s.docs_per_query);
    println!("features {}", s.num_features);
    println!("max label {}", s.max_label);
    Ok(())
}

fn run_split(args: &SplitArgs) -> Result<()> {
    let ds = load_dataset(&args.data)?;
    let fractions: Vec<f64> = args
        .fractions
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("bad fraction `{t}`")))
        })
        .collect::<Result<_>>()?;
    let parts = ds.split_by_query(&fractions, args.seed)?;
    for (i, part) in parts.iter().enumerate() {
        let path = format!("{}.part{}.letor", args.out_prefix, i);
        fs::write(&path, part.to_letor())?;
        println!("part {i}: {} queries, {} docs -> {path}", part.num_queries(), part.num_docs());
    }
    Ok(())
}

/// Entry point used by the binary; returns the process exit code.
pub fn run(cli: Cli) -> Result<i32> {
    if let Some(threads) = cli.threads {
        // a non-default pool can only be installed once per process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    match &cli.command {
        Command::Train(args) => run_train(args).map(|_| 0),
        Command::Predict(args) => run_predict(args).map(|_| 0),
        Command::Eval(args) => run_eval(args).map(|_| 0),
        Command::Verify(args) => run_verify(args),
        Command::Grid(args) => run_grid(args).map(|_| 0),
        Command::Stats(args) => run_stats(args).map(|_| 0),
        Command::Split(args) => run_split(args).map(|_| 0),
    }
}

/// Writes arbitrary text, creating parent directories first.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let mut f = File::create(path)?;
    f.write_all(text.as_bytes())?;
    Ok(())
}
