//! `camsense` command line: run the gateway, or batch-evaluate a model.

use camsense::detector::DetectionConfig;
use camsense::eval::{
    run_phase1, run_phase2, write_phase1_report, write_phase2_report, Labels, OverrideList,
};
use camsense::sequence::AggregationPolicy;
use camsense_gateway::{state::start_gateway, GatewayConfig};
use clap::{Args, Parser, Subcommand};
use std::net::SocketAddr;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "camsense",
    version,
    about = "Camera frames in, boolean person-present sensor out"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the HTTP gateway
    Serve(ServeArgs),
    /// Batch-evaluate a model over labeled picture corpora
    #[command(subcommand)]
    Eval(EvalCommand),
}

#[derive(Args)]
struct DetectorFlags {
    /// Scale ladder ratio between scan levels
    #[arg(long, default_value_t = 1.01)]
    scale_factor: f64,
    /// Minimum cluster size kept by grouping (0 keeps every cluster)
    #[arg(long, default_value_t = 10)]
    min_neighbors: u32,
    /// Smallest detection window, WxH
    #[arg(long, default_value = "200x200", value_parser = parse_size)]
    min_size: (u32, u32),
    /// Largest detection window, WxH
    #[arg(long, value_parser = parse_size)]
    max_size: Option<(u32, u32)>,
    /// Relative tolerance of the grouping similarity test
    #[arg(long, default_value_t = 0.2)]
    group_eps: f64,
}

impl DetectorFlags {
    fn detection_config(&self) -> DetectionConfig {
        DetectionConfig {
            scale_factor: self.scale_factor,
            min_neighbors: self.min_neighbors,
            min_size: self.min_size,
            max_size: self.max_size,
            group_eps: self.group_eps,
        }
    }
}

fn parse_size(s: &str) -> Result<(u32, u32), String> {
    let (w, h) = s
        .split_once(['x', 'X', ','])
        .ok_or_else(|| format!("expected WxH, got \"{s}\""))?;
    let w = w.trim().parse().map_err(|e| format!("width: {e}"))?;
    let h = h.trim().parse().map_err(|e| format!("height: {e}"))?;
    Ok((w, h))
}

#[derive(Args)]
struct ServeArgs {
    /// Directory for frames, the camera registry, and reading logs
    #[arg(long, env = "CAMSENSE_DATA_ROOT", default_value = "camsense-data")]
    data_root: PathBuf,
    /// Address to listen on
    #[arg(long, env = "CAMSENSE_LISTEN", default_value = "127.0.0.1:8080")]
    listen: SocketAddr,
    /// Cascade model file (classic XML or synthetic text format)
    #[arg(long, env = "CAMSENSE_MODEL")]
    model: PathBuf,
    /// Idle gap that closes a sequence, in milliseconds
    #[arg(long, env = "CAMSENSE_IDLE_TIMEOUT_MS", default_value_t = 5000)]
    idle_timeout_ms: u64,
    /// Positive frames required for a sequence to read true
    #[arg(long, env = "CAMSENSE_K", default_value_t = 1)]
    k: u32,
    /// Frame cap per sequence
    #[arg(long, env = "CAMSENSE_MAX_SEQUENCE_FRAMES", default_value_t = 1000)]
    max_sequence_frames: usize,
    /// Base delay of webhook retry backoff, in milliseconds
    #[arg(long, env = "CAMSENSE_WEBHOOK_BACKOFF_MS", default_value_t = 500)]
    webhook_backoff_ms: u64,
    #[command(flatten)]
    detector: DetectorFlags,
}

#[derive(Subcommand)]
enum EvalCommand {
    /// Score isolated pictures from a positive and a negative directory
    Phase1(Phase1Args),
    /// Score whole motion sequences, one directory per sequence
    Phase2(Phase2Args),
}

#[derive(Args)]
struct Phase1Args {
    /// Directory of pictures with people
    #[arg(long)]
    pos: PathBuf,
    /// Directory of pictures without people
    #[arg(long)]
    neg: PathBuf,
    /// Cascade model file
    #[arg(long)]
    model: PathBuf,
    /// Override file: `picture,reason` per line, each forced negative
    #[arg(long)]
    overrides: Option<PathBuf>,
    /// Report directory (matrix.csv plus annotated copies)
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    detector: DetectorFlags,
}

#[derive(Args)]
struct Phase2Args {
    /// Directory holding one subdirectory per sequence
    #[arg(long)]
    sequences: PathBuf,
    /// Labels file: `name,yes|no` per sequence
    #[arg(long)]
    labels: PathBuf,
    /// Cascade model file
    #[arg(long)]
    model: PathBuf,
    /// Positive frames required for a sequence to read true
    #[arg(long, default_value_t = 1)]
    k: u32,
    /// Report directory (sequences.csv and matrix.csv)
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    detector: DetectorFlags,
}

fn main() {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Serve(args) => serve(args),
        Command::Eval(EvalCommand::Phase1(args)) => eval_phase1(args),
        Command::Eval(EvalCommand::Phase2(args)) => eval_phase2(args),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

fn serve(args: ServeArgs) -> Result<(), Box<dyn std::error::Error>> {
    let config = GatewayConfig {
        data_root: args.data_root,
        listen: args.listen,
        model_path: args.model,
        idle_timeout_ms: args.idle_timeout_ms,
        k: args.k,
        scale_factor: args.detector.scale_factor,
        min_neighbors: args.detector.min_neighbors,
        min_size: args.detector.min_size,
        group_eps: args.detector.group_eps,
        max_sequence_frames: args.max_sequence_frames,
        webhook_backoff_ms: args.webhook_backoff_ms,
    };
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async {
        let _gateway = start_gateway(config).await?;
        tokio::signal::ctrl_c().await?;
        tracing::info!("shutting down");
        Ok(())
    })
}

fn print_matrix(
    matrix: &camsense::eval::ConfusionMatrix,
) -> Result<(), Box<dyn std::error::Error>> {
    let [tp, fp, tn, fn_rate] = matrix.rates()?;
    println!(
        "  TP {:>5} ({tp})   FP {:>5} ({fp})",
        matrix.true_positives, matrix.false_positives
    );
    println!(
        "  TN {:>5} ({tn})   FN {:>5} ({fn_rate})",
        matrix.true_negatives, matrix.false_negatives
    );
    Ok(())
}

fn eval_phase1(args: Phase1Args) -> Result<(), Box<dyn std::error::Error>> {
    let model = camsense_gateway::load_model_file(&args.model)?;
    let config = args.detector.detection_config();
    let overrides = match &args.overrides {
        Some(path) => OverrideList::parse(&std::fs::read_to_string(path)?)?,
        None => OverrideList::empty(),
    };
    let annotate_dir = args.out.as_ref().map(|out| out.join("annotated"));
    let outcome = run_phase1(
        &args.pos,
        &args.neg,
        &model,
        &config,
        &overrides,
        annotate_dir.as_deref(),
    )?;
    for (path, reason) in &outcome.skipped {
        eprintln!("warning: skipped {}: {reason}", path.display());
    }
    println!(
        "phase 1, model {}: {} positive / {} negative pictures",
        model.name, outcome.matrix.positives_total, outcome.matrix.negatives_total
    );
    print_matrix(&outcome.matrix)?;
    if !outcome.annotated.is_empty() {
        println!("  {} annotated copies written", outcome.annotated.len());
    }
    if let Some(out) = &args.out {
        let path = write_phase1_report(&outcome.matrix, &model.name, out)?;
        println!("  report: {}", path.display());
    }
    Ok(())
}

fn eval_phase2(args: Phase2Args) -> Result<(), Box<dyn std::error::Error>> {
    let model = camsense_gateway::load_model_file(&args.model)?;
    let config = args.detector.detection_config();
    let labels = Labels::parse(&std::fs::read_to_string(&args.labels)?)?;
    let policy = AggregationPolicy {
        k: args.k,
        ..AggregationPolicy::default()
    };
    let outcome = run_phase2(&args.sequences, &labels, &model, &config, &policy)?;
    for (path, reason) in &outcome.skipped {
        eprintln!("warning: skipped {}: {reason}", path.display());
    }
    println!(
        "phase 2, model {}: {} positive / {} negative sequences (k = {})",
        model.name, outcome.matrix.positives_total, outcome.matrix.negatives_total, args.k
    );
    print_matrix(&outcome.matrix)?;
    println!(
        "  {:<16} {:>6} {:>10} {:>10}  result",
        "sequence", "frames", "identified", "percent"
    );
    for row in &outcome.rows {
        println!(
            "  {:<16} {:>6} {:>10} {:>10}  {}",
            row.name,
            row.total_pictures,
            row.identified_pictures,
            row.detection_percent,
            row.result
        );
    }
    if let Some(out) = &args.out {
        let (rows_path, matrix_path) =
            write_phase2_report(&outcome.matrix, &outcome.rows, &model.name, out)?;
        println!(
            "  reports: {} and {}",
            rows_path.display(),
            matrix_path.display()
        );
    }
    Ok(())
}
