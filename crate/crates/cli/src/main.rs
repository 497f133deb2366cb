use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crowdsplit::detect::{DEFAULT_NMS_IOU, DEFAULT_SCORE_THRESHOLD};
use crowdsplit::io;
use crowdsplit::partition::partition;
use crowdsplit::pipeline::{
    bench_generate, load_scene, map_scenes, run_dataset, write_reports, BenchSpec, Manifest,
    RunOptions,
};

#[derive(Parser)]
#[command(name = "crowdsplit", version, about = "Depth-guided near/far crowd counting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Split each scene into near and far regions and report the polylines.
    Partition(RunArgs),
    /// Count every scene and write per-scene reports.
    Count(RunArgs),
    /// Count every scene and score the totals with MAE/MSE.
    Evaluate(RunArgs),
    /// Generate a synthetic benchmark with oracle predictions.
    BenchGen(BenchArgs),
    /// Write mask, cluster and density rasters for every scene.
    Render(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    knn_k: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_SCORE_THRESHOLD)]
    score_threshold: f64,
    #[arg(long, default_value_t = DEFAULT_NMS_IOU)]
    nms_iou: f64,
    #[arg(long)]
    deterministic: bool,
    /// Also write debug rasters under OUT_DIR/debug.
    #[arg(long)]
    render_debug: bool,
}

impl RunArgs {
    fn options(&self) -> RunOptions {
        RunOptions {
            beta: self.beta,
            knn_k: self.knn_k,
            score_threshold: self.score_threshold,
            nms_iou: self.nms_iou,
            workers: self.workers,
            deterministic: self.deterministic,
            render_debug: self.render_debug.then(|| self.out_dir.join("debug")),
        }
    }

    fn manifest(&self) -> Result<Manifest> {
        Manifest::load(&self.manifest)
            .with_context(|| format!("loading manifest {}", self.manifest.display()))
    }
}

#[derive(Args)]
struct BenchArgs {
    /// Benchmark spec (JSON).
    spec: PathBuf,
    #[arg(long, default_value = "bench")]
    out_dir: PathBuf,
    /// Reseed scenes as SEED, SEED + 1, ...
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    deterministic: bool,
    #[arg(long)]
    workers: Option<usize>,
}

fn cmd_count(args: &RunArgs, score: bool) -> Result<bool> {
    let manifest = args.manifest()?;
    let report = run_dataset(&manifest, &args.options())?;
    write_reports(&report, &args.out_dir)?;
    for s in report.scenes.iter().filter(|s| !s.succeeded()) {
        log::error!("scene {}: {}", s.scene_id, s.error.as_deref().unwrap_or(""));
    }
    println!(
        "{} scenes: {} succeeded, {} failed; reports in {}",
        report.scenes.len(),
        report.succeeded,
        report.failed,
        args.out_dir.display()
    );
    if score {
        match &report.evaluation {
            Some(ev) => println!("N = {}  MAE = {:.4}  MSE (RMSE form) = {:.4}", ev.n, ev.mae, ev.mse),
            None => bail!("no scene succeeded; nothing to evaluate"),
        }
    }
    Ok(report.all_succeeded())
}

fn cmd_partition(args: &RunArgs, rasters_only: bool) -> Result<bool> {
    let manifest = args.manifest()?;
    let opts = args.options();
    let debug_dir = if rasters_only {
        Some(args.out_dir.clone())
    } else {
        opts.render_debug.clone()
    };
    let results = map_scenes(&manifest, opts.workers, |e| -> Result<serde_json::Value> {
        let inputs = load_scene(e, &opts)?;
        let part = partition(&inputs.depth, &inputs.config)?;
        if let Some(dir) = &debug_dir {
            let base = dir.join(&e.scene_id);
            io::write_mask_pgm(&base.join("mask.pgm"), &part.mask)?;
            if let Some(c) = &part.clusters {
                io::write_cluster_pgm(&base.join("clusters.pgm"), c.shape, &c.assignments)?;
            }
            if let Some(d) = e.density.as_ref().filter(|_| rasters_only) {
                io::write_heatmap(&base.join("density.png"), &io::read_density(d)?)?;
            }
        }
        Ok(json!({
            "far_pixels": part.mask.count(crowdsplit::Region::Far),
            "warnings": part.warnings,
            "diagnostics": part.diagnostics(),
        }))
    })?;
    let mut ok = true;
    let mut entries = Vec::new();
    for (e, r) in manifest.scenes.iter().zip(results) {
        match r {
            Ok(v) => entries.push(json!({"scene_id": e.scene_id, "result": v})),
            Err(err) => {
                ok = false;
                log::error!("scene {}: {err}", e.scene_id);
                entries.push(json!({"scene_id": e.scene_id, "error": err.to_string()}));
            }
        }
    }
    if !rasters_only {
        io::write_json(&args.out_dir.join("partition.json"), &entries)?;
    }
    println!("{} scenes processed; output in {}", entries.len(), args.out_dir.display());
    Ok(ok)
}

fn cmd_bench(args: &BenchArgs) -> Result<bool> {
    let mut spec: BenchSpec = io::read_json(&args.spec)?;
    if let Some(seed) = args.seed {
        spec.reseed(seed);
    }
    let run = || bench_generate(&spec, &args.out_dir, args.deterministic);
    let out = match args.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()?
            .install(run)?,
        None => run()?,
    };
    for (id, reason) in &out.failures {
        log::error!("scene {id}: {reason}");
    }
    println!(
        "wrote {} scenes to {} ({} failed)",
        out.manifest.scenes.len(),
        out.manifest_path.display(),
        out.failures.len()
    );
    Ok(out.failures.is_empty())
}

fn run(cli: &Cli) -> Result<bool> {
    match &cli.command {
        Command::Partition(a) => cmd_partition(a, false),
        Command::Count(a) => cmd_count(a, false),
        Command::Evaluate(a) => cmd_count(a, true),
        Command::BenchGen(a) => cmd_bench(a),
        Command::Render(a) => cmd_partition(a, true),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("DIGCROWD_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
