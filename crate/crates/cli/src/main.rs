use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use uvkit_cli::{
    build_info, run_curate, run_metrics, run_pack, run_train, run_unwrap, seams_decode,
    seams_encode, Config, DatasetConfig, PipelineError, RefineMode,
};
use uvkit_core::Error;

#[derive(Parser)]
#[command(name = "uvkit", version, long_version = build_info(), about = "Mesh UV unwrapping pipeline")]
struct Cli {
    /// JSON config; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for per-chart stages (0 = one per logical core).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cut, flatten, refine, pack and score a mesh.
    Unwrap(UnwrapArgs),
    /// Train the refiner on synthetic pairs or a curated manifest.
    Train(TrainArgs),
    /// Score the UVs of an existing OBJ against a mesh.
    Metrics {
        mesh: PathBuf,
        unwrapped: PathBuf,
        /// Print a table instead of JSON.
        #[arg(long)]
        table: bool,
    },
    /// Repack the UV islands of a textured OBJ.
    Pack {
        input: PathBuf,
        #[arg(long)]
        margin: Option<f64>,
        #[arg(long, default_value = "pack_out")]
        out: PathBuf,
    },
    /// Quantize a seam file into tokens.
    SeamsEncode {
        mesh: PathBuf,
        seams: PathBuf,
        #[arg(long)]
        bits: Option<u32>,
        /// Output file; stdout if absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Project tokens back onto mesh edges.
    SeamsDecode {
        mesh: PathBuf,
        tokens: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Split, filter and score artist islands into a manifest.
    Curate {
        dir: PathBuf,
        #[arg(long, default_value = "manifest.jsonl")]
        out: PathBuf,
        #[arg(long)]
        resolution: Option<usize>,
    },
    /// Print the effective config as JSON.
    ShowConfig,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Off,
    Direct,
    Model,
}

#[derive(Args)]
struct UnwrapArgs {
    mesh: Option<PathBuf>,
    /// Seam file, or `none` for the whole mesh as one chart.
    #[arg(long)]
    seams: Option<String>,
    #[arg(long, value_enum)]
    refine: Option<Mode>,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Descent steps for `--refine direct`.
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    margin: Option<f64>,
    #[arg(long)]
    resolution: Option<usize>,
    #[arg(long)]
    sharpness: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    width_scale: Option<f64>,
    /// Evaluate batch samples on the worker pool.
    #[arg(long)]
    parallel: bool,
    /// Synthetic pair count; selects the synthetic dataset.
    #[arg(long, conflicts_with = "manifest")]
    pairs: Option<usize>,
    #[arg(long)]
    warp: Option<f64>,
    /// Curated manifest; selects the manifest dataset.
    #[arg(long, requires = "data_dir")]
    manifest: Option<PathBuf>,
    #[arg(long)]
    data_dir: Option<PathBuf>,
}

fn apply_unwrap(cfg: &mut Config, a: UnwrapArgs) {
    let u = &mut cfg.unwrap;
    if let Some(m) = a.mesh {
        u.mesh = Some(m);
    }
    if let Some(s) = a.seams {
        u.seams = (s != "none").then(|| PathBuf::from(s));
    }
    match a.refine {
        Some(Mode::Off) => u.refine = RefineMode::Off,
        Some(Mode::Direct) if !matches!(u.refine, RefineMode::Direct { .. }) => {
            u.refine = RefineMode::Direct {
                steps: 500,
                weights: Default::default(),
            }
        }
        Some(Mode::Model) => {
            let checkpoint = a.checkpoint.clone().unwrap_or_else(|| match &u.refine {
                RefineMode::Model { checkpoint } => checkpoint.clone(),
                _ => PathBuf::from("checkpoint.json"),
            });
            u.refine = RefineMode::Model { checkpoint }
        }
        _ => {}
    }
    if let (Some(n), RefineMode::Direct { steps, .. }) = (a.steps, &mut u.refine) {
        *steps = n;
    }
    if let Some(m) = a.margin {
        u.margin = m;
    }
    if let Some(r) = a.resolution {
        u.raster.resolution = r;
    }
    if let Some(s) = a.sharpness {
        u.raster.sharpness = s;
    }
    if let Some(o) = a.out {
        u.out_dir = o;
    }
    if let Some(s) = a.seed {
        u.seed = s;
    }
}

fn apply_train(cfg: &mut Config, a: TrainArgs) {
    let t = &mut cfg.training;
    if let Some(o) = a.out {
        t.out_dir = o;
    }
    if let Some(s) = a.steps {
        t.train.steps = s;
    }
    if let Some(b) = a.batch_size {
        t.train.batch_size = b;
    }
    if let Some(lr) = a.lr {
        t.train.adam.lr = lr;
    }
    if let Some(s) = a.seed {
        t.train.seed = s;
    }
    if let Some(w) = a.width_scale {
        t.train.width_scale = w;
    }
    t.train.parallel |= a.parallel;
    if let (Some(manifest), Some(data_dir)) = (a.manifest, a.data_dir) {
        t.dataset = DatasetConfig::Manifest { manifest, data_dir };
    }
    if a.pairs.is_some() || a.warp.is_some() {
        let (mut count, mut grid, mut warp, mut seed) = (64, 8, 0.3, 0);
        if let DatasetConfig::Synthetic { count: c, grid: g, warp: w, seed: s } = t.dataset {
            (count, grid, warp, seed) = (c, g, w, s);
        }
        t.dataset = DatasetConfig::Synthetic {
            count: a.pairs.unwrap_or(count),
            grid,
            warp: a.warp.unwrap_or(warp),
            seed,
        };
    }
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<(), PipelineError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(Error::from)
        .map_err(|e| PipelineError::new("write", "json", e))?;
    text.push('\n');
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| {
            PipelineError::new("write", p.display().to_string(), Error::InvalidArgument(e.to_string()))
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    let mut cfg = Config::load_or_default(cli.config.as_deref())
        .map_err(|e| PipelineError::new("config", "config file", e))?;
    match cli.command {
        Command::Unwrap(a) => {
            apply_unwrap(&mut cfg, a);
            let report = run_unwrap(&cfg.unwrap)?;
            let mut metrics = report.metrics.clone();
            metrics.runtime_s = Some(report.timings.clone());
            println!("charts              {}", report.charts);
            print!("{}", metrics.table());
            println!("output              {}", report.out_dir.display());
        }
        Command::Train(a) => {
            apply_train(&mut cfg, a);
            let r = run_train(&cfg.training)?;
            println!("pairs {}  parameters {}", r.pairs, r.parameters);
            for (label, h) in [("first", r.first), ("final", r.last)] {
                println!(
                    "{label} step {:>6}  total {:.6}  recon {:.6}  silhouette {:.6}  distortion {:.6}  overlap {:.6} ({} faces)",
                    h.step, h.total, h.recon, h.silhouette, h.distortion, h.overlap_soft, h.overlap_count
                );
            }
            println!("checkpoint {}", r.checkpoint.display());
            println!("history    {}", r.history.display());
        }
        Command::Metrics { mesh, unwrapped, table } => {
            let m = run_metrics(&mesh, &unwrapped)?;
            if table {
                print!("{}", m.table());
            } else {
                emit(&m, None)?;
            }
        }
        Command::Pack { input, margin, out } => {
            let m = run_pack(&input, margin.unwrap_or(cfg.unwrap.margin), &out)?;
            print!("{}", m.table());
        }
        Command::SeamsEncode { mesh, seams, bits, out } => {
            let tokens = seams_encode(&mesh, &seams, bits.unwrap_or(cfg.seams.bits))?;
            emit(&tokens, out.as_deref())?;
        }
        Command::SeamsDecode { mesh, tokens, out } => {
            emit(&seams_decode(&mesh, &tokens)?, out.as_deref())?;
        }
        Command::Curate { dir, out, resolution } => {
            if let Some(r) = resolution {
                cfg.curate.raster.resolution = r;
            }
            let s = run_curate(&dir, &cfg.curate, &out)?;
            println!(
                "islands {}  overlapping {}  fragments {}  excluded {}  selected {}",
                s.islands, s.overlapping, s.fragments, s.excluded, s.selected
            );
            println!("manifest {}", out.display());
        }
        Command::ShowConfig => emit(&cfg, None)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(e) = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build_global()
    {
        log::warn!("cannot size worker pool: {e}");
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
