use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use uvkit_core::atlas::{
    atlas_mesh, compute_metrics, orient_island, pack, save_preview, MetricsReport, StageTimings,
    UvAtlas,
};
use uvkit_core::dataprep::split_islands;
use uvkit_core::losses::rasterize_silhouette;
use uvkit_core::mesh::{cut_along_seams, load_obj, write_obj_file, Chart, Mesh};
use uvkit_core::param::{initialize, normalize_uv, UvChart};
use uvkit_core::seams::{decode, SeamFile, SeamSet, TokenSeq};
use uvkit_core::{Error, Result};
use uvkit_refiner::{direct_refine, forward, Checkpoint, FeaturePack, RefinerParams};

use crate::config::{RefineMode, UnwrapConfig};
use crate::error::{io_error, PipelineError, Stage};

/// Marker left in the output directory when a run stops part way.
pub const PARTIAL_MARKER: &str = "PARTIAL";
/// Atlas tolerance for the post-pack containment and disjointness check.
const ATLAS_TOL: f64 = 1e-9;

#[derive(Clone, Debug, Serialize)]
pub struct UnwrapReport {
    pub metrics: MetricsReport,
    pub timings: StageTimings,
    pub charts: usize,
    pub out_dir: PathBuf,
}

/// Reads a seam file: explicit segments, polylines, or a token sequence.
pub fn load_seams(path: &Path, mesh: &Mesh) -> Result<SeamSet> {
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    if let Ok(file) = serde_json::from_str::<SeamFile>(&text) {
        return file.resolve(mesh);
    }
    decode(&TokenSeq::from_json(&text)?, mesh)
}

enum Refiner {
    Off,
    Direct { steps: usize, weights: uvkit_refiner::DirectWeights },
    Model(Box<RefinerParams>),
}

impl Refiner {
    fn from_mode(mode: &RefineMode) -> Result<Self> {
        Ok(match mode {
            RefineMode::Off => Refiner::Off,
            RefineMode::Direct { steps, weights } => Refiner::Direct {
                steps: *steps,
                weights: *weights,
            },
            RefineMode::Model { checkpoint } => {
                Refiner::Model(Box::new(Checkpoint::load(checkpoint)?.params()?))
            }
        })
    }

    fn apply(&self, uv: UvChart) -> Result<UvChart> {
        match self {
            Refiner::Off => Ok(uv),
            Refiner::Direct { steps, weights } => {
                let out = direct_refine(&uv, *weights, *steps)?;
                Ok(out.uv)
            }
            Refiner::Model(params) => {
                // the network was trained on oriented unit-square layouts
                let q = normalize_uv(&orient_island(&uv)?)?;
                let pack = FeaturePack::new(&q.chart, &q.uv, &params.stats)?;
                let pred = forward(params, &pack)?;
                Ok(q.with_uv(pred.apply(&q.uv)))
            }
        }
    }
}

fn clock(timings: &mut StageTimings, stage: &str, since: Instant) {
    timings.insert(stage.to_string(), since.elapsed().as_secs_f64());
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| io_error(path, e))
}

fn mark_partial(out: &Path, err: &PipelineError) {
    let note = format!("incomplete run\nstage: {}\ninput: {}\nerror: {}\n", err.stage, err.input, err.source);
    if let Err(e) = fs::write(out.join(PARTIAL_MARKER), note) {
        log::warn!("cannot write partial marker: {e}");
    }
}

/// Load, cut, per-chart init and refine, orient, pack, score.
///
/// Artifacts in `out_dir`: `unwrapped.obj`, `atlas.png`,
/// `silhouettes/chart_NNN.png`, `metrics.json` and `timings.json`. Charts
/// that finished before a failure keep their silhouettes and the directory
/// gets a `PARTIAL` marker naming the failed stage.
pub fn run_unwrap(config: &UnwrapConfig) -> Result<UnwrapReport, PipelineError> {
    config.validate().stage("config", &"unwrap config")?;
    let out = config.out_dir.clone();
    fs::create_dir_all(out.join("silhouettes"))
        .map_err(|e| io_error(&out, e))
        .stage("output", &out.display())?;
    let _ = fs::remove_file(out.join(PARTIAL_MARKER));
    let result = unwrap_into(config, &out);
    if let Err(e) = &result {
        mark_partial(&out, e);
    }
    result
}

fn unwrap_into(config: &UnwrapConfig, out: &Path) -> Result<UnwrapReport, PipelineError> {
    let mesh_path = config.mesh.as_ref().expect("validated");
    let name = mesh_path.display().to_string();
    let mut timings = StageTimings::new();

    let t = Instant::now();
    let mesh = load_obj(mesh_path).stage("load", &name)?;
    let refiner = Refiner::from_mode(&config.refine).stage("load", &"checkpoint")?;
    clock(&mut timings, "load", t);

    let t = Instant::now();
    let seams = match &config.seams {
        Some(p) => load_seams(p, &mesh).stage("cut", &p.display())?,
        None => SeamSet::default(),
    };
    let charts: Vec<Arc<Chart>> = cut_along_seams(&mesh, &seams)
        .stage("cut", &name)?
        .into_iter()
        .map(Arc::new)
        .collect();
    clock(&mut timings, "cut", t);
    log::info!("{name}: {} charts", charts.len());

    // one result per chart, in chart order whatever the pool does
    let t = Instant::now();
    let staged: Vec<Result<UvChart, PipelineError>> = charts
        .par_iter()
        .enumerate()
        .map(|(k, chart)| {
            let id = format!("{name} chart {k}");
            let uv = initialize(Arc::clone(chart), &config.init).stage("init", &id)?;
            let uv = refiner.apply(uv).stage("refine", &id)?;
            orient_island(&uv).stage("orient", &id)
        })
        .collect();
    clock(&mut timings, "charts", t);

    let mut islands = Vec::with_capacity(staged.len());
    let mut first_err = None;
    for (k, r) in staged.into_iter().enumerate() {
        match r {
            Ok(uv) => {
                let path = out.join("silhouettes").join(format!("chart_{k:03}.png"));
                let written = normalize_uv(&uv)
                    .and_then(|n| rasterize_silhouette(&n, &config.raster))
                    .and_then(|img| img.save_png(&path));
                if let Err(e) = written {
                    first_err.get_or_insert(PipelineError::new("silhouette", path.display().to_string(), e));
                }
                islands.push(uv);
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    if let Some(e) = first_err {
        return Err(e);
    }

    let t = Instant::now();
    let atlas = pack(&islands, config.margin).stage("pack", &name)?;
    atlas
        .check_invariants(ATLAS_TOL)
        .map_err(|e| PipelineError::invariant("pack", name.clone(), e))?;
    clock(&mut timings, "pack", t);

    let t = Instant::now();
    let metrics = compute_metrics(&mesh, &atlas, None).stage("metrics", &name)?;
    clock(&mut timings, "metrics", t);

    let t = Instant::now();
    let obj_path = out.join("unwrapped.obj");
    let textured = atlas_mesh(&mesh, &atlas).stage("write", &obj_path.display())?;
    write_obj_file(&textured, &obj_path).stage("write", &obj_path.display())?;
    save_preview(&atlas, config.preview_resolution, out.join("atlas.png"))
        .stage("write", &"atlas.png")?;
    write_json(&out.join("metrics.json"), &metrics).stage("write", &"metrics.json")?;
    clock(&mut timings, "write", t);
    write_json(&out.join("timings.json"), &timings).stage("write", &"timings.json")?;

    Ok(UnwrapReport {
        metrics,
        timings,
        charts: charts.len(),
        out_dir: out.to_path_buf(),
    })
}

/// Scores the texture coordinates of `unwrapped` on the geometry of `mesh`
/// without touching them.
pub fn run_metrics(mesh_path: &Path, unwrapped_path: &Path) -> Result<MetricsReport, PipelineError> {
    let mesh_name = mesh_path.display().to_string();
    let uv_name = unwrapped_path.display().to_string();
    let mesh = load_obj(mesh_path).stage("load", &mesh_name)?;
    let unwrapped = load_obj(unwrapped_path).stage("load", &uv_name)?;
    if mesh.face_count() != unwrapped.face_count() {
        return Err(PipelineError::new(
            "metrics",
            uv_name,
            Error::InvalidArgument(format!(
                "face count {} differs from the mesh's {}",
                unwrapped.face_count(),
                mesh.face_count()
            )),
        ));
    }
    let layer = unwrapped
        .uv
        .clone()
        .ok_or_else(|| Error::MissingUv(uv_name.clone()))
        .stage("metrics", &uv_name)?;
    let combined = Mesh::with_uv(mesh.vertices.clone(), mesh.faces.clone(), Some(layer))
        .stage("metrics", &uv_name)?;
    atlas_metrics(&combined, &uv_name, 0.0)
}

fn existing_atlas(mesh: &Mesh, name: &str, margin: f64) -> Result<UvAtlas, PipelineError> {
    let islands = split_islands(mesh, name).stage("islands", &name)?;
    Ok(UvAtlas::identity(islands.into_iter().map(|r| r.uv).collect(), margin))
}

fn atlas_metrics(mesh: &Mesh, name: &str, margin: f64) -> Result<MetricsReport, PipelineError> {
    let atlas = existing_atlas(mesh, name, margin)?;
    compute_metrics(mesh, &atlas, None).stage("metrics", &name)
}

/// Repacks the UV islands of a textured OBJ into the unit square.
pub fn run_pack(input: &Path, margin: f64, out_dir: &Path) -> Result<MetricsReport, PipelineError> {
    let name = input.display().to_string();
    let mesh = load_obj(input).stage("load", &name)?;
    let source = existing_atlas(&mesh, &name, margin)?;
    let islands: Vec<UvChart> = source
        .islands
        .into_iter()
        .map(|i| orient_island(&i.uv))
        .collect::<Result<_>>()
        .stage("orient", &name)?;
    let atlas = pack(&islands, margin).stage("pack", &name)?;
    atlas
        .check_invariants(ATLAS_TOL)
        .map_err(|e| PipelineError::invariant("pack", name.clone(), e))?;
    let metrics = compute_metrics(&mesh, &atlas, None).stage("metrics", &name)?;
    fs::create_dir_all(out_dir)
        .map_err(|e| io_error(out_dir, e))
        .stage("output", &out_dir.display())?;
    let obj_path = out_dir.join("packed.obj");
    let textured = atlas_mesh(&mesh, &atlas).stage("write", &obj_path.display())?;
    write_obj_file(&textured, &obj_path).stage("write", &obj_path.display())?;
    save_preview(&atlas, 1024, out_dir.join("atlas.png")).stage("write", &"atlas.png")?;
    write_json(&out_dir.join("metrics.json"), &metrics).stage("write", &"metrics.json")?;
    Ok(metrics)
}
