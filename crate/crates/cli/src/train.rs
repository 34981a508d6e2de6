use std::collections::BTreeMap;
use std::fs;
use std::io::BufRead;
use std::path::{Path, PathBuf};

use serde::Serialize;
use uvkit_core::atlas::orient_island;
use uvkit_core::dataprep::{split_islands, ManifestEntry};
use uvkit_core::mesh::load_obj;
use uvkit_core::param::{initialize, normalize_uv, InitConfig};
use uvkit_core::{Error, Result};
use uvkit_refiner::train::{write_history_csv, HistoryRow};
use uvkit_refiner::{synthetic_dataset, train, Checkpoint, Pair};

use crate::config::{DatasetConfig, TrainRunConfig};
use crate::error::{io_error, PipelineError, Stage};

#[derive(Clone, Debug, Serialize)]
pub struct TrainReport {
    pub pairs: usize,
    pub parameters: usize,
    pub first: HistoryRow,
    pub last: HistoryRow,
    pub checkpoint: PathBuf,
    pub history: PathBuf,
}

fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let file = fs::File::open(path).map_err(|e| io_error(path, e))?;
    let mut entries = Vec::new();
    for (n, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| io_error(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let entry: ManifestEntry = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            line: n + 1,
            msg: e.to_string(),
        })?;
        entries.push(entry);
    }
    Ok(entries)
}

/// Selected manifest islands as pairs: the artist layout is the target and
/// a fresh automatic unwrap the input, both oriented and in the unit square.
pub fn manifest_pairs(manifest: &Path, data_dir: &Path) -> Result<Vec<Pair>> {
    let mut wanted: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for e in read_manifest(manifest)? {
        if e.selected {
            wanted.entry(e.source).or_default().push(e.island);
        }
    }
    let mut pairs = Vec::new();
    for (source, ids) in wanted {
        let mesh = load_obj(data_dir.join(&source))?;
        let islands = split_islands(&mesh, &source)?;
        for id in ids {
            let record = islands.get(id).ok_or_else(|| {
                Error::InvalidArgument(format!("{source} has no island {id}"))
            })?;
            let chart = std::sync::Arc::clone(&record.uv.chart);
            let target = normalize_uv(&orient_island(&record.uv)?)?;
            let init = initialize(std::sync::Arc::clone(&chart), &InitConfig::default())?;
            let init = normalize_uv(&orient_island(&init)?)?;
            pairs.push(Pair {
                chart,
                q_init: init.uv,
                q_gt: target.uv,
            });
        }
    }
    Ok(pairs)
}

pub fn load_pairs(dataset: &DatasetConfig) -> Result<Vec<Pair>> {
    match dataset {
        DatasetConfig::Synthetic {
            count,
            grid,
            warp,
            seed,
        } => synthetic_dataset(*seed, *count, *grid, *warp),
        DatasetConfig::Manifest { manifest, data_dir } => manifest_pairs(manifest, data_dir),
    }
}

/// Trains on the configured dataset and writes `checkpoint.json` and
/// `history.csv` to the output directory, creating it if needed.
pub fn run_train(config: &TrainRunConfig) -> Result<TrainReport, PipelineError> {
    config.train.validate().stage("config", &"train config")?;
    let pairs = load_pairs(&config.dataset).stage("dataset", &"training pairs")?;
    if pairs.is_empty() {
        return Err(PipelineError::new(
            "dataset",
            "training pairs",
            Error::InvalidArgument("dataset produced no pairs".into()),
        ));
    }
    log::info!("training on {} pairs", pairs.len());
    let outcome = train(&pairs, &config.train).stage("train", &"refiner")?;

    let out = &config.out_dir;
    fs::create_dir_all(out)
        .map_err(|e| io_error(out, e))
        .stage("output", &out.display())?;
    let checkpoint = out.join("checkpoint.json");
    Checkpoint::new(&outcome.params, Some(&config.train))
        .save(&checkpoint)
        .stage("write", &checkpoint.display())?;
    let history = out.join("history.csv");
    let file = fs::File::create(&history)
        .map_err(|e| io_error(&history, e))
        .stage("write", &history.display())?;
    write_history_csv(&outcome.history, file).stage("write", &history.display())?;

    Ok(TrainReport {
        pairs: pairs.len(),
        parameters: outcome.params.parameter_count(),
        first: outcome.history[0],
        last: *outcome.history.last().expect("at least one step"),
        checkpoint,
        history,
    })
}
