use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use uvkit_core::atlas::DEFAULT_MARGIN;
use uvkit_core::dataprep::CurateConfig;
use uvkit_core::losses::RasterConfig;
use uvkit_core::param::InitConfig;
use uvkit_core::{Error, Result};
use uvkit_refiner::{DirectWeights, TrainConfig};

/// How initial layouts are adjusted before packing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum RefineMode {
    Off,
    Direct {
        #[serde(default = "default_direct_steps")]
        steps: usize,
        #[serde(default)]
        weights: DirectWeights,
    },
    Model {
        checkpoint: PathBuf,
    },
}

fn default_direct_steps() -> usize {
    500
}

impl Default for RefineMode {
    fn default() -> Self {
        RefineMode::Off
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct UnwrapConfig {
    pub mesh: Option<PathBuf>,
    /// Seam file, or `None` to treat the whole mesh as one chart.
    pub seams: Option<PathBuf>,
    pub init: InitConfig,
    pub refine: RefineMode,
    pub margin: f64,
    /// Silhouette images written per chart.
    pub raster: RasterConfig,
    pub preview_resolution: u32,
    pub out_dir: PathBuf,
    pub seed: u64,
}

impl Default for UnwrapConfig {
    fn default() -> Self {
        UnwrapConfig {
            mesh: None,
            seams: None,
            init: InitConfig::default(),
            refine: RefineMode::Off,
            margin: DEFAULT_MARGIN,
            raster: RasterConfig::default(),
            preview_resolution: 1024,
            out_dir: PathBuf::from("out"),
            seed: 0,
        }
    }
}

impl UnwrapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.mesh.is_none() {
            return Err(Error::InvalidArgument("no input mesh given".into()));
        }
        if !(0.0..0.5).contains(&self.margin) {
            return Err(Error::InvalidArgument(format!(
                "margin must be in [0, 0.5), got {}",
                self.margin
            )));
        }
        self.raster.validate()?;
        if self.preview_resolution == 0 {
            return Err(Error::InvalidArgument("preview resolution must be positive".into()));
        }
        match &self.refine {
            RefineMode::Off => {}
            RefineMode::Direct { weights, .. } => weights.validate()?,
            RefineMode::Model { checkpoint } => {
                if !checkpoint.is_file() {
                    return Err(Error::InvalidArgument(format!(
                        "checkpoint {} does not exist",
                        checkpoint.display()
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Where training pairs come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase")]
pub enum DatasetConfig {
    Synthetic {
        count: usize,
        grid: usize,
        warp: f64,
        seed: u64,
    },
    /// Selected islands of a curation manifest, resolved against `data_dir`.
    Manifest { manifest: PathBuf, data_dir: PathBuf },
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig::Synthetic {
            count: 64,
            grid: 8,
            warp: 0.3,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainRunConfig {
    pub train: TrainConfig,
    pub dataset: DatasetConfig,
    pub out_dir: PathBuf,
}

impl Default for TrainRunConfig {
    fn default() -> Self {
        TrainRunConfig {
            train: TrainConfig::default(),
            dataset: DatasetConfig::default(),
            out_dir: PathBuf::from("train_out"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SeamConfig {
    pub bits: u32,
}

impl Default for SeamConfig {
    fn default() -> Self {
        SeamConfig { bits: 10 }
    }
}

/// Everything numeric in one file; command-line flags override fields.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    pub unwrap: UnwrapConfig,
    pub training: TrainRunConfig,
    pub curate: CurateConfig,
    pub seams: SeamConfig,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::InvalidArgument(format!("cannot read config {}: {e}", path.display()))
        })?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn load_or_default(path: Option<&Path>) -> Result<Self> {
        path.map_or_else(|| Ok(Config::default()), Config::load)
    }
}
