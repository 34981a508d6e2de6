use std::path::Path;

use serde::{Deserialize, Serialize};
use uvkit_core::{Error, Result};

use crate::features::FeatureStats;
use crate::model::{ArchConfig, RefinerParams, Tensor};
use crate::tape::Mat;
use crate::train::TrainConfig;

pub const FORMAT: &str = "uvkit-refiner-checkpoint/1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensorRecord {
    pub name: String,
    pub shape: [usize; 2],
    /// Row-major values.
    pub data: Vec<f64>,
}

/// Self-describing JSON checkpoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub arch: ArchConfig,
    pub stats: FeatureStats,
    pub train: Option<TrainConfig>,
    pub tensors: Vec<TensorRecord>,
}

impl Checkpoint {
    pub fn new(params: &RefinerParams, train: Option<&TrainConfig>) -> Self {
        Checkpoint {
            format: FORMAT.to_string(),
            arch: params.arch.clone(),
            stats: params.stats,
            train: train.cloned(),
            tensors: params
                .tensors
                .iter()
                .map(|t| {
                    let (r, c) = t.value.shape();
                    TensorRecord {
                        name: t.name.clone(),
                        shape: [r, c],
                        data: t.value.transpose().as_slice().to_vec(),
                    }
                })
                .collect(),
        }
    }

    pub fn params(&self) -> Result<RefinerParams> {
        if self.format != FORMAT {
            return Err(Error::InvalidArgument(format!(
                "unsupported checkpoint format {:?}",
                self.format
            )));
        }
        let tensors = self
            .tensors
            .iter()
            .map(|t| {
                let [r, c] = t.shape;
                if t.data.len() != r * c {
                    return Err(Error::LengthMismatch(t.data.len(), r * c));
                }
                Ok(Tensor {
                    name: t.name.clone(),
                    value: Mat::from_row_slice(r, c, &t.data),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        RefinerParams::from_tensors(self.arch.clone(), self.stats, tensors)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = self.to_json()?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| io_error(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

fn io_error(path: &Path, e: std::io::Error) -> Error {
    Error::InvalidArgument(format!("{}: {e}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let mut arch = ArchConfig::scaled(1.0 / 32.0);
        arch.sage_layers = 2;
        let p = RefinerParams::init(arch, FeatureStats::default(), 5).unwrap();
        let ck = Checkpoint::new(&p, Some(&TrainConfig::default()));
        let back: Checkpoint = serde_json::from_str(&ck.to_json().unwrap()).unwrap();
        assert_eq!(back, ck);
        assert_eq!(back.params().unwrap(), p);
    }

    #[test]
    fn row_major_payload() {
        let mut arch = ArchConfig::scaled(1.0 / 64.0);
        arch.sage_layers = 1;
        let mut p = RefinerParams::init(arch, FeatureStats::default(), 5).unwrap();
        p.tensors[0].value = Mat::from_row_slice(2, p.tensors[0].value.ncols(), &[1.0, 2.0, 3.0, 4.0]);
        let ck = Checkpoint::new(&p, None);
        assert_eq!(ck.tensors[0].data, vec![1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let arch = ArchConfig::scaled(1.0 / 64.0);
        let p = RefinerParams::init(arch, FeatureStats::default(), 5).unwrap();
        let mut ck = Checkpoint::new(&p, None);
        ck.tensors[1].shape = [1, 1];
        assert!(ck.params().is_err());
    }
}
