use std::io::Write;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use uvkit_core::geom::Vec2;
use uvkit_core::losses::{horn_align, LossContext, LossReport, LossWeights, RasterConfig};
use uvkit_core::mesh::Chart;
use uvkit_core::{Error, Result};

use crate::adam::{Adam, AdamConfig};
use crate::features::{FeaturePack, FeatureStats};
use crate::model::{forward, forward_backward, ArchConfig, RefinerParams};
use crate::synthetic::Pair;
use crate::tape::Mat;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub weights: LossWeights,
    pub adam: AdamConfig,
    pub batch_size: usize,
    pub steps: usize,
    pub seed: u64,
    pub raster: RasterConfig,
    /// Multiplier on the full-size layer widths.
    pub width_scale: f64,
    /// Overrides the architecture derived from `width_scale`.
    pub arch: Option<ArchConfig>,
    /// Rescale the batch gradient to at most this global norm.
    pub grad_clip: Option<f64>,
    /// Evaluate batch samples on the rayon pool.
    pub parallel: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            weights: LossWeights::default(),
            adam: AdamConfig::default(),
            batch_size: 8,
            steps: 1000,
            seed: 0,
            raster: RasterConfig {
                resolution: 64,
                sharpness: 30.0,
            },
            width_scale: 0.25,
            arch: None,
            grad_clip: None,
            parallel: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.weights.validate()?;
        self.raster.validate()?;
        let a = &self.adam;
        if !(a.lr >= 0.0) || !a.lr.is_finite() {
            return Err(Error::InvalidArgument(format!("learning rate must be ≥ 0, got {}", a.lr)));
        }
        if !(0.0..1.0).contains(&a.beta1) || !(0.0..1.0).contains(&a.beta2) || !(a.eps > 0.0) {
            return Err(Error::InvalidArgument("invalid Adam betas or eps".into()));
        }
        if self.steps == 0 || self.batch_size == 0 {
            return Err(Error::InvalidArgument("steps and batch size must be ≥ 1".into()));
        }
        if !(self.width_scale > 0.0) {
            return Err(Error::InvalidArgument("width scale must be positive".into()));
        }
        if let Some(c) = self.grad_clip {
            if !(c > 0.0) {
                return Err(Error::InvalidArgument("gradient clip must be positive".into()));
            }
        }
        self.arch().validate()
    }

    pub fn arch(&self) -> ArchConfig {
        self.arch
            .clone()
            .unwrap_or_else(|| ArchConfig::scaled(self.width_scale))
    }
}

/// A pair prepared for training: initial layout rotated onto the target,
/// network input and loss context.
#[derive(Clone, Debug)]
pub struct Sample {
    pub id: usize,
    pub chart: Arc<Chart>,
    /// `Q_i` after rigid alignment to `Q_gt`.
    pub q_init: Vec<Vec2>,
    pub pack: FeaturePack,
    pub context: LossContext,
}

impl Sample {
    pub fn new(id: usize, pair: &Pair, stats: &FeatureStats, raster: RasterConfig) -> Result<Self> {
        let align = horn_align(&pair.q_init, &pair.q_gt)?;
        let q_init = align.apply(&pair.q_init);
        let pack = FeaturePack::new(&pair.chart, &q_init, stats)?;
        let context = LossContext::new(Arc::clone(&pair.chart), pair.q_gt.clone(), raster)?;
        Ok(Sample {
            id,
            chart: Arc::clone(&pair.chart),
            q_init,
            pack,
            context,
        })
    }
}

pub fn prepare(pairs: &[Pair], stats: &FeatureStats, raster: RasterConfig) -> Result<Vec<Sample>> {
    pairs
        .iter()
        .enumerate()
        .map(|(i, p)| Sample::new(i, p, stats, raster))
        .collect()
}

/// Per-term losses; batch or dataset means, `overlap_count` summed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Terms {
    pub recon: f64,
    pub silhouette: f64,
    pub distortion: f64,
    pub overlap_soft: f64,
    pub overlap_count: usize,
    pub total: f64,
}

impl Terms {
    fn add(&mut self, r: &LossReport) {
        self.recon += r.recon;
        self.silhouette += r.silhouette;
        self.distortion += r.distortion;
        self.overlap_soft += r.overlap_soft;
        self.overlap_count += r.overlap_count;
        self.total += r.total;
    }

    fn scaled(mut self, n: usize) -> Self {
        let s = 1.0 / n as f64;
        self.recon *= s;
        self.silhouette *= s;
        self.distortion *= s;
        self.overlap_soft *= s;
        self.total *= s;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistoryRow {
    pub step: usize,
    pub recon: f64,
    pub silhouette: f64,
    pub distortion: f64,
    pub overlap_soft: f64,
    pub overlap_count: usize,
    pub total: f64,
}

impl HistoryRow {
    fn new(step: usize, t: Terms) -> Self {
        HistoryRow {
            step,
            recon: t.recon,
            silhouette: t.silhouette,
            distortion: t.distortion,
            overlap_soft: t.overlap_soft,
            overlap_count: t.overlap_count,
            total: t.total,
        }
    }
}

pub fn write_history_csv<W: Write>(history: &[HistoryRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in history {
        w.serialize(row)
            .map_err(|e| Error::InvalidArgument(format!("history csv: {e}")))?;
    }
    w.flush()
        .map_err(|e| Error::InvalidArgument(format!("history csv: {e}")))?;
    Ok(())
}

/// Loss of the current model on one sample.
pub fn evaluate_sample(params: &RefinerParams, s: &Sample, weights: &LossWeights) -> Result<LossReport> {
    let pred = forward(params, &s.pack)?;
    s.context.evaluate(&pred.apply(&s.q_init), weights)
}

/// Mean per-term loss over `samples`.
pub fn evaluate(params: &RefinerParams, samples: &[Sample], weights: &LossWeights) -> Result<Terms> {
    let mut t = Terms::default();
    for s in samples {
        t.add(&evaluate_sample(params, s, weights)?);
    }
    Ok(t.scaled(samples.len().max(1)))
}

fn sample_gradient(
    params: &RefinerParams,
    s: &Sample,
    weights: &LossWeights,
) -> Result<(LossReport, Vec<Mat>)> {
    let mut report = None;
    let (_, _, grads) = forward_backward(params, &s.pack, |pred| {
        let r = s.context.evaluate(&pred.apply(&s.q_init), weights)?;
        let out = (r.total, r.grad.clone());
        report = Some(r);
        Ok(out)
    })
    .map_err(|e| match e {
        Error::Degenerate(msg) => Error::Degenerate(format!("sample {}: {msg}", s.id)),
        other => other,
    })?;
    Ok((report.expect("loss evaluated"), grads))
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub params: RefinerParams,
    pub history: Vec<HistoryRow>,
}

/// Seeded mini-batch order: a fresh permutation of the dataset per epoch.
struct Batches {
    rng: ChaCha8Rng,
    order: Vec<usize>,
    at: usize,
}

impl Batches {
    fn new(n: usize, seed: u64) -> Self {
        Batches {
            rng: ChaCha8Rng::seed_from_u64(seed),
            order: (0..n).collect(),
            at: n,
        }
    }

    fn next(&mut self, size: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(size);
        while out.len() < size.min(self.order.len()) {
            if self.at == self.order.len() {
                self.order.shuffle(&mut self.rng);
                self.at = 0;
            }
            out.push(self.order[self.at]);
            self.at += 1;
        }
        out
    }
}

/// Adam on the batch-mean loss. Feature statistics are fitted on the
/// training charts; parameters are initialized from `config.seed`.
pub fn train(pairs: &[Pair], config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    if pairs.is_empty() {
        return Err(Error::InvalidArgument("empty training set".into()));
    }
    let stats = FeatureStats::fit(pairs.iter().map(|p| p.chart.as_ref()));
    let samples = prepare(pairs, &stats, config.raster)?;
    let params = RefinerParams::init(config.arch(), stats, config.seed)?;
    train_samples(params, &samples, config)
}

/// Continues training `params` on prepared samples.
pub fn train_samples(
    mut params: RefinerParams,
    samples: &[Sample],
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    let mut opt = Adam::new(config.adam, &params);
    let mut batches = Batches::new(samples.len(), config.seed ^ 0x5eed_ba7c);
    let mut history = Vec::with_capacity(config.steps);
    let weights = &config.weights;

    for step in 1..=config.steps {
        let batch = batches.next(config.batch_size);
        let results: Vec<Result<(LossReport, Vec<Mat>)>> = if config.parallel {
            batch
                .par_iter()
                .map(|&i| sample_gradient(&params, &samples[i], weights))
                .collect()
        } else {
            batch
                .iter()
                .map(|&i| sample_gradient(&params, &samples[i], weights))
                .collect()
        };
        let mut grads = params.zeros_like();
        let mut terms = Terms::default();
        for r in results {
            let (report, g) = r?;
            terms.add(&report);
            for (acc, x) in grads.iter_mut().zip(&g) {
                *acc += x;
            }
        }
        let inv = 1.0 / batch.len() as f64;
        for g in &mut grads {
            *g *= inv;
        }
        if let Some(clip) = config.grad_clip {
            let norm = grads.iter().map(|g| g.norm_squared()).sum::<f64>().sqrt();
            if norm > clip {
                for g in &mut grads {
                    *g *= clip / norm;
                }
            }
        }
        opt.step(&mut params, &grads);
        if !params.is_finite() {
            return Err(Error::Degenerate(format!("parameters became non-finite at step {step}")));
        }
        history.push(HistoryRow::new(step, terms.scaled(batch.len())));
    }
    Ok(TrainOutcome { params, history })
}
