use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::raster::{boundary_edges, silhouette_loss, RasterConfig, SilhouetteImage, SoftRaster};
use super::terms::{distortion_with, overlap_terms, recon_loss, DEFAULT_MARGIN};
use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::mesh::Chart;
use crate::param::{signed_areas, FaceOperators, UvChart};

/// Term weights `(ω_r, ω_s, ω_d, ω_o)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossWeights {
    pub recon: f64,
    pub silhouette: f64,
    pub distortion: f64,
    pub overlap: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            recon: 1.0,
            silhouette: 1.0,
            distortion: 1e-4,
            overlap: 1e-2,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        for (name, w) in [
            ("recon", self.recon),
            ("silhouette", self.silhouette),
            ("distortion", self.distortion),
            ("overlap", self.overlap),
        ] {
            if !(w >= 0.0) || !w.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "loss weight {name} must be finite and non-negative, got {w}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub recon: f64,
    pub silhouette: f64,
    pub distortion: f64,
    pub overlap_soft: f64,
    pub overlap_count: usize,
    pub total: f64,
    /// `∂total/∂uv`, one entry per vertex.
    pub grad: Vec<Vec2>,
}

impl LossReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Everything about a training target that stays fixed while the
/// prediction changes: ground-truth UVs and silhouette, face operators and
/// the hinge reference area.
#[derive(Clone, Debug)]
pub struct LossContext {
    pub chart: Arc<Chart>,
    pub q_gt: Vec<Vec2>,
    pub raster: RasterConfig,
    pub margin: f64,
    pub reference_area: f64,
    gt_image: SilhouetteImage,
    boundary: Vec<(usize, usize)>,
    ops: FaceOperators,
}

impl LossContext {
    /// The hinge is normalized by the summed absolute area of `q_gt`.
    pub fn new(chart: Arc<Chart>, q_gt: Vec<Vec2>, raster: RasterConfig) -> Result<Self> {
        let gt = UvChart::new(Arc::clone(&chart), q_gt)?;
        let boundary = boundary_edges(&gt);
        let gt_image = SoftRaster::new(&chart.mesh.faces, &boundary, &gt.uv, &raster)?.into_image();
        let reference_area: f64 = signed_areas(&chart.mesh.faces, &gt.uv)
            .iter()
            .map(|a| a.abs())
            .sum();
        if !(reference_area > 0.0) {
            return Err(Error::Degenerate("ground-truth uv has zero area".into()));
        }
        let ops = FaceOperators::new(&chart)?;
        Ok(LossContext {
            chart,
            q_gt: gt.uv,
            raster,
            margin: DEFAULT_MARGIN,
            reference_area,
            gt_image,
            boundary,
            ops,
        })
    }

    pub fn gt_image(&self) -> &SilhouetteImage {
        &self.gt_image
    }

    pub fn evaluate(&self, q_pred: &[Vec2], weights: &LossWeights) -> Result<LossReport> {
        weights.validate()?;
        let n = self.chart.vertex_count();
        if q_pred.len() != n {
            return Err(Error::LengthMismatch(q_pred.len(), n));
        }
        if q_pred.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::Degenerate("non-finite predicted uv".into()));
        }
        let (recon, g_recon) = recon_loss(q_pred, &self.q_gt)?;

        let raster = SoftRaster::new(&self.chart.mesh.faces, &self.boundary, q_pred, &self.raster)?;
        let (silhouette, pixel_grad) = silhouette_loss(raster.image(), &self.gt_image)?;
        let g_sil = if weights.silhouette != 0.0 {
            raster.vjp(q_pred, &pixel_grad)?
        } else {
            vec![[0.0; 2]; n]
        };

        let (distortion, g_dist) = distortion_with(&self.ops, &self.chart.mesh.faces, q_pred)?;
        let overlap = overlap_terms(&self.chart, q_pred, self.margin, self.reference_area)?;

        let total = weights.recon * recon
            + weights.silhouette * silhouette
            + weights.distortion * distortion
            + weights.overlap * overlap.soft;
        let grad = (0..n)
            .map(|v| {
                let mut g = [0.0; 2];
                for axis in 0..2 {
                    g[axis] = weights.recon * g_recon[v][axis]
                        + weights.silhouette * g_sil[v][axis]
                        + weights.distortion * g_dist[v][axis]
                        + weights.overlap * overlap.grad[v][axis];
                }
                g
            })
            .collect();
        Ok(LossReport {
            recon,
            silhouette,
            distortion,
            overlap_soft: overlap.soft,
            overlap_count: overlap.count,
            total,
            grad,
        })
    }
}

/// One-shot weighted loss of `q_pred` against `q_gt`.
pub fn total_loss(
    chart: Arc<Chart>,
    q_pred: &[Vec2],
    q_gt: &[Vec2],
    weights: &LossWeights,
    raster: &RasterConfig,
) -> Result<LossReport> {
    LossContext::new(chart, q_gt.to_vec(), *raster)?.evaluate(q_pred, weights)
}
