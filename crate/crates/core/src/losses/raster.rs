use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{point_in_triangle, point_segment_distance, Vec2};
use crate::mesh::Face;
use crate::param::UvChart;

/// Logistic argument beyond which coverage is treated as saturated.
const SATURATION: f64 = 40.0;

pub const MIN_RESOLUTION: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RasterConfig {
    /// Pixels per side.
    pub resolution: usize,
    /// Logistic slope per pixel of signed distance.
    pub sharpness: f64,
}

impl Default for RasterConfig {
    fn default() -> Self {
        RasterConfig {
            resolution: 256,
            sharpness: 30.0,
        }
    }
}

impl RasterConfig {
    pub fn validate(&self) -> Result<()> {
        if self.resolution < MIN_RESOLUTION {
            return Err(Error::InvalidArgument(format!(
                "raster resolution {} below {MIN_RESOLUTION}",
                self.resolution
            )));
        }
        if !(self.sharpness > 0.0) || !self.sharpness.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "raster sharpness must be positive, got {}",
                self.sharpness
            )));
        }
        Ok(())
    }
}

/// Soft coverage of the unit UV square, row `j` holding `v ∈ [j/R, (j+1)/R)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SilhouetteImage {
    pub resolution: usize,
    pub sharpness: f64,
    pub coverage: Vec<f64>,
}

impl SilhouetteImage {
    pub fn filled(resolution: usize, value: f64) -> Self {
        SilhouetteImage {
            resolution,
            sharpness: 0.0,
            coverage: vec![value; resolution * resolution],
        }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.coverage[j * self.resolution + i]
    }

    /// 8-bit grayscale rows, top row first (v pointing up).
    pub fn to_gray8(&self) -> image::GrayImage {
        let r = self.resolution as u32;
        image::GrayImage::from_fn(r, r, |x, y| {
            let j = self.resolution - 1 - y as usize;
            let c = self.coverage[j * self.resolution + x as usize];
            image::Luma([(c.clamp(0.0, 1.0) * 255.0).round() as u8])
        })
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        self.to_gray8()
            .save_with_format(path, image::ImageFormat::Png)
            .map_err(|e| match e {
                image::ImageError::IoError(io) => Error::io(path, io),
                other => Error::Image(other),
            })
    }
}

/// Nearest boundary edge of one pixel within the saturation band.
#[derive(Clone, Copy, Debug)]
struct Nearest {
    edge: usize,
    dist: f64,
    t: f64,
}

/// Soft silhouette of a triangulated UV layout with the trace needed to
/// pull pixel gradients back onto the UV coordinates.
///
/// Coverage is `σ(s · sd(p))` where `sd` is the pixel-unit distance to the
/// nearest boundary edge, positive inside the union of faces.
#[derive(Clone, Debug)]
pub struct SoftRaster {
    image: SilhouetteImage,
    inside: Vec<bool>,
    nearest: Vec<Option<Nearest>>,
    boundary: Vec<(usize, usize)>,
}

impl SoftRaster {
    pub fn new(
        faces: &[Face],
        boundary: &[(usize, usize)],
        uv: &[Vec2],
        config: &RasterConfig,
    ) -> Result<Self> {
        config.validate()?;
        let res = config.resolution;
        let rf = res as f64;
        let s = config.sharpness;
        let px: Vec<Vec2> = uv.iter().map(|p| [p[0] * rf, p[1] * rf]).collect();
        let centre = |i: usize| i as f64 + 0.5;
        let span = |lo: f64, hi: f64| -> Option<(usize, usize)> {
            // pixel indices whose centres fall in [lo, hi]
            let a = (lo - 0.5).ceil().max(0.0);
            let b = (hi - 0.5).floor().min(rf - 1.0);
            (a <= b).then(|| (a as usize, b as usize))
        };

        let mut inside = vec![false; res * res];
        for f in faces {
            let [a, b, c] = [px[f[0]], px[f[1]], px[f[2]]];
            let (Some((i0, i1)), Some((j0, j1))) = (
                span(a[0].min(b[0]).min(c[0]), a[0].max(b[0]).max(c[0])),
                span(a[1].min(b[1]).min(c[1]), a[1].max(b[1]).max(c[1])),
            ) else {
                continue;
            };
            for j in j0..=j1 {
                for i in i0..=i1 {
                    let k = j * res + i;
                    if !inside[k] && point_in_triangle([centre(i), centre(j)], a, b, c) {
                        inside[k] = true;
                    }
                }
            }
        }

        let band = SATURATION / s;
        let mut nearest: Vec<Option<Nearest>> = vec![None; res * res];
        for (e, &(va, vb)) in boundary.iter().enumerate() {
            let (a, b) = (px[va], px[vb]);
            let (Some((i0, i1)), Some((j0, j1))) = (
                span(a[0].min(b[0]) - band, a[0].max(b[0]) + band),
                span(a[1].min(b[1]) - band, a[1].max(b[1]) + band),
            ) else {
                continue;
            };
            for j in j0..=j1 {
                for i in i0..=i1 {
                    let (dist, t) = point_segment_distance([centre(i), centre(j)], a, b);
                    if dist > band {
                        continue;
                    }
                    let slot = &mut nearest[j * res + i];
                    if slot.is_none_or(|n| dist < n.dist) {
                        *slot = Some(Nearest { edge: e, dist, t });
                    }
                }
            }
        }

        let coverage = (0..res * res)
            .map(|k| match nearest[k] {
                Some(n) => {
                    let sd = if inside[k] { n.dist } else { -n.dist };
                    logistic(s * sd)
                }
                None if inside[k] => 1.0,
                None => 0.0,
            })
            .collect();
        Ok(SoftRaster {
            image: SilhouetteImage {
                resolution: res,
                sharpness: s,
                coverage,
            },
            inside,
            nearest,
            boundary: boundary.to_vec(),
        })
    }

    pub fn image(&self) -> &SilhouetteImage {
        &self.image
    }

    pub fn into_image(self) -> SilhouetteImage {
        self.image
    }

    /// `Σ_p w_p ∂coverage_p/∂uv` for one weight per pixel.
    pub fn vjp(&self, uv: &[Vec2], pixel_weights: &[f64]) -> Result<Vec<Vec2>> {
        let res = self.image.resolution;
        if pixel_weights.len() != res * res {
            return Err(Error::LengthMismatch(pixel_weights.len(), res * res));
        }
        let rf = res as f64;
        let s = self.image.sharpness;
        let mut grad = vec![[0.0; 2]; uv.len()];
        for j in 0..res {
            for i in 0..res {
                let k = j * res + i;
                let w = pixel_weights[k];
                let Some(n) = self.nearest[k] else { continue };
                if w == 0.0 || n.dist == 0.0 {
                    continue;
                }
                let c = self.image.coverage[k];
                let sign = if self.inside[k] { 1.0 } else { -1.0 };
                let dcov = w * s * c * (1.0 - c) * sign;
                let (va, vb) = self.boundary[n.edge];
                let a = [uv[va][0] * rf, uv[va][1] * rf];
                let b = [uv[vb][0] * rf, uv[vb][1] * rf];
                let p = [i as f64 + 0.5, j as f64 + 0.5];
                let q = [a[0] + n.t * (b[0] - a[0]), a[1] + n.t * (b[1] - a[1])];
                // ∂dist/∂q in pixel units, chained to uv units by the factor R
                let dq = [(q[0] - p[0]) / n.dist * rf, (q[1] - p[1]) / n.dist * rf];
                for axis in 0..2 {
                    grad[va][axis] += dcov * (1.0 - n.t) * dq[axis];
                    grad[vb][axis] += dcov * n.t * dq[axis];
                }
            }
        }
        Ok(grad)
    }
}

#[inline]
pub(crate) fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Boundary edges of a chart, oriented along the face winding.
pub fn boundary_edges(uv: &UvChart) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for lp in &uv.chart.boundary_loops {
        for k in 0..lp.len() {
            out.push((lp[k], lp[(k + 1) % lp.len()]));
        }
    }
    out
}

pub fn rasterize_silhouette(uv: &UvChart, config: &RasterConfig) -> Result<SilhouetteImage> {
    let boundary = boundary_edges(uv);
    Ok(SoftRaster::new(&uv.chart.mesh.faces, &boundary, &uv.uv, config)?.into_image())
}

/// Mean squared pixel difference and its gradient with respect to `pred`.
pub fn silhouette_loss(pred: &SilhouetteImage, gt: &SilhouetteImage) -> Result<(f64, Vec<f64>)> {
    if pred.resolution != gt.resolution {
        return Err(Error::ResolutionMismatch(pred.resolution, gt.resolution));
    }
    let n = pred.coverage.len() as f64;
    let mut value = 0.0;
    let grad = pred
        .coverage
        .iter()
        .zip(&gt.coverage)
        .map(|(p, g)| {
            let d = p - g;
            value += d * d;
            2.0 * d / n
        })
        .collect();
    Ok((value / n, grad))
}
