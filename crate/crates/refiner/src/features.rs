use serde::{Deserialize, Serialize};
use uvkit_core::geom::Vec2;
use uvkit_core::mesh::{compute_attributes, Chart};
use uvkit_core::{Error, Result};

use crate::tape::Mat;

/// Mean and standard deviation of one scalar channel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZScore {
    pub mean: f64,
    pub std: f64,
}

impl ZScore {
    pub const IDENTITY: ZScore = ZScore { mean: 0.0, std: 1.0 };

    pub fn fit(values: impl IntoIterator<Item = f64>) -> Self {
        let v: Vec<f64> = values.into_iter().collect();
        if v.is_empty() {
            return ZScore::IDENTITY;
        }
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        // constant channels stay centred but unscaled
        let std = if var > 1e-24 { var.sqrt() } else { 1.0 };
        ZScore { mean, std }
    }

    pub fn apply(&self, x: f64) -> f64 {
        (x - self.mean) / self.std
    }
}

/// Training-set statistics for the z-scored channels.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureStats {
    pub degree: ZScore,
    pub curvature: ZScore,
}

impl Default for FeatureStats {
    fn default() -> Self {
        FeatureStats {
            degree: ZScore::IDENTITY,
            curvature: ZScore::IDENTITY,
        }
    }
}

impl FeatureStats {
    pub fn fit<'a>(charts: impl IntoIterator<Item = &'a Chart>) -> Self {
        let mut degree = Vec::new();
        let mut curvature = Vec::new();
        for c in charts {
            let attr = compute_attributes(&c.mesh);
            degree.extend(attr.degree.iter().map(|&d| d as f64));
            curvature.extend(attr.curvature);
        }
        FeatureStats {
            degree: ZScore::fit(degree),
            curvature: ZScore::fit(curvature),
        }
    }
}

/// Input channel widths in concatenation order.
pub const CHANNELS: [(&str, usize); 5] = [
    ("uv", 2),
    ("position", 3),
    ("normal", 3),
    ("degree", 1),
    ("curvature", 1),
];

/// Network input for one chart.
#[derive(Clone, Debug, PartialEq)]
pub struct FeaturePack {
    /// Initial layout the offsets are added to.
    pub q_init: Vec<Vec2>,
    /// One `n × width` block per entry of [`CHANNELS`].
    pub channels: Vec<Mat>,
    /// Symmetric vertex adjacency from shared faces.
    pub neighbors: Vec<Vec<usize>>,
}

impl FeaturePack {
    /// Positions are centred on their bounding box and scaled by its
    /// largest side so they share the unit range of `q_init`.
    pub fn new(chart: &Chart, q_init: &[Vec2], stats: &FeatureStats) -> Result<Self> {
        let n = chart.vertex_count();
        if q_init.len() != n {
            return Err(Error::LengthMismatch(q_init.len(), n));
        }
        let attr = compute_attributes(&chart.mesh);
        let verts = &chart.mesh.vertices;
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for p in verts {
            for k in 0..3 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let extent = (0..3).map(|k| hi[k] - lo[k]).fold(0.0, f64::max);
        let extent = if extent > 0.0 { extent } else { 1.0 };
        let centre: Vec<f64> = (0..3).map(|k| 0.5 * (lo[k] + hi[k])).collect();

        let uv = Mat::from_fn(n, 2, |i, k| q_init[i][k]);
        let pos = Mat::from_fn(n, 3, |i, k| (verts[i][k] - centre[k]) / extent);
        let normal = Mat::from_fn(n, 3, |i, k| attr.normals[i][k]);
        let degree = Mat::from_fn(n, 1, |i, _| stats.degree.apply(attr.degree[i] as f64));
        let curvature = Mat::from_fn(n, 1, |i, _| stats.curvature.apply(attr.curvature[i]));
        let channels = vec![uv, pos, normal, degree, curvature];
        if channels.iter().any(|m| m.iter().any(|x| !x.is_finite())) {
            return Err(Error::Degenerate("non-finite input feature".into()));
        }
        Ok(FeaturePack {
            q_init: q_init.to_vec(),
            channels,
            neighbors: chart.mesh.vertex_neighbors(),
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.q_init.len()
    }

    /// Relabels vertex `i` as `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let n = self.vertex_count();
        let mut inv = vec![0; n];
        for (i, &p) in perm.iter().enumerate() {
            inv[p] = i;
        }
        let mut neighbors = vec![Vec::new(); n];
        for (i, nb) in self.neighbors.iter().enumerate() {
            let mut mapped: Vec<usize> = nb.iter().map(|&j| perm[j]).collect();
            mapped.sort_unstable();
            neighbors[perm[i]] = mapped;
        }
        FeaturePack {
            q_init: (0..n).map(|i| self.q_init[inv[i]]).collect(),
            channels: self
                .channels
                .iter()
                .map(|m| Mat::from_fn(n, m.ncols(), |i, k| m[(inv[i], k)]))
                .collect(),
            neighbors,
        }
    }
}

fn spread(x: u32) -> u64 {
    let mut x = x as u64;
    x = (x | (x << 16)) & 0x0000_FFFF_0000_FFFF;
    x = (x | (x << 8)) & 0x00FF_00FF_00FF_00FF;
    x = (x | (x << 4)) & 0x0F0F_0F0F_0F0F_0F0F;
    x = (x | (x << 2)) & 0x3333_3333_3333_3333;
    x = (x | (x << 1)) & 0x5555_5555_5555_5555;
    x
}

/// Vertex order along a Z-curve over the bounding box of `uv`, ties broken
/// by index.
pub fn morton_order(uv: &[Vec2]) -> Vec<usize> {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in uv {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let q = |x: f64, k: usize| -> u32 {
        let span = hi[k] - lo[k];
        if !(span > 0.0) {
            return 0;
        }
        (((x - lo[k]) / span) * 65535.0).round().clamp(0.0, 65535.0) as u32
    };
    let mut keyed: Vec<(u64, usize)> = uv
        .iter()
        .enumerate()
        .map(|(i, p)| (spread(q(p[0], 0)) | (spread(q(p[1], 1)) << 1), i))
        .collect();
    keyed.sort_unstable();
    keyed.into_iter().map(|(_, i)| i).collect()
}
