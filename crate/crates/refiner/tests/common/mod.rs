#![allow(dead_code)]

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use uvkit_core::fixtures;
use uvkit_core::mesh::{Chart, Mesh};
use uvkit_core::param::UvChart;
use uvkit_refiner::{ArchConfig, FeaturePack, FeatureStats, RefinerParams};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// At most a few hundred parameters.
pub fn miniature_arch() -> ArchConfig {
    ArchConfig {
        embed: [2, 1, 1, 1, 1],
        width: 4,
        sage_layers: 1,
        heads: 2,
        encoder_layers: 1,
        ffn_mult: 2,
    }
}

/// Gently curved `nx × ny` grid chart with a jittered near-isometric layout.
pub fn bumpy_chart(rng: &mut ChaCha8Rng, nx: usize, ny: usize) -> (Arc<Chart>, Vec<[f64; 2]>) {
    let g = fixtures::grid(nx, ny, 1.0);
    let amp = rng.random_range(0.0..0.15);
    let (cx, cy) = (rng.random_range(0.3..0.7), rng.random_range(0.3..0.7));
    let vertices = g
        .vertices
        .iter()
        .map(|p| {
            let d2 = (p[0] - cx).powi(2) + (p[1] - cy).powi(2);
            [p[0], p[1], amp * (-d2 / 0.08).exp()]
        })
        .collect();
    let mesh = Mesh::new(vertices, g.faces).unwrap();
    let jitter = 0.1 / nx.max(ny) as f64;
    let uv = g
        .vertices
        .iter()
        .map(|p| {
            [
                p[0] + rng.random_range(-jitter..jitter),
                p[1] + rng.random_range(-jitter..jitter),
            ]
        })
        .collect();
    (Arc::new(Chart::from_mesh(mesh).unwrap()), uv)
}

pub fn pack_for(chart: &Chart, uv: &[[f64; 2]]) -> FeaturePack {
    let stats = FeatureStats::fit([chart]);
    FeaturePack::new(chart, uv, &stats).unwrap()
}

pub fn params(arch: ArchConfig, seed: u64) -> RefinerParams {
    RefinerParams::init(arch, FeatureStats::default(), seed).unwrap()
}

/// Moves random interior vertices until between `lo` and `hi` faces flip.
pub fn seed_flips(rng: &mut ChaCha8Rng, uv: &UvChart, lo: usize, hi: usize) -> UvChart {
    let boundary = uv.chart.boundary_vertex_set();
    let interior: Vec<usize> = (0..uv.chart.vertex_count())
        .filter(|v| !boundary.contains(v))
        .collect();
    let cell = (uv.uv_area().abs() / uv.chart.face_count() as f64 * 2.0).sqrt();
    loop {
        let mut q = uv.uv.clone();
        let moves = rng.random_range(1..=hi.min(3));
        for _ in 0..moves {
            let v = interior[rng.random_range(0..interior.len())];
            let r = rng.random_range(0.6..1.6) * cell;
            let a = rng.random_range(0.0..std::f64::consts::TAU);
            q[v][0] += r * a.cos();
            q[v][1] += r * a.sin();
        }
        let candidate = uv.with_uv(q);
        let flips = candidate.flipped_count();
        if (lo..=hi).contains(&flips) {
            return candidate;
        }
    }
}
