#![allow(dead_code)]

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use uvkit_core::fixtures;
use uvkit_core::mesh::{Chart, Mesh};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Jittered, bumped `n × n` grid chart with a matching near-planar uv layout.
pub fn random_chart(rng: &mut ChaCha8Rng, n: usize) -> (Arc<Chart>, Vec<[f64; 2]>) {
    let base = fixtures::grid(n, n, 1.0);
    let step = 1.0 / (n - 1) as f64;
    let vertices: Vec<[f64; 3]> = base
        .vertices
        .iter()
        .map(|p| {
            [
                p[0] + rng.random_range(-0.2..0.2) * step,
                p[1] + rng.random_range(-0.2..0.2) * step,
                rng.random_range(-0.3..0.3) * step,
            ]
        })
        .collect();
    let mesh = Mesh::new(vertices, base.faces.clone()).unwrap();
    let uv = mesh
        .vertices
        .iter()
        .map(|p| {
            [
                0.15 + 0.7 * p[0] + rng.random_range(-0.15..0.15) * step,
                0.15 + 0.7 * p[1] + rng.random_range(-0.15..0.15) * step,
            ]
        })
        .collect();
    (Arc::new(Chart::from_mesh(mesh).unwrap()), uv)
}

/// Central differences of `f` over every uv coordinate.
pub fn fd_gradient(uv: &[[f64; 2]], h: f64, mut f: impl FnMut(&[[f64; 2]]) -> f64) -> Vec<[f64; 2]> {
    let mut work = uv.to_vec();
    let mut out = vec![[0.0; 2]; uv.len()];
    for v in 0..uv.len() {
        for axis in 0..2 {
            let x = work[v][axis];
            work[v][axis] = x + h;
            let up = f(&work);
            work[v][axis] = x - h;
            let down = f(&work);
            work[v][axis] = x;
            out[v][axis] = (up - down) / (2.0 * h);
        }
    }
    out
}

/// `‖a − b‖∞ / ‖b‖∞`, guarded against a vanishing reference.
pub fn relative_error(analytic: &[[f64; 2]], reference: &[[f64; 2]]) -> f64 {
    let scale = reference
        .iter()
        .flatten()
        .fold(0.0f64, |m, x| m.max(x.abs()))
        .max(1e-12);
    analytic
        .iter()
        .flatten()
        .zip(reference.iter().flatten())
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
        / scale
}
