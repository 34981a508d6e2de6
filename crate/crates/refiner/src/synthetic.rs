use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use uvkit_core::atlas::orient_island;
use uvkit_core::fixtures;
use uvkit_core::geom::Vec2;
use uvkit_core::mesh::{Chart, Mesh};
use uvkit_core::param::{default_pins, lscm, normalize_uv};
use uvkit_core::{Error, Result};

/// A chart with an initial layout and a target layout.
#[derive(Clone, Debug, PartialEq)]
pub struct Pair {
    pub chart: Arc<Chart>,
    pub q_init: Vec<Vec2>,
    pub q_gt: Vec<Vec2>,
}

const BUMPS: usize = 3;
const MAX_ATTEMPTS: usize = 16;

/// Unit grid target against a conformal unwrap of the same grid lifted
/// onto a smooth height field of Gaussian bumps with amplitude up to
/// `warp`.
pub fn make_synthetic_pair(seed: u64, grid: usize, warp: f64) -> Result<Pair> {
    if grid < 3 {
        return Err(Error::InvalidArgument(format!("grid must be at least 3×3, got {grid}")));
    }
    if !(warp >= 0.0) || !warp.is_finite() {
        return Err(Error::InvalidArgument(format!("warp must be finite and ≥ 0, got {warp}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let flat = fixtures::grid(grid, grid, 1.0);
    for _ in 0..MAX_ATTEMPTS {
        let bumps: Vec<([f64; 2], f64, f64)> = (0..BUMPS)
            .map(|_| {
                let c = [rng.random_range(0.2..0.8), rng.random_range(0.2..0.8)];
                let sigma = rng.random_range(0.15..0.3);
                let amp = if warp > 0.0 { rng.random_range(-warp..=warp) } else { 0.0 };
                (c, sigma, amp)
            })
            .collect();
        let vertices = flat
            .vertices
            .iter()
            .map(|p| {
                let z: f64 = bumps
                    .iter()
                    .map(|(c, s, a)| {
                        let d2 = (p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2);
                        a * (-d2 / (2.0 * s * s)).exp()
                    })
                    .sum();
                [p[0], p[1], z]
            })
            .collect();
        let mesh = Mesh::new(vertices, flat.faces.clone())?;
        if (0..mesh.face_count()).any(|f| !(mesh.face_area(f) > 1e-12)) {
            continue;
        }
        let chart = Arc::new(Chart::from_mesh(mesh)?);
        let (a, b) = default_pins(&chart)?;
        let init = normalize_uv(&orient_island(&lscm(Arc::clone(&chart), a, b)?)?)?;
        return Ok(Pair {
            chart,
            q_init: init.uv,
            q_gt: fixtures::grid_uv(grid, grid),
        });
    }
    Err(Error::Degenerate(format!(
        "no non-degenerate warp found in {MAX_ATTEMPTS} attempts"
    )))
}

/// `count` pairs with consecutive seeds starting at `seed`.
pub fn synthetic_dataset(seed: u64, count: usize, grid: usize, warp: f64) -> Result<Vec<Pair>> {
    (0..count)
        .map(|i| make_synthetic_pair(seed.wrapping_add(i as u64), grid, warp))
        .collect()
}
