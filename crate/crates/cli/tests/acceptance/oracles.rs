//! Independent reference computations and random fixtures.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use uvkit_core::fixtures;
use uvkit_core::geom::{point_segment_distance, Vec2};
use uvkit_core::mesh::{Chart, Mesh};
use uvkit_core::param::UvChart;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Orientation as the 3×3 determinant |1 x y| over the three corners.
pub fn orient(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    let m = [[1.0, a[0], a[1]], [1.0, b[0], b[1]], [1.0, c[0], c[1]]];
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Area of the intersection of two triangles by Sutherland–Hodgman clipping.
pub fn clip_area(subject: [Vec2; 3], clip: [Vec2; 3]) -> f64 {
    let ccw = |t: [Vec2; 3]| if orient(t[0], t[1], t[2]) < 0.0 { [t[0], t[2], t[1]] } else { t };
    let clip = ccw(clip);
    let mut poly: Vec<Vec2> = ccw(subject).to_vec();
    for k in 0..3 {
        let (a, b) = (clip[k], clip[(k + 1) % 3]);
        let input = std::mem::take(&mut poly);
        if input.is_empty() {
            break;
        }
        let side = |p: Vec2| (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
        for i in 0..input.len() {
            let cur = input[i];
            let prev = input[(i + input.len() - 1) % input.len()];
            let (sc, sp) = (side(cur), side(prev));
            let cut = |p: Vec2, q: Vec2, sp: f64, sq: f64| {
                let t = sp / (sp - sq);
                [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]
            };
            if sc >= 0.0 {
                if sp < 0.0 {
                    poly.push(cut(prev, cur, sp, sc));
                }
                poly.push(cur);
            } else if sp >= 0.0 {
                poly.push(cut(prev, cur, sp, sc));
            }
        }
    }
    let mut area = 0.0;
    for i in 0..poly.len() {
        let (p, q) = (poly[i], poly[(i + 1) % poly.len()]);
        area += p[0] * q[1] - q[0] * p[1];
    }
    0.5 * area.abs()
}

/// Faces that are flipped or share positive area with another face, by
/// checking every pair.
pub fn brute_force_bad_faces(tris: &[[Vec2; 3]]) -> (usize, usize) {
    let mut flipped = 0;
    let mut bad = 0;
    for (a, ta) in tris.iter().enumerate() {
        let f = orient(ta[0], ta[1], ta[2]) < 0.0;
        flipped += f as usize;
        let hit = tris
            .iter()
            .enumerate()
            .any(|(b, tb)| b != a && clip_area(*ta, *tb) > 1e-12);
        bad += (f || hit) as usize;
    }
    (flipped, bad)
}

/// Jittered, bumped `n × n` grid chart with a matching near-planar layout.
pub fn random_chart(rng: &mut ChaCha8Rng, n: usize) -> (Arc<Chart>, Vec<Vec2>) {
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

/// Gently curved `nx × ny` grid chart with a jittered near-isometric layout.
pub fn bumpy_chart(rng: &mut ChaCha8Rng, nx: usize, ny: usize) -> UvChart {
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
    UvChart::new(Arc::new(Chart::from_mesh(mesh).unwrap()), uv).unwrap()
}

/// Displaces random interior vertices until between `lo` and `hi` faces flip.
pub fn seed_flips(rng: &mut ChaCha8Rng, uv: &UvChart, lo: usize, hi: usize) -> UvChart {
    let boundary = uv.chart.boundary_vertex_set();
    let interior: Vec<usize> = (0..uv.chart.vertex_count())
        .filter(|v| !boundary.contains(v))
        .collect();
    let cell = (uv.uv_area().abs() / uv.chart.face_count() as f64 * 2.0).sqrt();
    loop {
        let mut q = uv.uv.clone();
        for _ in 0..rng.random_range(1..=3) {
            let v = interior[rng.random_range(0..interior.len())];
            let r = rng.random_range(0.6..1.6) * cell;
            let a = rng.random_range(0.0..std::f64::consts::TAU);
            q[v][0] += r * a.cos();
            q[v][1] += r * a.sin();
        }
        let candidate = uv.with_uv(q);
        if (lo..=hi).contains(&candidate.flipped_count()) {
            return candidate;
        }
    }
}

/// Grid island with anisotropic 3D size and a rotated, rescaled layout.
pub fn random_grid_island(rng: &mut ChaCha8Rng, max_side: usize) -> UvChart {
    let nx = rng.random_range(2..=max_side);
    let ny = rng.random_range(2..=max_side);
    let (sx, sy) = (rng.random_range(0.2..3.0), rng.random_range(0.2..3.0));
    let base = fixtures::grid(nx, ny, 1.0);
    let verts = base.vertices.iter().map(|p| [p[0] * sx, p[1] * sy, 0.0]).collect();
    let chart = Arc::new(Chart::from_mesh(Mesh::new(verts, base.faces).unwrap()).unwrap());
    let k = rng.random_range(0.1..4.0);
    let angle: f64 = rng.random_range(-3.0..3.0);
    let (s, c) = angle.sin_cos();
    let uv = chart
        .mesh
        .vertices
        .iter()
        .map(|p| {
            let (x, y) = (p[0] * k * rng.random_range(0.9..1.1), p[1] * k);
            [c * x - s * y + 5.0, s * x + c * y - 2.0]
        })
        .collect();
    UvChart::new(chart, uv).unwrap()
}

/// Central differences of `f` over every uv coordinate.
pub fn fd_gradient(uv: &[Vec2], h: f64, mut f: impl FnMut(&[Vec2]) -> f64) -> Vec<Vec2> {
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
pub fn relative_error(analytic: &[Vec2], reference: &[Vec2]) -> f64 {
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

/// True when a pixel inside the saturation band has two boundary edges at
/// nearly equal distance with different closest points, where the
/// nearest-edge distance has a kink and differences are meaningless.
pub fn near_medial_axis(boundary: &[(usize, usize)], uv: &[Vec2], resolution: usize, sharpness: f64) -> bool {
    let res = resolution as f64;
    let band = 40.0 / sharpness;
    for j in 0..resolution {
        for i in 0..resolution {
            let p = [i as f64 + 0.5, j as f64 + 0.5];
            let mut hits: Vec<(f64, Vec2)> = boundary
                .iter()
                .map(|&(a, b)| {
                    let a = [uv[a][0] * res, uv[a][1] * res];
                    let b = [uv[b][0] * res, uv[b][1] * res];
                    let (d, t) = point_segment_distance(p, a, b);
                    (d, [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])])
                })
                .collect();
            hits.sort_by(|x, y| x.0.total_cmp(&y.0));
            let (d1, q1) = hits[0];
            if d1 > band {
                continue;
            }
            if hits[1..].iter().any(|&(d, q)| {
                d <= d1 + 5e-3 && ((q[0] - q1[0]).abs() + (q[1] - q1[1]).abs()) > 1e-9
            }) {
                return true;
            }
        }
    }
    false
}
