//! Initial UV parameterization of charts: Tutte embedding, free-boundary LSCM
//! and optional local/global stretch reduction.

mod arap;
mod lscm;
mod tutte;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{bounds2, dist3, gradient_basis, local_triangle, signed_area2, Vec2};
use crate::mesh::Chart;

pub use arap::arap_iterations;
pub use lscm::lscm;
pub use tutte::tutte_embed;

/// A chart together with one UV coordinate per chart vertex.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UvChart {
    pub chart: Arc<Chart>,
    pub uv: Vec<Vec2>,
    /// Set once the coordinates have been fitted into `[0,1]²`.
    pub normalized: bool,
}

impl UvChart {
    pub fn new(chart: Arc<Chart>, uv: Vec<Vec2>) -> Result<Self> {
        if uv.len() != chart.vertex_count() {
            return Err(Error::LengthMismatch(uv.len(), chart.vertex_count()));
        }
        if uv.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::Degenerate("non-finite uv coordinate".into()));
        }
        Ok(UvChart {
            chart,
            uv,
            normalized: false,
        })
    }

    pub fn with_uv(&self, uv: Vec<Vec2>) -> Self {
        UvChart {
            chart: Arc::clone(&self.chart),
            uv,
            normalized: false,
        }
    }

    pub fn face_uv(&self, f: usize) -> [Vec2; 3] {
        let [a, b, c] = self.chart.mesh.faces[f];
        [self.uv[a], self.uv[b], self.uv[c]]
    }

    pub fn signed_areas(&self) -> Vec<f64> {
        signed_areas(&self.chart.mesh.faces, &self.uv)
    }

    /// Faces whose UV winding is reversed relative to the 3D winding.
    pub fn flipped_count(&self) -> usize {
        self.signed_areas().iter().filter(|&&a| a < 0.0).count()
    }

    /// Sum of absolute UV face areas.
    pub fn uv_area(&self) -> f64 {
        self.signed_areas().iter().map(|a| a.abs()).sum()
    }
}

pub fn signed_areas(faces: &[[usize; 3]], uv: &[Vec2]) -> Vec<f64> {
    faces
        .iter()
        .map(|f| signed_area2(uv[f[0]], uv[f[1]], uv[f[2]]))
        .collect()
}

/// Per-face isometric frames and gradient operators of a chart.
#[derive(Clone, Debug)]
pub(crate) struct FaceOperators {
    pub area: Vec<f64>,
    pub grad: Vec<[Vec2; 3]>,
}

impl FaceOperators {
    pub fn new(chart: &Chart) -> Result<Self> {
        let mut area = Vec::with_capacity(chart.face_count());
        let mut grad = Vec::with_capacity(chart.face_count());
        for f in 0..chart.face_count() {
            let q = local_triangle(chart.mesh.face_positions(f)).ok_or(Error::ZeroAreaFace(f))?;
            area.push(signed_area2(q[0], q[1], q[2]));
            grad.push(gradient_basis(q));
        }
        Ok(FaceOperators { area, grad })
    }
}

/// Least-squares conformal energy `Σ A_f ((u_x − v_y)² + (u_y + v_x)²)`.
pub fn conformal_energy(chart: &Chart, uv: &[Vec2]) -> Result<f64> {
    let ops = FaceOperators::new(chart)?;
    let mut e = 0.0;
    for (f, tri) in chart.mesh.faces.iter().enumerate() {
        let g = ops.grad[f];
        let (mut ux, mut uy, mut vx, mut vy) = (0.0, 0.0, 0.0, 0.0);
        for k in 0..3 {
            let p = uv[tri[k]];
            ux += p[0] * g[k][0];
            uy += p[0] * g[k][1];
            vx += p[1] * g[k][0];
            vy += p[1] * g[k][1];
        }
        e += ops.area[f] * ((ux - vy).powi(2) + (uy + vx).powi(2));
    }
    Ok(e)
}

const EXACT_PIN_LIMIT: usize = 2000;

/// Boundary vertex pair at maximal 3D distance. Exhaustive up to 2000
/// boundary vertices, iterated farthest-point search beyond that.
pub fn default_pins(chart: &Chart) -> Result<(usize, usize)> {
    let boundary: Vec<usize> = chart.boundary_vertex_set().into_iter().collect();
    if boundary.len() < 2 {
        return Err(Error::InvalidArgument(
            "need at least two boundary vertices to pin".into(),
        ));
    }
    let pos = &chart.mesh.vertices;
    if boundary.len() <= EXACT_PIN_LIMIT {
        let mut best = (f64::NEG_INFINITY, boundary[0], boundary[1]);
        for (i, &a) in boundary.iter().enumerate() {
            for &b in &boundary[i + 1..] {
                let d = dist3(pos[a], pos[b]);
                if d > best.0 {
                    best = (d, a, b);
                }
            }
        }
        return Ok((best.1, best.2));
    }
    let farthest = |from: usize| -> (usize, f64) {
        boundary
            .iter()
            .map(|&b| (b, dist3(pos[from], pos[b])))
            .fold((from, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc })
    };
    let mut a = boundary[0];
    let (mut b, mut d) = farthest(a);
    for _ in 0..8 {
        let (c, dc) = farthest(b);
        if dc <= d {
            break;
        }
        a = b;
        b = c;
        d = dc;
    }
    Ok((a.min(b), a.max(b)))
}

/// Translates and uniformly scales into `[0,1]²`, centring the shorter axis.
pub fn normalize_uv(uv: &UvChart) -> Result<UvChart> {
    let (lo, hi) = bounds2(&uv.uv).ok_or_else(|| Error::Degenerate("empty uv set".into()))?;
    let w = hi[0] - lo[0];
    let h = hi[1] - lo[1];
    let side = w.max(h);
    if !(side > 0.0) || !side.is_finite() {
        return Err(Error::Degenerate("all uv points coincide".into()));
    }
    let ox = 0.5 * (side - w);
    let oy = 0.5 * (side - h);
    let coords = uv
        .uv
        .iter()
        .map(|p| {
            [
                ((p[0] - lo[0] + ox) / side).clamp(0.0, 1.0),
                ((p[1] - lo[1] + oy) / side).clamp(0.0, 1.0),
            ]
        })
        .collect();
    let mut out = uv.with_uv(coords);
    out.normalized = true;
    Ok(out)
}

/// Initializer settings for [`initialize`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InitConfig {
    /// Local/global stretch-reduction iterations applied after LSCM.
    pub arap_iterations: usize,
    /// Fall back to Tutte when LSCM flips faces on a disk chart.
    pub tutte_fallback: bool,
}

impl Default for InitConfig {
    fn default() -> Self {
        InitConfig {
            arap_iterations: 0,
            tutte_fallback: true,
        }
    }
}

/// LSCM with default pins, Tutte fallback on flips, optional stretch
/// reduction. Output is not normalized.
pub fn initialize(chart: Arc<Chart>, config: &InitConfig) -> Result<UvChart> {
    let (a, b) = default_pins(&chart)?;
    let mut uv = lscm(Arc::clone(&chart), a, b)?;
    if uv.flipped_count() > 0 && config.tutte_fallback && chart.is_disk() {
        log::debug!(
            "lscm flipped {} faces; using Tutte embedding",
            uv.flipped_count()
        );
        uv = tutte_embed(Arc::clone(&chart))?;
    }
    if config.arap_iterations > 0 {
        uv = arap_iterations(&uv, config.arap_iterations)?;
    }
    Ok(uv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn chart_of(mesh: crate::mesh::Mesh) -> Arc<Chart> {
        Arc::new(Chart::from_mesh(mesh).unwrap())
    }

    #[test]
    fn square_pins_are_diagonal() {
        let chart = chart_of(fixtures::grid(3, 3, 1.0));
        let (a, b) = default_pins(&chart).unwrap();
        let d = dist3(chart.mesh.vertices[a], chart.mesh.vertices[b]);
        assert!((d - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn single_triangle_pins() {
        let mesh =
            crate::mesh::Mesh::new(vec![[0.0; 3], [3.0, 0.0, 0.0], [0.0, 1.0, 0.0]], vec![[0, 1, 2]])
                .unwrap();
        let chart = chart_of(mesh);
        assert_eq!(default_pins(&chart).unwrap(), (1, 2));
    }

    #[test]
    fn normalize_examples() {
        let chart = chart_of(fixtures::grid(2, 2, 1.0));
        let uv = UvChart::new(
            Arc::clone(&chart),
            vec![[-1.0, -1.0], [1.0, -1.0], [-1.0, 1.0], [1.0, 1.0]],
        )
        .unwrap();
        let n = normalize_uv(&uv).unwrap();
        assert!(n.normalized);
        assert_eq!(n.uv, vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]);

        let wide = uv.with_uv(vec![[0.0, 0.0], [2.0, 0.0], [0.0, 1.0], [2.0, 1.0]]);
        let n = normalize_uv(&wide).unwrap();
        assert_eq!(n.uv, vec![[0.0, 0.25], [1.0, 0.25], [0.0, 0.75], [1.0, 0.75]]);

        let point = uv.with_uv(vec![[0.3, 0.3]; 4]);
        assert!(matches!(normalize_uv(&point), Err(Error::Degenerate(_))));
    }
}
