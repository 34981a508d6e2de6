use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::mesh::Chart;
use crate::param::{signed_areas, FaceOperators};

/// Mean per-vertex L1 distance and its subgradient (0 at exact ties).
pub fn recon_loss(pred: &[Vec2], gt: &[Vec2]) -> Result<(f64, Vec<Vec2>)> {
    if pred.len() != gt.len() {
        return Err(Error::LengthMismatch(pred.len(), gt.len()));
    }
    if pred.is_empty() {
        return Ok((0.0, Vec::new()));
    }
    let n = pred.len() as f64;
    let sgn = |x: f64| {
        if x > 0.0 {
            1.0
        } else if x < 0.0 {
            -1.0
        } else {
            0.0
        }
    };
    let mut value = 0.0;
    let grad = pred
        .iter()
        .zip(gt)
        .map(|(p, g)| {
            let du = p[0] - g[0];
            let dv = p[1] - g[1];
            value += du.abs() + dv.abs();
            [sgn(du) / n, sgn(dv) / n]
        })
        .collect();
    Ok((value / n, grad))
}

/// Area sums behind the singular-value distortion of one or more charts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DistortionSums {
    /// `Σ_f A_f |σ¹_f − σ²_f|` with `A_f` the 3D face area.
    pub weighted: f64,
    /// `Σ_f A_f`.
    pub area3: f64,
    /// `Σ_f |A_f^uv|`.
    pub area_uv: f64,
}

impl DistortionSums {
    pub fn add(&mut self, other: &DistortionSums) {
        self.weighted += other.weighted;
        self.area3 += other.area3;
        self.area_uv += other.area_uv;
    }

    /// Raw area-weighted mean `Σ A |σ¹ − σ²| / Σ A`.
    pub fn loss(&self) -> f64 {
        if self.area3 > 0.0 {
            self.weighted / self.area3
        } else {
            0.0
        }
    }

    /// The raw mean evaluated after a uniform rescale that equalizes total UV
    /// and 3D area. Invariant to rotation, translation and uniform scaling.
    pub fn metric(&self) -> Result<f64> {
        if !(self.area_uv > 0.0) {
            return Err(Error::Degenerate("uv layout has zero area".into()));
        }
        Ok(self.loss() * (self.area3 / self.area_uv).sqrt())
    }
}

/// Per-face `|σ¹ − σ²|` of the Jacobian `[[u_x, u_y], [v_x, v_y]]` and its
/// partials with respect to the four entries.
///
/// With `E = (a+d)/2, F = (a−d)/2, G = (c+b)/2, H = (c−b)/2` the singular
/// values are `√(E²+H²) ± √(F²+G²)`, so the gap is `2·min(√(E²+H²), √(F²+G²))`.
fn singular_gap(a: f64, b: f64, c: f64, d: f64) -> (f64, [f64; 4]) {
    let e = 0.5 * (a + d);
    let f = 0.5 * (a - d);
    let g = 0.5 * (c + b);
    let h = 0.5 * (c - b);
    let q = e.hypot(h);
    let r = f.hypot(g);
    // within rounding of σ¹ = σ² the gap has no direction; use subgradient 0
    let tie = 1e-12 * (q + r);
    if r <= q {
        if r <= tie {
            return (2.0 * r, [0.0; 4]);
        }
        (2.0 * r, [f / r, g / r, g / r, -f / r])
    } else {
        if q <= tie {
            return (2.0 * q, [0.0; 4]);
        }
        (2.0 * q, [e / q, -h / q, h / q, e / q])
    }
}

fn jacobian(grad: &[Vec2; 3], tri: &[usize; 3], uv: &[Vec2]) -> [f64; 4] {
    let mut j = [0.0; 4];
    for k in 0..3 {
        let p = uv[tri[k]];
        j[0] += p[0] * grad[k][0];
        j[1] += p[0] * grad[k][1];
        j[2] += p[1] * grad[k][0];
        j[3] += p[1] * grad[k][1];
    }
    j
}

pub fn distortion_sums(chart: &Chart, uv: &[Vec2]) -> Result<DistortionSums> {
    if uv.len() != chart.vertex_count() {
        return Err(Error::LengthMismatch(uv.len(), chart.vertex_count()));
    }
    let ops = FaceOperators::new(chart)?;
    let mut sums = DistortionSums::default();
    for (f, tri) in chart.mesh.faces.iter().enumerate() {
        let [a, b, c, d] = jacobian(&ops.grad[f], tri, uv);
        sums.weighted += ops.area[f] * singular_gap(a, b, c, d).0;
        sums.area3 += ops.area[f];
        sums.area_uv += (ops.area[f] * (a * d - b * c)).abs();
    }
    Ok(sums)
}

/// Area-weighted mean singular-value gap and its gradient with respect to
/// the UV coordinates. Zero-area 3D faces are rejected.
pub fn distortion_loss(chart: &Chart, uv: &[Vec2]) -> Result<(f64, Vec<Vec2>)> {
    if uv.len() != chart.vertex_count() {
        return Err(Error::LengthMismatch(uv.len(), chart.vertex_count()));
    }
    let ops = FaceOperators::new(chart)?;
    distortion_with(&ops, &chart.mesh.faces, uv)
}

pub(crate) fn distortion_with(
    ops: &FaceOperators,
    faces: &[[usize; 3]],
    uv: &[Vec2],
) -> Result<(f64, Vec<Vec2>)> {
    let total: f64 = ops.area.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Degenerate("chart has zero 3D area".into()));
    }
    let mut value = 0.0;
    let mut grad = vec![[0.0; 2]; uv.len()];
    for (f, tri) in faces.iter().enumerate() {
        let g = &ops.grad[f];
        let [a, b, c, d] = jacobian(g, tri, uv);
        let (gap, dj) = singular_gap(a, b, c, d);
        let w = ops.area[f] / total;
        value += w * gap;
        for k in 0..3 {
            let v = tri[k];
            grad[v][0] += w * (dj[0] * g[k][0] + dj[1] * g[k][1]);
            grad[v][1] += w * (dj[2] * g[k][0] + dj[3] * g[k][1]);
        }
    }
    Ok((value, grad))
}

/// Scale-normalized distortion used for reporting.
pub fn distortion_metric(chart: &Chart, uv: &[Vec2]) -> Result<f64> {
    distortion_sums(chart, uv)?.metric()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverlapTerms {
    /// Faces with negative signed UV area.
    pub count: usize,
    /// `Σ max(0, margin − A_f) / reference_area`.
    pub soft: f64,
    pub grad: Vec<Vec2>,
}

pub const DEFAULT_MARGIN: f64 = 1e-6;

/// Exact flip count plus the hinge surrogate on signed UV area.
///
/// `reference_area` normalizes the hinge, normally the summed absolute UV
/// area of the layout the prediction started from.
pub fn overlap_terms(
    chart: &Chart,
    uv: &[Vec2],
    margin: f64,
    reference_area: f64,
) -> Result<OverlapTerms> {
    if uv.len() != chart.vertex_count() {
        return Err(Error::LengthMismatch(uv.len(), chart.vertex_count()));
    }
    if !(reference_area > 0.0) || !reference_area.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "overlap reference area must be positive, got {reference_area}"
        )));
    }
    let faces = &chart.mesh.faces;
    let areas = signed_areas(faces, uv);
    let mut count = 0;
    let mut soft = 0.0;
    let mut grad = vec![[0.0; 2]; uv.len()];
    for (tri, &area) in faces.iter().zip(&areas) {
        if area < 0.0 {
            count += 1;
        }
        if area < margin {
            soft += (margin - area) / reference_area;
            let [a, b, c] = [uv[tri[0]], uv[tri[1]], uv[tri[2]]];
            let da = [0.5 * (b[1] - c[1]), 0.5 * (c[0] - b[0])];
            let db = [0.5 * (c[1] - a[1]), 0.5 * (a[0] - c[0])];
            let dc = [0.5 * (a[1] - b[1]), 0.5 * (b[0] - a[0])];
            for (v, d) in [(tri[0], da), (tri[1], db), (tri[2], dc)] {
                grad[v][0] -= d[0] / reference_area;
                grad[v][1] -= d[1] / reference_area;
            }
        }
    }
    Ok(OverlapTerms { count, soft, grad })
}
