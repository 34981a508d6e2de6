use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{cross2, dot2, sub2, Vec2};

/// Proper 2D rotation stored as a row-major 2×2 matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rotation2 {
    pub m: [[f64; 2]; 2],
}

impl Rotation2 {
    pub const IDENTITY: Rotation2 = Rotation2 {
        m: [[1.0, 0.0], [0.0, 1.0]],
    };

    pub fn from_angle(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Rotation2 {
            m: [[c, -s], [s, c]],
        }
    }

    pub fn angle(&self) -> f64 {
        self.m[1][0].atan2(self.m[0][0])
    }

    pub fn det(&self) -> f64 {
        det2(self.m)
    }

    #[inline]
    pub fn apply(&self, p: Vec2) -> Vec2 {
        [
            self.m[0][0] * p[0] + self.m[0][1] * p[1],
            self.m[1][0] * p[0] + self.m[1][1] * p[1],
        ]
    }

    /// `RᵀR = I` and `det R = 1`, both within `tol`.
    pub fn is_proper(&self, tol: f64) -> bool {
        let m = self.m;
        let rtr = matmul(transpose(m), m);
        (rtr[0][0] - 1.0).abs() <= tol
            && (rtr[1][1] - 1.0).abs() <= tol
            && rtr[0][1].abs() <= tol
            && rtr[1][0].abs() <= tol
            && (self.det() - 1.0).abs() <= tol
    }
}

/// Optimal rotation between two corresponded point sets plus the centroids it
/// was computed about.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Alignment {
    pub rotation: Rotation2,
    pub src_centroid: Vec2,
    pub dst_centroid: Vec2,
    /// Source points coincide (or the covariance vanishes); rotation is the
    /// identity.
    pub degenerate: bool,
}

impl Alignment {
    /// `R (q − q̄) + p̄` for every point.
    pub fn apply(&self, points: &[Vec2]) -> Vec<Vec2> {
        points
            .iter()
            .map(|&q| {
                let r = self.rotation.apply(sub2(q, self.src_centroid));
                [r[0] + self.dst_centroid[0], r[1] + self.dst_centroid[1]]
            })
            .collect()
    }
}

/// Singular value decomposition `M = U diag(σ) Vᵀ` of a 2×2 matrix with
/// `σ₁ ≥ σ₂ ≥ 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Svd2 {
    pub u: [[f64; 2]; 2],
    pub sigma: [f64; 2],
    pub vt: [[f64; 2]; 2],
}

pub fn svd2(m: [[f64; 2]; 2]) -> Svd2 {
    let e = 0.5 * (m[0][0] + m[1][1]);
    let f = 0.5 * (m[0][0] - m[1][1]);
    let g = 0.5 * (m[1][0] + m[0][1]);
    let h = 0.5 * (m[1][0] - m[0][1]);
    let q = e.hypot(h);
    let r = f.hypot(g);
    let a1 = g.atan2(f);
    let a2 = h.atan2(e);
    let theta = 0.5 * (a2 - a1);
    let phi = 0.5 * (a2 + a1);
    let mut u = Rotation2::from_angle(phi).m;
    let vt = Rotation2::from_angle(theta).m;
    let mut s2 = q - r;
    if s2 < 0.0 {
        s2 = -s2;
        u[0][1] = -u[0][1];
        u[1][1] = -u[1][1];
    }
    Svd2 {
        u,
        sigma: [q + r, s2],
        vt,
    }
}

/// Rotation `R` minimizing `Σ ‖R (q_i − q̄) − (p_i − p̄)‖²` over proper
/// rotations, with `q = src` and `p = dst`.
///
/// Built as `R = U S Vᵀ` from the SVD of the cross-covariance
/// `W = Σ (p_i − p̄)(q_i − q̄)ᵀ`, where `S = diag(1, sign(det U · det Vᵀ))`
/// keeps `det R = +1` for reflected inputs.
pub fn horn_align(src: &[Vec2], dst: &[Vec2]) -> Result<Alignment> {
    if src.len() != dst.len() {
        return Err(Error::LengthMismatch(src.len(), dst.len()));
    }
    if src.len() < 2 {
        return Err(Error::InvalidArgument(
            "alignment needs at least two points".into(),
        ));
    }
    let qc = centroid(src);
    let pc = centroid(dst);
    let mut w = [[0.0; 2]; 2];
    let mut spread = 0.0;
    for (q, p) in src.iter().zip(dst) {
        let q = sub2(*q, qc);
        let p = sub2(*p, pc);
        spread += dot2(q, q);
        for i in 0..2 {
            for j in 0..2 {
                w[i][j] += p[i] * q[j];
            }
        }
    }
    let scale = w.iter().flatten().map(|x| x.abs()).fold(0.0, f64::max);
    if spread == 0.0 || scale == 0.0 {
        return Ok(Alignment {
            rotation: Rotation2::IDENTITY,
            src_centroid: qc,
            dst_centroid: pc,
            degenerate: true,
        });
    }
    let svd = svd2(w);
    let sign = if det2(svd.u) * det2(svd.vt) < 0.0 { -1.0 } else { 1.0 };
    let us = [
        [svd.u[0][0], sign * svd.u[0][1]],
        [svd.u[1][0], sign * svd.u[1][1]],
    ];
    let mut rotation = Rotation2 {
        m: matmul(us, svd.vt),
    };
    // re-project onto SO(2) to absorb rounding from the trigonometric SVD
    let theta = rotation.angle();
    rotation = Rotation2::from_angle(theta);
    Ok(Alignment {
        rotation,
        src_centroid: qc,
        dst_centroid: pc,
        degenerate: false,
    })
}

/// Rotation, uniform scale and translation registering `src` onto `dst` in
/// the least-squares sense. Returns the transformed source points.
pub fn similarity_align(src: &[Vec2], dst: &[Vec2]) -> Result<Vec<Vec2>> {
    let al = horn_align(src, dst)?;
    let mut num = 0.0;
    let mut den = 0.0;
    for (q, p) in src.iter().zip(dst) {
        let rq = al.rotation.apply(sub2(*q, al.src_centroid));
        num += dot2(rq, sub2(*p, al.dst_centroid));
        den += dot2(rq, rq);
    }
    let s = if den > 0.0 { num / den } else { 1.0 };
    Ok(src
        .iter()
        .map(|q| {
            let rq = al.rotation.apply(sub2(*q, al.src_centroid));
            [s * rq[0] + al.dst_centroid[0], s * rq[1] + al.dst_centroid[1]]
        })
        .collect())
}

/// Sum of squared residuals of `R (q − q̄) − (p − p̄)`.
pub fn alignment_residual(src: &[Vec2], dst: &[Vec2], rotation: &Rotation2) -> f64 {
    let qc = centroid(src);
    let pc = centroid(dst);
    src.iter()
        .zip(dst)
        .map(|(q, p)| {
            let r = sub2(rotation.apply(sub2(*q, qc)), sub2(*p, pc));
            dot2(r, r)
        })
        .sum()
}

pub fn centroid(points: &[Vec2]) -> Vec2 {
    let n = points.len().max(1) as f64;
    let s = points
        .iter()
        .fold([0.0, 0.0], |acc, p| [acc[0] + p[0], acc[1] + p[1]]);
    [s[0] / n, s[1] / n]
}

/// Closed-form optimal angle `atan2(Σ q̃ × p̃, Σ q̃ · p̃)`; used as a cross
/// check of the SVD path.
pub fn optimal_angle(src: &[Vec2], dst: &[Vec2]) -> f64 {
    let qc = centroid(src);
    let pc = centroid(dst);
    let (mut c, mut d) = (0.0, 0.0);
    for (q, p) in src.iter().zip(dst) {
        let q = sub2(*q, qc);
        let p = sub2(*p, pc);
        c += cross2(q, p);
        d += dot2(q, p);
    }
    c.atan2(d)
}

fn det2(m: [[f64; 2]; 2]) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

fn transpose(m: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    [[m[0][0], m[1][0]], [m[0][1], m[1][1]]]
}

fn matmul(a: [[f64; 2]; 2], b: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}
