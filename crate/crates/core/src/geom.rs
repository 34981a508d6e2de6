//! Small fixed-size vector helpers shared by the mesh and UV code.

pub type Vec2 = [f64; 2];
pub type Vec3 = [f64; 3];

#[inline]
pub fn sub3(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn add3(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn scale3(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub fn dot3(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross3(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn norm3(a: Vec3) -> f64 {
    dot3(a, a).sqrt()
}

#[inline]
pub fn dist3(a: Vec3, b: Vec3) -> f64 {
    norm3(sub3(a, b))
}

#[inline]
pub fn sub2(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub fn dot2(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub fn cross2(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

#[inline]
pub fn norm2(a: Vec2) -> f64 {
    dot2(a, a).sqrt()
}

/// Area of a 3D triangle.
pub fn triangle_area3(a: Vec3, b: Vec3, c: Vec3) -> f64 {
    0.5 * norm3(cross3(sub3(b, a), sub3(c, a)))
}

/// Signed area of a 2D triangle, positive for counter-clockwise winding.
#[inline]
pub fn signed_area2(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    0.5 * cross2(sub2(b, a), sub2(c, a))
}

/// Interior angle at `a` of the triangle (a, b, c).
pub fn corner_angle3(a: Vec3, b: Vec3, c: Vec3) -> f64 {
    let u = sub3(b, a);
    let v = sub3(c, a);
    let s = norm3(cross3(u, v));
    let d = dot3(u, v);
    s.atan2(d)
}

/// Isometric 2D copy of a 3D triangle: first vertex at the origin, first edge
/// along +x, third vertex in the upper half plane. `None` when degenerate.
pub fn local_triangle(p: [Vec3; 3]) -> Option<[Vec2; 3]> {
    let e1 = sub3(p[1], p[0]);
    let e2 = sub3(p[2], p[0]);
    let l1 = norm3(e1);
    let n = cross3(e1, e2);
    let nl = norm3(n);
    if l1 == 0.0 || nl == 0.0 || !nl.is_finite() {
        return None;
    }
    let x = scale3(e1, 1.0 / l1);
    let y = cross3(scale3(n, 1.0 / nl), x);
    Some([[0.0, 0.0], [l1, 0.0], [dot3(e2, x), dot3(e2, y)]])
}

/// Per-vertex gradient vectors of the linear interpolant on a
/// counter-clockwise 2D triangle: `∇φ = Σ φ_k g_k`.
pub fn gradient_basis(q: [Vec2; 3]) -> [Vec2; 3] {
    let area2 = cross2(sub2(q[1], q[0]), sub2(q[2], q[0]));
    let mut g = [[0.0; 2]; 3];
    for k in 0..3 {
        let e = sub2(q[(k + 2) % 3], q[(k + 1) % 3]);
        g[k] = [-e[1] / area2, e[0] / area2];
    }
    g
}

/// Axis-aligned bounds of a 2D point set as `(min, max)`.
pub fn bounds2(points: &[Vec2]) -> Option<(Vec2, Vec2)> {
    let first = *points.first()?;
    let mut lo = first;
    let mut hi = first;
    for p in points {
        lo[0] = lo[0].min(p[0]);
        lo[1] = lo[1].min(p[1]);
        hi[0] = hi[0].max(p[0]);
        hi[1] = hi[1].max(p[1]);
    }
    Some((lo, hi))
}

pub fn bounds3(points: &[Vec3]) -> Option<(Vec3, Vec3)> {
    let first = *points.first()?;
    let mut lo = first;
    let mut hi = first;
    for p in points {
        for k in 0..3 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    Some((lo, hi))
}

#[inline]
pub fn rotate2(p: Vec2, angle: f64) -> Vec2 {
    let (s, c) = angle.sin_cos();
    [c * p[0] - s * p[1], s * p[0] + c * p[1]]
}

/// Distance from `p` to the segment `[a, b]` together with the clamped
/// parameter of the closest point.
pub fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> (f64, f64) {
    let ab = sub2(b, a);
    let len2 = dot2(ab, ab);
    let t = if len2 > 0.0 {
        (dot2(sub2(p, a), ab) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let c = [a[0] + t * ab[0], a[1] + t * ab[1]];
    (norm2(sub2(p, c)), t)
}

/// Closed point-in-triangle test, independent of winding.
pub fn point_in_triangle(p: Vec2, a: Vec2, b: Vec2, c: Vec2) -> bool {
    let d1 = cross2(sub2(b, a), sub2(p, a));
    let d2 = cross2(sub2(c, b), sub2(p, b));
    let d3 = cross2(sub2(a, c), sub2(p, c));
    let has_neg = d1 < 0.0 || d2 < 0.0 || d3 < 0.0;
    let has_pos = d1 > 0.0 || d2 > 0.0 || d3 > 0.0;
    !(has_neg && has_pos)
}

/// True when the interiors of two triangles intersect with positive area.
///
/// Separating-axis test over the six edge normals; touching along an edge or
/// at a vertex counts as separated. A triangle with zero area has an empty
/// interior and never overlaps anything.
pub fn triangles_overlap(t1: [Vec2; 3], t2: [Vec2; 3]) -> bool {
    if signed_area2(t1[0], t1[1], t1[2]) == 0.0 || signed_area2(t2[0], t2[1], t2[2]) == 0.0 {
        return false;
    }
    for tri in [&t1, &t2] {
        for k in 0..3 {
            let a = tri[k];
            let b = tri[(k + 1) % 3];
            let axis = [a[1] - b[1], b[0] - a[0]];
            // measured from `a` so vertices shared with the other triangle
            // project to exactly the same values
            let (min1, max1) = project(&t1, a, axis);
            let (min2, max2) = project(&t2, a, axis);
            if max1 <= min2 || max2 <= min1 {
                return false;
            }
        }
    }
    true
}

fn project(tri: &[Vec2; 3], origin: Vec2, axis: Vec2) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for p in tri {
        let d = dot2(sub2(*p, origin), axis);
        lo = lo.min(d);
        hi = hi.max(d);
    }
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shared_edge_is_not_overlap() {
        let a = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let b = [[1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        assert!(!triangles_overlap(a, b));
        let c = [[0.2, 0.2], [2.0, 0.2], [0.2, 2.0]];
        assert!(triangles_overlap(a, c));
        assert!(triangles_overlap(a, a));
        // shared edge between non-representable coordinates
        let p = [0.400000000000001, 0.19999999999999973];
        let q = [0.6000000000000015, -0.20000000000000034];
        assert!(!triangles_overlap([p, q, [1.0, 0.0]], [[0.0, 0.0], q, p]));
    }

    #[test]
    fn gradient_basis_reproduces_linear_field() {
        let q = local_triangle([[0.3, 0.1, 0.2], [1.4, 0.5, -0.2], [0.2, 1.7, 0.9]]).unwrap();
        let g = gradient_basis(q);
        // φ(x, y) = 2x − 3y + 1
        let phi: Vec<f64> = q.iter().map(|p| 2.0 * p[0] - 3.0 * p[1] + 1.0).collect();
        let gx: f64 = (0..3).map(|k| phi[k] * g[k][0]).sum();
        let gy: f64 = (0..3).map(|k| phi[k] * g[k][1]).sum();
        assert!((gx - 2.0).abs() < 1e-12 && (gy + 3.0).abs() < 1e-12);
    }

    #[test]
    fn segment_distance_clamps() {
        let (d, t) = point_segment_distance([2.0, 1.0], [0.0, 0.0], [1.0, 0.0]);
        assert!((d - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(t, 1.0);
    }
}
