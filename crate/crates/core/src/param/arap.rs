use super::{FaceOperators, UvChart};
use crate::error::Result;
use crate::sparse::SymmetricBuilder;

/// Local/global as-rigid-as-possible iterations starting from `start`.
///
/// Local step: closest rotation to each face Jacobian. Global step: the
/// area-weighted Poisson system `Σ A_f G_fᵀ G_f u = Σ A_f G_fᵀ r_f` with the
/// first vertex held in place.
pub fn arap_iterations(start: &UvChart, iterations: usize) -> Result<UvChart> {
    let chart = &start.chart;
    let n = chart.vertex_count();
    if iterations == 0 || n < 2 {
        return Ok(start.clone());
    }
    let ops = FaceOperators::new(chart)?;
    let faces = &chart.mesh.faces;
    let anchor = 0usize;

    let free = |v: usize| -> Option<usize> {
        match v.cmp(&anchor) {
            std::cmp::Ordering::Less => Some(v),
            std::cmp::Ordering::Equal => None,
            std::cmp::Ordering::Greater => Some(v - 1),
        }
    };
    let mut system = SymmetricBuilder::new(n - 1);
    for (f, tri) in faces.iter().enumerate() {
        let g = ops.grad[f];
        for a in 0..3 {
            let Some(i) = free(tri[a]) else { continue };
            for b in 0..3 {
                let Some(j) = free(tri[b]) else { continue };
                if j <= i {
                    let w = ops.area[f] * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
                    system.add(i, j, w);
                }
            }
        }
    }
    let chol = system.factor()?;

    let mut uv = start.uv.clone();
    for _ in 0..iterations {
        let mut rhs = vec![[0.0; 2]; n - 1];
        for (f, tri) in faces.iter().enumerate() {
            let g = ops.grad[f];
            let (mut a, mut b, mut c, mut d) = (0.0, 0.0, 0.0, 0.0);
            for k in 0..3 {
                let p = uv[tri[k]];
                a += p[0] * g[k][0];
                b += p[0] * g[k][1];
                c += p[1] * g[k][0];
                d += p[1] * g[k][1];
            }
            // closest rotation to [[a, b], [c, d]]
            let theta = (c - b).atan2(a + d);
            let (s, co) = theta.sin_cos();
            let rot = [[co, -s], [s, co]];
            for k in 0..3 {
                let Some(i) = free(tri[k]) else { continue };
                for axis in 0..2 {
                    let r = rot[axis];
                    rhs[i][axis] += ops.area[f] * (g[k][0] * r[0] + g[k][1] * r[1]);
                }
            }
        }
        // move the anchor's known contribution to the right-hand side
        let fixed = uv[anchor];
        for (f, tri) in faces.iter().enumerate() {
            let g = ops.grad[f];
            let Some(ka) = tri.iter().position(|&v| v == anchor) else { continue };
            for k in 0..3 {
                let Some(i) = free(tri[k]) else { continue };
                let w = ops.area[f] * (g[k][0] * g[ka][0] + g[k][1] * g[ka][1]);
                rhs[i][0] -= w * fixed[0];
                rhs[i][1] -= w * fixed[1];
            }
        }
        for axis in 0..2 {
            let b: Vec<f64> = rhs.iter().map(|r| r[axis]).collect();
            let x = chol.solve(&b);
            for v in 0..n {
                if let Some(i) = free(v) {
                    uv[v][axis] = x[i];
                }
            }
        }
    }
    Ok(start.with_uv(uv))
}
