use std::sync::Arc;

use super::{FaceOperators, UvChart};
use crate::error::{Error, Result};
use crate::mesh::Chart;
use crate::sparse::SymmetricBuilder;

/// Free-boundary least-squares conformal map with `pin_a` at (0,0) and
/// `pin_b` at (1,0).
///
/// Each face contributes the two Cauchy–Riemann residuals
/// `√A (u_x − v_y)` and `√A (u_y + v_x)`; the pinned least-squares problem is
/// solved through its normal equations.
pub fn lscm(chart: Arc<Chart>, pin_a: usize, pin_b: usize) -> Result<UvChart> {
    let n = chart.vertex_count();
    if pin_a == pin_b {
        return Err(Error::CoincidentPins);
    }
    if pin_a >= n || pin_b >= n {
        return Err(Error::InvalidArgument(format!(
            "pin index out of range for {n} vertices"
        )));
    }
    let ops = FaceOperators::new(&chart)?;

    // unknown layout: u_i -> i, v_i -> n + i
    let mut fixed_value = vec![None; 2 * n];
    fixed_value[pin_a] = Some(0.0);
    fixed_value[n + pin_a] = Some(0.0);
    fixed_value[pin_b] = Some(1.0);
    fixed_value[n + pin_b] = Some(0.0);
    let mut free_index = vec![usize::MAX; 2 * n];
    let mut free_count = 0;
    for (var, fixed) in fixed_value.iter().enumerate() {
        if fixed.is_none() {
            free_index[var] = free_count;
            free_count += 1;
        }
    }

    let mut normal = SymmetricBuilder::new(free_count);
    let mut rhs = vec![0.0; free_count];
    let mut row: Vec<(usize, f64)> = Vec::with_capacity(6);
    for (f, tri) in chart.mesh.faces.iter().enumerate() {
        let w = ops.area[f].sqrt();
        let g = ops.grad[f];
        for residual in 0..2 {
            row.clear();
            for k in 0..3 {
                let (cu, cv) = if residual == 0 {
                    (g[k][0], -g[k][1])
                } else {
                    (g[k][1], g[k][0])
                };
                row.push((tri[k], w * cu));
                row.push((n + tri[k], w * cv));
            }
            let mut constant = 0.0;
            for &(var, c) in &row {
                if let Some(val) = fixed_value[var] {
                    constant += c * val;
                }
            }
            for &(vi, ci) in &row {
                let Some(i) = free_index.get(vi).copied().filter(|&i| i != usize::MAX) else {
                    continue;
                };
                rhs[i] -= ci * constant;
                for &(vj, cj) in &row {
                    let j = free_index[vj];
                    if j != usize::MAX && j <= i {
                        normal.add(i, j, ci * cj);
                    }
                }
            }
        }
    }

    let chol = normal.factor().map_err(|e| match e {
        Error::Singular(msg) => Error::Singular(format!("LSCM system rank deficient: {msg}")),
        other => other,
    })?;
    let x = chol.solve(&rhs);
    let uv = (0..n)
        .map(|v| {
            let get = |var: usize| fixed_value[var].unwrap_or_else(|| x[free_index[var]]);
            [get(v), get(n + v)]
        })
        .collect();
    UvChart::new(chart, uv)
}
