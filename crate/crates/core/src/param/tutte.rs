use std::f64::consts::PI;
use std::sync::Arc;

use super::UvChart;
use crate::error::{Error, Result};
use crate::geom::dist3;
use crate::mesh::Chart;
use crate::sparse::SymmetricBuilder;

/// Uniform-weight Tutte embedding with the boundary on the unit circle.
///
/// Boundary vertices are placed counter-clockwise at angles proportional to
/// accumulated 3D boundary length; interior vertices are the average of
/// their neighbors. Bijective for disk charts.
pub fn tutte_embed(chart: Arc<Chart>) -> Result<UvChart> {
    chart.require_disk()?;
    let boundary = &chart.boundary_loops[0];
    if boundary.len() < 3 {
        return Err(Error::NotDisk(format!(
            "boundary has only {} vertices",
            boundary.len()
        )));
    }
    let pos = &chart.mesh.vertices;
    let n = chart.vertex_count();

    let mut lengths = Vec::with_capacity(boundary.len());
    for k in 0..boundary.len() {
        let a = boundary[k];
        let b = boundary[(k + 1) % boundary.len()];
        lengths.push(dist3(pos[a], pos[b]));
    }
    let total: f64 = lengths.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Degenerate("boundary has zero length".into()));
    }

    let mut uv = vec![[0.0; 2]; n];
    let mut fixed = vec![false; n];
    let mut acc = 0.0;
    for (k, &v) in boundary.iter().enumerate() {
        let t = 2.0 * PI * acc / total;
        uv[v] = [t.cos(), t.sin()];
        fixed[v] = true;
        acc += lengths[k];
    }

    let mut index = vec![usize::MAX; n];
    let mut interior = Vec::new();
    for v in 0..n {
        if !fixed[v] {
            index[v] = interior.len();
            interior.push(v);
        }
    }
    if !interior.is_empty() {
        let neighbors = chart.mesh.vertex_neighbors();
        let mut system = SymmetricBuilder::new(interior.len());
        let mut rhs = vec![[0.0; 2]; interior.len()];
        for (row, &v) in interior.iter().enumerate() {
            system.add(row, row, neighbors[v].len() as f64);
            for &w in &neighbors[v] {
                if fixed[w] {
                    rhs[row][0] += uv[w][0];
                    rhs[row][1] += uv[w][1];
                } else if index[w] < row {
                    system.add(row, index[w], -1.0);
                }
            }
        }
        let chol = system.factor()?;
        for axis in 0..2 {
            let b: Vec<f64> = rhs.iter().map(|r| r[axis]).collect();
            let x = chol.solve(&b);
            for (row, &v) in interior.iter().enumerate() {
                uv[v][axis] = x[row];
            }
        }
    }
    UvChart::new(chart, uv)
}
