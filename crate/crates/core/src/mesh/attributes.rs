use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::Mesh;
use crate::geom::{corner_angle3, cross3, norm3, scale3, sub3, Vec3};

/// Per-vertex surface attributes used as network input features.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VertexAttributes {
    /// Area-weighted unit normals.
    pub normals: Vec<Vec3>,
    /// Number of incident undirected edges.
    pub degree: Vec<usize>,
    /// Angle defect: `2π − Σθ` at interior vertices, `π − Σθ` on the boundary.
    pub curvature: Vec<f64>,
}

pub fn compute_attributes(mesh: &Mesh) -> VertexAttributes {
    let n = mesh.vertex_count();
    let mut normal_sum = vec![[0.0; 3]; n];
    let mut angle_sum = vec![0.0; n];

    for f in &mesh.faces {
        let p = [mesh.vertices[f[0]], mesh.vertices[f[1]], mesh.vertices[f[2]]];
        // |cross| is twice the area, so summing it weights by area
        let area_normal = cross3(sub3(p[1], p[0]), sub3(p[2], p[0]));
        for k in 0..3 {
            let v = f[k];
            for c in 0..3 {
                normal_sum[v][c] += area_normal[c];
            }
            angle_sum[v] += corner_angle3(p[k], p[(k + 1) % 3], p[(k + 2) % 3]);
        }
    }

    let normals = normal_sum
        .into_iter()
        .map(|s| {
            let len = norm3(s);
            if len > 0.0 && len.is_finite() {
                scale3(s, 1.0 / len)
            } else {
                // every incident face is degenerate
                [0.0, 0.0, 1.0]
            }
        })
        .collect();

    let degree = mesh.vertex_neighbors().iter().map(Vec::len).collect();
    let boundary = mesh.boundary_vertices();
    let curvature = angle_sum
        .iter()
        .zip(&boundary)
        .map(|(&sum, &on_boundary)| if on_boundary { PI - sum } else { 2.0 * PI - sum })
        .collect();

    VertexAttributes {
        normals,
        degree,
        curvature,
    }
}
