//! Canonical meshes used by tests, examples and the acceptance suite.

use std::f64::consts::PI;

use crate::mesh::{Face, Mesh, UvLayer};
use crate::seams::SeamSet;

fn quads_to_tris(quads: &[[usize; 4]]) -> Vec<Face> {
    quads
        .iter()
        .flat_map(|q| [[q[0], q[1], q[2]], [q[0], q[2], q[3]]])
        .collect()
}

/// Unit cube, vertex index `x + 2y + 4z`, outward counter-clockwise faces.
pub fn cube() -> Mesh {
    let mut vertices = Vec::new();
    for i in 0..8 {
        vertices.push([(i & 1) as f64, ((i >> 1) & 1) as f64, ((i >> 2) & 1) as f64]);
    }
    let quads = [
        [0, 2, 3, 1], // z = 0
        [4, 5, 7, 6], // z = 1
        [0, 1, 5, 4], // y = 0
        [2, 6, 7, 3], // y = 1
        [0, 4, 6, 2], // x = 0
        [1, 3, 7, 5], // x = 1
    ];
    Mesh::new(vertices, quads_to_tris(&quads)).expect("valid cube")
}

/// Cube whose face diagonals avoid corners 0 and 7, so those two corners are
/// three edges apart in the edge graph.
pub fn cube_alternating() -> Mesh {
    let vertices = cube().vertices;
    let quads = [
        [2, 3, 1, 0],
        [5, 7, 6, 4],
        [1, 5, 4, 0],
        [6, 7, 3, 2],
        [4, 6, 2, 0],
        [3, 7, 5, 1],
    ];
    Mesh::new(vertices, quads_to_tris(&quads)).expect("valid cube")
}

/// Seven cut edges whose complement folds the cube into a Latin cross.
pub fn cube_cross_seams() -> SeamSet {
    let cube = cube();
    SeamSet::from_segments(
        &cube,
        [(6, 7), (4, 6), (5, 7), (0, 2), (1, 3), (2, 6), (3, 7)],
    )
    .expect("cross seams lie on cube edges")
}

pub fn octahedron() -> Mesh {
    let vertices = vec![
        [1.0, 0.0, 0.0],
        [-1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, -1.0, 0.0],
        [0.0, 0.0, 1.0],
        [0.0, 0.0, -1.0],
    ];
    let faces = vec![
        [0, 2, 4],
        [2, 1, 4],
        [1, 3, 4],
        [3, 0, 4],
        [2, 0, 5],
        [1, 2, 5],
        [3, 1, 5],
        [0, 3, 5],
    ];
    Mesh::new(vertices, faces).expect("valid octahedron")
}

/// Spanning tree of the octahedron edge graph: a star around the north pole
/// plus one edge to the south pole.
pub fn octahedron_tree_seams() -> SeamSet {
    SeamSet::from_segments(&octahedron(), [(0, 4), (1, 4), (2, 4), (3, 4), (0, 5)])
        .expect("tree lies on octahedron edges")
}

pub fn icosahedron() -> Mesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let vertices = vec![
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ];
    let faces = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    Mesh::new(vertices, faces).expect("valid icosahedron")
}

/// Planar `nx × ny` vertex grid spanning `[0, extent]²` in the z = 0 plane.
/// Vertex index is `j * nx + i`; every cell is split along its rising diagonal.
pub fn grid(nx: usize, ny: usize, extent: f64) -> Mesh {
    let (vertices, faces) = grid_parts(nx, ny, extent);
    Mesh::new(vertices, faces).expect("valid grid")
}

pub(crate) fn grid_parts(nx: usize, ny: usize, extent: f64) -> (Vec<[f64; 3]>, Vec<Face>) {
    assert!(nx >= 2 && ny >= 2);
    let mut vertices = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            vertices.push([
                extent * i as f64 / (nx - 1) as f64,
                extent * j as f64 / (ny - 1) as f64,
                0.0,
            ]);
        }
    }
    let mut faces = Vec::with_capacity(2 * (nx - 1) * (ny - 1));
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let a = j * nx + i;
            let b = a + 1;
            let c = a + nx + 1;
            let d = a + nx;
            faces.push([a, b, c]);
            faces.push([a, c, d]);
        }
    }
    (vertices, faces)
}

/// Grid UVs matching [`grid`] vertex order, spanning `[0,1]²`.
pub fn grid_uv(nx: usize, ny: usize) -> Vec<[f64; 2]> {
    let mut uv = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            uv.push([i as f64 / (nx - 1) as f64, j as f64 / (ny - 1) as f64]);
        }
    }
    uv
}

/// Open tube of radius 1 and height `height` with `segments` around and
/// `rings` faces along the axis; both rims are boundary loops.
pub fn tube(segments: usize, rings: usize, height: f64) -> Mesh {
    let mut vertices = Vec::new();
    for r in 0..=rings {
        let z = height * r as f64 / rings as f64;
        for s in 0..segments {
            let a = 2.0 * PI * s as f64 / segments as f64;
            vertices.push([a.cos(), a.sin(), z]);
        }
    }
    let mut quads = Vec::new();
    for r in 0..rings {
        for s in 0..segments {
            let a = r * segments + s;
            let b = r * segments + (s + 1) % segments;
            quads.push([a, b, b + segments, a + segments]);
        }
    }
    Mesh::new(vertices, quads_to_tris(&quads)).expect("valid tube")
}

/// Generatrix at angle 0 of [`tube`], running rim to rim.
pub fn tube_generatrix_seams(segments: usize, rings: usize) -> SeamSet {
    let mut seams = SeamSet::default();
    for r in 0..rings {
        seams.insert(r * segments, (r + 1) * segments);
    }
    seams
}

/// The tube already cut open: `(segments + 1) × (rings + 1)` vertices.
pub fn open_cylinder(segments: usize, rings: usize, height: f64) -> Mesh {
    let cols = segments + 1;
    let mut vertices = Vec::new();
    for r in 0..=rings {
        let z = height * r as f64 / rings as f64;
        for s in 0..cols {
            let a = 2.0 * PI * s as f64 / segments as f64;
            vertices.push([a.cos(), a.sin(), z]);
        }
    }
    let mut quads = Vec::new();
    for r in 0..rings {
        for s in 0..segments {
            let a = r * cols + s;
            quads.push([a, a + 1, a + 1 + cols, a + cols]);
        }
    }
    Mesh::new(vertices, quads_to_tris(&quads)).expect("valid open cylinder")
}

/// Closed latitude/longitude sphere with poles.
pub fn uv_sphere(segments: usize, stacks: usize) -> Mesh {
    let mut vertices = vec![[0.0, 0.0, 1.0]];
    for st in 1..stacks {
        let phi = PI * st as f64 / stacks as f64;
        for s in 0..segments {
            let th = 2.0 * PI * s as f64 / segments as f64;
            vertices.push([phi.sin() * th.cos(), phi.sin() * th.sin(), phi.cos()]);
        }
    }
    vertices.push([0.0, 0.0, -1.0]);
    let south = vertices.len() - 1;
    let ring = |st: usize, s: usize| 1 + (st - 1) * segments + s % segments;
    let mut faces = Vec::new();
    for s in 0..segments {
        faces.push([0, ring(1, s), ring(1, s + 1)]);
    }
    for st in 1..stacks - 1 {
        for s in 0..segments {
            let a = ring(st, s);
            let b = ring(st + 1, s);
            let c = ring(st + 1, s + 1);
            let d = ring(st, s + 1);
            faces.push([a, b, c]);
            faces.push([a, c, d]);
        }
    }
    for s in 0..segments {
        faces.push([south, ring(stacks - 1, s + 1), ring(stacks - 1, s)]);
    }
    Mesh::new(vertices, faces).expect("valid sphere")
}

/// Upper hemisphere (z ≥ 0) of a unit sphere, open along the equator.
pub fn hemisphere(segments: usize, stacks: usize) -> Mesh {
    let mut vertices = vec![[0.0, 0.0, 1.0]];
    for st in 1..=stacks {
        let phi = 0.5 * PI * st as f64 / stacks as f64;
        for s in 0..segments {
            let th = 2.0 * PI * s as f64 / segments as f64;
            vertices.push([phi.sin() * th.cos(), phi.sin() * th.sin(), phi.cos()]);
        }
    }
    let ring = |st: usize, s: usize| 1 + (st - 1) * segments + s % segments;
    let mut faces = Vec::new();
    for s in 0..segments {
        faces.push([0, ring(1, s), ring(1, s + 1)]);
    }
    for st in 1..stacks {
        for s in 0..segments {
            let a = ring(st, s);
            let b = ring(st + 1, s);
            let c = ring(st + 1, s + 1);
            let d = ring(st, s + 1);
            faces.push([a, b, c]);
            faces.push([a, c, d]);
        }
    }
    Mesh::new(vertices, faces).expect("valid hemisphere")
}

/// Regular planar hexagon fan: centre vertex 0 and six rim vertices.
pub fn hexagon_fan() -> Mesh {
    let mut vertices = vec![[0.0, 0.0, 0.0]];
    for k in 0..6 {
        let a = PI / 3.0 * k as f64;
        vertices.push([a.cos(), a.sin(), 0.0]);
    }
    let faces = (0..6).map(|k| [0, 1 + k, 1 + (k + 1) % 6]).collect();
    Mesh::new(vertices, faces).expect("valid hexagon")
}

/// Cube carrying a UV layout with one island per side: each pair of
/// triangles gets its own unit cell in a 3×2 arrangement scaled into [0,1]².
pub fn cube_with_side_islands() -> Mesh {
    let mut cube = cube();
    let mut coords = Vec::new();
    let mut faces = Vec::new();
    for side in 0..6 {
        let (cx, cy) = ((side % 3) as f64, (side / 3) as f64);
        let base = coords.len();
        let cell = |u: f64, v: f64| [(cx + 0.1 + 0.8 * u) / 3.0, (cy + 0.1 + 0.8 * v) / 3.0];
        coords.extend([cell(0.0, 0.0), cell(1.0, 0.0), cell(1.0, 1.0), cell(0.0, 1.0)]);
        faces.push([base, base + 1, base + 2]);
        faces.push([base, base + 2, base + 3]);
    }
    cube.uv = Some(UvLayer { coords, faces });
    cube
}

/// Cube whose twelve triangles each own a separate UV cell (4×3 layout).
pub fn cube_with_triangle_islands() -> Mesh {
    let mut cube = cube();
    let mut coords = Vec::new();
    let mut faces = Vec::new();
    for f in 0..12 {
        let (cx, cy) = ((f % 4) as f64, (f / 4) as f64);
        let base = coords.len();
        let cell = |u: f64, v: f64| [(cx + 0.1 + 0.8 * u) / 4.0, (cy + 0.1 + 0.8 * v) / 4.0];
        coords.extend([cell(0.0, 0.0), cell(1.0, 0.0), cell(0.0, 1.0)]);
        faces.push([base, base + 1, base + 2]);
    }
    cube.uv = Some(UvLayer { coords, faces });
    cube
}
