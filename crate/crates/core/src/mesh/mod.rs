//! Indexed triangle meshes, OBJ I/O, per-vertex attributes and seam cutting.

mod attributes;
mod chart;
mod obj;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{triangle_area3, Vec2, Vec3};

pub use attributes::{compute_attributes, VertexAttributes};
pub use chart::{cut_along_seams, Chart};
pub(crate) use chart::boundary_loops;
pub use obj::{load_obj, parse_obj, write_obj, write_obj_file};

pub type Face = [usize; 3];

/// Undirected edge key with the smaller index first.
#[inline]
pub fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Per-corner texture coordinates as read from `vt` / `f v/vt` records.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UvLayer {
    pub coords: Vec<Vec2>,
    pub faces: Vec<Face>,
}

/// Indexed triangle mesh.
///
/// Constructed through [`Mesh::new`], which rejects out-of-range or repeated
/// indices and non-manifold edges, and drops unreferenced vertices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mesh {
    pub vertices: Vec<Vec3>,
    pub faces: Vec<Face>,
    pub uv: Option<UvLayer>,
}

impl Mesh {
    pub fn new(vertices: Vec<Vec3>, faces: Vec<Face>) -> Result<Self> {
        Self::with_uv(vertices, faces, None)
    }

    pub fn with_uv(vertices: Vec<Vec3>, faces: Vec<Face>, uv: Option<UvLayer>) -> Result<Self> {
        let n = vertices.len();
        for (fi, f) in faces.iter().enumerate() {
            for &i in f {
                if i >= n {
                    return Err(Error::IndexOutOfRange {
                        face: fi,
                        index: i,
                        count: n,
                    });
                }
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::DegenerateFace(fi));
            }
        }
        if let Some(layer) = &uv {
            if layer.faces.len() != faces.len() {
                return Err(Error::LengthMismatch(layer.faces.len(), faces.len()));
            }
            for (fi, f) in layer.faces.iter().enumerate() {
                if let Some(&i) = f.iter().find(|&&i| i >= layer.coords.len()) {
                    return Err(Error::IndexOutOfRange {
                        face: fi,
                        index: i,
                        count: layer.coords.len(),
                    });
                }
            }
        }
        let mut mesh = Mesh {
            vertices,
            faces,
            uv,
        };
        mesh.check_manifold()?;
        mesh.drop_unreferenced();
        Ok(mesh)
    }

    fn check_manifold(&self) -> Result<()> {
        for ((a, b), fs) in self.edge_faces() {
            if fs.len() > 2 {
                return Err(Error::NonManifoldEdge {
                    a,
                    b,
                    count: fs.len(),
                });
            }
        }
        Ok(())
    }

    fn drop_unreferenced(&mut self) {
        let mut used = vec![false; self.vertices.len()];
        for f in &self.faces {
            for &i in f {
                used[i] = true;
            }
        }
        if used.iter().all(|&u| u) {
            return;
        }
        // compaction keeps the original relative order
        let mut remap = vec![usize::MAX; self.vertices.len()];
        let mut next = 0;
        for (i, &u) in used.iter().enumerate() {
            if u {
                remap[i] = next;
                next += 1;
            }
        }
        let mut vertices = vec![[0.0; 3]; next];
        for (old, &new) in remap.iter().enumerate() {
            if new != usize::MAX {
                vertices[new] = self.vertices[old];
            }
        }
        self.vertices = vertices;
        for f in &mut self.faces {
            for i in f.iter_mut() {
                *i = remap[*i];
            }
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    /// Incident faces of every undirected edge, in ascending face order.
    pub fn edge_faces(&self) -> BTreeMap<(usize, usize), Vec<usize>> {
        let mut map: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        for (fi, f) in self.faces.iter().enumerate() {
            for k in 0..3 {
                map.entry(edge_key(f[k], f[(k + 1) % 3]))
                    .or_default()
                    .push(fi);
            }
        }
        map
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.edge_faces().into_keys().collect()
    }

    /// Sorted neighbor lists of the edge graph.
    pub fn vertex_neighbors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for (a, b) in self.edges() {
            adj[a].push(b);
            adj[b].push(a);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    /// Vertices incident to at least one edge used by a single face.
    pub fn boundary_vertices(&self) -> Vec<bool> {
        let mut on_boundary = vec![false; self.vertices.len()];
        for ((a, b), fs) in self.edge_faces() {
            if fs.len() == 1 {
                on_boundary[a] = true;
                on_boundary[b] = true;
            }
        }
        on_boundary
    }

    pub fn face_positions(&self, f: usize) -> [Vec3; 3] {
        let [a, b, c] = self.faces[f];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn face_area(&self, f: usize) -> f64 {
        let [a, b, c] = self.face_positions(f);
        triangle_area3(a, b, c)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.faces.len()).map(|f| self.face_area(f)).sum()
    }

    /// Connected components of the face graph (faces sharing an edge).
    pub fn face_components(&self) -> usize {
        let mut uf = petgraph::unionfind::UnionFind::<usize>::new(self.faces.len());
        for fs in self.edge_faces().values() {
            if fs.len() == 2 {
                uf.union(fs[0], fs[1]);
            }
        }
        let mut labels = uf.into_labeling();
        labels.sort_unstable();
        labels.dedup();
        labels.len()
    }

    /// Same mesh with vertex `i` renamed to `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Mesh {
        let mut vertices = vec![[0.0; 3]; self.vertices.len()];
        for (i, &p) in perm.iter().enumerate() {
            vertices[p] = self.vertices[i];
        }
        let faces = self
            .faces
            .iter()
            .map(|f| [perm[f[0]], perm[f[1]], perm[f[2]]])
            .collect();
        Mesh {
            vertices,
            faces,
            uv: self.uv.clone(),
        }
    }
}
