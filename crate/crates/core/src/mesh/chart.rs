use std::collections::{BTreeMap, BTreeSet};

use petgraph::unionfind::UnionFind;
use serde::{Deserialize, Serialize};

use super::{edge_key, Mesh};
use crate::error::{Error, Result};
use crate::seams::SeamSet;

/// A connected surface patch cut out of a source mesh.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Chart {
    pub mesh: Mesh,
    /// Source mesh vertex for every chart vertex.
    pub source_vertex: Vec<usize>,
    /// Source mesh face for every chart face.
    pub source_face: Vec<usize>,
    /// Ordered boundary cycles, each following the face winding.
    pub boundary_loops: Vec<Vec<usize>>,
}

impl Chart {
    /// Wraps a whole mesh as a single chart with identity provenance.
    pub fn from_mesh(mesh: Mesh) -> Result<Self> {
        if mesh.face_count() == 0 {
            return Err(Error::EmptyChart);
        }
        if mesh.face_components() != 1 {
            return Err(Error::InvalidArgument(
                "chart must be a single connected component".into(),
            ));
        }
        let boundary_loops = boundary_loops(&mesh);
        if boundary_loops.is_empty() {
            return Err(Error::ClosedChart(0));
        }
        Ok(Chart {
            source_vertex: (0..mesh.vertex_count()).collect(),
            source_face: (0..mesh.face_count()).collect(),
            boundary_loops,
            mesh,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.mesh.vertex_count()
    }

    pub fn face_count(&self) -> usize {
        self.mesh.face_count()
    }

    pub fn boundary_vertex_set(&self) -> BTreeSet<usize> {
        self.boundary_loops.iter().flatten().copied().collect()
    }

    pub fn euler_characteristic(&self) -> i64 {
        let e = self.mesh.edge_faces().len() as i64;
        self.vertex_count() as i64 - e + self.face_count() as i64
    }

    /// One boundary loop and Euler characteristic 1.
    pub fn is_disk(&self) -> bool {
        self.boundary_loops.len() == 1 && self.euler_characteristic() == 1
    }

    pub fn require_disk(&self) -> Result<()> {
        if self.is_disk() {
            Ok(())
        } else {
            Err(Error::NotDisk(format!(
                "{} boundary loops, Euler characteristic {}",
                self.boundary_loops.len(),
                self.euler_characteristic()
            )))
        }
    }
}

/// Boundary cycles traced along boundary half-edges in face winding order.
pub(crate) fn boundary_loops(mesh: &Mesh) -> Vec<Vec<usize>> {
    let edge_faces = mesh.edge_faces();
    let mut next: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for f in &mesh.faces {
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            if edge_faces[&edge_key(a, b)].len() == 1 {
                next.entry(a).or_default().push(b);
            }
        }
    }
    let mut loops = Vec::new();
    while let Some((&start, _)) = next.iter().find(|(_, outs)| !outs.is_empty()) {
        let mut cycle = vec![start];
        let mut cur = start;
        loop {
            let Some(nxt) = next.get_mut(&cur).and_then(Vec::pop) else {
                break;
            };
            if nxt == start {
                break;
            }
            cycle.push(nxt);
            cur = nxt;
        }
        loops.push(cycle);
    }
    loops
}

/// Cuts `mesh` open along `seams` and returns its connected pieces.
///
/// Vertices are duplicated per wedge: corners around a vertex stay merged only
/// across uncut interior edges. Charts are ordered by their smallest source
/// face, faces within a chart keep source order.
pub fn cut_along_seams(mesh: &Mesh, seams: &SeamSet) -> Result<Vec<Chart>> {
    let edge_faces = mesh.edge_faces();
    for (a, b) in seams.segments() {
        if !edge_faces.contains_key(&(a, b)) {
            return Err(Error::SeamNotOnMesh(a, b));
        }
    }

    let nf = mesh.face_count();
    let corner = |f: usize, v: usize| -> usize {
        let k = mesh.faces[f]
            .iter()
            .position(|&x| x == v)
            .expect("vertex belongs to face");
        3 * f + k
    };

    let mut corners = UnionFind::<usize>::new(3 * nf);
    let mut faces_uf = UnionFind::<usize>::new(nf);
    for (&(a, b), fs) in &edge_faces {
        if fs.len() != 2 || seams.contains(a, b) {
            continue;
        }
        let (f1, f2) = (fs[0], fs[1]);
        faces_uf.union(f1, f2);
        corners.union(corner(f1, a), corner(f2, a));
        corners.union(corner(f1, b), corner(f2, b));
    }

    let face_label = faces_uf.into_labeling();
    let corner_label = corners.into_labeling();

    let mut chart_of_label: BTreeMap<usize, usize> = BTreeMap::new();
    let mut chart_faces: Vec<Vec<usize>> = Vec::new();
    for (f, &label) in face_label.iter().enumerate() {
        let idx = *chart_of_label.entry(label).or_insert_with(|| {
            chart_faces.push(Vec::new());
            chart_faces.len() - 1
        });
        chart_faces[idx].push(f);
    }

    let mut charts = Vec::with_capacity(chart_faces.len());
    for (ci, faces) in chart_faces.into_iter().enumerate() {
        if faces.is_empty() {
            return Err(Error::EmptyChart);
        }
        let mut local_of_wedge: BTreeMap<usize, usize> = BTreeMap::new();
        let mut source_vertex = Vec::new();
        let mut local_faces = Vec::with_capacity(faces.len());
        for &f in &faces {
            let mut tri = [0usize; 3];
            for k in 0..3 {
                let wedge = corner_label[3 * f + k];
                tri[k] = *local_of_wedge.entry(wedge).or_insert_with(|| {
                    source_vertex.push(mesh.faces[f][k]);
                    source_vertex.len() - 1
                });
            }
            local_faces.push(tri);
        }
        let vertices = source_vertex.iter().map(|&v| mesh.vertices[v]).collect();
        let uv = mesh.uv.as_ref().map(|layer| super::UvLayer {
            coords: layer.coords.clone(),
            faces: faces.iter().map(|&f| layer.faces[f]).collect(),
        });
        let local = Mesh {
            vertices,
            faces: local_faces,
            uv,
        };
        let loops = boundary_loops(&local);
        if loops.is_empty() {
            return Err(Error::ClosedChart(ci));
        }
        charts.push(Chart {
            mesh: local,
            source_vertex,
            source_face: faces,
            boundary_loops: loops,
        });
    }
    Ok(charts)
}
