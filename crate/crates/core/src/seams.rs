//! Seam sets, polyline snapping and the quantized six-token seam encoding.
//!
//! A seam segment is an undirected mesh edge. The token form writes each
//! segment as the quantized `(x, y, z)` of both endpoints, so six consecutive
//! tokens describe one segment. Sequence start/end markers are carried as
//! framing flags rather than reserved token values, which keeps the whole
//! `[0, 2^bits − 1]` range available for coordinates.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeSet, BinaryHeap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{bounds3, dist3, Vec3};
use crate::mesh::{edge_key, Mesh};

/// Set of seam edges on a mesh, stored as sorted `(lo, hi)` vertex pairs.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SeamSet {
    segments: BTreeSet<(usize, usize)>,
    pub mesh_id: Option<String>,
}

impl SeamSet {
    /// Builds a seam set, checking that every pair is an edge of `mesh`.
    pub fn from_segments(
        mesh: &Mesh,
        segments: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let edges = mesh.edge_faces();
        let mut set = SeamSet::default();
        for (a, b) in segments {
            let key = edge_key(a, b);
            if a == b || !edges.contains_key(&key) {
                return Err(Error::SeamNotOnMesh(a, b));
            }
            set.segments.insert(key);
        }
        Ok(set)
    }

    /// Inserts without validation; [`crate::mesh::cut_along_seams`] checks
    /// membership before cutting.
    pub fn insert(&mut self, a: usize, b: usize) -> bool {
        self.segments.insert(edge_key(a, b))
    }

    pub fn contains(&self, a: usize, b: usize) -> bool {
        self.segments.contains(&edge_key(a, b))
    }

    pub fn segments(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.segments.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    fn extend_path(&mut self, path: &[usize]) {
        for w in path.windows(2) {
            self.insert(w[0], w[1]);
        }
    }
}

/// Nearest vertex by Euclidean distance; ties go to the smaller index.
pub fn nearest_vertex(mesh: &Mesh, p: Vec3) -> Option<usize> {
    let mut best: Option<(f64, usize)> = None;
    for (i, v) in mesh.vertices.iter().enumerate() {
        let d = dist3(*v, p);
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, i));
        }
    }
    best.map(|(_, i)| i)
}

#[derive(PartialEq)]
struct Dist(f64);

impl Eq for Dist {}

impl PartialOrd for Dist {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dist {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Shortest edge path from `src` to `dst` with Euclidean edge weights.
/// Equal-length alternatives resolve toward smaller vertex indices.
pub fn shortest_edge_path(
    mesh: &Mesh,
    neighbors: &[Vec<usize>],
    src: usize,
    dst: usize,
) -> Option<Vec<usize>> {
    let n = mesh.vertex_count();
    let mut dist = vec![f64::INFINITY; n];
    let mut prev = vec![usize::MAX; n];
    let mut heap = BinaryHeap::new();
    dist[src] = 0.0;
    heap.push(Reverse((Dist(0.0), src)));
    while let Some(Reverse((Dist(d), u))) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        if u == dst {
            break;
        }
        for &w in &neighbors[u] {
            let nd = d + dist3(mesh.vertices[u], mesh.vertices[w]);
            if nd < dist[w] {
                dist[w] = nd;
                prev[w] = u;
                heap.push(Reverse((Dist(nd), w)));
            }
        }
    }
    if !dist[dst].is_finite() {
        return None;
    }
    let mut path = vec![dst];
    let mut cur = dst;
    while cur != src {
        cur = prev[cur];
        path.push(cur);
    }
    path.reverse();
    Some(path)
}

fn connect_vertices(mesh: &Mesh, snapped: &[usize], seams: &mut SeamSet) -> Result<()> {
    let neighbors = mesh.vertex_neighbors();
    for w in snapped.windows(2) {
        if w[0] == w[1] {
            continue;
        }
        let path = shortest_edge_path(mesh, &neighbors, w[0], w[1]).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "vertices {} and {} are not connected by mesh edges",
                w[0], w[1]
            ))
        })?;
        seams.extend_path(&path);
    }
    Ok(())
}

/// Projects a 3D polyline onto mesh edges.
pub fn snap_polyline(mesh: &Mesh, polyline: &[Vec3]) -> Result<SeamSet> {
    if polyline.is_empty() {
        return Err(Error::InvalidArgument("empty polyline".into()));
    }
    if mesh.vertex_count() == 0 {
        return Err(Error::InvalidArgument("mesh has no vertices".into()));
    }
    let snapped: Vec<usize> = polyline
        .iter()
        .map(|&p| nearest_vertex(mesh, p).expect("non-empty mesh"))
        .collect();
    let mut seams = SeamSet::default();
    connect_vertices(mesh, &snapped, &mut seams)?;
    Ok(seams)
}

/// Normalization box of a token sequence.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub min: Vec3,
    pub extent: Vec3,
}

impl BBox {
    pub fn of_mesh(mesh: &Mesh) -> Self {
        let (lo, hi) = bounds3(&mesh.vertices).unwrap_or(([0.0; 3], [0.0; 3]));
        BBox {
            min: lo,
            extent: [hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Framing {
    pub sos: bool,
    pub eos: bool,
}

impl Default for Framing {
    fn default() -> Self {
        Framing { sos: true, eos: true }
    }
}

/// Quantized seam tokens; the payload excludes start/end markers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TokenSeq {
    pub bits: u32,
    pub bbox: BBox,
    pub tokens: Vec<u32>,
    #[serde(default)]
    pub framing: Framing,
}

impl TokenSeq {
    pub fn segment_count(&self) -> usize {
        self.tokens.len() / 6
    }

    pub fn validate(&self) -> Result<()> {
        if !(4..=16).contains(&self.bits) {
            return Err(Error::InvalidArgument(format!(
                "bits must be in [4, 16], got {}",
                self.bits
            )));
        }
        if !self.framing.sos || !self.framing.eos {
            return Err(Error::Framing("missing start or end marker".into()));
        }
        if self.tokens.len() % 6 != 0 {
            return Err(Error::Framing(format!(
                "payload length {} is not a multiple of 6",
                self.tokens.len()
            )));
        }
        let max = levels(self.bits);
        if let Some(t) = self.tokens.iter().find(|&&t| t > max) {
            return Err(Error::Framing(format!(
                "token {t} exceeds {max} for {} bits",
                self.bits
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[inline]
fn levels(bits: u32) -> u32 {
    (1u32 << bits) - 1
}

/// Maps a coordinate to its level in `[0, 2^bits − 1]`. A zero-extent axis
/// quantizes to 0.
pub fn quantize(c: f64, min: f64, extent: f64, bits: u32) -> u32 {
    if extent <= 0.0 {
        return 0;
    }
    let max = levels(bits) as f64;
    ((c - min) / extent * max).round().clamp(0.0, max) as u32
}

/// Inverse of [`quantize`], returning the centre of the level's bin.
pub fn dequantize(t: u32, min: f64, extent: f64, bits: u32) -> f64 {
    if extent <= 0.0 {
        return min;
    }
    min + t as f64 / levels(bits) as f64 * extent
}

fn quantize_point(p: Vec3, bbox: &BBox, bits: u32) -> [u32; 3] {
    [0, 1, 2].map(|k| quantize(p[k], bbox.min[k], bbox.extent[k], bits))
}

/// Encodes seams as sorted six-token segments.
///
/// Inside a segment the endpoint with the lexicographically smaller quantized
/// `(x, y, z)` comes first; segments are then sorted by their 6-tuples.
pub fn encode(seams: &SeamSet, mesh: &Mesh, bits: u32) -> Result<TokenSeq> {
    if !(4..=16).contains(&bits) {
        return Err(Error::InvalidArgument(format!(
            "bits must be in [4, 16], got {bits}"
        )));
    }
    let bbox = BBox::of_mesh(mesh);
    let mut rows: Vec<[u32; 6]> = Vec::with_capacity(seams.len());
    for (a, b) in seams.segments() {
        let va = mesh
            .vertices
            .get(a)
            .ok_or(Error::SeamNotOnMesh(a, b))?;
        let vb = mesh
            .vertices
            .get(b)
            .ok_or(Error::SeamNotOnMesh(a, b))?;
        let mut qa = quantize_point(*va, &bbox, bits);
        let mut qb = quantize_point(*vb, &bbox, bits);
        if qb < qa {
            std::mem::swap(&mut qa, &mut qb);
        }
        rows.push([qa[0], qa[1], qa[2], qb[0], qb[1], qb[2]]);
    }
    rows.sort_unstable();
    Ok(TokenSeq {
        bits,
        bbox,
        tokens: rows.into_iter().flatten().collect(),
        framing: Framing::default(),
    })
}

/// Decodes tokens back to mesh edges by nearest-vertex projection and
/// shortest edge paths between the two projected endpoints.
pub fn decode(tokens: &TokenSeq, mesh: &Mesh) -> Result<SeamSet> {
    tokens.validate()?;
    if mesh.vertex_count() == 0 {
        return Err(Error::InvalidArgument("mesh has no vertices".into()));
    }
    let bbox = tokens.bbox;
    let point = |t: &[u32]| -> Vec3 {
        [0, 1, 2].map(|k| dequantize(t[k], bbox.min[k], bbox.extent[k], tokens.bits))
    };
    let neighbors = mesh.vertex_neighbors();
    let mut seams = SeamSet::default();
    for seg in tokens.tokens.chunks_exact(6) {
        let a = nearest_vertex(mesh, point(&seg[..3])).expect("non-empty mesh");
        let b = nearest_vertex(mesh, point(&seg[3..])).expect("non-empty mesh");
        if a == b {
            continue;
        }
        let path = shortest_edge_path(mesh, &neighbors, a, b).ok_or_else(|| {
            Error::InvalidArgument(format!("vertices {a} and {b} are not edge-connected"))
        })?;
        seams.extend_path(&path);
    }
    Ok(seams)
}

/// On-disk seam description: explicit vertex-index segments or raw polylines.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SeamFile {
    Segments { segments: Vec<[usize; 2]> },
    Polylines { polylines: Vec<Vec<Vec3>> },
}

impl SeamFile {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn from_seams(seams: &SeamSet) -> Self {
        SeamFile::Segments {
            segments: seams.segments().map(|(a, b)| [a, b]).collect(),
        }
    }

    pub fn resolve(&self, mesh: &Mesh) -> Result<SeamSet> {
        match self {
            SeamFile::Segments { segments } => {
                SeamSet::from_segments(mesh, segments.iter().map(|s| (s[0], s[1])))
            }
            SeamFile::Polylines { polylines } => {
                let mut seams = SeamSet::default();
                for line in polylines {
                    for seg in snap_polyline(mesh, line)?.segments() {
                        seams.insert(seg.0, seg.1);
                    }
                }
                Ok(seams)
            }
        }
    }
}
