//! Island curation: split artist-unwrapped meshes into UV islands, flag
//! overlapping and fragmentary ones, and keep islands whose silhouette is
//! moderately dissimilar from an automatic re-unwrap.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use petgraph::unionfind::UnionFind;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::atlas::{intersecting_faces, orient_island};
use crate::error::{Error, Result};
use crate::losses::{rasterize_silhouette, RasterConfig, SilhouetteImage};
use crate::mesh::boundary_loops;
use crate::mesh::{load_obj, Chart, Mesh};
use crate::param::{default_pins, lscm, normalize_uv, UvChart};

/// Islands with fewer vertices are fragments.
pub const MIN_ISLAND_VERTICES: usize = 5;
/// Inclusive SSIM band of islands kept for training.
pub const SSIM_BAND: (f64, f64) = (0.5, 0.8);

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IslandFlags {
    pub overlapping: bool,
    pub fragment: bool,
    pub selected: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IslandRecord {
    pub id: usize,
    pub source: String,
    /// Island chart with the artist texture coordinates.
    pub uv: UvChart,
    pub vertex_count: usize,
    pub flags: IslandFlags,
    pub ssim: Option<f64>,
    /// Why the island was dropped before scoring, if it was.
    pub excluded: Option<String>,
}

/// Connected components of faces joined across shared UV edges.
///
/// Island vertices are the distinct `(v, vt)` corner pairs, so a 3D vertex
/// on a UV seam appears once per island touching it. Islands are ordered by
/// their smallest face; faces keep source order.
pub fn split_islands(mesh: &Mesh, source: &str) -> Result<Vec<IslandRecord>> {
    let layer = mesh
        .uv
        .as_ref()
        .ok_or_else(|| Error::MissingUv(source.to_string()))?;
    let nf = mesh.face_count();
    let corner = |f: usize, k: usize| (mesh.faces[f][k], layer.faces[f][k]);

    let mut by_edge: BTreeMap<((usize, usize), (usize, usize)), Vec<usize>> = BTreeMap::new();
    for f in 0..nf {
        for k in 0..3 {
            let (a, b) = (corner(f, k), corner(f, (k + 1) % 3));
            let key = if a <= b { (a, b) } else { (b, a) };
            by_edge.entry(key).or_default().push(f);
        }
    }
    let mut uf = UnionFind::<usize>::new(nf);
    for faces in by_edge.values() {
        for w in faces.windows(2) {
            uf.union(w[0], w[1]);
        }
    }
    let labels = uf.into_labeling();
    let mut order: BTreeMap<usize, usize> = BTreeMap::new();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (f, &l) in labels.iter().enumerate() {
        let g = *order.entry(l).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[g].push(f);
    }

    let mut records = Vec::with_capacity(groups.len());
    for (id, faces) in groups.into_iter().enumerate() {
        let mut local: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut source_vertex = Vec::new();
        let mut coords = Vec::new();
        let mut tris = Vec::with_capacity(faces.len());
        for &f in &faces {
            let mut tri = [0; 3];
            for (k, slot) in tri.iter_mut().enumerate() {
                let c = corner(f, k);
                *slot = *local.entry(c).or_insert_with(|| {
                    source_vertex.push(c.0);
                    coords.push(layer.coords[c.1]);
                    source_vertex.len() - 1
                });
            }
            tris.push(tri);
        }
        let island_mesh = Mesh {
            vertices: source_vertex.iter().map(|&v| mesh.vertices[v]).collect(),
            faces: tris,
            uv: None,
        };
        let chart = Chart {
            boundary_loops: boundary_loops(&island_mesh),
            mesh: island_mesh,
            source_vertex,
            source_face: faces,
        };
        let vertex_count = chart.vertex_count();
        records.push(IslandRecord {
            id,
            source: source.to_string(),
            uv: UvChart::new(Arc::new(chart), coords)?,
            vertex_count,
            flags: IslandFlags::default(),
            ssim: None,
            excluded: None,
        });
    }
    Ok(records)
}

/// Sets the overlap, fragment and selection flags from the current state.
pub fn flag_filters(mut record: IslandRecord) -> IslandRecord {
    let tris: Vec<_> = (0..record.uv.chart.face_count())
        .map(|f| record.uv.face_uv(f))
        .collect();
    record.flags.overlapping = intersecting_faces(&tris).iter().any(|&h| h);
    record.flags.fragment = record.vertex_count < MIN_ISLAND_VERTICES;
    record.flags.selected = !record.flags.overlapping
        && !record.flags.fragment
        && record
            .ssim
            .is_some_and(|s| (SSIM_BAND.0..=SSIM_BAND.1).contains(&s));
    record
}

const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_C1: f64 = 0.01 * 0.01;
const SSIM_C2: f64 = 0.03 * 0.03;

fn gaussian_window() -> [[f64; SSIM_WINDOW]; SSIM_WINDOW] {
    let c = (SSIM_WINDOW / 2) as f64;
    let g: Vec<f64> = (0..SSIM_WINDOW)
        .map(|i| (-((i as f64 - c).powi(2)) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp())
        .collect();
    let total: f64 = g.iter().sum();
    let mut w = [[0.0; SSIM_WINDOW]; SSIM_WINDOW];
    for (i, row) in w.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            *x = g[i] * g[j] / (total * total);
        }
    }
    w
}

/// Mean structural similarity over all fully contained 11×11 Gaussian
/// windows (σ = 1.5, unit dynamic range).
pub fn ssim_score(a: &SilhouetteImage, b: &SilhouetteImage) -> Result<f64> {
    if a.resolution != b.resolution {
        return Err(Error::ResolutionMismatch(a.resolution, b.resolution));
    }
    let n = a.resolution;
    if n < 16 {
        return Err(Error::InvalidArgument(format!(
            "ssim needs resolution ≥ 16, got {n}"
        )));
    }
    let w = gaussian_window();
    let span = n - SSIM_WINDOW + 1;
    let mut total = 0.0;
    for y in 0..span {
        for x in 0..span {
            let (mut ma, mut mb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for (dy, row) in w.iter().enumerate() {
                for (dx, &wt) in row.iter().enumerate() {
                    let k = (y + dy) * n + x + dx;
                    let (pa, pb) = (a.coverage[k], b.coverage[k]);
                    ma += wt * pa;
                    mb += wt * pb;
                    saa += wt * pa * pa;
                    sbb += wt * pb * pb;
                    sab += wt * pa * pb;
                }
            }
            let va = saa - ma * ma;
            let vb = sbb - mb * mb;
            let cov = sab - ma * mb;
            total += ((2.0 * ma * mb + SSIM_C1) * (2.0 * cov + SSIM_C2))
                / ((ma * ma + mb * mb + SSIM_C1) * (va + vb + SSIM_C2));
        }
    }
    Ok(total / (span * span) as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CurateConfig {
    pub raster: RasterConfig,
}

impl Default for CurateConfig {
    fn default() -> Self {
        CurateConfig {
            raster: RasterConfig {
                resolution: 256,
                sharpness: 30.0,
            },
        }
    }
}

fn silhouette_of(uv: &UvChart, raster: &RasterConfig) -> Result<SilhouetteImage> {
    let oriented = normalize_uv(&orient_island(uv)?)?;
    rasterize_silhouette(&oriented, raster)
}

fn score_island(record: &IslandRecord, config: &CurateConfig) -> Result<f64> {
    let chart = &record.uv.chart;
    chart.require_disk()?;
    let (a, b) = default_pins(chart)?;
    let reunwrap = lscm(Arc::clone(chart), a, b)?;
    let artist = silhouette_of(&record.uv, &config.raster)?;
    let auto = silhouette_of(&reunwrap, &config.raster)?;
    ssim_score(&artist, &auto)
}

/// Scores every unflagged island against its automatic re-unwrap and sets
/// the selection flag. Islands that cannot be re-unwrapped are excluded
/// with the reason recorded. Output order follows `(source, id)`.
pub fn curate(records: Vec<IslandRecord>, config: &CurateConfig) -> Vec<IslandRecord> {
    let mut out: Vec<IslandRecord> = records
        .into_par_iter()
        .map(|r| {
            let mut r = flag_filters(r);
            if r.flags.overlapping || r.flags.fragment {
                return r;
            }
            match score_island(&r, config) {
                Ok(s) => r.ssim = Some(s),
                Err(e) => {
                    log::info!("island {}#{} excluded: {e}", r.source, r.id);
                    r.excluded = Some(e.to_string());
                }
            }
            flag_filters(r)
        })
        .collect();
    out.sort_by(|a, b| a.source.cmp(&b.source).then(a.id.cmp(&b.id)));
    out
}

/// One manifest line per island.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub source: String,
    pub island: usize,
    pub vertices: usize,
    pub faces: Vec<usize>,
    pub overlapping: bool,
    pub fragment: bool,
    pub selected: bool,
    pub ssim: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub excluded: Option<String>,
}

impl From<&IslandRecord> for ManifestEntry {
    fn from(r: &IslandRecord) -> Self {
        ManifestEntry {
            source: r.source.clone(),
            island: r.id,
            vertices: r.vertex_count,
            faces: r.uv.chart.source_face.clone(),
            overlapping: r.flags.overlapping,
            fragment: r.flags.fragment,
            selected: r.flags.selected,
            ssim: r.ssim,
            excluded: r.excluded.clone(),
        }
    }
}

pub fn write_manifest<W: Write>(records: &[IslandRecord], mut out: W) -> Result<()> {
    for r in records {
        let line = serde_json::to_string(&ManifestEntry::from(r))?;
        writeln!(out, "{line}").map_err(|e| Error::io("manifest", e))?;
    }
    Ok(())
}

/// `*.obj` files directly inside `dir`, sorted by name.
pub fn list_obj_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path
            .extension()
            .is_some_and(|x| x.eq_ignore_ascii_case("obj"))
        {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

/// Split every OBJ in `dir` into island records. Meshes that fail to load
/// or lack texture coordinates are skipped with a warning.
pub fn load_islands(dir: &Path) -> Result<Vec<IslandRecord>> {
    let mut records = Vec::new();
    for path in list_obj_files(dir)? {
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        match load_obj(&path).and_then(|m| split_islands(&m, &name)) {
            Ok(r) => records.extend(r),
            Err(e) => log::warn!("skipping {}: {e}", path.display()),
        }
    }
    Ok(records)
}

/// Total UV edges shared by exactly one face; a cheap sanity statistic.
pub fn uv_boundary_edges(record: &IslandRecord) -> usize {
    record
        .uv
        .chart
        .mesh
        .edge_faces()
        .values()
        .filter(|f| f.len() == 1)
        .count()
}
