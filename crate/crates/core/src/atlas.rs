//! Island orientation, shelf packing into the unit square, and the atlas
//! quality report.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{bounds2, cross2, signed_area2, sub2, triangles_overlap, Vec2};
use crate::losses::DistortionSums;
use crate::mesh::{Mesh, UvLayer};
use crate::param::UvChart;

/// Default packing margin: four texels of a 1024² texture.
pub const DEFAULT_MARGIN: f64 = 4.0 / 1024.0;

const SCALE_SEARCH_STEPS: usize = 32;

/// Convex hull in counter-clockwise order (monotone chain), collinear points
/// dropped.
pub fn convex_hull(points: &[Vec2]) -> Vec<Vec2> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<Vec2> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Vec2>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2 {
                let a = hull[hull.len() - 2];
                let b = hull[hull.len() - 1];
                if cross2(sub2(b, a), sub2(p, a)) <= 0.0 {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

fn rotated_bbox_area(points: &[Vec2], angle: f64) -> f64 {
    let (s, c) = angle.sin_cos();
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in points {
        let x = c * p[0] - s * p[1];
        let y = s * p[0] + c * p[1];
        lo = [lo[0].min(x), lo[1].min(y)];
        hi = [hi[0].max(x), hi[1].max(y)];
    }
    (hi[0] - lo[0]) * (hi[1] - lo[1])
}

/// Rotation angle minimizing the axis-aligned bounding-box area, chosen
/// among the hull edge directions and folded into `(−π/4, π/4]`.
pub fn min_area_angle(points: &[Vec2]) -> Result<f64> {
    let hull = convex_hull(points);
    if hull.len() < 2 {
        return Err(Error::Degenerate(
            "island needs at least two distinct uv points".into(),
        ));
    }
    let hull_area: f64 = (1..hull.len().saturating_sub(1))
        .map(|k| signed_area2(hull[0], hull[k], hull[k + 1]))
        .sum();
    if hull.len() < 3 || hull_area <= 0.0 {
        return Ok(fold_quarter(-principal_axis(points)));
    }
    let mut best: Option<(f64, f64)> = None;
    for k in 0..hull.len() {
        let e = sub2(hull[(k + 1) % hull.len()], hull[k]);
        let angle = fold_quarter(-e[1].atan2(e[0]));
        let area = rotated_bbox_area(&hull, angle);
        let better = match best {
            None => true,
            Some((ba, bang)) => {
                let tol = 1e-12 * ba.abs().max(1e-300);
                area < ba - tol || ((area - ba).abs() <= tol && angle.abs() < bang.abs())
            }
        };
        if better {
            best = Some((area, angle));
        }
    }
    Ok(best.map(|b| b.1).unwrap_or(0.0))
}

fn fold_quarter(angle: f64) -> f64 {
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
    let mut a = angle.rem_euclid(FRAC_PI_2);
    if a > FRAC_PI_4 {
        a -= FRAC_PI_2;
    }
    a
}

fn principal_axis(points: &[Vec2]) -> f64 {
    let n = points.len() as f64;
    let m = points
        .iter()
        .fold([0.0, 0.0], |a, p| [a[0] + p[0] / n, a[1] + p[1] / n]);
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for p in points {
        let d = sub2(*p, m);
        sxx += d[0] * d[0];
        sxy += d[0] * d[1];
        syy += d[1] * d[1];
    }
    0.5 * (2.0 * sxy).atan2(sxx - syy)
}

/// Rotates an island to its minimum-area bounding box and translates it to
/// the positive quadrant with its box corner at the origin.
pub fn orient_island(uv: &UvChart) -> Result<UvChart> {
    let angle = min_area_angle(&uv.uv)?;
    let (s, c) = angle.sin_cos();
    let rotated: Vec<Vec2> = uv
        .uv
        .iter()
        .map(|p| [c * p[0] - s * p[1], s * p[0] + c * p[1]])
        .collect();
    let (lo, _) = bounds2(&rotated).expect("non-empty");
    Ok(uv.with_uv(rotated.iter().map(|p| [p[0] - lo[0], p[1] - lo[1]]).collect()))
}

/// Similarity placing one island into the atlas:
/// `p ↦ scale · rot(p) + translation`, `rot` being a quarter turn or identity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub rotate_90: bool,
    pub scale: f64,
    pub translation: Vec2,
}

impl Placement {
    pub const IDENTITY: Placement = Placement {
        rotate_90: false,
        scale: 1.0,
        translation: [0.0, 0.0],
    };

    #[inline]
    pub fn apply(&self, p: Vec2) -> Vec2 {
        let r = if self.rotate_90 { [-p[1], p[0]] } else { p };
        [
            self.scale * r[0] + self.translation[0],
            self.scale * r[1] + self.translation[1],
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PackedIsland {
    pub uv: UvChart,
    pub placement: Placement,
}

impl PackedIsland {
    pub fn placed_uv(&self) -> Vec<Vec2> {
        self.uv.uv.iter().map(|&p| self.placement.apply(p)).collect()
    }

    pub fn placed_bounds(&self) -> (Vec2, Vec2) {
        bounds2(&self.placed_uv()).unwrap_or(([0.0; 2], [0.0; 2]))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UvAtlas {
    pub islands: Vec<PackedIsland>,
    pub margin: f64,
}

impl UvAtlas {
    /// Islands kept exactly where they are; used to score existing layouts.
    pub fn identity(islands: Vec<UvChart>, margin: f64) -> Self {
        UvAtlas {
            islands: islands
                .into_iter()
                .map(|uv| PackedIsland {
                    uv,
                    placement: Placement::IDENTITY,
                })
                .collect(),
            margin,
        }
    }

    /// Containment in `[0,1]²` and disjointness of margin-inflated boxes,
    /// both up to `tol`.
    pub fn check_invariants(&self, tol: f64) -> Result<()> {
        let boxes: Vec<_> = self.islands.iter().map(PackedIsland::placed_bounds).collect();
        for (k, (lo, hi)) in boxes.iter().enumerate() {
            if lo[0] < -tol || lo[1] < -tol || hi[0] > 1.0 + tol || hi[1] > 1.0 + tol {
                return Err(Error::InvalidArgument(format!(
                    "island {k} leaves the unit square"
                )));
            }
        }
        let h = 0.5 * self.margin;
        for a in 0..boxes.len() {
            for b in a + 1..boxes.len() {
                let (la, ha) = boxes[a];
                let (lb, hb) = boxes[b];
                let sep = ha[0] + h <= lb[0] - h + tol
                    || hb[0] + h <= la[0] - h + tol
                    || ha[1] + h <= lb[1] - h + tol
                    || hb[1] + h <= la[1] - h + tol;
                if !sep {
                    return Err(Error::InvalidArgument(format!(
                        "islands {a} and {b} overlap within the margin"
                    )));
                }
            }
        }
        Ok(())
    }
}

struct Item {
    index: usize,
    rotate: bool,
    /// Extents at global scale 1 after per-island area normalization and
    /// optional rotation.
    w: f64,
    h: f64,
    base_scale: f64,
    lo: Vec2,
}

/// Cell origins for every item at global scale `g`, or `None` if the shelves
/// overflow the square.
fn shelf_layout(items: &[Item], g: f64, margin: f64) -> Option<Vec<Vec2>> {
    let side = 1.0 + margin;
    let mut origins = Vec::with_capacity(items.len());
    let (mut x, mut y, mut shelf_h) = (0.0, 0.0, 0.0);
    for it in items {
        let cw = g * it.w + margin;
        let ch = g * it.h + margin;
        if cw > side || ch > side {
            return None;
        }
        if x + cw > side {
            y += shelf_h;
            x = 0.0;
            shelf_h = 0.0;
        }
        if shelf_h == 0.0 {
            shelf_h = ch;
        }
        if y + ch > side {
            return None;
        }
        origins.push([x, y]);
        x += cw;
    }
    Some(origins)
}

/// Packs islands into the unit square with one global scale.
///
/// Each island is first rescaled so its UV area equals its 3D area, turned
/// landscape, and the shelf layout (decreasing height) is searched for the
/// largest global scale that fits.
pub fn pack(islands: &[UvChart], margin: f64) -> Result<UvAtlas> {
    if islands.is_empty() {
        return Err(Error::InvalidArgument("no islands to pack".into()));
    }
    if !(0.0..1.0).contains(&margin) {
        return Err(Error::InvalidArgument(format!(
            "margin {margin} outside [0, 1)"
        )));
    }
    let mut items = Vec::with_capacity(islands.len());
    for (index, island) in islands.iter().enumerate() {
        let area_uv = island.uv_area();
        let area3 = island.chart.mesh.total_area();
        if !(area_uv > 0.0) || !(area3 > 0.0) {
            return Err(Error::Degenerate(format!("island {index} has zero area")));
        }
        let base_scale = (area3 / area_uv).sqrt();
        let (lo, hi) = bounds2(&island.uv).expect("island has vertices");
        let (w, h) = ((hi[0] - lo[0]) * base_scale, (hi[1] - lo[1]) * base_scale);
        let rotate = h > w;
        let (w, h) = if rotate { (h, w) } else { (w, h) };
        items.push(Item {
            index,
            rotate,
            w,
            h,
            base_scale,
            lo,
        });
    }
    items.sort_by(|a, b| b.h.total_cmp(&a.h).then(a.index.cmp(&b.index)));

    let wmax = items.iter().map(|i| i.w).fold(0.0, f64::max);
    let hmax = items.iter().map(|i| i.h).fold(0.0, f64::max);
    let mut hi = 1.0 / wmax.max(hmax);
    let mut lo = 0.0;
    if shelf_layout(&items, hi, margin).is_some() {
        lo = hi;
    } else {
        for _ in 0..SCALE_SEARCH_STEPS {
            let mid = 0.5 * (lo + hi);
            if shelf_layout(&items, mid, margin).is_some() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    let g = lo;
    let origins = shelf_layout(&items, g, margin)
        .filter(|_| g > 0.0)
        .ok_or_else(|| Error::Degenerate("islands do not fit at any scale".into()))?;

    let mut placed: Vec<Option<PackedIsland>> = vec![None; islands.len()];
    for (it, origin) in items.iter().zip(origins) {
        let scale = g * it.base_scale;
        // map the rotated box corner onto the cell corner
        let corner = if it.rotate {
            let (_, hi) = bounds2(&islands[it.index].uv).expect("island has vertices");
            [-hi[1], it.lo[0]]
        } else {
            it.lo
        };
        let placement = Placement {
            rotate_90: it.rotate,
            scale,
            translation: [origin[0] - scale * corner[0], origin[1] - scale * corner[1]],
        };
        placed[it.index] = Some(PackedIsland {
            uv: islands[it.index].clone(),
            placement,
        });
    }
    Ok(UvAtlas {
        islands: placed.into_iter().map(|p| p.expect("every island placed")).collect(),
        margin,
    })
}

/// Per-stage wall-clock seconds, kept apart from the deterministic report.
pub type StageTimings = BTreeMap<String, f64>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// Area-weighted singular-value gap of the final UVs, scale-normalized.
    pub distortion: f64,
    /// Island area over the unit square, margins counted as waste.
    pub utilization: f64,
    /// Island area over the unit square minus the margin bands.
    pub utilization_excluding_margin: f64,
    /// Faces flipped or intersecting another face, over all faces.
    pub overlap_pct: f64,
    pub flipped_faces: usize,
    pub intersecting_faces: usize,
    pub fragments: usize,
    pub faces: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runtime_s: Option<StageTimings>,
}

impl MetricsReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn table(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("distortion          {:.6}\n", self.distortion));
        s.push_str(&format!("utilization         {:.4}\n", self.utilization));
        s.push_str(&format!(
            "utilization (no m.) {:.4}\n",
            self.utilization_excluding_margin
        ));
        s.push_str(&format!("overlap             {:.4}\n", self.overlap_pct));
        s.push_str(&format!("fragments           {}\n", self.fragments));
        if let Some(t) = &self.runtime_s {
            for (stage, secs) in t {
                s.push_str(&format!("runtime {stage:<11} {secs:.3}s\n"));
            }
        }
        s
    }
}

/// Faces that intersect some other face with positive area, by a sweep over
/// face bounding boxes and an exact separating-axis test.
pub fn intersecting_faces(tris: &[[Vec2; 3]]) -> Vec<bool> {
    let mut order: Vec<usize> = (0..tris.len()).collect();
    let bbox = |t: &[Vec2; 3]| bounds2(t).expect("three points");
    let boxes: Vec<_> = tris.iter().map(bbox).collect();
    order.sort_by(|&a, &b| boxes[a].0[0].total_cmp(&boxes[b].0[0]).then(a.cmp(&b)));
    let mut hit = vec![false; tris.len()];
    for (k, &a) in order.iter().enumerate() {
        let (la, ha) = boxes[a];
        for &b in &order[k + 1..] {
            let (lb, hb) = boxes[b];
            if lb[0] >= ha[0] {
                break;
            }
            if lb[1] >= ha[1] || la[1] >= hb[1] {
                continue;
            }
            if triangles_overlap(tris[a], tris[b]) {
                hit[a] = true;
                hit[b] = true;
            }
        }
    }
    hit
}

/// Scores an atlas against the mesh its islands were cut from.
pub fn compute_metrics(
    mesh: &Mesh,
    atlas: &UvAtlas,
    timings: Option<StageTimings>,
) -> Result<MetricsReport> {
    let mut covered = vec![false; mesh.face_count()];
    let mut sums = DistortionSums::default();
    let mut tris: Vec<[Vec2; 3]> = Vec::new();
    let mut flipped = 0;
    let mut area = 0.0;
    let mut margin_area = 0.0;
    for island in &atlas.islands {
        let uv = island.placed_uv();
        for &f in &island.uv.chart.source_face {
            if f < covered.len() {
                covered[f] = true;
            }
        }
        sums.add(&crate::losses::distortion_sums(&island.uv.chart, &uv)?);
        for tri in &island.uv.chart.mesh.faces {
            let t = [uv[tri[0]], uv[tri[1]], uv[tri[2]]];
            let a = signed_area2(t[0], t[1], t[2]);
            if a < 0.0 {
                flipped += 1;
            }
            area += a.abs();
            tris.push(t);
        }
        if atlas.margin > 0.0 {
            let (lo, hi) = island.placed_bounds();
            let h = 0.5 * atlas.margin;
            let clip = |a: f64, b: f64| (b.min(1.0) - a.max(0.0)).max(0.0);
            let cell = clip(lo[0] - h, hi[0] + h) * clip(lo[1] - h, hi[1] + h);
            margin_area += (cell - (hi[0] - lo[0]) * (hi[1] - lo[1])).max(0.0);
        }
    }
    let uncovered: Vec<usize> = (0..covered.len()).filter(|&f| !covered[f]).collect();
    if !uncovered.is_empty() {
        return Err(Error::UncoveredFaces(uncovered));
    }
    let hit = intersecting_faces(&tris);
    let intersecting = hit.iter().filter(|&&h| h).count();
    let mut bad = 0;
    for (k, t) in tris.iter().enumerate() {
        if hit[k] || signed_area2(t[0], t[1], t[2]) < 0.0 {
            bad += 1;
        }
    }
    let faces = tris.len();
    Ok(MetricsReport {
        distortion: sums.metric()?,
        utilization: area,
        utilization_excluding_margin: (area / (1.0 - margin_area).max(f64::MIN_POSITIVE)).min(1.0),
        overlap_pct: if faces > 0 { bad as f64 / faces as f64 } else { 0.0 },
        flipped_faces: flipped,
        intersecting_faces: intersecting,
        fragments: atlas.islands.len(),
        faces,
        runtime_s: timings,
    })
}

/// The source mesh with per-corner texture coordinates taken from the atlas.
pub fn atlas_mesh(mesh: &Mesh, atlas: &UvAtlas) -> Result<Mesh> {
    let mut coords = Vec::new();
    let mut uv_faces: Vec<Option<[usize; 3]>> = vec![None; mesh.face_count()];
    for island in &atlas.islands {
        let offset = coords.len();
        coords.extend(island.placed_uv());
        let chart = &island.uv.chart;
        for (cf, &sf) in chart.source_face.iter().enumerate() {
            let tri = chart.mesh.faces[cf];
            if sf < uv_faces.len() {
                uv_faces[sf] = Some([offset + tri[0], offset + tri[1], offset + tri[2]]);
            }
        }
    }
    let uncovered: Vec<usize> = (0..uv_faces.len()).filter(|&f| uv_faces[f].is_none()).collect();
    if !uncovered.is_empty() {
        return Err(Error::UncoveredFaces(uncovered));
    }
    let layer = UvLayer {
        coords,
        faces: uv_faces.into_iter().map(|f| f.expect("checked")).collect(),
    };
    Mesh::with_uv(mesh.vertices.clone(), mesh.faces.clone(), Some(layer))
}

/// Flat-colored island preview, v pointing up.
pub fn preview_image(atlas: &UvAtlas, resolution: u32) -> image::RgbImage {
    let mut img = image::RgbImage::from_pixel(resolution, resolution, image::Rgb([24, 24, 28]));
    let r = resolution as f64;
    for (k, island) in atlas.islands.iter().enumerate() {
        let color = palette(k);
        let uv = island.placed_uv();
        for tri in &island.uv.chart.mesh.faces {
            let t = [uv[tri[0]], uv[tri[1]], uv[tri[2]]];
            let (lo, hi) = bounds2(&t).expect("three points");
            let i0 = ((lo[0] * r - 0.5).ceil().max(0.0)) as u32;
            let i1 = ((hi[0] * r - 0.5).floor().min(r - 1.0)).max(-1.0) as i64;
            let j0 = ((lo[1] * r - 0.5).ceil().max(0.0)) as u32;
            let j1 = ((hi[1] * r - 0.5).floor().min(r - 1.0)).max(-1.0) as i64;
            for j in j0 as i64..=j1 {
                for i in i0 as i64..=i1 {
                    let p = [(i as f64 + 0.5) / r, (j as f64 + 0.5) / r];
                    if crate::geom::point_in_triangle(p, t[0], t[1], t[2]) {
                        img.put_pixel(i as u32, resolution - 1 - j as u32, color);
                    }
                }
            }
        }
    }
    img
}

pub fn save_preview(atlas: &UvAtlas, resolution: u32, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    preview_image(atlas, resolution)
        .save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| match e {
            image::ImageError::IoError(io) => Error::io(path, io),
            other => Error::Image(other),
        })
}

fn palette(k: usize) -> image::Rgb<u8> {
    // golden-angle hue walk at fixed saturation and value
    let h = (k as f64 * 137.507_764).rem_euclid(360.0) / 60.0;
    let x = 1.0 - (h.rem_euclid(2.0) - 1.0).abs();
    let (r, g, b) = match h as u32 {
        0 => (1.0, x, 0.0),
        1 => (x, 1.0, 0.0),
        2 => (0.0, 1.0, x),
        3 => (0.0, x, 1.0),
        4 => (x, 0.0, 1.0),
        _ => (1.0, 0.0, x),
    };
    let to8 = |c: f64| (60.0 + 170.0 * c).round() as u8;
    image::Rgb([to8(r), to8(g), to8(b)])
}
