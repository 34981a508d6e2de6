use std::io::Write;

use uvkit_core::dataprep::{
    curate, flag_filters, load_islands, split_islands, write_manifest, CurateConfig,
    ManifestEntry,
};
use uvkit_core::fixtures;
use uvkit_core::mesh::{write_obj_file, Mesh, UvLayer};

fn grid_with_uv(map: impl Fn([f64; 2]) -> [f64; 2]) -> Mesh {
    let g = fixtures::grid(9, 9, 1.0);
    let coords = fixtures::grid_uv(9, 9).into_iter().map(map).collect();
    Mesh::with_uv(
        g.vertices.clone(),
        g.faces.clone(),
        Some(UvLayer {
            coords,
            faces: g.faces,
        }),
    )
    .unwrap()
}

fn tapered(p: [f64; 2]) -> [f64; 2] {
    let w = 1.0 - 0.45 * p[1];
    [0.5 + (p[0] - 0.5) * w + 0.36 * (p[1] - 0.5).powi(2), p[1]]
}

fn score(mesh: &Mesh) -> (f64, bool) {
    let recs = curate(split_islands(mesh, "m").unwrap(), &CurateConfig::default());
    assert_eq!(recs.len(), 1);
    (recs[0].ssim.unwrap(), recs[0].flags.selected)
}

#[test]
fn artist_layout_equal_to_reunwrap_is_rejected() {
    let (s, selected) = score(&grid_with_uv(|p| p));
    assert!((s - 1.0).abs() < 1e-9, "ssim {s}");
    assert!(!selected);
}

#[test]
fn moderately_different_layout_is_selected() {
    let (s, selected) = score(&grid_with_uv(tapered));
    assert!((0.5..=0.8).contains(&s), "ssim {s}");
    assert!(selected);
}

#[test]
fn unrelated_layout_is_rejected() {
    // a sliver strip against a square re-unwrap
    let (s, selected) = score(&grid_with_uv(|p| [0.06 * p[0], p[1]]));
    assert!(s < 0.5, "ssim {s}");
    assert!(!selected);
}

#[test]
fn manifest_matches_hand_labelled_set() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("a_same.obj", grid_with_uv(|p| p)),
        ("b_band.obj", grid_with_uv(tapered)),
        ("c_sliver.obj", grid_with_uv(|p| [0.06 * p[0], p[1]])),
        ("d_cube.obj", fixtures::cube_with_side_islands()),
    ];
    for (name, mesh) in &cases {
        write_obj_file(mesh, dir.path().join(name)).unwrap();
    }
    // no texture coordinates: skipped, not fatal
    let mut f = std::fs::File::create(dir.path().join("e_plain.obj")).unwrap();
    writeln!(f, "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3").unwrap();

    let records = curate(load_islands(dir.path()).unwrap(), &CurateConfig::default());
    assert_eq!(records.len(), 3 + 6);
    let selected: Vec<_> = records
        .iter()
        .filter(|r| r.flags.selected)
        .map(|r| r.source.as_str())
        .collect();
    assert_eq!(selected, ["b_band.obj"]);
    assert!(records
        .iter()
        .filter(|r| r.source == "d_cube.obj")
        .all(|r| r.flags.fragment && r.ssim.is_none()));

    let mut buf = Vec::new();
    write_manifest(&records, &mut buf).unwrap();
    let lines: Vec<ManifestEntry> = String::from_utf8(buf)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), records.len());
    let cube_faces: usize = lines
        .iter()
        .filter(|e| e.source == "d_cube.obj")
        .map(|e| e.faces.len())
        .sum();
    assert_eq!(cube_faces, 12);
}

#[test]
fn annulus_island_is_excluded_with_reason() {
    let t = fixtures::tube(16, 3, 1.0);
    let coords = t
        .vertices
        .iter()
        .map(|p| [p[0] * (1.0 + p[2]), p[1] * (1.0 + p[2])])
        .collect();
    let mesh = Mesh::with_uv(
        t.vertices.clone(),
        t.faces.clone(),
        Some(UvLayer {
            coords,
            faces: t.faces.clone(),
        }),
    )
    .unwrap();
    let recs = curate(split_islands(&mesh, "tube").unwrap(), &CurateConfig::default());
    assert_eq!(recs.len(), 1);
    let r = &recs[0];
    assert!(!r.flags.overlapping && !r.flags.fragment);
    assert!(r.excluded.as_deref().unwrap().contains("disk"));
    assert!(r.ssim.is_none() && !r.flags.selected);
}

#[test]
fn closed_island_is_never_selected() {
    let s = fixtures::uv_sphere(8, 6);
    let coords = s.vertices.iter().map(|p| [p[0], p[1]]).collect();
    let mesh = Mesh::with_uv(
        s.vertices.clone(),
        s.faces.clone(),
        Some(UvLayer {
            coords,
            faces: s.faces.clone(),
        }),
    )
    .unwrap();
    let recs = curate(split_islands(&mesh, "sphere").unwrap(), &CurateConfig::default());
    assert_eq!(recs.len(), 1);
    assert!(recs[0].flags.overlapping && !recs[0].flags.selected);
}

#[test]
fn every_face_lands_in_exactly_one_island() {
    for mesh in [
        fixtures::cube_with_side_islands(),
        fixtures::cube_with_triangle_islands(),
        grid_with_uv(tapered),
    ] {
        let recs = split_islands(&mesh, "m").unwrap();
        let mut seen = vec![0usize; mesh.face_count()];
        for r in &recs {
            for &f in &r.uv.chart.source_face {
                seen[f] += 1;
            }
        }
        assert!(seen.iter().all(|&c| c == 1));
    }
}

#[test]
fn curation_is_deterministic_and_idempotent() {
    let recs = split_islands(&grid_with_uv(tapered), "m").unwrap();
    let a = curate(recs.clone(), &CurateConfig::default());
    let b = curate(recs, &CurateConfig::default());
    assert_eq!(a, b);
    let again: Vec<_> = a.iter().cloned().map(flag_filters).collect();
    assert_eq!(again, a);
}

mod ssim_props {
    use proptest::prelude::*;
    use uvkit_core::dataprep::ssim_score;
    use uvkit_core::losses::SilhouetteImage;

    fn image(px: Vec<f64>) -> SilhouetteImage {
        let mut img = SilhouetteImage::filled(16, 0.0);
        img.coverage = px;
        img
    }

    proptest! {
        #[test]
        fn symmetric_bounded_and_reflexive(
            a in prop::collection::vec(0.0f64..1.0, 256),
            b in prop::collection::vec(0.0f64..1.0, 256),
        ) {
            let (a, b) = (image(a), image(b));
            let ab = ssim_score(&a, &b).unwrap();
            let ba = ssim_score(&b, &a).unwrap();
            prop_assert!((ab - ba).abs() < 1e-12);
            prop_assert!(ab <= 1.0 + 1e-12 && ab >= -1.0 - 1e-12);
            prop_assert!((ssim_score(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        }
    }
}
