use std::fs;
use std::io::{self, Write};
use std::path::Path;

use super::{Face, Mesh, UvLayer};
use crate::error::{Error, Result};

/// Reads a Wavefront OBJ file. Polygons are fan-triangulated from their first
/// corner; `vt` indices are kept when every face carries them.
pub fn load_obj(path: impl AsRef<Path>) -> Result<Mesh> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mesh = parse_obj(&text, &path.display().to_string())?;
    log::info!(
        "loaded {}: {} vertices, {} faces{}",
        path.display(),
        mesh.vertex_count(),
        mesh.face_count(),
        if mesh.uv.is_some() { ", with uv" } else { "" }
    );
    Ok(mesh)
}

pub fn parse_obj(text: &str, name: &str) -> Result<Mesh> {
    let err = |line: usize, msg: String| Error::Parse {
        path: name.to_string(),
        line,
        msg,
    };

    let mut vertices = Vec::new();
    let mut coords = Vec::new();
    let mut faces: Vec<Face> = Vec::new();
    let mut uv_faces: Vec<Face> = Vec::new();
    let mut faces_with_uv = 0usize;
    let mut faces_without_uv = 0usize;

    for (lineno, raw) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        let mut parts = line.split_whitespace();
        let Some(tag) = parts.next() else { continue };
        match tag {
            "v" => {
                let xyz = parse_floats(parts, 3).map_err(|m| err(lineno, m))?;
                vertices.push([xyz[0], xyz[1], xyz[2]]);
            }
            "vt" => {
                let uv = parse_floats(parts, 2).map_err(|m| err(lineno, m))?;
                coords.push([uv[0], uv[1]]);
            }
            "f" => {
                let mut vs = Vec::new();
                let mut ts = Vec::new();
                for corner in parts {
                    let mut fields = corner.split('/');
                    let v = fields
                        .next()
                        .ok_or_else(|| err(lineno, format!("bad corner {corner:?}")))?;
                    vs.push(resolve_index(v, vertices.len()).map_err(|m| err(lineno, m))?);
                    match fields.next() {
                        Some(t) if !t.is_empty() => {
                            ts.push(resolve_index(t, coords.len()).map_err(|m| err(lineno, m))?)
                        }
                        _ => {}
                    }
                }
                if vs.len() < 3 {
                    return Err(err(lineno, "face with fewer than 3 corners".into()));
                }
                let has_uv = !ts.is_empty();
                if has_uv && ts.len() != vs.len() {
                    return Err(err(lineno, "face mixes corners with and without vt".into()));
                }
                for k in 1..vs.len() - 1 {
                    faces.push([vs[0], vs[k], vs[k + 1]]);
                    if has_uv {
                        uv_faces.push([ts[0], ts[k], ts[k + 1]]);
                        faces_with_uv += 1;
                    } else {
                        faces_without_uv += 1;
                    }
                }
            }
            _ => {}
        }
    }

    let uv = if faces_with_uv > 0 && faces_without_uv == 0 {
        Some(UvLayer {
            coords,
            faces: uv_faces,
        })
    } else {
        if faces_with_uv > 0 {
            log::warn!(
                "{name}: {faces_without_uv} faces lack vt records; texture coordinates dropped"
            );
        }
        None
    };
    Mesh::with_uv(vertices, faces, uv)
}

fn parse_floats<'a>(parts: impl Iterator<Item = &'a str>, need: usize) -> Result<Vec<f64>, String> {
    let values = parts
        .take(need)
        .map(|s| s.parse::<f64>().map_err(|e| format!("bad number {s:?}: {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    if values.len() < need {
        return Err(format!("expected {need} coordinates"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err("non-finite coordinate".into());
    }
    Ok(values)
}

fn resolve_index(field: &str, count: usize) -> Result<usize, String> {
    let raw: i64 = field
        .parse()
        .map_err(|e| format!("bad index {field:?}: {e}"))?;
    let idx = if raw > 0 {
        raw - 1
    } else if raw < 0 {
        count as i64 + raw
    } else {
        return Err("index 0 is invalid in OBJ".into());
    };
    if idx < 0 || idx as usize >= count {
        return Err(format!("index {raw} out of range ({count} defined)"));
    }
    Ok(idx as usize)
}

/// Writes `v`, optional `vt`, and `f` records with 1-based indices.
/// Coordinates use the shortest representation that round-trips exactly.
pub fn write_obj<W: Write>(mesh: &Mesh, mut out: W) -> io::Result<()> {
    for v in &mesh.vertices {
        writeln!(out, "v {} {} {}", v[0], v[1], v[2])?;
    }
    match &mesh.uv {
        Some(layer) => {
            for t in &layer.coords {
                writeln!(out, "vt {} {}", t[0], t[1])?;
            }
            for (f, t) in mesh.faces.iter().zip(&layer.faces) {
                writeln!(
                    out,
                    "f {}/{} {}/{} {}/{}",
                    f[0] + 1,
                    t[0] + 1,
                    f[1] + 1,
                    t[1] + 1,
                    f[2] + 1,
                    t[2] + 1
                )?;
            }
        }
        None => {
            for f in &mesh.faces {
                writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1)?;
            }
        }
    }
    Ok(())
}

pub fn write_obj_file(mesh: &Mesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut buf = io::BufWriter::new(file);
    write_obj(mesh, &mut buf).map_err(|e| Error::io(path, e))?;
    buf.flush().map_err(|e| Error::io(path, e))
}
