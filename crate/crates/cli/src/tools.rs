use std::fs;
use std::path::Path;

use serde::Serialize;
use uvkit_core::dataprep::{curate, load_islands, write_manifest, CurateConfig};
use uvkit_core::mesh::load_obj;
use uvkit_core::seams::{encode, SeamFile, TokenSeq};

use crate::error::{io_error, PipelineError, Stage};
use crate::unwrap::load_seams;

/// Encodes a seam file on `mesh` as a token sequence.
pub fn seams_encode(mesh_path: &Path, seams_path: &Path, bits: u32) -> Result<TokenSeq, PipelineError> {
    let name = mesh_path.display().to_string();
    let mesh = load_obj(mesh_path).stage("load", &name)?;
    let seams = load_seams(seams_path, &mesh).stage("seams", &seams_path.display())?;
    encode(&seams, &mesh, bits).stage("encode", &name)
}

/// Projects a token sequence back onto `mesh` edges.
pub fn seams_decode(mesh_path: &Path, tokens_path: &Path) -> Result<SeamFile, PipelineError> {
    let name = mesh_path.display().to_string();
    let mesh = load_obj(mesh_path).stage("load", &name)?;
    let tokens_name = tokens_path.display().to_string();
    let text = fs::read_to_string(tokens_path)
        .map_err(|e| io_error(tokens_path, e))
        .stage("load", &tokens_name)?;
    let tokens = TokenSeq::from_json(&text).stage("load", &tokens_name)?;
    let seams = uvkit_core::seams::decode(&tokens, &mesh).stage("decode", &name)?;
    Ok(SeamFile::from_seams(&seams))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CurateSummary {
    pub islands: usize,
    pub overlapping: usize,
    pub fragments: usize,
    pub excluded: usize,
    pub selected: usize,
}

/// Splits every OBJ in `dir` into islands, scores them and writes the
/// JSON-lines manifest.
pub fn run_curate(dir: &Path, config: &CurateConfig, manifest: &Path) -> Result<CurateSummary, PipelineError> {
    let name = dir.display().to_string();
    config.raster.validate().stage("config", &"curate config")?;
    let records = curate(load_islands(dir).stage("load", &name)?, config);
    if let Some(parent) = manifest.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)
            .map_err(|e| io_error(parent, e))
            .stage("output", &parent.display())?;
    }
    let file = fs::File::create(manifest)
        .map_err(|e| io_error(manifest, e))
        .stage("write", &manifest.display())?;
    write_manifest(&records, std::io::BufWriter::new(file)).stage("write", &manifest.display())?;
    let mut s = CurateSummary {
        islands: records.len(),
        ..Default::default()
    };
    for r in &records {
        s.overlapping += r.flags.overlapping as usize;
        s.fragments += r.flags.fragment as usize;
        s.excluded += r.excluded.is_some() as usize;
        s.selected += r.flags.selected as usize;
    }
    Ok(s)
}
