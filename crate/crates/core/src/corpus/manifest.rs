use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use ndarray::{Array2, Array3};
use serde::{Deserialize, Serialize};

use crate::corpus::patch::PatchRecord;
use crate::corpus::question::QARecord;
use crate::corpus::sar::{compose_sar_channels, SarClipBounds};
use crate::corpus::synth::SynthScene;
use crate::error::{Error, Result};

/// Raster container: magic, ndim, u64 dims, f64 little-endian data in C order.
/// Exact round trips matter more than compactness here.
const RASTER_MAGIC: &[u8; 6] = b"RSRAS\x01";

pub fn write_raster(path: &Path, dims: &[usize], data: &[f64]) -> Result<()> {
    let expected: usize = dims.iter().product();
    if expected != data.len() {
        return Err(Error::shape_mismatch(expected, data.len()));
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    w.write_all(RASTER_MAGIC).map_err(io)?;
    w.write_all(&[dims.len() as u8]).map_err(io)?;
    for &d in dims {
        w.write_all(&(d as u64).to_le_bytes()).map_err(io)?;
    }
    for &v in data {
        w.write_all(&v.to_le_bytes()).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn read_raster(path: &Path) -> Result<(Vec<usize>, Vec<f64>)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    let io = |e| Error::io(path, e);
    let mut magic = [0u8; 6];
    r.read_exact(&mut magic).map_err(io)?;
    if &magic != RASTER_MAGIC {
        return Err(Error::Data(format!("{}: not a raster file", path.display())));
    }
    let mut ndim = [0u8; 1];
    r.read_exact(&mut ndim).map_err(io)?;
    let mut dims = Vec::with_capacity(ndim[0] as usize);
    for _ in 0..ndim[0] {
        let mut b = [0u8; 8];
        r.read_exact(&mut b).map_err(io)?;
        dims.push(u64::from_le_bytes(b) as usize);
    }
    let n: usize = dims.iter().product();
    let mut data = Vec::with_capacity(n);
    let mut b = [0u8; 8];
    for _ in 0..n {
        r.read_exact(&mut b).map_err(io)?;
        data.push(f64::from_le_bytes(b));
    }
    Ok((dims, data))
}

fn read_raster2(path: &Path) -> Result<Array2<f64>> {
    let (dims, data) = read_raster(path)?;
    if dims.len() != 2 {
        return Err(Error::Data(format!(
            "{}: expected a 2-d raster, got {dims:?}",
            path.display()
        )));
    }
    Array2::from_shape_vec((dims[0], dims[1]), data)
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))
}

fn read_raster3(path: &Path) -> Result<Array3<f64>> {
    let (dims, data) = read_raster(path)?;
    if dims.len() != 3 {
        return Err(Error::Data(format!(
            "{}: expected a 3-d raster, got {dims:?}",
            path.display()
        )));
    }
    Array3::from_shape_vec((dims[0], dims[1], dims[2]), data)
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))
}

/// One line of the patch manifest. Image paths are relative to the manifest
/// file's directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestRow {
    pub patch_id: String,
    pub lon: f64,
    pub lat: f64,
    pub optical_path: String,
    pub sar_vv_path: String,
    pub sar_vh_path: String,
    pub labels: Vec<u8>,
}

/// Writes scenes as rasters under `dir/images/` plus a `patches.jsonl`
/// manifest, and returns the manifest path.
pub fn write_manifest(dir: &Path, scenes: &[SynthScene]) -> Result<PathBuf> {
    let images = dir.join("images");
    std::fs::create_dir_all(&images).map_err(|e| Error::io(&images, e))?;
    let manifest_path = dir.join("patches.jsonl");
    let file = File::create(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let mut w = BufWriter::new(file);
    for s in scenes {
        let opt_rel = format!("images/{}_opt.ras", s.patch_id);
        let vv_rel = format!("images/{}_vv.ras", s.patch_id);
        let vh_rel = format!("images/{}_vh.ras", s.patch_id);
        let (c, h, wd) = s.optical.dim();
        write_raster(
            &dir.join(&opt_rel),
            &[c, h, wd],
            s.optical.as_slice().expect("standard layout"),
        )?;
        let (h, wd) = s.vv_db.dim();
        write_raster(&dir.join(&vv_rel), &[h, wd], s.vv_db.as_slice().unwrap())?;
        write_raster(&dir.join(&vh_rel), &[h, wd], s.vh_db.as_slice().unwrap())?;
        let row = ManifestRow {
            patch_id: s.patch_id.clone(),
            lon: s.lon,
            lat: s.lat,
            optical_path: opt_rel,
            sar_vv_path: vv_rel,
            sar_vh_path: vh_rel,
            labels: s.labels.clone(),
        };
        serde_json::to_writer(&mut w, &row)?;
        w.write_all(b"\n").map_err(|e| Error::io(&manifest_path, e))?;
    }
    w.flush().map_err(|e| Error::io(&manifest_path, e))?;
    Ok(manifest_path)
}

/// Loads a patch manifest, reading the referenced rasters and composing the
/// 3-channel SAR image from the VV/VH dB rasters.
pub fn load_manifest(path: &Path, n_classes: usize, bounds: SarClipBounds) -> Result<Vec<PatchRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |msg: String| Error::Parse {
            path: path.to_path_buf(),
            line: lineno,
            msg,
        };
        let row: ManifestRow =
            serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
        if row.labels.len() != n_classes {
            return Err(parse_err(format!(
                "patch {:?}: expected {n_classes} label bits, got {}",
                row.patch_id,
                row.labels.len()
            )));
        }
        if row.labels.iter().any(|&b| b > 1) {
            return Err(parse_err(format!(
                "patch {:?}: labels must be 0/1",
                row.patch_id
            )));
        }
        let optical = read_raster3(&base.join(&row.optical_path))?;
        if optical.dim().0 != 3 {
            return Err(parse_err(format!(
                "patch {:?}: optical raster must have 3 channels, got {}",
                row.patch_id,
                optical.dim().0
            )));
        }
        let vv = read_raster2(&base.join(&row.sar_vv_path))?;
        let vh = read_raster2(&base.join(&row.sar_vh_path))?;
        let sar = compose_sar_channels(&vv, &vh, bounds)?;
        out.push(PatchRecord {
            patch_id: row.patch_id,
            lon: row.lon,
            lat: row.lat,
            optical,
            sar,
            labels: row.labels,
        });
    }
    Ok(out)
}

pub fn write_qa_file(path: &Path, records: &[QARecord]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_qa_file(path: &Path) -> Result<Vec<QARecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: QARecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            msg: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::question::{QType, Split};
    use crate::corpus::synth::{synthesize_corpus, SceneConfig};

    #[test]
    fn manifest_round_trips_scenes() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = SceneConfig::uniform(6, (16, 16), 0.1, 0.5);
        let scenes = synthesize_corpus(&cfg, 10, 3).unwrap();
        let manifest = write_manifest(dir.path(), &scenes).unwrap();
        let loaded = load_manifest(&manifest, 6, SarClipBounds::default()).unwrap();
        assert_eq!(loaded.len(), 10);
        for (scene, patch) in scenes.iter().zip(&loaded) {
            assert_eq!(&scene.to_patch(SarClipBounds::default()).unwrap(), patch);
        }
    }

    #[test]
    fn wrong_label_width_names_the_row() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = SceneConfig::uniform(6, (16, 16), 0.1, 0.5);
        let scenes = synthesize_corpus(&cfg, 2, 3).unwrap();
        let manifest = write_manifest(dir.path(), &scenes).unwrap();
        let err = load_manifest(&manifest, 7, SarClipBounds::default()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains(":1:"), "error should name the line: {msg}");
        assert!(msg.contains("7 label bits"), "{msg}");
    }

    #[test]
    fn empty_manifest_is_ok() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("patches.jsonl");
        std::fs::write(&path, "").unwrap();
        assert!(load_manifest(&path, 6, SarClipBounds::default()).unwrap().is_empty());
    }

    #[test]
    fn malformed_row_is_a_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("patches.jsonl");
        std::fs::write(&path, "{\"patch_id\": 12}\n").unwrap();
        let err = load_manifest(&path, 6, SarClipBounds::default()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn qa_file_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("qa.jsonl");
        let recs = vec![QARecord {
            patch_id: "p0".into(),
            question: "Is there Class 00 in this image?".into(),
            qtype: QType::YesNo,
            answer: "no".into(),
            split: Split::Val,
        }];
        write_qa_file(&path, &recs).unwrap();
        assert_eq!(load_qa_file(&path).unwrap(), recs);
    }

    #[test]
    fn missing_file_is_reported() {
        assert!(load_manifest(Path::new("/nonexistent/x.jsonl"), 6, SarClipBounds::default()).is_err());
    }
}
