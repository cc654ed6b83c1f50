//! On-disk artifact formats.
//!
//! Bulk arrays are raw little-endian files described by a JSON manifest that
//! records shape, dtype, a SHA-256 of the data and the hash of the config
//! that produced it. Point clouds are a single file: one JSON header line
//! followed by fixed-width binary records. All writes go through a temporary
//! file in the destination directory and an atomic rename.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::Point3;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cloud::{Frame, OnhPointCloud};
use crate::dvc::{DisplacementField, NodeGrid, StrainField, SymTensor};
use crate::error::{Error, Result};
use crate::experiment::FeatureStats;
use crate::pointnet::{Architecture, ModelParams};
use crate::volume::{LabeledVolume, Tissue};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Write `bytes` to `path` via a sibling temporary file and rename.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    atomic_write(path, &bytes)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = read_bytes(path)?;
    serde_json::from_slice(&bytes).map_err(|e| Error::format(path, e.to_string()))
}

/// Common header of every manifest-described binary artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataManifest<M> {
    pub kind: String,
    pub config_hash: String,
    /// Data file name, relative to the manifest's directory.
    pub data_file: String,
    pub data_bytes: u64,
    pub data_sha256: String,
    #[serde(flatten)]
    pub meta: M,
}

fn data_path(manifest: &Path) -> PathBuf {
    manifest.with_extension("bin")
}

fn write_manifested<M: Serialize>(
    manifest: &Path,
    kind: &str,
    hash: &str,
    data: &[u8],
    meta: M,
) -> Result<()> {
    let data_file = data_path(manifest);
    atomic_write(&data_file, data)?;
    let m = DataManifest {
        kind: kind.to_string(),
        config_hash: hash.to_string(),
        data_file: data_file.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_string(),
        data_bytes: data.len() as u64,
        data_sha256: sha256_hex(data),
        meta,
    };
    write_json(manifest, &m)
}

fn read_manifested<M: DeserializeOwned>(manifest: &Path, kind: &str) -> Result<(DataManifest<M>, Vec<u8>)> {
    let m: DataManifest<M> = read_json(manifest)?;
    if m.kind != kind {
        return Err(Error::format(manifest, format!("expected a {kind} manifest, found {}", m.kind)));
    }
    let dir = manifest.parent().unwrap_or(Path::new("."));
    let path = dir.join(&m.data_file);
    let data = read_bytes(&path)?;
    if data.len() as u64 != m.data_bytes || sha256_hex(&data) != m.data_sha256 {
        return Err(Error::format(&path, "size or checksum does not match its manifest"));
    }
    Ok((m, data))
}

fn push_f64s(out: &mut Vec<u8>, values: impl IntoIterator<Item = f64>) {
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

fn f64_at(bytes: &[u8], i: usize) -> f64 {
    f64::from_le_bytes(bytes[i * 8..i * 8 + 8].try_into().expect("8-byte slice"))
}

fn expect_len(path: &Path, actual: usize, expected: usize) -> Result<()> {
    if actual != expected {
        return Err(Error::format(path, format!("expected {expected} data bytes, found {actual}")));
    }
    Ok(())
}

// volumes

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeMeta {
    pub dims: [usize; 3],
    pub spacing_mm: [f64; 3],
    /// Storage order; x varies fastest.
    pub axes: String,
    /// `labels` (u8, one per voxel) followed by `intensity` (f32 LE).
    pub layout: Vec<String>,
}

pub fn write_volume(manifest: &Path, vol: &LabeledVolume, config_hash: &str) -> Result<()> {
    let mut data = Vec::with_capacity(vol.labels().len() * 5);
    data.extend_from_slice(vol.labels());
    for v in vol.intensity() {
        data.extend_from_slice(&v.to_le_bytes());
    }
    let meta = VolumeMeta {
        dims: vol.dims(),
        spacing_mm: vol.spacing(),
        axes: "xyz".into(),
        layout: vec!["labels:u8".into(), "intensity:f32le".into()],
    };
    write_manifested(manifest, "volume", config_hash, &data, meta)
}

pub fn read_volume(manifest: &Path) -> Result<(LabeledVolume, DataManifest<VolumeMeta>)> {
    let (m, data) = read_manifested::<VolumeMeta>(manifest, "volume")?;
    let n: usize = m.meta.dims.iter().product();
    expect_len(manifest, data.len(), n * 5)?;
    let labels = data[..n].to_vec();
    let intensity = data[n..].chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
    let vol = LabeledVolume::new(m.meta.dims, m.meta.spacing_mm, labels, intensity)?;
    Ok((vol, m))
}

// point clouds

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CloudHeader {
    pub count: usize,
    /// Record layout: x, y, z (f64), tissue (u8), thickness (f64) and
    /// optionally strain (f64), all little-endian.
    pub fields: Vec<String>,
    pub frame: Frame,
    pub config_hash: String,
}

const CLOUD_FIELDS: [&str; 5] = ["x:f64", "y:f64", "z:f64", "tissue:u8", "thickness:f64"];
const STRAIN_FIELD: &str = "strain:f64";

pub fn encode_cloud(cloud: &OnhPointCloud, config_hash: &str) -> Result<Vec<u8>> {
    let mut fields: Vec<String> = CLOUD_FIELDS.iter().map(|s| s.to_string()).collect();
    if cloud.strain().is_some() {
        fields.push(STRAIN_FIELD.into());
    }
    let header =
        CloudHeader { count: cloud.len(), fields, frame: cloud.frame(), config_hash: config_hash.into() };
    let mut out = serde_json::to_vec(&header)?;
    out.push(b'\n');
    for i in 0..cloud.len() {
        let p = cloud.points()[i];
        push_f64s(&mut out, [p.x, p.y, p.z]);
        out.push(cloud.tissue()[i].label());
        push_f64s(&mut out, [cloud.thickness()[i]]);
        if let Some(s) = cloud.strain() {
            push_f64s(&mut out, [s[i]]);
        }
    }
    Ok(out)
}

pub fn write_cloud(path: &Path, cloud: &OnhPointCloud, config_hash: &str) -> Result<()> {
    atomic_write(path, &encode_cloud(cloud, config_hash)?)
}

pub fn read_cloud(path: &Path) -> Result<(OnhPointCloud, CloudHeader)> {
    let bytes = read_bytes(path)?;
    let split =
        bytes.iter().position(|&b| b == b'\n').ok_or_else(|| Error::format(path, "missing header line"))?;
    let header: CloudHeader =
        serde_json::from_slice(&bytes[..split]).map_err(|e| Error::format(path, e.to_string()))?;
    let has_strain = header.fields.iter().any(|f| f == STRAIN_FIELD);
    let expected: Vec<&str> =
        CLOUD_FIELDS.iter().copied().chain(has_strain.then_some(STRAIN_FIELD)).collect();
    if header.fields != expected {
        return Err(Error::format(path, format!("unsupported record fields {:?}", header.fields)));
    }
    let width = 33 + if has_strain { 8 } else { 0 };
    let body = &bytes[split + 1..];
    expect_len(path, body.len(), header.count * width)?;
    let mut points = Vec::with_capacity(header.count);
    let mut tissue = Vec::with_capacity(header.count);
    let mut thickness = Vec::with_capacity(header.count);
    let mut strain = has_strain.then(|| Vec::with_capacity(header.count));
    for rec in body.chunks_exact(width) {
        points.push(Point3::new(f64_at(rec, 0), f64_at(rec, 1), f64_at(rec, 2)));
        let t = Tissue::from_label(rec[24]).ok_or_else(|| Error::format(path, "unknown tissue label"))?;
        tissue.push(t);
        thickness.push(f64::from_le_bytes(rec[25..33].try_into().unwrap()));
        if let Some(s) = strain.as_mut() {
            s.push(f64::from_le_bytes(rec[33..41].try_into().unwrap()));
        }
    }
    let cloud = OnhPointCloud::new(points, tissue, thickness, strain, header.frame)?;
    Ok((cloud, header))
}

// node fields

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeMeta {
    pub grid: NodeGrid,
    pub spacing_mm: [f64; 3],
    /// Per-node f64 LE record fields.
    pub fields: Vec<String>,
}

const DISPLACEMENT_FIELDS: [&str; 4] = ["ux", "uy", "uz", "confidence"];
const STRAIN_FIELDS: [&str; 7] = ["xx", "yy", "zz", "xy", "yz", "xz", "effective"];

fn node_meta(grid: NodeGrid, spacing: [f64; 3], fields: &[&str]) -> NodeMeta {
    NodeMeta { grid, spacing_mm: spacing, fields: fields.iter().map(|s| s.to_string()).collect() }
}

pub fn write_displacement(
    manifest: &Path,
    field: &DisplacementField,
    spacing: [f64; 3],
    config_hash: &str,
) -> Result<()> {
    let mut data = Vec::with_capacity(field.grid.len() * 32);
    for (v, c) in field.vectors.iter().zip(&field.confidence) {
        push_f64s(&mut data, [v[0], v[1], v[2], *c]);
    }
    let meta = node_meta(field.grid, spacing, &DISPLACEMENT_FIELDS);
    write_manifested(manifest, "displacement", config_hash, &data, meta)
}

pub fn read_displacement(manifest: &Path) -> Result<(DisplacementField, DataManifest<NodeMeta>)> {
    let (m, data) = read_manifested::<NodeMeta>(manifest, "displacement")?;
    let n = m.meta.grid.len();
    expect_len(manifest, data.len(), n * 32)?;
    let vectors =
        (0..n).map(|i| [f64_at(&data, 4 * i), f64_at(&data, 4 * i + 1), f64_at(&data, 4 * i + 2)]).collect();
    let confidence = (0..n).map(|i| f64_at(&data, 4 * i + 3)).collect();
    Ok((DisplacementField::new(m.meta.grid, vectors, confidence)?, m))
}

pub fn write_strain(manifest: &Path, field: &StrainField, config_hash: &str) -> Result<()> {
    let mut data = Vec::with_capacity(field.grid.len() * 56);
    for (t, e) in field.tensors.iter().zip(&field.effective) {
        push_f64s(&mut data, t.components());
        push_f64s(&mut data, [*e]);
    }
    let meta = node_meta(field.grid, field.spacing, &STRAIN_FIELDS);
    write_manifested(manifest, "strain", config_hash, &data, meta)
}

pub fn read_strain(manifest: &Path) -> Result<(StrainField, DataManifest<NodeMeta>)> {
    let (m, data) = read_manifested::<NodeMeta>(manifest, "strain")?;
    let n = m.meta.grid.len();
    expect_len(manifest, data.len(), n * 56)?;
    let tensors = (0..n)
        .map(|i| SymTensor::from_components(std::array::from_fn(|k| f64_at(&data, 7 * i + k))))
        .collect();
    let effective = (0..n).map(|i| f64_at(&data, 7 * i + 6)).collect();
    Ok((StrainField::new(m.meta.grid, m.meta.spacing_mm, tensors, effective)?, m))
}

// model checkpoints

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub arch: Architecture,
    pub parameters: usize,
    pub feature_stats: FeatureStats,
    pub use_strain: bool,
    pub seed: u64,
    pub fold: usize,
    pub best_epoch: usize,
}

pub fn write_checkpoint(
    manifest: &Path,
    params: &ModelParams,
    meta: CheckpointMeta,
    config_hash: &str,
) -> Result<()> {
    let mut data = Vec::with_capacity(params.len() * 8);
    push_f64s(&mut data, params.values().iter().copied());
    write_manifested(manifest, "checkpoint", config_hash, &data, meta)
}

pub fn read_checkpoint(manifest: &Path) -> Result<(ModelParams, DataManifest<CheckpointMeta>)> {
    let (m, data) = read_manifested::<CheckpointMeta>(manifest, "checkpoint")?;
    expect_len(manifest, data.len(), m.meta.parameters * 8)?;
    let values = (0..m.meta.parameters).map(|i| f64_at(&data, i)).collect();
    Ok((ModelParams::from_values(m.meta.arch.clone(), values)?, m))
}
