//! `AMAP` tensor files.
//!
//! Layout, all integers little-endian:
//!
//! | bytes      | content                         |
//! |------------|---------------------------------|
//! | 4          | magic `AMAP`                    |
//! | 4 (u32)    | format version, currently 1     |
//! | 4 (u32)    | dtype, 1 = float32 LE           |
//! | 4 (u32)    | number of dimensions `n`        |
//! | 8·n (u64)  | shape, outermost first          |
//! | 4·∏shape   | row-major payload               |
//!
//! Metadata (channel layout, units, provenance) lives in a JSON sidecar
//! next to the file, named `<file>.json`.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::grid::Grid;
use crate::heatmap::{AcousticHeatmap, ChannelKey};
use crate::{Error, Result};

pub const TENSOR_MAGIC: [u8; 4] = *b"AMAP";
pub const TENSOR_VERSION: u32 = 1;
pub const DTYPE_F32_LE: u32 = 1;
pub const MAX_TENSOR_DIMS: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f32>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        if shape.is_empty() || shape.len() > MAX_TENSOR_DIMS {
            return Err(Error::ShapeMismatch(format!("{} dimensions, expected 1..={MAX_TENSOR_DIMS}", shape.len())));
        }
        let numel = shape.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d));
        if numel != Some(data.len()) {
            return Err(Error::ShapeMismatch(format!("shape {shape:?} does not hold {} values", data.len())));
        }
        Ok(Self { shape, data })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    /// Header plus payload.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + 8 * self.shape.len() + 4 * self.data.len());
        out.extend_from_slice(&TENSOR_MAGIC);
        out.extend_from_slice(&TENSOR_VERSION.to_le_bytes());
        out.extend_from_slice(&DTYPE_F32_LE.to_le_bytes());
        out.extend_from_slice(&(self.shape.len() as u32).to_le_bytes());
        for &d in &self.shape {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    /// Parses a complete file image; `path` only labels errors.
    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        let bad = |reason: String| Error::TensorFormat { path: path.to_path_buf(), reason };
        let mut cursor = 0usize;
        let mut take = |n: usize, what: &str| -> Result<&[u8]> {
            let end = cursor.checked_add(n).filter(|&e| e <= bytes.len());
            match end {
                Some(end) => {
                    let s = &bytes[cursor..end];
                    cursor = end;
                    Ok(s)
                }
                None => Err(bad(format!("truncated while reading {what}"))),
            }
        };
        let u32_at = |b: &[u8]| u32::from_le_bytes(b.try_into().expect("4 bytes"));
        if take(4, "magic")? != TENSOR_MAGIC {
            return Err(bad("bad magic".into()));
        }
        let version = u32_at(take(4, "version")?);
        if version != TENSOR_VERSION {
            return Err(bad(format!("unsupported version {version}")));
        }
        let dtype = u32_at(take(4, "dtype")?);
        if dtype != DTYPE_F32_LE {
            return Err(bad(format!("unsupported dtype {dtype}")));
        }
        let ndim = u32_at(take(4, "rank")?) as usize;
        if ndim == 0 || ndim > MAX_TENSOR_DIMS {
            return Err(bad(format!("rank {ndim} outside 1..={MAX_TENSOR_DIMS}")));
        }
        let mut shape = Vec::with_capacity(ndim);
        for _ in 0..ndim {
            let d = u64::from_le_bytes(take(8, "shape")?.try_into().expect("8 bytes"));
            shape.push(usize::try_from(d).map_err(|_| bad(format!("dimension {d} too large")))?);
        }
        let numel = shape
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .and_then(|n| n.checked_mul(4).map(|_| n))
            .ok_or_else(|| bad(format!("shape {shape:?} overflows")))?;
        let payload = take(numel * 4, "payload")?;
        let data: Vec<f32> = payload.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes"))).collect();
        if cursor != bytes.len() {
            return Err(bad(format!("{} trailing bytes", bytes.len() - cursor)));
        }
        Ok(Self { shape, data })
    }
}

/// JSON sidecar of a tensor file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TensorMeta {
    /// What the tensor holds, e.g. `label`, `feature`, `prediction`.
    pub kind: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub layout: Vec<ChannelKey>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub channel_names: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub units: Vec<String>,
    pub provenance: BTreeMap<String, String>,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".json");
    PathBuf::from(name)
}

/// Writes via a temporary file and a rename, so readers never observe a
/// partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut tmp_name = path.as_os_str().to_owned();
    tmp_name.push(".tmp");
    let tmp = PathBuf::from(tmp_name);
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_tensor(path: &Path, tensor: &Tensor, meta: &TensorMeta) -> Result<()> {
    write_atomic(path, &tensor.to_bytes())?;
    let mut json = serde_json::to_vec_pretty(meta)?;
    json.push(b'\n');
    write_atomic(&sidecar_path(path), &json)
}

pub fn read_tensor(path: &Path) -> Result<Tensor> {
    Tensor::from_bytes(&fs::read(path)?, path)
}

pub fn read_tensor_meta(path: &Path) -> Result<TensorMeta> {
    let sidecar = sidecar_path(path);
    let bytes = fs::read(&sidecar)
        .map_err(|e| Error::TensorFormat { path: path.to_path_buf(), reason: format!("sidecar {}: {e}", sidecar.display()) })?;
    Ok(serde_json::from_slice(&bytes)?)
}

/// Heatmap as an `H × W × C` tensor plus its layout sidecar.
pub fn heatmap_to_tensor(heatmap: &AcousticHeatmap) -> Result<(Tensor, TensorMeta)> {
    let (h, w) = heatmap.mask.shape();
    let tensor = Tensor::new(vec![h, w, heatmap.num_channels()], heatmap.to_hwc())?;
    let meta = TensorMeta {
        kind: "heatmap".into(),
        layout: heatmap.layout.clone(),
        channel_names: heatmap.layout.iter().map(ChannelKey::label).collect(),
        units: heatmap.layout.iter().map(|k| k.param.unit().to_string()).collect(),
        provenance: BTreeMap::new(),
    };
    Ok((tensor, meta))
}

/// Inverse of [`heatmap_to_tensor`]. The mask is recovered as the pixels
/// where every valid channel is finite.
pub fn heatmap_from_tensor(tensor: &Tensor, layout: Vec<ChannelKey>) -> Result<AcousticHeatmap> {
    let &[h, w, c] = tensor.shape() else {
        return Err(Error::ShapeMismatch(format!("heatmap tensor of shape {:?}", tensor.shape())));
    };
    if c != layout.len() {
        return Err(Error::ShapeMismatch(format!("{c} channels for a layout of {}", layout.len())));
    }
    let data = tensor.data();
    let valid: Vec<bool> = (0..c).map(|k| (0..h * w).any(|p| data[p * c + k].is_finite())).collect();
    let any_valid = valid.iter().any(|&v| v);
    let mask = Grid::from_fn(h, w, |r, col| {
        let p = r * w + col;
        any_valid && (0..c).filter(|&k| valid[k]).all(|k| data[p * c + k].is_finite())
    });
    AcousticHeatmap::from_hwc(data, mask, layout)
}

pub fn write_heatmap(path: &Path, heatmap: &AcousticHeatmap, kind: &str, provenance: BTreeMap<String, String>) -> Result<()> {
    let (tensor, mut meta) = heatmap_to_tensor(heatmap)?;
    meta.kind = kind.to_string();
    meta.provenance = provenance;
    write_tensor(path, &tensor, &meta)
}

pub fn read_heatmap(path: &Path) -> Result<AcousticHeatmap> {
    let meta = read_tensor_meta(path)?;
    if meta.layout.is_empty() {
        return Err(Error::TensorFormat { path: path.to_path_buf(), reason: "sidecar has no channel layout".into() });
    }
    heatmap_from_tensor(&read_tensor(path)?, meta.layout)
}
