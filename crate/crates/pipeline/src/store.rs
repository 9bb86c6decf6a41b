//! Artifact files and verified access to them.
//!
//! Pair RIRs are not stored: every pair is a pure function of the scene and
//! the recorded simulator config, so [`SceneRirs`] resynthesizes on demand.
//! Only the reference RIRs used as model input are written out.

use std::path::Path;
use std::sync::{Arc, Mutex};

use acousmap_core::baselines::RirSource;
use acousmap_core::dataset::{heatmap_from_tensor, read_tensor_meta, source_key, FileRef, SceneRecord, Tensor, TensorMeta};
use acousmap_core::heatmap::AcousticHeatmap;
use acousmap_core::rng::derive_seed;
use acousmap_core::scene::{rasterize_floormap, Floormap, Scene};
use acousmap_core::sim::{SceneSimulator, SimConfig};
use acousmap_core::RoomImpulseResponse;
use serde::{Deserialize, Serialize};

use crate::config::ScenesConfig;
use crate::error::{PipelineError, Result};

pub const SCENE_FILE_VERSION: u32 = 1;

/// One generated scene with the reference receiver chosen for each source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneFile {
    pub version: u32,
    pub id: String,
    pub scene: Scene,
    /// `(source, reference receiver)` pairs, one per source.
    pub references: Vec<(usize, usize)>,
}

impl SceneFile {
    pub fn reference_for(&self, source: usize) -> Option<usize> {
        self.references.iter().find(|(s, _)| *s == source).map(|&(_, r)| r)
    }

    pub fn floormap(&self, cfg: &ScenesConfig, master_seed: u64) -> Result<Floormap> {
        Ok(rasterize_floormap(&self.scene, cfg.slice_mode, cfg.map_area_m, derive_seed(master_seed, &["floormap", &self.id]))?)
    }

    pub fn position(&self, receiver: usize) -> [f64; 2] {
        let p = self.scene.receivers[receiver];
        [p.x, p.y]
    }
}

/// What the simulate stage recorded for one scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairsFile {
    pub version: u32,
    pub scene_id: String,
    /// Effective simulator config; resynthesis uses exactly this.
    pub sim_config: SimConfig,
    pub length: usize,
    pub num_pairs: usize,
}

/// Reads a recorded file after checking its hash.
pub fn read_verified(root: &Path, file: &FileRef) -> Result<Vec<u8>> {
    let bytes = std::fs::read(file.resolve(root)).map_err(|_| PipelineError::Integrity { path: file.path.clone() })?;
    if acousmap_core::dataset::sha256_hex(&bytes) != file.sha256 {
        return Err(PipelineError::Integrity { path: file.path.clone() });
    }
    Ok(bytes)
}

pub fn scene_file_ref<'a>(record: &'a SceneRecord, key: &str, stage: &'static str) -> Result<&'a FileRef> {
    record.file(key).ok_or(PipelineError::Invalid(format!(
        "scene {} has no `{key}` artifact; run `acousmap {stage}`",
        record.id
    )))
}

pub fn read_json<T: serde::de::DeserializeOwned>(root: &Path, file: &FileRef) -> Result<T> {
    Ok(serde_json::from_slice(&read_verified(root, file)?)?)
}

pub fn load_scene(root: &Path, record: &SceneRecord) -> Result<SceneFile> {
    read_json(root, scene_file_ref(record, "scene", "gen-scenes")?)
}

/// Tensor plus sidecar; both must match their recorded hashes.
pub fn read_tensor_verified(root: &Path, record: &SceneRecord, key: &str, stage: &'static str) -> Result<(Tensor, TensorMeta)> {
    let file = scene_file_ref(record, key, stage)?;
    let meta_file = scene_file_ref(record, &format!("{key}.json"), stage)?;
    let tensor = Tensor::from_bytes(&read_verified(root, file)?, &file.resolve(root))?;
    read_verified(root, meta_file)?;
    let meta = read_tensor_meta(&file.resolve(root))?;
    Ok((tensor, meta))
}

pub fn read_heatmap_verified(root: &Path, record: &SceneRecord, key: &str, stage: &'static str) -> Result<AcousticHeatmap> {
    let (tensor, meta) = read_tensor_verified(root, record, key, stage)?;
    Ok(heatmap_from_tensor(&tensor, meta.layout)?)
}

/// Records a tensor and its sidecar under `key` and `key.json`.
pub fn record_tensor(root: &Path, record: &mut SceneRecord, key: &str, rel: &str) -> Result<()> {
    record.files.insert(key.to_string(), FileRef::hash(root, rel)?);
    record.files.insert(format!("{key}.json"), FileRef::hash(root, &format!("{rel}.json"))?);
    Ok(())
}

/// Reference RIR of `source`, as written by `simulate`.
pub fn read_reference(root: &Path, record: &SceneRecord, source: usize) -> Result<RoomImpulseResponse> {
    let file = scene_file_ref(record, &source_key("ref", source), "simulate")?;
    read_verified(root, file)?;
    Ok(RoomImpulseResponse::read_wav(file.resolve(root))?)
}

/// RIRs of one scene, resynthesized from the recorded simulator config.
pub struct SceneRirs {
    pub scene: SceneFile,
    pairs_file: PairsFile,
    sim: SceneSimulator,
}

impl SceneRirs {
    pub fn open(root: &Path, record: &SceneRecord) -> Result<Self> {
        let scene = load_scene(root, record)?;
        let pairs_file: PairsFile = read_json(root, scene_file_ref(record, "rirs", "simulate")?)?;
        let sim = SceneSimulator::new(&scene.scene, &pairs_file.sim_config)?;
        Ok(Self { scene, pairs_file, sim })
    }

    pub fn sample_rate(&self) -> u32 {
        self.pairs_file.sim_config.sample_rate
    }

    /// Every (source, receiver) pair of the scene.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.sim.pairs()
    }

    pub fn rir(&self, source: usize, receiver: usize) -> Result<RoomImpulseResponse> {
        Ok(self.sim.rir(source, receiver)?)
    }
}

/// Receivers whose RIRs a baseline may average: the training side of a
/// receiver split, every receiver otherwise.
pub fn pool_receivers(record: &SceneRecord) -> Vec<bool> {
    match &record.receiver_split {
        Some(p) => {
            let mut keep = vec![false; record.num_receivers];
            for &r in &p.train {
                keep[r] = true;
            }
            keep
        }
        None => vec![true; record.num_receivers],
    }
}

/// Pairs of one scene, limited to the pool receivers.
pub struct ScenePool<'a> {
    rirs: &'a SceneRirs,
    pairs: Vec<(usize, usize)>,
}

impl<'a> ScenePool<'a> {
    pub fn new(rirs: &'a SceneRirs, record: &SceneRecord) -> Self {
        let keep = pool_receivers(record);
        Self { rirs, pairs: rirs.pairs().into_iter().filter(|&(_, r)| keep[r]).collect() }
    }
}

impl RirSource for ScenePool<'_> {
    fn len(&self) -> usize {
        self.pairs.len()
    }

    fn load(&self, index: usize) -> acousmap_core::Result<RoomImpulseResponse> {
        let (s, r) = self.pairs[index];
        self.rirs.rir(s, r).map_err(|e| acousmap_core::Error::InvalidArgument(e.to_string()))
    }
}

/// Pool pairs of several scenes. Scenes are opened on demand and one at a
/// time, so sorted access stays cheap in memory.
pub struct DatasetPool {
    root: std::path::PathBuf,
    records: Vec<SceneRecord>,
    /// (scene index, source, receiver)
    pairs: Vec<(usize, usize, usize)>,
    open: Mutex<Option<(usize, Arc<SceneRirs>)>>,
}

impl DatasetPool {
    pub fn new(root: &Path, records: Vec<SceneRecord>) -> Self {
        let mut pairs = Vec::new();
        for (i, rec) in records.iter().enumerate() {
            let keep = pool_receivers(rec);
            for &s in &rec.sources {
                pairs.extend((0..rec.num_receivers).filter(|&r| r != s && keep[r]).map(|r| (i, s, r)));
            }
        }
        Self { root: root.to_path_buf(), records, pairs, open: Mutex::new(None) }
    }

    fn scene(&self, index: usize) -> Result<Arc<SceneRirs>> {
        let mut slot = self.open.lock().expect("pool lock");
        if let Some((i, rirs)) = slot.as_ref() {
            if *i == index {
                return Ok(Arc::clone(rirs));
            }
        }
        let rirs = Arc::new(SceneRirs::open(&self.root, &self.records[index])?);
        *slot = Some((index, Arc::clone(&rirs)));
        Ok(rirs)
    }
}

impl RirSource for DatasetPool {
    fn len(&self) -> usize {
        self.pairs.len()
    }

    fn load(&self, index: usize) -> acousmap_core::Result<RoomImpulseResponse> {
        let (scene, s, r) = self.pairs[index];
        let to_core = |e: PipelineError| acousmap_core::Error::InvalidArgument(e.to_string());
        self.scene(scene).map_err(to_core)?.rir(s, r).map_err(to_core)
    }
}
