//! Dataset manifest: every artifact of a pipeline run with its content hash.
//!
//! Paths are relative to the manifest's directory so that a dataset can be
//! moved or regenerated elsewhere with an identical manifest hash.

use std::collections::BTreeMap;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::tensor::write_atomic;
use crate::heatmap::TaskMode;
use crate::{Error, Result};

pub const MANIFEST_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut f = fs::File::open(path)?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = f.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

/// A file below the dataset root and its content hash.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileRef {
    /// `/`-separated path relative to the dataset root.
    pub path: String,
    pub sha256: String,
}

impl FileRef {
    /// Hashes `root/rel`.
    pub fn hash(root: &Path, rel: &str) -> Result<Self> {
        Ok(Self { path: rel.to_string(), sha256: sha256_file(&root.join(rel))? })
    }

    pub fn resolve(&self, root: &Path) -> PathBuf {
        root.join(&self.path)
    }

    /// True when the file exists and still has the recorded content.
    pub fn verify(&self, root: &Path) -> Result<bool> {
        let p = self.resolve(root);
        if !p.exists() {
            return Ok(false);
        }
        Ok(sha256_file(&p)? == self.sha256)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Test,
}

/// Receivers of one scene split between training and testing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReceiverPartition {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

impl ReceiverPartition {
    pub fn receivers(&self, split: Split) -> &[usize] {
        match split {
            Split::Train => &self.train,
            Split::Test => &self.test,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SplitMode {
    /// Whole scenes go to one partition.
    Scene { train_fraction: f64 },
    /// Every scene is shared; its receivers are partitioned.
    Receiver { train_fraction: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitInfo {
    #[serde(flatten)]
    pub mode: SplitMode,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneRecord {
    pub id: String,
    /// Receiver indices used as sources.
    pub sources: Vec<usize>,
    pub num_receivers: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<Split>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub receiver_split: Option<ReceiverPartition>,
    /// Artifacts keyed by role, e.g. `scene`, `params`, `label/0012`.
    #[serde(default)]
    pub files: BTreeMap<String, FileRef>,
}

impl SceneRecord {
    pub fn file(&self, key: &str) -> Option<&FileRef> {
        self.files.get(key)
    }

    /// Whether this scene contributes samples to `split`.
    pub fn in_split(&self, split: Split) -> bool {
        match (self.split, &self.receiver_split) {
            (Some(s), _) => s == split,
            (None, Some(_)) => true,
            (None, None) => false,
        }
    }
}

/// Hashes that tie a stage's outputs to what it was computed from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRecord {
    pub input_sha256: String,
    pub output_sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub version: u32,
    pub master_seed: u64,
    pub task_mode: TaskMode,
    pub config_sha256: String,
    pub scenes: Vec<SceneRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<SplitInfo>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalizer: Option<FileRef>,
    /// Dataset-level artifacts (reports, plots) keyed by role.
    #[serde(default)]
    pub files: BTreeMap<String, FileRef>,
    #[serde(default)]
    pub stages: BTreeMap<String, StageRecord>,
}

/// One (scene, source) training or test example.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRef {
    pub scene_id: String,
    pub source: usize,
    pub feature: PathBuf,
    pub label: PathBuf,
}

pub fn source_key(prefix: &str, source: usize) -> String {
    format!("{prefix}/{source:04}")
}

impl DatasetManifest {
    pub fn new(master_seed: u64, task_mode: TaskMode, config_sha256: String) -> Self {
        Self {
            version: MANIFEST_VERSION,
            master_seed,
            task_mode,
            config_sha256,
            scenes: Vec::new(),
            split: None,
            normalizer: None,
            files: BTreeMap::new(),
            stages: BTreeMap::new(),
        }
    }

    /// SHA-256 of the canonical JSON form. File hashes are part of the
    /// manifest, so this covers every referenced file.
    pub fn hash(&self) -> Result<String> {
        Ok(sha256_hex(&serde_json::to_vec(self)?))
    }

    pub fn load(root: &Path) -> Result<Self> {
        let path = root.join(MANIFEST_FILE);
        let m: Self = serde_json::from_slice(&fs::read(&path)?)?;
        if m.version != MANIFEST_VERSION {
            return Err(Error::InvalidArgument(format!("{}: manifest version {} is not {MANIFEST_VERSION}", path.display(), m.version)));
        }
        Ok(m)
    }

    pub fn save(&self, root: &Path) -> Result<()> {
        let mut json = serde_json::to_vec_pretty(self)?;
        json.push(b'\n');
        write_atomic(&root.join(MANIFEST_FILE), &json)
    }

    pub fn scene(&self, id: &str) -> Option<&SceneRecord> {
        self.scenes.iter().find(|s| s.id == id)
    }

    /// Drops every per-scene and dataset-level file whose key starts with
    /// `prefix`.
    pub fn remove_files(&mut self, prefix: &str) {
        for s in &mut self.scenes {
            s.files.retain(|k, _| !k.starts_with(prefix));
        }
        self.files.retain(|k, _| !k.starts_with(prefix));
    }

    /// Recorded files under `root` that are missing or changed.
    pub fn stale_files(&self, root: &Path) -> Result<Vec<String>> {
        let mut out = Vec::new();
        let all = self
            .scenes
            .iter()
            .flat_map(|s| s.files.values())
            .chain(self.files.values())
            .chain(self.normalizer.iter());
        for f in all {
            if !f.verify(root)? {
                out.push(f.path.clone());
            }
        }
        Ok(out)
    }

    /// Samples of a split, with files under `feature_prefix` and
    /// `label_prefix` resolved against `root`. Sources without both files
    /// are skipped.
    pub fn samples(&self, root: &Path, split: Split, feature_prefix: &str, label_prefix: &str) -> Vec<SampleRef> {
        let mut out = Vec::new();
        for s in self.scenes.iter().filter(|s| s.in_split(split)) {
            for &src in &s.sources {
                let (Some(f), Some(l)) = (s.file(&source_key(feature_prefix, src)), s.file(&source_key(label_prefix, src))) else {
                    continue;
                };
                out.push(SampleRef { scene_id: s.id.clone(), source: src, feature: f.resolve(root), label: l.resolve(root) });
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scene(id: &str) -> SceneRecord {
        SceneRecord { id: id.into(), sources: vec![1, 4], num_receivers: 10, split: None, receiver_split: None, files: BTreeMap::new() }
    }

    #[test]
    fn known_digest() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn hash_tracks_file_content() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("a.bin"), b"one").unwrap();
        let mut m = DatasetManifest::new(7, TaskMode::Omni, "cfg".into());
        let mut s = scene("scene_0000");
        s.files.insert("scene".into(), FileRef::hash(dir.path(), "a.bin").unwrap());
        m.scenes.push(s);
        let h1 = m.hash().unwrap();
        assert!(m.stale_files(dir.path()).unwrap().is_empty());

        fs::write(dir.path().join("a.bin"), b"two").unwrap();
        assert_eq!(m.stale_files(dir.path()).unwrap(), vec!["a.bin".to_string()]);
        m.scenes[0].files.insert("scene".into(), FileRef::hash(dir.path(), "a.bin").unwrap());
        assert_ne!(m.hash().unwrap(), h1);
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = DatasetManifest::new(3, TaskMode::Directional, "c".into());
        m.scenes.push(scene("s0"));
        m.split = Some(SplitInfo { mode: SplitMode::Receiver { train_fraction: 0.3 }, seed: 1 });
        m.save(dir.path()).unwrap();
        let back = DatasetManifest::load(dir.path()).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.hash().unwrap(), m.hash().unwrap());
    }

    #[test]
    fn samples_follow_the_split() {
        let root = Path::new("/data");
        let mut m = DatasetManifest::new(0, TaskMode::Omni, String::new());
        for (i, split) in [Split::Train, Split::Test].into_iter().enumerate() {
            let mut s = scene(&format!("s{i}"));
            s.split = Some(split);
            for src in [1, 4] {
                let r = FileRef { path: format!("x/{i}/{src}"), sha256: String::new() };
                s.files.insert(source_key("feature", src), r.clone());
                s.files.insert(source_key("label", src), r);
            }
            m.scenes.push(s);
        }
        m.scenes[1].files.remove(&source_key("label", 4));
        assert_eq!(m.samples(root, Split::Train, "feature", "label").len(), 2);
        let test = m.samples(root, Split::Test, "feature", "label");
        assert_eq!(test.len(), 1);
        assert_eq!(test[0].label, root.join("x/1/1"));
        m.remove_files("label");
        assert!(m.samples(root, Split::Train, "feature", "label").is_empty());
    }
}
