//! On-disk dataset formats: tensor files, the manifest, and train/test
//! splits.

mod manifest;
mod split;
mod tensor;

pub use manifest::{
    sha256_file, sha256_hex, source_key, DatasetManifest, FileRef, ReceiverPartition, SampleRef, SceneRecord, Split,
    SplitInfo, SplitMode, StageRecord, MANIFEST_FILE, MANIFEST_VERSION,
};
pub use split::split_dataset;
pub use tensor::{
    heatmap_from_tensor, heatmap_to_tensor, read_heatmap, read_tensor, read_tensor_meta, sidecar_path, write_atomic,
    write_heatmap, write_tensor, Tensor, TensorMeta, DTYPE_F32_LE, MAX_TENSOR_DIMS, TENSOR_MAGIC, TENSOR_VERSION,
};
