//! `export-golden`: a fixed prediction/target/mask triple and its masked L1
//! loss, so that a training stack in another language can check its loss
//! and tensor reader against this crate.

use std::collections::BTreeMap;

use acousmap_core::dataset::{write_tensor, FileRef, Tensor};
use acousmap_core::heatmap::masked_l1_loss;
use acousmap_core::rng::stream;
use acousmap_core::{Grid, MAP_SIZE};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::params::meta;
use super::{ensure_parent, write_json};
use crate::error::Result;
use crate::run::{Ctx, StageOutput};

pub const GOLDEN_DIR: &str = "golden";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldenLoss {
    pub loss: f64,
    pub channels: usize,
    pub masked_pixels: usize,
    pub seed: u64,
}

fn hwc(maps: &[Grid<f32>]) -> Vec<f32> {
    let c = maps.len();
    let mut out = vec![0.0; MAP_SIZE * MAP_SIZE * c];
    for (k, g) in maps.iter().enumerate() {
        for (p, &v) in g.as_slice().iter().enumerate() {
            out[p * c + k] = v;
        }
    }
    out
}

pub(crate) fn run(ctx: &mut Ctx<'_>) -> Result<StageOutput> {
    let seed = ctx.config.seed;
    let layout = ctx.config.task_mode.layout();
    let c = layout.len();
    let mut rng = stream(seed, &["golden"]);
    let mut draw = |lo: f32, hi: f32| -> Vec<Grid<f32>> {
        (0..c).map(|_| Grid::from_fn(MAP_SIZE, MAP_SIZE, |_, _| rng.random_range(lo..hi))).collect()
    };
    let pred = draw(-1.0, 1.0);
    let target = draw(-1.0, 1.0);
    let mask = Grid::from_fn(MAP_SIZE, MAP_SIZE, |_, _| rng.random_bool(0.7));
    let loss = masked_l1_loss(&pred, &target, &mask)?;

    let provenance = BTreeMap::from([("seed".to_string(), seed.to_string())]);
    let mask_maps = [mask.map(|&m| m as u8 as f32)];
    let tensors = [
        ("pred", Tensor::new(vec![MAP_SIZE, MAP_SIZE, c], hwc(&pred))?, meta("golden_pred", &layout, provenance.clone())),
        ("target", Tensor::new(vec![MAP_SIZE, MAP_SIZE, c], hwc(&target))?, meta("golden_target", &layout, provenance.clone())),
        ("mask", Tensor::new(vec![MAP_SIZE, MAP_SIZE, 1], hwc(&mask_maps))?, meta("golden_mask", &[], provenance)),
    ];
    for (name, tensor, m) in &tensors {
        let rel = format!("{GOLDEN_DIR}/{name}.amap");
        write_tensor(&ensure_parent(ctx.root, &rel)?, tensor, m)?;
        ctx.manifest.files.insert(format!("golden/{name}"), FileRef::hash(ctx.root, &rel)?);
        ctx.manifest.files.insert(format!("golden/{name}.json"), FileRef::hash(ctx.root, &format!("{rel}.json"))?);
    }
    let rel = format!("{GOLDEN_DIR}/loss.json");
    write_json(ctx.root, &rel, &GoldenLoss { loss, channels: c, masked_pixels: mask.count(), seed })?;
    ctx.manifest.files.insert("golden/loss".into(), FileRef::hash(ctx.root, &rel)?);
    Ok(StageOutput::default())
}
