//! `simulate`: records the simulator config per scene and writes the
//! reference RIRs.

use acousmap_core::dataset::{source_key, FileRef};
use acousmap_core::heatmap::TaskMode;
use acousmap_core::rng::derive_seed;
use acousmap_core::sim::{SceneSimulator, SimConfig};
use acousmap_core::ChannelLayout;
use rayon::prelude::*;

use super::{ensure_parent, write_json};
use crate::config::PipelineConfig;
use crate::error::Result;
use crate::run::{Ctx, StageOutput};
use crate::store::{load_scene, PairsFile};

pub const PAIRS_FILE_VERSION: u32 = 1;

/// The simulator config actually used: layout and seed follow the task
/// mode and the master seed.
pub fn effective_sim_config(config: &PipelineConfig) -> SimConfig {
    let mut sim = config.simulation.clone();
    sim.layout = match config.task_mode {
        TaskMode::Omni => ChannelLayout::Mono,
        TaskMode::Directional => ChannelLayout::Ambisonic2,
    };
    sim.rng_seed = derive_seed(config.seed, &["simulation"]);
    sim
}

pub(crate) fn run(ctx: &mut Ctx<'_>) -> Result<StageOutput> {
    let sim_config = effective_sim_config(ctx.config);
    let root = ctx.root;
    let written: Vec<Vec<(String, String)>> = ctx
        .manifest
        .scenes
        .par_iter()
        .map(|record| {
            let scene = load_scene(root, record)?;
            let sim = SceneSimulator::new(&scene.scene, &sim_config)?;
            let dir = format!("rirs/{}", record.id);
            let pairs = PairsFile {
                version: PAIRS_FILE_VERSION,
                scene_id: record.id.clone(),
                sim_config: sim_config.clone(),
                length: sim.length(),
                num_pairs: sim.pairs().len(),
            };
            let mut files = vec![("rirs".to_string(), format!("{dir}/pairs.json"))];
            write_json(root, &files[0].1, &pairs)?;
            for &(s, r) in &scene.references {
                let rel = format!("{dir}/ref_{s:04}.wav");
                sim.rir(s, r)?.write_wav(ensure_parent(root, &rel)?)?;
                files.push((source_key("ref", s), rel));
            }
            Ok(files)
        })
        .collect::<Result<_>>()?;
    for (record, files) in ctx.manifest.scenes.iter_mut().zip(written) {
        for (key, rel) in files {
            record.files.insert(key, FileRef::hash(root, &rel)?);
        }
    }
    log::info!("simulate: {} scenes, RIR length {:.2} s max", ctx.manifest.scenes.len(), sim_config.max_duration_s);
    Ok(StageOutput::default())
}
