//! `split`: train/test assignment by scene or by receiver.

use acousmap_core::dataset::split_dataset;

use crate::error::Result;
use crate::run::{Ctx, StageOutput};

pub(crate) fn run(ctx: &mut Ctx<'_>) -> Result<StageOutput> {
    match ctx.config.split {
        Some(mode) => {
            *ctx.manifest = split_dataset(ctx.manifest, mode, ctx.config.seed)?;
            log::info!("split: {mode:?}");
        }
        None => log::info!("split: disabled, every scene is evaluated"),
    }
    Ok(StageOutput::default())
}
