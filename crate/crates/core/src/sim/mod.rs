//! Desk-scale surrogate room acoustics.
//!
//! Same-room pairs get an image-source early part per octave band; every
//! pair gets a statistical noise tail whose per-band decay follows Eyring's
//! formula for the room(s) involved. Sound reaching another room passes
//! through doorframes: straight through an opening when there is line of
//! sight, otherwise along the shortest door-to-door path with a fixed loss
//! per doorframe. There is no diffraction modelling and scattering
//! coefficients are ignored.

mod formulas;
mod hybrid;
mod ism;

use serde::{Deserialize, Serialize};

pub use formulas::{
    equivalent_absorption_area, mean_absorption, sabine_eyring_t60, t60_from_absorption, T60Formula, SABINE_CONSTANT,
};
pub use hybrid::{synth_scene_rirs, SceneSimulator, DOOR_GAIN};
pub use ism::{image_source_shoebox, image_sources, reflection_gains, BandTrains, ImageSource};

use crate::rir::ChannelLayout;
use crate::{Error, Result, SAMPLE_RATE};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    /// Highest reflection order of the image-source part.
    pub max_order: usize,
    pub speed_of_sound: f64,
    pub sample_rate: u32,
    /// Minimum RIR length in seconds.
    pub tail_duration_s: f64,
    /// Upper bound on the RIR length; reverberant scenes are truncated here.
    pub max_duration_s: f64,
    /// Center of the early/late crossfade, seconds after emission.
    pub crossfade_s: f64,
    pub crossfade_width_s: f64,
    pub layout: ChannelLayout,
    pub rng_seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            max_order: 12,
            speed_of_sound: 343.0,
            sample_rate: SAMPLE_RATE,
            tail_duration_s: 1.5,
            max_duration_s: 2.0,
            crossfade_s: 0.08,
            crossfade_width_s: 0.01,
            layout: ChannelLayout::Mono,
            rng_seed: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tail_duration_s < 1.0 {
            return Err(Error::InvalidArgument("tail duration must be at least 1 s".into()));
        }
        if self.max_duration_s < self.tail_duration_s {
            return Err(Error::InvalidArgument("max duration is shorter than the tail duration".into()));
        }
        if !(self.speed_of_sound > 0.0) || self.sample_rate == 0 {
            return Err(Error::InvalidArgument("speed of sound and sample rate must be positive".into()));
        }
        if !(self.crossfade_width_s > 0.0 && self.crossfade_s > self.crossfade_width_s / 2.0) {
            return Err(Error::InvalidArgument("crossfade must lie after time zero and have positive width".into()));
        }
        Ok(())
    }
}
