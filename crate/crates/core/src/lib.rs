//! Acoustic heatmap toolkit.
//!
//! Generates multi-room shoebox scenes, simulates room impulse responses for
//! them, extracts ISO 3382 style parameters (C50, DRR, T30, EDT) at every
//! receiver and turns those sparse measurements into dense 128×128 heatmap
//! labels. The same crate assembles the matching model input features, runs
//! the algorithmic baselines and scores predictions.
//!
//! Module map:
//!
//! - [`analysis`]: filterbank, energy decay, onset, energy ratios, mel spectrogram
//! - [`ambisonics`]: 2nd-order ACN/SN3D encoding, z-rotation, max-rE beamforming
//! - [`scene`]: procedural line/grid scenes, materials, receivers, floormaps
//! - [`sim`]: Sabine/Eyring, image sources, hybrid surrogate RIR synthesis
//! - [`heatmap`]: label construction, input features, masked loss, normalization
//! - [`baselines`]: the five reference predictors
//! - [`eval`]: pixelwise errors, masked SSIM, JND rates, reports
//! - [`dataset`]: tensor files, manifests, train/test splits

pub mod ambisonics;
pub mod analysis;
pub mod baselines;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod grid;
pub mod heatmap;
pub mod rir;
pub mod rng;
pub mod scene;
pub mod sim;

pub use error::{Error, Result};
pub use grid::{Grid, MAP_SIZE};
pub use rir::{ChannelLayout, RoomImpulseResponse};

/// Sample rate used throughout the toolkit, in Hz.
pub const SAMPLE_RATE: u32 = 24_000;
