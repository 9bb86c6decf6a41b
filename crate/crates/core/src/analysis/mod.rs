//! Acoustic parameter extraction from room impulse responses.
//!
//! The pipeline per receiver is: octave filterbank, direct-sound onset,
//! Schroeder energy decay curve, line fits for T30/EDT and the C50/DRR energy
//! ratios. Undefined results are `None`, never zero.

mod decay;
mod filterbank;
mod mel;
mod onset;
mod params;
mod ratio;

pub use decay::{decay_time_from_edc, schroeder_edc, DecayFit, EnergyDecayCurve, LazyEdc, EDC_FLOOR_DB};
pub use filterbank::{octave_filterbank, Biquad, OctaveBand, OctaveFilterbank};
pub use mel::{mel_spectrogram, MelFrontend, MelSpectrogram, MEL_BINS, MEL_SILENCE_DB, MEL_FRAMES, MEL_HOP, MEL_N_FFT};
pub use onset::{find_direct_onset, onset_window_len};
pub use params::{extract_param_set, AcousticParams, ParamExtractor, ParamKind, FILTER_DECAY_MARGIN};
pub use ratio::{energy_ratio, EnergyRatio, RATIO_CLAMP_DB};

/// Octave band centers for the omnidirectional task.
pub const OMNI_BANDS_HZ: [f64; 6] = [125.0, 250.0, 500.0, 1000.0, 2000.0, 4000.0];

/// Octave band centers for the directional task.
pub const DIRECTIONAL_BANDS_HZ: [f64; 3] = [500.0, 1000.0, 2000.0];
