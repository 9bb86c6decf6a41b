use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Energy ratios are clamped to ±60 dB so degenerate splits stay finite.
pub const RATIO_CLAMP_DB: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EnergyRatio {
    /// Energy in [onset, onset + 50 ms) over the energy after it.
    C50,
    /// Energy in [onset − 0.5 ms, onset + 2.5 ms] over everything else.
    Drr,
}

pub fn energy_ratio(signal: &[f64], sample_rate: u32, onset: usize, kind: EnergyRatio) -> Result<f64> {
    if onset >= signal.len() {
        return Err(Error::InvalidArgument(format!("onset {onset} outside signal of {} samples", signal.len())));
    }
    let fs = sample_rate as f64;
    let energy = |s: &[f64]| s.iter().map(|v| v * v).sum::<f64>();
    let (useful, rest) = match kind {
        EnergyRatio::C50 => {
            let split = (onset + (0.050 * fs).round() as usize).min(signal.len());
            (energy(&signal[onset..split]), energy(&signal[split..]))
        }
        EnergyRatio::Drr => {
            let lo = onset.saturating_sub((0.0005 * fs).round() as usize);
            let hi = (onset + (0.0025 * fs).round() as usize + 1).min(signal.len());
            (energy(&signal[lo..hi]), energy(&signal[..lo]) + energy(&signal[hi..]))
        }
    };
    if useful <= 0.0 && rest <= 0.0 {
        return Err(Error::NoEnergy);
    }
    let db = if rest <= 0.0 {
        RATIO_CLAMP_DB
    } else if useful <= 0.0 {
        -RATIO_CLAMP_DB
    } else {
        10.0 * (useful / rest).log10()
    };
    Ok(db.clamp(-RATIO_CLAMP_DB, RATIO_CLAMP_DB))
}
