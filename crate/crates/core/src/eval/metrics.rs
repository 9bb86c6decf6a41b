use serde::{Deserialize, Serialize};

use crate::analysis::ParamKind;
use crate::grid::Grid;
use crate::{Error, Result};

/// Decay-time targets below this are excluded from proportional errors.
pub const DECAY_TARGET_GUARD_S: f64 = 1e-3;

/// Just noticeable difference for energy ratios, in dB.
pub const JND_ENERGY_RATIO_DB: f64 = 1.0;

/// Just noticeable difference for decay times, as a fraction.
pub const JND_DECAY_FRACTION: f64 = 0.1;

/// Per-pixel errors of one channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PixelErrors {
    /// Absolute dB error for energy ratios, |Δ| / target for decay times.
    pub errors: Vec<f64>,
    /// Valid pixels skipped because the decay target was below the guard.
    pub guarded: usize,
    /// Valid target pixels without a finite prediction.
    pub missing_prediction: usize,
}

impl PixelErrors {
    pub fn mean(&self) -> Option<f64> {
        (!self.errors.is_empty()).then(|| self.errors.iter().sum::<f64>() / self.errors.len() as f64)
    }
}

/// Errors on the pixels where `mask` is set and the target is finite.
pub fn pixelwise_error(pred: &Grid<f32>, target: &Grid<f32>, mask: &Grid<bool>, kind: ParamKind) -> Result<PixelErrors> {
    if !pred.same_shape(target) || !pred.same_shape(mask) {
        return Err(Error::ShapeMismatch(format!(
            "pred {:?}, target {:?}, mask {:?}",
            pred.shape(),
            target.shape(),
            mask.shape()
        )));
    }
    let mut out = PixelErrors { errors: Vec::new(), guarded: 0, missing_prediction: 0 };
    let mut any = false;
    for ((&p, &t), &m) in pred.as_slice().iter().zip(target.as_slice()).zip(mask.as_slice()) {
        if !m || !t.is_finite() {
            continue;
        }
        any = true;
        if !p.is_finite() {
            out.missing_prediction += 1;
            continue;
        }
        let (p, t) = (p as f64, t as f64);
        if kind.is_energy_ratio() {
            out.errors.push((p - t).abs());
        } else if t < DECAY_TARGET_GUARD_S {
            out.guarded += 1;
        } else {
            out.errors.push((p - t).abs() / t);
        }
    }
    if !any {
        return Err(Error::EmptyMask);
    }
    Ok(out)
}

pub fn jnd_threshold(kind: ParamKind) -> f64 {
    if kind.is_energy_ratio() { JND_ENERGY_RATIO_DB } else { JND_DECAY_FRACTION }
}

/// Fraction of errors strictly below the kind's JND.
pub fn jnd_pass_rate(errors: &[f64], kind: ParamKind) -> Result<f64> {
    if errors.is_empty() {
        return Err(Error::EmptyInput("errors"));
    }
    let limit = jnd_threshold(kind);
    Ok(errors.iter().filter(|&&e| e < limit).count() as f64 / errors.len() as f64)
}
