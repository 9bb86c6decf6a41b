use crate::grid::Grid;
use crate::{Error, Result};

/// Masked L1 loss: for every channel, the mean absolute difference over the
/// pixels that are in `mask` and finite in `target`; the channel means are
/// summed. Channels without a single such pixel contribute nothing.
pub fn masked_l1_loss(pred: &[Grid<f32>], target: &[Grid<f32>], mask: &Grid<bool>) -> Result<f64> {
    if pred.len() != target.len() {
        return Err(Error::ShapeMismatch(format!("{} vs {} channels", pred.len(), target.len())));
    }
    if let Some((p, _)) = pred.iter().zip(target).find(|(p, t)| !p.same_shape(t) || !p.same_shape(mask)) {
        return Err(Error::ShapeMismatch(format!("channel {:?} vs mask {:?}", p.shape(), mask.shape())));
    }
    if mask.count() == 0 {
        return Err(Error::EmptyMask);
    }
    let mut total = 0.0;
    for (p, t) in pred.iter().zip(target) {
        let (mut sum, mut n) = (0.0f64, 0usize);
        for ((&a, &b), &m) in p.as_slice().iter().zip(t.as_slice()).zip(mask.as_slice()) {
            if m && b.is_finite() {
                sum += (a as f64 - b as f64).abs();
                n += 1;
            }
        }
        if n > 0 {
            total += sum / n as f64;
        }
    }
    Ok(total)
}
