use crate::{Error, Result};

/// Energy window for onset detection: 0.5 ms, at least one sample.
pub fn onset_window_len(sample_rate: u32) -> usize {
    ((0.0005 * sample_rate as f64).round() as usize).max(1)
}

/// Direct-sound onset: the sample where short-window energy rises the most.
///
/// The energy of the window ending at `n` is compared with the energy of the
/// preceding, non-overlapping window. Ties resolve to the earliest index.
pub fn find_direct_onset(signal: &[f64], sample_rate: u32) -> Result<usize> {
    let w = onset_window_len(sample_rate);
    let mut prefix = Vec::with_capacity(signal.len() + 1);
    prefix.push(0.0f64);
    let mut acc = 0.0;
    for &x in signal {
        acc += x * x;
        prefix.push(acc);
    }
    if !(acc > 0.0) {
        return Err(Error::NoEnergy);
    }
    // window energy of samples (end - w, end]
    let window = |end: isize| -> f64 {
        if end < 0 {
            return 0.0;
        }
        let hi = (end + 1) as usize;
        let lo = (end + 1 - w as isize).max(0) as usize;
        prefix[hi] - prefix[lo]
    };
    let mut best = (0usize, f64::NEG_INFINITY);
    for n in 0..signal.len() {
        let rise = window(n as isize) - window(n as isize - w as isize);
        if rise > best.1 {
            best = (n, rise);
        }
    }
    Ok(best.0)
}
