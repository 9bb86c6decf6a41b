use crate::{Error, Result};

/// Value used where the remaining energy is exactly zero.
pub const EDC_FLOOR_DB: f64 = -300.0;

/// Schroeder backward-integrated energy, in dB relative to the total.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyDecayCurve {
    values_db: Vec<f64>,
    sample_rate: u32,
}

impl EnergyDecayCurve {
    /// Wraps precomputed dB values, e.g. synthetic curves for fitting tests.
    pub fn from_db(values_db: Vec<f64>, sample_rate: u32) -> Self {
        Self { values_db, sample_rate }
    }

    pub fn values_db(&self) -> &[f64] {
        &self.values_db
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.values_db.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values_db.is_empty()
    }
}

pub fn schroeder_edc(signal: &[f64], sample_rate: u32) -> Result<EnergyDecayCurve> {
    let mut remaining = vec![0.0f64; signal.len()];
    let mut acc = 0.0f64;
    for (r, &x) in remaining.iter_mut().zip(signal).rev() {
        acc += x * x;
        *r = acc;
    }
    let total = acc;
    if !(total > 0.0) {
        return Err(Error::NoEnergy);
    }
    let values_db = remaining
        .into_iter()
        .map(|e| if e > 0.0 { (10.0 * (e / total).log10()).max(EDC_FLOOR_DB) } else { EDC_FLOOR_DB })
        .collect();
    Ok(EnergyDecayCurve { values_db, sample_rate })
}

/// Fit ranges for decay times. Both extrapolate the fitted slope to 60 dB.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DecayFit {
    /// −5 to −35 dB, ×2.
    T30,
    /// 0 to −10 dB, ×6.
    Edt,
    Custom { upper_db: f64, lower_db: f64 },
}

impl DecayFit {
    pub fn range_db(self) -> (f64, f64) {
        match self {
            DecayFit::T30 => (-5.0, -35.0),
            DecayFit::Edt => (0.0, -10.0),
            DecayFit::Custom { upper_db, lower_db } => (upper_db, lower_db),
        }
    }

    pub fn multiplier(self) -> f64 {
        let (hi, lo) = self.range_db();
        60.0 / (hi - lo)
    }
}

/// Least-squares line over the fit range, extrapolated to a 60 dB decay.
///
/// `None` when the curve never reaches the lower bound of the range or the
/// fitted slope is not a decay.
pub fn decay_time_from_edc(edc: &EnergyDecayCurve, fit: DecayFit) -> Option<f64> {
    let values = edc.values_db();
    fit_decay(values.len(), edc.sample_rate(), |i| values[i], fit)
}

/// Backward-integrated energy without the dB conversion; levels are
/// computed on demand with the same formula as [`schroeder_edc`].
#[derive(Debug, Clone)]
pub struct LazyEdc {
    remaining: Vec<f64>,
    total: f64,
    sample_rate: u32,
}

impl LazyEdc {
    pub fn new(signal: &[f64], sample_rate: u32) -> Result<Self> {
        let mut remaining = vec![0.0f64; signal.len()];
        let mut acc = 0.0f64;
        for (r, &x) in remaining.iter_mut().zip(signal).rev() {
            acc += x * x;
            *r = acc;
        }
        if !(acc > 0.0) {
            return Err(Error::NoEnergy);
        }
        Ok(Self { remaining, total: acc, sample_rate })
    }

    pub fn db(&self, i: usize) -> f64 {
        let e = self.remaining[i];
        if e > 0.0 { (10.0 * (e / self.total).log10()).max(EDC_FLOOR_DB) } else { EDC_FLOOR_DB }
    }

    pub fn decay_time(&self, fit: DecayFit) -> Option<f64> {
        fit_decay(self.remaining.len(), self.sample_rate, |i| self.db(i), fit)
    }
}

/// First index in `lo..hi` where the non-increasing `db` drops to `pred`.
fn first_where(mut lo: usize, mut hi: usize, pred: impl Fn(usize) -> bool) -> usize {
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if pred(mid) { hi = mid } else { lo = mid + 1 }
    }
    lo
}

fn fit_decay(len: usize, sample_rate: u32, db: impl Fn(usize) -> f64, fit: DecayFit) -> Option<f64> {
    let (upper, lower) = fit.range_db();
    // the curve is non-increasing, so the fit region is one contiguous run
    if len == 0 || db(len - 1) > lower {
        return None;
    }
    let fs = sample_rate as f64;
    let start = first_where(0, len, |i| db(i) <= upper);
    if start == len {
        return None;
    }
    let end = first_where(start, len, |i| db(i) < lower);
    if end - start < 2 {
        return None;
    }
    let n = (end - start) as f64;
    let t_mean = (start + end - 1) as f64 / 2.0 / fs;
    let ys: Vec<f64> = (start..end).map(&db).collect();
    let y_mean = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, &y) in ys.iter().enumerate() {
        let dt = (start + i) as f64 / fs - t_mean;
        sxy += dt * (y - y_mean);
        sxx += dt * dt;
    }
    let slope = sxy / sxx;
    if !(slope < 0.0) {
        return None;
    }
    let time_for_range = (upper - lower) / -slope;
    Some(time_for_range * fit.multiplier())
}
