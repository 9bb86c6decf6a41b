use serde::{Deserialize, Serialize};

use super::decay::{decay_time_from_edc, schroeder_edc, DecayFit, LazyEdc};
use super::filterbank::OctaveFilterbank;
use super::onset::find_direct_onset;
use super::ratio::{energy_ratio, EnergyRatio};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ParamKind {
    C50,
    Drr,
    T30,
    Edt,
}

impl ParamKind {
    /// Label channel order for the omnidirectional task.
    pub const ALL: [ParamKind; 4] = [ParamKind::C50, ParamKind::Drr, ParamKind::T30, ParamKind::Edt];

    pub fn name(self) -> &'static str {
        match self {
            ParamKind::C50 => "C50",
            ParamKind::Drr => "DRR",
            ParamKind::T30 => "T30",
            ParamKind::Edt => "EDT",
        }
    }

    pub fn unit(self) -> &'static str {
        if self.is_energy_ratio() { "dB" } else { "s" }
    }

    pub fn is_energy_ratio(self) -> bool {
        matches!(self, ParamKind::C50 | ParamKind::Drr)
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name().eq_ignore_ascii_case(name))
    }
}

/// Per-band parameters of one RIR. `None` marks an undefined value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcousticParams {
    pub bands_hz: Vec<f64>,
    pub c50_db: Vec<Option<f64>>,
    pub drr_db: Vec<Option<f64>>,
    pub t30_s: Vec<Option<f64>>,
    pub edt_s: Vec<Option<f64>>,
}

impl AcousticParams {
    pub fn undefined(bands_hz: &[f64]) -> Self {
        let n = bands_hz.len();
        Self {
            bands_hz: bands_hz.to_vec(),
            c50_db: vec![None; n],
            drr_db: vec![None; n],
            t30_s: vec![None; n],
            edt_s: vec![None; n],
        }
    }

    pub fn values(&self, kind: ParamKind) -> &[Option<f64>] {
        match kind {
            ParamKind::C50 => &self.c50_db,
            ParamKind::Drr => &self.drr_db,
            ParamKind::T30 => &self.t30_s,
            ParamKind::Edt => &self.edt_s,
        }
    }

    pub fn get(&self, kind: ParamKind, band: usize) -> Option<f64> {
        self.values(kind)[band]
    }
}

/// Decay estimates closer than this factor to the filterbank's own decay
/// are treated as undefined: they measure the filter, not the room.
pub const FILTER_DECAY_MARGIN: f64 = 1.5;

/// Filterbank plus per-band measurements, reusable across many RIRs.
#[derive(Debug, Clone)]
pub struct ParamExtractor {
    bank: OctaveFilterbank,
    /// Per band (T30, EDT) of the filter's own impulse response.
    filter_decay: Vec<(f64, f64)>,
}

impl ParamExtractor {
    pub fn new(bands_hz: &[f64], sample_rate: u32) -> Result<Self> {
        let bank = OctaveFilterbank::new(bands_hz, sample_rate)?;
        let mut probe = vec![0.0; sample_rate as usize];
        let at = sample_rate as usize / 2;
        probe[at] = 1.0;
        // measured from the impulse, as signals are measured from their onset
        let filter_decay = bank
            .split(&probe)
            .iter()
            .map(|band| {
                let edc = schroeder_edc(&band[at..], sample_rate).ok();
                let fit = |kind| edc.as_ref().and_then(|e| decay_time_from_edc(e, kind)).unwrap_or(0.0);
                (fit(DecayFit::T30), fit(DecayFit::Edt))
            })
            .collect();
        Ok(Self { bank, filter_decay })
    }

    /// Shortest decay times each band can resolve, `(T30, EDT)` in seconds.
    pub fn resolvable_decay(&self) -> Vec<(f64, f64)> {
        self.filter_decay.iter().map(|&(t, e)| (t * FILTER_DECAY_MARGIN, e * FILTER_DECAY_MARGIN)).collect()
    }

    pub fn bands_hz(&self) -> Vec<f64> {
        self.bank.centers_hz()
    }

    /// Measures all parameters of a mono signal.
    ///
    /// The onset is located once on the broadband signal; the zero-phase
    /// filterbank keeps it valid for every band. Decay curves start at the
    /// onset, so the silent propagation delay does not flatten the EDT fit.
    pub fn extract(&self, signal: &[f64]) -> Result<AcousticParams> {
        let fs = self.bank.sample_rate();
        let onset = find_direct_onset(signal, fs)?;
        let mut out = AcousticParams::undefined(&self.bank.centers_hz());
        for (b, band) in self.bank.split(signal).iter().enumerate() {
            let Ok(edc) = LazyEdc::new(&band[onset..], fs) else { continue };
            let (t30_min, edt_min) = self.filter_decay[b];
            out.t30_s[b] = edc.decay_time(DecayFit::T30).filter(|&t| t > t30_min * FILTER_DECAY_MARGIN);
            out.edt_s[b] = edc.decay_time(DecayFit::Edt).filter(|&t| t > edt_min * FILTER_DECAY_MARGIN);
            out.c50_db[b] = energy_ratio(band, fs, onset, EnergyRatio::C50).ok();
            out.drr_db[b] = energy_ratio(band, fs, onset, EnergyRatio::Drr).ok();
        }
        Ok(out)
    }

    /// C50 only, for the directional task.
    pub fn extract_c50(&self, signal: &[f64]) -> Result<Vec<Option<f64>>> {
        let fs = self.bank.sample_rate();
        let onset = find_direct_onset(signal, fs)?;
        Ok(self.bank.split(signal).iter().map(|band| energy_ratio(band, fs, onset, EnergyRatio::C50).ok()).collect())
    }
}

/// Filterbank, onset, EDC, T30, EDT, C50 and DRR for every band.
pub fn extract_param_set(signal: &[f64], sample_rate: u32, bands_hz: &[f64]) -> Result<AcousticParams> {
    ParamExtractor::new(bands_hz, sample_rate)?.extract(signal)
}
