use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::SAMPLE_RATE;

pub const MEL_BINS: usize = 128;
pub const MEL_FRAMES: usize = 128;
pub const MEL_HOP: usize = 188;
pub const MEL_N_FFT: usize = 2048;
/// Dynamic range kept below the loudest bin.
pub const MEL_DYNAMIC_RANGE_DB: f64 = 80.0;
/// Level of an all-silent input (power floor 1e-10).
pub const MEL_SILENCE_DB: f64 = -100.0;

const POWER_FLOOR: f64 = 1e-10;

/// Log-power mel spectrogram, `MEL_FRAMES` frames by `MEL_BINS` bins.
#[derive(Debug, Clone, PartialEq)]
pub struct MelSpectrogram {
    data: Vec<f32>,
}

impl MelSpectrogram {
    pub fn get(&self, frame: usize, bin: usize) -> f32 {
        self.data[frame * MEL_BINS + bin]
    }

    /// Row-major `[frame][bin]`.
    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub fn shape(&self) -> (usize, usize) {
        (MEL_FRAMES, MEL_BINS)
    }
}

fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Reusable STFT plan and triangular (HTK) mel filters.
pub struct MelFrontend {
    fft: Arc<dyn Fft<f64>>,
    window: Vec<f64>,
    filters: Vec<(usize, Vec<f64>)>,
}

impl Default for MelFrontend {
    fn default() -> Self {
        Self::new()
    }
}

impl MelFrontend {
    pub fn new() -> Self {
        let fft = FftPlanner::new().plan_fft_forward(MEL_N_FFT);
        let window = (0..MEL_N_FFT)
            .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / MEL_N_FFT as f64).cos())
            .collect();
        Self { fft, window, filters: Self::filters() }
    }

    /// Center frequency of every mel bin, in Hz.
    pub fn bin_centers_hz() -> Vec<f64> {
        let top = hz_to_mel(SAMPLE_RATE as f64 / 2.0);
        (1..=MEL_BINS).map(|i| mel_to_hz(top * i as f64 / (MEL_BINS + 1) as f64)).collect()
    }

    fn filters() -> Vec<(usize, Vec<f64>)> {
        let top = hz_to_mel(SAMPLE_RATE as f64 / 2.0);
        let edges: Vec<f64> = (0..MEL_BINS + 2).map(|i| mel_to_hz(top * i as f64 / (MEL_BINS + 1) as f64)).collect();
        let bin_hz = SAMPLE_RATE as f64 / MEL_N_FFT as f64;
        (0..MEL_BINS)
            .map(|m| {
                let (left, center, right) = (edges[m], edges[m + 1], edges[m + 2]);
                let first = (left / bin_hz).floor() as usize;
                let last = ((right / bin_hz).ceil() as usize).min(MEL_N_FFT / 2);
                let weights = (first..=last)
                    .map(|k| {
                        let f = k as f64 * bin_hz;
                        if f > left && f < center {
                            (f - left) / (center - left)
                        } else if f >= center && f < right {
                            (right - f) / (right - center)
                        } else {
                            0.0
                        }
                    })
                    .collect();
                (first, weights)
            })
            .collect()
    }

    /// Brings any mono signal to exactly one second at 24 kHz.
    fn condition(signal: &[f64], sample_rate: u32) -> Vec<f64> {
        let n = SAMPLE_RATE as usize;
        let mut out = vec![0.0; n];
        if signal.is_empty() {
            return out;
        }
        if sample_rate == SAMPLE_RATE {
            let m = signal.len().min(n);
            out[..m].copy_from_slice(&signal[..m]);
        } else {
            // linear interpolation resampling
            let ratio = sample_rate as f64 / SAMPLE_RATE as f64;
            for (i, o) in out.iter_mut().enumerate() {
                let pos = i as f64 * ratio;
                let j = pos.floor() as usize;
                if j + 1 < signal.len() {
                    let frac = pos - j as f64;
                    *o = signal[j] * (1.0 - frac) + signal[j + 1] * frac;
                } else if j < signal.len() {
                    *o = signal[j];
                }
            }
        }
        out
    }

    pub fn compute(&self, signal: &[f64], sample_rate: u32) -> MelSpectrogram {
        let x = Self::condition(signal, sample_rate);
        // centered frames with zero padding: 1 + 24000 / 188 = 128 frames
        let pad = MEL_N_FFT / 2;
        let mut power = vec![0.0f64; MEL_FRAMES * MEL_BINS];
        let mut buf = vec![Complex64::new(0.0, 0.0); MEL_N_FFT];
        for frame in 0..MEL_FRAMES {
            let start = (frame * MEL_HOP) as isize - pad as isize;
            for (i, b) in buf.iter_mut().enumerate() {
                let idx = start + i as isize;
                let s = if idx >= 0 && (idx as usize) < x.len() { x[idx as usize] } else { 0.0 };
                *b = Complex64::new(s * self.window[i], 0.0);
            }
            self.fft.process(&mut buf);
            for (m, (first, weights)) in self.filters.iter().enumerate() {
                power[frame * MEL_BINS + m] =
                    weights.iter().enumerate().map(|(k, w)| w * buf[first + k].norm_sqr()).sum();
            }
        }
        let db: Vec<f64> = power.iter().map(|&p| 10.0 * p.max(POWER_FLOOR).log10()).collect();
        let top = db.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let floor = top - MEL_DYNAMIC_RANGE_DB;
        MelSpectrogram { data: db.into_iter().map(|v| v.max(floor) as f32).collect() }
    }
}

/// Log-magnitude mel spectrogram of a mono RIR (128 frames × 128 bins).
pub fn mel_spectrogram(signal: &[f64], sample_rate: u32) -> MelSpectrogram {
    MelFrontend::new().compute(signal, sample_rate)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn silence_is_constant_floor() {
        let s = mel_spectrogram(&[0.0; 100], SAMPLE_RATE);
        assert_eq!(s.shape(), (128, 128));
        assert_eq!(s.as_slice().len(), 128 * 128);
        assert!(s.as_slice().iter().all(|&v| v == MEL_SILENCE_DB as f32));
    }

    #[test]
    fn shape_is_fixed_for_any_length() {
        for len in [1usize, 500, 24000, 50000] {
            let x: Vec<f64> = (0..len).map(|i| ((i * 7919) % 13) as f64 - 6.0).collect();
            let s = mel_spectrogram(&x, SAMPLE_RATE);
            assert_eq!(s.as_slice().len(), MEL_FRAMES * MEL_BINS);
            assert!(s.as_slice().iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn tone_forms_ridge_at_its_mel_bin() {
        // Oracle: HTK mel points spaced evenly from 0 to 12 kHz; the bin whose
        // center is nearest to 1 kHz.
        let top = 2595.0 * (1.0f64 + 12000.0 / 700.0).log10();
        let expected = (0..128)
            .map(|i| 700.0 * (10f64.powf(top * (i + 1) as f64 / 129.0 / 2595.0) - 1.0))
            .enumerate()
            .min_by(|a, b| (a.1 - 1000.0).abs().total_cmp(&(b.1 - 1000.0).abs()))
            .unwrap()
            .0;
        let x: Vec<f64> = (0..24000).map(|i| (2.0 * std::f64::consts::PI * 1000.0 * i as f64 / 24000.0).sin()).collect();
        let s = mel_spectrogram(&x, SAMPLE_RATE);
        for frame in 2..126 {
            let argmax = (0..128).max_by(|&a, &b| s.get(frame, a).total_cmp(&s.get(frame, b))).unwrap();
            assert_eq!(argmax, expected, "frame {frame}");
        }
    }

    #[test]
    fn other_rates_are_resampled() {
        let x: Vec<f64> = (0..48000).map(|i| (2.0 * std::f64::consts::PI * 1000.0 * i as f64 / 48000.0).sin()).collect();
        let s = mel_spectrogram(&x, 48000);
        let y: Vec<f64> = (0..24000).map(|i| (2.0 * std::f64::consts::PI * 1000.0 * i as f64 / 24000.0).sin()).collect();
        let t = mel_spectrogram(&y, SAMPLE_RATE);
        let peak = |m: &MelSpectrogram| (0..128).max_by(|&a, &b| m.get(64, a).total_cmp(&m.get(64, b))).unwrap();
        assert_eq!(peak(&s), peak(&t));
    }
}
