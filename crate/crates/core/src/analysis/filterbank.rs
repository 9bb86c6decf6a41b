use rustfft::num_complex::Complex64;
use std::f64::consts::PI;

use crate::rir::RoomImpulseResponse;
use crate::{Error, Result};

/// Second-order section, `a[0]` normalized to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 3],
}

impl Biquad {
    /// Transposed direct form II, zero initial state.
    pub fn process_in_place(&self, x: &mut [f64]) {
        let [b0, b1, b2] = self.b;
        let [_, a1, a2] = self.a;
        let (mut s1, mut s2) = (0.0, 0.0);
        for v in x.iter_mut() {
            let input = *v;
            let y = b0 * input + s1;
            s1 = b1 * input - a1 * y + s2;
            s2 = b2 * input - a2 * y;
            *v = y;
        }
    }

    fn response(&self, z: Complex64) -> Complex64 {
        let zi = z.inv();
        let num = self.b[0] + self.b[1] * zi + self.b[2] * zi * zi;
        let den = self.a[0] + self.a[1] * zi + self.a[2] * zi * zi;
        num / den
    }
}

/// One octave band: a 4th-order Butterworth band-pass (two sections).
#[derive(Debug, Clone, PartialEq)]
pub struct OctaveBand {
    pub center_hz: f64,
    pub sections: [Biquad; 2],
}

impl OctaveBand {
    pub fn design(center_hz: f64, sample_rate: u32) -> Result<Self> {
        let fs = sample_rate as f64;
        let nyquist = fs / 2.0;
        let lo = center_hz / std::f64::consts::SQRT_2;
        let hi = center_hz * std::f64::consts::SQRT_2;
        if !(lo > 0.0) {
            return Err(Error::BandOutOfRange { edge_hz: lo, nyquist_hz: nyquist });
        }
        if hi >= nyquist {
            return Err(Error::BandOutOfRange { edge_hz: hi, nyquist_hz: nyquist });
        }

        // Prewarped analog edges, Butterworth prototype of order 2, LP->BP,
        // then bilinear transform.
        let fs2 = 2.0 * fs;
        let w1 = fs2 * (PI * lo / fs).tan();
        let w2 = fs2 * (PI * hi / fs).tan();
        let bw = w2 - w1;
        let w0_sq = w1 * w2;
        let proto = Complex64::from_polar(1.0, 3.0 * PI / 4.0);
        let half = proto * (bw / 2.0);
        let disc = (half * half - w0_sq).sqrt();
        let bilinear = |s: Complex64| (fs2 + s) / (fs2 - s);

        let section = |p: Complex64| Biquad { b: [1.0, 0.0, -1.0], a: [1.0, -2.0 * p.re, p.norm_sqr()] };
        let mut sections = [section(bilinear(half + disc)), section(bilinear(half - disc))];

        // Unit gain at the (warped) geometric center.
        let wc = 2.0 * (w0_sq.sqrt() / fs2).atan();
        let z = Complex64::from_polar(1.0, wc);
        let gain = (sections[0].response(z) * sections[1].response(z)).norm();
        for b in sections[0].b.iter_mut() {
            *b /= gain;
        }
        Ok(Self { center_hz, sections })
    }

    /// Single forward pass (not zero phase).
    pub fn filter_forward(&self, x: &mut [f64]) {
        for s in &self.sections {
            s.process_in_place(x);
        }
    }

    /// Forward-backward filtering: zero phase, squared magnitude response.
    pub fn filter_zero_phase(&self, x: &mut [f64]) {
        self.filter_forward(x);
        x.reverse();
        self.filter_forward(x);
        x.reverse();
    }

    /// Magnitude of the single-pass response at `freq_hz`.
    pub fn magnitude(&self, freq_hz: f64, sample_rate: u32) -> f64 {
        let z = Complex64::from_polar(1.0, 2.0 * PI * freq_hz / sample_rate as f64);
        (self.sections[0].response(z) * self.sections[1].response(z)).norm()
    }
}

#[derive(Debug, Clone)]
pub struct OctaveFilterbank {
    sample_rate: u32,
    bands: Vec<OctaveBand>,
}

impl OctaveFilterbank {
    pub fn new(bands_hz: &[f64], sample_rate: u32) -> Result<Self> {
        let bands = bands_hz.iter().map(|&f| OctaveBand::design(f, sample_rate)).collect::<Result<_>>()?;
        Ok(Self { sample_rate, bands })
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn bands(&self) -> &[OctaveBand] {
        &self.bands
    }

    pub fn centers_hz(&self) -> Vec<f64> {
        self.bands.iter().map(|b| b.center_hz).collect()
    }

    /// Zero-phase band split, one signal per band, same length as the input.
    ///
    /// Same arithmetic as [`OctaveBand::filter_zero_phase`] per band, but
    /// all bands and both sections advance in one loop so the independent
    /// recursions overlap.
    pub fn split(&self, signal: &[f64]) -> Vec<Vec<f64>> {
        let mut out: Vec<Vec<f64>> = vec![signal.to_vec(); self.bands.len()];
        let coeffs: Vec<[Biquad; 2]> = self.bands.iter().map(|b| b.sections).collect();
        let n = signal.len();
        let mut run = |indices: &mut dyn Iterator<Item = usize>| {
            let mut state = vec![[0.0f64; 4]; coeffs.len()];
            for i in indices {
                for ((x, c), st) in out.iter_mut().zip(&coeffs).zip(state.iter_mut()) {
                    let mut v = x[i];
                    for (s, sec) in c.iter().enumerate() {
                        let y = sec.b[0] * v + st[2 * s];
                        st[2 * s] = sec.b[1] * v - sec.a[1] * y + st[2 * s + 1];
                        st[2 * s + 1] = sec.b[2] * v - sec.a[2] * y;
                        v = y;
                    }
                    x[i] = v;
                }
            }
        };
        run(&mut (0..n));
        run(&mut (0..n).rev());
        out
    }
}

/// Splits a mono RIR into zero-phase octave bands.
pub fn octave_filterbank(rir: &RoomImpulseResponse, bands_hz: &[f64]) -> Result<Vec<Vec<f64>>> {
    if rir.num_channels() != 1 {
        return Err(Error::InvalidArgument("filterbank expects a mono RIR".into()));
    }
    let bank = OctaveFilterbank::new(bands_hz, rir.sample_rate())?;
    Ok(bank.split(&rir.omni_f64()))
}
