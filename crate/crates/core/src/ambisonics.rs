//! Second-order ambisonics: encoding, rotation about the vertical axis and
//! max-rE beamforming.
//!
//! Channel order is ACN (W, Y, Z, X, V, T, R, S, U), normalization SN3D.
//! Azimuth is measured counter-clockwise from +x, elevation up from the
//! horizontal plane.

use crate::rir::{ChannelLayout, RoomImpulseResponse};
use crate::{Error, Result};

pub const ORDER: usize = 2;
pub const CHANNELS: usize = 9;

/// Ambisonic order of every ACN channel.
pub const ACN_ORDER: [usize; CHANNELS] = [0, 1, 1, 1, 2, 2, 2, 2, 2];

/// Real SN3D spherical harmonics up to order 2, ACN order.
pub fn sh_sn3d(azimuth: f64, elevation: f64) -> [f64; CHANNELS] {
    let s3 = 3f64.sqrt() / 2.0;
    let (sa, ca) = azimuth.sin_cos();
    let (se, ce) = elevation.sin_cos();
    [
        1.0,
        sa * ce,
        se,
        ca * ce,
        s3 * (2.0 * azimuth).sin() * ce * ce,
        s3 * sa * (2.0 * elevation).sin(),
        (3.0 * se * se - 1.0) / 2.0,
        s3 * ca * (2.0 * elevation).sin(),
        s3 * (2.0 * azimuth).cos() * ce * ce,
    ]
}

/// A plane-wave arrival: time, gain and direction seen from the receiver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arrival {
    pub delay_s: f64,
    pub amplitude: f64,
    pub azimuth: f64,
    pub elevation: f64,
}

/// Sums arrivals into 9 ACN/SN3D channels of `len` samples.
///
/// Each arrival lands on the nearest sample; arrivals past the end are dropped.
pub fn encode_ambisonic(arrivals: &[Arrival], len: usize, sample_rate: u32) -> Result<RoomImpulseResponse> {
    let mut channels = vec![vec![0.0f64; len]; CHANNELS];
    accumulate_arrivals(&mut channels, arrivals, sample_rate);
    RoomImpulseResponse::new(
        channels.into_iter().map(|c| c.into_iter().map(|v| v as f32).collect()).collect(),
        sample_rate,
        ChannelLayout::Ambisonic2,
    )
}

/// Adds encoded arrivals into f64 channel buffers.
pub fn accumulate_arrivals(channels: &mut [Vec<f64>], arrivals: &[Arrival], sample_rate: u32) {
    let len = channels.first().map_or(0, |c| c.len());
    for a in arrivals {
        let idx = (a.delay_s * sample_rate as f64).round();
        if idx < 0.0 || idx as usize >= len {
            continue;
        }
        let sh = sh_sn3d(a.azimuth, a.elevation);
        for (ch, y) in channels.iter_mut().zip(sh) {
            ch[idx as usize] += a.amplitude * y;
        }
    }
}

fn require_ambisonic(rir: &RoomImpulseResponse) -> Result<()> {
    if rir.layout() != ChannelLayout::Ambisonic2 {
        return Err(Error::InvalidArgument("expected a 9-channel ambisonic RIR".into()));
    }
    Ok(())
}

/// Rotates the sound field by `angle` radians about the vertical axis.
///
/// A source at azimuth φ appears at φ + angle afterwards. W, Z and R are
/// copied untouched; the remaining (sin mφ, cos mφ) pairs are rotated.
pub fn rotate_azimuth(rir: &RoomImpulseResponse, angle: f64) -> Result<RoomImpulseResponse> {
    require_ambisonic(rir)?;
    if angle == 0.0 {
        return Ok(rir.clone());
    }
    let mut out: Vec<Vec<f32>> = rir.channels().to_vec();
    // (sin index, cos index, m)
    for (si, ci, m) in [(1usize, 3usize, 1.0f64), (5, 7, 1.0), (4, 8, 2.0)] {
        let (s, c) = (m * angle).sin_cos();
        let (sin_ch, cos_ch) = (rir.channel(si), rir.channel(ci));
        for i in 0..rir.len() {
            let (y, x) = (sin_ch[i] as f64, cos_ch[i] as f64);
            out[si][i] = (y * c + x * s) as f32;
            out[ci][i] = (x * c - y * s) as f32;
        }
    }
    RoomImpulseResponse::new(out, rir.sample_rate(), ChannelLayout::Ambisonic2)
}

/// Legendre polynomial P_n(x).
pub fn legendre(n: usize, x: f64) -> f64 {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return p0;
    }
    for k in 1..n {
        let p2 = ((2 * k + 1) as f64 * x * p1 - k as f64 * p0) / (k + 1) as f64;
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// Per-order max-rE gains: P_n(r) with r the largest root of P_{N+1}.
pub fn maxre_gains(order: usize) -> Vec<f64> {
    // scan down from 1 for the first sign change, then bisect
    let f = |x: f64| legendre(order + 1, x);
    let step = 1e-3;
    let mut hi = 1.0;
    let mut lo = hi - step;
    while f(lo) * f(hi) > 0.0 {
        hi = lo;
        lo -= step;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if f(lo) * f(mid) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let r = 0.5 * (lo + hi);
    (0..=order).map(|n| legendre(n, r)).collect()
}

/// Max-rE beam steered to an azimuth in the horizontal plane.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamPattern {
    pub order: usize,
    pub weights: Vec<f64>,
    pub steering_azimuth: f64,
    channel_gains: [f64; CHANNELS],
}

impl BeamPattern {
    pub fn maxre(steering_azimuth: f64) -> Self {
        let weights = maxre_gains(ORDER);
        let sh = sh_sn3d(steering_azimuth, 0.0);
        // (2n+1) turns SN3D products into the P_n(cos γ) series; unit on-axis gain.
        let norm: f64 = weights.iter().enumerate().map(|(n, g)| (2 * n + 1) as f64 * g).sum();
        let mut channel_gains = [0.0; CHANNELS];
        for (acn, gain) in channel_gains.iter_mut().enumerate() {
            let n = ACN_ORDER[acn];
            *gain = (2 * n + 1) as f64 * weights[n] * sh[acn] / norm;
        }
        Self { order: ORDER, weights, steering_azimuth, channel_gains }
    }

    /// Beam response to a unit plane wave from the given direction.
    pub fn response(&self, azimuth: f64, elevation: f64) -> f64 {
        sh_sn3d(azimuth, elevation).iter().zip(&self.channel_gains).map(|(y, g)| y * g).sum()
    }

    pub fn channel_gains(&self) -> &[f64; CHANNELS] {
        &self.channel_gains
    }

    pub fn apply(&self, rir: &RoomImpulseResponse) -> Result<Vec<f64>> {
        require_ambisonic(rir)?;
        let mut out = vec![0.0f64; rir.len()];
        for (ch, &g) in rir.channels().iter().zip(&self.channel_gains) {
            for (o, &s) in out.iter_mut().zip(ch) {
                *o += g * s as f64;
            }
        }
        Ok(out)
    }
}

/// Beamforms an ambisonic RIR to `azimuth` with max-rE weights.
pub fn maxre_beamform(rir: &RoomImpulseResponse, azimuth: f64) -> Result<Vec<f64>> {
    BeamPattern::maxre(azimuth).apply(rir)
}

/// The five static azimuths (0°, 72°, 144°, 216°, 288°) used for directional labels.
pub fn fixed_direction_set() -> [f64; 5] {
    std::array::from_fn(|i| (72.0 * i as f64).to_radians())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn random_field(len: usize, seed: u64) -> RoomImpulseResponse {
        let mut state = seed;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 33) as f64 / (1u64 << 31) as f64) - 1.0
        };
        let chans = (0..CHANNELS).map(|_| (0..len).map(|_| next() as f32).collect()).collect();
        RoomImpulseResponse::new(chans, 24000, ChannelLayout::Ambisonic2).unwrap()
    }

    #[test]
    fn maxre_gains_for_order_two() {
        let g = maxre_gains(2);
        assert!((g[0] - 1.0).abs() < 1e-12);
        assert!((g[1] - (0.6f64).sqrt()).abs() < 1e-12);
        assert!((g[2] - 0.4).abs() < 1e-12);
    }

    #[test]
    fn zero_rotation_is_identity_and_omni_is_fixed() {
        let rir = random_field(64, 1);
        assert_eq!(rotate_azimuth(&rir, 0.0).unwrap(), rir);
        let rot = rotate_azimuth(&rir, 1.234).unwrap();
        assert_eq!(rot.channel(0), rir.channel(0));
        assert_eq!(rot.channel(2), rir.channel(2));
        assert_eq!(rot.channel(6), rir.channel(6));
    }

    #[test]
    fn rotations_compose() {
        let rir = random_field(256, 2);
        let ab = rotate_azimuth(&rotate_azimuth(&rir, 0.4).unwrap(), 1.1).unwrap();
        let direct = rotate_azimuth(&rir, 1.5).unwrap();
        for ch in 0..CHANNELS {
            let num: f64 = ab.channel(ch).iter().zip(direct.channel(ch)).map(|(a, b)| ((a - b) as f64).powi(2)).sum();
            let den: f64 = direct.channel(ch).iter().map(|&b| (b as f64).powi(2)).sum();
            assert!((num / den).sqrt() < 1e-6, "channel {ch}");
        }
    }

    #[test]
    fn rotation_preserves_per_order_energy() {
        let rir = random_field(1000, 3);
        let rot = rotate_azimuth(&rir, 2.2).unwrap();
        for order in 0..=ORDER {
            let e = |r: &RoomImpulseResponse| -> f64 {
                (0..CHANNELS)
                    .filter(|&c| ACN_ORDER[c] == order)
                    .flat_map(|c| r.channel(c).iter().map(|&s| (s as f64).powi(2)).collect::<Vec<_>>())
                    .sum()
            };
            assert!((e(&rot) - e(&rir)).abs() / e(&rir) < 1e-6, "order {order}");
        }
    }

    #[test]
    fn beam_peaks_at_steering_direction() {
        for steer_deg in [0.0f64, 37.0, 144.0, 290.0] {
            let beam = BeamPattern::maxre(steer_deg.to_radians());
            let best = (0..3600)
                .map(|i| i as f64 * 0.1)
                .max_by(|a, b| beam.response(a.to_radians(), 0.0).total_cmp(&beam.response(b.to_radians(), 0.0)))
                .unwrap();
            let diff = ((best - steer_deg + 540.0) % 360.0 - 180.0).abs();
            assert!(diff <= 0.1, "steer {steer_deg}, max at {best}");
            assert!((beam.response(steer_deg.to_radians(), 0.0) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn front_beats_back_for_encoded_arrival() {
        let arrival = Arrival { delay_s: 0.001, amplitude: 1.0, azimuth: 0.0, elevation: 0.0 };
        let rir = encode_ambisonic(&[arrival], 100, 24000).unwrap();
        let front = maxre_beamform(&rir, 0.0).unwrap();
        let back = maxre_beamform(&rir, PI).unwrap();
        let peak = |x: &[f64]| x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(peak(&front) > peak(&back));
        assert!(maxre_beamform(&random_field(10, 0), 0.0).unwrap().len() == 10);
    }

    #[test]
    fn beamforming_is_rotation_equivariant() {
        let rir = random_field(300, 4);
        let theta = 0.9;
        let rotated = rotate_azimuth(&rir, theta).unwrap();
        for az in fixed_direction_set() {
            let a = maxre_beamform(&rotated, az + theta).unwrap();
            let b = maxre_beamform(&rir, az).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn omni_of_encoded_arrival_equals_amplitude_and_encoding_is_linear() {
        let a = Arrival { delay_s: 0.0, amplitude: 0.7, azimuth: 0.0, elevation: 0.0 };
        let b = Arrival { delay_s: 0.0, amplitude: -0.2, azimuth: 1.0, elevation: 0.3 };
        let ea = encode_ambisonic(&[a], 4, 24000).unwrap();
        assert_eq!(ea.channel(0)[0], 0.7);
        let eb = encode_ambisonic(&[b], 4, 24000).unwrap();
        let eab = encode_ambisonic(&[a, b], 4, 24000).unwrap();
        for ch in 0..CHANNELS {
            assert!((eab.channel(ch)[0] - (ea.channel(ch)[0] + eb.channel(ch)[0])).abs() < 1e-7);
        }
    }

    #[test]
    fn fixed_directions() {
        let d = fixed_direction_set();
        assert_eq!(d.len(), 5);
        assert_eq!(d[0], 0.0);
        for w in d.windows(2) {
            assert!((w[1] - w[0] - 72f64.to_radians()).abs() < 1e-12);
        }
    }
}
