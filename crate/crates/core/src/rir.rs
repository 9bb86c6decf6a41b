//! Room impulse responses and their WAV representation.
//!
//! RIRs are stored as 32-bit float samples so that a WAV round trip is
//! lossless. Ambisonic RIRs use ACN channel order with SN3D normalization.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelLayout {
    Mono,
    /// Second-order ambisonics, 9 channels, ACN/SN3D.
    Ambisonic2,
}

impl ChannelLayout {
    pub fn channel_count(self) -> usize {
        match self {
            ChannelLayout::Mono => 1,
            ChannelLayout::Ambisonic2 => 9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoomImpulseResponse {
    channels: Vec<Vec<f32>>,
    sample_rate: u32,
    layout: ChannelLayout,
}

impl RoomImpulseResponse {
    pub fn new(channels: Vec<Vec<f32>>, sample_rate: u32, layout: ChannelLayout) -> Result<Self> {
        if channels.is_empty() {
            return Err(Error::InvalidRir("no channels".into()));
        }
        if channels.len() != layout.channel_count() {
            return Err(Error::InvalidRir(format!(
                "{:?} layout needs {} channels, got {}",
                layout,
                layout.channel_count(),
                channels.len()
            )));
        }
        if sample_rate == 0 {
            return Err(Error::InvalidRir("sample rate is zero".into()));
        }
        let len = channels[0].len();
        if channels.iter().any(|c| c.len() != len) {
            return Err(Error::InvalidRir("channels differ in length".into()));
        }
        if channels.iter().flatten().any(|s| !s.is_finite()) {
            return Err(Error::InvalidRir("non-finite sample".into()));
        }
        Ok(Self { channels, sample_rate, layout })
    }

    pub fn mono(samples: Vec<f32>, sample_rate: u32) -> Result<Self> {
        Self::new(vec![samples], sample_rate, ChannelLayout::Mono)
    }

    /// Builds a mono RIR from f64 samples, rounding to f32.
    pub fn mono_f64(samples: &[f64], sample_rate: u32) -> Result<Self> {
        Self::mono(samples.iter().map(|&s| s as f32).collect(), sample_rate)
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn layout(&self) -> ChannelLayout {
        self.layout
    }

    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn channel(&self, index: usize) -> &[f32] {
        &self.channels[index]
    }

    pub fn channels(&self) -> &[Vec<f32>] {
        &self.channels
    }

    /// Channel 0 widened to f64: the mono signal or the omni (W) component.
    pub fn omni_f64(&self) -> Vec<f64> {
        self.channels[0].iter().map(|&s| s as f64).collect()
    }

    pub fn into_channels(self) -> Vec<Vec<f32>> {
        self.channels
    }

    pub fn write_wav(&self, path: impl AsRef<Path>) -> Result<()> {
        let spec = hound::WavSpec {
            channels: self.channels.len() as u16,
            sample_rate: self.sample_rate,
            bits_per_sample: 32,
            sample_format: hound::SampleFormat::Float,
        };
        let mut writer = hound::WavWriter::create(path, spec)?;
        for i in 0..self.len() {
            for ch in &self.channels {
                writer.write_sample(ch[i])?;
            }
        }
        writer.finalize()?;
        Ok(())
    }

    /// Reads a 32-bit float WAV. Nine channels are taken as ACN/SN3D
    /// ambisonics, one channel as mono.
    pub fn read_wav(path: impl AsRef<Path>) -> Result<Self> {
        let mut reader = hound::WavReader::open(path)?;
        let spec = reader.spec();
        if spec.sample_format != hound::SampleFormat::Float || spec.bits_per_sample != 32 {
            return Err(Error::InvalidRir("expected 32-bit float WAV".into()));
        }
        let layout = match spec.channels {
            1 => ChannelLayout::Mono,
            9 => ChannelLayout::Ambisonic2,
            n => return Err(Error::InvalidRir(format!("unsupported channel count {n}"))),
        };
        let n_ch = spec.channels as usize;
        let mut channels = vec![Vec::with_capacity(reader.len() as usize / n_ch); n_ch];
        for (i, s) in reader.samples::<f32>().enumerate() {
            channels[i % n_ch].push(s?);
        }
        Self::new(channels, spec.sample_rate, layout)
    }
}
