//! DSP primitives and the frame type every stage passes around.

pub mod constellation;
pub mod fft;
pub mod filter;
pub mod hilbert;
pub mod prbs;
pub mod resample;
pub mod rrc;

pub use constellation::Constellation;
pub use filter::{fir_filter, fir_filter_circular};
pub use hilbert::hilbert_transform;
pub use prbs::generate_prbs;
pub use resample::resample;
pub use rrc::{design_rrc, RrcSpec};

use crate::error::{invalid, Result};

pub type C64 = num_complex::Complex64;

/// A block of equal-length complex baseband channels sampled at `sample_rate`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexFrame {
    channels: Vec<Vec<C64>>,
    sample_rate: f64,
    center_offset: f64,
}

impl ComplexFrame {
    pub fn new(channels: Vec<Vec<C64>>, sample_rate: f64) -> Result<Self> {
        if !(sample_rate > 0.0) {
            return Err(invalid(format!("sample rate {sample_rate} must be positive")));
        }
        let len = channels.first().map(Vec::len).unwrap_or(0);
        if len == 0 {
            return Err(invalid("frame must have at least one non-empty channel"));
        }
        if channels.iter().any(|c| c.len() != len) {
            return Err(invalid("all channels must have equal length"));
        }
        Ok(Self {
            channels,
            sample_rate,
            center_offset: 0.0,
        })
    }

    /// Same rate and offset, new samples.
    pub fn with_channels(&self, channels: Vec<Vec<C64>>) -> Result<Self> {
        let mut f = Self::new(channels, self.sample_rate)?;
        f.center_offset = self.center_offset;
        Ok(f)
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub(crate) fn set_sample_rate(&mut self, fs: f64) {
        self.sample_rate = fs;
    }

    pub fn center_offset(&self) -> f64 {
        self.center_offset
    }

    pub fn set_center_offset(&mut self, hz: f64) {
        self.center_offset = hz;
    }

    pub fn channel(&self, i: usize) -> &[C64] {
        &self.channels[i]
    }

    pub fn channel_mut(&mut self, i: usize) -> &mut [C64] {
        &mut self.channels[i]
    }

    pub fn channels(&self) -> &[Vec<C64>] {
        &self.channels
    }

    pub fn into_channels(self) -> Vec<Vec<C64>> {
        self.channels
    }

    /// Mean power of each channel.
    pub fn channel_powers(&self) -> Vec<f64> {
        self.channels.iter().map(|c| mean_power(c)).collect()
    }

    /// Sum of per-channel mean powers.
    pub fn total_power(&self) -> f64 {
        self.channel_powers().iter().sum()
    }

    /// Subset of channels, in the given order.
    pub fn select(&self, idx: &[usize]) -> Result<Self> {
        if let Some(&bad) = idx.iter().find(|&&i| i >= self.n_channels()) {
            return Err(invalid(format!(
                "channel {bad} out of range ({} channels)",
                self.n_channels()
            )));
        }
        self.with_channels(idx.iter().map(|&i| self.channels[i].clone()).collect())
    }

    /// Multiply every sample by `exp(j·2π·f·n/fs)`.
    pub fn frequency_shift(&self, f_hz: f64) -> Self {
        let w = 2.0 * std::f64::consts::PI * f_hz / self.sample_rate;
        let channels = self
            .channels
            .iter()
            .map(|c| {
                c.iter()
                    .enumerate()
                    .map(|(n, &v)| v * C64::from_polar(1.0, w * n as f64))
                    .collect()
            })
            .collect();
        Self {
            channels,
            sample_rate: self.sample_rate,
            center_offset: self.center_offset + f_hz,
        }
    }

    /// Scale all channels by a common real factor.
    pub fn scaled(&self, k: f64) -> Self {
        Self {
            channels: self
                .channels
                .iter()
                .map(|c| c.iter().map(|v| v * k).collect())
                .collect(),
            sample_rate: self.sample_rate,
            center_offset: self.center_offset,
        }
    }
}

pub fn mean_power(x: &[C64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().map(|v| v.norm_sqr()).sum::<f64>() / x.len() as f64
}

/// Error-vector magnitude (RMS, fraction) after a least-squares complex gain fit.
pub fn evm(received: &[C64], reference: &[C64]) -> f64 {
    let num: C64 = received
        .iter()
        .zip(reference)
        .map(|(y, s)| y.conj() * s)
        .sum();
    let den: f64 = received.iter().map(|y| y.norm_sqr()).sum();
    let g = if den > 0.0 { num / den } else { C64::new(0.0, 0.0) };
    let err: f64 = received
        .iter()
        .zip(reference)
        .map(|(y, s)| (g * y - s).norm_sqr())
        .sum();
    let sig: f64 = reference.iter().map(|s| s.norm_sqr()).sum();
    (err / sig).sqrt()
}

/// EVM without gain fitting.
pub fn evm_raw(received: &[C64], reference: &[C64]) -> f64 {
    let err: f64 = received
        .iter()
        .zip(reference)
        .map(|(y, s)| (y - s).norm_sqr())
        .sum();
    let sig: f64 = reference.iter().map(|s| s.norm_sqr()).sum();
    (err / sig).sqrt()
}
