//! Per-channel response-curve features for a 16-sensor array.

use crate::error::{Error, Result};

pub const N_CHANNELS: usize = 16;
pub const FEATURES_PER_CHANNEL: usize = 8;
pub const N_FEATURES: usize = N_CHANNELS * FEATURES_PER_CHANNEL;

/// Smoothing factors for the three derivative EMAs.
pub const DEFAULT_SMOOTHING: [f64; 3] = [0.1, 0.5, 0.9];

/// One acquisition: 16 voltage traces sampled at a fixed period.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorRecord {
    channels: Vec<Vec<f64>>,
    sample_period: f64,
}

impl SensorRecord {
    pub fn new(channels: Vec<Vec<f64>>, sample_period: f64) -> Result<Self> {
        if channels.len() != N_CHANNELS {
            return Err(Error::Input(format!(
                "expected {N_CHANNELS} channels, got {}",
                channels.len()
            )));
        }
        let len = channels[0].len();
        if let Some(i) = channels.iter().position(|c| c.len() != len) {
            return Err(Error::Input(format!(
                "channel {i} has {} samples, channel 0 has {len}",
                channels[i].len()
            )));
        }
        if len < 3 {
            return Err(Error::Input(format!(
                "channels need at least 3 samples, got {len}"
            )));
        }
        if !(sample_period.is_finite() && sample_period > 0.0) {
            return Err(Error::Input(format!("invalid sample period {sample_period}")));
        }
        Ok(Self {
            channels,
            sample_period,
        })
    }

    pub fn channels(&self) -> &[Vec<f64>] {
        &self.channels
    }

    pub fn sample_period(&self) -> f64 {
        self.sample_period
    }
}

/// Exactly 128 finite features, channel-major with 8 per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() != N_FEATURES {
            return Err(Error::Input(format!(
                "feature vector needs {N_FEATURES} values, got {}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Input(format!("feature {i} is not finite")));
        }
        Ok(Self(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// The 8 features of one channel.
    pub fn channel(&self, c: usize) -> &[f64] {
        &self.0[c * FEATURES_PER_CHANNEL..(c + 1) * FEATURES_PER_CHANNEL]
    }
}

/// Exponential moving average `y_0 = x_0`, `y_t = a*x_t + (1-a)*y_{t-1}`.
pub fn ema(values: &[f64], alpha: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut prev = None;
    for &v in values {
        let y = match prev {
            None => v,
            Some(p) => alpha * v + (1.0 - alpha) * p,
        };
        out.push(y);
        prev = Some(y);
    }
    out
}

fn extrema(values: &[f64]) -> (f64, f64) {
    values
        .iter()
        .fold((f64::NEG_INFINITY, f64::INFINITY), |(hi, lo), &v| {
            (hi.max(v), lo.min(v))
        })
}

/// Per channel: `[max, integral, (max, min) of the EMA of the first
/// difference for each smoothing factor]`.
///
/// The integral is the trapezoidal rule scaled by the sample period.
pub fn extract_features(record: &SensorRecord, smoothing: [f64; 3]) -> Result<FeatureVector> {
    if smoothing.iter().any(|a| !(*a > 0.0 && *a <= 1.0)) {
        return Err(Error::Config(format!(
            "smoothing factors must lie in (0, 1], got {smoothing:?}"
        )));
    }
    if !smoothing.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::Config(format!(
            "smoothing factors must be strictly increasing, got {smoothing:?}"
        )));
    }
    let dt = record.sample_period;
    let mut values = Vec::with_capacity(N_FEATURES);
    for channel in &record.channels {
        let (max, _) = extrema(channel);
        let integral: f64 = channel.windows(2).map(|w| 0.5 * (w[0] + w[1])).sum::<f64>() * dt;
        let diff: Vec<f64> = channel.windows(2).map(|w| w[1] - w[0]).collect();
        values.push(max);
        values.push(integral);
        for alpha in smoothing {
            let (hi, lo) = extrema(&ema(&diff, alpha));
            values.push(hi);
            values.push(lo);
        }
    }
    FeatureVector::new(values)
}
