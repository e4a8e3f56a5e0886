//! Sampled signals: dry/reverberant audio and impulse responses.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SignalError {
    #[error("signal contains a non-finite sample at index {0}")]
    NonFiniteSample(usize),
    #[error("signal must contain at least one sample")]
    Empty,
    #[error("sample rate must be strictly positive")]
    NonPositiveSampleRate,
    #[error("sample rate mismatch: {0} Hz vs {1} Hz")]
    SampleRateMismatch(u32, u32),
}

/// Where an impulse response came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    #[serde(rename = "ism")]
    Ism,
    #[serde(rename = "gas")]
    Gas,
    #[serde(rename = "external-real")]
    ExternalReal,
    #[serde(rename = "external-gan")]
    ExternalGan,
}

impl std::fmt::Display for Provenance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Provenance::Ism => "ism",
            Provenance::Gas => "gas",
            Provenance::ExternalReal => "external-real",
            Provenance::ExternalGan => "external-gan",
        };
        f.write_str(s)
    }
}

fn check_samples(samples: &[f64]) -> Result<(), SignalError> {
    if samples.is_empty() {
        return Err(SignalError::Empty);
    }
    if let Some(idx) = samples.iter().position(|s| !s.is_finite()) {
        return Err(SignalError::NonFiniteSample(idx));
    }
    Ok(())
}

/// A mono audio signal. Samples are finite, the rate is positive.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioSignal {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl AudioSignal {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self, SignalError> {
        check_samples(&samples)?;
        if sample_rate == 0 {
            return Err(SignalError::NonPositiveSampleRate);
        }
        Ok(AudioSignal {
            samples,
            sample_rate,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s * s).sum()
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }
}

/// A sampled room impulse response plus provenance metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpulseResponse {
    samples: Vec<f64>,
    sample_rate: u32,
    provenance: Provenance,
    scene_id: Option<String>,
}

impl ImpulseResponse {
    pub fn new(
        samples: Vec<f64>,
        sample_rate: u32,
        provenance: Provenance,
    ) -> Result<Self, SignalError> {
        check_samples(&samples)?;
        if sample_rate == 0 {
            return Err(SignalError::NonPositiveSampleRate);
        }
        Ok(ImpulseResponse {
            samples,
            sample_rate,
            provenance,
            scene_id: None,
        })
    }

    pub fn with_scene_id(mut self, scene_id: impl Into<String>) -> Self {
        self.scene_id = Some(scene_id.into());
        self
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn scene_id(&self) -> Option<&str> {
        self.scene_id.as_deref()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Total energy Σ h².
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s * s).sum()
    }

    /// View of the same samples as a plain audio signal.
    pub fn as_signal(&self) -> AudioSignal {
        AudioSignal {
            samples: self.samples.clone(),
            sample_rate: self.sample_rate,
        }
    }
}
