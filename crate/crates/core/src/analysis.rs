//! Acoustic parameter estimation: Schroeder energy decay curve, T60 via T20
//! extrapolation, direct-to-reverberant ratio, and STFT magnitude export.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::signal::{AudioSignal, ImpulseResponse};

/// dB floor substituted for log(0) in decay curves.
pub const EDC_FLOOR_DB: f64 = -140.0;

/// Cap applied when the reverberant tail is empty.
pub const DRR_CAP_DB: f64 = 120.0;

/// Half-width of the direct-sound window, seconds.
pub const DIRECT_WINDOW_S: f64 = 0.0025;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("impulse response has zero energy")]
    ZeroEnergy,
    #[error("decay range insufficient: EDC needs at least 2 samples between -5 and -25 dB")]
    InsufficientDecay,
    #[error("decay fit produced a non-negative slope")]
    NonDecayingFit,
    #[error("signal shorter than the analysis window ({len} < {window})")]
    TooShort { len: usize, window: usize },
    #[error("window and hop must satisfy window >= hop >= 1")]
    BadWindow,
}

/// Schroeder backward-integrated energy decay curve in dB, normalized so the
/// first sample is exactly 0 dB. Values are floored at [`EDC_FLOOR_DB`].
pub fn energy_decay_curve(rir: &ImpulseResponse) -> Result<Vec<f64>, AnalysisError> {
    let samples = rir.samples();
    let mut tail = vec![0.0; samples.len()];
    let mut acc = 0.0;
    for (i, &s) in samples.iter().enumerate().rev() {
        acc += s * s;
        tail[i] = acc;
    }
    let total = tail[0];
    if total <= 0.0 {
        return Err(AnalysisError::ZeroEnergy);
    }
    Ok(tail
        .into_iter()
        .map(|t| {
            if t <= 0.0 {
                EDC_FLOOR_DB
            } else {
                (10.0 * (t / total).log10()).max(EDC_FLOOR_DB)
            }
        })
        .collect())
}

/// T60 estimated with a T20 fit: least squares on the EDC between −5 dB and
/// −25 dB, extrapolated by a factor of 3.
pub fn estimate_t60(rir: &ImpulseResponse) -> Result<f64, AnalysisError> {
    let edc = energy_decay_curve(rir)?;
    if !edc.iter().any(|&v| v <= -25.0) {
        return Err(AnalysisError::InsufficientDecay);
    }
    let fs = rir.sample_rate() as f64;
    // EDC is non-increasing, so the fit band is a contiguous index range.
    let points: Vec<(f64, f64)> = edc
        .iter()
        .enumerate()
        .filter(|(_, &v)| (-25.0..=-5.0).contains(&v))
        .map(|(i, &v)| (i as f64 / fs, v))
        .collect();
    if points.len() < 2 {
        return Err(AnalysisError::InsufficientDecay);
    }
    let n = points.len() as f64;
    let sum_t: f64 = points.iter().map(|p| p.0).sum();
    let sum_v: f64 = points.iter().map(|p| p.1).sum();
    let sum_tt: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sum_tv: f64 = points.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sum_tt - sum_t * sum_t;
    if denom == 0.0 {
        return Err(AnalysisError::InsufficientDecay);
    }
    let slope = (n * sum_tv - sum_t * sum_v) / denom;
    if slope >= 0.0 {
        return Err(AnalysisError::NonDecayingFit);
    }
    Ok(-60.0 / slope)
}

/// Direct-to-reverberant ratio in dB.
///
/// Direct energy is taken within ±2.5 ms of the largest-magnitude sample;
/// reverberant energy is everything later. Returns [`DRR_CAP_DB`] when the
/// tail is empty.
pub fn direct_to_reverberant_ratio(rir: &ImpulseResponse) -> Result<f64, AnalysisError> {
    let samples = rir.samples();
    if rir.energy() <= 0.0 {
        return Err(AnalysisError::ZeroEnergy);
    }
    let peak = samples
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
        .map(|(i, _)| i)
        .unwrap();
    let half = (DIRECT_WINDOW_S * rir.sample_rate() as f64).round() as usize;
    let start = peak.saturating_sub(half);
    let end = (peak + half + 1).min(samples.len());
    let direct: f64 = samples[start..end].iter().map(|s| s * s).sum();
    let reverberant: f64 = samples[end..].iter().map(|s| s * s).sum();
    if reverberant <= 0.0 {
        return Ok(DRR_CAP_DB);
    }
    if direct <= 0.0 {
        return Ok(-DRR_CAP_DB);
    }
    Ok((10.0 * (direct / reverberant).log10()).clamp(-DRR_CAP_DB, DRR_CAP_DB))
}

/// Time of the largest-magnitude sample, seconds.
pub fn direct_arrival_s(rir: &ImpulseResponse) -> Option<f64> {
    rir.samples()
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
        .map(|(i, _)| i as f64 / rir.sample_rate() as f64)
}

/// Headline acoustic parameters of one impulse response.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AcousticSummary {
    /// None when the decay range is insufficient for a T20 fit.
    pub t60_s: Option<f64>,
    pub drr_db: f64,
    pub direct_arrival_s: f64,
    pub total_energy: f64,
}

pub fn summarize(rir: &ImpulseResponse) -> Result<AcousticSummary, AnalysisError> {
    let drr_db = direct_to_reverberant_ratio(rir)?;
    let t60_s = match estimate_t60(rir) {
        Ok(t) => Some(t),
        Err(AnalysisError::InsufficientDecay) | Err(AnalysisError::NonDecayingFit) => None,
        Err(e) => return Err(e),
    };
    Ok(AcousticSummary {
        t60_s,
        drr_db,
        direct_arrival_s: direct_arrival_s(rir).unwrap_or(0.0),
        total_energy: rir.energy(),
    })
}

/// STFT magnitude matrix: `data[bin][frame]`, one-sided spectrum
/// (`window_len / 2 + 1` bins), Hann window.
#[derive(Debug, Clone)]
pub struct Spectrogram {
    pub data: Vec<Vec<f64>>,
    pub window_len: usize,
    pub hop: usize,
    pub sample_rate: u32,
}

impl Spectrogram {
    pub fn num_bins(&self) -> usize {
        self.data.len()
    }

    pub fn num_frames(&self) -> usize {
        self.data.first().map_or(0, Vec::len)
    }

    /// CSV with one row per frequency bin, one column per frame.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in &self.data {
            let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

/// Short-time Fourier transform magnitude with a periodic Hann window.
///
/// Frame count is `floor((N - window_len) / hop) + 1`.
pub fn spectrogram(
    signal: &AudioSignal,
    window_len: usize,
    hop: usize,
) -> Result<Spectrogram, AnalysisError> {
    if hop < 1 || window_len < hop {
        return Err(AnalysisError::BadWindow);
    }
    let samples = signal.samples();
    if samples.len() < window_len {
        return Err(AnalysisError::TooShort {
            len: samples.len(),
            window: window_len,
        });
    }
    let num_frames = (samples.len() - window_len) / hop + 1;
    let num_bins = window_len / 2 + 1;
    let window: Vec<f64> = (0..window_len)
        .map(|n| 0.5 * (1.0 - (2.0 * std::f64::consts::PI * n as f64 / window_len as f64).cos()))
        .collect();
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(window_len);
    let mut data = vec![vec![0.0; num_frames]; num_bins];
    let mut frame = vec![Complex64::new(0.0, 0.0); window_len];
    for f in 0..num_frames {
        let start = f * hop;
        for (n, slot) in frame.iter_mut().enumerate() {
            *slot = Complex64::new(samples[start + n] * window[n], 0.0);
        }
        fft.process(&mut frame);
        for (bin, row) in data.iter_mut().enumerate() {
            row[f] = frame[bin].norm();
        }
    }
    Ok(Spectrogram {
        data,
        window_len,
        hop,
        sample_rate: signal.sample_rate(),
    })
}
