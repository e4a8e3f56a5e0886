//! Separation quality metrics: scale-invariant SDR, filtered SDR, and
//! best-permutation evaluation of two-source estimates.
//!
//! SI-SDR follows the projection definition: with
//! `s_target = (⟨e, r⟩ / ‖r‖²) · r` and `err = e − s_target`, the value is
//! `10·log10(‖s_target‖² / ‖err‖²)`.
//!
//! SDR follows the BSS-eval convention: the estimate is projected onto the
//! subspace spanned by the reference and its first 511 delays (a 512-tap
//! least-squares filter), and the ratio of projected to residual energy is
//! reported. Short delays of the reference are therefore absorbed.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsp::convolve_full;
use crate::signal::AudioSignal;

/// Cap replacing ±infinity so downstream averaging stays total.
pub const METRIC_CAP_DB: f64 = 120.0;

/// Filter length of the SDR projection.
pub const SDR_FILTER_TAPS: usize = 512;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("reference signal is identically zero")]
    ZeroReference,
    #[error("length mismatch: estimate {0} vs reference {1}")]
    LengthMismatch(usize, usize),
    #[error("signals must be non-empty")]
    Empty,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

fn ratio_db(signal: f64, error: f64) -> f64 {
    if signal <= 0.0 {
        return -METRIC_CAP_DB;
    }
    if error <= 0.0 {
        return METRIC_CAP_DB;
    }
    (10.0 * (signal / error).log10()).clamp(-METRIC_CAP_DB, METRIC_CAP_DB)
}

/// Scale-invariant signal-to-distortion ratio in dB.
pub fn si_sdr(estimate: &[f64], reference: &[f64]) -> Result<f64, MetricsError> {
    if estimate.is_empty() || reference.is_empty() {
        return Err(MetricsError::Empty);
    }
    if estimate.len() != reference.len() {
        return Err(MetricsError::LengthMismatch(estimate.len(), reference.len()));
    }
    let ref_energy = dot(reference, reference);
    if ref_energy <= 0.0 {
        return Err(MetricsError::ZeroReference);
    }
    let scale = dot(estimate, reference) / ref_energy;
    let mut target_energy = 0.0;
    let mut error_energy = 0.0;
    for (&e, &r) in estimate.iter().zip(reference.iter()) {
        let t = scale * r;
        let err = e - t;
        target_energy += t * t;
        error_energy += err * err;
    }
    Ok(ratio_db(target_energy, error_energy))
}

/// Symmetric positive-definite solve via Cholesky; `matrix` is row-major n×n.
/// Returns None when a pivot fails.
fn cholesky_solve(matrix: &[f64], rhs: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = matrix[i * n + j];
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if sum <= 0.0 {
                    return None;
                }
                l[i * n + i] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    // Forward then back substitution.
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut sum = rhs[i];
        for k in 0..i {
            sum -= l[i * n + k] * y[k];
        }
        y[i] = sum / l[i * n + i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut sum = y[i];
        for k in i + 1..n {
            sum -= l[k * n + i] * x[k];
        }
        x[i] = sum / l[i * n + i];
    }
    Some(x)
}

/// BSS-eval style SDR with a time-invariant least-squares filter.
pub fn sdr(estimate: &[f64], reference: &[f64]) -> Result<f64, MetricsError> {
    if estimate.is_empty() || reference.is_empty() {
        return Err(MetricsError::Empty);
    }
    if estimate.len() != reference.len() {
        return Err(MetricsError::LengthMismatch(estimate.len(), reference.len()));
    }
    let n = estimate.len();
    let taps = SDR_FILTER_TAPS.min(n);
    let ref_energy = dot(reference, reference);
    if ref_energy <= 0.0 {
        return Err(MetricsError::ZeroReference);
    }

    // Normal equations over zero-padded correlations: the Gram matrix of the
    // delayed references is Toeplitz in the full-range autocorrelation.
    let mut acorr = vec![0.0; taps];
    for (tau, slot) in acorr.iter_mut().enumerate() {
        *slot = dot(&reference[..n - tau], &reference[tau..]);
    }
    let mut cross = vec![0.0; taps];
    for (lag, slot) in cross.iter_mut().enumerate() {
        *slot = dot(&estimate[lag..], &reference[..n - lag]);
    }
    let mut gram = vec![0.0; taps * taps];
    for i in 0..taps {
        for j in 0..taps {
            gram[i * taps + j] = acorr[(i as isize - j as isize).unsigned_abs()];
        }
    }

    // The Gram matrix is PSD; a tiny ridge restores definiteness when the
    // reference is rank-deficient over the filter span.
    let mut filter = None;
    for ridge in [0.0, 1e-12, 1e-9, 1e-6] {
        let mut regularized = gram.clone();
        if ridge > 0.0 {
            for i in 0..taps {
                regularized[i * taps + i] += ridge * acorr[0];
            }
        }
        if let Some(h) = cholesky_solve(&regularized, &cross, taps) {
            filter = Some(h);
            break;
        }
    }
    let filter = filter.expect("ridge-regularized Gram matrix is positive definite");

    // Residuals are taken over the zero-padded window of length
    // n + taps − 1, the window the normal equations integrate over.
    let projected_full = convolve_full(&filter, reference);
    let mut target_energy = 0.0;
    let mut error_energy = 0.0;
    for (i, &t) in projected_full.iter().enumerate() {
        let e = if i < n { estimate[i] } else { 0.0 };
        let err = e - t;
        target_energy += t * t;
        error_energy += err * err;
    }
    // Residuals at roundoff level mean a perfect explanation of the estimate.
    if error_energy <= 1e-20 * target_energy.max(1e-300) {
        return Ok(METRIC_CAP_DB);
    }
    Ok(ratio_db(target_energy, error_energy))
}

/// Metrics for one two-source mixture under the best permutation.
///
/// `permutation[j]` is the estimate index assigned to reference `j`.
/// Improvements are differences against using the mixture itself as the
/// estimate for each reference.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeparationMetrics {
    pub si_sdr_db: [f64; 2],
    pub sdr_db: [f64; 2],
    pub si_sdri_db: [f64; 2],
    pub sdri_db: [f64; 2],
    pub permutation: [usize; 2],
}

impl SeparationMetrics {
    pub fn mean_si_sdri(&self) -> f64 {
        (self.si_sdri_db[0] + self.si_sdri_db[1]) / 2.0
    }

    pub fn mean_sdri(&self) -> f64 {
        (self.sdri_db[0] + self.sdri_db[1]) / 2.0
    }
}

/// Evaluates both assignments of two estimates to two references and reports
/// metrics under the permutation maximizing mean SI-SDR.
pub fn eval_pair(
    estimates: [&AudioSignal; 2],
    references: [&AudioSignal; 2],
    mixture: &AudioSignal,
) -> Result<SeparationMetrics, MetricsError> {
    for sig in estimates.iter().chain(references.iter()) {
        if sig.len() != mixture.len() {
            return Err(MetricsError::LengthMismatch(sig.len(), mixture.len()));
        }
    }
    // si[i][j] = SI-SDR of estimate i against reference j.
    let mut si = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            si[i][j] = si_sdr(estimates[i].samples(), references[j].samples())?;
        }
    }
    let identity_mean = (si[0][0] + si[1][1]) / 2.0;
    let swapped_mean = (si[1][0] + si[0][1]) / 2.0;
    let permutation = if swapped_mean > identity_mean {
        [1usize, 0usize]
    } else {
        [0usize, 1usize]
    };

    let mut si_sdr_db = [0.0; 2];
    let mut sdr_db = [0.0; 2];
    let mut si_sdri_db = [0.0; 2];
    let mut sdri_db = [0.0; 2];
    for j in 0..2 {
        let est = estimates[permutation[j]];
        let reference = references[j];
        si_sdr_db[j] = si[permutation[j]][j];
        sdr_db[j] = sdr(est.samples(), reference.samples())?;
        let mix_si = si_sdr(mixture.samples(), reference.samples())?;
        let mix_sdr = sdr(mixture.samples(), reference.samples())?;
        si_sdri_db[j] = si_sdr_db[j] - mix_si;
        sdri_db[j] = sdr_db[j] - mix_sdr;
    }
    Ok(SeparationMetrics {
        si_sdr_db,
        sdr_db,
        si_sdri_db,
        sdri_db,
        permutation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noise(len: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    /// From-definition recomputation used as the independent oracle.
    fn si_sdr_oracle(estimate: &[f64], reference: &[f64]) -> f64 {
        let scale: f64 = estimate.iter().zip(reference).map(|(e, r)| e * r).sum::<f64>()
            / reference.iter().map(|r| r * r).sum::<f64>();
        let target: Vec<f64> = reference.iter().map(|r| scale * r).collect();
        let err: Vec<f64> = estimate.iter().zip(&target).map(|(e, t)| e - t).collect();
        let ts: f64 = target.iter().map(|t| t * t).sum();
        let es: f64 = err.iter().map(|e| e * e).sum();
        if es <= 0.0 {
            return METRIC_CAP_DB;
        }
        (10.0 * (ts / es).log10()).clamp(-METRIC_CAP_DB, METRIC_CAP_DB)
    }

    #[test]
    fn identical_signals_hit_cap() {
        let r = noise(500, 1);
        assert_eq!(si_sdr(&r, &r).unwrap(), METRIC_CAP_DB);
    }

    #[test]
    fn scale_invariance_exact_for_power_of_two() {
        let r = noise(500, 2);
        let e = noise(500, 3);
        let base = si_sdr(&e, &r).unwrap();
        for k in [2.0, 0.25, -8.0] {
            let scaled: Vec<f64> = e.iter().map(|x| x * k).collect();
            assert_eq!(si_sdr(&scaled, &r).unwrap(), base, "k = {k}");
        }
        let scaled: Vec<f64> = e.iter().map(|x| x * 3.7).collect();
        assert!((si_sdr(&scaled, &r).unwrap() - base).abs() < 1e-9);
    }

    #[test]
    fn orthogonal_noise_at_twenty_db() {
        let r = noise(4000, 4);
        let v = noise(4000, 5);
        let rr: f64 = r.iter().map(|x| x * x).sum();
        let vr: f64 = v.iter().zip(&r).map(|(a, b)| a * b).sum();
        // Orthogonalize v against r, then match norms.
        let orth: Vec<f64> = v.iter().zip(&r).map(|(a, b)| a - vr / rr * b).collect();
        let oo: f64 = orth.iter().map(|x| x * x).sum();
        let n: Vec<f64> = orth.iter().map(|x| x * (rr / oo).sqrt()).collect();
        let est: Vec<f64> = r.iter().zip(&n).map(|(a, b)| a + 0.1 * b).collect();
        let value = si_sdr(&est, &r).unwrap();
        assert!((value - 20.0).abs() < 1e-6, "value = {value}");
    }

    #[test]
    fn matches_oracle_on_random_pairs() {
        for seed in 0..50u64 {
            let r = noise(257, seed * 2 + 1);
            let e = noise(257, seed * 2 + 2);
            let fast = si_sdr(&e, &r).unwrap();
            let slow = si_sdr_oracle(&e, &r);
            assert!((fast - slow).abs() <= 1e-9, "seed {seed}: {fast} vs {slow}");
        }
    }

    #[test]
    fn zero_reference_rejected() {
        let e = noise(16, 9);
        assert_eq!(
            si_sdr(&e, &[0.0; 16]).unwrap_err(),
            MetricsError::ZeroReference
        );
    }

    #[test]
    fn length_mismatch_rejected() {
        let e = noise(16, 9);
        let r = noise(17, 10);
        assert!(matches!(
            si_sdr(&e, &r).unwrap_err(),
            MetricsError::LengthMismatch(16, 17)
        ));
    }

    #[test]
    fn sdr_identical_hits_cap() {
        let r = noise(2000, 11);
        assert_eq!(sdr(&r, &r).unwrap(), METRIC_CAP_DB);
    }

    #[test]
    fn sdr_absorbs_short_delay() {
        // Reference is silent over the last 300 samples so a shift of up to
        // 300 loses nothing at the window edge.
        let mut r = noise(3000, 12);
        for s in r.iter_mut().skip(2700) {
            *s = 0.0;
        }
        for delay in [1usize, 37, 300] {
            let mut delayed = vec![0.0; 3000];
            delayed[delay..].copy_from_slice(&r[..3000 - delay]);
            let value = sdr(&delayed, &r).unwrap();
            assert_eq!(value, METRIC_CAP_DB, "delay {delay}");
        }
    }

    #[test]
    fn sdr_of_independent_noise_is_negative() {
        for seed in 0..20u64 {
            let e = noise(8000, 1000 + seed);
            let r = noise(8000, 2000 + seed);
            let value = sdr(&e, &r).unwrap();
            assert!(value < 0.0, "seed {seed}: {value}");
        }
    }

    fn signal(v: Vec<f64>) -> AudioSignal {
        AudioSignal::new(v, 8000).unwrap()
    }

    #[test]
    fn eval_pair_identity_and_swap() {
        let a = signal(noise(1500, 21));
        let b = signal(noise(1500, 22));
        let mixture = signal(
            a.samples()
                .iter()
                .zip(b.samples())
                .map(|(x, y)| x + y)
                .collect(),
        );
        let id = eval_pair([&a, &b], [&a, &b], &mixture).unwrap();
        assert_eq!(id.permutation, [0, 1]);
        assert_eq!(id.si_sdr_db, [METRIC_CAP_DB; 2]);

        let swapped = eval_pair([&b, &a], [&a, &b], &mixture).unwrap();
        assert_eq!(swapped.permutation, [1, 0]);
        assert_eq!(swapped.si_sdr_db, id.si_sdr_db);
        assert_eq!(swapped.si_sdri_db, id.si_sdri_db);
    }

    #[test]
    fn mixture_as_estimate_has_zero_improvement() {
        let a = signal(noise(1200, 31));
        let b = signal(noise(1200, 32));
        let mixture = signal(
            a.samples()
                .iter()
                .zip(b.samples())
                .map(|(x, y)| 0.8 * x + 1.1 * y)
                .collect(),
        );
        let metrics = eval_pair([&mixture, &mixture], [&a, &b], &mixture).unwrap();
        for j in 0..2 {
            assert!(metrics.si_sdri_db[j].abs() <= 1e-9);
            assert!(metrics.sdri_db[j].abs() <= 1e-9);
        }
    }
}
