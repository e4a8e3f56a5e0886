//! Shared signal-processing primitives: fractional-delay placement and
//! FFT-based linear convolution.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

/// Normalized sinc, `sin(πx)/(πx)` with `sinc(0) = 1`.
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

/// Adds an impulse of the given amplitude at a fractional sample position,
/// realized as a Hann-windowed sinc of `taps` points (taps must be odd).
///
/// Taps that fall outside `out` are dropped.
pub fn add_fractional_impulse(out: &mut [f64], delay_samples: f64, amplitude: f64, taps: usize) {
    debug_assert!(taps % 2 == 1 && taps >= 1);
    let half = (taps / 2) as i64;
    let center = delay_samples.round() as i64;
    let taps_f = taps as f64;
    for j in -half..=half {
        let n = center + j;
        if n < 0 || n as usize >= out.len() {
            continue;
        }
        let u = n as f64 - delay_samples;
        let window = 0.5 * (1.0 + (2.0 * std::f64::consts::PI * u / taps_f).cos());
        out[n as usize] += amplitude * window * sinc(u);
    }
}

fn next_pow2(n: usize) -> usize {
    n.next_power_of_two()
}

/// Full linear convolution, output length `a.len() + b.len() - 1`.
///
/// Computed with a zero-padded FFT; agrees with the direct nested-loop sum
/// to roundoff.
pub fn convolve_full(a: &[f64], b: &[f64]) -> Vec<f64> {
    assert!(!a.is_empty() && !b.is_empty());
    let out_len = a.len() + b.len() - 1;
    let fft_len = next_pow2(out_len);
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(fft_len);
    let ifft = planner.plan_fft_inverse(fft_len);

    let mut fa: Vec<Complex64> = a
        .iter()
        .map(|&x| Complex64::new(x, 0.0))
        .chain(std::iter::repeat(Complex64::new(0.0, 0.0)))
        .take(fft_len)
        .collect();
    let mut fb: Vec<Complex64> = b
        .iter()
        .map(|&x| Complex64::new(x, 0.0))
        .chain(std::iter::repeat(Complex64::new(0.0, 0.0)))
        .take(fft_len)
        .collect();
    fft.process(&mut fa);
    fft.process(&mut fb);
    for (x, y) in fa.iter_mut().zip(fb.iter()) {
        *x *= y;
    }
    ifft.process(&mut fa);
    let scale = 1.0 / fft_len as f64;
    fa.truncate(out_len);
    fa.into_iter().map(|c| c.re * scale).collect()
}

/// Direct O(N·L) convolution. Reference implementation for tests and a
/// fallback for very short inputs.
pub fn convolve_direct(a: &[f64], b: &[f64]) -> Vec<f64> {
    assert!(!a.is_empty() && !b.is_empty());
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sinc_at_integers() {
        assert_eq!(sinc(0.0), 1.0);
        for k in 1..5 {
            assert!(sinc(k as f64).abs() < 1e-15);
        }
    }

    #[test]
    fn integer_delay_impulse_is_exact() {
        let mut out = vec![0.0; 128];
        add_fractional_impulse(&mut out, 40.0, 0.75, 81);
        assert_eq!(out[40], 0.75);
        // At integer delay every other tap hits a sinc zero.
        for (n, &v) in out.iter().enumerate() {
            if n != 40 {
                assert!(v.abs() < 1e-15, "out[{n}] = {v}");
            }
        }
    }

    #[test]
    fn fractional_impulse_preserves_energy() {
        let mut out = vec![0.0; 256];
        add_fractional_impulse(&mut out, 100.37, 1.0, 81);
        let energy: f64 = out.iter().map(|x| x * x).sum();
        assert!((energy - 1.0).abs() < 0.02, "energy = {energy}");
    }

    #[test]
    fn fft_convolution_matches_direct() {
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let a: Vec<f64> = (0..64).map(|_| next()).collect();
        let b: Vec<f64> = (0..16).map(|_| next()).collect();
        let fast = convolve_full(&a, &b);
        let slow = convolve_direct(&a, &b);
        assert_eq!(fast.len(), slow.len());
        let scale: f64 = slow.iter().map(|x| x.abs()).fold(0.0, f64::max);
        for (x, y) in fast.iter().zip(slow.iter()) {
            assert!((x - y).abs() <= 1e-12 * scale.max(1.0));
        }
    }
}
