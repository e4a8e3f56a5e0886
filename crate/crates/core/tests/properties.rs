//! Property tests for the cross-cutting invariants: scale invariances,
//! monotone decay curves, min-rule mixing, frontier arithmetic, and the
//! per-bin energy contract of the noise reconstruction.

use proptest::prelude::*;

use reverbkit_core::analysis::energy_decay_curve;
use reverbkit_core::curriculum::{CurriculumSchedule, PoolEntry};
use reverbkit_core::dsp::{convolve_direct, convolve_full};
use reverbkit_core::metrics::si_sdr;
use reverbkit_core::mixer::mix_min;
use reverbkit_core::scene::{Scene, SurfaceMaterial};
use reverbkit_core::signal::{AudioSignal, ImpulseResponse, Provenance};
use reverbkit_core::tracer::{histogram_to_rir, EnergyHistogram};
use reverbkit_core::Vec3;

fn finite_signal(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 1..max_len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn si_sdr_scale_invariant(
        reference in finite_signal(300),
        estimate in finite_signal(300),
        k in prop_oneof![(-8.0f64..8.0).prop_filter("nonzero", |k| k.abs() > 1e-3), Just(4.0), Just(-0.5)],
    ) {
        let len = reference.len().min(estimate.len());
        let r = &reference[..len];
        let e = &estimate[..len];
        prop_assume!(r.iter().any(|x| *x != 0.0));
        let base = si_sdr(e, r).unwrap();
        let scaled: Vec<f64> = e.iter().map(|x| x * k).collect();
        let value = si_sdr(&scaled, r).unwrap();
        prop_assert!((value - base).abs() <= 1e-9, "{value} vs {base} at k={k}");
    }

    #[test]
    fn convolution_matches_direct_oracle(
        a in finite_signal(96),
        b in finite_signal(24),
    ) {
        let fast = convolve_full(&a, &b);
        let slow = convolve_direct(&a, &b);
        prop_assert_eq!(fast.len(), slow.len());
        let scale = slow.iter().map(|x| x.abs()).fold(1.0f64, f64::max);
        for (x, y) in fast.iter().zip(&slow) {
            prop_assert!((x - y).abs() <= 1e-9 * scale);
        }
    }

    #[test]
    fn edc_is_normalized_and_non_increasing(samples in finite_signal(600)) {
        prop_assume!(samples.iter().any(|x| *x != 0.0));
        let rir = ImpulseResponse::new(samples, 8000, Provenance::ExternalReal).unwrap();
        let edc = energy_decay_curve(&rir).unwrap();
        prop_assert_eq!(edc[0], 0.0);
        for w in edc.windows(2) {
            prop_assert!(w[1] <= w[0]);
        }
    }

    #[test]
    fn mix_min_truncates_and_superposes(
        a in finite_signal(400),
        b in finite_signal(400),
        gain_a in -12.0f64..12.0,
        gain_b in -12.0f64..12.0,
    ) {
        let sa = AudioSignal::new(a.clone(), 8000).unwrap();
        let sb = AudioSignal::new(b.clone(), 8000).unwrap();
        let (mixture, targets) = mix_min(&[sa, sb], &[gain_a, gain_b]).unwrap();
        let min_len = a.len().min(b.len());
        prop_assert_eq!(mixture.len(), min_len);
        for i in 0..min_len {
            let sum = targets[0].samples()[i] + targets[1].samples()[i];
            prop_assert!((mixture.samples()[i] - sum).abs() <= 1e-12);
        }
    }

    #[test]
    fn frontier_monotone_and_clamped(
        pool_size in 1usize..5000,
        block in 1usize..600,
        period in 1usize..8,
        total in 1usize..300,
    ) {
        let pool: Vec<PoolEntry> = (0..pool_size)
            .map(|i| PoolEntry {
                path: format!("r{i}.wav").into(),
                t60_s: i as f64 * 1e-3,
                provenance: Provenance::Gas,
                rank: i,
            })
            .collect();
        let schedule = CurriculumSchedule::with_params(pool, block, period, total).unwrap();
        let mut last = 0usize;
        for epoch in 1..=total {
            let f = schedule.frontier(epoch).unwrap();
            prop_assert!(f >= last);
            prop_assert!(f <= pool_size);
            prop_assert!(f >= block.min(pool_size));
            last = f;
        }
        prop_assert!(schedule.frontier(0).is_err());
        prop_assert!(schedule.frontier(total + 1).is_err());
    }

    #[test]
    fn scene_validation_idempotent(
        dims in prop::array::uniform3(1.0f64..20.0),
        src_frac in prop::array::uniform3(0.05f64..0.95),
        recv_frac in prop::array::uniform3(0.05f64..0.95),
        alpha in 0.0f64..=1.0,
        scattering in 0.0f64..=1.0,
    ) {
        let src = Vec3::new(src_frac[0] * dims[0], src_frac[1] * dims[1], src_frac[2] * dims[2]);
        let recv = Vec3::new(recv_frac[0] * dims[0], recv_frac[1] * dims[1], recv_frac[2] * dims[2]);
        prop_assume!(src != recv);
        let scene = Scene::uniform(dims.into(), src, recv, SurfaceMaterial::new(alpha, scattering));
        let once = scene.clone().validate().unwrap();
        let twice = once.clone().validate().unwrap();
        prop_assert_eq!(&once, &scene);
        prop_assert_eq!(&twice, &scene);
    }

    #[test]
    fn histogram_reconstruction_preserves_bin_energy(
        energies in prop::collection::vec(0.0f64..10.0, 1..40),
        seed in any::<u64>(),
    ) {
        let hist = EnergyHistogram::new(energies, 1e-3, 8000).unwrap();
        let rir = histogram_to_rir(&hist, seed);
        for (k, &expected) in hist.bins().iter().enumerate() {
            let (start, end) = hist.bin_span(k);
            let got: f64 = rir.samples()[start..end.min(rir.len())]
                .iter()
                .map(|s| s * s)
                .sum();
            if expected > 0.0 {
                prop_assert!(
                    (got - expected).abs() <= 1e-6 * expected,
                    "bin {}: {} vs {}", k, got, expected
                );
            } else {
                prop_assert_eq!(got, 0.0);
            }
        }
    }
}
