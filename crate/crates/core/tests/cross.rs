//! Cross-module behavior: simulator outputs fed through the analysis chain.

use reverbkit_core::analysis::{direct_to_reverberant_ratio, estimate_t60};
use reverbkit_core::ism::{simulate_ism, IsmConfig};
use reverbkit_core::scene::{Scene, SurfaceMaterial};
use reverbkit_core::tracer::{simulate_gas, TracerConfig};
use reverbkit_core::Vec3;

fn room(alpha: f64) -> Scene {
    Scene::uniform(
        Vec3::new(7.5, 4.6, 3.1),
        Vec3::new(2.0, 2.0, 1.0),
        Vec3::new(5.0, 3.0, 1.5),
        SurfaceMaterial::new(alpha, 0.3),
    )
}

#[test]
fn ism_t60_grows_as_absorption_falls() {
    let mut last = 0.0f64;
    for alpha in [0.9, 0.6, 0.3, 0.1] {
        let scene = room(alpha);
        let cfg = IsmConfig::auto(&scene);
        let rir = simulate_ism(&scene, &cfg).unwrap();
        let t60 = estimate_t60(&rir).unwrap();
        assert!(
            t60 > last,
            "alpha {alpha}: T60 {t60:.3} did not exceed {last:.3}"
        );
        last = t60;
    }
}

#[test]
fn drr_falls_with_reverberation() {
    // More absorption leaves less tail, so the direct share must rise.
    let damped = simulate_ism(&room(0.8), &IsmConfig::auto(&room(0.8))).unwrap();
    let live = simulate_ism(&room(0.15), &IsmConfig::auto(&room(0.15))).unwrap();
    let drr_damped = direct_to_reverberant_ratio(&damped).unwrap();
    let drr_live = direct_to_reverberant_ratio(&live).unwrap();
    assert!(
        drr_damped > drr_live,
        "damped {drr_damped:.2} dB !> live {drr_live:.2} dB"
    );
}

#[test]
fn both_generators_place_the_direct_arrival_identically() {
    let scene = room(0.4);
    let ism = simulate_ism(&scene, &IsmConfig::auto(&scene)).unwrap();
    let cfg = TracerConfig {
        num_rays: 20_000,
        ..TracerConfig::auto(&scene, 5)
    };
    let gas = simulate_gas(&scene, &cfg).unwrap();
    let peak = |s: &[f64]| {
        s.iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
            .unwrap()
            .0 as i64
    };
    let expected =
        (scene.source_receiver_distance() / scene.speed_of_sound * 8000.0).round() as i64;
    assert!((peak(ism.samples()) - expected).abs() <= 1);
    assert!((peak(gas.samples()) - expected).abs() <= 1);
}
