//! Stochastic geometric acoustics: energy path tracing with a per-surface
//! specular/diffuse split, followed by noise-carrier pressure reconstruction.
//!
//! Rays start at the source with equal energy shares. At each wall hit the
//! energy is scaled by (1 − α); the bounce is diffuse (cosine-weighted about
//! the inward normal) with probability s, specular otherwise. A ray whose
//! segment crosses the receiver sphere deposits its remaining energy into the
//! time bin of the crossing and terminates, so total received energy can
//! never exceed the energy emitted.
//!
//! Every ray draws from its own counter-derived ChaCha stream, which makes
//! the histogram independent of thread count and batch size.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::dsp::add_fractional_impulse;
use crate::ism::DEFAULT_DELAY_TAPS;
use crate::math::Vec3;
use crate::scene::{Scene, SceneError, Wall};
use crate::signal::{ImpulseResponse, Provenance, SignalError};

const GEOM_EPS: f64 = 1e-12;

/// Rays per deterministic reduction batch.
const RAY_BATCH: usize = 4096;

/// Stream-id namespace for per-bin noise carriers, disjoint from ray ids.
const BIN_STREAM_BASE: u64 = 1 << 62;

#[derive(Debug, Error)]
pub enum TracerError {
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error("invalid tracer config: {0}")]
    BadConfig(&'static str),
    #[error("receiver sphere (radius {radius} m) contains the source (distance {distance} m)")]
    ReceiverContainsSource { radius: f64, distance: f64 },
}

/// Parameters for [`trace_rays`] / [`simulate_gas`].
#[derive(Debug, Clone, PartialEq)]
pub struct TracerConfig {
    pub num_rays: usize,
    pub max_bounces: usize,
    /// Relative energy threshold below which a ray is terminated.
    pub energy_floor: f64,
    pub receiver_radius: f64,
    pub bin_width_s: f64,
    pub duration_s: f64,
    pub seed: u64,
}

impl TracerConfig {
    pub fn new(duration_s: f64, seed: u64) -> Self {
        TracerConfig {
            num_rays: 100_000,
            max_bounces: 200,
            energy_floor: 1e-6,
            receiver_radius: 0.25,
            bin_width_s: 1e-3,
            duration_s,
            seed,
        }
    }

    /// Duration of 1.25 × the scene's Sabine T60 (floor 0.25 s), defaults
    /// otherwise.
    pub fn auto(scene: &Scene, seed: u64) -> Self {
        TracerConfig::new((1.25 * scene.sabine_t60()).max(0.25), seed)
    }

    pub fn validate(&self, scene: &Scene) -> Result<(), TracerError> {
        if self.num_rays < 1 {
            return Err(TracerError::BadConfig("num_rays must be >= 1"));
        }
        if self.max_bounces < 1 {
            return Err(TracerError::BadConfig("max_bounces must be >= 1"));
        }
        if !(self.energy_floor >= 0.0 && self.energy_floor < 1.0) {
            return Err(TracerError::BadConfig("energy_floor must be in [0, 1)"));
        }
        if !(self.receiver_radius > 0.0 && self.receiver_radius < scene.min_dimension() / 2.0) {
            return Err(TracerError::BadConfig(
                "receiver_radius must be in (0, min room dimension / 2)",
            ));
        }
        if self.bin_width_s <= 0.0 || !self.bin_width_s.is_finite() {
            return Err(TracerError::BadConfig("bin_width_s must be > 0"));
        }
        if self.bin_width_s * (scene.sample_rate as f64) < 1.0 {
            return Err(TracerError::BadConfig(
                "bin_width_s must span at least one sample at the scene sample rate",
            ));
        }
        if self.duration_s <= 0.0 || !self.duration_s.is_finite() {
            return Err(TracerError::BadConfig("duration_s must be positive and finite"));
        }
        let distance = scene.source_receiver_distance();
        if distance <= self.receiver_radius {
            return Err(TracerError::ReceiverContainsSource {
                radius: self.receiver_radius,
                distance,
            });
        }
        Ok(())
    }
}

/// Received energy per time bin, before pressure reconstruction.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyHistogram {
    bins: Vec<f64>,
    bin_width_s: f64,
    sample_rate: u32,
}

impl EnergyHistogram {
    pub fn new(bins: Vec<f64>, bin_width_s: f64, sample_rate: u32) -> Result<Self, TracerError> {
        if bin_width_s <= 0.0 || !bin_width_s.is_finite() || sample_rate == 0 {
            return Err(TracerError::BadConfig(
                "bin width and sample rate must be positive",
            ));
        }
        if bin_width_s * (sample_rate as f64) < 1.0 {
            return Err(TracerError::BadConfig(
                "bin_width_s must span at least one sample",
            ));
        }
        if bins.iter().any(|b| !b.is_finite() || *b < 0.0) {
            return Err(TracerError::BadConfig("bins must be finite and >= 0"));
        }
        Ok(EnergyHistogram {
            bins,
            bin_width_s,
            sample_rate,
        })
    }

    pub fn bins(&self) -> &[f64] {
        &self.bins
    }

    pub fn bin_width_s(&self) -> f64 {
        self.bin_width_s
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn total_energy(&self) -> f64 {
        self.bins.iter().sum()
    }

    /// Returns a copy with every bin scaled by `k`.
    pub fn scaled(&self, k: f64) -> EnergyHistogram {
        EnergyHistogram {
            bins: self.bins.iter().map(|b| b * k).collect(),
            bin_width_s: self.bin_width_s,
            sample_rate: self.sample_rate,
        }
    }

    /// Sample index range covered by bin `k` at the target sample rate.
    pub fn bin_span(&self, k: usize) -> (usize, usize) {
        let w = self.bin_width_s * self.sample_rate as f64;
        let start = (k as f64 * w).round() as usize;
        let end = ((k + 1) as f64 * w).round() as usize;
        (start, end)
    }

    /// CSV rows of `bin_start_s,energy`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (k, b) in self.bins.iter().enumerate() {
            out.push_str(&format!("{},{}\n", k as f64 * self.bin_width_s, b));
        }
        out
    }
}

fn uniform_sphere(rng: &mut ChaCha8Rng) -> Vec3 {
    let z = 1.0 - 2.0 * rng.random::<f64>();
    let phi = 2.0 * PI * rng.random::<f64>();
    let r = (1.0 - z * z).max(0.0).sqrt();
    Vec3::new(r * phi.cos(), r * phi.sin(), z)
}

fn cosine_hemisphere(rng: &mut ChaCha8Rng, normal: Vec3) -> Vec3 {
    let u1 = rng.random::<f64>();
    let u2 = rng.random::<f64>();
    let r = u1.sqrt();
    let phi = 2.0 * PI * u2;
    let (t, b) = normal.tangent_frame();
    let local_z = (1.0 - u1).max(0.0).sqrt();
    t * (r * phi.cos()) + b * (r * phi.sin()) + normal * local_z
}

/// Nearest wall hit from `pos` along unit `dir`. Returns (distance, wall).
fn nearest_wall(scene: &Scene, pos: Vec3, dir: Vec3) -> (f64, Wall) {
    let mut best = (f64::INFINITY, Wall::XLow);
    for axis in 0..3 {
        let d = dir.axis(axis);
        if d.abs() < GEOM_EPS {
            continue;
        }
        let (target, wall) = if d > 0.0 {
            let wall = match axis {
                0 => Wall::XHigh,
                1 => Wall::YHigh,
                _ => Wall::ZHigh,
            };
            (scene.room_dims.axis(axis), wall)
        } else {
            let wall = match axis {
                0 => Wall::XLow,
                1 => Wall::YLow,
                _ => Wall::ZLow,
            };
            (0.0, wall)
        };
        let t = (target - pos.axis(axis)) / d;
        if t > GEOM_EPS && t < best.0 {
            best = (t, wall);
        }
    }
    best
}

/// First intersection parameter of segment `pos + t·dir, t ∈ (ε, t_max)` with
/// the sphere at `center`.
fn sphere_crossing(pos: Vec3, dir: Vec3, t_max: f64, center: Vec3, radius: f64) -> Option<f64> {
    let oc = pos - center;
    let b = oc.dot(dir);
    let c = oc.norm_squared() - radius * radius;
    let disc = b * b - c;
    if disc < 0.0 {
        return None;
    }
    let sqrt_disc = disc.sqrt();
    [-b - sqrt_disc, -b + sqrt_disc]
        .into_iter()
        .find(|&t| t > GEOM_EPS && t < t_max)
}

fn inward_normal(wall: Wall) -> Vec3 {
    let sign = if wall.is_low() { 1.0 } else { -1.0 };
    let mut n = Vec3::ZERO;
    n.set_axis(wall.axis(), sign);
    n
}

fn trace_one_ray(
    scene: &Scene,
    cfg: &TracerConfig,
    ray_index: u64,
    include_direct: bool,
    bins: &mut [f64],
) {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(ray_index);

    let mut pos = scene.source_pos;
    let mut dir = uniform_sphere(&mut rng);
    let mut energy = 1.0f64;
    let max_dist = cfg.duration_s * scene.speed_of_sound;
    let deposit_scale = 1.0 / cfg.num_rays as f64;
    let mut dist = 0.0f64;
    let mut bounces = 0usize;

    loop {
        let (t_wall, wall) = nearest_wall(scene, pos, dir);
        if !t_wall.is_finite() {
            return; // degenerate direction
        }
        let on_direct_segment = bounces == 0;
        if include_direct || !on_direct_segment {
            if let Some(t_s) = sphere_crossing(
                pos,
                dir,
                t_wall,
                scene.receiver_pos,
                cfg.receiver_radius,
            ) {
                let total = dist + t_s;
                if total <= max_dist {
                    let time = total / scene.speed_of_sound;
                    let bin = (time / cfg.bin_width_s) as usize;
                    if bin < bins.len() {
                        bins[bin] += energy * deposit_scale;
                    }
                }
                return;
            }
        }
        dist += t_wall;
        if dist >= max_dist {
            return;
        }
        bounces += 1;
        if bounces > cfg.max_bounces {
            return;
        }
        pos = pos + dir * t_wall;
        // Snap onto the wall plane; a near-corner hit can overshoot the
        // neighbouring planes by an ulp, so clamp every axis.
        let axis = wall.axis();
        pos.set_axis(
            axis,
            if wall.is_low() {
                0.0
            } else {
                scene.room_dims.axis(axis)
            },
        );
        for a in 0..3 {
            pos.set_axis(a, pos.axis(a).clamp(0.0, scene.room_dims.axis(a)));
        }
        let material = scene.material(wall);
        energy *= 1.0 - material.absorption;
        if energy < cfg.energy_floor || energy == 0.0 {
            return;
        }
        let normal = inward_normal(wall);
        let diffuse = rng.random::<f64>() < material.scattering;
        dir = if diffuse {
            cosine_hemisphere(&mut rng, normal)
        } else {
            let mut d = dir;
            d.set_axis(axis, -d.axis(axis));
            d
        };
    }
}

fn trace_impl(
    scene: &Scene,
    cfg: &TracerConfig,
    include_direct: bool,
) -> Result<EnergyHistogram, TracerError> {
    scene.check()?;
    cfg.validate(scene)?;
    let num_bins = (cfg.duration_s / cfg.bin_width_s).ceil() as usize;

    // Fixed-size batches, merged in batch order: the result does not depend
    // on how rayon schedules them.
    let num_batches = cfg.num_rays.div_ceil(RAY_BATCH);
    let partials: Vec<Vec<f64>> = (0..num_batches)
        .into_par_iter()
        .map(|batch| {
            let mut bins = vec![0.0; num_bins];
            let start = batch * RAY_BATCH;
            let end = ((batch + 1) * RAY_BATCH).min(cfg.num_rays);
            for ray in start..end {
                trace_one_ray(scene, cfg, ray as u64, include_direct, &mut bins);
            }
            bins
        })
        .collect();

    let mut bins = vec![0.0; num_bins];
    for partial in partials {
        for (acc, v) in bins.iter_mut().zip(partial) {
            *acc += v;
        }
    }
    EnergyHistogram::new(bins, cfg.bin_width_s, scene.sample_rate)
}

/// Traces `cfg.num_rays` rays and returns the received-energy histogram.
///
/// Deterministic given the seed; independent of thread count.
pub fn trace_rays(scene: &Scene, cfg: &TracerConfig) -> Result<EnergyHistogram, TracerError> {
    trace_impl(scene, cfg, true)
}

/// Converts an energy histogram to a pressure response using a seeded noise
/// carrier per bin, normalized so each bin's sample-span energy equals the
/// bin's histogram energy exactly (to roundoff).
pub fn histogram_to_rir(hist: &EnergyHistogram, seed: u64) -> ImpulseResponse {
    let num_bins = hist.bins().len();
    let n_samples = if num_bins == 0 {
        1
    } else {
        hist.bin_span(num_bins - 1).1.max(1)
    };
    let mut samples = vec![0.0; n_samples];
    for (k, &energy) in hist.bins().iter().enumerate() {
        if energy <= 0.0 {
            continue;
        }
        let (start, end) = hist.bin_span(k);
        let end = end.min(n_samples);
        if start >= end {
            continue;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(BIN_STREAM_BASE + k as u64);
        let normal = rand_distr::StandardNormal;
        let carrier: Vec<f64> = (start..end).map(|_| rng.sample(normal)).collect();
        let norm_sq: f64 = carrier.iter().map(|g| g * g).sum();
        if norm_sq <= 0.0 {
            samples[start] = energy.sqrt();
            continue;
        }
        let scale = (energy / norm_sq).sqrt();
        for (slot, g) in samples[start..end].iter_mut().zip(carrier) {
            *slot = g * scale;
        }
    }
    ImpulseResponse::new(samples, hist.sample_rate(), Provenance::Gas)
        .expect("finite noise carrier")
}

/// Conversion factor from received-energy fractions to pressure-squared
/// units, calibrated so the traced field matches the deterministic direct
/// path amplitude `1/(4πd)`: a receiver of cross-section πr² at distance d
/// captures `r²/(4d²)` of the emitted unit energy, while the direct pressure
/// kernel carries `1/(4πd)²`.
pub fn pressure_calibration(receiver_radius: f64) -> f64 {
    1.0 / (4.0 * PI * PI * receiver_radius * receiver_radius)
}

/// Full stochastic simulation: traced reflections plus a deterministic
/// direct-path impulse at delay `d/c` with amplitude `1/(4πd)`.
pub fn simulate_gas(scene: &Scene, cfg: &TracerConfig) -> Result<ImpulseResponse, TracerError> {
    let hist = trace_impl(scene, cfg, false)?;
    let calibrated = hist.scaled(pressure_calibration(cfg.receiver_radius));
    let tail = histogram_to_rir(&calibrated, cfg.seed);
    let mut samples = tail.samples().to_vec();

    let d = scene.source_receiver_distance();
    let delay = d / scene.speed_of_sound * scene.sample_rate as f64;
    add_fractional_impulse(&mut samples, delay, 1.0 / (4.0 * PI * d), DEFAULT_DELAY_TAPS);

    Ok(
        ImpulseResponse::new(samples, scene.sample_rate, Provenance::Gas)?
            .with_scene_id(scene.content_hash()),
    )
}
