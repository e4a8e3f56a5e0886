//! Room-acoustics simulation and dataset-construction toolkit.
//!
//! Generates synthetic room impulse responses with an image source method
//! ([`ism`]) and a stochastic specular+diffuse path tracer ([`tracer`]),
//! estimates acoustic parameters ([`analysis`]), builds two-speaker
//! reverberant mixtures ([`mixer`]), schedules T60-ordered curricula and
//! multi-stage training plans ([`curriculum`]), and scores separation
//! quality ([`metrics`]).

pub mod analysis;
pub mod curriculum;
pub mod dsp;
pub mod io;
pub mod ism;
pub mod math;
pub mod metrics;
pub mod mixer;
pub mod scene;
pub mod signal;
pub mod tracer;

pub use math::Vec3;
pub use scene::{Scene, SceneError, SurfaceMaterial, Wall};
pub use signal::{AudioSignal, ImpulseResponse, Provenance, SignalError};
