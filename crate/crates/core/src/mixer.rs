//! Reverberant mixture construction: dry speech × RIR convolution,
//! "min"-criterion mixing, reproducible batch builds, and frontier-limited
//! RIR draws.
//!
//! Samples pass through as floats end to end; no clipping or normalization is
//! ever applied.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsp::convolve_full;
use crate::io::{self, IoError};
use crate::signal::{AudioSignal, ImpulseResponse, Provenance, SignalError};

#[derive(Debug, Error)]
pub enum MixError {
    #[error("sample rate mismatch: {0} Hz vs {1} Hz")]
    SampleRateMismatch(u32, u32),
    #[error("mixture needs at least one source")]
    NoSources,
    #[error("gain count {gains} does not match source count {sources}")]
    GainCountMismatch { gains: usize, sources: usize },
    #[error("empty RIR pool frontier")]
    EmptyFrontier,
    #[error("frontier {frontier} exceeds pool size {pool}")]
    FrontierTooLarge { frontier: usize, pool: usize },
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Signal(#[from] SignalError),
}

/// Full linear convolution of a dry signal with an impulse response.
///
/// Output length is `N + L − 1`.
pub fn convolve(dry: &AudioSignal, rir: &ImpulseResponse) -> Result<AudioSignal, MixError> {
    if dry.sample_rate() != rir.sample_rate() {
        return Err(MixError::SampleRateMismatch(
            dry.sample_rate(),
            rir.sample_rate(),
        ));
    }
    let out = convolve_full(dry.samples(), rir.samples());
    Ok(AudioSignal::new(out, dry.sample_rate())?)
}

/// Truncates all sources to the shortest length, applies per-source gains,
/// and sums. Returns the mixture and the gain-scaled truncated sources (the
/// separation targets), so the mixture is exactly the sum of the targets.
pub fn mix_min(
    sources: &[AudioSignal],
    gains_db: &[f64],
) -> Result<(AudioSignal, Vec<AudioSignal>), MixError> {
    if sources.is_empty() {
        return Err(MixError::NoSources);
    }
    if gains_db.len() != sources.len() {
        return Err(MixError::GainCountMismatch {
            gains: gains_db.len(),
            sources: sources.len(),
        });
    }
    let rate = sources[0].sample_rate();
    for s in sources {
        if s.sample_rate() != rate {
            return Err(MixError::SampleRateMismatch(rate, s.sample_rate()));
        }
    }
    let min_len = sources.iter().map(AudioSignal::len).min().unwrap();
    let mut truncated = Vec::with_capacity(sources.len());
    let mut mixture = vec![0.0; min_len];
    for (source, &gain_db) in sources.iter().zip(gains_db) {
        let gain = 10f64.powf(gain_db / 20.0);
        let scaled: Vec<f64> = source.samples()[..min_len].iter().map(|s| s * gain).collect();
        for (m, s) in mixture.iter_mut().zip(&scaled) {
            *m += s;
        }
        truncated.push(AudioSignal::new(scaled, rate)?);
    }
    Ok((AudioSignal::new(mixture, rate)?, truncated))
}

/// Recipe for one two-speaker reverberant mixture.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MixtureSpec {
    pub output_id: String,
    pub source_paths: [PathBuf; 2],
    pub rir_refs: [PathBuf; 2],
    pub gains_db: [f64; 2],
    pub seed: u64,
}

/// Manifest row recording everything needed to rebuild a mixture.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestRow {
    pub output_id: String,
    pub source_paths: [PathBuf; 2],
    pub rir_refs: [PathBuf; 2],
    pub rir_provenance: [Provenance; 2],
    pub gains_db: [f64; 2],
    pub seed: u64,
    pub lengths: MixLengths,
    pub mixture_path: PathBuf,
    pub target_paths: [PathBuf; 2],
}

/// Sample counts before and after the min-criterion truncation.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MixLengths {
    /// Convolved source lengths before truncation.
    pub sources: [usize; 2],
    /// Mixture (and target) length after truncation.
    pub mixture: usize,
}

impl ManifestRow {
    /// Recovers the spec that produced this row.
    pub fn to_spec(&self) -> MixtureSpec {
        MixtureSpec {
            output_id: self.output_id.clone(),
            source_paths: self.source_paths.clone(),
            rir_refs: self.rir_refs.clone(),
            gains_db: self.gains_db,
            seed: self.seed,
        }
    }
}

/// Executes one mixture spec: reads sources and RIRs, convolves, mixes with
/// the min criterion, and writes `<id>_mix.wav`, `<id>_s1.wav`, `<id>_s2.wav`
/// under `out_dir`. Fully deterministic; re-running a spec produces
/// byte-identical files.
pub fn build_mixture(spec: &MixtureSpec, out_dir: &Path) -> Result<ManifestRow, MixError> {
    let mut reverberant = Vec::with_capacity(2);
    let mut provenance = Vec::with_capacity(2);
    for k in 0..2 {
        let dry = io::read_wav(&spec.source_paths[k])?;
        let rir = io::read_rir(&spec.rir_refs[k])?;
        provenance.push(rir.provenance());
        reverberant.push(convolve(&dry, &rir)?);
    }
    let source_lengths = [reverberant[0].len(), reverberant[1].len()];
    let (mixture, targets) = mix_min(&reverberant, &spec.gains_db)?;

    let mixture_path = out_dir.join(format!("{}_mix.wav", spec.output_id));
    let target_paths = [
        out_dir.join(format!("{}_s1.wav", spec.output_id)),
        out_dir.join(format!("{}_s2.wav", spec.output_id)),
    ];
    io::write_wav(&mixture_path, mixture.samples(), mixture.sample_rate())?;
    for (path, target) in target_paths.iter().zip(&targets) {
        io::write_wav(path, target.samples(), target.sample_rate())?;
    }
    Ok(ManifestRow {
        output_id: spec.output_id.clone(),
        source_paths: spec.source_paths.clone(),
        rir_refs: spec.rir_refs.clone(),
        rir_provenance: [provenance[0], provenance[1]],
        gains_db: spec.gains_db,
        seed: spec.seed,
        lengths: MixLengths {
            sources: source_lengths,
            mixture: mixture.len(),
        },
        mixture_path,
        target_paths,
    })
}

/// Uniform draw among the first `frontier_count` entries of an ordered pool,
/// returning the drawn entry.
pub fn sample_rir<'p>(
    pool: &'p [crate::curriculum::PoolEntry],
    frontier_count: usize,
    seed: u64,
    draw_counter: u64,
) -> Result<&'p crate::curriculum::PoolEntry, MixError> {
    let index = sample_rir_index(pool.len(), frontier_count, seed, draw_counter)?;
    Ok(&pool[index])
}

/// Uniform draw among the first `frontier_count` entries of an ordered pool.
///
/// Deterministic given `(seed, draw_counter)`: each counter value uses its
/// own ChaCha stream.
pub fn sample_rir_index(
    pool_len: usize,
    frontier_count: usize,
    seed: u64,
    draw_counter: u64,
) -> Result<usize, MixError> {
    if frontier_count == 0 {
        return Err(MixError::EmptyFrontier);
    }
    if frontier_count > pool_len {
        return Err(MixError::FrontierTooLarge {
            frontier: frontier_count,
            pool: pool_len,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(draw_counter);
    Ok(rng.random_range(0..frontier_count))
}
