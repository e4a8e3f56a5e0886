//! Curriculum construction: absorption-sweep generation plans, T60-ordered
//! RIR pools, the epoch frontier that gradually unlocks harder data, and
//! multi-stage training-plan manifests.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{estimate_t60, AnalysisError};
use crate::io::{self, IoError, RirSidecar};
use crate::ism::{simulate_ism, IsmConfig, IsmError};
use crate::math::Vec3;
use crate::scene::{Scene, SceneError};
use crate::signal::Provenance;
use crate::tracer::{simulate_gas, TracerConfig, TracerError};

/// Minimum clearance between drawn positions and any wall, meters.
pub const WALL_CLEARANCE_M: f64 = 0.5;

/// Minimum source-receiver separation for drawn positions, meters.
pub const MIN_SEPARATION_M: f64 = 0.5;

#[derive(Debug, Error)]
pub enum CurriculumError {
    #[error("step {0} does not divide 1 within 1e-9")]
    BadStep(f64),
    #[error("rirs_per_step must be > 0")]
    BadRirsPerStep,
    #[error("sweep needs at least one room template")]
    NoRooms,
    #[error("room {index} too small for {WALL_CLEARANCE_M} m wall clearance")]
    RoomTooSmall { index: usize },
    #[error("epoch {epoch} outside 1..={total}")]
    EpochOutOfRange { epoch: usize, total: usize },
    #[error("schedule parameters must be positive")]
    BadScheduleParams,
    #[error("pool is not sorted ascending by T60")]
    PoolNotSorted,
    #[error("duplicate stage name `{0}`")]
    DuplicateStageName(String),
    #[error("stage `{stage}` references unknown stage `{referenced}`")]
    UnknownPretrainStage { stage: String, referenced: String },
    #[error("stage `{stage}` must reference an earlier stage, not `{referenced}`")]
    PretrainNotEarlier { stage: String, referenced: String },
    #[error("pool directory {0} is missing")]
    MissingPoolDir(PathBuf),
    #[error("pool directory {0} contains no WAV files")]
    EmptyPoolDir(PathBuf),
    #[error("pool index file {0} is missing")]
    MissingPoolIndex(PathBuf),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Ism(#[from] IsmError),
    #[error(transparent)]
    Tracer(#[from] TracerError),
    #[error(transparent)]
    Io(#[from] IoError),
}

/// Which simulator realizes a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Generator {
    #[serde(rename = "ism")]
    Ism,
    #[serde(rename = "gas")]
    Gas,
}

/// One planned RIR: a room template index, an absorption value, and seeded
/// endpoint positions.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SweepEntry {
    pub index: usize,
    pub alpha: f64,
    pub room_index: usize,
    pub source: Vec3,
    pub receiver: Vec3,
    pub seed: u64,
}

/// Deterministic absorption-sweep generation plan.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepPlan {
    pub schema_version: u32,
    pub generator: Generator,
    pub seed: u64,
    pub rirs_per_step: usize,
    pub absorption_steps: Vec<f64>,
    /// Room templates; their materials (scattering), c, and fs carry over,
    /// absorption and positions come from each entry.
    pub rooms: Vec<Scene>,
    pub entries: Vec<SweepEntry>,
}

impl SweepPlan {
    /// Scene realizing one entry of the plan.
    pub fn realize(&self, entry: &SweepEntry) -> Scene {
        let template = &self.rooms[entry.room_index];
        let mut scene = template.with_uniform_absorption(entry.alpha);
        scene.source_pos = entry.source;
        scene.receiver_pos = entry.receiver;
        scene.meta = None;
        scene
    }
}

fn splitmix(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn draw_point(rng: &mut ChaCha8Rng, dims: Vec3) -> Vec3 {
    Vec3::new(
        rng.random_range(WALL_CLEARANCE_M..dims.x - WALL_CLEARANCE_M),
        rng.random_range(WALL_CLEARANCE_M..dims.y - WALL_CLEARANCE_M),
        rng.random_range(WALL_CLEARANCE_M..dims.z - WALL_CLEARANCE_M),
    )
}

/// Builds the absorption grid `{step, 2·step, …, 1.0}` (α = 0 excluded: a
/// lossless room never decays) and one seeded entry per (α value, repeat).
/// Rooms are cycled in entry order.
pub fn build_sweep_plan(
    rooms: &[Scene],
    step: f64,
    rirs_per_step: usize,
    generator: Generator,
    seed: u64,
) -> Result<SweepPlan, CurriculumError> {
    if rooms.is_empty() {
        return Err(CurriculumError::NoRooms);
    }
    if rirs_per_step == 0 {
        return Err(CurriculumError::BadRirsPerStep);
    }
    if !(step > 0.0 && step <= 1.0) {
        return Err(CurriculumError::BadStep(step));
    }
    let num_steps = (1.0 / step).round() as usize;
    if num_steps == 0 || (num_steps as f64 * step - 1.0).abs() > 1e-9 {
        return Err(CurriculumError::BadStep(step));
    }
    for (index, room) in rooms.iter().enumerate() {
        room.check()?;
        if room.min_dimension() <= 2.0 * WALL_CLEARANCE_M {
            return Err(CurriculumError::RoomTooSmall { index });
        }
    }

    let absorption_steps: Vec<f64> = (1..=num_steps)
        .map(|k| (k as f64 * step).min(1.0))
        .collect();

    let mut entries = Vec::with_capacity(num_steps * rirs_per_step);
    for (step_i, &alpha) in absorption_steps.iter().enumerate() {
        for j in 0..rirs_per_step {
            let index = step_i * rirs_per_step + j;
            let room_index = index % rooms.len();
            let dims = rooms[room_index].room_dims;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(index as u64);
            let source = draw_point(&mut rng, dims);
            let mut receiver = draw_point(&mut rng, dims);
            while (receiver - source).norm() < MIN_SEPARATION_M {
                receiver = draw_point(&mut rng, dims);
            }
            entries.push(SweepEntry {
                index,
                alpha,
                room_index,
                source,
                receiver,
                seed: splitmix(seed, index as u64),
            });
        }
    }
    Ok(SweepPlan {
        schema_version: 1,
        generator,
        seed,
        rirs_per_step,
        absorption_steps,
        rooms: rooms.to_vec(),
        entries,
    })
}

/// Execution knobs for [`execute_sweep`]; defaults match the generators'.
#[derive(Debug, Clone)]
pub struct SweepExecOptions {
    /// Ray count for GAS entries.
    pub num_rays: usize,
    /// Fixed duration override; per-scene Sabine-derived when None.
    pub duration_s: Option<f64>,
}

impl Default for SweepExecOptions {
    fn default() -> Self {
        SweepExecOptions {
            num_rays: 100_000,
            duration_s: None,
        }
    }
}

/// Runs every plan entry and writes `rir_XXXXX.wav` plus sidecars under
/// `out_dir`. Entries are independent jobs; outputs do not depend on thread
/// count. Returns the written paths in entry order.
pub fn execute_sweep(
    plan: &SweepPlan,
    out_dir: &Path,
    opts: &SweepExecOptions,
) -> Result<Vec<PathBuf>, CurriculumError> {
    std::fs::create_dir_all(out_dir).map_err(|source| IoError::Write {
        path: out_dir.display().to_string(),
        source,
    })?;
    let results: Vec<Result<PathBuf, CurriculumError>> = plan
        .entries
        .par_iter()
        .map(|entry| {
            let scene = plan.realize(entry).validate()?;
            let path = out_dir.join(format!("rir_{:05}.wav", entry.index));
            let (rir, generator_echo) = match plan.generator {
                Generator::Ism => {
                    let mut cfg = IsmConfig::auto(&scene);
                    if let Some(d) = opts.duration_s {
                        cfg.duration_s = d;
                    }
                    let rir = simulate_ism(&scene, &cfg)?;
                    let echo = serde_json::json!({
                        "method": "ism",
                        "max_order": cfg.max_order,
                        "duration_s": cfg.duration_s,
                    });
                    (rir, echo)
                }
                Generator::Gas => {
                    let mut cfg = TracerConfig::auto(&scene, entry.seed);
                    cfg.num_rays = opts.num_rays;
                    if let Some(d) = opts.duration_s {
                        cfg.duration_s = d;
                    }
                    let rir = simulate_gas(&scene, &cfg)?;
                    let echo = serde_json::json!({
                        "method": "gas",
                        "num_rays": cfg.num_rays,
                        "duration_s": cfg.duration_s,
                        "receiver_radius": cfg.receiver_radius,
                    });
                    (rir, echo)
                }
            };
            io::write_wav(&path, rir.samples(), rir.sample_rate())?;
            let mut sidecar = RirSidecar::for_rir(&rir);
            sidecar.alpha_uniform = Some(entry.alpha);
            sidecar.seed = Some(entry.seed);
            sidecar.room_dims = Some(scene.room_dims.into());
            sidecar.generator = Some(generator_echo);
            io::write_sidecar(&io::sidecar_path(&path), &sidecar)?;
            Ok(path)
        })
        .collect();
    results.into_iter().collect()
}

/// One annotated pool member.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PoolEntry {
    pub path: PathBuf,
    pub t60_s: f64,
    pub provenance: Provenance,
    pub rank: usize,
}

/// A pool member that could not be annotated, with the reason.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuarantinedRir {
    pub path: PathBuf,
    pub reason: String,
}

/// Annotates every RIR with its estimated T60 and sorts ascending, ties
/// broken by path. Unanalyzable files are quarantined, not fatal.
pub fn sort_pool_by_t60(paths: &[PathBuf]) -> (Vec<PoolEntry>, Vec<QuarantinedRir>) {
    let annotated: Vec<Result<(PathBuf, f64, Provenance), QuarantinedRir>> = paths
        .par_iter()
        .map(|path| {
            let rir = io::read_rir(path).map_err(|e| QuarantinedRir {
                path: path.clone(),
                reason: e.to_string(),
            })?;
            let t60 = estimate_t60(&rir).map_err(|e: AnalysisError| QuarantinedRir {
                path: path.clone(),
                reason: e.to_string(),
            })?;
            Ok((path.clone(), t60, rir.provenance()))
        })
        .collect();

    let mut pool = Vec::new();
    let mut quarantine = Vec::new();
    for item in annotated {
        match item {
            Ok(x) => pool.push(x),
            Err(q) => quarantine.push(q),
        }
    }
    pool.sort_by(|a, b| {
        a.1.partial_cmp(&b.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.0.cmp(&b.0))
    });
    let pool = pool
        .into_iter()
        .enumerate()
        .map(|(rank, (path, t60_s, provenance))| PoolEntry {
            path,
            t60_s,
            provenance,
            rank,
        })
        .collect();
    (pool, quarantine)
}

/// T60-ascending pool plus the frontier parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurriculumSchedule {
    pub schema_version: u32,
    pub pool: Vec<PoolEntry>,
    pub block_size: usize,
    pub period_epochs: usize,
    pub total_epochs: usize,
}

impl CurriculumSchedule {
    pub fn new(pool: Vec<PoolEntry>) -> Result<Self, CurriculumError> {
        CurriculumSchedule::with_params(pool, 400, 2, 200)
    }

    pub fn with_params(
        pool: Vec<PoolEntry>,
        block_size: usize,
        period_epochs: usize,
        total_epochs: usize,
    ) -> Result<Self, CurriculumError> {
        if block_size == 0 || period_epochs == 0 || total_epochs == 0 {
            return Err(CurriculumError::BadScheduleParams);
        }
        if pool.windows(2).any(|w| w[1].t60_s < w[0].t60_s) {
            return Err(CurriculumError::PoolNotSorted);
        }
        Ok(CurriculumSchedule {
            schema_version: 1,
            pool,
            block_size,
            period_epochs,
            total_epochs,
        })
    }

    /// Number of pool entries available at a 1-based epoch:
    /// `min(pool, block_size · (1 + ⌊(epoch − 1) / period⌋))`.
    pub fn frontier(&self, epoch: usize) -> Result<usize, CurriculumError> {
        if epoch < 1 || epoch > self.total_epochs {
            return Err(CurriculumError::EpochOutOfRange {
                epoch,
                total: self.total_epochs,
            });
        }
        let blocks = 1 + (epoch - 1) / self.period_epochs;
        Ok((self.block_size * blocks).min(self.pool.len()))
    }

    /// Entries available for sampling at the given epoch.
    pub fn available(&self, epoch: usize) -> Result<&[PoolEntry], CurriculumError> {
        let count = self.frontier(epoch)?;
        Ok(&self.pool[..count])
    }
}

/// Histogram of pool T60 values with bins `[k·w, (k+1)·w)`.
pub fn t60_histogram(pool: &[PoolEntry], bin_width_s: f64) -> Vec<u64> {
    assert!(bin_width_s > 0.0);
    if pool.is_empty() {
        return Vec::new();
    }
    let max_bin = pool
        .iter()
        .map(|e| (e.t60_s / bin_width_s) as usize)
        .max()
        .unwrap();
    let mut counts = vec![0u64; max_bin + 1];
    for entry in pool {
        counts[(entry.t60_s / bin_width_s) as usize] += 1;
    }
    counts
}

/// Pool reference for one training stage.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", content = "path")]
pub enum PoolRef {
    /// Dry pre-training; no RIR pool.
    #[serde(rename = "anechoic")]
    Anechoic,
    /// Pool index (JSON-lines of [`PoolEntry`]) produced by a sweep + sort.
    #[serde(rename = "generated")]
    Generated(PathBuf),
    /// Directory of externally produced RIR WAVs.
    #[serde(rename = "external")]
    External(PathBuf),
}

/// One stage of a multi-stage training pipeline.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageSpec {
    pub name: String,
    pub pool: PoolRef,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pretrained_from: Option<String>,
    /// Frontier parameters when the stage uses curriculum ordering.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub curriculum: Option<CurriculumParams>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct CurriculumParams {
    pub block_size: usize,
    pub period_epochs: usize,
    pub total_epochs: usize,
}

/// Validated, ordered multi-stage training manifest. Declarative only: it is
/// consumed by an external trainer.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StagePlan {
    pub schema_version: u32,
    pub stages: Vec<StageSpec>,
}

/// Validates stage ordering, references, and pool existence.
pub fn build_stage_plan(stages: Vec<StageSpec>) -> Result<StagePlan, CurriculumError> {
    let mut seen: Vec<&str> = Vec::new();
    for stage in &stages {
        if seen.iter().any(|n| *n == stage.name) {
            return Err(CurriculumError::DuplicateStageName(stage.name.clone()));
        }
        if let Some(parent) = &stage.pretrained_from {
            if !seen.iter().any(|n| n == parent) {
                let err = if stages.iter().any(|s| &s.name == parent) {
                    CurriculumError::PretrainNotEarlier {
                        stage: stage.name.clone(),
                        referenced: parent.clone(),
                    }
                } else {
                    CurriculumError::UnknownPretrainStage {
                        stage: stage.name.clone(),
                        referenced: parent.clone(),
                    }
                };
                return Err(err);
            }
        }
        match &stage.pool {
            PoolRef::Anechoic => {}
            PoolRef::Generated(index) => {
                if !index.exists() {
                    return Err(CurriculumError::MissingPoolIndex(index.clone()));
                }
            }
            PoolRef::External(dir) => {
                if !dir.is_dir() {
                    return Err(CurriculumError::MissingPoolDir(dir.clone()));
                }
                let has_wav = std::fs::read_dir(dir)
                    .map_err(|source| IoError::Read {
                        path: dir.display().to_string(),
                        source,
                    })?
                    .flatten()
                    .any(|e| {
                        e.path()
                            .extension()
                            .is_some_and(|ext| ext.eq_ignore_ascii_case("wav"))
                    });
                if !has_wav {
                    return Err(CurriculumError::EmptyPoolDir(dir.clone()));
                }
            }
        }
        seen.push(&stage.name);
    }
    Ok(StagePlan {
        schema_version: 1,
        stages,
    })
}
