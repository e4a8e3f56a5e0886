//! `gen-rir` and `sweep`: impulse response generation.

use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Args, ValueEnum};

use reverbkit_core::curriculum::{build_sweep_plan, execute_sweep, Generator, SweepExecOptions, SweepPlan};
use reverbkit_core::io::{self, RirSidecar};
use reverbkit_core::ism::{estimate_absorption_for_t60, order_for_duration, simulate_ism, IsmConfig};
use reverbkit_core::scene::Scene;
use reverbkit_core::signal::ImpulseResponse;
use reverbkit_core::tracer::{simulate_gas, trace_rays, TracerConfig};

use crate::record;

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Method {
    Ism,
    Gas,
}

#[derive(Args)]
pub struct GenRirArgs {
    /// Simulation method
    #[arg(long, value_enum)]
    method: Method,
    /// Scene config (JSON)
    #[arg(long)]
    scene: PathBuf,
    /// Output WAV path (a JSON sidecar is written next to it)
    #[arg(long)]
    out: PathBuf,
    /// Seed (required for --method gas)
    #[arg(long)]
    seed: Option<u64>,
    /// Target T60; replaces every wall's absorption via Sabine inversion
    #[arg(long, conflicts_with = "alpha")]
    t60: Option<f64>,
    /// Uniform absorption override
    #[arg(long)]
    alpha: Option<f64>,
    /// Response duration in seconds (default: 1.25 x Sabine T60, floor 0.25)
    #[arg(long)]
    duration: Option<f64>,
    /// Reflection order cap (ISM; default derived from the duration)
    #[arg(long)]
    max_order: Option<u32>,
    /// Ray count (GAS)
    #[arg(long, default_value_t = 100_000)]
    rays: usize,
    /// Disable the 50 Hz synthesis DC blocker (ISM)
    #[arg(long)]
    no_dc_block: bool,
    /// Also export the traced energy histogram as CSV (GAS)
    #[arg(long)]
    hist_out: Option<PathBuf>,
}

fn load_scene(path: &PathBuf) -> anyhow::Result<Scene> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| io::IoError::Read {
            path: path.display().to_string(),
            source,
        })
        .with_context(|| format!("loading scene {}", path.display()))?;
    let scene = Scene::from_json(&text).context("parsing scene config")?;
    Ok(scene.validate()?)
}

pub fn gen_rir(args: GenRirArgs) -> anyhow::Result<()> {
    let mut scene = load_scene(&args.scene)?;
    let mut t60_target = None;
    if let Some(t60) = args.t60 {
        let alpha = estimate_absorption_for_t60(&scene, t60)?;
        scene = scene.with_uniform_absorption(alpha).validate()?;
        t60_target = Some(t60);
    } else if let Some(alpha) = args.alpha {
        scene = scene.with_uniform_absorption(alpha).validate()?;
    }

    let (rir, generator_echo): (ImpulseResponse, serde_json::Value) = match args.method {
        Method::Ism => {
            let mut cfg = IsmConfig::auto(&scene);
            if let Some(d) = args.duration {
                cfg.duration_s = d;
                cfg.max_order = order_for_duration(&scene, d);
            }
            if let Some(k) = args.max_order {
                cfg.max_order = k;
            }
            cfg.dc_block = !args.no_dc_block;
            let rir = simulate_ism(&scene, &cfg)?;
            let echo = serde_json::json!({
                "method": "ism",
                "max_order": cfg.max_order,
                "duration_s": cfg.duration_s,
                "fractional_delay_taps": cfg.fractional_delay_taps,
                "dc_block": cfg.dc_block,
            });
            (rir, echo)
        }
        Method::Gas => {
            let Some(seed) = args.seed else {
                bail!("--seed is required for --method gas");
            };
            let mut cfg = TracerConfig::auto(&scene, seed);
            cfg.num_rays = args.rays;
            if let Some(d) = args.duration {
                cfg.duration_s = d;
            }
            let rir = simulate_gas(&scene, &cfg)?;
            if let Some(hist_path) = &args.hist_out {
                let hist = trace_rays(&scene, &cfg)?;
                std::fs::write(hist_path, format!("bin_start_s,energy\n{}", hist.to_csv()))?;
            }
            let echo = serde_json::json!({
                "method": "gas",
                "num_rays": cfg.num_rays,
                "max_bounces": cfg.max_bounces,
                "receiver_radius": cfg.receiver_radius,
                "bin_width_s": cfg.bin_width_s,
                "duration_s": cfg.duration_s,
            });
            (rir, echo)
        }
    };

    io::write_wav(&args.out, rir.samples(), rir.sample_rate())?;
    let uniform_alpha = scene.walls[1..]
        .iter()
        .all(|w| w.absorption == scene.walls[0].absorption)
        .then_some(scene.walls[0].absorption);
    let mut sidecar = RirSidecar::for_rir(&rir);
    sidecar.alpha_uniform = uniform_alpha;
    sidecar.t60_target_s = t60_target;
    sidecar.seed = args.seed;
    sidecar.room_dims = Some(scene.room_dims.into());
    sidecar.generator = Some(generator_echo);
    io::write_sidecar(&io::sidecar_path(&args.out), &sidecar)?;
    record::write_record(&args.out, false, args.seed)?;
    println!("{}", args.out.display());
    Ok(())
}

#[derive(Args)]
pub struct SweepArgs {
    /// Directory of scene configs used as room templates (cycled in order)
    #[arg(long, required_unless_present = "plan", conflicts_with = "plan")]
    scenes: Option<PathBuf>,
    /// Execute an existing sweep plan instead of building one
    #[arg(long)]
    plan: Option<PathBuf>,
    /// Absorption grid step (grid runs from step to 1.0)
    #[arg(long, default_value_t = 0.01)]
    step: f64,
    /// RIRs per absorption value
    #[arg(long, default_value_t = 400)]
    per_step: usize,
    #[arg(long, value_enum, default_value_t = Method::Gas)]
    generator: Method,
    #[arg(long, required_unless_present = "plan")]
    seed: Option<u64>,
    /// Output directory for WAVs, sidecars, the plan, and the entry manifest
    #[arg(long)]
    out_dir: PathBuf,
    /// Ray count per GAS entry
    #[arg(long, default_value_t = 100_000)]
    rays: usize,
    /// Fixed duration override (default: per-scene Sabine-derived)
    #[arg(long)]
    duration: Option<f64>,
    /// Build and write the plan without executing it
    #[arg(long)]
    plan_only: bool,
}

#[derive(serde::Serialize)]
struct SweepManifestRow<'a> {
    index: usize,
    path: &'a std::path::Path,
    alpha: f64,
    room_index: usize,
    seed: u64,
}

pub fn sweep(args: SweepArgs) -> anyhow::Result<()> {
    let plan: SweepPlan = if let Some(plan_path) = &args.plan {
        let text = std::fs::read_to_string(plan_path)
            .with_context(|| format!("loading plan {}", plan_path.display()))?;
        serde_json::from_str(&text).context("parsing sweep plan")?
    } else {
        let scenes_dir = args.scenes.as_ref().unwrap();
        let mut paths: Vec<PathBuf> = std::fs::read_dir(scenes_dir)
            .with_context(|| format!("reading scene dir {}", scenes_dir.display()))?
            .flatten()
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|e| e == "json"))
            .collect();
        paths.sort();
        if paths.is_empty() {
            bail!("no scene configs in {}", scenes_dir.display());
        }
        let rooms: Vec<Scene> = paths.iter().map(load_scene).collect::<Result<_, _>>()?;
        let generator = match args.generator {
            Method::Ism => Generator::Ism,
            Method::Gas => Generator::Gas,
        };
        build_sweep_plan(&rooms, args.step, args.per_step, generator, args.seed.unwrap())?
    };

    std::fs::create_dir_all(&args.out_dir)?;
    let plan_path = args.out_dir.join("sweep_plan.json");
    std::fs::write(&plan_path, serde_json::to_string_pretty(&plan)?)?;
    if args.plan_only {
        record::write_record(&args.out_dir, true, Some(plan.seed))?;
        println!("{}", plan_path.display());
        return Ok(());
    }

    let opts = SweepExecOptions {
        num_rays: args.rays,
        duration_s: args.duration,
    };
    let paths = execute_sweep(&plan, &args.out_dir, &opts)?;
    let rows: Vec<SweepManifestRow> = plan
        .entries
        .iter()
        .zip(&paths)
        .map(|(entry, path)| SweepManifestRow {
            index: entry.index,
            path,
            alpha: entry.alpha,
            room_index: entry.room_index,
            seed: entry.seed,
        })
        .collect();
    io::append_jsonl(&args.out_dir.join("entries.jsonl"), &rows)?;
    record::write_record(&args.out_dir, true, Some(plan.seed))?;
    println!("{} RIRs written to {}", paths.len(), args.out_dir.display());
    Ok(())
}
