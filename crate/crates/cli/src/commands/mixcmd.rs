//! `mix`: execute explicit mixture specs or draw them from a sorted pool.

use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::Args;
use rayon::prelude::*;

use reverbkit_core::curriculum::PoolEntry;
use reverbkit_core::io;
use reverbkit_core::mixer::{build_mixture, sample_rir_index, ManifestRow, MixtureSpec};

use crate::record;

#[derive(Args)]
pub struct MixArgs {
    /// JSON-lines of mixture specs to execute verbatim
    #[arg(long, conflicts_with_all = ["pool", "dry_dir", "count"])]
    manifest: Option<PathBuf>,
    /// Sorted pool index to draw RIRs from
    #[arg(long, requires = "dry_dir", requires = "count", requires = "seed")]
    pool: Option<PathBuf>,
    /// Directory of dry source WAVs (cycled in sorted order)
    #[arg(long)]
    dry_dir: Option<PathBuf>,
    /// Number of mixtures to draw
    #[arg(long)]
    count: Option<usize>,
    /// Draw seed (one ChaCha stream per draw counter)
    #[arg(long)]
    seed: Option<u64>,
    /// Restrict draws to the first N pool entries (default: whole pool)
    #[arg(long)]
    frontier: Option<usize>,
    /// Force both RIRs of a mixture to come from the same room
    #[arg(long)]
    same_room: bool,
    /// Per-source gains in dB
    #[arg(long, num_args = 2, allow_negative_numbers = true, default_values_t = [0.0, 0.0])]
    gains_db: Vec<f64>,
    /// Output directory (mixture + target WAVs + manifest.jsonl)
    #[arg(long)]
    out_dir: PathBuf,
}

fn room_key(entry: &PoolEntry) -> Option<[f64; 3]> {
    io::read_sidecar(&io::sidecar_path(&entry.path))
        .ok()
        .and_then(|s| s.room_dims)
}

fn draw_specs(args: &MixArgs) -> anyhow::Result<Vec<MixtureSpec>> {
    let pool_path = args.pool.as_ref().unwrap();
    let pool: Vec<PoolEntry> = io::read_jsonl(pool_path)?;
    if pool.is_empty() {
        bail!("pool {} is empty", pool_path.display());
    }
    let frontier = args.frontier.unwrap_or(pool.len()).min(pool.len());
    let dry_dir = args.dry_dir.as_ref().unwrap();
    let mut clips: Vec<PathBuf> = std::fs::read_dir(dry_dir)
        .with_context(|| format!("reading {}", dry_dir.display()))?
        .flatten()
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("wav")))
        .collect();
    clips.sort();
    if clips.len() < 2 {
        bail!("need at least 2 dry clips in {}", dry_dir.display());
    }
    let seed = args.seed.unwrap();
    let count = args.count.unwrap();

    let mut specs = Vec::with_capacity(count);
    for m in 0..count {
        let first = sample_rir_index(pool.len(), frontier, seed, 2 * m as u64)?;
        let second = if args.same_room {
            // Candidates sharing the first draw's room; fall back to reusing
            // the same RIR when the pool has no room annotations.
            let key = room_key(&pool[first]);
            let candidates: Vec<usize> = (0..frontier)
                .filter(|&i| key.is_some() && room_key(&pool[i]) == key)
                .collect();
            if candidates.is_empty() {
                first
            } else {
                let pick =
                    sample_rir_index(candidates.len(), candidates.len(), seed, 2 * m as u64 + 1)?;
                candidates[pick]
            }
        } else {
            sample_rir_index(pool.len(), frontier, seed, 2 * m as u64 + 1)?
        };
        specs.push(MixtureSpec {
            output_id: format!("mix{m:05}"),
            source_paths: [
                clips[(2 * m) % clips.len()].clone(),
                clips[(2 * m + 1) % clips.len()].clone(),
            ],
            rir_refs: [pool[first].path.clone(), pool[second].path.clone()],
            gains_db: [args.gains_db[0], args.gains_db[1]],
            seed,
        });
    }
    Ok(specs)
}

pub fn mix(args: MixArgs) -> anyhow::Result<()> {
    let specs: Vec<MixtureSpec> = if let Some(manifest) = &args.manifest {
        io::read_jsonl(manifest)?
    } else if args.pool.is_some() {
        draw_specs(&args)?
    } else {
        bail!("either --manifest or --pool/--dry-dir/--count/--seed is required");
    };

    std::fs::create_dir_all(&args.out_dir)?;
    let rows: Vec<ManifestRow> = specs
        .par_iter()
        .map(|spec| build_mixture(spec, &args.out_dir))
        .collect::<Result<_, _>>()?;
    io::append_jsonl(&args.out_dir.join("manifest.jsonl"), &rows)?;
    record::write_record(&args.out_dir, true, args.seed)?;
    println!("{} mixtures written to {}", rows.len(), args.out_dir.display());
    Ok(())
}
