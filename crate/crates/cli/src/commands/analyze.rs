//! `analyze`, `sort-pool`, `hist-t60`, and `spectrogram`.

use std::path::PathBuf;

use anyhow::Context;
use clap::Args;
use serde::Serialize;

use reverbkit_core::analysis::{self, AcousticSummary};
use reverbkit_core::curriculum::{sort_pool_by_t60, t60_histogram, PoolEntry};
use reverbkit_core::io;
use reverbkit_core::signal::Provenance;

use crate::record;

#[derive(Args)]
pub struct AnalyzeArgs {
    /// Impulse response WAVs
    #[arg(required = true)]
    files: Vec<PathBuf>,
    /// Also append results to this JSON-lines file
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct AnalysisRow<'a> {
    path: &'a std::path::Path,
    provenance: Provenance,
    #[serde(flatten)]
    summary: AcousticSummary,
}

pub fn analyze(args: AnalyzeArgs) -> anyhow::Result<()> {
    let mut lines = Vec::new();
    for path in &args.files {
        let rir = io::read_rir(path)?;
        let summary = analysis::summarize(&rir)
            .with_context(|| format!("analyzing {}", path.display()))?;
        let row = AnalysisRow {
            path,
            provenance: rir.provenance(),
            summary,
        };
        let line = serde_json::to_string(&row)?;
        println!("{line}");
        lines.push(line);
    }
    if let Some(out) = &args.out {
        std::fs::write(out, lines.join("\n") + "\n")?;
        record::write_record(out, false, None)?;
    }
    Ok(())
}

#[derive(Args)]
pub struct SortPoolArgs {
    /// Directory scanned (non-recursively) for *.wav
    #[arg(long, required_unless_present = "files")]
    dir: Option<PathBuf>,
    /// Explicit WAV paths
    #[arg(long, num_args = 1..)]
    files: Vec<PathBuf>,
    /// Sorted pool index (JSON-lines of {path, t60_s, provenance, rank})
    #[arg(long)]
    out: PathBuf,
    /// Where to write quarantined entries (default: <out>.quarantine.jsonl)
    #[arg(long)]
    quarantine_out: Option<PathBuf>,
}

pub fn sort_pool(args: SortPoolArgs) -> anyhow::Result<()> {
    let mut paths = args.files.clone();
    if let Some(dir) = &args.dir {
        let mut found: Vec<PathBuf> = std::fs::read_dir(dir)
            .with_context(|| format!("reading {}", dir.display()))?
            .flatten()
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("wav")))
            .collect();
        found.sort();
        paths.extend(found);
    }
    let (pool, quarantine) = sort_pool_by_t60(&paths);
    io::append_jsonl(&args.out, &pool)?;
    let quarantine_path = args
        .quarantine_out
        .unwrap_or_else(|| args.out.with_extension("quarantine.jsonl"));
    if !quarantine.is_empty() {
        io::append_jsonl(&quarantine_path, &quarantine)?;
    }
    record::write_record(&args.out, false, None)?;
    println!(
        "{} sorted, {} quarantined -> {}",
        pool.len(),
        quarantine.len(),
        args.out.display()
    );
    Ok(())
}

#[derive(Args)]
pub struct HistArgs {
    /// Sorted pool index from `sort-pool`
    #[arg(long)]
    pool: PathBuf,
    /// Histogram bin width in seconds
    #[arg(long, default_value_t = 0.05)]
    bin_width: f64,
    /// Write CSV here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn hist_t60(args: HistArgs) -> anyhow::Result<()> {
    let pool: Vec<PoolEntry> = io::read_jsonl(&args.pool)?;
    let counts = t60_histogram(&pool, args.bin_width);
    let mut csv = String::from("bin_start_s,count\n");
    for (k, count) in counts.iter().enumerate() {
        csv.push_str(&format!("{},{}\n", k as f64 * args.bin_width, count));
    }
    match &args.out {
        Some(out) => {
            std::fs::write(out, csv)?;
            record::write_record(out, false, None)?;
        }
        None => print!("{csv}"),
    }
    Ok(())
}

#[derive(Args)]
pub struct SpectrogramArgs {
    /// Input WAV
    input: PathBuf,
    /// STFT window length in samples
    #[arg(long, default_value_t = 256)]
    window: usize,
    /// Hop in samples
    #[arg(long, default_value_t = 64)]
    hop: usize,
    /// CSV output (rows = frequency bins, columns = frames)
    #[arg(long)]
    csv: Option<PathBuf>,
    /// 8-bit grayscale PNG output (dB scale, white = max)
    #[arg(long)]
    png: Option<PathBuf>,
    /// Dynamic range of the PNG mapping in dB
    #[arg(long, default_value_t = 80.0)]
    db_range: f64,
}

pub fn spectrogram(args: SpectrogramArgs) -> anyhow::Result<()> {
    let signal = io::read_wav(&args.input)?;
    let spec = analysis::spectrogram(&signal, args.window, args.hop)?;
    if args.csv.is_none() && args.png.is_none() {
        print!("{}", spec.to_csv());
        return Ok(());
    }
    if let Some(csv) = &args.csv {
        std::fs::write(csv, spec.to_csv())?;
        record::write_record(csv, false, None)?;
    }
    if let Some(png) = &args.png {
        write_png(&spec, png, args.db_range)?;
        record::write_record(png, false, None)?;
    }
    Ok(())
}

/// Pixel value = 255 · clamp(1 + (dB − max_dB)/range, 0, 1); low frequencies
/// at the bottom row.
fn write_png(
    spec: &analysis::Spectrogram,
    path: &PathBuf,
    db_range: f64,
) -> anyhow::Result<()> {
    let bins = spec.num_bins();
    let frames = spec.num_frames();
    let max_mag = spec
        .data
        .iter()
        .flatten()
        .cloned()
        .fold(f64::MIN_POSITIVE, f64::max);
    let max_db = 20.0 * max_mag.log10();
    let mut image = image::GrayImage::new(frames as u32, bins as u32);
    for (bin, row) in spec.data.iter().enumerate() {
        let y = (bins - 1 - bin) as u32;
        for (frame, &mag) in row.iter().enumerate() {
            let db = 20.0 * mag.max(f64::MIN_POSITIVE).log10();
            let level = (1.0 + (db - max_db) / db_range).clamp(0.0, 1.0);
            image.put_pixel(frame as u32, y, image::Luma([(level * 255.0).round() as u8]));
        }
    }
    image
        .save(path)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}
