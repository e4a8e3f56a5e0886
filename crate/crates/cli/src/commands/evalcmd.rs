//! `eval`: batch separation scoring with per-group and overall aggregates.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Args;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use reverbkit_core::io;
use reverbkit_core::metrics::{eval_pair, SeparationMetrics};

use crate::record;

#[derive(Args)]
pub struct EvalArgs {
    /// JSON-lines: {id?, group?, mixture, estimates: [2], references: [2]}
    #[arg(long)]
    manifest: PathBuf,
    /// Per-mixture results (JSON-lines)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Aggregate summary (JSON)
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
struct EvalJob {
    #[serde(default)]
    id: Option<String>,
    #[serde(default)]
    group: Option<String>,
    mixture: PathBuf,
    estimates: [PathBuf; 2],
    references: [PathBuf; 2],
}

#[derive(Debug, Serialize)]
struct EvalRow {
    #[serde(skip_serializing_if = "Option::is_none")]
    id: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    group: Option<String>,
    #[serde(flatten)]
    metrics: SeparationMetrics,
    mean_si_sdri_db: f64,
    mean_sdri_db: f64,
}

#[derive(Debug, Default, Serialize)]
struct Aggregate {
    mixtures: usize,
    /// Mean over every per-source improvement value.
    si_sdri_per_source_db: f64,
    /// Mean over per-mixture means (identical when every mixture has the
    /// same source count, reported for completeness).
    si_sdri_per_mixture_db: f64,
    sdri_per_source_db: f64,
    sdri_per_mixture_db: f64,
}

fn aggregate(rows: &[&EvalRow]) -> Aggregate {
    let n = rows.len();
    let per_source = |f: fn(&SeparationMetrics) -> [f64; 2]| {
        rows.iter().map(|r| f(&r.metrics)[0] + f(&r.metrics)[1]).sum::<f64>() / (2 * n) as f64
    };
    let per_mixture = |f: fn(&SeparationMetrics) -> [f64; 2]| {
        rows.iter()
            .map(|r| (f(&r.metrics)[0] + f(&r.metrics)[1]) / 2.0)
            .sum::<f64>()
            / n as f64
    };
    Aggregate {
        mixtures: n,
        si_sdri_per_source_db: per_source(|m| m.si_sdri_db),
        si_sdri_per_mixture_db: per_mixture(|m| m.si_sdri_db),
        sdri_per_source_db: per_source(|m| m.sdri_db),
        sdri_per_mixture_db: per_mixture(|m| m.sdri_db),
    }
}

pub fn eval(args: EvalArgs) -> anyhow::Result<()> {
    let jobs: Vec<EvalJob> = io::read_jsonl(&args.manifest)?;
    let rows: Vec<EvalRow> = jobs
        .par_iter()
        .map(|job| -> anyhow::Result<EvalRow> {
            let mixture = io::read_wav(&job.mixture)?;
            let e0 = io::read_wav(&job.estimates[0])?;
            let e1 = io::read_wav(&job.estimates[1])?;
            let r0 = io::read_wav(&job.references[0])?;
            let r1 = io::read_wav(&job.references[1])?;
            let metrics = eval_pair([&e0, &e1], [&r0, &r1], &mixture)?;
            Ok(EvalRow {
                id: job.id.clone(),
                group: job.group.clone(),
                mean_si_sdri_db: metrics.mean_si_sdri(),
                mean_sdri_db: metrics.mean_sdri(),
                metrics,
            })
        })
        .collect::<Result<_, _>>()?;

    for row in &rows {
        println!("{}", serde_json::to_string(row)?);
    }

    let mut groups: BTreeMap<String, Vec<&EvalRow>> = BTreeMap::new();
    for row in &rows {
        groups
            .entry(row.group.clone().unwrap_or_else(|| "all".into()))
            .or_default()
            .push(row);
    }
    let summary = serde_json::json!({
        "overall": aggregate(&rows.iter().collect::<Vec<_>>()),
        "groups": groups
            .iter()
            .map(|(name, rows)| (name.clone(), aggregate(rows)))
            .collect::<BTreeMap<String, Aggregate>>(),
    });
    eprintln!("{}", serde_json::to_string_pretty(&summary)?);
    eprintln!("{:<12} {:>9} {:>14} {:>12}", "group", "mixtures", "SI-SDRi/src dB", "SDRi/src dB");
    for (name, group_rows) in &groups {
        let agg = aggregate(group_rows);
        eprintln!(
            "{:<12} {:>9} {:>14.3} {:>12.3}",
            name, agg.mixtures, agg.si_sdri_per_source_db, agg.sdri_per_source_db
        );
    }
    let overall = aggregate(&rows.iter().collect::<Vec<_>>());
    eprintln!(
        "{:<12} {:>9} {:>14.3} {:>12.3}",
        "overall", overall.mixtures, overall.si_sdri_per_source_db, overall.sdri_per_source_db
    );

    if let Some(out) = &args.out {
        let lines: Vec<String> = rows
            .iter()
            .map(|r| serde_json::to_string(r).unwrap())
            .collect();
        std::fs::write(out, lines.join("\n") + "\n")?;
        record::write_record(out, false, None)?;
    }
    if let Some(path) = &args.summary {
        std::fs::write(path, serde_json::to_string_pretty(&summary)?)?;
        record::write_record(path, false, None)?;
    }
    Ok(())
}
