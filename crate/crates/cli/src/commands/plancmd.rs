//! `curriculum` (frontier table) and `plan` (multi-stage manifest).

use std::path::PathBuf;

use anyhow::Context;
use clap::Args;

use reverbkit_core::curriculum::{build_stage_plan, CurriculumSchedule, PoolEntry, StageSpec};
use reverbkit_core::io;

use crate::record;

#[derive(Args)]
pub struct CurriculumArgs {
    /// Sorted pool index from `sort-pool`
    #[arg(long)]
    pool: PathBuf,
    /// RIRs unlocked per advance
    #[arg(long, default_value_t = 400)]
    block: usize,
    /// Epochs between advances
    #[arg(long, default_value_t = 2)]
    period: usize,
    /// Total training epochs
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    /// Write the table here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the full schedule (pool + parameters) as a JSON document
    #[arg(long)]
    schedule_out: Option<PathBuf>,
}

pub fn curriculum(args: CurriculumArgs) -> anyhow::Result<()> {
    let pool: Vec<PoolEntry> = io::read_jsonl(&args.pool)?;
    let schedule = CurriculumSchedule::with_params(pool, args.block, args.period, args.epochs)?;
    let mut csv = String::from("epoch,available\n");
    for epoch in 1..=args.epochs {
        csv.push_str(&format!("{},{}\n", epoch, schedule.frontier(epoch)?));
    }
    match &args.out {
        Some(out) => {
            std::fs::write(out, csv)?;
            record::write_record(out, false, None)?;
        }
        None => print!("{csv}"),
    }
    if let Some(path) = &args.schedule_out {
        std::fs::write(path, serde_json::to_string_pretty(&schedule)?)?;
        record::write_record(path, false, None)?;
    }
    Ok(())
}

#[derive(Args)]
pub struct PlanArgs {
    /// JSON array of stage specs
    /// ({name, pool: {kind, path?}, pretrained_from?, curriculum?})
    #[arg(long)]
    stages: PathBuf,
    /// Validated stage-plan manifest output
    #[arg(long)]
    out: PathBuf,
}

pub fn plan(args: PlanArgs) -> anyhow::Result<()> {
    let text = std::fs::read_to_string(&args.stages)
        .with_context(|| format!("loading {}", args.stages.display()))?;
    let stages: Vec<StageSpec> = serde_json::from_str(&text).context("parsing stage specs")?;
    let plan = build_stage_plan(stages)?;
    std::fs::write(&args.out, serde_json::to_string_pretty(&plan)?)?;
    record::write_record(&args.out, false, None)?;
    println!("{} stages -> {}", plan.stages.len(), args.out.display());
    Ok(())
}
