//! Run records and exit-code mapping.
//!
//! Every run that writes artifacts drops a JSON record of the exact
//! invocation next to them; re-executing the recorded argv reproduces the
//! artifacts byte for byte.

use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};

#[derive(Debug, Serialize, Deserialize)]
pub struct RunRecord {
    pub schema_version: u32,
    pub tool: String,
    pub version: String,
    pub argv: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub threads: usize,
}

impl RunRecord {
    pub fn current(seed: Option<u64>) -> Self {
        RunRecord {
            schema_version: 1,
            tool: "reverbkit".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            argv: std::env::args().collect(),
            seed,
            threads: rayon::current_num_threads(),
        }
    }
}

/// `out/dir` → `out/dir/run_record.json`; `file.wav` → `file.run.json`.
pub fn record_path_for(output: &Path, is_dir: bool) -> PathBuf {
    if is_dir {
        output.join("run_record.json")
    } else {
        output.with_extension("run.json")
    }
}

pub fn write_record(output: &Path, is_dir: bool, seed: Option<u64>) -> anyhow::Result<()> {
    let path = record_path_for(output, is_dir);
    let record = RunRecord::current(seed);
    std::fs::write(&path, serde_json::to_string_pretty(&record)?)
        .with_context(|| format!("writing run record {}", path.display()))?;
    Ok(())
}

/// Documented exit codes: 2 usage (from clap), 3 validation/config,
/// 4 file I/O, 5 analysis, 1 anything else.
pub fn exit_code_for(err: &anyhow::Error) -> u8 {
    fn classify(cause: &(dyn std::error::Error + 'static)) -> Option<u8> {
        use reverbkit_core::analysis::AnalysisError;
        use reverbkit_core::curriculum::CurriculumError;
        use reverbkit_core::io::IoError;
        use reverbkit_core::ism::IsmError;
        use reverbkit_core::metrics::MetricsError;
        use reverbkit_core::mixer::MixError;
        use reverbkit_core::tracer::TracerError;
        use reverbkit_core::{SceneError, SignalError};

        if cause.is::<AnalysisError>() {
            return Some(5);
        }
        if cause.is::<IoError>() || cause.is::<std::io::Error>() {
            return Some(4);
        }
        if cause.is::<SceneError>()
            || cause.is::<SignalError>()
            || cause.is::<IsmError>()
            || cause.is::<TracerError>()
            || cause.is::<MixError>()
            || cause.is::<MetricsError>()
            || cause.is::<CurriculumError>()
            || cause.is::<serde_json::Error>()
        {
            return Some(3);
        }
        None
    }
    // Deepest classified cause wins so wrappers keep the specific code.
    let mut code = 1;
    for cause in err.chain() {
        if let Some(c) = classify(cause) {
            code = c;
        }
    }
    code
}

/// Machine-readable failure line for stderr.
pub fn error_line(err: &anyhow::Error, code: u8) -> String {
    serde_json::json!({
        "error": match code {
            3 => "validation",
            4 => "io",
            5 => "analysis",
            _ => "internal",
        },
        "exit_code": code,
        "message": format!("{err:#}"),
    })
    .to_string()
}
