//! File I/O: mono WAV (16-bit PCM or 32-bit float in, 32-bit float out),
//! JSON sidecars for generated impulse responses, and JSON-lines helpers.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::signal::{AudioSignal, ImpulseResponse, Provenance, SignalError};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("file not found: {0}")]
    Missing(String),
    #[error("failed reading {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("failed writing {path}: {source}")]
    Write {
        path: String,
        source: std::io::Error,
    },
    #[error("corrupt or unsupported WAV {path}: {detail}")]
    BadWav { path: String, detail: String },
    #[error("{path} has {channels} channels; only mono is supported")]
    NotMono { path: String, channels: u16 },
    #[error("invalid JSON in {path}: {source}")]
    BadJson {
        path: String,
        source: serde_json::Error,
    },
    #[error(transparent)]
    Signal(#[from] SignalError),
}

fn path_str(path: &Path) -> String {
    path.display().to_string()
}

/// Reads a mono WAV file into f64 samples.
///
/// 16-bit PCM samples are scaled by 1/32768; 32-bit float samples are taken
/// as-is (widening to f64 is lossless, so a read/write round trip of float
/// data is byte-exact).
pub fn read_wav(path: &Path) -> Result<AudioSignal, IoError> {
    if !path.exists() {
        return Err(IoError::Missing(path_str(path)));
    }
    let reader = hound::WavReader::open(path).map_err(|e| IoError::BadWav {
        path: path_str(path),
        detail: e.to_string(),
    })?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(IoError::NotMono {
            path: path_str(path),
            channels: spec.channels,
        });
    }
    let samples: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(|v| v as f64))
            .collect::<Result<_, _>>()
            .map_err(|e| IoError::BadWav {
                path: path_str(path),
                detail: e.to_string(),
            })?,
        (hound::SampleFormat::Int, 16) => reader
            .into_samples::<i16>()
            .map(|s| s.map(|v| v as f64 / 32768.0))
            .collect::<Result<_, _>>()
            .map_err(|e| IoError::BadWav {
                path: path_str(path),
                detail: e.to_string(),
            })?,
        (fmt, bits) => {
            return Err(IoError::BadWav {
                path: path_str(path),
                detail: format!("unsupported format {fmt:?}/{bits} bits"),
            })
        }
    };
    Ok(AudioSignal::new(samples, spec.sample_rate)?)
}

/// Writes samples as a mono 32-bit float WAV.
pub fn write_wav(path: &Path, samples: &[f64], sample_rate: u32) -> Result<(), IoError> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate,
        bits_per_sample: 32,
        sample_format: hound::SampleFormat::Float,
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(|e| IoError::Write {
        path: path_str(path),
        source: std::io::Error::other(e.to_string()),
    })?;
    for &s in samples {
        writer.write_sample(s as f32).map_err(|e| IoError::Write {
            path: path_str(path),
            source: std::io::Error::other(e.to_string()),
        })?;
    }
    writer.finalize().map_err(|e| IoError::Write {
        path: path_str(path),
        source: std::io::Error::other(e.to_string()),
    })?;
    Ok(())
}

/// Reads a WAV as an impulse response, taking provenance from the sidecar
/// when one exists and defaulting to `external-real` otherwise.
pub fn read_rir(path: &Path) -> Result<ImpulseResponse, IoError> {
    let signal = read_wav(path)?;
    let sidecar = read_sidecar(&sidecar_path(path)).ok();
    let provenance = sidecar
        .as_ref()
        .map(|s| s.provenance)
        .unwrap_or(Provenance::ExternalReal);
    let mut rir = ImpulseResponse::new(
        signal.samples().to_vec(),
        signal.sample_rate(),
        provenance,
    )?;
    if let Some(id) = sidecar.and_then(|s| s.scene_hash) {
        rir = rir.with_scene_id(id);
    }
    Ok(rir)
}

/// Metadata written alongside every generated RIR (same stem, `.json`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RirSidecar {
    pub schema_version: u32,
    pub provenance: Provenance,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scene_hash: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_uniform: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t60_target_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Room extents, for grouping RIRs generated in the same room.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub room_dims: Option<[f64; 3]>,
    pub sample_rate: u32,
    pub num_samples: usize,
    /// Generator-specific configuration echo, free-form.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generator: Option<serde_json::Value>,
}

impl RirSidecar {
    pub fn for_rir(rir: &ImpulseResponse) -> Self {
        RirSidecar {
            schema_version: 1,
            provenance: rir.provenance(),
            scene_hash: rir.scene_id().map(str::to_owned),
            alpha_uniform: None,
            t60_target_s: None,
            seed: None,
            room_dims: None,
            sample_rate: rir.sample_rate(),
            num_samples: rir.len(),
            generator: None,
        }
    }
}

/// `foo.wav` → `foo.json`.
pub fn sidecar_path(wav_path: &Path) -> std::path::PathBuf {
    wav_path.with_extension("json")
}

pub fn write_sidecar(path: &Path, sidecar: &RirSidecar) -> Result<(), IoError> {
    let text = serde_json::to_string_pretty(sidecar).expect("sidecar serializes");
    std::fs::write(path, text).map_err(|source| IoError::Write {
        path: path_str(path),
        source,
    })
}

pub fn read_sidecar(path: &Path) -> Result<RirSidecar, IoError> {
    let text = std::fs::read_to_string(path).map_err(|source| IoError::Read {
        path: path_str(path),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| IoError::BadJson {
        path: path_str(path),
        source,
    })
}

/// Reads a JSON-lines file, skipping blank lines.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, IoError> {
    let file = File::open(path).map_err(|source| IoError::Read {
        path: path_str(path),
        source,
    })?;
    let mut rows = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|source| IoError::Read {
            path: path_str(path),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        rows.push(
            serde_json::from_str(&line).map_err(|source| IoError::BadJson {
                path: path_str(path),
                source,
            })?,
        );
    }
    Ok(rows)
}

/// Appends one JSON object per row to a JSON-lines file.
pub fn append_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), IoError> {
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|source| IoError::Write {
            path: path_str(path),
            source,
        })?;
    let mut writer = BufWriter::new(file);
    for row in rows {
        let line = serde_json::to_string(row).expect("row serializes");
        writeln!(writer, "{line}").map_err(|source| IoError::Write {
            path: path_str(path),
            source,
        })?;
    }
    writer.flush().map_err(|source| IoError::Write {
        path: path_str(path),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_wav_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.wav");
        let samples: Vec<f64> = (0..100).map(|i| ((i * 37) % 83) as f64 / 83.0 - 0.5).collect();
        // f32-representable inputs survive unchanged.
        let samples: Vec<f64> = samples.iter().map(|&s| s as f32 as f64).collect();
        write_wav(&path, &samples, 8000).unwrap();
        let back = read_wav(&path).unwrap();
        assert_eq!(back.sample_rate(), 8000);
        assert_eq!(back.samples(), &samples[..]);
    }

    #[test]
    fn pcm16_wav_reads() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pcm.wav");
        let spec = hound::WavSpec {
            channels: 1,
            sample_rate: 8000,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        let mut writer = hound::WavWriter::create(&path, spec).unwrap();
        for v in [0i16, 16384, -16384, 32767] {
            writer.write_sample(v).unwrap();
        }
        writer.finalize().unwrap();
        let signal = read_wav(&path).unwrap();
        assert_eq!(signal.samples()[0], 0.0);
        assert_eq!(signal.samples()[1], 0.5);
        assert_eq!(signal.samples()[2], -0.5);
    }

    #[test]
    fn missing_file_is_distinct_error() {
        let err = read_wav(Path::new("/nonexistent/whatever.wav")).unwrap_err();
        assert!(matches!(err, IoError::Missing(_)));
    }

    #[test]
    fn stereo_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("st.wav");
        let spec = hound::WavSpec {
            channels: 2,
            sample_rate: 8000,
            bits_per_sample: 32,
            sample_format: hound::SampleFormat::Float,
        };
        let mut writer = hound::WavWriter::create(&path, spec).unwrap();
        for _ in 0..4 {
            writer.write_sample(0.1f32).unwrap();
        }
        writer.finalize().unwrap();
        assert!(matches!(
            read_wav(&path).unwrap_err(),
            IoError::NotMono { channels: 2, .. }
        ));
    }

    #[test]
    fn sidecar_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let wav = dir.path().join("rir.wav");
        write_wav(&wav, &[0.0, 1.0, 0.0], 8000).unwrap();
        let rir = ImpulseResponse::new(vec![0.0, 1.0, 0.0], 8000, Provenance::Gas).unwrap();
        let mut sc = RirSidecar::for_rir(&rir);
        sc.alpha_uniform = Some(0.3);
        sc.seed = Some(7);
        write_sidecar(&sidecar_path(&wav), &sc).unwrap();
        let loaded = read_rir(&wav).unwrap();
        assert_eq!(loaded.provenance(), Provenance::Gas);
    }

    #[test]
    fn jsonl_append_and_read() {
        #[derive(Serialize, Deserialize, PartialEq, Debug)]
        struct Row {
            id: u32,
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rows.jsonl");
        append_jsonl(&path, &[Row { id: 1 }, Row { id: 2 }]).unwrap();
        append_jsonl(&path, &[Row { id: 3 }]).unwrap();
        let rows: Vec<Row> = read_jsonl(&path).unwrap();
        assert_eq!(rows, vec![Row { id: 1 }, Row { id: 2 }, Row { id: 3 }]);
    }
}
