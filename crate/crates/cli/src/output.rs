//! Run directories: traces, optional plot, metadata sidecar and manifest.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::ScenarioConfig;
use crate::scenarios::ScenarioOutput;

pub const MANIFEST: &str = "manifest.json";
pub const SIDECAR: &str = "trace.meta.json";
pub const PLOT: &str = "plot.svg";

/// Writes `bytes` to `path` through a temporary file and a rename, so readers
/// never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp"));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// Creates `<outdir>/<scenario>-<timestamp>/`, adding a counter if the name
/// is taken.
pub fn create_run_dir(outdir: &Path, scenario: &str, stamp: &str) -> std::io::Result<PathBuf> {
    std::fs::create_dir_all(outdir)?;
    let mut k = 0;
    loop {
        let name = if k == 0 {
            format!("{scenario}-{stamp}")
        } else {
            format!("{scenario}-{stamp}-{k}")
        };
        let dir = outdir.join(name);
        match std::fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => k += 1,
            Err(e) => return Err(e),
        }
    }
}

/// Run-level facts that are not part of the configuration.
#[derive(Debug, Clone, Serialize)]
pub struct RunInfo {
    pub started_utc: String,
    pub wall_clock_s: f64,
    pub workers: usize,
}

/// Writes every output file, then the manifest (last, atomically).
pub fn write_run(
    dir: &Path,
    cfg: &ScenarioConfig,
    out: &ScenarioOutput,
    plot: Option<String>,
    info: &RunInfo,
) -> std::io::Result<PathBuf> {
    let mut checksums = serde_json::Map::new();
    let mut emit = |name: &str, bytes: &[u8]| -> std::io::Result<()> {
        write_atomic(&dir.join(name), bytes)?;
        checksums.insert(name.to_string(), Value::from(sha256_hex(bytes)));
        Ok(())
    };
    for (name, text) in &out.files {
        emit(name, text.as_bytes())?;
    }
    if let Some(meta) = &out.ensemble {
        let body = serde_json::to_string_pretty(&json!({
            "trace": "trace.csv",
            "master_seed": meta.master_seed,
            "samples": meta.samples,
            "seeding": meta.seeding,
            "workers": info.workers,
        }))? + "\n";
        emit(SIDECAR, body.as_bytes())?;
    }
    if let Some(svg) = plot {
        emit(PLOT, svg.as_bytes())?;
    }
    let manifest = json!({
        "tool": "rydsim",
        "version": env!("CARGO_PKG_VERSION"),
        "scenario": cfg.scenario.as_str(),
        "config": cfg.to_value(),
        "run": info,
        "summary": out.summary,
        "outputs": checksums,
    });
    let path = dir.join(MANIFEST);
    write_atomic(
        &path,
        (serde_json::to_string_pretty(&manifest)? + "\n").as_bytes(),
    )?;
    Ok(path)
}
