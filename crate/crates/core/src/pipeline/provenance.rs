//! Every artifact `X` gets a sidecar `X.meta.json` naming the stage that
//! wrote it and the content hashes of its inputs and of `X` itself.
//! Consumers re-hash and refuse to run on anything that drifted.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use log::info;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputHash {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactMeta {
    pub stage: String,
    pub inputs: Vec<InputHash>,
    pub output_sha256: String,
}

pub fn meta_path(artifact: &Path) -> PathBuf {
    let mut name = artifact.file_name().unwrap_or_default().to_os_string();
    name.push(".meta.json");
    artifact.with_file_name(name)
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut h = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = f.read(&mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    Ok(hex(&h.finalize()))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Recorded form of `input`: relative to the artifact's directory when it
/// lives below it, so a moved work directory stays valid.
fn recorded_path(artifact: &Path, input: &Path) -> String {
    let dir = artifact.parent().unwrap_or(Path::new(""));
    let p = input.strip_prefix(dir).unwrap_or(input);
    p.to_string_lossy().replace('\\', "/")
}

fn resolve_recorded(artifact: &Path, recorded: &str) -> PathBuf {
    let p = Path::new(recorded);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        artifact.parent().unwrap_or(Path::new("")).join(p)
    }
}

/// Writes `path` via a temp file in the same directory and a rename, so
/// readers never see a partial artifact.
pub fn write_atomic<F>(path: &Path, write: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> std::io::Result<()>,
{
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        write(&mut w).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))?;
    }
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// Records provenance for an artifact that has just been written.
pub fn record(artifact: &Path, stage: &str, inputs: &[&Path]) -> Result<()> {
    let meta = ArtifactMeta {
        stage: stage.to_string(),
        inputs: inputs
            .iter()
            .map(|p| {
                Ok(InputHash {
                    path: recorded_path(artifact, p),
                    sha256: sha256_file(p)?,
                })
            })
            .collect::<Result<_>>()?,
        output_sha256: sha256_file(artifact)?,
    };
    let json = serde_json::to_string_pretty(&meta).expect("meta serializes");
    write_atomic(&meta_path(artifact), |w| writeln!(w, "{json}"))
}

pub fn read_meta(artifact: &Path) -> Result<Option<ArtifactMeta>> {
    let p = meta_path(artifact);
    match std::fs::read_to_string(&p) {
        Ok(text) => serde_json::from_str(&text)
            .map(Some)
            .map_err(|e| Error::parse(&p, 0, e.to_string())),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(Error::io(&p, e)),
    }
}

/// Checks that `artifact` and every input it was built from are unchanged.
/// Artifacts without a sidecar (produced outside the pipeline) pass.
pub fn verify(artifact: &Path) -> Result<()> {
    if !artifact.exists() {
        return Err(Error::io(
            artifact,
            std::io::Error::new(
                std::io::ErrorKind::NotFound,
                "artifact missing; run the stage that produces it first",
            ),
        ));
    }
    let Some(meta) = read_meta(artifact)? else {
        info!(
            "{} has no provenance record; skipping stale-input check",
            artifact.display()
        );
        return Ok(());
    };
    let stale = |reason: String| Error::Stale {
        artifact: artifact.to_path_buf(),
        stage: meta.stage.clone(),
        reason,
    };
    if sha256_file(artifact)? != meta.output_sha256 {
        return Err(stale("the artifact was modified after it was written".into()));
    }
    for input in &meta.inputs {
        let p = resolve_recorded(artifact, &input.path);
        match sha256_file(&p) {
            Ok(h) if h == input.sha256 => {}
            Ok(_) => return Err(stale(format!("input {} has changed", p.display()))),
            Err(_) => return Err(stale(format!("input {} is missing", p.display()))),
        }
    }
    Ok(())
}
