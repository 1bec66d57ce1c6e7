use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use curvsal::io::{parse_off, read_ply, sample_surface};
use curvsal::PointCloud;
use serde::Serialize;
use sha2::{Digest, Sha256};
use walkdir::WalkDir;

use crate::config::RunConfig;
use crate::error::CliError;

/// A shape file found on the command line or under a dataset directory.
#[derive(Debug, Clone)]
pub struct Input {
    pub path: PathBuf,
    /// File stem, unique within one run.
    pub name: String,
    /// Top-level directory under the dataset root, when there is one.
    pub label_dir: Option<String>,
}

fn is_shape(p: &Path) -> bool {
    matches!(p.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref(), Some("off" | "ply"))
}

/// Expands files and directories (recursively, in sorted order) into shape
/// inputs.
pub fn discover(paths: &[PathBuf]) -> Result<Vec<Input>, CliError> {
    let mut out = vec![];
    for root in paths {
        if !root.exists() {
            return Err(CliError::Usage(format!("input {} does not exist", root.display())));
        }
        if root.is_file() {
            if !is_shape(root) {
                return Err(CliError::Usage(format!("{}: expected an .off or .ply file", root.display())));
            }
            out.push(Input { path: root.clone(), name: stem(root), label_dir: None });
            continue;
        }
        for entry in WalkDir::new(root).sort_by_file_name() {
            let entry = entry.map_err(|e| CliError::Usage(format!("{}: {e}", root.display())))?;
            if entry.file_type().is_file() && is_shape(entry.path()) {
                let rel = entry.path().strip_prefix(root).unwrap_or(entry.path());
                let label_dir = (rel.components().count() > 1)
                    .then(|| rel.components().next().unwrap().as_os_str().to_string_lossy().to_string());
                out.push(Input { path: entry.path().to_path_buf(), name: stem(entry.path()), label_dir });
            }
        }
    }
    if out.is_empty() {
        return Err(CliError::Usage("no .off or .ply inputs found".into()));
    }
    let mut seen = BTreeSet::new();
    for i in &out {
        if !seen.insert(&i.name) {
            return Err(CliError::Usage(format!("two inputs share the name {:?}", i.name)));
        }
    }
    Ok(out)
}

fn stem(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().to_string()).unwrap_or_default()
}

pub fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| CliError::io(path, e))
}

pub fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

/// Reads an OFF mesh (surface-sampled) or a PLY cloud.
pub fn load_cloud(path: &Path, config: &RunConfig) -> Result<PointCloud, CliError> {
    let bytes = read(path)?;
    let context = path.display();
    let cloud = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("off")) {
        let mesh = parse_off(&bytes).map_err(|e| CliError::lib(&context, e))?;
        sample_surface(&mesh, config.points, config.sample_seed).map_err(|e| CliError::lib(&context, e))?
    } else {
        read_ply(&bytes).map_err(|e| CliError::lib(&context, e))?.cloud
    };
    if config.normalize {
        Ok(cloud.normalize().map_err(|e| CliError::lib(&context, e))?.0)
    } else {
        Ok(cloud)
    }
}

#[derive(Serialize)]
pub struct InputRecord {
    pub path: String,
    pub sha256: String,
}

pub fn record(path: &Path) -> Result<InputRecord, CliError> {
    Ok(InputRecord { path: path.display().to_string(), sha256: hex::encode(Sha256::digest(read(path)?)) })
}

/// Run record written next to the outputs. Holds nothing that varies
/// between identical runs (no timestamps, no thread count).
#[derive(Serialize)]
pub struct Manifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub options: serde_json::Value,
    pub config: &'a RunConfig,
    pub inputs: Vec<InputRecord>,
    pub outputs: Vec<String>,
}

pub struct OutDir {
    pub root: PathBuf,
    written: BTreeSet<String>,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(OutDir { root: root.to_path_buf(), written: BTreeSet::new() })
    }

    /// Path for a relative output name; creates parent directories and
    /// records the name for the manifest.
    pub fn path(&mut self, name: &str) -> Result<PathBuf, CliError> {
        let p = self.root.join(name);
        if let Some(parent) = p.parent() {
            std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        self.written.insert(name.to_string());
        Ok(p)
    }

    pub fn write(&mut self, name: &str, bytes: impl AsRef<[u8]>) -> Result<(), CliError> {
        let p = self.path(name)?;
        write(&p, bytes)
    }

    pub fn finish(
        mut self,
        command: &'static str,
        options: serde_json::Value,
        config: &RunConfig,
        inputs: Vec<InputRecord>,
    ) -> Result<(), CliError> {
        self.written.insert("manifest.json".into());
        let manifest = Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            options,
            config,
            inputs,
            outputs: self.written.iter().cloned().collect(),
        };
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        write(&self.root.join("manifest.json"), text + "\n")
    }
}
