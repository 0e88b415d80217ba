//! File formats, renderers and metrics.

pub mod image;
pub mod report;
pub mod scanlog;
pub mod snapshot;

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::sim::WorldModel;

/// Path of the ground-truth sidecar written next to a scan log.
pub fn truth_path(log: &Path) -> PathBuf {
    let mut name = log.as_os_str().to_owned();
    name.push(".truth.toml");
    PathBuf::from(name)
}

#[derive(serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct TruthFile {
    world: WorldModel,
}

/// Writes the world geometry that produced a log.
pub fn write_truth(path: &Path, world: &WorldModel) -> Result<()> {
    let text = toml::to_string(&TruthFile { world: world.clone() }).expect("world is serializable");
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_truth(path: &Path) -> Result<WorldModel> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: TruthFile = toml::from_str(&text).map_err(|e| Error::Config {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    Ok(file.world)
}
