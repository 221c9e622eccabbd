use std::fs;
use std::path::{Path, PathBuf};

use morphseq::error::file_error;
use morphseq::{Error, Result};
use serde::Serialize;

/// Reproducibility record written next to every run's outputs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub version: String,
    pub config: Option<PathBuf>,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub seed: Option<u64>,
    pub settings: Vec<(String, String)>,
}

impl RunManifest {
    pub fn new(subcommand: &str) -> Self {
        RunManifest {
            subcommand: subcommand.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: None,
            inputs: Vec::new(),
            outputs: Vec::new(),
            seed: None,
            settings: Vec::new(),
        }
    }

    pub fn input(mut self, p: &Path) -> Self {
        self.inputs.push(p.to_path_buf());
        self
    }

    pub fn output(mut self, p: &Path) -> Self {
        self.outputs.push(p.to_path_buf());
        self
    }

    pub fn setting(mut self, key: &str, value: impl ToString) -> Self {
        self.settings.push((key.to_string(), value.to_string()));
        self
    }

    /// Writes `dir/manifest.json`.
    pub fn write_in(&self, dir: &Path) -> Result<()> {
        self.write_to(&dir.join("manifest.json"))
    }

    /// Writes `<file>.manifest.json`.
    pub fn write_beside(&self, file: &Path) -> Result<()> {
        let mut name = file.as_os_str().to_owned();
        name.push(".manifest.json");
        self.write_to(Path::new(&name))
    }

    fn write_to(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        text.push('\n');
        fs::write(path, text).map_err(file_error(path))?;
        Ok(())
    }
}
