use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use pno_core::{Result, Scene};

/// Collects the files written by one command and finishes with a manifest.
pub struct Artifacts {
    dir: PathBuf,
    files: Vec<String>,
}

impl Artifacts {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Artifacts { dir: dir.to_path_buf(), files: Vec::new() })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        fs::write(self.dir.join(name), bytes)?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn write_with<F>(&mut self, name: &str, f: F) -> Result<()>
    where
        F: FnOnce(&mut Vec<u8>) -> Result<()>,
    {
        let mut buf = Vec::new();
        f(&mut buf)?;
        self.write(name, &buf)
    }

    /// Writes `manifest.json` echoing the configuration and the parsed scene.
    /// It holds no timestamps or output paths, so reruns are byte-identical.
    pub fn finish<C: Serialize>(self, command: &str, seed: u64, config: &C, scene: Option<&Scene>) -> Result<()> {
        let scene: Option<serde_json::Value> = scene.map(|s| serde_json::from_str(&s.to_json_string())).transpose()?;
        let manifest = json!({
            "tool": "pno",
            "version": env!("CARGO_PKG_VERSION"),
            "command": command,
            "seed": seed,
            "config": config,
            "scene": scene,
            "outputs": self.files,
        });
        let text = serde_json::to_string_pretty(&manifest)? + "\n";
        fs::write(self.dir.join("manifest.json"), text)?;
        Ok(())
    }
}
