//! On-disk artifacts. Every file carries the schema version and the resolved
//! configuration, and is written in a fixed key and row order.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;
pub const FAILED_MARKER: &str = "FAILED";

pub struct OutputDir {
    root: PathBuf,
    config: Value,
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    schema_version: u32,
    config: &'a Value,
    result: &'a T,
}

impl OutputDir {
    pub fn create(config: &RunConfig) -> CliResult<Self> {
        let root = config.output_dir.clone();
        fs::create_dir_all(&root).map_err(|e| CliError::io(&root, e))?;
        let marker = root.join(FAILED_MARKER);
        if marker.exists() {
            fs::remove_file(&marker).map_err(|e| CliError::io(&marker, e))?;
        }
        Ok(Self {
            root,
            config: serde_json::to_value(config).expect("config serializes"),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write_text(&self, name: &str, text: &str) -> CliResult<PathBuf> {
        let path = self.path(name);
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, result: &T) -> CliResult<PathBuf> {
        let env = Envelope {
            schema_version: SCHEMA_VERSION,
            config: &self.config,
            result,
        };
        let mut text = serde_json::to_string_pretty(&env).expect("artifact serializes");
        text.push('\n');
        self.write_text(name, &text)
    }

    /// CSV whose leading `#` lines hold the schema version and the config.
    pub fn write_csv(&self, name: &str, body: &str) -> CliResult<PathBuf> {
        let mut text = format!(
            "# schema_version={SCHEMA_VERSION}\n# config={}\n",
            serde_json::to_string(&self.config).expect("config serializes")
        );
        text.push_str(body);
        self.write_text(name, &text)
    }

    /// Leaves a marker with the error next to whatever was already written.
    pub fn mark_failed(&self, err: &CliError) {
        let _ = fs::write(self.path(FAILED_MARKER), format!("{err}\n"));
    }
}
