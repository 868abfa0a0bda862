use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

/// One JSON line appended to the run log per invocation.
#[derive(Debug, Serialize)]
pub struct RunRecord<'a> {
    pub command: &'a str,
    pub seed: u64,
    pub status: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stage: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub outputs: Vec<String>,
    pub elapsed_ms: u128,
}

pub fn append(path: &Path, record: &RunRecord<'_>) -> std::io::Result<()> {
    let mut line = serde_json::to_string(record).expect("record serializes");
    line.push('\n');
    let mut file = OpenOptions::new().create(true).append(true).open(path)?;
    file.write_all(line.as_bytes())
}

/// Paths written by a command, for the run log.
#[derive(Debug, Default)]
pub struct Outputs(pub Vec<PathBuf>);

impl Outputs {
    pub fn push(&mut self, path: &Path) {
        self.0.push(path.to_path_buf());
    }

    pub fn strings(&self) -> Vec<String> {
        self.0.iter().map(|p| p.display().to_string()).collect()
    }
}
