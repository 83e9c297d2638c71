//! The plain-text run report written next to every command's outputs.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::Result;

pub const REPORT_FILE: &str = "report.txt";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputDigest {
    pub path: String,
    pub rows: u64,
    pub sha256: String,
}

impl InputDigest {
    pub fn new(path: &str, bytes: &[u8], rows: u64) -> Self {
        let hash = Sha256::digest(bytes);
        let sha256 = hash.iter().fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        });
        InputDigest { path: path.to_string(), rows, sha256 }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunReport {
    pub command: String,
    pub inputs: Vec<InputDigest>,
    pub config: Vec<(String, String)>,
    pub outputs: Vec<String>,
    pub warnings: Vec<String>,
    pub summary: Vec<String>,
    /// `None` while running; set to `ok` or the error on completion.
    pub outcome: Option<String>,
}

impl RunReport {
    pub fn new(command: &str) -> Self {
        RunReport { command: command.to_string(), ..Default::default() }
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.config.push((key.to_string(), value.to_string()));
    }

    pub fn warn(&mut self, msg: impl Into<String>) {
        self.warnings.push(msg.into());
    }

    pub fn note(&mut self, msg: impl Into<String>) {
        self.summary.push(msg.into());
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "command: {}", self.command);
        let _ = writeln!(s, "outcome: {}", self.outcome.as_deref().unwrap_or("incomplete"));
        s.push_str("\n[inputs]\n");
        for i in &self.inputs {
            let _ = writeln!(s, "path={} rows={} sha256={}", i.path, i.rows, i.sha256);
        }
        s.push_str("\n[config]\n");
        for (k, v) in &self.config {
            let _ = writeln!(s, "{k}={v}");
        }
        s.push_str("\n[summary]\n");
        for line in &self.summary {
            let _ = writeln!(s, "{line}");
        }
        s.push_str("\n[warnings]\n");
        for w in &self.warnings {
            let _ = writeln!(s, "{w}");
        }
        s.push_str("\n[outputs]\n");
        for o in &self.outputs {
            let _ = writeln!(s, "{o}");
        }
        let _ = writeln!(s, "{REPORT_FILE}");
        s
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(REPORT_FILE), self.render())?;
        Ok(())
    }
}
