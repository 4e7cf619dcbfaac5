//! Machine-readable run reports.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize)]
pub struct InputDigest {
    pub role: String,
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub tool: &'static str,
    pub tool_version: &'static str,
    pub command: String,
    pub argv: Vec<String>,
    pub inputs: Vec<InputDigest>,
    pub parameters: Value,
    pub results: Value,
}

impl RunReport {
    pub fn new(command: &str) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            tool: "msicorr",
            tool_version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            argv: std::env::args().skip(1).collect(),
            inputs: Vec::new(),
            parameters: Value::Null,
            results: Value::Null,
        }
    }

    pub fn input(&mut self, role: &str, path: &Path) -> Result<()> {
        let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        self.inputs.push(InputDigest {
            role: role.to_string(),
            path: path.display().to_string(),
            sha256: hex(&Sha256::digest(&bytes)),
        });
        Ok(())
    }

    pub fn write(&self, path: Option<&Path>) -> Result<()> {
        if let Some(path) = path {
            let mut text = serde_json::to_string_pretty(self)?;
            text.push('\n');
            fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
        }
        Ok(())
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
