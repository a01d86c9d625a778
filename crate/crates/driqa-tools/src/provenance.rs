//! Run provenance records.
//!
//! Every command that writes files also writes `provenance.tsv` next to
//! them: the command name, the toolkit version, the effective
//! configuration, and a SHA-256 digest of each direct input file. The
//! record contains no timestamps or host details, so rerunning the same
//! command on the same inputs reproduces it byte-for-byte.

use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Result, ToolError};

/// Conventional provenance file name inside an output directory.
pub const PROVENANCE_FILE: &str = "provenance.tsv";

/// A provenance record under construction.
#[derive(Debug, Clone, Default)]
pub struct Provenance {
    command: String,
    args: Vec<(String, String)>,
    inputs: Vec<(String, String)>,
}

impl Provenance {
    pub fn new(command: &str) -> Self {
        Provenance {
            command: command.to_string(),
            ..Default::default()
        }
    }

    /// Records one effective configuration value.
    pub fn arg(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.args.push((key.to_string(), value.to_string()));
        self
    }

    /// Records one input file and its digest.
    pub fn input(&mut self, path: &Path) -> Result<&mut Self> {
        let digest = hash_file(path)?;
        self.inputs.push((path.display().to_string(), digest));
        Ok(self)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("#driqa-provenance/1\n");
        out.push_str(&format!("command\t{}\n", self.command));
        out.push_str(&format!("version\t{}\n", env!("CARGO_PKG_VERSION")));
        for (k, v) in &self.args {
            out.push_str(&format!("arg\t{k}\t{v}\n"));
        }
        for (path, digest) in &self.inputs {
            out.push_str(&format!("input\t{path}\tsha256:{digest}\n"));
        }
        out
    }

    /// Writes the record as `provenance.tsv` inside `out_dir`.
    pub fn write(&self, out_dir: &Path) -> Result<()> {
        let path = out_dir.join(PROVENANCE_FILE);
        fs::write(&path, self.to_text()).map_err(|e| ToolError::io(&path, e))
    }
}

/// Hex SHA-256 digest of a file's bytes.
pub fn hash_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| ToolError::io(path, e))?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    let digest = hasher.finalize();
    let mut hex = String::with_capacity(64);
    for b in digest {
        hex.push_str(&format!("{b:02x}"));
    }
    Ok(hex)
}
