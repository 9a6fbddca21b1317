//! Output writers. Every file starts with a `#` metadata line carrying the
//! config hash and master seed; CSV bodies use comma separators, `.`
//! decimals, LF line endings, and 17-significant-digit floats.

use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::CliError;

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        write!(out, "{b:02x}").expect("write to string");
    }
    out
}

/// 17 significant digits, enough to reproduce the f64 bit pattern.
pub fn fmt_f64(x: f64) -> String {
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    format!("{x:.16e}")
}

pub fn header_line(config_hash: &str, master_seed: u64) -> String {
    format!("# config_sha256={config_hash} master_seed={master_seed}\n")
}

pub fn write_output(
    path: &Path,
    config_hash: &str,
    master_seed: u64,
    body: &str,
) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| {
                CliError::Compute(format!("cannot create {}: {e}", parent.display()))
            })?;
        }
    }
    let mut content = header_line(config_hash, master_seed);
    content.push_str(body);
    std::fs::write(path, content)
        .map_err(|e| CliError::Compute(format!("cannot write {}: {e}", path.display())))
}

/// Minimal CSV builder for the fixed dialects used here.
pub struct Csv {
    buf: String,
}

impl Csv {
    pub fn new(columns: &[&str]) -> Self {
        Csv {
            buf: format!("{}\n", columns.join(",")),
        }
    }

    pub fn row(&mut self, cells: &[String]) {
        self.buf.push_str(&cells.join(","));
        self.buf.push('\n');
    }

    pub fn finish(self) -> String {
        self.buf
    }
}
