//! Output directories, CSV formatting and the run manifest.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use cone_iso_core::ConeSpec;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

/// `x` with 17 significant digits, in the style of C's `%.17g`.
pub fn fmt17(x: f64) -> String {
    if x.is_nan() {
        return String::from("NaN");
    }
    if x.is_infinite() {
        return String::from(if x > 0.0 { "inf" } else { "-inf" });
    }
    if x == 0.0 {
        return String::from(if x.is_sign_negative() { "-0" } else { "0" });
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent in {:e} output");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..17).contains(&exp) {
        let fixed = format!("{:.*}", (16 - exp) as usize, x);
        trim_zeros(&fixed).to_string()
    } else {
        format!("{}e{}{:02}", trim_zeros(mantissa), if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Optional number, empty when absent.
pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt17).unwrap_or_default()
}

/// RFC 4180 CSV with a header row.
pub fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>, CliError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
    w.write_record(header).map_err(CliError::internal)?;
    for row in rows {
        w.write_record(&row).map_err(CliError::internal)?;
    }
    w.into_inner().map_err(|e| CliError::internal(e.into_error()))
}

pub fn json_bytes<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(CliError::internal)?;
    bytes.push(b'\n');
    Ok(bytes)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentManifest {
    pub tool_version: String,
    pub timestamp: String,
    pub command: String,
    pub cone: ConeSpec,
    pub parameters: serde_json::Value,
    pub outputs: Vec<String>,
    /// SHA-256 of every output, keyed by relative path.
    pub checksums: BTreeMap<String, String>,
}

pub const MANIFEST: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Single-writer output directory. Files are recorded as they are written;
/// the manifest goes last, through a temporary file and a rename, so a
/// manifest on disk always describes complete outputs.
pub struct OutputDir {
    root: PathBuf,
    checksums: BTreeMap<String, String>,
    outputs: Vec<String>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root)
            .with_context(|| format!("cannot create output directory {}", root.display()))
            .map_err(CliError::Internal)?;
        Ok(OutputDir {
            root: root.to_path_buf(),
            checksums: BTreeMap::new(),
            outputs: Vec::new(),
        })
    }

    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)
                .with_context(|| format!("cannot create {}", parent.display()))
                .map_err(CliError::Internal)?;
        }
        fs::write(&path, bytes)
            .with_context(|| format!("cannot write {}", path.display()))
            .map_err(CliError::Internal)?;
        if !self.checksums.contains_key(rel) {
            self.outputs.push(rel.to_string());
        }
        self.checksums.insert(rel.to_string(), sha256_hex(bytes));
        Ok(())
    }

    pub fn finish(self, command: String, cone: &ConeSpec, parameters: serde_json::Value) -> Result<PathBuf, CliError> {
        let manifest = ExperimentManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            command,
            cone: cone.clone(),
            parameters,
            outputs: self.outputs,
            checksums: self.checksums,
        };
        let bytes = json_bytes(&manifest)?;
        let tmp = self.root.join(format!(".{MANIFEST}.tmp"));
        let dest = self.root.join(MANIFEST);
        let write = || -> std::io::Result<()> {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(&bytes)?;
            f.sync_all()?;
            fs::rename(&tmp, &dest)
        };
        write()
            .with_context(|| format!("cannot write {}", dest.display()))
            .map_err(CliError::Internal)?;
        Ok(dest)
    }
}

/// Checks that every output listed in the manifest under `root` exists and
/// matches its digest.
pub fn verify_manifest(root: &Path) -> anyhow::Result<ExperimentManifest> {
    let text = fs::read_to_string(root.join(MANIFEST))?;
    let m: ExperimentManifest = serde_json::from_str(&text)?;
    for rel in &m.outputs {
        let bytes = fs::read(root.join(rel)).with_context(|| format!("missing output {rel}"))?;
        let want = m.checksums.get(rel).with_context(|| format!("no checksum for {rel}"))?;
        anyhow::ensure!(&sha256_hex(&bytes) == want, "checksum mismatch for {rel}");
    }
    Ok(m)
}
