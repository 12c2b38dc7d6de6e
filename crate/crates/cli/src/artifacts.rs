//! Artifact units, their stage records and content hashes.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const RECORD_FILE: &str = "stage.toml";

/// Directory of generated artifacts with one record per unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Unit {
    Mesh,
    Thin,
    Support,
    Scale,
    Campaign,
    Regress,
    Assemble,
    Qsma,
    Transient,
    FomReference,
    Report,
}

impl Unit {
    /// Dependency order.
    pub const ALL: [Unit; 11] = [
        Unit::Mesh,
        Unit::Thin,
        Unit::Support,
        Unit::Scale,
        Unit::Campaign,
        Unit::Regress,
        Unit::Assemble,
        Unit::Qsma,
        Unit::Transient,
        Unit::FomReference,
        Unit::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Unit::Mesh => "mesh",
            Unit::Thin => "thin",
            Unit::Support => "support",
            Unit::Scale => "scale",
            Unit::Campaign => "campaign",
            Unit::Regress => "regress",
            Unit::Assemble => "assemble",
            Unit::Qsma => "qsma",
            Unit::Transient => "transient",
            Unit::FomReference => "fom-reference",
            Unit::Report => "report",
        }
    }

    pub fn dir(self, out: &Path) -> PathBuf {
        out.join(self.name())
    }
}

/// Written last; a unit is complete only when `complete = true`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub unit: String,
    pub input_hash: String,
    pub complete: bool,
    #[serde(default)]
    pub summary: BTreeMap<String, String>,
    /// File name → SHA-256 of its content.
    #[serde(default)]
    pub outputs: BTreeMap<String, String>,
}

impl StageRecord {
    pub fn load(dir: &Path) -> Option<Self> {
        let text = fs::read_to_string(dir.join(RECORD_FILE)).ok()?;
        toml::from_str(&text).ok()
    }

    pub fn save(&self, dir: &Path) -> std::io::Result<()> {
        let text = toml::to_string(self).map_err(std::io::Error::other)?;
        fs::write(dir.join(RECORD_FILE), format!("# stage record; hashes are SHA-256 of file contents\n{text}"))
    }

    /// Hash over all output hashes, used as input by dependents.
    pub fn output_hash(&self) -> String {
        let mut h = Sha256::new();
        for (k, v) in &self.outputs {
            h.update(k.as_bytes());
            h.update([0]);
            h.update(v.as_bytes());
            h.update([0]);
        }
        hex::encode(h.finalize())
    }

    /// True if every recorded output exists with the recorded content.
    pub fn outputs_intact(&self, dir: &Path) -> bool {
        self.outputs
            .iter()
            .all(|(name, hash)| file_hash(&dir.join(name)).is_ok_and(|h| &h == hash))
    }
}

pub fn file_hash(path: &Path) -> std::io::Result<String> {
    Ok(hex::encode(Sha256::digest(fs::read(path)?)))
}

/// Hashes every regular file in `dir` except the record, sorted by name.
pub fn hash_outputs(dir: &Path) -> std::io::Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir)? {
        let entry = entry?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if entry.file_type()?.is_file() && name != RECORD_FILE {
            out.insert(name, file_hash(&entry.path())?);
        }
    }
    Ok(out)
}

/// Incremental input hash of one unit.
#[derive(Default)]
pub struct InputHasher(Sha256);

impl InputHasher {
    pub fn field(&mut self, key: &str, value: &str) -> &mut Self {
        self.0.update(key.as_bytes());
        self.0.update([0]);
        self.0.update(value.as_bytes());
        self.0.update([0]);
        self
    }

    pub fn section<T: Serialize>(&mut self, key: &str, value: &T) -> &mut Self {
        #[derive(Serialize)]
        struct Wrap<'a, T> {
            value: &'a T,
        }
        let text = toml::to_string(&Wrap { value }).unwrap_or_else(|e| format!("<unserializable: {e}>"));
        self.field(key, &text)
    }

    pub fn finish(self) -> String {
        hex::encode(self.0.finalize())
    }
}
