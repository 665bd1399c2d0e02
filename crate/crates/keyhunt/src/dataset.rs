//! Load (heap, key-log) pairs from the published dataset layout and walk the
//! training/validation tree.
//!
//! A key log is a JSON object with the cipher names and one
//! `KEY_X_ADDR` / `KEY_X_LEN` / `KEY_X` triple per present key, X in A..F.
//! Every log sits next to a raw dump that shares its stem plus a `-heap`
//! suffix. The directory tree nests split / scenario / version / key length.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde_json::Value;

use crate::error::{Error, Result};
use crate::heap::{annotation_offset, HeapSnapshot, KeyAnnotation, KeyRole, Scenario};

/// Candidate JSON field names for the heap base address, tried in order.
/// When none is present the base is inferred from the lowest key address
/// rounded down to a page.
pub const BASE_ADDR_FIELDS: &[&str] = &["HEAP_START", "HEAP_ADDR"];

/// Extensions tried for the raw dump next to a log file.
const HEAP_SUFFIXES: &[&str] = &["-heap.raw", "-heap.bin", "-heap"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Training,
    Validation,
}

impl Split {
    pub fn dir_name(self) -> &'static str {
        match self {
            Split::Training => "training",
            Split::Validation => "validation",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.dir_name())
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "training" => Ok(Split::Training),
            "validation" => Ok(Split::Validation),
            other => Err(format!("unknown split {other:?}")),
        }
    }
}

/// Optional narrowing of a dataset walk; fields match directory names.
#[derive(Debug, Clone, Default)]
pub struct DatasetFilter {
    pub scenario: Option<Scenario>,
    pub version: Option<String>,
    pub key_len: Option<usize>,
}

/// One loaded (heap, annotations) pair.
#[derive(Debug, Clone)]
pub struct DatasetEntry {
    pub heap: HeapSnapshot,
    pub annotations: Vec<KeyAnnotation>,
    pub json_path: PathBuf,
    pub heap_path: PathBuf,
}

impl DatasetEntry {
    /// Cipher of the client-to-server direction (always present).
    pub fn cipher_name(&self) -> &str {
        &self.annotations[0].cipher_name
    }

    pub fn annotation(&self, role: KeyRole) -> Option<&KeyAnnotation> {
        self.annotations.iter().find(|a| a.role == role)
    }

    /// Path of the sibling raw-ciphertext packet file, if the entry has one.
    pub fn packet_path(&self) -> Option<PathBuf> {
        let path = sibling(&self.json_path, "-packet.raw");
        path.exists().then_some(path)
    }

    /// Path of the sibling capture file, if the entry has one.
    pub fn pcap_path(&self) -> Option<PathBuf> {
        let path = self.json_path.with_extension("pcap");
        path.exists().then_some(path)
    }
}

fn sibling(json_path: &Path, suffix: &str) -> PathBuf {
    let stem = json_path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or_default();
    json_path.with_file_name(format!("{stem}{suffix}"))
}

/// Load one dataset entry from its key-log path.
pub fn load_entry(json_path: &Path) -> Result<DatasetEntry> {
    let malformed = |reason: String| Error::MalformedLog {
        path: json_path.to_path_buf(),
        reason,
    };
    let text = std::fs::read_to_string(json_path)?;
    let value: Value =
        serde_json::from_str(&text).map_err(|e| malformed(format!("invalid JSON: {e}")))?;
    let object = value
        .as_object()
        .ok_or_else(|| malformed("top-level value is not an object".into()))?;

    let heap_path = HEAP_SUFFIXES
        .iter()
        .map(|suffix| sibling(json_path, suffix))
        .find(|p| p.exists())
        .ok_or_else(|| Error::MissingHeap(json_path.to_path_buf()))?;
    let bytes = std::fs::read(&heap_path)?;

    let cipher_c2s = object
        .get("ENCRYPTION_KEY_1_NAME")
        .and_then(Value::as_str)
        .ok_or_else(|| malformed("missing ENCRYPTION_KEY_1_NAME".into()))?
        .to_string();
    let cipher_s2c = object
        .get("ENCRYPTION_KEY_2_NAME")
        .and_then(Value::as_str)
        .unwrap_or(&cipher_c2s)
        .to_string();

    // base address: explicit field, else lowest key address rounded to a page
    let mut base_addr = None;
    for field in BASE_ADDR_FIELDS {
        if let Some(text) = object.get(*field).and_then(Value::as_str) {
            base_addr = Some(
                parse_hex_u64(text)
                    .ok_or_else(|| malformed(format!("unparseable {field} {text:?}")))?,
            );
            break;
        }
    }
    let mut raw_keys = Vec::new();
    for role in KeyRole::ALL {
        let addr_field = format!("KEY_{role}_ADDR");
        let len_field = format!("KEY_{role}_LEN");
        let value_field = format!("KEY_{role}");
        let addr = object.get(&addr_field).and_then(Value::as_str);
        let len = object.get(&len_field).and_then(Value::as_u64);
        let hex = object.get(&value_field).and_then(Value::as_str);
        match (addr, len, hex) {
            (None, None, None) => continue,
            (Some(_), Some(0), _) => continue, // zero-length keys are skipped
            (Some(addr), Some(len), Some(hex)) => {
                let addr = parse_hex_u64(addr)
                    .ok_or_else(|| malformed(format!("unparseable {addr_field}")))?;
                let value = hex_bytes(hex)
                    .ok_or_else(|| malformed(format!("unparseable {value_field}")))?;
                if value.len() as u64 != len {
                    return Err(malformed(format!(
                        "{value_field} has {} bytes but {len_field} says {len}",
                        value.len()
                    )));
                }
                raw_keys.push((role, addr, value));
            }
            _ => {
                return Err(malformed(format!(
                    "incomplete {addr_field}/{len_field}/{value_field} triple"
                )))
            }
        }
    }
    if raw_keys.is_empty() {
        return Err(malformed("log contains no keys".into()));
    }
    let base_addr = base_addr
        .unwrap_or_else(|| raw_keys.iter().map(|(_, addr, _)| *addr).min().unwrap() & !0xfff);

    let ssh_version = object
        .get("SSH_VERSION")
        .and_then(Value::as_str)
        .unwrap_or("unknown")
        .to_string();
    let scenario = object
        .get("SCENARIO")
        .and_then(Value::as_str)
        .and_then(|s| s.parse().ok())
        .unwrap_or(Scenario::BasicConnect);
    let heap = HeapSnapshot::new(
        bytes,
        base_addr,
        ssh_version,
        scenario,
        heap_path.display().to_string(),
    )?;

    let mut annotations = Vec::with_capacity(raw_keys.len());
    for (role, addr, value) in raw_keys {
        let offset = annotation_offset(addr, base_addr, heap.len())
            .map_err(|e| malformed(format!("key {role}: {e}")))?;
        let cipher = if role.client_to_server() {
            &cipher_c2s
        } else {
            &cipher_s2c
        };
        let annotation = KeyAnnotation::new(role, offset, value, cipher.clone())
            .map_err(|e| malformed(e.to_string()))?;
        if !annotation.matches_heap(&heap) {
            return Err(Error::AnnotationMismatch { role, offset });
        }
        annotations.push(annotation);
    }

    Ok(DatasetEntry {
        heap,
        annotations,
        json_path: json_path.to_path_buf(),
        heap_path,
    })
}

/// Hex without an 0x prefix, any case.
fn parse_hex_u64(text: &str) -> Option<u64> {
    u64::from_str_radix(text.trim(), 16).ok()
}

fn hex_bytes(text: &str) -> Option<Vec<u8>> {
    hex::decode(text.trim()).ok()
}

/// Lazily yield entries under `root/split` in lexicographic path order.
/// Unreadable entries are logged and skipped; an empty selection is an
/// error.
pub fn walk_dataset(root: &Path, split: Split, filter: &DatasetFilter) -> Result<DatasetWalk> {
    let mut json_paths = Vec::new();
    let split_dir = root.join(split.dir_name());
    for scenario_dir in sorted_dirs(&split_dir) {
        if let Some(want) = filter.scenario {
            if scenario_dir.file_name().and_then(|n| n.to_str()) != Some(want.dir_name()) {
                continue;
            }
        }
        for version_dir in sorted_dirs(&scenario_dir) {
            if let Some(want) = &filter.version {
                if version_dir.file_name().and_then(|n| n.to_str()) != Some(want.as_str()) {
                    continue;
                }
            }
            for keylen_dir in sorted_dirs(&version_dir) {
                if let Some(want) = filter.key_len {
                    let name = keylen_dir
                        .file_name()
                        .and_then(|n| n.to_str())
                        .unwrap_or_default();
                    if name.parse::<usize>() != Ok(want) {
                        continue;
                    }
                }
                let mut files: Vec<PathBuf> = std::fs::read_dir(&keylen_dir)
                    .map(|dir| {
                        dir.filter_map(|e| e.ok())
                            .map(|e| e.path())
                            .filter(|p| p.extension().and_then(|e| e.to_str()) == Some("json"))
                            .collect()
                    })
                    .unwrap_or_default();
                files.sort();
                json_paths.extend(files);
            }
        }
    }
    if json_paths.is_empty() {
        return Err(Error::EmptySelection);
    }
    Ok(DatasetWalk {
        json_paths: json_paths.into_iter(),
    })
}

fn sorted_dirs(path: &Path) -> Vec<PathBuf> {
    let mut dirs: Vec<PathBuf> = std::fs::read_dir(path)
        .map(|dir| {
            dir.filter_map(|e| e.ok())
                .map(|e| e.path())
                .filter(|p| p.is_dir())
                .collect()
        })
        .unwrap_or_default();
    dirs.sort();
    dirs
}

/// Iterator over dataset entries; loads lazily on `next`.
pub struct DatasetWalk {
    json_paths: std::vec::IntoIter<PathBuf>,
}

impl DatasetWalk {
    pub fn remaining(&self) -> usize {
        self.json_paths.len()
    }
}

impl Iterator for DatasetWalk {
    type Item = DatasetEntry;

    fn next(&mut self) -> Option<DatasetEntry> {
        for path in self.json_paths.by_ref() {
            match load_entry(&path) {
                Ok(entry) => return Some(entry),
                Err(err) => log::warn!("skipping {}: {err}", path.display()),
            }
        }
        None
    }
}
