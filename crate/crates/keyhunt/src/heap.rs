//! Heap snapshots, ground-truth key annotations and the candidate-region /
//! slice vocabulary shared by the search pipelines.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Unit the heap is reshaped into: keys are 8-byte aligned allocations.
pub const ROW_BYTES: usize = 8;

/// The SSH scenario a dump was captured under.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    BasicConnect,
    PortForward,
    Scp,
    SharedConnection,
}

impl Scenario {
    pub fn dir_name(self) -> &'static str {
        match self {
            Scenario::BasicConnect => "basic-connect",
            Scenario::PortForward => "port-forward",
            Scenario::Scp => "scp",
            Scenario::SharedConnection => "shared-connection",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.dir_name())
    }
}

impl FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "basic-connect" => Ok(Scenario::BasicConnect),
            "port-forward" => Ok(Scenario::PortForward),
            "scp" => Ok(Scenario::Scp),
            "shared-connection" => Ok(Scenario::SharedConnection),
            other => Err(format!("unknown scenario {other:?}")),
        }
    }
}

/// Role of a session key in the OpenSSH key set.
///
/// A/B are IVs, C/D encryption keys, E/F integrity keys; the first of each
/// pair is client-to-server.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum KeyRole {
    A,
    B,
    C,
    D,
    E,
    F,
}

impl KeyRole {
    pub const ALL: [KeyRole; 6] = [
        KeyRole::A,
        KeyRole::B,
        KeyRole::C,
        KeyRole::D,
        KeyRole::E,
        KeyRole::F,
    ];

    pub fn letter(self) -> char {
        match self {
            KeyRole::A => 'A',
            KeyRole::B => 'B',
            KeyRole::C => 'C',
            KeyRole::D => 'D',
            KeyRole::E => 'E',
            KeyRole::F => 'F',
        }
    }

    pub fn client_to_server(self) -> bool {
        matches!(self, KeyRole::A | KeyRole::C | KeyRole::E)
    }
}

impl fmt::Display for KeyRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

/// Raw heap bytes plus the virtual address they were dumped from.
///
/// The buffer is zero-padded to a multiple of 8 bytes at construction; zero
/// padding is maximally non-random, so it can never be mistaken for key
/// material by the entropy filters.
#[derive(Debug, Clone)]
pub struct HeapSnapshot {
    bytes: Vec<u8>,
    original_len: usize,
    pub base_addr: u64,
    pub ssh_version: String,
    pub scenario: Scenario,
    pub source_path: String,
}

impl HeapSnapshot {
    pub fn new(
        mut bytes: Vec<u8>,
        base_addr: u64,
        ssh_version: impl Into<String>,
        scenario: Scenario,
        source_path: impl Into<String>,
    ) -> Result<Self> {
        if bytes.is_empty() {
            return Err(Error::InvalidPacket("empty heap dump".into()));
        }
        let original_len = bytes.len();
        let rem = bytes.len() % ROW_BYTES;
        if rem > 0 {
            bytes.resize(bytes.len() + ROW_BYTES - rem, 0);
        }
        Ok(HeapSnapshot {
            bytes,
            original_len,
            base_addr,
            ssh_version: ssh_version.into(),
            scenario,
            source_path: source_path.into(),
        })
    }

    /// Padded bytes; length is a multiple of 8.
    pub fn bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn len(&self) -> usize {
        self.bytes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bytes.is_empty()
    }

    /// Length of the dump before zero padding.
    pub fn original_len(&self) -> usize {
        self.original_len
    }

    pub fn n_rows(&self) -> usize {
        self.bytes.len() / ROW_BYTES
    }

    /// File offset of a virtual address inside this heap.
    pub fn offset_of(&self, addr: u64) -> Result<usize> {
        annotation_offset(addr, self.base_addr, self.bytes.len())
    }
}

/// Convert a virtual address from a key log into a byte offset.
pub fn annotation_offset(addr: u64, base: u64, heap_len: usize) -> Result<usize> {
    if addr < base {
        return Err(Error::AddressOutOfRange {
            addr,
            base,
            len: heap_len,
        });
    }
    let offset = (addr - base) as usize;
    if offset >= heap_len {
        return Err(Error::AddressOutOfRange {
            addr,
            base,
            len: heap_len,
        });
    }
    Ok(offset)
}

/// Ground-truth key parsed from a key extraction log.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyAnnotation {
    pub role: KeyRole,
    pub offset: usize,
    pub value: Vec<u8>,
    pub cipher_name: String,
}

impl KeyAnnotation {
    pub fn new(
        role: KeyRole,
        offset: usize,
        value: Vec<u8>,
        cipher_name: impl Into<String>,
    ) -> Result<Self> {
        if !offset.is_multiple_of(ROW_BYTES) {
            return Err(Error::MalformedLog {
                path: Default::default(),
                reason: format!("key {role} offset {offset:#x} is not 8-byte aligned"),
            });
        }
        if value.is_empty() {
            return Err(Error::MalformedLog {
                path: Default::default(),
                reason: format!("key {role} has no bytes"),
            });
        }
        Ok(KeyAnnotation {
            role,
            offset,
            value,
            cipher_name: cipher_name.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }

    /// Byte range the key occupies in the heap.
    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.value.len()
    }

    /// True when the bytes at the annotated offset equal the logged value.
    pub fn matches_heap(&self, heap: &HeapSnapshot) -> bool {
        heap.bytes().get(self.range()) == Some(self.value.as_slice())
    }
}

/// A 128-byte window over the heap, the classifier's unit of data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SliceSample {
    pub offset: usize,
    pub data: Vec<u8>,
    /// True iff some annotated key intersects `[offset, offset + len)`.
    pub label: bool,
}

impl SliceSample {
    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.data.len()
    }
}

/// Which stage produced a candidate region.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionOrigin {
    PageFilter,
    EntropyMask,
    Classifier,
}

/// A byte range of the heap that is still worth searching.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CandidateRegion {
    pub offset: usize,
    pub len: usize,
    pub origin: RegionOrigin,
}

impl CandidateRegion {
    pub fn new(offset: usize, len: usize, origin: RegionOrigin) -> Self {
        debug_assert_eq!(offset % ROW_BYTES, 0);
        debug_assert_eq!(len % ROW_BYTES, 0);
        CandidateRegion {
            offset,
            len,
            origin,
        }
    }

    pub fn end(&self) -> usize {
        self.offset + self.len
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn annotation_offset_subtracts_base() {
        assert_eq!(
            annotation_offset(0x55a5_c374_49a0, 0x55a5_c374_4000, 0x1000).unwrap(),
            0x9a0
        );
    }

    #[test]
    fn annotation_offset_identity() {
        assert_eq!(annotation_offset(0x1000, 0x1000, 64).unwrap(), 0);
    }

    #[test]
    fn annotation_offset_rejects_below_base() {
        let err = annotation_offset(0x1000 - 8, 0x1000, 64).unwrap_err();
        assert!(matches!(err, Error::AddressOutOfRange { .. }));
    }

    #[test]
    fn annotation_offset_rejects_past_end() {
        let err = annotation_offset(0x1040, 0x1000, 64).unwrap_err();
        assert!(matches!(err, Error::AddressOutOfRange { .. }));
    }

    #[test]
    fn heap_pads_to_row_multiple() {
        let heap = HeapSnapshot::new(vec![0xaa; 13], 0, "V_8_0_P1", Scenario::BasicConnect, "mem")
            .unwrap();
        assert_eq!(heap.len(), 16);
        assert_eq!(heap.original_len(), 13);
        assert_eq!(&heap.bytes()[13..], &[0, 0, 0]);
        assert_eq!(heap.n_rows(), 2);
    }

    #[test]
    fn annotation_checks_alignment() {
        assert!(KeyAnnotation::new(KeyRole::A, 12, vec![1; 16], "aes128-ctr").is_err());
        assert!(KeyAnnotation::new(KeyRole::A, 16, vec![1; 16], "aes128-ctr").is_ok());
    }

    #[test]
    fn annotation_matches_heap_bytes() {
        let mut bytes = vec![0u8; 64];
        bytes[8..24].copy_from_slice(&[7u8; 16]);
        let heap =
            HeapSnapshot::new(bytes, 0x1000, "V_8_0_P1", Scenario::BasicConnect, "mem").unwrap();
        let good = KeyAnnotation::new(KeyRole::A, 8, vec![7u8; 16], "aes128-ctr").unwrap();
        let bad = KeyAnnotation::new(KeyRole::A, 16, vec![7u8; 16], "aes128-ctr").unwrap();
        assert!(good.matches_heap(&heap));
        assert!(!bad.matches_heap(&heap));
    }
}
