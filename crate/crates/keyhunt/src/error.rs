//! Error type shared by every module of the crate.

use std::path::PathBuf;

use crate::heap::KeyRole;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("unknown cipher {0:?}")]
    UnknownCipher(String),

    #[error("address {addr:#x} outside heap [{base:#x}, {base:#x}+{len:#x})")]
    AddressOutOfRange { addr: u64, base: u64, len: usize },

    #[error("malformed key log {path}: {reason}")]
    MalformedLog { path: PathBuf, reason: String },

    #[error("key {role} at offset {offset:#x} does not match the heap bytes")]
    AnnotationMismatch { role: KeyRole, offset: usize },

    #[error("no heap file found next to {0}")]
    MissingHeap(PathBuf),

    #[error("no dataset entries match the selection")]
    EmptySelection,

    #[error("synthetic key regions overlap")]
    OverlappingRegions,

    #[error("heap matrix needs at least 2 rows, got {0}")]
    MatrixTooSmall(usize),

    #[error("heap of {heap} bytes is smaller than the {window}-byte window")]
    HeapSmallerThanWindow { heap: usize, window: usize },

    #[error("training data contains a single class")]
    SingleClassData,

    #[error("minority class has {got} samples, SMOTE needs at least {need}")]
    TooFewMinority { got: usize, need: usize },

    #[error("model has no trained trees")]
    UntrainedModel,

    #[error("corrupt model file: {0}")]
    CorruptModel(String),

    #[error("cipher {0} cannot be validated by decryption")]
    UnsupportedCipher(String),

    #[error("invalid packet: {0}")]
    InvalidPacket(String),

    #[error("no NEWKEYS message found in the capture")]
    NoNewkeysFound,

    #[error("unsupported pcap link type {0}")]
    UnsupportedLinkType(u32),

    #[error("truncated capture")]
    TruncatedCapture,

    #[error("ciphertext file has {got} bytes, need at least {need}")]
    FileTooShort { got: usize, need: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
