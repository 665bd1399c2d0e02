//! Recover OpenSSH session keys from process heap dumps.
//!
//! Two search paths share the same validation oracle:
//!
//! * the baseline path hamming-filters the heap pages and brute-forces every
//!   8-byte aligned (IV, key) pair against a captured SSH packet;
//! * the assisted path marks high-entropy rows, cuts the heap into 128-byte
//!   slices, classifies them with a stacked random forest and brute-forces
//!   only the slices predicted to hold a key.
//!
//! The crate also ships the dataset tooling (key-log loader, synthetic heap
//! and traffic generator) and the evaluation harness used to measure both
//! paths against each other.

pub mod bruteforce;
pub mod cipher;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod forest;
pub mod heap;
pub mod packet;
pub mod pcap;
pub mod preprocess;
pub mod synth;

pub use cipher::{lookup_cipher, CipherMode, CipherSpec};
pub use error::{Error, Result};
pub use heap::{
    annotation_offset, CandidateRegion, HeapSnapshot, KeyAnnotation, KeyRole, RegionOrigin,
    Scenario, SliceSample,
};

/// Derive a child seed from a root seed and a stream id (splitmix64 step).
///
/// Keeps every randomized stage reproducible from one CLI-level seed while
/// giving independent streams to parallel workers.
pub fn derive_seed(root: u64, stream: u64) -> u64 {
    let mut z = root ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
