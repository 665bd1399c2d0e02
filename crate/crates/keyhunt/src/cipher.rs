//! Registry of OpenSSH cipher geometries: IV length, key length, block size
//! and whether a candidate key can be confirmed by decrypting traffic.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CipherMode {
    Ctr,
    Cbc,
    ChaCha20Poly1305,
    Gcm,
}

/// Geometry of one OpenSSH transport cipher.
///
/// `validatable` is true when [`crate::packet::validate_probe`] can confirm a
/// candidate (IV, key) pair by decrypting a captured packet. AEAD ciphers are
/// registered for dataset/classifier purposes but are not validated in v1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CipherSpec {
    pub name: &'static str,
    pub iv_len: usize,
    pub key_len: usize,
    pub block_len: usize,
    pub mode: CipherMode,
    pub validatable: bool,
}

/// All ciphers the toolkit knows about.
pub const REGISTRY: &[CipherSpec] = &[
    CipherSpec {
        name: "aes128-ctr",
        iv_len: 16,
        key_len: 16,
        block_len: 16,
        mode: CipherMode::Ctr,
        validatable: true,
    },
    CipherSpec {
        name: "aes192-ctr",
        iv_len: 16,
        key_len: 24,
        block_len: 16,
        mode: CipherMode::Ctr,
        validatable: true,
    },
    CipherSpec {
        name: "aes256-ctr",
        iv_len: 16,
        key_len: 32,
        block_len: 16,
        mode: CipherMode::Ctr,
        validatable: true,
    },
    CipherSpec {
        name: "aes128-cbc",
        iv_len: 16,
        key_len: 16,
        block_len: 16,
        mode: CipherMode::Cbc,
        validatable: true,
    },
    CipherSpec {
        name: "aes192-cbc",
        iv_len: 16,
        key_len: 24,
        block_len: 16,
        mode: CipherMode::Cbc,
        validatable: true,
    },
    CipherSpec {
        name: "aes256-cbc",
        iv_len: 16,
        key_len: 32,
        block_len: 16,
        mode: CipherMode::Cbc,
        validatable: true,
    },
    // ChaCha20-Poly1305 carries no explicit IV; its 64-byte key is two
    // concatenated 32-byte keys. Decryption validation is deferred.
    CipherSpec {
        name: "chacha20-poly1305",
        iv_len: 0,
        key_len: 64,
        block_len: 8,
        mode: CipherMode::ChaCha20Poly1305,
        validatable: false,
    },
    CipherSpec {
        name: "aes128-gcm",
        iv_len: 12,
        key_len: 16,
        block_len: 16,
        mode: CipherMode::Gcm,
        validatable: false,
    },
    CipherSpec {
        name: "aes256-gcm",
        iv_len: 12,
        key_len: 32,
        block_len: 16,
        mode: CipherMode::Gcm,
        validatable: false,
    },
];

/// Look up a cipher by its wire name.
///
/// Matching is case-insensitive and ignores a trailing "@openssh.com".
pub fn lookup_cipher(name: &str) -> Result<&'static CipherSpec> {
    let lowered = name.trim().to_ascii_lowercase();
    let stem = lowered.strip_suffix("@openssh.com").unwrap_or(&lowered);
    REGISTRY
        .iter()
        .find(|spec| spec.name == stem)
        .ok_or_else(|| Error::UnknownCipher(name.to_string()))
}
