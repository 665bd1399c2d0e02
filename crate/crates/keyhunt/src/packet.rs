//! SSH Binary Packet Protocol framing and the decryption validity oracle.
//!
//! A candidate (IV, key) pair is confirmed by decrypting the first cipher
//! block of a captured packet and checking BPP well-formedness: a sane
//! packet length and padding byte. With known packet boundaries the length
//! must match the capture exactly, which pushes the false-accept rate per
//! probe far below the 10^-3 budget of the search loops.

use std::path::Path;

use aes::cipher::generic_array::GenericArray;
use aes::cipher::{BlockDecrypt, BlockEncrypt, BlockEncryptMut, KeyInit, KeyIvInit, StreamCipher};
use aes::{Aes128, Aes192, Aes256};

use crate::cipher::{lookup_cipher, CipherMode, CipherSpec};
use crate::error::{Error, Result};

/// RFC 4253 upper bound on packet_length.
pub const MAX_PACKET_LEN: u32 = 35_000;
/// RFC 4253 lower bound on the padding byte.
pub const MIN_PADDING: u8 = 4;
const AES_BLOCK: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    ClientToServer,
    ServerToClient,
}

impl Direction {
    pub fn flag_name(self) -> &'static str {
        match self {
            Direction::ClientToServer => "client-to-server",
            Direction::ServerToClient => "server-to-client",
        }
    }
}

/// One captured SSH packet, starting at its encrypted length field.
#[derive(Debug, Clone)]
pub struct ValidationPacket {
    pub ciphertext: Vec<u8>,
    pub cipher_name: String,
    pub direction: Direction,
    /// 0 for the first packet after NEWKEYS.
    pub sequence_number: u32,
    /// True when the packet boundary is exact (TCP reassembly or a raw
    /// single-packet file); enables the full-length equality check.
    pub boundary_known: bool,
}

impl ValidationPacket {
    pub fn new(
        ciphertext: Vec<u8>,
        cipher_name: impl Into<String>,
        direction: Direction,
        sequence_number: u32,
        boundary_known: bool,
    ) -> Result<Self> {
        let cipher_name = cipher_name.into();
        let spec = lookup_cipher(&cipher_name)?;
        if ciphertext.len() < AES_BLOCK.max(spec.block_len) {
            return Err(Error::InvalidPacket(format!(
                "{} byte ciphertext is shorter than one {} block",
                ciphertext.len(),
                spec.name
            )));
        }
        if matches!(spec.mode, CipherMode::Ctr | CipherMode::Cbc)
            && !ciphertext.len().is_multiple_of(spec.block_len)
        {
            return Err(Error::InvalidPacket(format!(
                "{} byte ciphertext is not a multiple of the {} byte block",
                ciphertext.len(),
                spec.block_len
            )));
        }
        Ok(ValidationPacket {
            ciphertext,
            cipher_name,
            direction,
            sequence_number,
            boundary_known,
        })
    }

    pub fn spec(&self) -> &'static CipherSpec {
        lookup_cipher(&self.cipher_name).expect("validated at construction")
    }
}

/// Outcome of one decryption probe.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProbeResult {
    pub valid: bool,
    pub decrypted_length: u32,
    pub padding_length: u8,
}

/// An AES key schedule reusable across many IV probes.
#[derive(Clone)]
pub enum ScheduledAes {
    K128(Aes128),
    K192(Aes192),
    K256(Aes256),
}

impl ScheduledAes {
    pub fn new(key: &[u8]) -> Option<Self> {
        match key.len() {
            16 => Some(ScheduledAes::K128(Aes128::new(GenericArray::from_slice(
                key,
            )))),
            24 => Some(ScheduledAes::K192(Aes192::new(GenericArray::from_slice(
                key,
            )))),
            32 => Some(ScheduledAes::K256(Aes256::new(GenericArray::from_slice(
                key,
            )))),
            _ => None,
        }
    }

    fn encrypt_block(&self, block: &mut [u8; AES_BLOCK]) {
        let ga = GenericArray::from_mut_slice(block);
        match self {
            ScheduledAes::K128(c) => c.encrypt_block(ga),
            ScheduledAes::K192(c) => c.encrypt_block(ga),
            ScheduledAes::K256(c) => c.encrypt_block(ga),
        }
    }

    fn decrypt_block(&self, block: &mut [u8; AES_BLOCK]) {
        let ga = GenericArray::from_mut_slice(block);
        match self {
            ScheduledAes::K128(c) => c.decrypt_block(ga),
            ScheduledAes::K192(c) => c.decrypt_block(ga),
            ScheduledAes::K256(c) => c.decrypt_block(ga),
        }
    }
}

/// Everything about one packet the inner probe loop needs, precomputed.
#[derive(Debug, Clone)]
pub struct FirstBlockOracle {
    mode: CipherMode,
    first_block: [u8; AES_BLOCK],
    total_len: usize,
    block_len: usize,
    boundary_known: bool,
}

impl FirstBlockOracle {
    pub fn new(packet: &ValidationPacket) -> Result<Self> {
        let spec = packet.spec();
        if !spec.validatable {
            return Err(Error::UnsupportedCipher(spec.name.to_string()));
        }
        let mut first_block = [0u8; AES_BLOCK];
        first_block.copy_from_slice(&packet.ciphertext[..AES_BLOCK]);
        Ok(FirstBlockOracle {
            mode: spec.mode,
            first_block,
            total_len: packet.ciphertext.len(),
            block_len: spec.block_len,
            boundary_known: packet.boundary_known,
        })
    }

    /// Decrypt the first block under a prepared key schedule and check BPP
    /// well-formedness. Reads nothing beyond the first block.
    pub fn probe(&self, schedule: &ScheduledAes, iv: &[u8]) -> ProbeResult {
        debug_assert_eq!(iv.len(), AES_BLOCK);
        let mut block = [0u8; AES_BLOCK];
        match self.mode {
            CipherMode::Ctr => {
                // The IV is the initial counter block; the first block needs
                // no increment.
                block.copy_from_slice(iv);
                schedule.encrypt_block(&mut block);
                for (b, c) in block.iter_mut().zip(&self.first_block) {
                    *b ^= c;
                }
            }
            CipherMode::Cbc => {
                block = self.first_block;
                schedule.decrypt_block(&mut block);
                for (b, v) in block.iter_mut().zip(iv) {
                    *b ^= v;
                }
            }
            CipherMode::ChaCha20Poly1305 | CipherMode::Gcm => unreachable!("rejected in new()"),
        }
        let packet_length = u32::from_be_bytes([block[0], block[1], block[2], block[3]]);
        let padding_length = block[4];
        let valid = self.plaintext_is_well_formed(packet_length, padding_length);
        ProbeResult {
            valid,
            decrypted_length: packet_length,
            padding_length,
        }
    }

    fn plaintext_is_well_formed(&self, packet_length: u32, padding_length: u8) -> bool {
        if packet_length > MAX_PACKET_LEN || padding_length < MIN_PADDING {
            return false;
        }
        if u32::from(padding_length) >= packet_length {
            return false;
        }
        if self.boundary_known {
            packet_length as usize + 4 == self.total_len
        } else {
            (packet_length as usize + 4).is_multiple_of(self.block_len)
        }
    }
}

/// Decide whether `(iv, key)` decrypts `packet` into a well-formed SSH
/// binary packet. Pure and deterministic.
pub fn validate_probe(packet: &ValidationPacket, iv: &[u8], key: &[u8]) -> Result<ProbeResult> {
    let spec = packet.spec();
    if !spec.validatable {
        return Err(Error::UnsupportedCipher(spec.name.to_string()));
    }
    if iv.len() != spec.iv_len {
        return Err(Error::InvalidPacket(format!(
            "{} expects a {} byte IV, got {}",
            spec.name,
            spec.iv_len,
            iv.len()
        )));
    }
    if key.len() != spec.key_len {
        return Err(Error::InvalidPacket(format!(
            "{} expects a {} byte key, got {}",
            spec.name,
            spec.key_len,
            key.len()
        )));
    }
    let schedule = ScheduledAes::new(key).expect("registry key lengths are 16/24/32");
    let oracle = FirstBlockOracle::new(packet)?;
    Ok(oracle.probe(&schedule, iv))
}

/// Load a raw single-packet ciphertext file.
pub fn load_raw_ciphertext(path: &Path, cipher_name: &str) -> Result<ValidationPacket> {
    let spec = lookup_cipher(cipher_name)?;
    let bytes = std::fs::read(path)?;
    let need = AES_BLOCK.max(spec.block_len);
    if bytes.len() < need {
        return Err(Error::FileTooShort {
            got: bytes.len(),
            need,
        });
    }
    ValidationPacket::new(bytes, spec.name, Direction::ClientToServer, 0, true)
}

/// Frame a payload as a cleartext BPP packet: length, padding byte, payload,
/// random padding, padded to the cipher granularity (at least 8).
pub fn frame_bpp(
    payload: &[u8],
    block_len: usize,
    mut padding_fill: impl FnMut(usize) -> Vec<u8>,
) -> Vec<u8> {
    let granularity = block_len.max(8);
    let mut padding = granularity - (5 + payload.len()) % granularity;
    if padding < MIN_PADDING as usize {
        padding += granularity;
    }
    let packet_length = (1 + payload.len() + padding) as u32;
    let mut out = Vec::with_capacity(4 + packet_length as usize);
    out.extend_from_slice(&packet_length.to_be_bytes());
    out.push(padding as u8);
    out.extend_from_slice(payload);
    out.extend_from_slice(&padding_fill(padding));
    debug_assert_eq!(out.len() % granularity, 0);
    out
}

/// Encrypt a framed packet the way OpenSSH does for CTR/CBC transport
/// ciphers (length field included). Used by the traffic generator; the
/// probe path above decrypts independently of these mode implementations.
pub fn encrypt_packet(
    spec: &CipherSpec,
    iv: &[u8],
    key: &[u8],
    plaintext: &[u8],
) -> Result<Vec<u8>> {
    if !spec.validatable {
        return Err(Error::UnsupportedCipher(spec.name.to_string()));
    }
    if !plaintext.len().is_multiple_of(spec.block_len) {
        return Err(Error::InvalidPacket(format!(
            "plaintext length {} is not a multiple of the {} byte block",
            plaintext.len(),
            spec.block_len
        )));
    }
    let mut data = plaintext.to_vec();
    match (spec.mode, spec.key_len) {
        (CipherMode::Ctr, 16) => {
            ctr::Ctr128BE::<Aes128>::new(key.into(), iv.into()).apply_keystream(&mut data)
        }
        (CipherMode::Ctr, 24) => {
            ctr::Ctr128BE::<Aes192>::new(key.into(), iv.into()).apply_keystream(&mut data)
        }
        (CipherMode::Ctr, 32) => {
            ctr::Ctr128BE::<Aes256>::new(key.into(), iv.into()).apply_keystream(&mut data)
        }
        (CipherMode::Cbc, 16) => cbc_encrypt::<Aes128>(key, iv, &mut data),
        (CipherMode::Cbc, 24) => cbc_encrypt::<Aes192>(key, iv, &mut data),
        (CipherMode::Cbc, 32) => cbc_encrypt::<Aes256>(key, iv, &mut data),
        _ => return Err(Error::UnsupportedCipher(spec.name.to_string())),
    }
    Ok(data)
}

fn cbc_encrypt<C>(key: &[u8], iv: &[u8], data: &mut [u8])
where
    C: aes::cipher::BlockCipher + BlockEncryptMut + KeyInit,
{
    let mut enc = cbc::Encryptor::<C>::new(key.into(), iv.into());
    for chunk in data.chunks_mut(AES_BLOCK) {
        enc.encrypt_block_mut(GenericArray::from_mut_slice(chunk));
    }
}
