//! Synthetic heap dumps with embedded session keys, plus the matching key
//! log, encrypted packet and (optionally) a session capture.
//!
//! Heaps imitate what an OpenSSH process heap looks like mid-session: mostly
//! low-entropy filler (C strings, pointer arrays, zero runs), a sprinkling
//! of high-entropy pages, and the session keys sitting inside struct-like
//! neighborhoods (chunk headers, cipher name strings, length fields,
//! pointers) next to other high-entropy state such as expanded key
//! schedules. Everything is a pure function of the recipe and its seed.

use std::path::{Path, PathBuf};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cipher::CipherSpec;
use crate::error::{Error, Result};
use crate::heap::{HeapSnapshot, KeyAnnotation, KeyRole, Scenario, ROW_BYTES};
use crate::packet::{encrypt_packet, frame_bpp, Direction, ValidationPacket};
use crate::pcap::{write_conversation, ConversationFrame, PcapOptions};

const PAGE: usize = 4096;
/// Target mean byte-to-byte hamming distance for pages holding keys; keeps
/// them above the 0.4 * 8 page-filter cut the way real session pages are.
const KEY_PAGE_DENSITY: f64 = 3.45;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FillerProfile {
    Zeros,
    AsciiStrings,
    PointerLike,
    #[default]
    Mixed,
}

impl std::str::FromStr for FillerProfile {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "zeros" => Ok(FillerProfile::Zeros),
            "ascii-strings" => Ok(FillerProfile::AsciiStrings),
            "pointer-like" => Ok(FillerProfile::PointerLike),
            "mixed" => Ok(FillerProfile::Mixed),
            other => Err(format!("unknown filler profile {other:?}")),
        }
    }
}

/// Everything that determines one synthetic entry.
#[derive(Debug, Clone)]
pub struct SyntheticRecipe {
    /// Heap size in bytes, at least one page.
    pub heap_size: usize,
    pub cipher: &'static CipherSpec,
    /// Offset of key A (client-to-server IV), 8-byte aligned.
    pub iv_offset: usize,
    /// Offset of key C (client-to-server encryption key), 8-byte aligned.
    pub key_offset: usize,
    pub filler_profile: FillerProfile,
    pub rng_seed: u64,
    /// Which direction the emitted packet is encrypted for.
    pub direction: Direction,
    pub ssh_version: String,
    pub scenario: Scenario,
    pub base_addr: u64,
    /// Also embed integrity keys E and F.
    pub emit_mac_keys: bool,
}

impl SyntheticRecipe {
    pub fn new(
        cipher: &'static CipherSpec,
        heap_size: usize,
        iv_offset: usize,
        key_offset: usize,
        seed: u64,
    ) -> Self {
        SyntheticRecipe {
            heap_size,
            cipher,
            iv_offset,
            key_offset,
            filler_profile: FillerProfile::default(),
            rng_seed: seed,
            direction: Direction::ClientToServer,
            ssh_version: "V_8_0_P1".into(),
            scenario: Scenario::BasicConnect,
            base_addr: 0x55a5_c374_4000,
            emit_mac_keys: true,
        }
    }
}

/// A generated entry, still in memory.
#[derive(Debug, Clone)]
pub struct SyntheticEntry {
    pub heap: HeapSnapshot,
    pub annotations: Vec<KeyAnnotation>,
    pub packet: Option<ValidationPacket>,
    pub json: String,
}

struct Builder<'r> {
    recipe: &'r SyntheticRecipe,
    bytes: Vec<u8>,
    /// Rows that must not be overwritten any more (keys, struct rows,
    /// companion blobs).
    used: Vec<bool>,
    rng: ChaCha8Rng,
}

/// Generate one synthetic entry. Deterministic under the recipe seed.
pub fn generate_synthetic(recipe: &SyntheticRecipe) -> Result<SyntheticEntry> {
    let heap_size = recipe.heap_size.next_multiple_of(ROW_BYTES);
    if heap_size < PAGE {
        return Err(Error::InvalidPacket(format!(
            "synthetic heap of {heap_size} bytes is smaller than a page"
        )));
    }
    let spec = recipe.cipher;
    let iv_offset = recipe.iv_offset & !(ROW_BYTES - 1);
    let key_offset = recipe.key_offset & !(ROW_BYTES - 1);
    if iv_offset + spec.iv_len.max(ROW_BYTES) > heap_size || key_offset + spec.key_len > heap_size {
        return Err(Error::InvalidPacket(
            "recipe key offsets fall outside the heap".into(),
        ));
    }
    if spec.iv_len > 0
        && iv_offset < key_offset + spec.key_len
        && key_offset < iv_offset + spec.iv_len
    {
        return Err(Error::OverlappingRegions);
    }

    let mut builder = Builder {
        recipe,
        bytes: vec![0u8; heap_size],
        used: vec![false; heap_size / ROW_BYTES],
        rng: ChaCha8Rng::seed_from_u64(recipe.rng_seed),
    };

    // fixed draw order keeps the whole artifact reproducible:
    // key material, placements, filler, structs, density top-up, packet
    let material = builder.draw_key_material();
    let placements = builder.place_keys(&material)?;
    builder.fill_pages();
    builder.write_keys(&placements);
    builder.write_key_structs(&placements);
    builder.raise_key_page_density(&placements);

    let annotations = placements
        .iter()
        .map(|p| KeyAnnotation::new(p.role, p.offset, p.value.clone(), spec.name))
        .collect::<Result<Vec<_>>>()?;
    for annotation in &annotations {
        debug_assert_eq!(
            &builder.bytes[annotation.range()],
            annotation.value.as_slice()
        );
    }

    let packet = if spec.validatable {
        Some(builder.build_packet(&material)?)
    } else {
        None
    };
    let json = render_log(recipe, &annotations);
    let heap = HeapSnapshot::new(
        builder.bytes,
        recipe.base_addr,
        recipe.ssh_version.clone(),
        recipe.scenario,
        "synthetic",
    )?;
    Ok(SyntheticEntry {
        heap,
        annotations,
        packet,
        json,
    })
}

struct KeyMaterial {
    a: Vec<u8>,
    b: Vec<u8>,
    c: Vec<u8>,
    d: Vec<u8>,
    e: Vec<u8>,
    f: Vec<u8>,
}

struct Placement {
    role: KeyRole,
    offset: usize,
    value: Vec<u8>,
}

impl Builder<'_> {
    fn n_rows(&self) -> usize {
        self.bytes.len() / ROW_BYTES
    }

    fn draw_key_material(&mut self) -> KeyMaterial {
        let spec = self.recipe.cipher;
        let mut draw = |len: usize| -> Vec<u8> {
            let mut v = vec![0u8; len];
            self.rng.fill_bytes(&mut v);
            v
        };
        KeyMaterial {
            a: draw(spec.iv_len),
            b: draw(spec.iv_len),
            c: draw(spec.key_len),
            d: draw(spec.key_len),
            e: draw(32),
            f: draw(32),
        }
    }

    fn mark_used(&mut self, offset: usize, len: usize) {
        for row in offset / ROW_BYTES..(offset + len).div_ceil(ROW_BYTES) {
            self.used[row] = true;
        }
    }

    fn span_is_free(&self, offset: usize, len: usize) -> bool {
        if offset + len > self.bytes.len() {
            return false;
        }
        (offset / ROW_BYTES..(offset + len).div_ceil(ROW_BYTES)).all(|row| !self.used[row])
    }

    /// Deterministic search for a free span: a few random probes, then a
    /// linear sweep.
    fn find_free_span(&mut self, len: usize) -> Option<usize> {
        let rows_needed = len.div_ceil(ROW_BYTES);
        if self.n_rows() < rows_needed {
            return None;
        }
        for _ in 0..64 {
            let row = self.rng.gen_range(0..=self.n_rows() - rows_needed);
            if self.span_is_free(row * ROW_BYTES, len) {
                return Some(row * ROW_BYTES);
            }
        }
        (0..=self.n_rows() - rows_needed)
            .map(|row| row * ROW_BYTES)
            .find(|&offset| self.span_is_free(offset, len))
    }

    /// Decide where every key lives and reserve the rows. Key bytes are
    /// written later, after the filler pass.
    fn place_keys(&mut self, material: &KeyMaterial) -> Result<Vec<Placement>> {
        let spec = self.recipe.cipher;
        let iv_offset = self.recipe.iv_offset & !(ROW_BYTES - 1);
        let key_offset = self.recipe.key_offset & !(ROW_BYTES - 1);
        let mut placements: Vec<Placement> = Vec::new();

        // recipe-pinned client-to-server pair
        if spec.iv_len > 0 {
            self.mark_used(iv_offset, spec.iv_len);
            placements.push(Placement {
                role: KeyRole::A,
                offset: iv_offset,
                value: material.a.clone(),
            });
        }
        self.mark_used(key_offset, spec.key_len);
        placements.push(Placement {
            role: KeyRole::C,
            offset: key_offset,
            value: material.c.clone(),
        });
        if self.recipe.emit_mac_keys {
            let desired = key_offset + spec.key_len + 2 * ROW_BYTES;
            let offset = self
                .place_near(desired, material.e.len())
                .or_else(|| self.find_free_span(material.e.len()))
                .ok_or(Error::OverlappingRegions)?;
            self.mark_used(offset, material.e.len());
            placements.push(Placement {
                role: KeyRole::E,
                offset,
                value: material.e.clone(),
            });
        }

        // server-to-client group in its own free neighborhood
        let group_len = spec.iv_len + spec.key_len + 32 + 8 * ROW_BYTES;
        let anchor = self
            .find_free_span(group_len)
            .ok_or(Error::OverlappingRegions)?;
        let mut cursor = anchor + 2 * ROW_BYTES;
        if spec.iv_len > 0 {
            self.mark_used(cursor, spec.iv_len);
            placements.push(Placement {
                role: KeyRole::B,
                offset: cursor,
                value: material.b.clone(),
            });
            cursor += spec.iv_len + 2 * ROW_BYTES;
        }
        self.mark_used(cursor, spec.key_len);
        placements.push(Placement {
            role: KeyRole::D,
            offset: cursor,
            value: material.d.clone(),
        });
        cursor += spec.key_len + 2 * ROW_BYTES;
        if self.recipe.emit_mac_keys {
            if !self.span_is_free(cursor, material.f.len()) {
                cursor = self
                    .find_free_span(material.f.len())
                    .ok_or(Error::OverlappingRegions)?;
            }
            self.mark_used(cursor, material.f.len());
            placements.push(Placement {
                role: KeyRole::F,
                offset: cursor,
                value: material.f.clone(),
            });
        }

        placements.sort_by_key(|p| p.role);
        Ok(placements)
    }

    /// First free span at or after `desired`, scanning forward one page.
    fn place_near(&mut self, desired: usize, len: usize) -> Option<usize> {
        let mut offset = desired.min(self.bytes.len().saturating_sub(len)) & !(ROW_BYTES - 1);
        let limit = (desired + PAGE).min(self.bytes.len());
        while offset + len <= limit {
            if self.span_is_free(offset, len) {
                return Some(offset);
            }
            offset += ROW_BYTES;
        }
        None
    }

    fn write_keys(&mut self, placements: &[Placement]) {
        for p in placements {
            self.bytes[p.offset..p.offset + p.value.len()].copy_from_slice(&p.value);
        }
    }

    fn fill_pages(&mut self) {
        let profile = self.recipe.filler_profile;
        let n_pages = self.bytes.len().div_ceil(PAGE);
        for page in 0..n_pages {
            let start = page * PAGE;
            let end = (start + PAGE).min(self.bytes.len());
            let kind = match profile {
                FillerProfile::Zeros => PageKind::Zeros,
                FillerProfile::AsciiStrings => PageKind::Ascii,
                FillerProfile::PointerLike => PageKind::Pointer,
                FillerProfile::Mixed => {
                    let roll = self.rng.gen_range(0..100u32);
                    if roll < 24 {
                        PageKind::Random
                    } else if roll < 56 {
                        PageKind::Ascii
                    } else if roll < 82 {
                        PageKind::Pointer
                    } else {
                        PageKind::Zeros
                    }
                }
            };
            self.fill_span(start, end, kind);
        }
    }

    fn fill_span(&mut self, start: usize, end: usize, kind: PageKind) {
        match kind {
            PageKind::Zeros => self.bytes[start..end].fill(0),
            PageKind::Random => self.rng.fill_bytes(&mut self.bytes[start..end]),
            PageKind::Ascii => {
                // NUL-terminated, row-aligned allocations like real C
                // string pools; the padding keeps most rows below the
                // half-differing mark
                // mostly short words: strings crossing a row boundary mark
                // two adjacent rows and would flood the entropy mask
                const VOCAB: &[&str] = &[
                    "channel",
                    "session",
                    "openssh",
                    "request",
                    "forward",
                    "terminal",
                    "debug1:",
                    "buffer",
                    "packet",
                    "auth",
                    "ssh",
                    "scp",
                    "env",
                    "shell",
                    "tty",
                    "pool",
                    "xterm-256color",
                    "ssh-connection",
                ];
                let mut pos = start;
                while pos < end {
                    if self.rng.gen_range(0..100u32) < 45 {
                        let run = self
                            .rng
                            .gen_range(32..160usize)
                            .next_multiple_of(2 * ROW_BYTES)
                            .min(end - pos);
                        self.bytes[pos..pos + run].fill(0);
                        pos += run;
                    } else {
                        let word = VOCAB[self.rng.gen_range(0..VOCAB.len())].as_bytes();
                        let take = word.len().min(end - pos);
                        self.bytes[pos..pos + take].copy_from_slice(&word[..take]);
                        pos += take;
                        // 16-byte allocation granularity: the zeroed tail row
                        // keeps isolated text rows from looking like keys
                        let next = (pos + 1).next_multiple_of(2 * ROW_BYTES).min(end);
                        self.bytes[pos..next].fill(0);
                        pos = next;
                    }
                }
            }
            PageKind::Pointer => {
                let heap_len = self.bytes.len() as u64;
                let mut pos = start;
                while pos + ROW_BYTES <= end {
                    let row: u64 = if (pos / ROW_BYTES).is_multiple_of(2) {
                        // pointer into this heap: shared high bytes per heap
                        self.recipe.base_addr + (self.rng.gen_range(0..heap_len) & !7)
                    } else {
                        // allocator-header style small integer
                        (self.rng.gen_range(0x11u64..0x2000) & !0xf) | 0x1
                    };
                    self.bytes[pos..pos + ROW_BYTES].copy_from_slice(&row.to_le_bytes());
                    pos += ROW_BYTES;
                }
            }
        }
    }

    /// Struct-like rows around each key: chunk header, cipher name string,
    /// length fields, a pointer back at the key. Rows already claimed by a
    /// key or a neighboring struct are left alone.
    fn write_key_structs(&mut self, placements: &[Placement]) {
        let spec = self.recipe.cipher;
        let mut name = [0u8; 16];
        let bytes = spec.name.as_bytes();
        name[..bytes.len().min(16)].copy_from_slice(&bytes[..bytes.len().min(16)]);
        let plan: Vec<(usize, usize)> = placements
            .iter()
            .map(|p| (p.offset, p.value.len()))
            .collect();
        for (offset, len) in plan {
            let row0 = (offset / ROW_BYTES) as i64;
            // the key buffer is one field of a calloc'd struct: quiet rows
            // of headers, name string, lengths and pointers on both sides,
            // whatever page the allocation landed in
            let before: [(i64, RowContent); 6] = [
                (-6, RowContent::SmallInt(0x91)),
                (
                    -5,
                    RowContent::Pointer(self.recipe.base_addr + offset as u64 - 0x40),
                ),
                (-4, RowContent::SmallInt(0x21)),
                (-3, RowContent::Bytes(name[..8].try_into().unwrap())),
                (-2, RowContent::Bytes(name[8..].try_into().unwrap())),
                (
                    -1,
                    RowContent::Lengths(spec.iv_len as u32, spec.key_len as u32),
                ),
            ];
            for (delta, content) in before {
                self.write_struct_row(row0 + delta, content);
            }
            let after_row = ((offset + len).div_ceil(ROW_BYTES)) as i64;
            let pointer = self.recipe.base_addr + offset as u64;
            self.write_struct_row(after_row, RowContent::Pointer(pointer));
            self.write_struct_row(after_row + 1, RowContent::Lengths(len as u32, 0));
            self.write_struct_row(after_row + 2, RowContent::SmallInt(0x31));
        }
    }

    fn write_struct_row(&mut self, row: i64, content: RowContent) {
        if row < 0 || row as usize >= self.n_rows() || self.used[row as usize] {
            return;
        }
        let start = row as usize * ROW_BYTES;
        let out = &mut self.bytes[start..start + ROW_BYTES];
        match content {
            RowContent::SmallInt(v) => out.copy_from_slice(&v.to_le_bytes()),
            RowContent::Bytes(b) => out.copy_from_slice(&b),
            RowContent::Lengths(a, b) => {
                out[..4].copy_from_slice(&a.to_le_bytes());
                out[4..].copy_from_slice(&b.to_le_bytes());
            }
            RowContent::Pointer(p) => out.copy_from_slice(&p.to_le_bytes()),
        }
        self.used[row as usize] = true;
    }

    /// Pages holding keys also hold other cipher state in real dumps
    /// (expanded key schedules, KEX hashes); plant random blobs until the
    /// page clears the hamming page filter with margin.
    fn raise_key_page_density(&mut self, placements: &[Placement]) {
        let mut pages: Vec<usize> = placements
            .iter()
            .flat_map(|p| p.offset / PAGE..=(p.offset + p.value.len() - 1) / PAGE)
            .collect();
        pages.sort_unstable();
        pages.dedup();
        for page in pages {
            let start = page * PAGE;
            let end = (start + PAGE).min(self.bytes.len());
            // a zeroed page needs ~85% random coverage to clear the filter
            for _ in 0..24 {
                if page_mean(&self.bytes[start..end]) >= KEY_PAGE_DENSITY {
                    break;
                }
                let Some(offset) = self.free_span_in(start, end, 256) else {
                    break;
                };
                let mut blob = [0u8; 256];
                self.rng.fill_bytes(&mut blob);
                self.bytes[offset..offset + 256].copy_from_slice(&blob);
                self.mark_used(offset, 256);
            }
        }
    }

    /// First free 8-aligned span inside [start, end); deterministic scan.
    fn free_span_in(&self, start: usize, end: usize, len: usize) -> Option<usize> {
        let mut offset = start;
        while offset + len <= end {
            if self.span_is_free(offset, len) {
                return Some(offset);
            }
            offset += ROW_BYTES;
        }
        None
    }

    fn build_packet(&mut self, material: &KeyMaterial) -> Result<ValidationPacket> {
        let spec = self.recipe.cipher;
        let (iv, key) = match self.recipe.direction {
            Direction::ClientToServer => (&material.a, &material.c),
            Direction::ServerToClient => (&material.b, &material.d),
        };
        // a CHANNEL_DATA-shaped payload
        let body_len = 48 + self.rng.gen_range(0..4u32) as usize * 16;
        let mut payload = Vec::with_capacity(body_len + 9);
        payload.push(94u8);
        payload.extend_from_slice(&0u32.to_be_bytes());
        payload.extend_from_slice(&(body_len as u32).to_be_bytes());
        let mut body = vec![0u8; body_len];
        self.rng.fill_bytes(&mut body);
        payload.extend_from_slice(&body);
        let framed = frame_bpp(&payload, spec.block_len, |n| {
            let mut pad = vec![0u8; n];
            self.rng.fill_bytes(&mut pad);
            pad
        });
        let ciphertext = encrypt_packet(spec, iv, key, &framed)?;
        ValidationPacket::new(ciphertext, spec.name, self.recipe.direction, 3, true)
    }
}

enum RowContent {
    SmallInt(u64),
    Bytes([u8; 8]),
    Lengths(u32, u32),
    Pointer(u64),
}

#[derive(Clone, Copy, PartialEq)]
enum PageKind {
    Zeros,
    Random,
    Ascii,
    Pointer,
}

fn page_mean(page: &[u8]) -> f64 {
    crate::preprocess::page_mean_hamming(page)
}

/// Render the key log in the published schema.
fn render_log(recipe: &SyntheticRecipe, annotations: &[KeyAnnotation]) -> String {
    let mut object = serde_json::Map::new();
    object.insert(
        "PID".into(),
        serde_json::Value::from(1000u64 + (recipe.rng_seed % 60000)),
    );
    object.insert("SSH_VERSION".into(), recipe.ssh_version.clone().into());
    object.insert("SCENARIO".into(), recipe.scenario.dir_name().into());
    object.insert(
        "HEAP_START".into(),
        format!("{:x}", recipe.base_addr).into(),
    );
    object.insert("ENCRYPTION_KEY_1_NAME".into(), recipe.cipher.name.into());
    object.insert("ENCRYPTION_KEY_2_NAME".into(), recipe.cipher.name.into());
    for annotation in annotations {
        let role = annotation.role;
        let addr = recipe.base_addr + annotation.offset as u64;
        object.insert(format!("KEY_{role}_ADDR"), format!("{addr:x}").into());
        object.insert(
            format!("KEY_{role}_LEN"),
            serde_json::Value::from(annotation.len() as u64),
        );
        object.insert(format!("KEY_{role}"), hex::encode(&annotation.value).into());
    }
    let mut text =
        serde_json::to_string_pretty(&serde_json::Value::Object(object)).expect("static structure");
    text.push('\n');
    text
}

/// Banner string for a dataset version tag ("V_8_0_P1" -> OpenSSH_8.0p1).
fn banner_for_version(version: &str) -> String {
    let digits: Vec<&str> = version
        .trim_start_matches("V_")
        .trim_end_matches("_P1")
        .split('_')
        .collect();
    if digits.len() == 2 {
        format!("SSH-2.0-OpenSSH_{}.{}p1\r\n", digits[0], digits[1])
    } else {
        "SSH-2.0-OpenSSH_8.0p1\r\n".to_string()
    }
}

/// The cleartext SSH handshake followed by the entry's encrypted packet,
/// ready for [`write_conversation`]. Handshake content is fixed; only the
/// framing matters to consumers.
pub fn conversation_frames(entry: &SyntheticEntry) -> Vec<ConversationFrame> {
    let Some(packet) = &entry.packet else {
        return Vec::new();
    };
    use Direction::*;
    let banner_c = banner_for_version(&entry.heap.ssh_version).into_bytes();
    let banner_s = b"SSH-2.0-OpenSSH_8.9p1\r\n".to_vec();
    let cipher_name = entry.annotations[0].cipher_name.clone();
    let kexinit = |cookie: u8| -> Vec<u8> {
        let mut payload = vec![20u8];
        payload.extend_from_slice(&[cookie; 16]);
        for list in [
            "curve25519-sha256",
            "ssh-ed25519",
            cipher_name.as_str(),
            "hmac-sha2-256",
            "none",
        ] {
            payload.extend_from_slice(&(list.len() as u32).to_be_bytes());
            payload.extend_from_slice(list.as_bytes());
        }
        frame_bpp(&payload, 8, |n| vec![0u8; n])
    };
    let kexdh = |msg: u8, len: usize| -> Vec<u8> {
        let mut payload = vec![msg];
        payload.extend_from_slice(&(len as u32).to_be_bytes());
        payload.extend(std::iter::repeat_n(0x42u8, len));
        frame_bpp(&payload, 8, |n| vec![0u8; n])
    };
    let newkeys = frame_bpp(&[21u8], 8, |n| vec![0u8; n]);
    let mut frames = vec![
        ConversationFrame {
            direction: ClientToServer,
            payload: banner_c,
        },
        ConversationFrame {
            direction: ServerToClient,
            payload: banner_s,
        },
        ConversationFrame {
            direction: ClientToServer,
            payload: kexinit(0x11),
        },
        ConversationFrame {
            direction: ServerToClient,
            payload: kexinit(0x22),
        },
        ConversationFrame {
            direction: ClientToServer,
            payload: kexdh(30, 32),
        },
        ConversationFrame {
            direction: ServerToClient,
            payload: kexdh(31, 96),
        },
        ConversationFrame {
            direction: ClientToServer,
            payload: newkeys.clone(),
        },
        ConversationFrame {
            direction: ServerToClient,
            payload: newkeys,
        },
    ];
    frames.push(ConversationFrame {
        direction: packet.direction,
        payload: packet.ciphertext.clone(),
    });
    frames
}

/// Write `{stem}.json`, `{stem}-heap.raw` and, when a packet exists,
/// `{stem}-packet.raw` plus optionally `{stem}.pcap`. Returns the log path.
pub fn write_entry(
    dir: &Path,
    stem: &str,
    entry: &SyntheticEntry,
    with_pcap: bool,
) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let json_path = dir.join(format!("{stem}.json"));
    std::fs::write(&json_path, &entry.json)?;
    std::fs::write(dir.join(format!("{stem}-heap.raw")), entry.heap.bytes())?;
    if let Some(packet) = &entry.packet {
        std::fs::write(dir.join(format!("{stem}-packet.raw")), &packet.ciphertext)?;
        if with_pcap {
            let capture = write_conversation(&conversation_frames(entry), &PcapOptions::default());
            std::fs::write(dir.join(format!("{stem}.pcap")), capture)?;
        }
    }
    Ok(json_path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cipher::lookup_cipher;
    use crate::dataset::load_entry;
    use crate::packet::validate_probe;
    use crate::pcap::extract_first_encrypted_packet;
    use crate::preprocess::page_filter;

    fn recipe(seed: u64) -> SyntheticRecipe {
        SyntheticRecipe::new(
            lookup_cipher("aes192-ctr").unwrap(),
            132 * 1024,
            0x9a0,
            0xa40,
            seed,
        )
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_synthetic(&recipe(7)).unwrap();
        let b = generate_synthetic(&recipe(7)).unwrap();
        assert_eq!(a.heap.bytes(), b.heap.bytes());
        assert_eq!(a.json, b.json);
        assert_eq!(
            a.packet.as_ref().unwrap().ciphertext,
            b.packet.as_ref().unwrap().ciphertext
        );
        let c = generate_synthetic(&recipe(8)).unwrap();
        assert_ne!(a.heap.bytes(), c.heap.bytes());
    }

    #[test]
    fn embedded_pair_validates_the_packet() {
        let entry = generate_synthetic(&recipe(1)).unwrap();
        let packet = entry.packet.as_ref().unwrap();
        let iv = &entry
            .annotations
            .iter()
            .find(|a| a.role == KeyRole::A)
            .unwrap()
            .value;
        let key = &entry
            .annotations
            .iter()
            .find(|a| a.role == KeyRole::C)
            .unwrap()
            .value;
        assert!(validate_probe(packet, iv, key).unwrap().valid);
        // the wrong-direction pair must not validate
        let b = &entry
            .annotations
            .iter()
            .find(|a| a.role == KeyRole::B)
            .unwrap()
            .value;
        let d = &entry
            .annotations
            .iter()
            .find(|a| a.role == KeyRole::D)
            .unwrap()
            .value;
        assert!(!validate_probe(packet, b, d).unwrap().valid);
    }

    #[test]
    fn entry_round_trips_through_the_loader() {
        let dir = tempfile::tempdir().unwrap();
        let entry = generate_synthetic(&recipe(3)).unwrap();
        let json_path = write_entry(dir.path(), "0003", &entry, false).unwrap();
        let loaded = load_entry(&json_path).unwrap();
        assert_eq!(loaded.annotations.len(), entry.annotations.len());
        for (a, b) in loaded.annotations.iter().zip(&entry.annotations) {
            assert_eq!(a.role, b.role);
            assert_eq!(a.offset, b.offset);
            assert_eq!(a.value, b.value);
        }
        assert_eq!(loaded.heap.bytes(), entry.heap.bytes());
    }

    #[test]
    fn recipe_offsets_are_respected() {
        let entry = generate_synthetic(&recipe(4)).unwrap();
        let a = entry
            .annotations
            .iter()
            .find(|a| a.role == KeyRole::A)
            .unwrap();
        let c = entry
            .annotations
            .iter()
            .find(|a| a.role == KeyRole::C)
            .unwrap();
        assert_eq!(a.offset, 0x9a0);
        assert_eq!(c.offset, 0xa40);
        assert_eq!(entry.annotations.len(), 6);
    }

    #[test]
    fn overlapping_recipe_keys_are_rejected() {
        let spec = lookup_cipher("aes256-ctr").unwrap();
        let recipe = SyntheticRecipe::new(spec, 64 * 1024, 0x800, 0x808, 0);
        assert!(matches!(
            generate_synthetic(&recipe),
            Err(Error::OverlappingRegions)
        ));
    }

    #[test]
    fn zeros_filler_leaves_only_key_pages_after_page_filter() {
        let mut r = recipe(5);
        r.filler_profile = FillerProfile::Zeros;
        let entry = generate_synthetic(&r).unwrap();
        let regions = page_filter(&entry.heap, 4096, 0.4);
        assert!(!regions.is_empty());
        let key_pages: std::collections::HashSet<usize> = entry
            .annotations
            .iter()
            .flat_map(|a| a.offset / 4096..=(a.offset + a.len() - 1) / 4096)
            .collect();
        for region in &regions {
            for page in region.offset / 4096..region.end().div_ceil(4096) {
                assert!(
                    key_pages.contains(&page),
                    "retained page {page} holds no key"
                );
            }
        }
    }

    #[test]
    fn key_pages_survive_the_page_filter() {
        for seed in 0..8 {
            let entry = generate_synthetic(&recipe(seed)).unwrap();
            let regions = page_filter(&entry.heap, 4096, 0.4);
            for annotation in &entry.annotations {
                let covered = regions.iter().any(|r| {
                    r.offset <= annotation.offset && annotation.offset + annotation.len() <= r.end()
                });
                assert!(covered, "seed {seed}: key {} page dropped", annotation.role);
            }
        }
    }

    #[test]
    fn mixed_filler_retention_is_paper_like() {
        let mut total = 0usize;
        let mut retained = 0usize;
        for seed in 0..10 {
            let entry = generate_synthetic(&recipe(seed)).unwrap();
            total += entry.heap.len();
            retained += page_filter(&entry.heap, 4096, 0.4)
                .iter()
                .map(|r| r.len)
                .sum::<usize>();
        }
        let fraction = retained as f64 / total as f64;
        assert!((0.20..=0.40).contains(&fraction), "retained {fraction:.3}");
    }

    #[test]
    fn pcap_round_trips_the_ciphertext() {
        let dir = tempfile::tempdir().unwrap();
        let entry = generate_synthetic(&recipe(6)).unwrap();
        write_entry(dir.path(), "cap", &entry, true).unwrap();
        let packet = extract_first_encrypted_packet(
            &dir.path().join("cap.pcap"),
            22,
            Direction::ClientToServer,
            "aes192-ctr",
        )
        .unwrap();
        assert_eq!(packet.ciphertext, entry.packet.as_ref().unwrap().ciphertext);
        let raw = std::fs::read(dir.path().join("cap-packet.raw")).unwrap();
        assert_eq!(packet.ciphertext, raw);
    }

    #[test]
    fn chacha_recipe_has_no_packet_or_iv_annotation() {
        let spec = lookup_cipher("chacha20-poly1305").unwrap();
        let recipe = SyntheticRecipe::new(spec, 64 * 1024, 0x800, 0x1000, 9);
        let entry = generate_synthetic(&recipe).unwrap();
        assert!(entry.packet.is_none());
        assert!(entry
            .annotations
            .iter()
            .all(|a| a.role != KeyRole::A && a.role != KeyRole::B));
        assert_eq!(
            entry
                .annotations
                .iter()
                .find(|a| a.role == KeyRole::C)
                .unwrap()
                .len(),
            64
        );
    }
}
