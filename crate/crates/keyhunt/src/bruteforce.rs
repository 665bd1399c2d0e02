//! Exhaustive 8-byte-aligned (IV, key) search over a byte region, validated
//! by decrypting one captured packet.
//!
//! IV candidates are scanned in ascending order; for each IV every key
//! candidate is probed in ascending order, and the first validating pair
//! wins. The scan is data-parallel over IV candidates with the leftmost
//! match selected, so results and reported probe counts are independent of
//! the worker count: `probes_tried` is the rank of the winning pair in the
//! sequential scan order (or the full product when nothing validates).

use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::cipher::CipherSpec;
use crate::error::{Error, Result};
use crate::heap::{CandidateRegion, HeapSnapshot, RegionOrigin, SliceSample, ROW_BYTES};
use crate::packet::{validate_probe, FirstBlockOracle, ScheduledAes, ValidationPacket};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchSource {
    FullHeap,
    PageFiltered,
    ClassifierSlices,
}

/// Sorted, disjoint byte regions the search iterates over.
#[derive(Debug, Clone)]
pub struct SearchSpace {
    pub regions: Vec<CandidateRegion>,
    pub source: SearchSource,
}

impl SearchSpace {
    pub fn full_heap(heap: &HeapSnapshot) -> Self {
        SearchSpace {
            regions: vec![CandidateRegion::new(
                0,
                heap.len(),
                RegionOrigin::PageFilter,
            )],
            source: SearchSource::FullHeap,
        }
    }

    pub fn from_regions(regions: Vec<CandidateRegion>) -> Self {
        debug_assert!(regions.windows(2).all(|w| w[0].end() <= w[1].offset));
        SearchSpace {
            regions,
            source: SearchSource::PageFiltered,
        }
    }

    /// Union of slice windows, merged into sorted disjoint regions.
    pub fn from_slices(slices: &[SliceSample]) -> Self {
        let mut windows: Vec<(usize, usize)> = slices
            .iter()
            .map(|s| (s.offset, s.offset + s.data.len()))
            .collect();
        windows.sort_unstable();
        let mut regions: Vec<CandidateRegion> = Vec::new();
        for (start, end) in windows {
            match regions.last_mut() {
                Some(last) if start <= last.end() => {
                    let new_end = last.end().max(end);
                    last.len = new_end - last.offset;
                }
                _ => regions.push(CandidateRegion::new(
                    start,
                    end - start,
                    RegionOrigin::Classifier,
                )),
            }
        }
        SearchSpace {
            regions,
            source: SearchSource::ClassifierSlices,
        }
    }

    pub fn total_bytes(&self) -> usize {
        self.regions.iter().map(|r| r.len).sum()
    }

    /// Ascending 8-aligned read offsets whose `read_len` bytes stay inside
    /// the heap. Reads may extend past a region boundary into the raw heap
    /// (keys can straddle a filtered page edge) but never past the end.
    fn candidate_offsets(&self, read_len: usize, heap_len: usize) -> Vec<u32> {
        let mut out = Vec::new();
        for region in &self.regions {
            let mut offset = region.offset;
            while offset < region.end() {
                if offset + read_len <= heap_len {
                    out.push(offset as u32);
                }
                offset += ROW_BYTES;
            }
        }
        out
    }
}

/// A validated (IV, key) pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyMatch {
    pub iv_offset: usize,
    pub key_offset: usize,
    pub iv: Vec<u8>,
    pub key: Vec<u8>,
    pub cipher_name: String,
    pub probes_tried: u64,
    pub elapsed: Duration,
}

#[derive(Debug, Clone)]
pub enum SearchOutcome {
    Found(KeyMatch),
    NotFound {
        probes_tried: u64,
        elapsed: Duration,
    },
}

impl SearchOutcome {
    pub fn found(&self) -> Option<&KeyMatch> {
        match self {
            SearchOutcome::Found(m) => Some(m),
            SearchOutcome::NotFound { .. } => None,
        }
    }

    pub fn probes_tried(&self) -> u64 {
        match self {
            SearchOutcome::Found(m) => m.probes_tried,
            SearchOutcome::NotFound { probes_tried, .. } => *probes_tried,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SearchOptions {
    /// Cap the rayon pool; `None` uses the global pool.
    pub workers: Option<usize>,
    /// Advance the outer loop the way the pseudo-code literally reads
    /// (jumping past the whole inner sweep), i.e. probe only the first IV
    /// candidate. Off by default; kept for comparison.
    pub literal_outer_advance: bool,
}

/// Search `space` for an (IV, key) pair that decrypts `packet`.
pub fn find_iv_and_key(
    packet: &ValidationPacket,
    space: &SearchSpace,
    heap: &HeapSnapshot,
    spec: &CipherSpec,
    options: &SearchOptions,
) -> Result<SearchOutcome> {
    let iv_candidates = space.candidate_offsets(spec.iv_len, heap.len());
    let key_candidates = space.candidate_offsets(spec.key_len, heap.len());
    run_search(packet, heap, spec, iv_candidates, key_candidates, options)
}

/// Search predicted-positive slices: IV candidates come from the slices and
/// key candidates from the union of all slices, so the IV and key may live
/// in different windows.
pub fn find_in_slices(
    packet: &ValidationPacket,
    slices: &[SliceSample],
    heap: &HeapSnapshot,
    spec: &CipherSpec,
    options: &SearchOptions,
) -> Result<SearchOutcome> {
    let space = SearchSpace::from_slices(slices);
    find_iv_and_key(packet, &space, heap, spec, options)
}

fn run_search(
    packet: &ValidationPacket,
    heap: &HeapSnapshot,
    spec: &CipherSpec,
    mut iv_candidates: Vec<u32>,
    key_candidates: Vec<u32>,
    options: &SearchOptions,
) -> Result<SearchOutcome> {
    if !spec.validatable {
        return Err(Error::UnsupportedCipher(spec.name.to_string()));
    }
    let started = Instant::now();
    let oracle = FirstBlockOracle::new(packet)?;
    if options.literal_outer_advance {
        iv_candidates.truncate(1);
    }
    if iv_candidates.is_empty() || key_candidates.is_empty() {
        return Ok(SearchOutcome::NotFound {
            probes_tried: 0,
            elapsed: started.elapsed(),
        });
    }

    let bytes = heap.bytes();
    let search = || {
        // one key schedule per candidate, reused across every IV
        let schedules: Vec<ScheduledAes> = key_candidates
            .par_iter()
            .map(|&off| {
                let off = off as usize;
                ScheduledAes::new(&bytes[off..off + spec.key_len]).expect("validatable key sizes")
            })
            .collect();
        iv_candidates
            .par_iter()
            .enumerate()
            .find_map_first(|(iv_rank, &iv_off)| {
                let iv = &bytes[iv_off as usize..iv_off as usize + spec.iv_len];
                schedules
                    .iter()
                    .position(|schedule| oracle.probe(schedule, iv).valid)
                    .map(|key_rank| (iv_rank, key_rank))
            })
    };
    let hit = match options.workers {
        Some(workers) if workers > 0 => rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .expect("worker pool")
            .install(search),
        _ => search(),
    };

    let n_keys = key_candidates.len() as u64;
    match hit {
        Some((iv_rank, key_rank)) => {
            let iv_offset = iv_candidates[iv_rank] as usize;
            let key_offset = key_candidates[key_rank] as usize;
            let iv = bytes[iv_offset..iv_offset + spec.iv_len].to_vec();
            let key = bytes[key_offset..key_offset + spec.key_len].to_vec();
            debug_assert!(validate_probe(packet, &iv, &key)?.valid);
            Ok(SearchOutcome::Found(KeyMatch {
                iv_offset,
                key_offset,
                iv,
                key,
                cipher_name: spec.name.to_string(),
                probes_tried: iv_rank as u64 * n_keys + key_rank as u64 + 1,
                elapsed: started.elapsed(),
            }))
        }
        None => Ok(SearchOutcome::NotFound {
            probes_tried: iv_candidates.len() as u64 * n_keys,
            elapsed: started.elapsed(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cipher::lookup_cipher;
    use crate::heap::Scenario;
    use crate::packet::{encrypt_packet, frame_bpp, Direction};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// A zero heap with the IV and key planted at known offsets, plus the
    /// matching encrypted packet.
    fn planted(
        cipher: &str,
        iv_offset: usize,
        key_offset: usize,
        heap_len: usize,
        seed: u64,
    ) -> (HeapSnapshot, ValidationPacket) {
        let spec = lookup_cipher(cipher).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let iv: Vec<u8> = (0..spec.iv_len).map(|_| rng.gen()).collect();
        let key: Vec<u8> = (0..spec.key_len).map(|_| rng.gen()).collect();
        let mut bytes = vec![0u8; heap_len];
        bytes[iv_offset..iv_offset + spec.iv_len].copy_from_slice(&iv);
        bytes[key_offset..key_offset + spec.key_len].copy_from_slice(&key);
        let heap = HeapSnapshot::new(
            bytes,
            0x7000_0000_0000,
            "V_8_0_P1",
            Scenario::BasicConnect,
            "test",
        )
        .unwrap();
        let payload: Vec<u8> = std::iter::once(94u8)
            .chain((0..58).map(|_| rng.gen()))
            .collect();
        let framed = frame_bpp(&payload, spec.block_len, |n| {
            (0..n).map(|_| rng.gen()).collect()
        });
        let ciphertext = encrypt_packet(spec, &iv, &key, &framed).unwrap();
        let packet =
            ValidationPacket::new(ciphertext, cipher, Direction::ClientToServer, 0, true).unwrap();
        (heap, packet)
    }

    #[test]
    fn finds_planted_pair_at_exact_offsets() {
        for cipher in ["aes128-ctr", "aes192-ctr", "aes256-ctr", "aes256-cbc"] {
            let (heap, packet) = planted(cipher, 512, 1024, 4096, 3);
            let spec = lookup_cipher(cipher).unwrap();
            let space = SearchSpace::full_heap(&heap);
            let outcome =
                find_iv_and_key(&packet, &space, &heap, spec, &SearchOptions::default()).unwrap();
            let m = outcome.found().expect(cipher);
            assert_eq!(m.iv_offset, 512, "{cipher}");
            assert_eq!(m.key_offset, 1024, "{cipher}");
            assert!(validate_probe(&packet, &m.iv, &m.key).unwrap().valid);
        }
    }

    #[test]
    fn key_in_last_row_is_found() {
        let spec = lookup_cipher("aes128-ctr").unwrap();
        let heap_len = 4096;
        let (heap, packet) = planted("aes128-ctr", 0, heap_len - spec.key_len, heap_len, 5);
        let space = SearchSpace::full_heap(&heap);
        let outcome =
            find_iv_and_key(&packet, &space, &heap, spec, &SearchOptions::default()).unwrap();
        let m = outcome.found().unwrap();
        assert_eq!(m.iv_offset, 0);
        assert_eq!(m.key_offset, heap_len - spec.key_len);
    }

    #[test]
    fn missing_key_exhausts_with_exact_probe_count() {
        let spec = lookup_cipher("aes192-ctr").unwrap();
        let (heap, packet) = planted("aes192-ctr", 128, 512, 2048, 7);
        // wipe the key so nothing validates
        let mut bytes = heap.bytes().to_vec();
        bytes[512..512 + spec.key_len].fill(0);
        let heap = HeapSnapshot::new(
            bytes,
            heap.base_addr,
            "V_8_0_P1",
            Scenario::BasicConnect,
            "test",
        )
        .unwrap();
        let space = SearchSpace::full_heap(&heap);
        let outcome =
            find_iv_and_key(&packet, &space, &heap, spec, &SearchOptions::default()).unwrap();
        let n_iv = (2048 - spec.iv_len) / 8 + 1;
        let n_key = (2048 - spec.key_len) / 8 + 1;
        match outcome {
            SearchOutcome::NotFound { probes_tried, .. } => {
                assert_eq!(probes_tried, (n_iv * n_key) as u64);
            }
            SearchOutcome::Found(m) => panic!("unexpected match {m:?}"),
        }
    }

    #[test]
    fn early_exit_probes_less_than_exhaustion() {
        let spec = lookup_cipher("aes128-ctr").unwrap();
        let (heap, packet) = planted("aes128-ctr", 256, 640, 2048, 9);
        let space = SearchSpace::full_heap(&heap);
        let outcome =
            find_iv_and_key(&packet, &space, &heap, spec, &SearchOptions::default()).unwrap();
        let m = outcome.found().unwrap();
        let n_iv = ((2048 - spec.iv_len) / 8 + 1) as u64;
        let n_key = ((2048 - spec.key_len) / 8 + 1) as u64;
        assert!(m.probes_tried < n_iv * n_key);
        // rank arithmetic: iv at offset 256 is candidate 32, key at 640 is 80
        assert_eq!(m.probes_tried, 32 * n_key + 80 + 1);
    }

    #[test]
    fn worker_count_does_not_change_the_result() {
        let spec = lookup_cipher("aes128-ctr").unwrap();
        // two valid pairs exist: the planted IV appears twice
        let (heap, packet) = planted("aes128-ctr", 512, 1024, 4096, 11);
        let mut bytes = heap.bytes().to_vec();
        let iv = bytes[512..528].to_vec();
        bytes[2048..2064].copy_from_slice(&iv);
        let heap = HeapSnapshot::new(
            bytes,
            heap.base_addr,
            "V_8_0_P1",
            Scenario::BasicConnect,
            "test",
        )
        .unwrap();
        let space = SearchSpace::full_heap(&heap);
        let mut results = Vec::new();
        for workers in [1, 2, 7] {
            let options = SearchOptions {
                workers: Some(workers),
                ..Default::default()
            };
            let outcome = find_iv_and_key(&packet, &space, &heap, spec, &options).unwrap();
            let m = outcome.found().unwrap();
            results.push((m.iv_offset, m.key_offset, m.probes_tried));
        }
        assert!(results.windows(2).all(|w| w[0] == w[1]), "{results:?}");
        assert_eq!(results[0].0, 512);
    }

    #[test]
    fn slices_restrict_the_search() {
        let spec = lookup_cipher("aes128-ctr").unwrap();
        let (heap, packet) = planted("aes128-ctr", 512, 1152, 8192, 13);
        // two predicted windows, one per secret; key candidates span both
        let slices: Vec<SliceSample> = [512usize, 1152]
            .iter()
            .map(|&offset| SliceSample {
                offset: offset / 64 * 64,
                data: heap.bytes()[offset / 64 * 64..offset / 64 * 64 + 128].to_vec(),
                label: true,
            })
            .collect();
        let outcome =
            find_in_slices(&packet, &slices, &heap, spec, &SearchOptions::default()).unwrap();
        let m = outcome.found().unwrap();
        assert_eq!(m.iv_offset, 512);
        assert_eq!(m.key_offset, 1152);
        // matches the unrestricted search
        let full = find_iv_and_key(
            &packet,
            &SearchSpace::full_heap(&heap),
            &heap,
            spec,
            &SearchOptions::default(),
        )
        .unwrap();
        let f = full.found().unwrap();
        assert_eq!((f.iv_offset, f.key_offset), (m.iv_offset, m.key_offset));
    }

    #[test]
    fn empty_slice_list_probes_nothing() {
        let spec = lookup_cipher("aes128-ctr").unwrap();
        let (heap, packet) = planted("aes128-ctr", 0, 64, 1024, 15);
        let outcome = find_in_slices(&packet, &[], &heap, spec, &SearchOptions::default()).unwrap();
        match outcome {
            SearchOutcome::NotFound { probes_tried, .. } => assert_eq!(probes_tried, 0),
            SearchOutcome::Found(m) => panic!("unexpected match {m:?}"),
        }
    }

    #[test]
    fn literal_outer_advance_probes_only_the_first_iv() {
        let spec = lookup_cipher("aes128-ctr").unwrap();
        let options = SearchOptions {
            literal_outer_advance: true,
            ..Default::default()
        };
        // pair at the very first candidate: still found
        let (heap, packet) = planted("aes128-ctr", 0, 512, 1024, 17);
        let space = SearchSpace::full_heap(&heap);
        let outcome = find_iv_and_key(&packet, &space, &heap, spec, &options).unwrap();
        assert_eq!(outcome.found().unwrap().iv_offset, 0);
        // IV anywhere else: the literal loop never reaches it
        let (heap, packet) = planted("aes128-ctr", 8, 512, 1024, 17);
        let space = SearchSpace::full_heap(&heap);
        let outcome = find_iv_and_key(&packet, &space, &heap, spec, &options).unwrap();
        assert!(outcome.found().is_none());
    }

    #[test]
    fn unsupported_cipher_is_rejected() {
        let (heap, packet) = planted("aes128-ctr", 0, 64, 1024, 19);
        let chacha = lookup_cipher("chacha20-poly1305").unwrap();
        let space = SearchSpace::full_heap(&heap);
        let err =
            find_iv_and_key(&packet, &space, &heap, chacha, &SearchOptions::default()).unwrap_err();
        assert!(matches!(err, Error::UnsupportedCipher(_)));
    }

    #[test]
    fn overlapping_slices_merge_into_regions() {
        let slices: Vec<SliceSample> = [0usize, 64, 256]
            .iter()
            .map(|&offset| SliceSample {
                offset,
                data: vec![0; 128],
                label: true,
            })
            .collect();
        let space = SearchSpace::from_slices(&slices);
        assert_eq!(space.regions.len(), 2);
        assert_eq!((space.regions[0].offset, space.regions[0].len), (0, 192));
        assert_eq!((space.regions[1].offset, space.regions[1].len), (256, 128));
        assert_eq!(space.total_bytes(), 320);
    }
}
