//! Reduce a heap to candidate key regions.
//!
//! Two independent reducers feed the search paths: a per-page hamming
//! distance filter (baseline brute force) and a row-wise neighbor-difference
//! mask over the N×8 reshaped heap followed by 128-byte slice extraction
//! (classifier path).

use crate::error::{Error, Result};
use crate::heap::{
    CandidateRegion, HeapSnapshot, KeyAnnotation, RegionOrigin, SliceSample, ROW_BYTES,
};

/// Default page size for the hamming filter.
pub const DEFAULT_PAGE_LEN: usize = 4096;
/// Default fraction of 8 bits a page's mean byte-to-byte hamming distance
/// must reach to be kept. Seeded-random pages average 4.0 bits; ASCII and
/// pointer-heavy pages stay well below 3.2.
pub const DEFAULT_PAGE_THRESHOLD: f64 = 0.4;
/// Default slice width fed to the classifier.
pub const DEFAULT_WINDOW: usize = 128;
/// Default slice stride; half a window, so any key up to 64 bytes is fully
/// contained in at least one slice.
pub const DEFAULT_STRIDE: usize = 64;

/// How the horizontal/vertical difference test combines neighbors.
///
/// The printed formula takes a bitwise AND of the two absolute differences,
/// which can be zero for unequal neighbors (e.g. |a-b|=1, |a-c|=2). The
/// logical reading — "differs from the right neighbor AND differs from the
/// neighbor below" — is the default; the bitwise variant stays available for
/// comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DiffSemantics {
    #[default]
    Logical,
    BitwiseAbs,
}

/// Which row count marks a row as possible key material.
///
/// Counting differing bytes (>= 4 of 8) is the default: high-entropy rows
/// have few equal neighbors. The printed variant counts equal neighbors
/// instead and is kept for comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MarkPolarity {
    #[default]
    CountDiffering,
    CountEqualPrinted,
}

/// Knobs shared by the slice pipeline; defaults match the module constants.
#[derive(Debug, Clone, Copy)]
pub struct PreprocessConfig {
    pub page_len: usize,
    pub page_threshold: f64,
    pub window: usize,
    pub stride: usize,
    pub diff: DiffSemantics,
    pub polarity: MarkPolarity,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            page_len: DEFAULT_PAGE_LEN,
            page_threshold: DEFAULT_PAGE_THRESHOLD,
            window: DEFAULT_WINDOW,
            stride: DEFAULT_STRIDE,
            diff: DiffSemantics::default(),
            polarity: MarkPolarity::default(),
        }
    }
}

/// N×8 view of a heap buffer.
#[derive(Debug, Clone, Copy)]
pub struct HeapMatrix<'a> {
    bytes: &'a [u8],
}

impl<'a> HeapMatrix<'a> {
    /// `bytes.len()` must be a multiple of 8; [`HeapSnapshot`] guarantees it.
    pub fn new(bytes: &'a [u8]) -> Self {
        debug_assert_eq!(bytes.len() % ROW_BYTES, 0);
        HeapMatrix { bytes }
    }

    pub fn from_heap(heap: &'a HeapSnapshot) -> Self {
        HeapMatrix::new(heap.bytes())
    }

    pub fn n_rows(&self) -> usize {
        self.bytes.len() / ROW_BYTES
    }

    pub fn at(&self, row: usize, col: usize) -> u8 {
        self.bytes[row * ROW_BYTES + col]
    }

    pub fn row(&self, i: usize) -> &'a [u8] {
        &self.bytes[i * ROW_BYTES..(i + 1) * ROW_BYTES]
    }
}

/// Result of the combined horizontal/vertical difference test (one flag per
/// heap byte).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiffMask {
    values: Vec<bool>,
    n_rows: usize,
}

impl DiffMask {
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn at(&self, row: usize, col: usize) -> bool {
        self.values[row * ROW_BYTES + col]
    }

    pub fn row(&self, i: usize) -> &[bool] {
        &self.values[i * ROW_BYTES..(i + 1) * ROW_BYTES]
    }
}

/// Per-row key marks: `z` flags rows where at least half the bytes pass the
/// difference test, `r` keeps only marks confirmed by the following row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowMarks {
    pub z: Vec<bool>,
    pub r: Vec<bool>,
}

impl RowMarks {
    pub fn n_rows(&self) -> usize {
        self.z.len()
    }

    pub fn any_marked(&self) -> bool {
        self.r.iter().any(|&m| m)
    }
}

/// Drop whole pages whose mean byte-to-byte hamming distance stays below
/// `threshold * 8` bits. Adjacent surviving pages are merged into one region.
pub fn page_filter(heap: &HeapSnapshot, page_len: usize, threshold: f64) -> Vec<CandidateRegion> {
    debug_assert_eq!(page_len % ROW_BYTES, 0);
    let bytes = heap.bytes();
    let min_mean = threshold * 8.0;
    let mut regions: Vec<CandidateRegion> = Vec::new();
    let mut start = 0;
    while start < bytes.len() {
        let end = (start + page_len).min(bytes.len());
        let page = &bytes[start..end];
        if page_mean_hamming(page) >= min_mean {
            match regions.last_mut() {
                Some(last) if last.end() == start => last.len += end - start,
                _ => regions.push(CandidateRegion::new(
                    start,
                    end - start,
                    RegionOrigin::PageFilter,
                )),
            }
        }
        start = end;
    }
    regions
}

/// Mean popcount of consecutive-byte XORs; 0.0 for pages too short to pair.
pub fn page_mean_hamming(page: &[u8]) -> f64 {
    if page.len() < 2 {
        return 0.0;
    }
    let total: u64 = page
        .windows(2)
        .map(|pair| (pair[0] ^ pair[1]).count_ones() as u64)
        .sum();
    total as f64 / (page.len() - 1) as f64
}

/// Combined horizontal/vertical neighbor-difference test over the reshaped
/// heap. Boundary cells fall back to the neighbor that exists: the last
/// column tests vertically only, the last row horizontally only, and the
/// bottom-right corner tests against its left neighbor so keys ending at the
/// heap tail stay detectable.
pub fn diff_mask(matrix: &HeapMatrix<'_>, semantics: DiffSemantics) -> Result<DiffMask> {
    let n = matrix.n_rows();
    if n < 2 {
        return Err(Error::MatrixTooSmall(n));
    }
    let mut values = vec![false; n * ROW_BYTES];
    for i in 0..n {
        let row = matrix.row(i);
        let below = (i + 1 < n).then(|| matrix.row(i + 1));
        let out = &mut values[i * ROW_BYTES..(i + 1) * ROW_BYTES];
        for j in 0..ROW_BYTES {
            let cell = row[j];
            let horizontal = if j + 1 < ROW_BYTES {
                Some(cell.abs_diff(row[j + 1]))
            } else {
                None
            };
            let vertical = below.map(|b| cell.abs_diff(b[j]));
            out[j] = match (horizontal, vertical) {
                (Some(h), Some(v)) => match semantics {
                    DiffSemantics::Logical => h != 0 && v != 0,
                    DiffSemantics::BitwiseAbs => h & v != 0,
                },
                (Some(h), None) => h != 0,
                (None, Some(v)) => v != 0,
                // Bottom-right corner: no forward neighbor in either
                // direction, compare against the left neighbor instead.
                (None, None) => cell != row[j - 1],
            };
        }
    }
    Ok(DiffMask { values, n_rows: n })
}

/// Mark rows whose difference count clears half the row, then AND each mark
/// with its successor to discard isolated rows (`r[last]` is always false).
pub fn mark_rows(mask: &DiffMask, polarity: MarkPolarity) -> RowMarks {
    let n = mask.n_rows();
    let z: Vec<bool> = (0..n)
        .map(|i| {
            let differing = mask.row(i).iter().filter(|&&d| d).count();
            match polarity {
                MarkPolarity::CountDiffering => differing >= 4,
                MarkPolarity::CountEqualPrinted => ROW_BYTES - differing >= 4,
            }
        })
        .collect();
    let r = confirm_marks(&z);
    RowMarks { z, r }
}

/// `r[i] = z[i] && z[i+1]`, the opening step that drops isolated marks.
pub fn confirm_marks(z: &[bool]) -> Vec<bool> {
    (0..z.len())
        .map(|i| z[i] && *z.get(i + 1).unwrap_or(&false))
        .collect()
}

/// Zero every run of consecutive `r` marks shorter than the run a key of
/// `min_len` bytes would produce (a key spanning k rows yields k-1 marks).
pub fn min_key_run_filter(marks: &RowMarks, min_len: usize) -> RowMarks {
    let required = (min_len.div_ceil(ROW_BYTES)).saturating_sub(1).max(1);
    let mut r = marks.r.clone();
    let mut i = 0;
    while i < r.len() {
        if r[i] {
            let start = i;
            while i < r.len() && r[i] {
                i += 1;
            }
            if i - start < required {
                r[start..i].fill(false);
            }
        } else {
            i += 1;
        }
    }
    RowMarks {
        z: marks.z.clone(),
        r,
    }
}

/// Cut the heap into `window`-byte slices at `stride` spacing, keeping only
/// windows that contain at least one confirmed mark. The final window is
/// right-anchored to the heap end so tail rows stay covered. When
/// annotations are given, a slice is labeled positive iff any key byte range
/// intersects it.
pub fn extract_slices(
    heap: &HeapSnapshot,
    marks: &RowMarks,
    annotations: Option<&[KeyAnnotation]>,
    window: usize,
    stride: usize,
) -> Result<Vec<SliceSample>> {
    debug_assert_eq!(window % ROW_BYTES, 0);
    debug_assert_eq!(stride % ROW_BYTES, 0);
    debug_assert!(stride <= window);
    let bytes = heap.bytes();
    if bytes.len() < window {
        return Err(Error::HeapSmallerThanWindow {
            heap: bytes.len(),
            window,
        });
    }
    let mut offsets: Vec<usize> = (0..)
        .map(|k| k * stride)
        .take_while(|&off| off + window <= bytes.len())
        .collect();
    if offsets
        .last()
        .is_none_or(|&last| last + window < bytes.len())
    {
        offsets.push(bytes.len() - window);
    }

    let mut slices = Vec::new();
    for offset in offsets {
        let first_row = offset / ROW_BYTES;
        let last_row = (offset + window) / ROW_BYTES;
        if !marks.r[first_row..last_row].iter().any(|&m| m) {
            continue;
        }
        let label = annotations.is_some_and(|keys| {
            keys.iter()
                .any(|k| k.offset < offset + window && offset < k.offset + k.len())
        });
        slices.push(SliceSample {
            offset,
            data: bytes[offset..offset + window].to_vec(),
            label,
        });
    }
    Ok(slices)
}

/// Run mask + marks + slicing with one set of knobs.
pub fn slices_for_heap(
    heap: &HeapSnapshot,
    annotations: Option<&[KeyAnnotation]>,
    config: &PreprocessConfig,
) -> Result<Vec<SliceSample>> {
    let matrix = HeapMatrix::from_heap(heap);
    let mask = diff_mask(&matrix, config.diff)?;
    let marks = mark_rows(&mask, config.polarity);
    extract_slices(heap, &marks, annotations, config.window, config.stride)
}
