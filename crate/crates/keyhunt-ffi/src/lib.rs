//! C ABI over the keyhunt library: opaque model handles, status codes and
//! flat structs so other languages can drive classification and extraction.
//!
//! Conventions: functions return a [`KeyhuntStatus`]; results go to out
//! pointers. Buffers returned by this library are freed with the matching
//! `keyhunt_*_free` function and nothing else.

use std::ffi::{c_char, CStr};
use std::path::Path;
use std::ptr;

use keyhunt::bruteforce::{find_in_slices, find_iv_and_key, SearchOptions, SearchSpace};
use keyhunt::cipher::lookup_cipher;
use keyhunt::forest::{load_model, StackedModel};
use keyhunt::heap::{HeapSnapshot, Scenario};
use keyhunt::packet::{Direction, ValidationPacket};
use keyhunt::preprocess::{page_filter, slices_for_heap, PreprocessConfig};
use keyhunt::Error;

/// Result of every API call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KeyhuntStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// An argument value was out of range or malformed.
    InvalidArgument = 2,
    /// A file or buffer could not be parsed.
    ParseError = 3,
    /// The search exhausted its space without a validating pair.
    NotFound = 4,
    IoError = 5,
    /// The cipher is unknown or cannot be validated by decryption.
    Unsupported = 6,
}

fn status_for(err: &Error) -> KeyhuntStatus {
    match err {
        Error::UnknownCipher(_) | Error::UnsupportedCipher(_) => KeyhuntStatus::Unsupported,
        Error::Io(_) => KeyhuntStatus::IoError,
        Error::AddressOutOfRange { .. }
        | Error::HeapSmallerThanWindow { .. }
        | Error::MatrixTooSmall(_) => KeyhuntStatus::InvalidArgument,
        _ => KeyhuntStatus::ParseError,
    }
}

/// Opaque handle to a trained stacked classifier.
pub struct KeyhuntModel {
    inner: StackedModel,
}

/// A recovered (IV, key) pair.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct KeyhuntKeyMatch {
    /// Byte offset of the IV inside the heap buffer.
    pub iv_offset: u64,
    /// Byte offset of the encryption key inside the heap buffer.
    pub key_offset: u64,
    pub iv: [u8; 16],
    pub key: [u8; 64],
    pub iv_len: u32,
    pub key_len: u32,
    /// Sequential-order rank of the winning probe.
    pub probes: u64,
}

/// Library version as a static string; never freed by the caller.
#[no_mangle]
pub extern "C" fn keyhunt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Static description of a status code; never freed by the caller.
#[no_mangle]
pub extern "C" fn keyhunt_status_message(status: KeyhuntStatus) -> *const c_char {
    let text: &'static str = match status {
        KeyhuntStatus::Ok => "ok\0",
        KeyhuntStatus::NullArgument => "a required argument was null\0",
        KeyhuntStatus::InvalidArgument => "an argument was out of range\0",
        KeyhuntStatus::ParseError => "input could not be parsed\0",
        KeyhuntStatus::NotFound => "no validating (iv, key) pair found\0",
        KeyhuntStatus::IoError => "i/o error\0",
        KeyhuntStatus::Unsupported => "unknown or non-validatable cipher\0",
    };
    text.as_ptr() as *const c_char
}

/// Load a stacked model file produced by `keyhunt train`.
///
/// # Safety
/// `path` must be a valid NUL-terminated string and `out` a valid pointer.
/// On success `*out` owns the model; release it with [`keyhunt_model_free`].
#[no_mangle]
pub unsafe extern "C" fn keyhunt_model_load(
    path: *const c_char,
    out: *mut *mut KeyhuntModel,
) -> KeyhuntStatus {
    if path.is_null() || out.is_null() {
        return KeyhuntStatus::NullArgument;
    }
    *out = ptr::null_mut();
    let Ok(path) = CStr::from_ptr(path).to_str() else {
        return KeyhuntStatus::InvalidArgument;
    };
    match load_model(Path::new(path)) {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(KeyhuntModel { inner }));
            KeyhuntStatus::Ok
        }
        Err(err) => status_for(&err),
    }
}

/// Release a model handle; a null handle is a no-op.
///
/// # Safety
/// `model` must have come from [`keyhunt_model_load`] and not been freed.
#[no_mangle]
pub unsafe extern "C" fn keyhunt_model_free(model: *mut KeyhuntModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

fn heap_from_raw(bytes: &[u8]) -> Result<HeapSnapshot, Error> {
    HeapSnapshot::new(bytes.to_vec(), 0, "ffi", Scenario::BasicConnect, "ffi")
}

/// Classify a heap buffer and return the byte offsets of the slices the
/// stacked model predicts to hold key material.
///
/// # Safety
/// `heap` must point to `heap_len` readable bytes; `offsets_out` and
/// `count_out` must be valid pointers. The returned array is released with
/// [`keyhunt_offsets_free`].
#[no_mangle]
pub unsafe extern "C" fn keyhunt_classify(
    model: *const KeyhuntModel,
    heap: *const u8,
    heap_len: usize,
    offsets_out: *mut *mut u64,
    count_out: *mut usize,
) -> KeyhuntStatus {
    if model.is_null() || heap.is_null() || offsets_out.is_null() || count_out.is_null() {
        return KeyhuntStatus::NullArgument;
    }
    *offsets_out = ptr::null_mut();
    *count_out = 0;
    if heap_len == 0 {
        return KeyhuntStatus::InvalidArgument;
    }
    let bytes = std::slice::from_raw_parts(heap, heap_len);
    let snapshot = match heap_from_raw(bytes) {
        Ok(h) => h,
        Err(err) => return status_for(&err),
    };
    let config = PreprocessConfig::default();
    let slices = match slices_for_heap(&snapshot, None, &config) {
        Ok(slices) => slices,
        Err(err) => return status_for(&err),
    };
    let mut offsets: Vec<u64> = Vec::new();
    for slice in slices {
        match (*model).inner.predict_positive(&slice.data) {
            Ok(true) => offsets.push(slice.offset as u64),
            Ok(false) => {}
            Err(err) => return status_for(&err),
        }
    }
    offsets.shrink_to_fit();
    let mut boxed = offsets.into_boxed_slice();
    *count_out = boxed.len();
    *offsets_out = boxed.as_mut_ptr();
    std::mem::forget(boxed);
    KeyhuntStatus::Ok
}

/// Release an offset array from [`keyhunt_classify`]; null is a no-op.
///
/// # Safety
/// `offsets` and `count` must be exactly the values produced by one call.
#[no_mangle]
pub unsafe extern "C" fn keyhunt_offsets_free(offsets: *mut u64, count: usize) {
    if !offsets.is_null() {
        drop(Box::from_raw(std::ptr::slice_from_raw_parts_mut(
            offsets, count,
        )));
    }
}

/// Recover the (IV, key) pair of one heap against one captured packet.
///
/// With a model handle the classifier-assisted path runs (predicted slices
/// only); with a null model the heap is page-filtered and brute-forced.
/// `packet` is one SSH binary packet starting at its encrypted length field.
///
/// # Safety
/// `heap` and `packet` must point to the stated number of readable bytes,
/// `cipher` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn keyhunt_extract(
    model: *const KeyhuntModel,
    heap: *const u8,
    heap_len: usize,
    packet: *const u8,
    packet_len: usize,
    cipher: *const c_char,
    out: *mut KeyhuntKeyMatch,
) -> KeyhuntStatus {
    if heap.is_null() || packet.is_null() || cipher.is_null() || out.is_null() {
        return KeyhuntStatus::NullArgument;
    }
    if heap_len == 0 || packet_len == 0 {
        return KeyhuntStatus::InvalidArgument;
    }
    let Ok(cipher) = CStr::from_ptr(cipher).to_str() else {
        return KeyhuntStatus::InvalidArgument;
    };
    let spec = match lookup_cipher(cipher) {
        Ok(spec) => spec,
        Err(err) => return status_for(&err),
    };
    let heap_bytes = std::slice::from_raw_parts(heap, heap_len);
    let snapshot = match heap_from_raw(heap_bytes) {
        Ok(h) => h,
        Err(err) => return status_for(&err),
    };
    let packet_bytes = std::slice::from_raw_parts(packet, packet_len).to_vec();
    let packet =
        match ValidationPacket::new(packet_bytes, spec.name, Direction::ClientToServer, 0, true) {
            Ok(p) => p,
            Err(err) => return status_for(&err),
        };

    let config = PreprocessConfig::default();
    let options = SearchOptions::default();
    let outcome = if model.is_null() {
        let regions = page_filter(&snapshot, config.page_len, config.page_threshold);
        find_iv_and_key(
            &packet,
            &SearchSpace::from_regions(regions),
            &snapshot,
            spec,
            &options,
        )
    } else {
        let slices = match slices_for_heap(&snapshot, None, &config) {
            Ok(slices) => slices,
            Err(err) => return status_for(&err),
        };
        let mut predicted = Vec::new();
        for slice in slices {
            match (*model).inner.predict_positive(&slice.data) {
                Ok(true) => predicted.push(slice),
                Ok(false) => {}
                Err(err) => return status_for(&err),
            }
        }
        find_in_slices(&packet, &predicted, &snapshot, spec, &options)
    };
    match outcome {
        Ok(outcome) => match outcome.found() {
            Some(m) => {
                let mut result = KeyhuntKeyMatch {
                    iv_offset: m.iv_offset as u64,
                    key_offset: m.key_offset as u64,
                    iv: [0; 16],
                    key: [0; 64],
                    iv_len: m.iv.len() as u32,
                    key_len: m.key.len() as u32,
                    probes: m.probes_tried,
                };
                result.iv[..m.iv.len()].copy_from_slice(&m.iv);
                result.key[..m.key.len()].copy_from_slice(&m.key);
                *out = result;
                KeyhuntStatus::Ok
            }
            None => KeyhuntStatus::NotFound,
        },
        Err(err) => status_for(&err),
    }
}
