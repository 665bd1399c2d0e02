//! Drive the C ABI the way a foreign binding would: load a model file,
//! classify a heap buffer, extract the pair through predicted slices.

use std::ffi::CString;
use std::ptr;

use keyhunt::cipher::lookup_cipher;
use keyhunt::forest::{save_model, train_stacked, TrainingSet};
use keyhunt::preprocess::{slices_for_heap, PreprocessConfig};
use keyhunt::synth::{generate_synthetic, SyntheticRecipe};
use keyhunt_ffi::{
    keyhunt_classify, keyhunt_extract, keyhunt_model_free, keyhunt_model_load,
    keyhunt_offsets_free, KeyhuntKeyMatch, KeyhuntModel, KeyhuntStatus,
};

fn empty_match() -> KeyhuntKeyMatch {
    KeyhuntKeyMatch {
        iv_offset: 0,
        key_offset: 0,
        iv: [0; 16],
        key: [0; 64],
        iv_len: 0,
        key_len: 0,
        probes: 0,
    }
}

#[test]
fn model_load_classify_extract_round_trip() {
    // a small but real training corpus
    let config = PreprocessConfig::default();
    let mut set = TrainingSet::new(config.window);
    for seed in 0..20u64 {
        let spec =
            lookup_cipher(["aes128-ctr", "aes192-ctr", "aes256-ctr"][(seed % 3) as usize]).unwrap();
        let iv = (0x2000 + seed as usize * 968) & !7;
        let key = iv + 4096 + (seed as usize % 5) * 64;
        let recipe = SyntheticRecipe::new(spec, 132 * 1024, iv, key, seed);
        let entry = generate_synthetic(&recipe).unwrap();
        for slice in slices_for_heap(&entry.heap, Some(&entry.annotations), &config).unwrap() {
            set.push(&slice.data, slice.label);
        }
    }
    let model = train_stacked(&set, 0.25, 9).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let model_path = dir.path().join("model.khm");
    save_model(&model_path, &model).unwrap();

    // load through the C surface
    let c_path = CString::new(model_path.to_str().unwrap()).unwrap();
    let mut handle: *mut KeyhuntModel = ptr::null_mut();
    let status = unsafe { keyhunt_model_load(c_path.as_ptr(), &mut handle) };
    assert_eq!(status, KeyhuntStatus::Ok);
    assert!(!handle.is_null());

    // a fresh heap the model has not seen
    let spec = lookup_cipher("aes192-ctr").unwrap();
    let recipe = SyntheticRecipe::new(spec, 132 * 1024, 0x9000, 0x14000, 4242);
    let entry = generate_synthetic(&recipe).unwrap();
    let heap = entry.heap.bytes();
    let packet = entry.packet.as_ref().unwrap();

    // classify: the predicted offsets must cover the planted pair
    let mut offsets: *mut u64 = ptr::null_mut();
    let mut count: usize = 0;
    let status =
        unsafe { keyhunt_classify(handle, heap.as_ptr(), heap.len(), &mut offsets, &mut count) };
    assert_eq!(status, KeyhuntStatus::Ok);
    assert!(count > 0);
    let slice_offsets = unsafe { std::slice::from_raw_parts(offsets, count) };
    let covers = |target: u64| {
        slice_offsets
            .iter()
            .any(|&o| o <= target && target < o + 128)
    };
    assert!(covers(0x9000), "iv window predicted");
    assert!(covers(0x14000), "key window predicted");
    unsafe { keyhunt_offsets_free(offsets, count) };

    // extract through the predicted slices
    let cipher = CString::new("aes192-ctr").unwrap();
    let mut result = empty_match();
    let status = unsafe {
        keyhunt_extract(
            handle,
            heap.as_ptr(),
            heap.len(),
            packet.ciphertext.as_ptr(),
            packet.ciphertext.len(),
            cipher.as_ptr(),
            &mut result,
        )
    };
    assert_eq!(status, KeyhuntStatus::Ok);
    assert_eq!(result.iv_offset, 0x9000);
    assert_eq!(result.key_offset, 0x14000);
    let a = &entry
        .annotations
        .iter()
        .find(|a| a.role == keyhunt::KeyRole::A)
        .unwrap()
        .value;
    let c = &entry
        .annotations
        .iter()
        .find(|a| a.role == keyhunt::KeyRole::C)
        .unwrap()
        .value;
    assert_eq!(&result.iv[..16], a.as_slice());
    assert_eq!(&result.key[..24], c.as_slice());

    unsafe { keyhunt_model_free(handle) };
}

#[test]
fn corrupt_model_file_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.khm");
    std::fs::write(&path, "not a model").unwrap();
    let c_path = CString::new(path.to_str().unwrap()).unwrap();
    let mut handle: *mut KeyhuntModel = ptr::null_mut();
    let status = unsafe { keyhunt_model_load(c_path.as_ptr(), &mut handle) };
    assert_eq!(status, KeyhuntStatus::ParseError);
    assert!(handle.is_null());
}

#[test]
fn missing_model_file_is_an_io_error() {
    let c_path = CString::new("/no/such/model.khm").unwrap();
    let mut handle: *mut KeyhuntModel = ptr::null_mut();
    let status = unsafe { keyhunt_model_load(c_path.as_ptr(), &mut handle) };
    assert_eq!(status, KeyhuntStatus::IoError);
}
