use std::ffi::{c_char, CString};
use std::ptr;

use stap_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 512];
    let n = unsafe { stap_last_error(buf.as_mut_ptr(), buf.len()) };
    let bytes: Vec<u8> = buf[..n.min(511)].iter().map(|&c| c as u8).collect();
    String::from_utf8(bytes).unwrap()
}

fn reference() -> *mut StapScenario {
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { stap_scenario_reference(&mut s) }, StapStatus::Ok);
    assert!(!s.is_null());
    s
}

#[test]
fn reference_shape() {
    let s = reference();
    let mut shape = [0usize; 3];
    assert_eq!(unsafe { stap_scenario_tensor_shape(s, shape.as_mut_ptr()) }, StapStatus::Ok);
    assert_eq!(shape, [5, 26, 21]);
    unsafe { stap_scenario_free(s) };
}

#[test]
fn null_handles_are_reported() {
    let mut shape = [0usize; 3];
    let st = unsafe { stap_scenario_tensor_shape(ptr::null(), shape.as_mut_ptr()) };
    assert_eq!(st, StapStatus::NullPointer);
    assert!(last_error().contains("scenario"));
    unsafe { stap_scenario_free(ptr::null_mut()) };
}

#[test]
fn bad_json_is_a_config_error() {
    let json = CString::new("{\"array\": 3}").unwrap();
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { stap_scenario_from_json(json.as_ptr(), &mut s) }, StapStatus::Config);
    assert!(s.is_null());
    assert!(!last_error().is_empty());
}

#[test]
fn json_round_trip_matches_reference() {
    let text = include_str!("../../core/configs/reference.json");
    let json = CString::new(text).unwrap();
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { stap_scenario_from_json(json.as_ptr(), &mut s) }, StapStatus::Ok);
    unsafe { stap_scenario_free(s) };
}

#[test]
fn simulate_and_baseline() {
    let s = reference();
    let mut tensor = vec![0.0; 5 * 26 * 21];
    let mut label = [0.0; 3];
    let st = unsafe { stap_simulate_example(s, 7, 3, tensor.as_mut_ptr(), tensor.len(), label.as_mut_ptr()) };
    assert_eq!(st, StapStatus::Ok);
    assert!(tensor.iter().all(|v| *v > 0.0));
    let mut again = vec![0.0; tensor.len()];
    unsafe { stap_simulate_example(s, 7, 3, again.as_mut_ptr(), again.len(), label.as_mut_ptr()) };
    assert_eq!(tensor, again);

    let mut pos = [0.0; 3];
    let st = unsafe { stap_baseline_predict(s, tensor.as_ptr(), tensor.len(), pos.as_mut_ptr()) };
    assert_eq!(st, StapStatus::Ok);
    assert!((pos[0].hypot(pos[1]) - label[0].hypot(label[1])).abs() < 500.0);

    let mut short = vec![0.0; 10];
    let st = unsafe { stap_simulate_example(s, 7, 3, short.as_mut_ptr(), short.len(), label.as_mut_ptr()) };
    assert_eq!(st, StapStatus::BufferTooSmall);
    let st = unsafe { stap_baseline_predict(s, short.as_ptr(), short.len(), pos.as_mut_ptr()) };
    assert_eq!(st, StapStatus::Data);
    unsafe { stap_scenario_free(s) };
}

#[test]
fn dataset_train_predict_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("ds").to_str().unwrap()).unwrap();
    let s = reference();
    assert_eq!(unsafe { stap_dataset_generate(s, 11, 20, path.as_ptr(), 2, false) }, StapStatus::Ok);
    assert_eq!(unsafe { stap_dataset_generate(s, 11, 20, path.as_ptr(), 2, false) }, StapStatus::Config);

    let mut ds = ptr::null_mut();
    assert_eq!(unsafe { stap_dataset_open(path.as_ptr(), &mut ds) }, StapStatus::Ok);
    let mut n = 0;
    unsafe { stap_dataset_len(ds, &mut n) };
    assert_eq!(n, 20);
    let mut tensor = vec![0.0; 5 * 26 * 21];
    let mut label = [0.0; 3];
    assert_eq!(
        unsafe { stap_dataset_example(ds, 4, tensor.as_mut_ptr(), tensor.len(), label.as_mut_ptr()) },
        StapStatus::Ok
    );
    assert_eq!(
        unsafe { stap_dataset_example(ds, 20, tensor.as_mut_ptr(), tensor.len(), label.as_mut_ptr()) },
        StapStatus::Data
    );

    let mut model = ptr::null_mut();
    assert_eq!(unsafe { stap_model_train(ds, 1, 2, 8, &mut model) }, StapStatus::Ok);
    let mut pos = [0.0; 3];
    assert_eq!(
        unsafe { stap_model_predict(model, tensor.as_ptr(), tensor.len(), pos.as_mut_ptr()) },
        StapStatus::Ok
    );
    assert!(pos.iter().all(|v| v.is_finite()));

    let ck = CString::new(dir.path().join("m.ckpt").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { stap_model_save(model, ck.as_ptr()) }, StapStatus::Ok);
    let mut loaded = ptr::null_mut();
    assert_eq!(unsafe { stap_model_load(ck.as_ptr(), &mut loaded) }, StapStatus::Ok);
    let mut pos2 = [0.0; 3];
    unsafe { stap_model_predict(loaded, tensor.as_ptr(), tensor.len(), pos2.as_mut_ptr()) };
    assert_eq!(pos, pos2);

    let (mut ec, mut em) = (0.0, 0.0);
    assert_eq!(unsafe { stap_evaluate(loaded, ds, &mut ec, &mut em) }, StapStatus::Ok);
    assert!(ec > 0.0 && em > 0.0);

    let missing = CString::new(dir.path().join("none.ckpt").to_str().unwrap()).unwrap();
    let mut m3 = ptr::null_mut();
    assert_eq!(unsafe { stap_model_load(missing.as_ptr(), &mut m3) }, StapStatus::Data);
    assert!(last_error().contains("none.ckpt"));

    unsafe {
        stap_model_free(model);
        stap_model_free(loaded);
        stap_dataset_free(ds);
        stap_scenario_free(s);
    }
}

#[test]
fn version_string() {
    let v = unsafe { std::ffi::CStr::from_ptr(stap_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
