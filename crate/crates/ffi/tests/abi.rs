use std::ffi::{c_char, CStr, CString};
use std::ptr;

use wayfind::cnn::{CnnConfig, CnnModel};
use wayfind::encode::Vocabulary;
use wayfind_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 256];
    let n = unsafe { wf_last_error_message(buf.as_mut_ptr(), buf.len()) };
    assert!(n > 0 && n <= buf.len());
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

#[test]
fn levenshtein_and_counts() {
    let mut d = 0usize;
    let st = unsafe { wf_levenshtein(c("Hepatology").as_ptr(), c("Hematology").as_ptr(), &mut d) };
    assert_eq!((st, d), (WfStatus::Ok, 1));
    assert_eq!(unsafe { wf_last_error_message(ptr::null_mut(), 0) }, 0);

    let st = unsafe { wf_levenshtein(ptr::null(), c("x").as_ptr(), &mut d) };
    assert_eq!(st, WfStatus::NullPointer);
    assert!(last_error().contains("null"));

    let bad = [0xffu8 as c_char, 0];
    assert_eq!(unsafe { wf_levenshtein(bad.as_ptr(), c("x").as_ptr(), &mut d) }, WfStatus::InvalidUtf8);

    assert_eq!(wf_count_output_params(79, 100, false), 47_558);
    assert_eq!(wf_count_output_params(79, 100, true), 1_854_762);
    assert!(!unsafe { CStr::from_ptr(wf_version()) }.to_bytes().is_empty());
}

#[test]
fn detector_lifecycle() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.ckpt");
    let config = CnnConfig {
        embedding_dim: 4,
        feature_maps: 3,
        filter_widths: vec![2, 3],
        max_len: 8,
        ..Default::default()
    };
    let names = vec!["MRI".to_string(), "Reception".to_string(), "Pharmacy".to_string()];
    let model = CnnModel::init(config, Vocabulary::build(["from reception to mri"]), names).unwrap();
    model.save(&path).unwrap();
    let expected = model.predict("from reception to mri").unwrap();

    let mut det = ptr::null_mut();
    let p = c(path.to_str().unwrap());
    assert_eq!(unsafe { wf_detector_load(p.as_ptr(), &mut det) }, WfStatus::Ok);
    assert_eq!(unsafe { wf_detector_num_departments(det) }, 3);

    let mut out = WfPrediction::default();
    assert_eq!(unsafe { wf_detector_predict(det, c("from reception to mri").as_ptr(), &mut out) }, WfStatus::Ok);
    assert_eq!((out.origin_id, out.destination_id), (expected.origin.id, expected.destination.id));
    assert_eq!(out.origin_prob, expected.origin.prob);
    assert_eq!(unsafe { wf_detector_predict(det, c("  ?").as_ptr(), &mut out) }, WfStatus::EmptyQuery);

    let mut len = 0usize;
    let mut small = [0 as c_char; 2];
    let st = unsafe { wf_detector_department_name(det, 1, small.as_mut_ptr(), small.len(), &mut len) };
    assert_eq!((st, len), (WfStatus::BufferTooSmall, "Reception".len() + 1));
    let mut buf = vec![0 as c_char; len];
    assert_eq!(unsafe { wf_detector_department_name(det, 1, buf.as_mut_ptr(), buf.len(), ptr::null_mut()) }, WfStatus::Ok);
    assert_eq!(unsafe { CStr::from_ptr(buf.as_ptr()) }.to_str().unwrap(), "Reception");
    assert_eq!(unsafe { wf_detector_department_name(det, 9, buf.as_mut_ptr(), buf.len(), ptr::null_mut()) }, WfStatus::NotFound);

    unsafe { wf_detector_free(det) };
    unsafe { wf_detector_free(ptr::null_mut()) };

    let mut det = ptr::null_mut();
    let missing = c(dir.path().join("nope.ckpt").to_str().unwrap());
    assert_eq!(unsafe { wf_detector_load(missing.as_ptr(), &mut det) }, WfStatus::Io);
    assert!(det.is_null());
}

#[test]
fn routing_through_handles() {
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { wf_graph_load(ptr::null(), &mut g) }, WfStatus::Ok);
    let mut r = ptr::null_mut();
    assert_eq!(unsafe { wf_route(g, 3, 2, &mut r) }, WfStatus::Ok);
    let n = unsafe { wf_route_node_count(r) };
    assert!(n >= 2);
    let mut nodes = vec![0u32; n];
    assert_eq!(unsafe { wf_route_nodes(r, nodes.as_mut_ptr(), n - 1) }, WfStatus::BufferTooSmall);
    assert_eq!(unsafe { wf_route_nodes(r, nodes.as_mut_ptr(), n) }, WfStatus::Ok);
    assert_eq!((nodes[0], nodes[n - 1]), (3, 2));
    assert!(unsafe { wf_route_length(r) } > 0.0);
    let text = unsafe { CStr::from_ptr(wf_route_narration(r)) }.to_str().unwrap().to_string();
    assert!(text.starts_with("Start at Reception."), "{text}");
    unsafe { wf_route_free(r) };

    let mut r = ptr::null_mut();
    assert_eq!(unsafe { wf_route(g, 3, 999, &mut r) }, WfStatus::NotFound);
    assert!(last_error().contains("999"));
    unsafe { wf_graph_free(g) };
}
