//! C ABI over the `wayfind` crate.
//!
//! Every fallible call returns a [`WfStatus`]. On failure a human-readable
//! message is kept per thread and can be copied out with
//! [`wf_last_error_message`]. Handles are opaque and must be released with
//! their matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use wayfind::cnn::{count_output_params, CnnModel, OutputArchitecture};
use wayfind::levmatch::levenshtein;
use wayfind::navigate::FloorGraph;
use wayfind::server::{plan_route, RouteResponse};
use wayfind::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    Io = 4,
    Data = 5,
    NotFound = 6,
    NoRoute = 7,
    EmptyQuery = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

/// Trained detector loaded from a checkpoint.
pub struct WfDetector {
    model: CnnModel,
}

/// Floor graph used for routing.
pub struct WfGraph {
    graph: FloorGraph,
}

/// Computed route between two departments.
pub struct WfRoute {
    route: RouteResponse,
    nodes: Vec<u32>,
    narration: CString,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct WfPrediction {
    pub origin_id: usize,
    pub origin_prob: f64,
    pub destination_id: usize,
    pub destination_prob: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &Error) -> WfStatus {
    match e {
        Error::Io { .. } => WfStatus::Io,
        Error::InvalidArgument(_) => WfStatus::InvalidArgument,
        Error::EmptyQuery => WfStatus::EmptyQuery,
        Error::UnknownDepartment(_) | Error::UnknownNode(_) => WfStatus::NotFound,
        Error::NoRoute { .. } => WfStatus::NoRoute,
        Error::Data(_) | Error::Checkpoint(_) | Error::Json(_) => WfStatus::Data,
    }
}

/// Run `f`, recording any error or panic as the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), (WfStatus, String)>) -> WfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            WfStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            WfStatus::Panic
        }
    }
}

fn lift(e: Error) -> (WfStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (WfStatus, String) {
    (WfStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (WfStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (WfStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

/// Copy `s` plus a NUL terminator into `buf`. `out_len` (optional) receives
/// the byte count needed including the terminator.
unsafe fn copy_out(s: &[u8], buf: *mut c_char, cap: usize, out_len: *mut usize) -> Result<(), (WfStatus, String)> {
    if !out_len.is_null() {
        *out_len = s.len() + 1;
    }
    if buf.is_null() || cap < s.len() + 1 {
        return Err((WfStatus::BufferTooSmall, format!("need {} bytes", s.len() + 1)));
    }
    ptr::copy_nonoverlapping(s.as_ptr().cast::<c_char>(), buf, s.len());
    *buf.add(s.len()) = 0;
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn wf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copy the calling thread's last error message into `buf`. Returns the
/// number of bytes needed including the terminator, or 0 when there is no
/// error. Nothing is written if `cap` is too small.
///
/// # Safety
/// `buf` must be null or valid for `cap` bytes.
#[no_mangle]
pub unsafe extern "C" fn wf_last_error_message(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| match &*e.borrow() {
        None => 0,
        Some(msg) => {
            let bytes = msg.as_bytes_with_nul();
            if !buf.is_null() && cap >= bytes.len() {
                ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, bytes.len());
            }
            bytes.len()
        }
    })
}

/// Edit distance between two UTF-8 strings, counted in characters.
///
/// # Safety
/// `a` and `b` must be NUL-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wf_levenshtein(a: *const c_char, b: *const c_char, out: *mut usize) -> WfStatus {
    guard(|| {
        let (a, b) = (str_arg(a, "a")?, str_arg(b, "b")?);
        if out.is_null() {
            return Err(null("out"));
        }
        *out = levenshtein(a, b);
        Ok(())
    })
}

/// Output-layer parameter count for `p` departments and `f` feature maps per
/// filter width (three widths). `single_pair` selects one softmax over
/// ordered pairs instead of two per-role softmaxes.
#[no_mangle]
pub extern "C" fn wf_count_output_params(p: u64, f: u64, single_pair: bool) -> u64 {
    let arch = if single_pair {
        OutputArchitecture::SinglePair
    } else {
        OutputArchitecture::Dual
    };
    count_output_params(p, f, arch)
}

/// Load a CNN checkpoint.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wf_detector_load(path: *const c_char, out: *mut *mut WfDetector) -> WfStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let model = CnnModel::load(path).map_err(lift)?;
        *out = Box::into_raw(Box::new(WfDetector { model }));
        Ok(())
    })
}

/// # Safety
/// `detector` must come from [`wf_detector_load`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn wf_detector_free(detector: *mut WfDetector) {
    if !detector.is_null() {
        drop(Box::from_raw(detector));
    }
}

/// Number of departments the detector predicts over (0 for a null handle).
///
/// # Safety
/// `detector` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn wf_detector_num_departments(detector: *const WfDetector) -> usize {
    detector.as_ref().map_or(0, |d| d.model.departments.len())
}

/// Copy a department name into `buf`; see [`wf_last_error_message`] for the
/// buffer convention.
///
/// # Safety
/// `detector` must be a live handle; `buf` valid for `cap` bytes; `out_len`
/// null or writable.
#[no_mangle]
pub unsafe extern "C" fn wf_detector_department_name(
    detector: *const WfDetector,
    id: usize,
    buf: *mut c_char,
    cap: usize,
    out_len: *mut usize,
) -> WfStatus {
    guard(|| {
        let d = detector.as_ref().ok_or_else(|| null("detector"))?;
        let name = d.model.departments.get(id).ok_or_else(|| lift(Error::UnknownDepartment(id)))?;
        copy_out(name.as_bytes(), buf, cap, out_len)
    })
}

/// Predict origin and destination for a query.
///
/// # Safety
/// `detector` must be a live handle; `query` a NUL-terminated string; `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn wf_detector_predict(detector: *const WfDetector, query: *const c_char, out: *mut WfPrediction) -> WfStatus {
    guard(|| {
        let d = detector.as_ref().ok_or_else(|| null("detector"))?;
        let query = str_arg(query, "query")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let p = d.model.predict(query).map_err(lift)?;
        *out = WfPrediction {
            origin_id: p.origin.id,
            origin_prob: p.origin.prob,
            destination_id: p.destination.id,
            destination_prob: p.destination.prob,
        };
        Ok(())
    })
}

/// Load a floor graph from a JSON file, or the built-in demo map when `path`
/// is null.
///
/// # Safety
/// `path` must be null or a NUL-terminated string; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn wf_graph_load(path: *const c_char, out: *mut *mut WfGraph) -> WfStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let graph = if path.is_null() {
            FloorGraph::demo()
        } else {
            FloorGraph::load(str_arg(path, "path")?).map_err(lift)?
        };
        *out = Box::into_raw(Box::new(WfGraph { graph }));
        Ok(())
    })
}

/// # Safety
/// `graph` must come from [`wf_graph_load`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn wf_graph_free(graph: *mut WfGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

/// Shortest route between two department ids.
///
/// # Safety
/// `graph` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn wf_route(graph: *const WfGraph, origin_id: usize, dest_id: usize, out: *mut *mut WfRoute) -> WfStatus {
    guard(|| {
        let g = graph.as_ref().ok_or_else(|| null("graph"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let route = plan_route(&g.graph, origin_id, dest_id).map_err(lift)?;
        let nodes = route.path.iter().map(|p| p.id).collect();
        let narration = CString::new(route.narration.replace('\0', " ")).expect("NUL bytes removed");
        *out = Box::into_raw(Box::new(WfRoute { route, nodes, narration }));
        Ok(())
    })
}

/// # Safety
/// `route` must come from [`wf_route`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn wf_route_free(route: *mut WfRoute) {
    if !route.is_null() {
        drop(Box::from_raw(route));
    }
}

/// Total route length in metres (NaN for a null handle).
///
/// # Safety
/// `route` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn wf_route_length(route: *const WfRoute) -> f64 {
    route.as_ref().map_or(f64::NAN, |r| r.route.length)
}

/// Number of nodes on the route (0 for a null handle).
///
/// # Safety
/// `route` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn wf_route_node_count(route: *const WfRoute) -> usize {
    route.as_ref().map_or(0, |r| r.nodes.len())
}

/// Copy up to `cap` node ids into `buf`. Fails with `BUFFER_TOO_SMALL` if
/// `cap` is below [`wf_route_node_count`].
///
/// # Safety
/// `route` must be a live handle; `buf` valid for `cap` elements.
#[no_mangle]
pub unsafe extern "C" fn wf_route_nodes(route: *const WfRoute, buf: *mut u32, cap: usize) -> WfStatus {
    guard(|| {
        let r = route.as_ref().ok_or_else(|| null("route"))?;
        if buf.is_null() || cap < r.nodes.len() {
            return Err((WfStatus::BufferTooSmall, format!("need {} node slots", r.nodes.len())));
        }
        ptr::copy_nonoverlapping(r.nodes.as_ptr(), buf, r.nodes.len());
        Ok(())
    })
}

/// Turn-by-turn narration, valid until the route is freed.
///
/// # Safety
/// `route` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn wf_route_narration(route: *const WfRoute) -> *const c_char {
    route.as_ref().map_or(ptr::null(), |r| r.narration.as_ptr())
}
