//! C ABI over the chart2mermaid core.
//!
//! Every function returns a [`C2mStatus`]. On failure a message is kept per
//! thread and can be read with [`c2m_last_error`]. Strings handed out by the
//! library must be released with [`c2m_string_free`], flowcharts with
//! [`c2m_flowchart_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{self, AssertUnwindSafe};
use std::ptr;

use chart2mermaid::imaging::{canny, CannyParams, PixelLayout, RasterImage};
use chart2mermaid::mermaid::{self, FlowchartAst};
use chart2mermaid::metrics::{self, MatchCounts};
use chart2mermaid::stats::{self, PairedSample};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum C2mStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    InvalidArgument = 4,
    ImagingError = 5,
    StatsError = 6,
    Panic = 7,
}

/// Parsed flowchart. Opaque to C.
pub struct C2mFlowchart {
    ast: FlowchartAst,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct C2mMatchCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct C2mLevelCounts {
    pub node: C2mMatchCounts,
    pub edge: C2mMatchCounts,
    pub path: C2mMatchCounts,
}

impl From<MatchCounts> for C2mMatchCounts {
    fn from(c: MatchCounts) -> Self {
        Self {
            tp: c.tp,
            fp: c.fp,
            fn_: c.fn_,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(C2mStatus, String);

type FfiResult = Result<(), Failure>;

fn fail<T>(status: C2mStatus, msg: impl Into<String>) -> Result<T, Failure> {
    Err(Failure(status, msg.into()))
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> FfiResult) -> C2mStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match panic::catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => C2mStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            C2mStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return fail(C2mStatus::NullPointer, format!("{what} is null"));
    }
    CStr::from_ptr(p)
        .to_str()
        .or_else(|_| fail(C2mStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn handle<'a>(h: *const C2mFlowchart) -> Result<&'a C2mFlowchart, Failure> {
    h.as_ref().map_or_else(|| fail(C2mStatus::NullPointer, "flowchart is null"), Ok)
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().map_or_else(|| fail(C2mStatus::NullPointer, format!("{what} is null")), Ok)
}

unsafe fn scores<'a>(p: *const f64, n: usize, what: &str) -> Result<&'a [f64], Failure> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return fail(C2mStatus::NullPointer, format!("{what} is null"));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

fn to_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).unwrap_or_default().into_raw()
}

/// Message for the last failed call on this thread, or NULL. Valid until the
/// next library call on the same thread.
#[no_mangle]
pub extern "C" fn c2m_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `s` must be NULL or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn c2m_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Sanitizes and parses Mermaid flowchart code.
///
/// # Safety
/// `code` must be a NUL-terminated string; `out_flowchart` must be writable.
#[no_mangle]
pub unsafe extern "C" fn c2m_flowchart_parse(code: *const c_char, out_flowchart: *mut *mut C2mFlowchart) -> C2mStatus {
    guard(|| {
        let slot = out(out_flowchart, "out_flowchart")?;
        *slot = ptr::null_mut();
        let code = text(code, "code")?;
        match mermaid::parse(&mermaid::sanitize(code)) {
            Ok(ast) => {
                *slot = Box::into_raw(Box::new(C2mFlowchart { ast }));
                Ok(())
            }
            Err(d) => fail(C2mStatus::ParseError, d.to_string()),
        }
    })
}

/// # Safety
/// `h` must be NULL or a handle from [`c2m_flowchart_parse`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn c2m_flowchart_free(h: *mut C2mFlowchart) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// # Safety
/// `h` must be a live handle; `out_count` must be writable.
#[no_mangle]
pub unsafe extern "C" fn c2m_flowchart_node_count(h: *const C2mFlowchart, out_count: *mut usize) -> C2mStatus {
    guard(|| {
        *out(out_count, "out_count")? = handle(h)?.ast.nodes.len();
        Ok(())
    })
}

/// # Safety
/// `h` must be a live handle; `out_count` must be writable.
#[no_mangle]
pub unsafe extern "C" fn c2m_flowchart_edge_count(h: *const C2mFlowchart, out_count: *mut usize) -> C2mStatus {
    guard(|| {
        *out(out_count, "out_count")? = handle(h)?.ast.edges.len();
        Ok(())
    })
}

/// Entry-to-terminal paths, each node visited at most twice.
///
/// # Safety
/// `h` must be a live handle; `out_count` must be writable.
#[no_mangle]
pub unsafe extern "C" fn c2m_flowchart_path_count(h: *const C2mFlowchart, out_count: *mut usize) -> C2mStatus {
    guard(|| {
        let slot = out(out_count, "out_count")?;
        match metrics::path_keys(&handle(h)?.ast) {
            Ok(p) => {
                *slot = p.len();
                Ok(())
            }
            Err(e) => fail(C2mStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// Canonical Mermaid text for the flowchart. Free with [`c2m_string_free`].
///
/// # Safety
/// `h` must be a live handle; `out_code` must be writable.
#[no_mangle]
pub unsafe extern "C" fn c2m_flowchart_emit(h: *const C2mFlowchart, out_code: *mut *mut c_char) -> C2mStatus {
    guard(|| {
        let slot = out(out_code, "out_code")?;
        *slot = ptr::null_mut();
        *slot = to_c_string(mermaid::emit(&handle(h)?.ast));
        Ok(())
    })
}

/// Normalizes model output before parsing. Free with [`c2m_string_free`].
///
/// # Safety
/// `code` must be a NUL-terminated string; `out_code` must be writable.
#[no_mangle]
pub unsafe extern "C" fn c2m_sanitize(code: *const c_char, out_code: *mut *mut c_char) -> C2mStatus {
    guard(|| {
        let slot = out(out_code, "out_code")?;
        *slot = ptr::null_mut();
        *slot = to_c_string(mermaid::sanitize(text(code, "code")?));
        Ok(())
    })
}

/// Sets `*out_valid` and, when `out_diagnostics` is not NULL, stores the
/// parser messages ("ok" for valid code). Invalid code is not an error.
///
/// # Safety
/// `code` must be a NUL-terminated string; `out_valid` must be writable.
#[no_mangle]
pub unsafe extern "C" fn c2m_validate(
    code: *const c_char,
    out_valid: *mut bool,
    out_diagnostics: *mut *mut c_char,
) -> C2mStatus {
    guard(|| {
        let valid = out(out_valid, "out_valid")?;
        let d = mermaid::validate(text(code, "code")?);
        *valid = d.ok;
        if let Some(slot) = out_diagnostics.as_mut() {
            *slot = to_c_string(d.to_string());
        }
        Ok(())
    })
}

/// Node, edge and path match counts of `pred` against `truth`. A NULL
/// `pred` stands for a run that produced no usable flowchart.
///
/// # Safety
/// `truth` must be a live handle, `pred` NULL or a live handle, `out_counts`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn c2m_evaluate(
    pred: *const C2mFlowchart,
    truth: *const C2mFlowchart,
    out_counts: *mut C2mLevelCounts,
) -> C2mStatus {
    guard(|| {
        let slot = out(out_counts, "out_counts")?;
        let truth = handle(truth)?;
        let pred = pred.as_ref().map(|p| &p.ast);
        match metrics::evaluate_prediction(pred, &truth.ast) {
            Ok(c) => {
                *slot = C2mLevelCounts {
                    node: c.node.into(),
                    edge: c.edge.into(),
                    path: c.path.into(),
                };
                Ok(())
            }
            Err(e) => fail(C2mStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// Canny edge map of an 8-bit image with 1, 3 or 4 interleaved channels
/// and no row padding. Writes `width * height` bytes (0 or 255) to
/// `out_edges`.
///
/// # Safety
/// `pixels` must hold `width * height * channels` bytes and `out_edges`
/// `width * height` bytes.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn c2m_canny(
    pixels: *const u8,
    width: u32,
    height: u32,
    channels: u32,
    low: f32,
    high: f32,
    aperture: u32,
    out_edges: *mut u8,
) -> C2mStatus {
    guard(|| {
        if pixels.is_null() || out_edges.is_null() {
            return fail(C2mStatus::NullPointer, "pixels or out_edges is null");
        }
        let Some(layout) = PixelLayout::from_channels(channels as usize) else {
            return fail(C2mStatus::InvalidArgument, format!("unsupported channel count {channels}"));
        };
        let params = CannyParams::new(low, high, aperture).or_else(|e| fail(C2mStatus::InvalidArgument, e.to_string()))?;
        let n = width as usize * height as usize;
        let data = std::slice::from_raw_parts(pixels, n * channels as usize).to_vec();
        let img = RasterImage::new(width, height, layout, data).or_else(|e| fail(C2mStatus::ImagingError, e.to_string()))?;
        let edges = canny(&img, &params).or_else(|e| fail(C2mStatus::ImagingError, e.to_string()))?;
        std::slice::from_raw_parts_mut(out_edges, n).copy_from_slice(edges.data());
        Ok(())
    })
}

fn paired(a: &[f64], b: &[f64]) -> Result<PairedSample, Failure> {
    PairedSample::from_scores(a.to_vec(), b.to_vec()).or_else(|e| fail(C2mStatus::StatsError, e.to_string()))
}

/// One-sided Wilcoxon signed-rank test of `a > b` over `n` paired scores in
/// [0, 1]. `out_effective_n` may be NULL.
///
/// # Safety
/// `a` and `b` must hold `n` values; `out_p` must be writable.
#[no_mangle]
pub unsafe extern "C" fn c2m_wilcoxon(
    a: *const f64,
    b: *const f64,
    n: usize,
    out_p: *mut f64,
    out_effective_n: *mut usize,
) -> C2mStatus {
    guard(|| {
        let p = out(out_p, "out_p")?;
        let s = paired(scores(a, n, "a")?, scores(b, n, "b")?)?;
        let r = stats::wilcoxon_one_sided(&s).or_else(|e| fail(C2mStatus::StatsError, e.to_string()))?;
        *p = r.p_value;
        if let Some(k) = out_effective_n.as_mut() {
            *k = r.effective_n;
        }
        Ok(())
    })
}

/// Cliff's delta of `a` over `b` across all cross pairs.
///
/// # Safety
/// `a` and `b` must hold `n` values; `out_delta` must be writable.
#[no_mangle]
pub unsafe extern "C" fn c2m_cliffs_delta(a: *const f64, b: *const f64, n: usize, out_delta: *mut f64) -> C2mStatus {
    guard(|| {
        let d = out(out_delta, "out_delta")?;
        let s = paired(scores(a, n, "a")?, scores(b, n, "b")?)?;
        *d = stats::cliffs_delta(&s);
        Ok(())
    })
}
