//! C interface to `causalmix`.
//!
//! Networks and datasets are opaque heap handles released with their `_free`
//! function. Every fallible call returns a [`CmStatus`]; on failure the
//! message is available from [`cm_last_error`] on the same thread until the
//! next failing call. Strings returned to the caller must be released with
//! [`cm_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use causalmix::dataio::{parse_dataset, write_dataset, Dataset};
use causalmix::discovery::{HypothesisSet, ModelAverage, ParameterPrior};
use causalmix::harness::count_pair_types;
use causalmix::inference::Evidence;
use causalmix::model::{CausalNetwork, ConfounderRule, NetworkStructure};
use causalmix::netio::{parse_network, read_network_file};
use causalmix::sampler::{generate_mix, MixSpec};
use causalmix::scoring::{log_marginal_likelihood, tally_counts, DirichletPrior};
use causalmix::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    InvalidArgument = 4,
    Schema = 5,
    Io = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CmConfounderRule {
    ExclusivePaths = 0,
    SharedAncestor = 1,
}

/// Node-pair counts by causal relation and confounding.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CmPairCounts {
    pub related_confounded: usize,
    pub related_unconfounded: usize,
    pub unrelated_confounded: usize,
    pub unrelated_unconfounded: usize,
}

/// Opaque causal network handle.
pub struct CmNetwork(CausalNetwork);

/// Opaque dataset handle.
pub struct CmDataset(Dataset);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Fail(CmStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Syntax { .. }
            | Error::MissingRow { .. }
            | Error::DuplicateRow { .. }
            | Error::RowSum { .. }
            | Error::InvalidProbability { .. }
            | Error::DimensionMismatch { .. }
            | Error::Cycle(_)
            | Error::InvalidVariable { .. }
            | Error::InvalidStructure(_)
            | Error::Arity { .. } => CmStatus::Parse,
            Error::Schema(_) | Error::UnknownVariable(_) | Error::UnknownState { .. } => CmStatus::Schema,
            Error::Io(_) => CmStatus::Io,
            _ => CmStatus::InvalidArgument,
        };
        Fail(status, e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> CmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CmStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            CmStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(CmStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(CmStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref()
        .ok_or_else(|| Fail(CmStatus::NullPointer, format!("{what} is null")))
}

fn out_arg<T>(p: *mut T, what: &str) -> Result<(), Fail> {
    if p.is_null() {
        Err(Fail(CmStatus::NullPointer, format!("{what} is null")))
    } else {
        Ok(())
    }
}

fn pair_columns(d: &Dataset, x: &str, y: &str) -> Result<Dataset, Fail> {
    let (xi, yi) = (d.column(x)?, d.column(y)?);
    if xi == yi {
        return Err(Fail(CmStatus::InvalidArgument, "x and y must differ".into()));
    }
    Ok(d.project(&[xi, yi])?)
}

/// Message for the most recent failure on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `s` must be null or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cm_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses network text into a new handle stored in `*out`.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cm_network_parse(text: *const c_char, out: *mut *mut CmNetwork) -> CmStatus {
    guard(|| {
        out_arg(out, "out")?;
        let net = parse_network(str_arg(text, "text")?)?;
        *out = Box::into_raw(Box::new(CmNetwork(net)));
        Ok(())
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cm_network_read_file(path: *const c_char, out: *mut *mut CmNetwork) -> CmStatus {
    guard(|| {
        out_arg(out, "out")?;
        let net = read_network_file(str_arg(path, "path")?)?;
        *out = Box::into_raw(Box::new(CmNetwork(net)));
        Ok(())
    })
}

/// # Safety
/// `net` must be null or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn cm_network_free(net: *mut CmNetwork) {
    if !net.is_null() {
        drop(Box::from_raw(net));
    }
}

/// Number of variables, or 0 for a null handle.
///
/// # Safety
/// `net` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cm_network_num_variables(net: *const CmNetwork) -> usize {
    net.as_ref().map_or(0, |n| n.0.len())
}

/// # Safety
/// `net` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cm_network_classify_pairs(
    net: *const CmNetwork,
    rule: CmConfounderRule,
    out: *mut CmPairCounts,
) -> CmStatus {
    guard(|| {
        let net = ref_arg(net, "net")?;
        out_arg(out, "out")?;
        let rule = match rule {
            CmConfounderRule::ExclusivePaths => ConfounderRule::ExclusivePaths,
            CmConfounderRule::SharedAncestor => ConfounderRule::SharedAncestor,
        };
        let c = count_pair_types(net.0.structure(), rule)?;
        *out = CmPairCounts {
            related_confounded: c.related_confounded,
            related_unconfounded: c.related_unconfounded,
            unrelated_confounded: c.unrelated_confounded,
            unrelated_unconfounded: c.unrelated_unconfounded,
        };
        Ok(())
    })
}

/// Samples `m` experimental cases (half manipulating `x`, half `y`) and `n`
/// observational cases over the pair, stored as a new dataset in `*out`.
///
/// # Safety
/// `net` must be a live handle; `x` and `y` NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cm_generate_mix(
    net: *const CmNetwork,
    x: *const c_char,
    y: *const c_char,
    m: usize,
    n: usize,
    seed: u64,
    out: *mut *mut CmDataset,
) -> CmStatus {
    guard(|| {
        let net = ref_arg(net, "net")?;
        out_arg(out, "out")?;
        let s = net.0.structure();
        let (x, y) = (s.id(str_arg(x, "x")?)?, s.id(str_arg(y, "y")?)?);
        let d = generate_mix(&net.0, &MixSpec { x, y, m, n, seed })?;
        *out = Box::into_raw(Box::new(CmDataset(d)));
        Ok(())
    })
}

/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cm_dataset_parse(text: *const c_char, out: *mut *mut CmDataset) -> CmStatus {
    guard(|| {
        out_arg(out, "out")?;
        let d = parse_dataset(str_arg(text, "text")?)?;
        *out = Box::into_raw(Box::new(CmDataset(d)));
        Ok(())
    })
}

/// Serializes the dataset into a new string stored in `*out`.
///
/// # Safety
/// `data` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cm_dataset_write(data: *const CmDataset, out: *mut *mut c_char) -> CmStatus {
    guard(|| {
        let data = ref_arg(data, "data")?;
        out_arg(out, "out")?;
        let text = CString::new(write_dataset(&data.0)).map_err(|e| Fail(CmStatus::InvalidArgument, e.to_string()))?;
        *out = text.into_raw();
        Ok(())
    })
}

/// # Safety
/// `data` must be null or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn cm_dataset_free(data: *mut CmDataset) {
    if !data.is_null() {
        drop(Box::from_raw(data));
    }
}

/// Number of cases, or 0 for a null handle.
///
/// # Safety
/// `data` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cm_dataset_num_cases(data: *const CmDataset) -> usize {
    data.as_ref().map_or(0, |d| d.0.len())
}

/// Log marginal likelihood of `data` under `structure` (arcs such as
/// `"X->Y"`, comma separated, or `"none"`) with `a_ijk = ess / (q_i r_i)`.
///
/// # Safety
/// `data` must be a live handle; `structure` NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cm_score_log_marginal(
    data: *const CmDataset,
    structure: *const c_char,
    ess: f64,
    out: *mut f64,
) -> CmStatus {
    guard(|| {
        let data = ref_arg(data, "data")?;
        out_arg(out, "out")?;
        let s = NetworkStructure::parse_arcs(data.0.variables().to_vec(), str_arg(structure, "structure")?)?;
        let prior = DirichletPrior::bdeu(&s, ess)?;
        *out = log_marginal_likelihood(&tally_counts(&data.0, &s)?, &prior)?;
        Ok(())
    })
}

/// Posterior of `x -> y`, `y -> x` and no arc, written to `out[0..3]`.
///
/// # Safety
/// `data` must be a live handle; `x`, `y` NUL-terminated; `out` must point to
/// three writable doubles.
#[no_mangle]
pub unsafe extern "C" fn cm_pair_posterior(
    data: *const CmDataset,
    x: *const c_char,
    y: *const c_char,
    out: *mut f64,
) -> CmStatus {
    guard(|| {
        let data = ref_arg(data, "data")?;
        out_arg(out, "out")?;
        let d = pair_columns(&data.0, str_arg(x, "x")?, str_arg(y, "y")?)?;
        let hyp = HypothesisSet::pairwise(d.variables()[0].clone(), d.variables()[1].clone())?;
        let post = causalmix::structure_posterior(&d, &hyp, ParameterPrior::default())?;
        std::slice::from_raw_parts_mut(out, 3).copy_from_slice(&post.probabilities);
        Ok(())
    })
}

/// Model-averaged distribution of `y` given `x = state`, observed or
/// manipulated. Writes `r_y` values to `out` and stores `r_y` in `*written`.
///
/// # Safety
/// `data` must be a live handle; strings NUL-terminated; `out` must point to
/// `out_len` writable doubles; `written` must be writable.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn cm_predict(
    data: *const CmDataset,
    x: *const c_char,
    y: *const c_char,
    state: *const c_char,
    manipulate: bool,
    out: *mut f64,
    out_len: usize,
    written: *mut usize,
) -> CmStatus {
    guard(|| {
        let data = ref_arg(data, "data")?;
        out_arg(out, "out")?;
        out_arg(written, "written")?;
        let d = pair_columns(&data.0, str_arg(x, "x")?, str_arg(y, "y")?)?;
        let k = d.variables()[0].state_index_or_err(str_arg(state, "state")?)?;
        let hyp = HypothesisSet::pairwise(d.variables()[0].clone(), d.variables()[1].clone())?;
        let avg = ModelAverage::fit(&d, &hyp, ParameterPrior::default())?;
        let ev = if manipulate {
            Evidence::manipulated(0, k)
        } else {
            Evidence::observed(0, k)
        };
        let dist = avg.predict(1, ev)?;
        *written = dist.len();
        if dist.len() > out_len {
            return Err(Fail(
                CmStatus::BufferTooSmall,
                format!("need {} values, buffer holds {out_len}", dist.len()),
            ));
        }
        std::slice::from_raw_parts_mut(out, dist.len()).copy_from_slice(&dist);
        Ok(())
    })
}
