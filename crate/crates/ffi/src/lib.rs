//! C interface. Handles are opaque and owned by the caller, who releases
//! them with the matching `_free` function. Every fallible call returns an
//! [`RmsStatus`]; the message behind the last failure on the calling
//! thread is available from [`rms_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use rms_core::cover::{build_cover, CoverComplex};
use rms_core::invariants::euler_char;
use rms_core::real::sigma_normal;
use rms_core::strata::{build_poset, StratifiedComplex};
use rms_core::sw::w1_cycle;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RmsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Inconsistent = 3,
    Panic = 4,
}

/// A stratified real moduli space.
pub struct RmsComplex {
    inner: StratifiedComplex,
}

/// Its orientation double cover.
pub struct RmsCover {
    inner: CoverComplex,
    chi: i64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl ToString) {
    let s = CString::new(msg.to_string().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = s);
}

fn guard(f: impl FnOnce() -> Result<(), (RmsStatus, String)>) -> RmsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RmsStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside rms");
            RmsStatus::Panic
        }
    }
}

fn null() -> (RmsStatus, String) {
    (RmsStatus::NullPointer, "null pointer argument".into())
}

/// Message for the last failing call on this thread; valid until the
/// next failing call. Never null.
#[no_mangle]
pub extern "C" fn rms_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Builds the stratification for `k` conjugate pairs and `l` real labels.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn rms_complex_new(k: u32, l: u32, out: *mut *mut RmsComplex) -> RmsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null());
        }
        let sigma = sigma_normal(k, l).map_err(|e| (RmsStatus::InvalidArgument, e.to_string()))?;
        if sigma.n() > 9 {
            return Err((RmsStatus::InvalidArgument, format!("{} labels is beyond the supported range", sigma.n())));
        }
        let boxed = Box::new(RmsComplex { inner: build_poset(&sigma) });
        *out = Box::into_raw(boxed);
        Ok(())
    })
}

/// # Safety
/// `c` must be null or a handle from `rms_complex_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rms_complex_free(c: *mut RmsComplex) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// Number of strata of dimension `dim`; pass `-1` for all strata.
///
/// # Safety
/// `c` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rms_complex_strata_count(c: *const RmsComplex, dim: i32, out: *mut usize) -> RmsStatus {
    guard(|| {
        let (c, out) = (c.as_ref().ok_or_else(null)?, out.as_mut().ok_or_else(null)?);
        *out = if dim < 0 {
            c.inner.strata.len()
        } else {
            c.inner.count_by_dim().get(dim as usize).copied().unwrap_or(0)
        };
        Ok(())
    })
}

/// # Safety
/// `c` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rms_complex_euler_char(c: *const RmsComplex, out: *mut i64) -> RmsStatus {
    guard(|| {
        let (c, out) = (c.as_ref().ok_or_else(null)?, out.as_mut().ok_or_else(null)?);
        *out = euler_char(&c.inner).map_err(|e| (RmsStatus::Inconsistent, e.to_string()))?;
        Ok(())
    })
}

/// Number of walls on the first Stiefel-Whitney cycle.
///
/// # Safety
/// `c` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rms_complex_w1_walls(c: *const RmsComplex, out: *mut usize) -> RmsStatus {
    guard(|| {
        let (c, out) = (c.as_ref().ok_or_else(null)?, out.as_mut().ok_or_else(null)?);
        *out = w1_cycle(&c.inner).strata.len();
        Ok(())
    })
}

/// The poset as a JSON string, released with `rms_string_free`.
///
/// # Safety
/// `c` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rms_complex_to_json(c: *const RmsComplex, out: *mut *mut c_char) -> RmsStatus {
    guard(|| {
        let (c, out) = (c.as_ref().ok_or_else(null)?, out.as_mut().ok_or_else(null)?);
        let s = CString::new(c.inner.to_json().to_string()).map_err(|e| (RmsStatus::Inconsistent, e.to_string()))?;
        *out = s.into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a string returned by this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rms_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Assembles the orientation double cover.
///
/// # Safety
/// `c` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rms_cover_new(c: *const RmsComplex, out: *mut *mut RmsCover) -> RmsStatus {
    guard(|| {
        let (c, out) = (c.as_ref().ok_or_else(null)?, out.as_mut().ok_or_else(null)?);
        let inner = build_cover(&c.inner).map_err(|e| (RmsStatus::Inconsistent, e.to_string()))?;
        let chi = inner.euler_char(&c.inner).map_err(|e| (RmsStatus::Inconsistent, e.to_string()))?;
        *out = Box::into_raw(Box::new(RmsCover { inner, chi }));
        Ok(())
    })
}

/// # Safety
/// `c` must be null or a handle from `rms_cover_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rms_cover_free(c: *mut RmsCover) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// # Safety
/// `c` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rms_cover_components(c: *const RmsCover, out: *mut usize) -> RmsStatus {
    guard(|| {
        let (c, out) = (c.as_ref().ok_or_else(null)?, out.as_mut().ok_or_else(null)?);
        *out = c.inner.connected_components();
        Ok(())
    })
}

/// # Safety
/// `c` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rms_cover_euler_char(c: *const RmsCover, out: *mut i64) -> RmsStatus {
    guard(|| {
        let (c, out) = (c.as_ref().ok_or_else(null)?, out.as_mut().ok_or_else(null)?);
        *out = c.chi;
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CStr;
    use std::ptr;

    #[test]
    fn round_trip() {
        unsafe {
            let mut c = ptr::null_mut();
            assert_eq!(rms_complex_new(0, 5, &mut c), RmsStatus::Ok);
            let mut n = 0usize;
            assert_eq!(rms_complex_strata_count(c, 2, &mut n), RmsStatus::Ok);
            assert_eq!(n, 12);
            let mut chi = 0i64;
            assert_eq!(rms_complex_euler_char(c, &mut chi), RmsStatus::Ok);
            assert_eq!(chi, -3);
            assert_eq!(rms_complex_w1_walls(c, &mut n), RmsStatus::Ok);
            assert_eq!(n, 9);
            let mut cov = ptr::null_mut();
            assert_eq!(rms_cover_new(c, &mut cov), RmsStatus::Ok);
            assert_eq!(rms_cover_components(cov, &mut n), RmsStatus::Ok);
            assert_eq!(n, 1);
            assert_eq!(rms_cover_euler_char(cov, &mut chi), RmsStatus::Ok);
            assert_eq!(chi, -6);
            let mut s = ptr::null_mut();
            assert_eq!(rms_complex_to_json(c, &mut s), RmsStatus::Ok);
            assert!(CStr::from_ptr(s).to_str().unwrap().starts_with('{'));
            rms_string_free(s);
            rms_cover_free(cov);
            rms_complex_free(c);
        }
    }

    #[test]
    fn errors() {
        unsafe {
            let mut c = ptr::null_mut();
            assert_eq!(rms_complex_new(0, 2, &mut c), RmsStatus::InvalidArgument);
            assert!(c.is_null());
            assert!(!CStr::from_ptr(rms_last_error()).to_bytes().is_empty());
            assert_eq!(rms_complex_new(0, 4, ptr::null_mut()), RmsStatus::NullPointer);
            let mut n = 0usize;
            assert_eq!(rms_complex_strata_count(ptr::null(), -1, &mut n), RmsStatus::NullPointer);
            rms_complex_free(ptr::null_mut());
        }
    }
}
