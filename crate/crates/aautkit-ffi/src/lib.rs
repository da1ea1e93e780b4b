//! C ABI over the element algebra: opaque handles, integer status codes,
//! JSON strings for structured data. See include/aautkit.h.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use aautkit::aaut::{AautError, AlmostAutomorphism, Classification};

pub const AAUT_OK: c_int = 0;
pub const AAUT_ERR_PARSE: c_int = 1;
pub const AAUT_ERR_DOMAIN: c_int = 2;
pub const AAUT_ERR_BUDGET: c_int = 3;
pub const AAUT_ERR_NULL: c_int = 4;
pub const AAUT_ERR_PANIC: c_int = 5;

/// opaque element handle
pub struct AautElement(AlmostAutomorphism);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', "?")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

/// Message for the most recent failure on this thread. Owned by the
/// library; valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn aaut_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

fn guarded<F: FnOnce() -> c_int>(f: F) -> c_int {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(code) => code,
        Err(_) => {
            set_error("internal panic");
            AAUT_ERR_PANIC
        }
    }
}

unsafe fn read_str<'a>(p: *const c_char) -> Result<&'a str, c_int> {
    if p.is_null() {
        set_error("null string argument");
        return Err(AAUT_ERR_NULL);
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error("argument is not valid UTF-8");
        AAUT_ERR_PARSE
    })
}

fn write_string(out: *mut *mut c_char, s: String) -> c_int {
    if out.is_null() {
        set_error("null output pointer");
        return AAUT_ERR_NULL;
    }
    match CString::new(s) {
        Ok(c) => {
            unsafe { *out = c.into_raw() };
            AAUT_OK
        }
        Err(_) => {
            set_error("output contains an interior NUL");
            AAUT_ERR_PARSE
        }
    }
}

unsafe fn element<'a>(h: *const AautElement) -> Result<&'a AlmostAutomorphism, c_int> {
    if h.is_null() {
        set_error("null element handle");
        return Err(AAUT_ERR_NULL);
    }
    Ok(&(*h).0)
}

fn export(g: AlmostAutomorphism, out: *mut *mut AautElement) -> c_int {
    if out.is_null() {
        set_error("null output pointer");
        return AAUT_ERR_NULL;
    }
    unsafe { *out = Box::into_raw(Box::new(AautElement(g))) };
    AAUT_OK
}

/// Parse an element from its canonical JSON form.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn aaut_element_parse(
    json: *const c_char,
    out: *mut *mut AautElement,
) -> c_int {
    guarded(|| {
        let text = match read_str(json) {
            Ok(t) => t,
            Err(c) => return c,
        };
        match serde_json::from_str::<AlmostAutomorphism>(text) {
            Ok(g) => export(g, out),
            Err(e) => {
                set_error(&e.to_string());
                AAUT_ERR_PARSE
            }
        }
    })
}

/// The identity element of the group over the d-regular tree with root
/// arity n.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn aaut_element_identity(
    d: u16,
    root_arity: u16,
    out: *mut *mut AautElement,
) -> c_int {
    guarded(|| {
        if d < 2 || root_arity < 1 {
            set_error("need d >= 2 and rootArity >= 1");
            return AAUT_ERR_DOMAIN;
        }
        export(AlmostAutomorphism::identity(d, root_arity), out)
    })
}

/// Serialize the canonical form back to JSON. The string must be released
/// with aaut_string_free.
///
/// # Safety
/// `g` must come from this library; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn aaut_element_to_json(
    g: *const AautElement,
    out: *mut *mut c_char,
) -> c_int {
    guarded(|| {
        let g = match element(g) {
            Ok(g) => g,
            Err(c) => return c,
        };
        match serde_json::to_string(g) {
            Ok(s) => write_string(out, s),
            Err(e) => {
                set_error(&e.to_string());
                AAUT_ERR_PARSE
            }
        }
    })
}

/// g ∘ f (apply f first).
///
/// # Safety
/// Handles must come from this library; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn aaut_element_compose(
    g: *const AautElement,
    f: *const AautElement,
    out: *mut *mut AautElement,
) -> c_int {
    guarded(|| {
        let (g, f) = match (element(g), element(f)) {
            (Ok(g), Ok(f)) => (g, f),
            (Err(c), _) | (_, Err(c)) => return c,
        };
        match g.compose(f) {
            Ok(h) => export(h, out),
            Err(e) => {
                set_error(&e.to_string());
                AAUT_ERR_DOMAIN
            }
        }
    })
}

/// # Safety
/// `g` must come from this library; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn aaut_element_invert(
    g: *const AautElement,
    out: *mut *mut AautElement,
) -> c_int {
    guarded(|| match element(g) {
        Ok(g) => export(g.invert(), out),
        Err(c) => c,
    })
}

/// Writes 1 to `out` if the two elements are equal in the group.
///
/// # Safety
/// Handles must come from this library; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn aaut_element_equals(
    a: *const AautElement,
    b: *const AautElement,
    out: *mut c_int,
) -> c_int {
    guarded(|| {
        let (a, b) = match (element(a), element(b)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(c), _) | (_, Err(c)) => return c,
        };
        if out.is_null() {
            set_error("null output pointer");
            return AAUT_ERR_NULL;
        }
        *out = a.equals(b) as c_int;
        AAUT_OK
    })
}

/// Parity (+1/-1) of the element; AAUT_ERR_DOMAIN when undefined.
///
/// # Safety
/// `g` must come from this library; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn aaut_element_parity(g: *const AautElement, out: *mut c_int) -> c_int {
    guarded(|| {
        let g = match element(g) {
            Ok(g) => g,
            Err(c) => return c,
        };
        if out.is_null() {
            set_error("null output pointer");
            return AAUT_ERR_NULL;
        }
        match g.parity() {
            Ok(p) => {
                *out = p as c_int;
                AAUT_OK
            }
            Err(e) => {
                set_error(&e.to_string());
                AAUT_ERR_DOMAIN
            }
        }
    })
}

/// Elliptic/translation dichotomy; writes a JSON report. Returns
/// AAUT_ERR_BUDGET when the search budget is exhausted.
///
/// # Safety
/// `g` must come from this library; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn aaut_element_classify(
    g: *const AautElement,
    budget: usize,
    out: *mut *mut c_char,
) -> c_int {
    guarded(|| {
        let g = match element(g) {
            Ok(g) => g,
            Err(c) => return c,
        };
        match g.classify(budget) {
            Ok(Classification::Elliptic { witness }) => {
                let leaves: Vec<String> =
                    witness.leaves_ordered().iter().map(|a| a.to_string()).collect();
                write_string(
                    out,
                    serde_json::json!({"type": "elliptic", "witnessLeaves": leaves}).to_string(),
                )
            }
            Ok(Classification::Translation { cone, exponent, image }) => write_string(
                out,
                serde_json::json!({
                    "type": "translation",
                    "cone": cone.to_string(),
                    "exponent": exponent,
                    "image": image.to_string(),
                })
                .to_string(),
            ),
            Err(AautError::BudgetExceeded(_)) => {
                set_error("classification budget exhausted");
                AAUT_ERR_BUDGET
            }
            Err(e) => {
                set_error(&e.to_string());
                AAUT_ERR_DOMAIN
            }
        }
    })
}

/// # Safety
/// `g` must be a handle produced by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn aaut_element_free(g: *mut AautElement) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// # Safety
/// `s` must be a string produced by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn aaut_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CString;
    use std::ptr;

    const B: &str = r#"{"d":2,"rootArity":2,"map":[{"from":"0","to":"00"},{"from":"10","to":"01"},{"from":"11","to":"1"}]}"#;

    unsafe fn parse(s: &str) -> *mut AautElement {
        let c = CString::new(s).unwrap();
        let mut h: *mut AautElement = ptr::null_mut();
        assert_eq!(aaut_element_parse(c.as_ptr(), &mut h), AAUT_OK);
        h
    }

    #[test]
    fn round_trip_and_algebra() {
        unsafe {
            let b = parse(B);
            let mut inv: *mut AautElement = ptr::null_mut();
            assert_eq!(aaut_element_invert(b, &mut inv), AAUT_OK);
            let mut prod: *mut AautElement = ptr::null_mut();
            assert_eq!(aaut_element_compose(b, inv, &mut prod), AAUT_OK);
            let mut idh: *mut AautElement = ptr::null_mut();
            assert_eq!(aaut_element_identity(2, 2, &mut idh), AAUT_OK);
            let mut eq = 0;
            assert_eq!(aaut_element_equals(prod, idh, &mut eq), AAUT_OK);
            assert_eq!(eq, 1);
            // canonical JSON round trip
            let mut s: *mut c_char = ptr::null_mut();
            assert_eq!(aaut_element_to_json(b, &mut s), AAUT_OK);
            let text = CStr::from_ptr(s).to_str().unwrap().to_owned();
            let b2 = parse(&text);
            assert_eq!(aaut_element_equals(b, b2, &mut eq), AAUT_OK);
            assert_eq!(eq, 1);
            for h in [b, inv, prod, idh, b2] {
                aaut_element_free(h);
            }
            aaut_string_free(s);
        }
    }

    #[test]
    fn classify_and_errors() {
        unsafe {
            let b = parse(B);
            let mut s: *mut c_char = ptr::null_mut();
            assert_eq!(aaut_element_classify(b, 64, &mut s), AAUT_OK);
            let v: serde_json::Value =
                serde_json::from_str(CStr::from_ptr(s).to_str().unwrap()).unwrap();
            assert_eq!(v["type"], "translation");
            aaut_string_free(s);
            // parity of a d=2 element is undefined
            let mut p = 0;
            assert_eq!(aaut_element_parity(b, &mut p), AAUT_ERR_DOMAIN);
            assert!(!aaut_last_error().is_null());
            aaut_element_free(b);
            // parse failure surfaces a message
            let bad = CString::new("{").unwrap();
            let mut h: *mut AautElement = ptr::null_mut();
            assert_eq!(aaut_element_parse(bad.as_ptr(), &mut h), AAUT_ERR_PARSE);
            assert_eq!(
                aaut_element_parse(ptr::null(), &mut h),
                AAUT_ERR_NULL
            );
        }
    }
}
