//! C ABI over `steklov`.
//!
//! Every function returns a status code and writes results through out
//! pointers. Handles are opaque and owned by the caller once returned;
//! release them with the matching `_free`. On failure the message is kept
//! per thread until the next call and read with `stk_last_error`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use steklov::bounds::{certified_upper_bound, default_resolution, theoretical_rhs, BoundConstants};
use steklov::geometry::{distortion, regular_polygon, DistortionSearch};
use steklov::mesh::{triangulate, uniform_refine};
use steklov::spectrum::{steklov_sigma2_p, steklov_spectrum_p2, DescentOptions};
use steklov::{Error, Point, Polygon, TriangleMesh};

pub const STK_OK: i32 = 0;
pub const STK_ERR_NULL: i32 = 1;
pub const STK_ERR_VALIDATION: i32 = 2;
pub const STK_ERR_ARGUMENT: i32 = 3;
pub const STK_ERR_RESOURCE: i32 = 4;
pub const STK_ERR_PRECONDITION: i32 = 5;
pub const STK_ERR_NUMERICAL: i32 = 6;
pub const STK_ERR_IO: i32 = 7;
pub const STK_ERR_PANIC: i32 = 8;

/// Simple counter-clockwise polygon.
pub struct StkPolygon(Polygon);

/// Conforming triangle mesh of a polygon.
pub struct StkMesh(TriangleMesh);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn code_of(e: &Error) -> i32 {
    match e {
        Error::Validation(_) | Error::NonSimple { .. } => STK_ERR_VALIDATION,
        Error::Argument(_) | Error::Parse(_) | Error::Json(_) => STK_ERR_ARGUMENT,
        Error::Resource { .. } => STK_ERR_RESOURCE,
        Error::Precondition(_) => STK_ERR_PRECONDITION,
        Error::VanishingTrace(_) | Error::Numerical(_) => STK_ERR_NUMERICAL,
        Error::Io(_) => STK_ERR_IO,
    }
}

enum Fail {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

/// Clears the last error, runs `f`, and converts failures and panics to codes.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> i32 {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => STK_OK,
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            STK_ERR_NULL
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            code_of(&e)
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            STK_ERR_PANIC
        }
    }
}

unsafe fn as_ref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn write<T>(out: *mut T, value: T, what: &'static str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::Null(what));
    }
    out.write(value);
    Ok(())
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`) and returns the full message length without the NUL;
/// 0 when there is no error.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn stk_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| match &*e.borrow() {
        None => {
            if !buf.is_null() && len > 0 {
                *buf = 0;
            }
            0
        }
        Some(msg) => {
            let bytes = msg.as_bytes();
            if !buf.is_null() && len > 0 {
                let n = bytes.len().min(len - 1);
                std::ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
                *buf.add(n) = 0;
            }
            bytes.len()
        }
    })
}

/// Builds a polygon from `n` interleaved `x, y` pairs in either orientation.
///
/// # Safety
/// `xy` must be valid for `2 n` reads and `out` for one write.
#[no_mangle]
pub unsafe extern "C" fn stk_polygon_new(xy: *const f64, n: usize, out: *mut *mut StkPolygon) -> i32 {
    guard(|| {
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        if xy.is_null() {
            return Err(Fail::Null("xy"));
        }
        let coords = std::slice::from_raw_parts(xy, 2 * n);
        let pts = coords.chunks_exact(2).map(|c| Point::new(c[0], c[1])).collect();
        let poly = Polygon::from_any_orientation(pts)?;
        out.write(Box::into_raw(Box::new(StkPolygon(poly))));
        Ok(())
    })
}

/// Regular polygon with `sides` vertices on the circle of the given radius.
///
/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn stk_polygon_regular(sides: usize, circumradius: f64, out: *mut *mut StkPolygon) -> i32 {
    guard(|| {
        let poly = regular_polygon(sides, circumradius)?;
        write(out, Box::into_raw(Box::new(StkPolygon(poly))), "out")
    })
}

/// # Safety
/// `poly` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn stk_polygon_free(poly: *mut StkPolygon) {
    if !poly.is_null() {
        drop(Box::from_raw(poly));
    }
}

/// Perimeter, area and isoperimetric ratio `|∂Ω| / |Ω|^{1/2}`.
///
/// # Safety
/// `poly` must be a live handle; each out pointer must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn stk_polygon_metrics(
    poly: *const StkPolygon,
    perimeter: *mut f64,
    area: *mut f64,
    iso_ratio: *mut f64,
) -> i32 {
    guard(|| {
        let m = as_ref(poly, "poly")?.0.metrics();
        write(perimeter, m.perimeter, "perimeter")?;
        write(area, m.area, "area")?;
        write(iso_ratio, m.iso_ratio, "iso_ratio")
    })
}

/// Sampled boundary distortion `sup |∂Ω ∩ B(x, r)| / r`, a lower estimate.
///
/// # Safety
/// `poly` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn stk_polygon_distortion(poly: *const StkPolygon, out: *mut f64) -> i32 {
    guard(|| {
        let d = distortion(&as_ref(poly, "poly")?.0, DistortionSearch::default())?;
        write(out, d.value, "out")
    })
}

/// Triangulates with edges no longer than `h_max`, then refines uniformly.
///
/// # Safety
/// `poly` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn stk_mesh_build(
    poly: *const StkPolygon,
    h_max: f64,
    refinements: usize,
    out: *mut *mut StkMesh,
) -> i32 {
    guard(|| {
        let poly = as_ref(poly, "poly")?;
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        let mut mesh = triangulate(&poly.0, h_max)?;
        for _ in 0..refinements {
            mesh = uniform_refine(&mesh)?;
        }
        out.write(Box::into_raw(Box::new(StkMesh(mesh))));
        Ok(())
    })
}

/// # Safety
/// `mesh` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn stk_mesh_free(mesh: *mut StkMesh) {
    if !mesh.is_null() {
        drop(Box::from_raw(mesh));
    }
}

/// # Safety
/// `mesh` must be a live handle; out pointers valid for one write.
#[no_mangle]
pub unsafe extern "C" fn stk_mesh_size(mesh: *const StkMesh, nodes: *mut usize, triangles: *mut usize) -> i32 {
    guard(|| {
        let m = &as_ref(mesh, "mesh")?.0;
        write(nodes, m.node_count(), "nodes")?;
        write(triangles, m.triangle_count(), "triangles")
    })
}

/// Writes the discrete `σ_{2,1} .. σ_{2,kmax}` (ascending, first is 0) into `values`.
///
/// # Safety
/// `mesh` must be a live handle and `values` valid for `kmax` writes.
#[no_mangle]
pub unsafe extern "C" fn stk_spectrum_p2(mesh: *const StkMesh, kmax: usize, values: *mut f64) -> i32 {
    guard(|| {
        let m = &as_ref(mesh, "mesh")?.0;
        if values.is_null() {
            return Err(Fail::Null("values"));
        }
        let est = steklov_spectrum_p2(m, kmax)?;
        for (i, e) in est.iter().enumerate().take(kmax) {
            values.add(i).write(e.value);
        }
        Ok(())
    })
}

/// `σ_{p,2}` by projected descent from `starts` seeded starts.
/// `stationary` receives 1 when the projected gradient met the tolerance.
///
/// # Safety
/// `mesh` must be a live handle; out pointers valid for one write.
#[no_mangle]
pub unsafe extern "C" fn stk_sigma2_p(
    mesh: *const StkMesh,
    p: f64,
    starts: usize,
    seed: u64,
    value: *mut f64,
    residual: *mut f64,
    stationary: *mut i32,
) -> i32 {
    guard(|| {
        let m = &as_ref(mesh, "mesh")?.0;
        let opts = DescentOptions {
            starts,
            seed,
            ..DescentOptions::default()
        };
        let e = steklov_sigma2_p(m, p, &opts)?;
        write(value, e.value, "value")?;
        write(residual, e.residual, "residual")?;
        write(stationary, i32::from(e.stationary), "stationary")
    })
}

/// Certified upper bound for `σ_{p,k}` from packed test functions.
/// A non-positive `resolution` selects the default sub-segment length.
///
/// # Safety
/// `poly` must be a live handle; out pointers valid for one write.
#[no_mangle]
pub unsafe extern "C" fn stk_certified_bound(
    poly: *const StkPolygon,
    p: f64,
    k: usize,
    resolution: f64,
    value: *mut f64,
    achieved_c: *mut f64,
) -> i32 {
    guard(|| {
        let poly = &as_ref(poly, "poly")?.0;
        let res = if resolution > 0.0 { resolution } else { default_resolution(poly, k) };
        let b = certified_upper_bound(poly, p, k, res)?;
        write(value, b.estimate.value, "value")?;
        write(achieved_c, b.achieved_c, "achieved_c")
    })
}

/// Closed-form right-hand side for packing constant `c_n`.
/// `supercritical` receives 1 for the `p > 2` branch.
///
/// # Safety
/// `poly` must be a live handle; out pointers valid for one write.
#[no_mangle]
pub unsafe extern "C" fn stk_theoretical_bound(
    poly: *const StkPolygon,
    p: f64,
    k: usize,
    c_n: f64,
    value: *mut f64,
    supercritical: *mut i32,
) -> i32 {
    guard(|| {
        let poly = &as_ref(poly, "poly")?.0;
        let b = theoretical_rhs(poly, p, k, &BoundConstants::new(c_n)?)?;
        write(value, b.value, "value")?;
        write(supercritical, i32::from(b.distortion.is_some()), "supercritical")
    })
}
