//! C interface to the `subadditive` solvers.
//!
//! Point sets and solutions are opaque heap handles owned by the caller and
//! released with their `_free` function. Every fallible call returns an
//! [`SaStatus`]; on failure [`sa_last_error_message`] describes the error.
//! Panics never cross the boundary: they surface as `SA_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use subadditive::boundary::boundary_diagnostics;
use subadditive::geometry::{Cube, Point, PointSet};
use subadditive::solvers::{Functional, Instance, Mode, Solution, Variant};
use subadditive::Error;

/// Edge endpoint standing for the cube boundary in dual solutions.
pub const SA_BOUNDARY: usize = usize::MAX;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// Input is larger than the exact solver accepts.
    SizeLimit = 3,
    Parse = 4,
    Io = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SaFunctional {
    Mm = 0,
    Mst = 1,
    Tsp = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SaVariant {
    Plain = 0,
    Dual = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SaMode {
    Exact = 0,
    Heuristic = 1,
}

/// Opaque point set.
pub struct SaPointSet(PointSet);

/// Opaque solution.
pub struct SaSolution(Solution);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> SaStatus {
    match e {
        Error::Usage(_) | Error::Config(_) => SaStatus::InvalidArgument,
        Error::Size { .. } => SaStatus::SizeLimit,
        Error::Parse { .. } => SaStatus::Parse,
        Error::Io(_) => SaStatus::Io,
    }
}

/// Runs `f`, recording any error or panic.
fn guard(f: impl FnOnce() -> Result<(), (SaStatus, String)>) -> SaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SaStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            SaStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (SaStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (SaStatus, String) {
    (SaStatus::NullPointer, format!("{what} is null"))
}

/// Message for the last failed call on this thread. The pointer stays valid
/// until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sa_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sa_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates a point set from `n` points stored row-major in `coords`
/// (`n * dim` doubles). `coords` may be null when `n` is 0.
///
/// # Safety
/// `coords` must point to `n * dim` readable doubles and `out` must be a
/// valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sa_pointset_new(
    dim: usize,
    coords: *const f64,
    n: usize,
    out: *mut *mut SaPointSet,
) -> SaStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let flat = if n == 0 {
            Vec::new()
        } else if coords.is_null() {
            return Err(null("coords"));
        } else {
            let len = n
                .checked_mul(dim)
                .ok_or((SaStatus::InvalidArgument, "n * dim overflows".to_string()))?;
            std::slice::from_raw_parts(coords, len).to_vec()
        };
        let ps = PointSet::from_flat(dim, flat).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(SaPointSet(ps)));
        Ok(())
    })
}

/// Appends one point of `dim` coordinates.
///
/// # Safety
/// `ps` must come from [`sa_pointset_new`]; `x` must point to `dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn sa_pointset_push(ps: *mut SaPointSet, x: *const f64, dim: usize) -> SaStatus {
    guard(|| {
        let ps = ps.as_mut().ok_or_else(|| null("point set"))?;
        if x.is_null() {
            return Err(null("x"));
        }
        let coords = std::slice::from_raw_parts(x, dim);
        // validates dimension and finiteness
        let p = Point::new(coords.to_vec()).map_err(lib_err)?;
        if p.dim() != ps.0.dim() {
            return Err((
                SaStatus::InvalidArgument,
                format!("point has {} coordinates, set has dimension {}", p.dim(), ps.0.dim()),
            ));
        }
        ps.0.push(p.coords());
        Ok(())
    })
}

/// Number of points; 0 for a null handle.
///
/// # Safety
/// `ps` must be null or come from [`sa_pointset_new`].
#[no_mangle]
pub unsafe extern "C" fn sa_pointset_len(ps: *const SaPointSet) -> usize {
    ps.as_ref().map_or(0, |p| p.0.len())
}

/// # Safety
/// `ps` must be null or come from [`sa_pointset_new`], and not be used again.
#[no_mangle]
pub unsafe extern "C" fn sa_pointset_free(ps: *mut SaPointSet) {
    if !ps.is_null() {
        drop(Box::from_raw(ps));
    }
}

/// Solves on the cube with lower corner `corner` (`dim` doubles) and side
/// `side`; a null `corner` means the unit cube and ignores `side`. A
/// negative `factor` picks the boundary cost factor from `p`.
///
/// # Safety
/// `ps` must come from [`sa_pointset_new`]; `corner` must be null or point
/// to as many doubles as the set's dimension; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sa_solve(
    ps: *const SaPointSet,
    functional: SaFunctional,
    p: f64,
    variant: SaVariant,
    mode: SaMode,
    corner: *const f64,
    side: f64,
    factor: f64,
    out: *mut *mut SaSolution,
) -> SaStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let ps = ps.as_ref().ok_or_else(|| null("point set"))?;
        let d = ps.0.dim();
        let cube = if corner.is_null() {
            Cube::unit(d)
        } else {
            let c = Point::new(std::slice::from_raw_parts(corner, d).to_vec()).map_err(lib_err)?;
            Cube::new(c, side).map_err(lib_err)?
        };
        let f = match functional {
            SaFunctional::Mm => Functional::Mm,
            SaFunctional::Mst => Functional::Mst,
            SaFunctional::Tsp => Functional::Tsp,
        };
        let sol = Instance::new(ps.0.clone(), p, f)
            .map_err(lib_err)?
            .with_cube(cube)
            .with_variant(match variant {
                SaVariant::Plain => Variant::Plain,
                SaVariant::Dual => Variant::Dual,
            })
            .with_mode(match mode {
                SaMode::Exact => Mode::Exact,
                SaMode::Heuristic => Mode::Heuristic,
            })
            .with_factor((factor >= 0.0).then_some(factor))
            .solve()
            .map_err(lib_err)?;
        *out = Box::into_raw(Box::new(SaSolution(sol)));
        Ok(())
    })
}

/// Objective value; NaN for a null handle.
///
/// # Safety
/// `sol` must be null or come from [`sa_solve`].
#[no_mangle]
pub unsafe extern "C" fn sa_solution_value(sol: *const SaSolution) -> f64 {
    sol.as_ref().map_or(f64::NAN, |s| s.0.value)
}

/// Whether the value is a certified optimum (false for heuristics).
///
/// # Safety
/// `sol` must be null or come from [`sa_solve`].
#[no_mangle]
pub unsafe extern "C" fn sa_solution_certified(sol: *const SaSolution) -> bool {
    sol.as_ref().is_some_and(|s| s.0.certified)
}

/// # Safety
/// `sol` must be null or come from [`sa_solve`].
#[no_mangle]
pub unsafe extern "C" fn sa_solution_edge_count(sol: *const SaSolution) -> usize {
    sol.as_ref().map_or(0, |s| s.0.edges.len())
}

/// Endpoints of edge `k`; [`SA_BOUNDARY`] marks the boundary.
///
/// # Safety
/// `sol` must come from [`sa_solve`]; `i` and `j` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn sa_solution_edge(sol: *const SaSolution, k: usize, i: *mut usize, j: *mut usize) -> SaStatus {
    guard(|| {
        let sol = sol.as_ref().ok_or_else(|| null("solution"))?;
        if i.is_null() || j.is_null() {
            return Err(null("output"));
        }
        let &(a, b) = sol.0.edges.get(k).ok_or((
            SaStatus::InvalidArgument,
            format!("edge {k} out of range ({} edges)", sol.0.edges.len()),
        ))?;
        *i = a;
        *j = b;
        Ok(())
    })
}

/// Boundary attachment count and cost of a dual solution.
///
/// # Safety
/// `sol` must come from [`sa_solve`]; `count` and `cost` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sa_solution_boundary(sol: *const SaSolution, count: *mut usize, cost: *mut f64) -> SaStatus {
    guard(|| {
        let sol = sol.as_ref().ok_or_else(|| null("solution"))?;
        if count.is_null() || cost.is_null() {
            return Err(null("output"));
        }
        let (nb, lb) = boundary_diagnostics(&sol.0).map_err(lib_err)?;
        *count = nb;
        *cost = lb;
        Ok(())
    })
}

/// # Safety
/// `sol` must be null or come from [`sa_solve`], and not be used again.
#[no_mangle]
pub unsafe extern "C" fn sa_solution_free(sol: *mut SaSolution) {
    if !sol.is_null() {
        drop(Box::from_raw(sol));
    }
}

const _: () = assert!(SA_BOUNDARY == subadditive::solvers::BOUNDARY);
