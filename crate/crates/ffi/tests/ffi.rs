use std::ffi::CStr;
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use subadditive_ffi::*;

fn set(dim: usize, coords: &[f64]) -> *mut SaPointSet {
    let mut ps = ptr::null_mut();
    let st = unsafe { sa_pointset_new(dim, coords.as_ptr(), coords.len() / dim, &mut ps) };
    assert_eq!(st, SaStatus::Ok);
    ps
}

fn solve(ps: *const SaPointSet, f: SaFunctional, p: f64, v: SaVariant) -> (SaStatus, *mut SaSolution) {
    let mut sol = ptr::null_mut();
    let st = unsafe { sa_solve(ps, f, p, v, SaMode::Exact, ptr::null(), 0.0, -1.0, &mut sol) };
    (st, sol)
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(sa_last_error_message()) }.to_string_lossy().into_owned()
}

#[test]
fn two_point_values() {
    let ps = set(2, &[0.0, 0.0, 0.0, 1.0]);
    for (f, want) in [(SaFunctional::Mst, 1.0), (SaFunctional::Mm, 1.0), (SaFunctional::Tsp, 2.0)] {
        let (st, sol) = solve(ps, f, 2.0, SaVariant::Plain);
        assert_eq!(st, SaStatus::Ok);
        unsafe {
            assert_eq!(sa_solution_value(sol), want);
            assert!(sa_solution_certified(sol));
            sa_solution_free(sol);
        }
    }
    unsafe { sa_pointset_free(ps) };
}

#[test]
fn dual_reports_boundary_edges() {
    let ps = set(2, &[0.1, 0.5, 0.9, 0.5]);
    let (st, sol) = solve(ps, SaFunctional::Mst, 1.0, SaVariant::Dual);
    assert_eq!(st, SaStatus::Ok);
    unsafe {
        let (mut nb, mut lb) = (0usize, 0.0f64);
        assert_eq!(sa_solution_boundary(sol, &mut nb, &mut lb), SaStatus::Ok);
        assert_eq!(nb, 2);
        assert!((lb - 0.2).abs() < 1e-12);
        let boundary_edges = (0..sa_solution_edge_count(sol))
            .filter(|&k| {
                let (mut i, mut j) = (0, 0);
                assert_eq!(sa_solution_edge(sol, k, &mut i, &mut j), SaStatus::Ok);
                j == SA_BOUNDARY || i == SA_BOUNDARY
            })
            .count();
        assert_eq!(boundary_edges, 2);
        let (mut i, mut j) = (0, 0);
        assert_eq!(sa_solution_edge(sol, 99, &mut i, &mut j), SaStatus::InvalidArgument);
        sa_solution_free(sol);

        // plain solutions have no boundary diagnostics
        let (_, plain) = solve(ps, SaFunctional::Mst, 1.0, SaVariant::Plain);
        assert_eq!(sa_solution_boundary(plain, &mut nb, &mut lb), SaStatus::InvalidArgument);
        sa_solution_free(plain);
        sa_pointset_free(ps);
    }
}

#[test]
fn error_codes() {
    unsafe {
        let mut out = ptr::null_mut();
        assert_eq!(sa_pointset_new(2, ptr::null(), 3, &mut out), SaStatus::NullPointer);
        assert_eq!(sa_pointset_new(2, [0.5, f64::INFINITY].as_ptr(), 1, &mut out), SaStatus::InvalidArgument);
        assert!(out.is_null());
        assert!(!last_error().is_empty());

        let (st, sol) = solve(ptr::null(), SaFunctional::Mst, 1.0, SaVariant::Plain);
        assert_eq!(st, SaStatus::NullPointer);
        assert!(sol.is_null());

        let ps = set(2, &[0.5, 0.5]);
        assert_eq!(sa_pointset_push(ps, [0.1, 0.2, 0.3].as_ptr(), 3), SaStatus::InvalidArgument);
        assert_eq!(sa_pointset_push(ps, [2.0, 0.2].as_ptr(), 2), SaStatus::Ok);
        // the pushed point lies outside the unit cube
        assert_eq!(solve(ps, SaFunctional::Mst, 1.0, SaVariant::Plain).0, SaStatus::InvalidArgument);
        let corner = [0.0, 0.0];
        let mut sol = ptr::null_mut();
        let st = sa_solve(ps, SaFunctional::Mst, 1.0, SaVariant::Plain, SaMode::Exact, corner.as_ptr(), 4.0, -1.0, &mut sol);
        assert_eq!(st, SaStatus::Ok);
        sa_solution_free(sol);
        // p outside (0, inf)
        assert_eq!(solve(ps, SaFunctional::Mst, -1.0, SaVariant::Plain).0, SaStatus::InvalidArgument);
        sa_pointset_free(ps);

        // 30 points exceed the exact tour limit
        let many: Vec<f64> = (0..60).map(|i| (i as f64 * 0.37).fract()).collect();
        let ps = set(2, &many);
        assert_eq!(sa_pointset_len(ps), 30);
        assert_eq!(solve(ps, SaFunctional::Tsp, 1.0, SaVariant::Plain).0, SaStatus::SizeLimit);
        sa_pointset_free(ps);

        assert_eq!(sa_pointset_len(ptr::null()), 0);
        assert!(sa_solution_value(ptr::null()).is_nan());
        sa_pointset_free(ptr::null_mut());
        sa_solution_free(ptr::null_mut());
        assert_eq!(CStr::from_ptr(sa_version()).to_str().unwrap(), env!("CARGO_PKG_VERSION"));
    }
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/subadditive.h")).unwrap();
    for name in [
        "sa_pointset_new",
        "sa_pointset_push",
        "sa_solve",
        "sa_solution_boundary",
        "sa_last_error_message",
        "typedef struct SaPointSet SaPointSet",
        "SA_STATUS_SIZE_LIMIT = 3",
        "#define SA_BOUNDARY SIZE_MAX",
    ] {
        assert!(header.contains(name), "missing {name}");
    }
}

/// Compiles a C program against the header and the static library.
#[test]
fn c_program_links_and_runs() {
    let Ok(cc) = which_cc() else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().unwrap().parent().unwrap();
    let lib = profile_dir.join("libsubadditive_ffi.a");
    assert!(lib.exists(), "static library not built at {}", lib.display());
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let out = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("ffi_smoke");
    let status = Command::new(&cc)
        .arg(manifest.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let run = Command::new(&out).output().unwrap();
    assert!(run.status.success(), "smoke exited with {:?}", run.status.code());
    assert!(String::from_utf8_lossy(&run.stdout).contains("N_B=1"));
}

fn which_cc() -> Result<String, ()> {
    for cc in ["cc", "gcc", "clang"] {
        if Command::new(cc).arg("--version").output().is_ok() {
            return Ok(cc.to_string());
        }
    }
    Err(())
}
