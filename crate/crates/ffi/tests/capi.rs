use std::ffi::c_char;
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use steklov_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 256];
    let n = unsafe { stk_last_error(buf.as_mut_ptr(), buf.len()) };
    let bytes: Vec<u8> = buf[..n.min(255)].iter().map(|&c| c as u8).collect();
    String::from_utf8(bytes).unwrap()
}

fn square() -> *mut StkPolygon {
    let xy = [0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0];
    let mut poly = ptr::null_mut();
    assert_eq!(unsafe { stk_polygon_new(xy.as_ptr(), 4, &mut poly) }, STK_OK);
    poly
}

#[test]
fn square_metrics_and_spectrum() {
    let poly = square();
    let (mut per, mut area, mut iso) = (0.0, 0.0, 0.0);
    unsafe {
        assert_eq!(stk_polygon_metrics(poly, &mut per, &mut area, &mut iso), STK_OK);
        assert!((per - 4.0).abs() < 1e-14 && (area - 1.0).abs() < 1e-14 && (iso - 4.0).abs() < 1e-14);
        let mut d = 0.0;
        assert_eq!(stk_polygon_distortion(poly, &mut d), STK_OK);
        assert!((d - 2.0 * 2f64.sqrt()).abs() < 0.03 * d, "{d}");

        let mut mesh = ptr::null_mut();
        assert_eq!(stk_mesh_build(poly, 0.125, 1, &mut mesh), STK_OK);
        let (mut nodes, mut tris) = (0, 0);
        assert_eq!(stk_mesh_size(mesh, &mut nodes, &mut tris), STK_OK);
        assert!(nodes > 100 && tris > nodes);
        let mut sigma = [f64::NAN; 4];
        assert_eq!(stk_spectrum_p2(mesh, 4, sigma.as_mut_ptr()), STK_OK);
        assert!(sigma[0].abs() < 1e-8);
        assert!(sigma.windows(2).all(|w| w[0] <= w[1]));

        let (mut v, mut res, mut stat) = (0.0, 0.0, 0);
        assert_eq!(stk_sigma2_p(mesh, 2.0, 1, 7, &mut v, &mut res, &mut stat), STK_OK);
        assert!((v - sigma[1]).abs() < 1e-3 * sigma[1], "{v} vs {}", sigma[1]);

        let (mut b, mut c) = (0.0, 0.0);
        assert_eq!(stk_certified_bound(poly, 2.0, 2, 0.0, &mut b, &mut c), STK_OK);
        assert!(b >= sigma[1] && c > 0.0);
        let mut sup = -1;
        assert_eq!(stk_theoretical_bound(poly, 2.0, 3, 1.0, &mut b, &mut sup), STK_OK);
        assert!((b - 6.0 * std::f64::consts::PI).abs() < 1e-9 && sup == 0);
        assert_eq!(stk_theoretical_bound(poly, 4.0, 3, 1.0, &mut b, &mut sup), STK_OK);
        assert!(b.is_finite() && sup == 1);

        stk_mesh_free(mesh);
        stk_polygon_free(poly);
    }
    assert_eq!(last_error(), "");
}

#[test]
fn failures_set_codes_and_messages() {
    unsafe {
        let mut poly = ptr::null_mut();
        assert_eq!(stk_polygon_new(ptr::null(), 3, &mut poly), STK_ERR_NULL);
        assert!(last_error().contains("xy"));

        let bowtie = [0.0, 0.0, 1.0, 1.0, 1.0, 0.0, 0.0, 1.0];
        assert_eq!(stk_polygon_new(bowtie.as_ptr(), 4, &mut poly), STK_ERR_VALIDATION);
        assert!(poly.is_null());
        assert!(last_error().contains("not simple"), "{}", last_error());

        assert_eq!(stk_polygon_regular(2, 1.0, &mut poly), STK_ERR_ARGUMENT);
        assert!(!last_error().is_empty());

        let sq = square();
        let mut mesh = ptr::null_mut();
        assert_eq!(stk_mesh_build(sq, 1e-5, 0, &mut mesh), STK_ERR_RESOURCE);
        assert_eq!(stk_mesh_build(sq, 0.25, 0, ptr::null_mut()), STK_ERR_NULL);
        let (mut v, mut c) = (0.0, 0.0);
        assert_eq!(stk_certified_bound(sq, 2.0, 0, 0.0, &mut v, &mut c), STK_ERR_ARGUMENT);
        assert_eq!(stk_polygon_metrics(ptr::null(), &mut v, &mut v, &mut v), STK_ERR_NULL);

        // A success clears the previous error.
        assert_eq!(stk_polygon_metrics(sq, &mut v, &mut v, &mut c), STK_OK);
        assert_eq!(stk_last_error(ptr::null_mut(), 0), 0);

        stk_polygon_free(sq);
        stk_polygon_free(ptr::null_mut());
        stk_mesh_free(ptr::null_mut());
    }
}

#[test]
fn truncated_error_buffer() {
    unsafe {
        let mut poly = ptr::null_mut();
        assert_eq!(stk_polygon_regular(1, 1.0, &mut poly), STK_ERR_ARGUMENT);
        let full = stk_last_error(ptr::null_mut(), 0);
        let mut buf = [1 as c_char; 5];
        assert_eq!(stk_last_error(buf.as_mut_ptr(), 5), full);
        assert_eq!(buf[4], 0);
    }
}

/// Compiles the generated header and links a C program against the static library.
#[test]
fn c_program_links_against_header() {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header_dir = root.join("include");
    assert!(header_dir.join("steklov.h").exists());
    let tmp = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    // CARGO_TARGET_TMPDIR is <target>/tmp; artifacts of this profile sit in <target>/<profile>.
    let target = tmp.parent().unwrap();
    let lib = ["debug", "release"]
        .iter()
        .map(|p| target.join(p).join("libsteklov_ffi.a"))
        .filter(|p| p.exists())
        .max_by_key(|p| p.metadata().and_then(|m| m.modified()).ok());
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let src = tmp.join("capi_smoke.c");
    std::fs::write(
        &src,
        r#"#include <stdio.h>
#include "steklov.h"
int main(void) {
    StkPolygon *poly = NULL;
    double per = 0, area = 0, iso = 0;
    if (stk_polygon_regular(6, 1.0, &poly) != STK_OK) return 10;
    if (stk_polygon_metrics(poly, &per, &area, &iso) != STK_OK) return 11;
    stk_polygon_free(poly);
    if (stk_polygon_regular(2, 1.0, &poly) != STK_ERR_ARGUMENT) return 12;
    char buf[128];
    if (stk_last_error(buf, sizeof buf) == 0) return 13;
    printf("%.12f\n", per);
    return 0;
}
"#,
    )
    .unwrap();
    let syntax = Command::new(&cc)
        .arg("-fsyntax-only")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(&header_dir)
        .arg(&src)
        .status();
    let Ok(status) = syntax else {
        eprintln!("no C compiler `{cc}`; header check skipped");
        return;
    };
    assert!(status.success(), "generated header does not compile");
    let Some(lib) = lib else {
        eprintln!("static library not found under {}; link check skipped", target.display());
        return;
    };
    let exe = tmp.join("capi_smoke");
    let out = Command::new(&cc)
        .arg("-I")
        .arg(&header_dir)
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "exit {:?}", run.status.code());
    let per: f64 = String::from_utf8_lossy(&run.stdout).trim().parse().unwrap();
    assert!((per - 6.0).abs() < 1e-9);
}
