use std::ffi::CStr;
use std::fs;
use std::process::Command;
use std::ptr;

use harmonic_ness_ffi::*;

fn last_error() -> Option<String> {
    let p = hn_last_error_message();
    (!p.is_null()).then(|| unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned())
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(hn_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn geometric_pmf_and_errors() {
    let mut out = f64::NAN;
    assert_eq!(unsafe { hn_geometric_pmf(1.0, 2, &mut out) }, HnStatus::Ok);
    assert!((out - 0.125).abs() < 1e-15);
    assert_eq!(last_error(), None);

    assert_eq!(unsafe { hn_geometric_pmf(-1.0, 0, &mut out) }, HnStatus::Domain);
    assert!(last_error().unwrap().contains("domain"));

    assert_eq!(unsafe { hn_geometric_pmf(1.0, 0, ptr::null_mut()) }, HnStatus::NullPointer);
    assert!(last_error().unwrap().contains("out"));
}

#[test]
fn sampling_is_seeded_and_sorted() {
    let n = 50;
    let (mut t1, mut e1) = (vec![0.0; n], vec![0u64; n]);
    let (mut t2, mut e2) = (vec![0.0; n], vec![0u64; n]);
    unsafe {
        assert_eq!(hn_sample_ness(n, 0.0, 2.0, 7, 1, t1.as_mut_ptr(), e1.as_mut_ptr()), HnStatus::Ok);
        assert_eq!(hn_sample_ness(n, 0.0, 2.0, 7, 1, t2.as_mut_ptr(), e2.as_mut_ptr()), HnStatus::Ok);
        assert_eq!(hn_sample_ness(n, 0.0, 2.0, 7, 1, ptr::null_mut(), e2.as_mut_ptr()), HnStatus::Ok);
    }
    assert_eq!(t1, t2);
    assert_eq!(e1, e2);
    assert!(t1.windows(2).all(|w| w[0] <= w[1]));
    assert!(t1.iter().all(|&t| (0.0..=2.0).contains(&t)));
    let status = unsafe { hn_sample_ness(0, 0.0, 2.0, 7, 1, ptr::null_mut(), e1.as_mut_ptr()) };
    assert_eq!(status, HnStatus::Contract);
    let status = unsafe { hn_sample_ness(3, 2.0, 0.0, 7, 1, ptr::null_mut(), e1.as_mut_ptr()) };
    assert_ne!(status, HnStatus::Ok);
}

#[test]
fn moments_match_closed_forms() {
    let mut out = 0.0;
    // E[U_{2:3}] = 1/2, E[U_{1:2} U_{2:2}] = 1/4
    unsafe {
        assert_eq!(hn_orderstat_product_moment(3, [0, 1, 0].as_ptr(), &mut out), HnStatus::Ok);
        assert!((out - 0.5).abs() < 1e-15);
        assert_eq!(hn_orderstat_product_moment(2, [1, 1].as_ptr(), &mut out), HnStatus::Ok);
        assert!((out - 0.25).abs() < 1e-15);
        // E[Theta_1] with N = 1 on (0, 2) is 1
        assert_eq!(hn_theta_product_moment(1, [1].as_ptr(), 1, 1, 0.0, 2.0, &mut out), HnStatus::Ok);
        assert!((out - 1.0).abs() < 1e-15);
        assert_eq!(hn_theta_product_moment(3, [1].as_ptr(), 1, 1, 0.0, 2.0, &mut out), HnStatus::Contract);
        // single site at the midpoint: E[eta_i] - rho(x) = 0 for N odd
        assert_eq!(hn_le_deviation(0.5, [1].as_ptr(), 1, 9, 0.0, 2.0, &mut out), HnStatus::Ok);
        assert!(out.abs() < 1e-12);
    }
}

#[test]
fn handles_drive_limits() {
    let g = hn_local_function_density();
    let mut phi = ptr::null_mut();
    let (mut limit, mut st, mut se) = (0.0, 0.0, 0.0);
    unsafe {
        assert_eq!(hn_test_function_polynomial([1.0].as_ptr(), 1, &mut phi), HnStatus::Ok);
        assert_eq!(hn_lln_limit(g, phi, 0.0, 2.0, &mut limit), HnStatus::Ok);
        assert_eq!(hn_clt_variances(g, phi, 0.0, 2.0, &mut st, &mut se), HnStatus::Ok);
        assert_eq!(hn_lln_limit(ptr::null(), phi, 0.0, 2.0, &mut limit), HnStatus::NullPointer);
        hn_test_function_free(phi);
        hn_local_function_free(g);
        hn_local_function_free(ptr::null_mut());
    }
    assert!((limit - 1.0).abs() < 1e-9);
    assert!((st - 1.0 / 3.0).abs() < 1e-8);
    assert!((se - 7.0 / 3.0).abs() < 1e-8);
}

#[test]
fn polynomial_handle_matches_builtin() {
    let mut g = ptr::null_mut();
    let mut phi = ptr::null_mut();
    let (mut a, mut b) = (0.0, 0.0);
    unsafe {
        assert_eq!(hn_local_function_polynomial(2, 1, [1.0].as_ptr(), [1, 1].as_ptr(), &mut g), HnStatus::Ok);
        assert_eq!(hn_test_function_polynomial([0.0, 1.0].as_ptr(), 2, &mut phi), HnStatus::Ok);
        let builtin = hn_local_function_pair_product();
        assert_eq!(hn_lln_limit(g, phi, 0.0, 2.0, &mut a), HnStatus::Ok);
        assert_eq!(hn_lln_limit(builtin, phi, 0.0, 2.0, &mut b), HnStatus::Ok);
        assert_eq!(a, b);
        let mut bad = ptr::null_mut();
        let status = hn_local_function_polynomial(2, 1, [1.0].as_ptr(), ptr::null(), &mut bad);
        assert_eq!(status, HnStatus::NullPointer);
        assert!(bad.is_null());
        hn_local_function_free(builtin);
        hn_local_function_free(g);
        hn_test_function_free(phi);
    }
}

#[test]
fn large_deviation_entry_points() {
    let g = hn_local_function_indicator_vacuum();
    let density = hn_local_function_density();
    let (mut f, mut i, mut j) = (1.0, 1.0, 1.0);
    let grid: Vec<f64> = (0..=100).map(|k| 2.0 * k as f64 / 100.0).collect();
    unsafe {
        assert_eq!(hn_free_energy(1.0, 0.0, g, &mut f), HnStatus::Ok);
        // h(1) = P(eta = 0) = 1/2
        assert_eq!(hn_rate_function(1.0, 0.5, g, &mut i), HnStatus::Ok);
        assert_eq!(hn_path_rate(grid.as_ptr(), grid.len(), 0.0, 2.0, &mut j), HnStatus::Ok);
        assert_eq!(hn_free_energy(1.0, 0.1, density, &mut f), HnStatus::Contract);
        assert!(last_error().unwrap().contains("bounded"));
        hn_local_function_free(g);
        hn_local_function_free(density);
    }
    assert!(i.abs() < 1e-8);
    assert!(j.abs() < 1e-15);
}

#[test]
fn header_declares_every_export() {
    let dir = env!("CARGO_MANIFEST_DIR");
    let header = fs::read_to_string(format!("{dir}/include/harmonic_ness.h")).unwrap();
    let source = fs::read_to_string(format!("{dir}/src/lib.rs")).unwrap();
    let exports: Vec<&str> = source
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .filter_map(|rest| rest.split('(').next())
        .collect();
    assert!(exports.len() >= 15);
    for name in exports {
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
    for tag in ["typedef struct HnLocalFunction", "typedef struct HnTestFunction", "HN_STATUS_NULL_POINTER = 8"] {
        assert!(header.contains(tag), "{tag}");
    }
}

#[test]
fn header_compiles_as_c() {
    let dir = env!("CARGO_MANIFEST_DIR");
    let Ok(status) = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-x", "c"])
        .arg(format!("{dir}/include/harmonic_ness.h"))
        .status()
    else {
        eprintln!("no C compiler available; skipped");
        return;
    };
    assert!(status.success());
}
