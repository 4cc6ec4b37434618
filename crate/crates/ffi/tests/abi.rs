use std::ffi::CStr;
use std::ptr;

use nonlocal_pme_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 256];
    unsafe {
        nlpme_last_error(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

struct Box1d {
    lo: [i64; 1],
    shape: [usize; 1],
}

impl Box1d {
    fn new(points: usize) -> Self {
        Box1d {
            lo: [-(points as i64) / 2],
            shape: [points],
        }
    }

    fn grid(&self, h: f64, periodic: bool) -> NlpmeGrid {
        NlpmeGrid {
            dim: 1,
            spacing: h,
            lo: self.lo.as_ptr(),
            shape: self.shape.as_ptr(),
            periodic: periodic as i32,
        }
    }
}

#[test]
fn fractional_constant_in_one_dimension_at_order_one() {
    let mut c = 0.0;
    let status = unsafe { nlpme_fractional_constant(1, 1.0, &mut c) };
    assert_eq!(status, NlpmeStatus::Ok);
    assert!((c - 1.0 / std::f64::consts::PI).abs() < 1e-12);
}

#[test]
fn invalid_order_reports_domain_error_with_message() {
    let mut c = 0.0;
    let status = unsafe { nlpme_fractional_constant(1, 2.5, &mut c) };
    assert_eq!(status, NlpmeStatus::Domain);
    assert!(!last_error().is_empty());
}

#[test]
fn null_output_is_rejected() {
    let status = unsafe { nlpme_fractional_constant(1, 1.0, ptr::null_mut()) };
    assert_eq!(status, NlpmeStatus::NullPointer);
    assert!(last_error().contains("result"));
}

#[test]
fn error_message_length_is_reported_even_when_truncated() {
    unsafe { nlpme_fractional_constant(1, -1.0, &mut 0.0) };
    let full = unsafe { nlpme_last_error(ptr::null_mut(), 0) };
    let mut small = [0 as std::ffi::c_char; 4];
    let again = unsafe { nlpme_last_error(small.as_mut_ptr(), small.len()) };
    assert_eq!(full, again);
    assert!(full > 3);
    assert_eq!(small[3], 0);
}

#[test]
fn local_stencil_applies_the_discrete_laplacian() {
    let h = 0.1;
    let sigma = [1.0];
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { nlpme_stencil_new_local(1, 1, sigma.as_ptr(), h, &mut s) }, NlpmeStatus::Ok);
    let b = Box1d::new(32);
    let grid = b.grid(h, true);
    let u: Vec<f64> = (0..32).map(|i| ((i as f64) * 0.3).sin()).collect();
    let mut out = vec![0.0; 32];
    assert_eq!(unsafe { nlpme_apply(s, &grid, u.as_ptr(), out.as_mut_ptr()) }, NlpmeStatus::Ok);
    for i in 0..32 {
        let expected = (u[(i + 1) % 32] - 2.0 * u[i] + u[(i + 31) % 32]) / (h * h);
        assert!((out[i] - expected).abs() < 1e-9, "{i}: {} vs {expected}", out[i]);
    }
    let (mut len, mut w, mut tail) = (0usize, 0.0, 0.0);
    assert_eq!(unsafe { nlpme_stencil_info(s, &mut len, &mut w, &mut tail) }, NlpmeStatus::Ok);
    assert_eq!(len, 2);
    assert!((w - 2.0 / (h * h)).abs() < 1e-9);
    assert_eq!(tail, 0.0);
    unsafe { nlpme_stencil_free(s) };
}

#[test]
fn dirac_stencil_shifts_differences() {
    let h = 0.5;
    let offsets = [1.0, -1.0];
    let masses = [2.0, 2.0];
    let mut s = ptr::null_mut();
    let status = unsafe { nlpme_stencil_new_dirac(1, 2, offsets.as_ptr(), masses.as_ptr(), h, 10.0, &mut s) };
    assert_eq!(status, NlpmeStatus::Ok);
    let b = Box1d::new(16);
    let grid = b.grid(h, true);
    let u: Vec<f64> = (0..16).map(|i| (i * i % 7) as f64).collect();
    let mut out = vec![0.0; 16];
    assert_eq!(unsafe { nlpme_apply(s, &grid, u.as_ptr(), out.as_mut_ptr()) }, NlpmeStatus::Ok);
    for i in 0..16 {
        let expected = 2.0 * (u[(i + 2) % 16] - u[i]) + 2.0 * (u[(i + 14) % 16] - u[i]);
        assert!((out[i] - expected).abs() < 1e-12);
    }
    unsafe { nlpme_stencil_free(s) };
}

#[test]
fn asymmetric_atoms_are_rejected() {
    let offsets = [1.0, -0.5];
    let masses = [1.0, 1.0];
    let mut s = ptr::null_mut();
    let status = unsafe { nlpme_stencil_new_dirac(1, 2, offsets.as_ptr(), masses.as_ptr(), 0.5, 10.0, &mut s) };
    assert_eq!(status, NlpmeStatus::Domain);
    assert!(last_error().contains("mirror"));
    assert!(s.is_null());
}

#[test]
fn combined_stencil_adds_weights() {
    let mut a = ptr::null_mut();
    let mut b = ptr::null_mut();
    let mut c = ptr::null_mut();
    unsafe {
        assert_eq!(nlpme_stencil_new_fractional(1, 1.0, 0.1, 4.0, 1, 0, &mut a), NlpmeStatus::Ok);
        assert_eq!(nlpme_stencil_new_local(1, 1, [1.0].as_ptr(), 0.1, &mut b), NlpmeStatus::Ok);
        assert_eq!(nlpme_stencil_combine(a, b, &mut c), NlpmeStatus::Ok);
        let (mut la, mut wa, mut ta) = (0usize, 0.0, 0.0);
        let (mut lb, mut wb, mut tb) = (0usize, 0.0, 0.0);
        let (mut lc, mut wc, mut tc) = (0usize, 0.0, 0.0);
        nlpme_stencil_info(a, &mut la, &mut wa, &mut ta);
        nlpme_stencil_info(b, &mut lb, &mut wb, &mut tb);
        nlpme_stencil_info(c, &mut lc, &mut wc, &mut tc);
        assert!((wc - wa - wb).abs() < 1e-9 * wc);
        assert_eq!(lc, la);
        nlpme_stencil_free(a);
        nlpme_stencil_free(b);
        nlpme_stencil_free(c);
    }
}

#[test]
fn nonlinearity_handles_evaluate() {
    unsafe {
        let mut p = ptr::null_mut();
        assert_eq!(nlpme_nonlinearity_new_power(2.0, &mut p), NlpmeStatus::Ok);
        let mut v = 0.0;
        assert_eq!(nlpme_nonlinearity_eval(p, -3.0, &mut v), NlpmeStatus::Ok);
        assert_eq!(v, -9.0);
        let mut q = ptr::null_mut();
        assert_eq!(nlpme_nonlinearity_mollify(p, 0.05, 4.0, &mut q), NlpmeStatus::Ok);
        assert_eq!(nlpme_nonlinearity_eval(q, 1.0, &mut v), NlpmeStatus::Ok);
        assert!((v - 1.0).abs() < 0.01);
        nlpme_nonlinearity_free(p);
        nlpme_nonlinearity_free(q);

        let mut st = ptr::null_mut();
        assert_eq!(nlpme_nonlinearity_new_stefan(2.0, 1.0, 0.5, &mut st), NlpmeStatus::Ok);
        nlpme_nonlinearity_eval(st, 0.25, &mut v);
        assert_eq!(v, 0.0);
        nlpme_nonlinearity_eval(st, 1.5, &mut v);
        assert_eq!(v, 2.0);
        nlpme_nonlinearity_free(st);

        let mut bad = ptr::null_mut();
        assert_eq!(nlpme_nonlinearity_new_power(-1.0, &mut bad), NlpmeStatus::Domain);
        nlpme_nonlinearity_free(ptr::null_mut());
    }
}

#[test]
fn step_beyond_cfl_fails_and_evolve_conserves_mass() {
    let h = 0.1;
    let n = 64;
    let b = Box1d::new(n);
    let grid = b.grid(h, true);
    let u0: Vec<f64> = (0..n)
        .map(|i| {
            let x = (i as f64 - n as f64 / 2.0) * h;
            (-x * x).exp()
        })
        .collect();
    unsafe {
        let mut s = ptr::null_mut();
        let mut phi = ptr::null_mut();
        assert_eq!(nlpme_stencil_new_fractional(1, 1.0, h, 3.0, 0, 0, &mut s), NlpmeStatus::Ok);
        assert_eq!(nlpme_nonlinearity_new_power(2.0, &mut phi), NlpmeStatus::Ok);
        let mut dt = 0.0;
        assert_eq!(nlpme_cfl_dt(s, phi, 1.0, &mut dt), NlpmeStatus::Ok);
        assert!(dt > 0.0 && dt.is_finite());

        let mut next = vec![0.0; n];
        assert_eq!(nlpme_step(s, phi, &grid, 1.5 * dt, u0.as_ptr(), next.as_mut_ptr()), NlpmeStatus::Cfl);
        assert_eq!(nlpme_step(s, phi, &grid, 0.5 * dt, u0.as_ptr(), next.as_mut_ptr()), NlpmeStatus::Ok);

        let mut fin = vec![0.0; n];
        let mut steps = 0usize;
        let status = nlpme_evolve(s, phi, &grid, u0.as_ptr(), 0.2, 0.0, 0.9, 0, fin.as_mut_ptr(), &mut steps);
        assert_eq!(status, NlpmeStatus::Ok, "{}", last_error());
        assert!(steps > 0);
        let m0: f64 = u0.iter().sum();
        let m1: f64 = fin.iter().sum();
        assert!((m0 - m1).abs() < 1e-11 * m0, "{m0} {m1}");
        assert!(fin.iter().all(|&v| v >= 0.0));
        assert!(fin.iter().cloned().fold(0.0, f64::max) <= 1.0);
        nlpme_stencil_free(s);
        nlpme_nonlinearity_free(phi);
    }
}

#[test]
fn resolvent_solution_has_small_residual() {
    let h = 0.1;
    let n = 40;
    let b = Box1d::new(n);
    let grid = b.grid(h, true);
    let g: Vec<f64> = (0..n).map(|i| ((i as f64) * 0.4).cos()).collect();
    unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(nlpme_stencil_new_fractional(1, 1.2, h, 2.0, 0, 0, &mut s), NlpmeStatus::Ok);
        let eps = 0.5;
        let mut v = vec![0.0; n];
        let (mut iters, mut res) = (0usize, 0.0);
        let status = nlpme_solve_resolvent(s, &grid, g.as_ptr(), eps, 1e-10, v.as_mut_ptr(), &mut iters, &mut res);
        assert_eq!(status, NlpmeStatus::Ok, "{}", last_error());
        assert!(iters > 0);
        assert!(res <= eps * 1e-10 * 1.0001);
        let mut lv = vec![0.0; n];
        nlpme_apply(s, &grid, v.as_ptr(), lv.as_mut_ptr());
        for i in 0..n {
            assert!((eps * v[i] - lv[i] - g[i]).abs() < 1e-9);
        }
        let status = nlpme_solve_resolvent(s, &grid, g.as_ptr(), 0.0, 1e-10, v.as_mut_ptr(), &mut iters, &mut res);
        assert_eq!(status, NlpmeStatus::Domain);
        nlpme_stencil_free(s);
    }
}

#[test]
fn spacing_mismatch_between_stencil_and_grid_is_reported() {
    let b = Box1d::new(8);
    let grid = b.grid(0.2, false);
    let u = [0.0; 8];
    let mut out = [0.0; 8];
    unsafe {
        let mut s = ptr::null_mut();
        nlpme_stencil_new_local(1, 1, [1.0].as_ptr(), 0.1, &mut s);
        assert_eq!(nlpme_apply(s, &grid, u.as_ptr(), out.as_mut_ptr()), NlpmeStatus::Mismatch);
        nlpme_stencil_free(s);
    }
}
