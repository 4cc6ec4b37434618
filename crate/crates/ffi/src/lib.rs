//! C ABI for the nonlocal porous-medium solver.
//!
//! Every function returns an [`NlpmeStatus`]; on failure the message is
//! available from [`nlpme_last_error`] on the same thread. Objects are opaque
//! handles created by `nlpme_*_new_*` functions and released by the matching
//! `nlpme_*_free`. Grid values are flat row-major arrays (last axis fastest)
//! over the box described by an [`NlpmeGrid`].

use std::cell::RefCell;
use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;

use nalgebra::DMatrix;
use nonlocal_pme::discrete_operator::{
    assemble_local, assemble_nonlocal, Boundary, GridFunction, NonlocalOptions, OriginCell, StencilWeights, TailPolicy,
};
use nonlocal_pme::error::Error;
use nonlocal_pme::evolution::{cfl_dt, evolve, step_explicit, EvolutionConfig, TimeStep};
use nonlocal_pme::levy_measure::{fractional_constant, Atom, LevyMeasure};
use nonlocal_pme::nonlinearity::Nonlinearity;
use nonlocal_pme::resolvent::solve_resolvent;

/// Result codes. `NLPME_STATUS_OK` is zero.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NlpmeStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    SingularCell = 3,
    Quadrature = 4,
    NotLevy = 5,
    NotGridCompatible = 6,
    Mismatch = 7,
    Cfl = 8,
    InfiniteLipschitz = 9,
    NonFinite = 10,
    Config = 11,
    Io = 12,
    Assertion = 13,
    Panic = 14,
}

/// Opaque lattice operator.
pub struct NlpmeStencil(StencilWeights);

/// Opaque nonlinearity.
pub struct NlpmeNonlinearity(Nonlinearity);

/// A lattice box: `dim` axes, index origin `lo[d]`, `shape[d]` points per
/// axis, spacing `spacing`. Boundary is periodic when `periodic` is nonzero
/// and zero extension otherwise.
#[repr(C)]
pub struct NlpmeGrid {
    pub dim: usize,
    pub spacing: f64,
    pub lo: *const i64,
    pub shape: *const usize,
    pub periodic: i32,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn code(e: &Error) -> NlpmeStatus {
    match e {
        Error::Domain(_) => NlpmeStatus::Domain,
        Error::SingularCell(_) => NlpmeStatus::SingularCell,
        Error::Quadrature { .. } => NlpmeStatus::Quadrature,
        Error::NotLevy(_) => NlpmeStatus::NotLevy,
        Error::NotGridCompatible(_) => NlpmeStatus::NotGridCompatible,
        Error::Mismatch(_) => NlpmeStatus::Mismatch,
        Error::Cfl { .. } => NlpmeStatus::Cfl,
        Error::InfiniteLipschitz { .. } => NlpmeStatus::InfiniteLipschitz,
        Error::NonFinite { .. } => NlpmeStatus::NonFinite,
        Error::Config(_) => NlpmeStatus::Config,
        Error::Io(_) => NlpmeStatus::Io,
        Error::Assertion(_) => NlpmeStatus::Assertion,
    }
}

enum Failure {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> NlpmeStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => NlpmeStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer passed as `{what}`"));
            NlpmeStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            code(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            NlpmeStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(what))
}

unsafe fn array<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn array_mut<'a, T>(p: *mut T, len: usize, what: &'static str) -> Result<&'a mut [T], Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(slice::from_raw_parts_mut(p, len))
}

unsafe fn grid_from(grid: *const NlpmeGrid, values: *const f64) -> Result<GridFunction, Failure> {
    let g = deref(grid, "grid")?;
    let lo = array(g.lo, g.dim, "grid.lo")?.to_vec();
    let shape = array(g.shape, g.dim, "grid.shape")?.to_vec();
    let n: usize = shape.iter().product();
    let v = array(values, n, "values")?.to_vec();
    let boundary = if g.periodic != 0 {
        Boundary::Periodic
    } else {
        Boundary::ZeroExtension
    };
    Ok(GridFunction::new(g.spacing, lo, shape, v, boundary)?)
}

fn store(h: *mut *mut NlpmeStencil, w: StencilWeights) -> Result<(), Failure> {
    let slot = unsafe { out(h, "out")? };
    *slot = Box::into_raw(Box::new(NlpmeStencil(w)));
    Ok(())
}

fn store_phi(h: *mut *mut NlpmeNonlinearity, phi: Nonlinearity) -> Result<(), Failure> {
    let slot = unsafe { out(h, "out")? };
    *slot = Box::into_raw(Box::new(NlpmeNonlinearity(phi)));
    Ok(())
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len` bytes) and returns the full message length.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn nlpme_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// `c_{N,s}` of the fractional Laplacian.
///
/// # Safety
/// `result` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nlpme_fractional_constant(dim: usize, order: f64, result: *mut f64) -> NlpmeStatus {
    guard(|| {
        *out(result, "result")? = fractional_constant(dim, order)?;
        Ok(())
    })
}

/// Stencil of `−(−Δ)^{s/2}` truncated at `r_cut`. `absorb_tail` nonzero
/// lumps the truncated mass into the diagonal; `second_moment` nonzero
/// replaces the skipped origin cell by its second-moment stencil.
///
/// # Safety
/// `result` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nlpme_stencil_new_fractional(
    dim: usize,
    order: f64,
    spacing: f64,
    r_cut: f64,
    absorb_tail: i32,
    second_moment: i32,
    result: *mut *mut NlpmeStencil,
) -> NlpmeStatus {
    guard(|| {
        let mu = LevyMeasure::fractional(dim, order)?;
        let options = NonlocalOptions {
            cutoff: r_cut,
            tail_policy: if absorb_tail != 0 { TailPolicy::Absorb } else { TailPolicy::Drop },
            origin_cell: if second_moment != 0 { OriginCell::SecondMoment } else { OriginCell::Skip },
        };
        store(result, assemble_nonlocal(&mu, spacing, options)?)
    })
}

/// Stencil of `Σ_k m_k (ψ(x+z_k) − ψ(x))`; `offsets` holds `n_atoms × dim`
/// coordinates row by row.
///
/// # Safety
/// `offsets` and `masses` must hold `n_atoms × dim` and `n_atoms` values;
/// `result` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nlpme_stencil_new_dirac(
    dim: usize,
    n_atoms: usize,
    offsets: *const f64,
    masses: *const f64,
    spacing: f64,
    r_cut: f64,
    result: *mut *mut NlpmeStencil,
) -> NlpmeStatus {
    guard(|| {
        let z = array(offsets, n_atoms * dim, "offsets")?;
        let m = array(masses, n_atoms, "masses")?;
        let atoms = (0..n_atoms)
            .map(|k| Atom {
                offset: z[k * dim..(k + 1) * dim].to_vec(),
                mass: m[k],
            })
            .collect();
        let mu = LevyMeasure::dirac_sum(dim, atoms)?;
        let options = NonlocalOptions {
            cutoff: r_cut,
            ..NonlocalOptions::default()
        };
        store(result, assemble_nonlocal(&mu, spacing, options)?)
    })
}

/// Second-difference stencil along the `n_cols` integer columns of `σ`,
/// given column by column (`dim` entries each).
///
/// # Safety
/// `sigma` must hold `dim × n_cols` values; `result` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nlpme_stencil_new_local(
    dim: usize,
    n_cols: usize,
    sigma: *const f64,
    spacing: f64,
    result: *mut *mut NlpmeStencil,
) -> NlpmeStatus {
    guard(|| {
        let s = array(sigma, dim * n_cols, "sigma")?;
        let matrix = DMatrix::from_column_slice(dim, n_cols, s);
        store(result, assemble_local(&matrix, spacing)?)
    })
}

/// Stencil of the sum of two operators on the same lattice.
///
/// # Safety
/// `a`, `b` must be live handles and `result` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nlpme_stencil_combine(
    a: *const NlpmeStencil,
    b: *const NlpmeStencil,
    result: *mut *mut NlpmeStencil,
) -> NlpmeStatus {
    guard(|| {
        let sum = deref(a, "a")?.0.combine(&deref(b, "b")?.0)?;
        store(result, sum)
    })
}

/// # Safety
/// `stencil` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nlpme_stencil_free(stencil: *mut NlpmeStencil) {
    if !stencil.is_null() {
        drop(Box::from_raw(stencil));
    }
}

/// Number of stored offsets and total weight `Σ w_α`.
///
/// # Safety
/// `stencil` must be a live handle; outputs must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn nlpme_stencil_info(
    stencil: *const NlpmeStencil,
    len: *mut usize,
    total_weight: *mut f64,
    tail_mass: *mut f64,
) -> NlpmeStatus {
    guard(|| {
        let s = &deref(stencil, "stencil")?.0;
        *out(len, "len")? = s.len();
        *out(total_weight, "total_weight")? = s.total_weight();
        *out(tail_mass, "tail_mass")? = s.tail_mass();
        Ok(())
    })
}

/// `result = L_h u`.
///
/// # Safety
/// `u` and `result` must hold as many values as the grid has points.
#[no_mangle]
pub unsafe extern "C" fn nlpme_apply(
    stencil: *const NlpmeStencil,
    grid: *const NlpmeGrid,
    u: *const f64,
    result: *mut f64,
) -> NlpmeStatus {
    guard(|| {
        let s = &deref(stencil, "stencil")?.0;
        let g = grid_from(grid, u)?;
        let image = s.apply(&g)?;
        array_mut(result, g.len(), "result")?.copy_from_slice(image.values());
        Ok(())
    })
}

/// `r |r|^{m−1}`.
///
/// # Safety
/// `result` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nlpme_nonlinearity_new_power(m: f64, result: *mut *mut NlpmeNonlinearity) -> NlpmeStatus {
    guard(|| store_phi(result, Nonlinearity::power(m)?))
}

/// `c2 r` for `r < 0`, `c1 (r − latent)⁺` for `r ≥ 0`.
///
/// # Safety
/// `result` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nlpme_nonlinearity_new_stefan(
    c1: f64,
    c2: f64,
    latent: f64,
    result: *mut *mut NlpmeNonlinearity,
) -> NlpmeStatus {
    guard(|| store_phi(result, Nonlinearity::stefan(c1, c2, latent)?))
}

/// `a r`.
///
/// # Safety
/// `result` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nlpme_nonlinearity_new_linear(a: f64, result: *mut *mut NlpmeNonlinearity) -> NlpmeStatus {
    guard(|| store_phi(result, Nonlinearity::linear(a)?))
}

/// `φ_η` tabulated on `[−range, range]`.
///
/// # Safety
/// `phi` must be a live handle and `result` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nlpme_nonlinearity_mollify(
    phi: *const NlpmeNonlinearity,
    eta: f64,
    range: f64,
    result: *mut *mut NlpmeNonlinearity,
) -> NlpmeStatus {
    guard(|| {
        let smooth = deref(phi, "phi")?.0.mollify(eta, range)?;
        store_phi(result, smooth)
    })
}

/// # Safety
/// `phi` must be a live handle and `result` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nlpme_nonlinearity_eval(phi: *const NlpmeNonlinearity, r: f64, result: *mut f64) -> NlpmeStatus {
    guard(|| {
        *out(result, "result")? = deref(phi, "phi")?.0.eval(r);
        Ok(())
    })
}

/// # Safety
/// `phi` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nlpme_nonlinearity_free(phi: *mut NlpmeNonlinearity) {
    if !phi.is_null() {
        drop(Box::from_raw(phi));
    }
}

/// Largest monotone time step for data bounded by `max_abs`; `INFINITY`
/// for the zero operator.
///
/// # Safety
/// Handles must be live and `result` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nlpme_cfl_dt(
    stencil: *const NlpmeStencil,
    phi: *const NlpmeNonlinearity,
    max_abs: f64,
    result: *mut f64,
) -> NlpmeStatus {
    guard(|| {
        *out(result, "result")? = cfl_dt(&deref(stencil, "stencil")?.0, &deref(phi, "phi")?.0, max_abs)?;
        Ok(())
    })
}

/// One forward-Euler step `result = u + dt · L_h[φ(u)]`; fails with
/// `NLPME_CFL` when `dt` exceeds the monotonicity bound.
///
/// # Safety
/// `u` and `result` must hold as many values as the grid has points.
#[no_mangle]
pub unsafe extern "C" fn nlpme_step(
    stencil: *const NlpmeStencil,
    phi: *const NlpmeNonlinearity,
    grid: *const NlpmeGrid,
    dt: f64,
    u: *const f64,
    result: *mut f64,
) -> NlpmeStatus {
    guard(|| {
        let g = grid_from(grid, u)?;
        let next = step_explicit(&g, &deref(stencil, "stencil")?.0, &deref(phi, "phi")?.0, dt)?;
        array_mut(result, g.len(), "result")?.copy_from_slice(next.values());
        Ok(())
    })
}

/// Evolves `u0` to `t_final` with `Δt = dt` when `dt > 0` and `θ = cfl`
/// times the CFL bound otherwise; writes the final state and step count.
/// Absorbs the truncated tail when `absorb_tail` is nonzero.
///
/// # Safety
/// `u0` and `result` must hold as many values as the grid has points;
/// `steps` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nlpme_evolve(
    stencil: *const NlpmeStencil,
    phi: *const NlpmeNonlinearity,
    grid: *const NlpmeGrid,
    u0: *const f64,
    t_final: f64,
    dt: f64,
    cfl: f64,
    absorb_tail: i32,
    result: *mut f64,
    steps: *mut usize,
) -> NlpmeStatus {
    guard(|| {
        let g = grid_from(grid, u0)?;
        let time_step = if dt > 0.0 { TimeStep::Fixed(dt) } else { TimeStep::Cfl(cfl) };
        let tail = if absorb_tail != 0 { TailPolicy::Absorb } else { TailPolicy::Drop };
        let config = EvolutionConfig::new(time_step, t_final, g.boundary(), tail)?;
        let report = evolve(&g, &deref(stencil, "stencil")?.0, &deref(phi, "phi")?.0, &config)?;
        array_mut(result, g.len(), "result")?.copy_from_slice(report.final_state().values());
        *out(steps, "steps")? = report.meta.steps;
        Ok(())
    })
}

/// Solves `εv − L_h v = g` by the contraction iteration.
///
/// # Safety
/// `g` and `result` must hold as many values as the grid has points;
/// `iterations` and `residual` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn nlpme_solve_resolvent(
    stencil: *const NlpmeStencil,
    grid: *const NlpmeGrid,
    g: *const f64,
    epsilon: f64,
    tol: f64,
    result: *mut f64,
    iterations: *mut usize,
    residual: *mut f64,
) -> NlpmeStatus {
    guard(|| {
        let rhs = grid_from(grid, g)?;
        let sol = solve_resolvent(&rhs, &deref(stencil, "stencil")?.0, epsilon, tol)?;
        array_mut(result, rhs.len(), "result")?.copy_from_slice(sol.v.values());
        *out(iterations, "iterations")? = sol.iterations;
        *out(residual, "residual")? = sol.residual;
        Ok(())
    })
}
