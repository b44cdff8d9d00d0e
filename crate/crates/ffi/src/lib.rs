//! C ABI over the simulator.
//!
//! Every fallible call returns an [`MgStatus`]; on failure the message is kept
//! per thread and read back with [`mg_last_error`]. Handles are opaque and
//! must be released with their matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use motional_gate::config::{self, RunConfig};
use motional_gate::gate_analysis::{averaged_fidelity, reconstruct_gate, sqrt_swap, GateRun};
use motional_gate::hamiltonian::{CoupledTable, HamiltonianTable};
use motional_gate::physical_model::{self, DimensionlessModel, PhysicalParams, RampShape};
use motional_gate::run::{run, RunOptions};
use motional_gate::sp_basis::QuadratureGrid;
use motional_gate::tp_basis::{enumerate_basis, TwoParticleBasis};
use motional_gate::GateError;

/// Result codes shared by every entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidParameter = 3,
    Config = 4,
    Numerical = 5,
    Io = 6,
    OutOfRange = 7,
    Panic = 8,
    /// A verification run finished but at least one check failed.
    CheckFailed = 9,
}

impl From<&GateError> for MgStatus {
    fn from(e: &GateError) -> Self {
        match e {
            GateError::InvalidParameter { .. } | GateError::UnknownLabel(_) => MgStatus::InvalidParameter,
            GateError::ConfigSyntax { .. } | GateError::UnknownKey(_) | GateError::Range { .. } => MgStatus::Config,
            GateError::Io(_) => MgStatus::Io,
            _ => MgStatus::Numerical,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn fail(status: MgStatus, msg: impl Into<String>) -> MgStatus {
    set_error(msg);
    status
}

fn gate_error(e: GateError) -> MgStatus {
    let status = MgStatus::from(&e);
    fail(status, format!("{}: {e}", e.category()))
}

/// Runs `f`, converting panics into `MgStatus::Panic`.
fn guarded(f: impl FnOnce() -> MgStatus) -> MgStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(MgStatus::Panic, "internal panic"),
    }
}

unsafe fn read_str<'a>(p: *const c_char) -> Result<&'a str, MgStatus> {
    if p.is_null() {
        return Err(fail(MgStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(MgStatus::InvalidUtf8, "string argument is not UTF-8"))
}

/// Message for the most recent failure on this thread, or NULL. Valid until the next call.
#[no_mangle]
pub extern "C" fn mg_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Opaque run configuration.
pub struct MgConfig {
    inner: RunConfig,
}

/// Opaque simulator: a configuration plus its basis and tabulated Hamiltonian.
pub struct MgSimulator {
    model: DimensionlessModel,
    basis: TwoParticleBasis,
    table: CoupledTable,
    settings: motional_gate::propagator::PropagationSettings,
}

/// Opaque reconstructed gate.
pub struct MgGate {
    run: GateRun,
    fidelity: f64,
}

unsafe fn store<T>(out: *mut *mut T, value: T) {
    *out = Box::into_raw(Box::new(value));
}

/// Builds a configuration from a bundled preset (`fig2`, `fig3`, `fig4`, `fig6a`, `fig6b`).
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mg_config_from_preset(name: *const c_char, out: *mut *mut MgConfig) -> MgStatus {
    guarded(|| {
        if out.is_null() {
            return fail(MgStatus::NullPointer, "out is null");
        }
        let name = match read_str(name) {
            Ok(s) => s,
            Err(s) => return s,
        };
        match config::preset(name) {
            Ok(c) => {
                store(out, MgConfig { inner: c });
                MgStatus::Ok
            }
            Err(e) => gate_error(e),
        }
    })
}

/// Parses a `section.key = value` document on top of the defaults.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mg_config_parse(text: *const c_char, out: *mut *mut MgConfig) -> MgStatus {
    guarded(|| {
        if out.is_null() {
            return fail(MgStatus::NullPointer, "out is null");
        }
        let text = match read_str(text) {
            Ok(s) => s,
            Err(s) => return s,
        };
        match config::parse_config(text) {
            Ok(c) => {
                store(out, MgConfig { inner: c });
                MgStatus::Ok
            }
            Err(e) => gate_error(e),
        }
    })
}

/// Applies further `section.key = value` lines to an existing configuration.
/// The configuration is left unchanged on failure.
///
/// # Safety
/// `cfg` must come from this library; `text` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn mg_config_apply(cfg: *mut MgConfig, text: *const c_char) -> MgStatus {
    guarded(|| {
        let Some(cfg) = cfg.as_mut() else { return fail(MgStatus::NullPointer, "cfg is null") };
        let text = match read_str(text) {
            Ok(s) => s,
            Err(s) => return s,
        };
        match config::parse_onto(cfg.inner.clone(), text) {
            Ok(c) => {
                cfg.inner = c;
                MgStatus::Ok
            }
            Err(e) => gate_error(e),
        }
    })
}

/// Dimensionless contact coupling `g` derived from the configuration.
///
/// # Safety
/// `cfg` must come from this library; `g` must be valid.
#[no_mangle]
pub unsafe extern "C" fn mg_config_coupling(cfg: *const MgConfig, g: *mut f64) -> MgStatus {
    guarded(|| {
        let (Some(cfg), false) = (cfg.as_ref(), g.is_null()) else { return fail(MgStatus::NullPointer, "null argument") };
        match cfg.inner.model() {
            Ok(m) => {
                *g = m.g;
                MgStatus::Ok
            }
            Err(e) => gate_error(e),
        }
    })
}

/// Runs the configured experiment and writes its artifacts to `output_dir`
/// (the configured directory when NULL).
///
/// # Safety
/// `cfg` must come from this library; `output_dir` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn mg_config_run(cfg: *const MgConfig, output_dir: *const c_char) -> MgStatus {
    guarded(|| {
        let Some(cfg) = cfg.as_ref() else { return fail(MgStatus::NullPointer, "cfg is null") };
        let mut c = cfg.inner.clone();
        if !output_dir.is_null() {
            match read_str(output_dir) {
                Ok(s) => c.output = PathBuf::from(s),
                Err(s) => return s,
            }
        }
        match run(&c, &RunOptions::default()) {
            Ok(o) if o.passed => MgStatus::Ok,
            Ok(_) => fail(MgStatus::CheckFailed, "one or more checks failed"),
            Err(e) => gate_error(e),
        }
    })
}

/// # Safety
/// `cfg` must come from this library or be NULL; it must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mg_config_free(cfg: *mut MgConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Builds the basis and the Hamiltonian table for the configured trajectory.
///
/// # Safety
/// `cfg` must come from this library; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn mg_simulator_new(cfg: *const MgConfig, out: *mut *mut MgSimulator) -> MgStatus {
    guarded(|| {
        let (Some(cfg), false) = (cfg.as_ref(), out.is_null()) else { return fail(MgStatus::NullPointer, "null argument") };
        let c = &cfg.inner;
        let build = || -> motional_gate::Result<MgSimulator> {
            let model = c.model()?;
            let basis = enumerate_basis(c.basis.n_sp)?;
            let t = model.trajectory;
            let grid = match c.basis.quadrature_points {
                0 => QuadratureGrid::for_separation(t.a_max)?,
                m => QuadratureGrid::new(t.a_max + motional_gate::sp_basis::GRID_MARGIN, m)?,
            };
            let knots = if t.a_max > t.a_min { ((t.a_max - t.a_min) / c.basis.knot_spacing).ceil() as usize + 1 } else { 1 };
            let table = HamiltonianTable::build(&basis, t.a_min, t.a_max, knots.max(if knots > 1 { 4 } else { 1 }), &grid, c.basis.fd_step)?
                .for_coupling(model.g)?;
            Ok(MgSimulator { model, basis, table, settings: c.propagation_settings() })
        };
        match build() {
            Ok(s) => {
                store(out, s);
                MgStatus::Ok
            }
            Err(e) => gate_error(e),
        }
    })
}

/// Dimension of the two-particle basis.
///
/// # Safety
/// `sim` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn mg_simulator_dim(sim: *const MgSimulator) -> usize {
    sim.as_ref().map_or(0, |s| s.basis.dim())
}

/// Propagates the four computational inputs and reconstructs the gate.
///
/// # Safety
/// `sim` must come from this library; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn mg_simulator_gate(sim: *const MgSimulator, out: *mut *mut MgGate) -> MgStatus {
    guarded(|| {
        let (Some(sim), false) = (sim.as_ref(), out.is_null()) else { return fail(MgStatus::NullPointer, "null argument") };
        match reconstruct_gate(&sim.model, &sim.basis, &sim.table, &sim.settings) {
            Ok(run) => {
                let fidelity = averaged_fidelity(&run.gate, &sqrt_swap());
                store(out, MgGate { run, fidelity });
                MgStatus::Ok
            }
            Err(e) => gate_error(e),
        }
    })
}

/// # Safety
/// `sim` must come from this library or be NULL; it must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mg_simulator_free(sim: *mut MgSimulator) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Gate element `U[row][col]` over `{00, 01, 10, 11}`.
///
/// # Safety
/// `gate` must come from this library; `re` and `im` must be valid.
#[no_mangle]
pub unsafe extern "C" fn mg_gate_element(gate: *const MgGate, row: usize, col: usize, re: *mut f64, im: *mut f64) -> MgStatus {
    guarded(|| {
        let (Some(gate), false, false) = (gate.as_ref(), re.is_null(), im.is_null()) else {
            return fail(MgStatus::NullPointer, "null argument");
        };
        if row > 3 || col > 3 {
            return fail(MgStatus::OutOfRange, format!("index ({row}, {col}) outside 4x4"));
        }
        let z = gate.run.gate.u[(row, col)];
        *re = z.re;
        *im = z.im;
        MgStatus::Ok
    })
}

/// Averaged fidelity against √SWAP.
///
/// # Safety
/// `gate` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn mg_gate_fidelity(gate: *const MgGate) -> f64 {
    gate.as_ref().map_or(f64::NAN, |g| g.fidelity)
}

/// Population lost from the computational subspace for input column `col`.
///
/// # Safety
/// `gate` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn mg_gate_leakage(gate: *const MgGate, col: usize) -> f64 {
    match gate.as_ref() {
        Some(g) if col < 4 => g.run.gate.leakage[col],
        _ => f64::NAN,
    }
}

/// # Safety
/// `gate` must come from this library or be NULL; it must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mg_gate_free(gate: *mut MgGate) {
    if !gate.is_null() {
        drop(Box::from_raw(gate));
    }
}

/// Double-well potential `V(x; a)` in oscillator units.
#[no_mangle]
pub extern "C" fn mg_potential(x: f64, a: f64) -> f64 {
    physical_model::potential(x, a)
}

/// Contact coupling for SI inputs (rad/s, kg, m).
///
/// # Safety
/// `g` must be valid.
#[no_mangle]
pub unsafe extern "C" fn mg_coupling(omega_x: f64, omega_p: f64, mass: f64, a_t: f64, g: *mut f64) -> MgStatus {
    guarded(|| {
        if g.is_null() {
            return fail(MgStatus::NullPointer, "g is null");
        }
        let p = PhysicalParams { omega_x, omega_p, mass, a_t, a_max: 5.0, a_min: 1.0, t_r: 1.0, t_i: 0.0, ramp: RampShape::default() };
        match physical_model::derive_dimensionless(&p) {
            Ok(m) => {
                *g = m.g;
                MgStatus::Ok
            }
            Err(e) => gate_error(e),
        }
    })
}
