//! C ABI over `nsdde`.
//!
//! Every fallible call returns an [`NsddeStatus`]; on failure the message is
//! available from [`nsdde_last_error`] on the same thread until the next
//! failing call. Objects cross the boundary as opaque pointers and must be
//! released with the matching `*_free` function.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::sync::OnceLock;

use nsdde::analysis::{fit_order, theory_rate_jump, ErrorTable, OrderFit};
use nsdde::em::{em_continuous_brownian, em_continuous_jump};
use nsdde::harness::{parse_config, run_experiment, ExperimentConfig, RunOutcome};
use nsdde::model::{build_grid, InitialSegment, NeutralModel, NoiseTerm};
use nsdde::noise::{sample_brownian, sample_jumps, BrownianIncrements, SeedPlan};
use nsdde::registry::{build_model, list_models};
use nsdde::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NsddeStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Config = 3,
    Nesting = 4,
    Grid = 5,
    Model = 6,
    ExplosionBudget = 7,
    Degenerate = 8,
    OutOfRange = 9,
    Io = 10,
    BufferTooSmall = 11,
    Index = 12,
    Panic = 13,
}

impl From<&Error> for NsddeStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Schema { .. } => NsddeStatus::Config,
            Error::Nesting(_) | Error::NonNestedSteps(_) => NsddeStatus::Nesting,
            Error::NonCommensurate { .. }
            | Error::StepTooLarge { .. }
            | Error::InvalidGrid(_)
            | Error::IndivisibleFactor { .. } => NsddeStatus::Grid,
            Error::DimensionMismatch(_)
            | Error::InvalidModel(_)
            | Error::UnknownModel(_)
            | Error::NoJumpPart
            | Error::NoBrownianPart
            | Error::NotDeterministic
            | Error::OutOfDomain { .. } => NsddeStatus::Model,
            Error::ExplosionBudgetExceeded { .. } => NsddeStatus::ExplosionBudget,
            Error::DegenerateInput(_) => NsddeStatus::Degenerate,
            Error::OutOfRange(_) => NsddeStatus::OutOfRange,
            Error::Io { .. } | Error::Json(_) | Error::Csv(_) => NsddeStatus::Io,
        }
    }
}

/// Which table of a finished run to read.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NsddeTable {
    StrongError = 0,
    Displacement = 1,
    SupMoment = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NsddeErrorRow {
    pub h: f64,
    pub p: f64,
    pub n_paths: u64,
    pub err: f64,
    /// Monte Carlo standard error of `err`.
    pub std_error: f64,
    pub exploded_frac: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NsddeOrderFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub n_points: u64,
}

impl From<OrderFit> for NsddeOrderFit {
    fn from(f: OrderFit) -> Self {
        Self {
            slope: f.slope,
            intercept: f.intercept,
            r_squared: f.r_squared,
            n_points: f.n_points as u64,
        }
    }
}

pub struct NsddeConfig(ExperimentConfig);

pub struct NsddeRun(RunOutcome);

pub struct NsddeModel(NeutralModel);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn fail(status: NsddeStatus, msg: impl Into<String>) -> NsddeStatus {
    set_error(msg.into());
    status
}

fn fail_with(e: Error) -> NsddeStatus {
    let status = NsddeStatus::from(&e);
    fail(status, e.to_string())
}

fn guard(f: impl FnOnce() -> NsddeStatus) -> NsddeStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(NsddeStatus::Panic, msg)
        }
    }
}

unsafe fn read_str<'a>(p: *const c_char) -> Result<&'a str, NsddeStatus> {
    if p.is_null() {
        return Err(fail(NsddeStatus::NullArgument, "null string argument"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(NsddeStatus::InvalidUtf8, "string argument is not UTF-8"))
}

macro_rules! non_null {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            return fail(NsddeStatus::NullArgument, concat!("`", stringify!($p), "` is null"));
        })+
    };
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn nsdde_version() -> *const c_char {
    static V: OnceLock<CString> = OnceLock::new();
    V.get_or_init(|| CString::new(nsdde::VERSION).unwrap())
        .as_ptr()
}

/// Message of the last failure on this thread, or NULL. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn nsdde_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn nsdde_model_count() -> usize {
    list_models().len()
}

/// Registered model id at `index`, or NULL past the end. Static storage.
#[no_mangle]
pub extern "C" fn nsdde_model_id(index: usize) -> *const c_char {
    static IDS: OnceLock<Vec<CString>> = OnceLock::new();
    let ids = IDS.get_or_init(|| {
        list_models()
            .iter()
            .map(|m| CString::new(m.id).unwrap())
            .collect()
    });
    ids.get(index).map_or(ptr::null(), |c| c.as_ptr())
}

/// # Safety
/// `toml` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nsdde_config_parse(
    toml: *const c_char,
    out: *mut *mut NsddeConfig,
) -> NsddeStatus {
    guard(|| {
        non_null!(out);
        let text = match read_str(toml) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match parse_config(text) {
            Ok(cfg) => {
                *out = Box::into_raw(Box::new(NsddeConfig(cfg)));
                NsddeStatus::Ok
            }
            Err(e) => fail_with(e),
        }
    })
}

/// # Safety
/// `cfg` must come from [`nsdde_config_parse`].
#[no_mangle]
pub unsafe extern "C" fn nsdde_config_set_seed(cfg: *mut NsddeConfig, seed: u64) -> NsddeStatus {
    non_null!(cfg);
    (*cfg).0.monte_carlo.seed = seed;
    NsddeStatus::Ok
}

/// Sets the worker count; 0 restores the default pool.
///
/// # Safety
/// `cfg` must come from [`nsdde_config_parse`].
#[no_mangle]
pub unsafe extern "C" fn nsdde_config_set_workers(
    cfg: *mut NsddeConfig,
    workers: usize,
) -> NsddeStatus {
    non_null!(cfg);
    (*cfg).0.monte_carlo.workers = (workers > 0).then_some(workers);
    NsddeStatus::Ok
}

/// # Safety
/// `cfg` must come from [`nsdde_config_parse`] or be NULL.
#[no_mangle]
pub unsafe extern "C" fn nsdde_config_free(cfg: *mut NsddeConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Runs the configured experiments, writing artifacts into `out_dir`.
/// A failed acceptance gate is not an error; see [`nsdde_run_gates_passed`].
///
/// # Safety
/// `cfg` must be a live config, `out_dir` a NUL-terminated path, `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn nsdde_run(
    cfg: *const NsddeConfig,
    out_dir: *const c_char,
    out: *mut *mut NsddeRun,
) -> NsddeStatus {
    guard(|| {
        non_null!(cfg, out);
        let dir = match read_str(out_dir) {
            Ok(d) => d,
            Err(s) => return s,
        };
        match run_experiment(&(*cfg).0, Path::new(dir)) {
            Ok(run) => {
                *out = Box::into_raw(Box::new(NsddeRun(run)));
                NsddeStatus::Ok
            }
            Err(e) => fail_with(e),
        }
    })
}

/// # Safety
/// `run` must come from [`nsdde_run`] or be NULL.
#[no_mangle]
pub unsafe extern "C" fn nsdde_run_free(run: *mut NsddeRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// # Safety
/// `run` must be a live run.
#[no_mangle]
pub unsafe extern "C" fn nsdde_run_gates_passed(run: *const NsddeRun) -> bool {
    !run.is_null() && (*run).0.gates_passed()
}

fn table(run: &RunOutcome, which: NsddeTable, p_index: usize) -> Option<ErrorTable> {
    match which {
        NsddeTable::StrongError => run.study.errors.get(p_index).cloned(),
        NsddeTable::Displacement => run
            .study
            .moments
            .get(p_index)
            .map(|m| m.displacement_table()),
        NsddeTable::SupMoment => run.study.moments.get(p_index).map(|m| m.sup_moment_table()),
    }
}

/// Number of rows in table `which` for the `p_index`-th moment order.
///
/// # Safety
/// `run` must be a live run and `rows` writable.
#[no_mangle]
pub unsafe extern "C" fn nsdde_run_table_len(
    run: *const NsddeRun,
    which: NsddeTable,
    p_index: usize,
    rows: *mut usize,
) -> NsddeStatus {
    non_null!(run, rows);
    match table(&(*run).0, which, p_index) {
        Some(t) => {
            *rows = t.rows.len();
            NsddeStatus::Ok
        }
        None => fail(
            NsddeStatus::Index,
            format!("no {which:?} table for p index {p_index}"),
        ),
    }
}

/// # Safety
/// `run` must be a live run and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nsdde_run_table_row(
    run: *const NsddeRun,
    which: NsddeTable,
    p_index: usize,
    row: usize,
    out: *mut NsddeErrorRow,
) -> NsddeStatus {
    non_null!(run, out);
    let Some(t) = table(&(*run).0, which, p_index) else {
        return fail(
            NsddeStatus::Index,
            format!("no {which:?} table for p index {p_index}"),
        );
    };
    let Some(r) = t.rows.get(row) else {
        return fail(
            NsddeStatus::Index,
            format!("row {row} out of {}", t.rows.len()),
        );
    };
    *out = NsddeErrorRow {
        h: r.h,
        p: r.p,
        n_paths: r.n_paths as u64,
        err: r.err,
        std_error: r.stderr,
        exploded_frac: r.exploded_frac,
    };
    NsddeStatus::Ok
}

/// Order fit of a run table.
///
/// # Safety
/// `run` must be a live run and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nsdde_run_fit(
    run: *const NsddeRun,
    which: NsddeTable,
    p_index: usize,
    out: *mut NsddeOrderFit,
) -> NsddeStatus {
    non_null!(run, out);
    let Some(t) = table(&(*run).0, which, p_index) else {
        return fail(
            NsddeStatus::Index,
            format!("no {which:?} table for p index {p_index}"),
        );
    };
    match t.fit() {
        Ok(f) => {
            *out = f.into();
            NsddeStatus::Ok
        }
        Err(e) => fail_with(e),
    }
}

/// Builds a registered model. `names[i]` is set to `values[i]`; pass
/// `n = 0` for defaults.
///
/// # Safety
/// `id` must be NUL-terminated; `names` and `values` must hold `n` entries;
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nsdde_model_new(
    id: *const c_char,
    names: *const *const c_char,
    values: *const f64,
    n: usize,
    out: *mut *mut NsddeModel,
) -> NsddeStatus {
    guard(|| {
        non_null!(out);
        let id = match read_str(id) {
            Ok(s) => s,
            Err(s) => return s,
        };
        let mut params = BTreeMap::new();
        if n > 0 {
            non_null!(names, values);
            for i in 0..n {
                let name = match read_str(*names.add(i)) {
                    Ok(s) => s,
                    Err(s) => return s,
                };
                params.insert(name.to_string(), *values.add(i));
            }
        }
        match build_model(id, &params) {
            Ok(m) => {
                *out = Box::into_raw(Box::new(NsddeModel(m)));
                NsddeStatus::Ok
            }
            Err(e) => fail_with(e),
        }
    })
}

/// # Safety
/// `model` must come from [`nsdde_model_new`] or be NULL.
#[no_mangle]
pub unsafe extern "C" fn nsdde_model_free(model: *mut NsddeModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// State dimension of `model`, or 0 for NULL.
///
/// # Safety
/// `model` must be a live model or NULL.
#[no_mangle]
pub unsafe extern "C" fn nsdde_model_dim(model: *const NsddeModel) -> usize {
    if model.is_null() {
        0
    } else {
        (*model).0.dim()
    }
}

/// Simulates one continuous EM path from the constant segment `xi` and
/// writes its states at the fine nodes of `[0, T]` row by row. `len`
/// receives the number of values needed; if `cap` is smaller nothing is
/// written and `NSDDE_STATUS_BUFFER_TOO_SMALL` is returned.
///
/// # Safety
/// `model` must be live, `out` must hold `cap` doubles (may be NULL when
/// `cap` is 0), `len` must be writable.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn nsdde_simulate_path(
    model: *const NsddeModel,
    tau: f64,
    horizon: f64,
    m: usize,
    refine: usize,
    xi: f64,
    seed: u64,
    path: u64,
    out: *mut f64,
    cap: usize,
    len: *mut usize,
) -> NsddeStatus {
    guard(|| {
        non_null!(model, len);
        let model = &(*model).0;
        let result = (|| {
            let grid = build_grid(tau, horizon, m, refine)?;
            let seg = InitialSegment::constant(vec![xi; model.dim()], tau)?;
            let plan = SeedPlan::new(seed);
            match model.noise() {
                NoiseTerm::Jump(_) => {
                    let stream = sample_jumps(&grid, model, &plan, path)?;
                    em_continuous_jump(model, &seg, &grid, &stream)
                }
                NoiseTerm::Brownian { dim, .. } => {
                    let inc = sample_brownian(&grid, *dim, &plan, path);
                    em_continuous_brownian(model, &seg, &grid, &inc)
                }
                NoiseTerm::None => {
                    let none = BrownianIncrements::from_vec(grid.fine_step(), 1, Vec::new())?;
                    em_continuous_brownian(model, &seg, &grid, &none)
                }
            }
        })();
        let y = match result {
            Ok(y) => y,
            Err(e) => return fail_with(e),
        };
        let values: Vec<f64> = y.forward().flatten().copied().collect();
        *len = values.len();
        if cap < values.len() {
            return fail(
                NsddeStatus::BufferTooSmall,
                format!("need {} values, buffer holds {cap}", values.len()),
            );
        }
        non_null!(out);
        ptr::copy_nonoverlapping(values.as_ptr(), out, values.len());
        NsddeStatus::Ok
    })
}

/// Least-squares slope of `log2 err` against `log2 h`.
///
/// # Safety
/// `h` and `err` must hold `n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nsdde_fit_order(
    h: *const f64,
    err: *const f64,
    n: usize,
    out: *mut NsddeOrderFit,
) -> NsddeStatus {
    guard(|| {
        non_null!(out);
        if n > 0 {
            non_null!(h, err);
        }
        let points: Vec<(f64, f64)> = (0..n).map(|i| (*h.add(i), *err.add(i))).collect();
        match fit_order(&points) {
            Ok(f) => {
                *out = f.into();
                NsddeStatus::Ok
            }
            Err(e) => fail_with(e),
        }
    })
}

/// `1 / (1 + theta)^floor(T / tau)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nsdde_theory_rate_jump(
    p: f64,
    theta: f64,
    horizon: f64,
    tau: f64,
    out: *mut f64,
) -> NsddeStatus {
    non_null!(out);
    match theory_rate_jump(p, theta, horizon, tau) {
        Ok(v) => {
            *out = v;
            NsddeStatus::Ok
        }
        Err(e) => fail_with(e),
    }
}
