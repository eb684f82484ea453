//! C ABI for the `vrla-ageing` simulator.
//!
//! Scenarios and results are opaque handles owned by the caller and released
//! with the matching `*_free` function. Every fallible call returns a
//! [`VrlaStatus`]; on failure [`vrla_last_error`] describes what went wrong on
//! the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use vrla_ageing::config::{Overrides, RunConfig};
use vrla_ageing::control::Policy;
use vrla_ageing::engine::{self, Scenario, SimResult};
use vrla_ageing::profiles::{ArchetypeSpec, UseArchetype};
use vrla_ageing::{battery, Error};

/// Result of a fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VrlaStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// Invalid parameters, configuration or input data.
    Validation = 2,
    /// The simulation or calibration failed while running.
    Runtime = 3,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 4,
    /// A caller-provided buffer is too small.
    BufferTooSmall = 5,
    /// An internal panic was caught at the boundary.
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VrlaPolicy {
    /// Fixed limits every day.
    Static = 0,
    /// Full recharge every D days, reduced limits otherwise.
    Adaptive = 1,
}

/// Opaque scenario handle.
pub struct VrlaScenario {
    inner: Scenario,
}

/// Opaque result handle.
pub struct VrlaResult {
    inner: SimResult,
}

/// Headline figures of one run.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct VrlaSummary {
    pub lifetime_years: f64,
    pub fec: f64,
    pub corrosion_pct: f64,
    pub corrosion_loss_ah: f64,
    pub active_mass_loss_ah: f64,
    pub final_soh_pct: f64,
    pub min_soc: f64,
    /// Days with at least one full recharge over all simulated days.
    pub full_recharge_day_fraction: f64,
    pub load_loss_events: u64,
    pub days_simulated: u32,
    /// Non-zero when the horizon was reached before end of life.
    pub censored: u8,
}

/// Capacity loss at the end of one day.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct VrlaDayCapacity {
    pub day: u32,
    pub corrosion_ah: f64,
    pub active_mass_ah: f64,
    pub total_ah: f64,
    pub soh_pct: f64,
}

/// Paired run of two policies.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct VrlaComparison {
    pub base: VrlaSummary,
    pub alt: VrlaSummary,
    pub lifetime_ratio: f64,
    pub corrosion_reduction: f64,
    pub active_mass_ratio: f64,
    pub alt_soh_at_base_eol_pct: f64,
    /// Non-zero when the alternative run had no more capacity loss than the
    /// base run on every common day.
    pub alt_healthier_every_day: u8,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    let c = CString::new(text).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: VrlaStatus, msg: impl Into<String>) -> VrlaStatus {
    set_error(msg);
    status
}

fn from_error(e: &Error) -> VrlaStatus {
    let status = if e.is_validation() {
        VrlaStatus::Validation
    } else {
        VrlaStatus::Runtime
    };
    fail(status, e.to_string())
}

fn guard(f: impl FnOnce() -> VrlaStatus) -> VrlaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => fail(VrlaStatus::Panic, "internal panic"),
    }
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, VrlaStatus> {
    if p.is_null() {
        return Err(fail(VrlaStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(VrlaStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

fn summary(r: &SimResult) -> VrlaSummary {
    let s = engine::RunSummary::from(r);
    VrlaSummary {
        lifetime_years: r.lifetime_years,
        fec: r.fec,
        corrosion_pct: r.corrosion_share_pct,
        corrosion_loss_ah: r.corrosion_loss_ah,
        active_mass_loss_ah: r.active_mass_loss_ah,
        final_soh_pct: r.final_soh_pct,
        min_soc: r.min_soc,
        full_recharge_day_fraction: s.full_recharge_day_fraction,
        load_loss_events: r.load_loss_events.len() as u64,
        days_simulated: r.days_simulated,
        censored: u8::from(r.censored),
    }
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn vrla_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn vrla_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates a scenario for a synthetic household (`"high"`, `"moderate"`,
/// `"low"` or `"infrequent"`) with default model constants. `policy` is a
/// [`VrlaPolicy`] value.
///
/// # Safety
/// `archetype` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn vrla_scenario_new_archetype(
    archetype: *const c_char,
    policy: u32,
    out: *mut *mut VrlaScenario,
) -> VrlaStatus {
    guard(|| {
        if out.is_null() {
            return fail(VrlaStatus::NullPointer, "out is null");
        }
        let name = match read_str(archetype, "archetype") {
            Ok(s) => s,
            Err(s) => return s,
        };
        let kind: UseArchetype = match name.parse() {
            Ok(k) => k,
            Err(e) => return from_error(&e),
        };
        let policy = match policy {
            p if p == VrlaPolicy::Static as u32 => Policy::BboxxStatic,
            p if p == VrlaPolicy::Adaptive as u32 => Policy::Adaptive,
            p => return fail(VrlaStatus::Validation, format!("unknown policy {p}")),
        };
        let inner = Scenario::archetype(name, ArchetypeSpec::defaults(kind), policy);
        *out = Box::into_raw(Box::new(VrlaScenario { inner }));
        VrlaStatus::Ok
    })
}

/// Creates the scenario called `name` from the text of a TOML run file.
/// Relative paths in the run file resolve against `base_dir` (may be null
/// for the working directory).
///
/// # Safety
/// String arguments must be NUL-terminated; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn vrla_scenario_from_toml(
    run_toml: *const c_char,
    name: *const c_char,
    base_dir: *const c_char,
    out: *mut *mut VrlaScenario,
) -> VrlaStatus {
    guard(|| {
        if out.is_null() {
            return fail(VrlaStatus::NullPointer, "out is null");
        }
        let (text, name) = match (read_str(run_toml, "run_toml"), read_str(name, "name")) {
            (Ok(t), Ok(n)) => (t, n),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        let base = if base_dir.is_null() {
            "."
        } else {
            match read_str(base_dir, "base_dir") {
                Ok(b) => b,
                Err(s) => return s,
            }
        };
        let resolved = RunConfig::parse(text).and_then(|c| c.resolve(Path::new(base), &Overrides::default()));
        match resolved {
            Ok(run) => match run.scenarios.into_iter().find(|s| s.name == name) {
                Some(inner) => {
                    *out = Box::into_raw(Box::new(VrlaScenario { inner }));
                    VrlaStatus::Ok
                }
                None => fail(VrlaStatus::Validation, format!("no scenario named `{name}`")),
            },
            Err(e) => from_error(&e),
        }
    })
}

unsafe fn scenario_mut<'a>(s: *mut VrlaScenario) -> Result<&'a mut Scenario, VrlaStatus> {
    s.as_mut()
        .map(|s| &mut s.inner)
        .ok_or_else(|| fail(VrlaStatus::NullPointer, "scenario is null"))
}

/// # Safety
/// `scenario` must come from a `vrla_scenario_new_*` call and not be freed.
#[no_mangle]
pub unsafe extern "C" fn vrla_scenario_set_seed(scenario: *mut VrlaScenario, seed: u64) -> VrlaStatus {
    guard(|| match scenario_mut(scenario) {
        Ok(s) => {
            s.seed = seed;
            VrlaStatus::Ok
        }
        Err(st) => st,
    })
}

/// Sets the time step (s); it must divide one day.
///
/// # Safety
/// `scenario` must come from a `vrla_scenario_new_*` call and not be freed.
#[no_mangle]
pub unsafe extern "C" fn vrla_scenario_set_dt(scenario: *mut VrlaScenario, dt_s: f64) -> VrlaStatus {
    guard(|| match scenario_mut(scenario) {
        Ok(s) => {
            if let Err(e) = vrla_ageing::profiles::steps_per_day(dt_s) {
                return from_error(&e);
            }
            if let engine::ProfileSpec::Series(_) = s.profile {
                return fail(VrlaStatus::Validation, "time step of a recorded profile is fixed");
            }
            s.dt_s = dt_s;
            VrlaStatus::Ok
        }
        Err(st) => st,
    })
}

/// # Safety
/// `scenario` must come from a `vrla_scenario_new_*` call and not be freed.
#[no_mangle]
pub unsafe extern "C" fn vrla_scenario_set_max_years(scenario: *mut VrlaScenario, years: f64) -> VrlaStatus {
    guard(|| match scenario_mut(scenario) {
        Ok(s) => {
            if !(years > 0.0 && years.is_finite()) {
                return fail(VrlaStatus::Validation, "max_years must be positive");
            }
            s.max_years = years;
            VrlaStatus::Ok
        }
        Err(st) => st,
    })
}

/// # Safety
/// `scenario` must be null or come from a `vrla_scenario_new_*` call, and
/// must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn vrla_scenario_free(scenario: *mut VrlaScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Runs a scenario until end of life or its horizon.
///
/// # Safety
/// `scenario` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn vrla_run(scenario: *const VrlaScenario, out: *mut *mut VrlaResult) -> VrlaStatus {
    guard(|| {
        let Some(s) = scenario.as_ref() else {
            return fail(VrlaStatus::NullPointer, "scenario is null");
        };
        if out.is_null() {
            return fail(VrlaStatus::NullPointer, "out is null");
        }
        match engine::run_scenario(&s.inner) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(VrlaResult { inner }));
                VrlaStatus::Ok
            }
            Err(e) => from_error(&e),
        }
    })
}

/// # Safety
/// `result` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn vrla_result_summary(result: *const VrlaResult, out: *mut VrlaSummary) -> VrlaStatus {
    guard(|| match (result.as_ref(), out.as_mut()) {
        (Some(r), Some(o)) => {
            *o = summary(&r.inner);
            VrlaStatus::Ok
        }
        _ => fail(VrlaStatus::NullPointer, "result or out is null"),
    })
}

/// Number of days in the capacity trajectory, or 0 for a null handle.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn vrla_result_trajectory_len(result: *const VrlaResult) -> usize {
    result.as_ref().map_or(0, |r| r.inner.capacity_trajectory.len())
}

/// Copies the capacity trajectory into `buf`, which holds `capacity`
/// entries. `written` receives the number of entries copied, or the number
/// required when the buffer is too small.
///
/// # Safety
/// `buf` must point to `capacity` writable entries; `written` must be valid.
#[no_mangle]
pub unsafe extern "C" fn vrla_result_trajectory(
    result: *const VrlaResult,
    buf: *mut VrlaDayCapacity,
    capacity: usize,
    written: *mut usize,
) -> VrlaStatus {
    guard(|| {
        let (Some(r), Some(n)) = (result.as_ref(), written.as_mut()) else {
            return fail(VrlaStatus::NullPointer, "result or written is null");
        };
        let days = &r.inner.capacity_trajectory;
        *n = days.len();
        if capacity < days.len() {
            return fail(
                VrlaStatus::BufferTooSmall,
                format!("trajectory has {} days, buffer holds {capacity}", days.len()),
            );
        }
        if days.is_empty() {
            return VrlaStatus::Ok;
        }
        if buf.is_null() {
            return fail(VrlaStatus::NullPointer, "buf is null");
        }
        for (i, d) in days.iter().enumerate() {
            *buf.add(i) = VrlaDayCapacity {
                day: d.day,
                corrosion_ah: d.corrosion_ah,
                active_mass_ah: d.active_mass_ah,
                total_ah: d.total_ah,
                soh_pct: d.soh_pct,
            };
        }
        VrlaStatus::Ok
    })
}

/// Full result as JSON. Release the string with [`vrla_string_free`].
///
/// # Safety
/// `result` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn vrla_result_json(result: *const VrlaResult, out: *mut *mut c_char) -> VrlaStatus {
    guard(|| {
        let Some(r) = result.as_ref() else {
            return fail(VrlaStatus::NullPointer, "result is null");
        };
        if out.is_null() {
            return fail(VrlaStatus::NullPointer, "out is null");
        }
        match serde_json::to_string(&r.inner) {
            Ok(text) => {
                *out = CString::new(text).unwrap_or_default().into_raw();
                VrlaStatus::Ok
            }
            Err(e) => fail(VrlaStatus::Runtime, e.to_string()),
        }
    })
}

/// # Safety
/// `s` must be null or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn vrla_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `result` must be null or a live handle, and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn vrla_result_free(result: *mut VrlaResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Runs two scenarios that differ only in policy and compares them.
///
/// # Safety
/// Both scenarios must be live handles and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn vrla_compare(
    base: *const VrlaScenario,
    alt: *const VrlaScenario,
    out: *mut VrlaComparison,
) -> VrlaStatus {
    guard(|| {
        let (Some(b), Some(a), Some(o)) = (base.as_ref(), alt.as_ref(), out.as_mut()) else {
            return fail(VrlaStatus::NullPointer, "base, alt or out is null");
        };
        match engine::compare_strategies(&b.inner, &a.inner) {
            Ok((report, rb, ra)) => {
                *o = VrlaComparison {
                    base: summary(&rb),
                    alt: summary(&ra),
                    lifetime_ratio: report.lifetime_ratio,
                    corrosion_reduction: report.corrosion_reduction,
                    active_mass_ratio: report.active_mass_ratio,
                    alt_soh_at_base_eol_pct: report.alt_soh_at_base_eol_pct,
                    alt_healthier_every_day: u8::from(report.alt_healthier_every_day),
                };
                VrlaStatus::Ok
            }
            Err(e) => from_error(&e),
        }
    })
}

/// Open-circuit battery voltage (V) of a new default battery at `soc`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn vrla_battery_ocv(soc: f64, out: *mut f64) -> VrlaStatus {
    guard(|| {
        let Some(o) = out.as_mut() else {
            return fail(VrlaStatus::NullPointer, "out is null");
        };
        match battery::battery_ocv(&battery::BatteryParams::default(), soc) {
            Ok(v) => {
                *o = v;
                VrlaStatus::Ok
            }
            Err(e) => from_error(&e),
        }
    })
}
