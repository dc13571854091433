//! C ABI over the planner: opaque handles, status codes, flat buffers.
//!
//! Every function is panic-safe (panics map to `LES_STATUS_INTERNAL`) and
//! null-checks its pointers. Handles are created and destroyed strictly by
//! this library; passing anything else is undefined behavior, as usual for
//! C APIs.

use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};


use les_planner::appendix::appendix_verify_seeded;
use les_planner::env::Environment;
use les_planner::error::Error;
use les_planner::planner::{plan, PlannerConfig, PlannerMetrics, SamplerKind};

/// Status code returned by every fallible entry point.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum LesStatus {
    LesStatusOk = 0,
    LesStatusNullPointer = 1,
    LesStatusInvalidArgument = 2,
    LesStatusInvalidEnvironment = 3,
    LesStatusIo = 4,
    LesStatusNoSolution = 5,
    LesStatusBufferTooSmall = 6,
    LesStatusInternal = 7,
}

/// Sampling strategy selector.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum LesSampler {
    LesSamplerUniform = 0,
    LesSamplerInformed = 1,
    LesSamplerRelevant = 2,
    LesSamplerLes = 3,
}

impl From<LesSampler> for SamplerKind {
    fn from(s: LesSampler) -> SamplerKind {
        match s {
            LesSampler::LesSamplerUniform => SamplerKind::Uniform,
            LesSampler::LesSamplerInformed => SamplerKind::Informed,
            LesSampler::LesSamplerRelevant => SamplerKind::RelevantRegion,
            LesSampler::LesSamplerLes => SamplerKind::Les,
        }
    }
}

/// Planner options. Zero or negative optional fields mean "unset".
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct LesPlanOptions {
    pub sampler: LesSampler,
    pub seed: u64,
    /// Wall-clock budget in seconds; <= 0 means unset.
    pub time_budget_s: f64,
    /// Iteration budget; 0 means unset. At least one budget is required.
    pub iteration_budget: u64,
    /// Steering range; <= 0 falls back to the environment's value.
    pub eta: f64,
    /// Probability of the exploitative branch; negative uses the default.
    pub p_les: f64,
    /// Goal bias; negative uses the default.
    pub goal_bias: f64,
}

/// Opaque environment handle.
pub struct LesEnv {
    inner: Environment,
}

/// Opaque run-result handle.
pub struct LesRunResult {
    metrics: PlannerMetrics,
    dimension: usize,
}

/// Appendix measurement, plain data.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct LesAppendixReport {
    pub empirical_p: f64,
    pub bound: f64,
    pub r_c: f64,
    pub std_err: f64,
}

fn status_of(err: &Error) -> LesStatus {
    match err {
        Error::InvalidEnvironment(_) => LesStatus::LesStatusInvalidEnvironment,
        Error::Io(_) | Error::Json(_) => LesStatus::LesStatusIo,
        Error::NoSolution => LesStatus::LesStatusNoSolution,
        Error::InvalidConfig(_) | Error::DimensionMismatch { .. } | Error::OutOfBounds => {
            LesStatus::LesStatusInvalidArgument
        }
        _ => LesStatus::LesStatusInternal,
    }
}

fn guarded<F: FnOnce() -> LesStatus>(f: F) -> LesStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or(LesStatus::LesStatusInternal)
}

/// Static name for a status code; never null.
#[no_mangle]
pub extern "C" fn les_status_name(status: LesStatus) -> *const c_char {
    let name: &'static [u8] = match status {
        LesStatus::LesStatusOk => b"ok\0",
        LesStatus::LesStatusNullPointer => b"null pointer\0",
        LesStatus::LesStatusInvalidArgument => b"invalid argument\0",
        LesStatus::LesStatusInvalidEnvironment => b"invalid environment\0",
        LesStatus::LesStatusIo => b"io error\0",
        LesStatus::LesStatusNoSolution => b"no solution\0",
        LesStatus::LesStatusBufferTooSmall => b"buffer too small\0",
        LesStatus::LesStatusInternal => b"internal error\0",
    };
    name.as_ptr() as *const c_char
}

/// Parse an environment from a JSON string.
///
/// # Safety
/// `json` must be a valid NUL-terminated string and `out` a valid pointer.
/// The returned handle must be released with `les_env_free`.
#[no_mangle]
pub unsafe extern "C" fn les_env_from_json(
    json: *const c_char,
    out: *mut *mut LesEnv,
) -> LesStatus {
    if json.is_null() || out.is_null() {
        return LesStatus::LesStatusNullPointer;
    }
    guarded(|| {
        let Ok(text) = CStr::from_ptr(json).to_str() else {
            return LesStatus::LesStatusInvalidArgument;
        };
        match Environment::from_json(text, "ffi-environment") {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(LesEnv { inner }));
                LesStatus::LesStatusOk
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Load an environment from a JSON file.
///
/// # Safety
/// `path` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn les_env_from_file(
    path: *const c_char,
    out: *mut *mut LesEnv,
) -> LesStatus {
    if path.is_null() || out.is_null() {
        return LesStatus::LesStatusNullPointer;
    }
    guarded(|| {
        let Ok(text) = CStr::from_ptr(path).to_str() else {
            return LesStatus::LesStatusInvalidArgument;
        };
        match Environment::from_file(text) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(LesEnv { inner }));
                LesStatus::LesStatusOk
            }
            Err(e) => status_of(&e),
        }
    })
}

/// # Safety
/// `env` must come from `les_env_from_json`/`les_env_from_file` and must
/// not be used afterwards. Null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn les_env_free(env: *mut LesEnv) {
    if !env.is_null() {
        drop(Box::from_raw(env));
    }
}

/// Search-space dimension of the environment; 0 for null.
///
/// # Safety
/// `env` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn les_env_dimension(env: *const LesEnv) -> u32 {
    env.as_ref().map_or(0, |e| e.inner.dimension() as u32)
}

/// Run the planner. On success `out` receives a result handle to be
/// released with `les_result_free`.
///
/// # Safety
/// `env`, `options` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn les_plan(
    env: *const LesEnv,
    options: *const LesPlanOptions,
    out: *mut *mut LesRunResult,
) -> LesStatus {
    if env.is_null() || options.is_null() || out.is_null() {
        return LesStatus::LesStatusNullPointer;
    }
    guarded(|| {
        let env = &(*env).inner;
        let options = *options;
        let eta = if options.eta > 0.0 {
            Some(options.eta)
        } else {
            env.eta
        };
        let Some(eta) = eta else {
            return LesStatus::LesStatusInvalidArgument;
        };
        let mut config = PlannerConfig::new(options.sampler.into(), eta);
        config.seed = options.seed;
        if options.time_budget_s > 0.0 {
            config.time_budget = Some(options.time_budget_s);
        }
        if options.iteration_budget > 0 {
            config.iteration_budget = Some(options.iteration_budget);
        }
        if options.p_les >= 0.0 {
            config.p_les = options.p_les;
        }
        if options.goal_bias >= 0.0 {
            config.goal_bias = options.goal_bias;
        }
        match plan(env, &config) {
            Ok(metrics) => {
                *out = Box::into_raw(Box::new(LesRunResult {
                    metrics,
                    dimension: env.dimension(),
                }));
                LesStatus::LesStatusOk
            }
            Err(e) => status_of(&e),
        }
    })
}

/// # Safety
/// `result` must come from `les_plan` and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn les_result_free(result: *mut LesRunResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Best solution cost; +inf when unsolved, NaN for null.
///
/// # Safety
/// `result` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn les_result_final_cost(result: *const LesRunResult) -> f64 {
    result.as_ref().map_or(f64::NAN, |r| r.metrics.final_cost)
}

/// # Safety
/// `result` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn les_result_iterations(result: *const LesRunResult) -> u64 {
    result.as_ref().map_or(0, |r| r.metrics.iterations)
}

/// # Safety
/// `result` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn les_result_rewires(result: *const LesRunResult) -> u64 {
    result.as_ref().map_or(0, |r| r.metrics.rewires)
}

/// Number of states on the solution path; 0 when unsolved.
///
/// # Safety
/// `result` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn les_result_path_len(result: *const LesRunResult) -> usize {
    result
        .as_ref()
        .and_then(|r| r.metrics.path.as_ref())
        .map_or(0, |p| p.len())
}

/// Copy the solution path into `buffer` as `path_len * dimension` doubles,
/// state by state.
///
/// # Safety
/// `buffer` must point to at least `buffer_len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn les_result_path_copy(
    result: *const LesRunResult,
    buffer: *mut f64,
    buffer_len: usize,
) -> LesStatus {
    if result.is_null() || buffer.is_null() {
        return LesStatus::LesStatusNullPointer;
    }
    guarded(|| {
        let result = &*result;
        let Some(path) = result.metrics.path.as_ref() else {
            return LesStatus::LesStatusNoSolution;
        };
        let needed = path.len() * result.dimension;
        if buffer_len < needed {
            return LesStatus::LesStatusBufferTooSmall;
        }
        let out = std::slice::from_raw_parts_mut(buffer, needed);
        for (i, state) in path.iter().enumerate() {
            let row = &mut out[i * result.dimension..(i + 1) * result.dimension];
            row.copy_from_slice(state.coords());
        }
        LesStatus::LesStatusOk
    })
}

/// Monte-Carlo check of the local-search improvement bound.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn les_verify_appendix(
    dimension: u32,
    ratio: f64,
    samples: u64,
    seed: u64,
    out: *mut LesAppendixReport,
) -> LesStatus {
    if out.is_null() {
        return LesStatus::LesStatusNullPointer;
    }
    guarded(|| {
        match appendix_verify_seeded(dimension as usize, ratio, samples, seed) {
            Ok(report) => {
                *out = LesAppendixReport {
                    empirical_p: report.empirical_p,
                    bound: report.bound,
                    r_c: report.r_c,
                    std_err: report.std_err,
                };
                LesStatus::LesStatusOk
            }
            Err(e) => status_of(&e),
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CString;
    use std::ptr;

    const ENV_JSON: &str = r#"{
        "dimension": 2,
        "lower": [0.0, 0.0],
        "upper": [4.0, 4.0],
        "cost": {"kind": "constant"},
        "start": [0.5, 0.5],
        "goal": [3.5, 3.5],
        "goal_radius": 0.3,
        "resolution": 0.05,
        "eta": 0.5
    }"#;

    fn load_env() -> *mut LesEnv {
        let json = CString::new(ENV_JSON).unwrap();
        let mut env: *mut LesEnv = ptr::null_mut();
        let status = unsafe { les_env_from_json(json.as_ptr(), &mut env) };
        assert_eq!(status, LesStatus::LesStatusOk);
        assert!(!env.is_null());
        env
    }

    #[test]
    fn env_round_trip_and_dimension() {
        let env = load_env();
        assert_eq!(unsafe { les_env_dimension(env) }, 2);
        unsafe { les_env_free(env) };
    }

    #[test]
    fn invalid_json_is_reported() {
        let json = CString::new("{\"dimension\": 2").unwrap();
        let mut env: *mut LesEnv = ptr::null_mut();
        let status = unsafe { les_env_from_json(json.as_ptr(), &mut env) };
        assert_eq!(status, LesStatus::LesStatusIo);
        assert!(env.is_null());
        let status = unsafe { les_env_from_json(ptr::null(), &mut env) };
        assert_eq!(status, LesStatus::LesStatusNullPointer);
    }

    #[test]
    fn plan_and_path_copy_through_the_c_surface() {
        let env = load_env();
        let options = LesPlanOptions {
            sampler: LesSampler::LesSamplerLes,
            seed: 11,
            time_budget_s: 0.0,
            iteration_budget: 3000,
            eta: 0.0,
            p_les: -1.0,
            goal_bias: -1.0,
        };
        let mut result: *mut LesRunResult = ptr::null_mut();
        let status = unsafe { les_plan(env, &options, &mut result) };
        assert_eq!(status, LesStatus::LesStatusOk);
        let cost = unsafe { les_result_final_cost(result) };
        assert!(cost.is_finite());
        assert!(unsafe { les_result_iterations(result) } == 3000);
        let len = unsafe { les_result_path_len(result) };
        assert!(len >= 2);
        let mut buffer = vec![0.0f64; len * 2];
        let status = unsafe { les_result_path_copy(result, buffer.as_mut_ptr(), buffer.len()) };
        assert_eq!(status, LesStatus::LesStatusOk);
        assert_eq!(&buffer[0..2], &[0.5, 0.5]);
        let mut small = vec![0.0f64; 3];
        let status = unsafe { les_result_path_copy(result, small.as_mut_ptr(), small.len()) };
        assert_eq!(status, LesStatus::LesStatusBufferTooSmall);
        unsafe { les_result_free(result) };
        unsafe { les_env_free(env) };
    }

    #[test]
    fn plan_requires_a_budget() {
        let env = load_env();
        let options = LesPlanOptions {
            sampler: LesSampler::LesSamplerInformed,
            seed: 0,
            time_budget_s: 0.0,
            iteration_budget: 0,
            eta: 0.0,
            p_les: -1.0,
            goal_bias: -1.0,
        };
        let mut result: *mut LesRunResult = ptr::null_mut();
        let status = unsafe { les_plan(env, &options, &mut result) };
        assert_eq!(status, LesStatus::LesStatusInvalidArgument);
        unsafe { les_env_free(env) };
    }

    #[test]
    fn appendix_report_through_the_c_surface() {
        let mut report = LesAppendixReport {
            empirical_p: 0.0,
            bound: 0.0,
            r_c: 0.0,
            std_err: 0.0,
        };
        let status = unsafe { les_verify_appendix(6, 0.5, 20_000, 3, &mut report) };
        assert_eq!(status, LesStatus::LesStatusOk);
        assert!(report.empirical_p > 0.0 && report.empirical_p < report.bound);
        let status = unsafe { les_verify_appendix(6, 1.5, 20_000, 3, &mut report) };
        assert_eq!(status, LesStatus::LesStatusInvalidArgument);
    }

    #[test]
    fn status_names_are_nul_terminated() {
        for status in [
            LesStatus::LesStatusOk,
            LesStatus::LesStatusNullPointer,
            LesStatus::LesStatusInternal,
        ] {
            let name = les_status_name(status);
            let text = unsafe { CStr::from_ptr(name) }.to_str().unwrap();
            assert!(!text.is_empty());
        }
    }
}
