//! C ABI over the spatial QA toolkit.
//!
//! Conventions:
//! * Opaque handles (`SpaqaQa`, `SpaqaScene`, `SpaqaRewardConfig`) are
//!   created and destroyed by this library; never free them with
//!   `free()`.
//! * Every fallible call returns a [`SpaqaStatus`]; on failure,
//!   [`spaqa_last_error_message`] returns a thread-local description.
//! * Strings are NUL-terminated UTF-8. Strings returned by the library
//!   must be released with [`spaqa_string_free`].
//!
//! The header `include/spaqa.h` is generated at build time.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::ptr;

use spaqa_core::config::AppConfig;
use spaqa_core::qa::QAPair;
use spaqa_core::response::parse_response_sized;
use spaqa_core::reward::{reward_map, reward_numerical, score_response, RewardConfig};
use spaqa_core::scene::{build_grid_map, parse_scene, SceneMeta};

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let message = message.into();
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(message).ok();
    });
}

fn clear_error() {
    LAST_ERROR.with(|slot| slot.borrow_mut().take());
}

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaqaStatus {
    Ok = 0,
    /// A required pointer was NULL or a scalar argument out of range.
    InvalidArgument = 1,
    /// Input text was not valid UTF-8.
    InvalidUtf8 = 2,
    /// Parsing or validation of a document failed.
    ParseError = 3,
    /// A domain operation failed (degenerate geometry, bad config, ...).
    DomainError = 4,
}

/// Opaque: one parsed scene.
pub struct SpaqaScene(SceneMeta);

/// Opaque: one QA record.
pub struct SpaqaQa(QAPair);

/// Opaque: reward configuration.
pub struct SpaqaRewardConfig(RewardConfig);

/// Per-component rewards for one scored response.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaqaRewardBreakdown {
    pub r_format: f64,
    pub r_task: f64,
    /// Meaningful only when `has_map` is non-zero.
    pub r_map: f64,
    pub has_map: u8,
    pub r_length: f64,
    pub total: f64,
}

/// Last error message for this thread, or NULL when the previous call
/// succeeded. Valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn spaqa_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map_or(ptr::null(), |s| s.as_ptr())
    })
}

/// Library version as a static string; do not free.
#[no_mangle]
pub extern "C" fn spaqa_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}

unsafe fn cstr_arg<'a>(ptr: *const c_char, name: &str) -> Result<&'a str, SpaqaStatus> {
    if ptr.is_null() {
        set_error(format!("{name} is NULL"));
        return Err(SpaqaStatus::InvalidArgument);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error(format!("{name} is not valid UTF-8"));
        SpaqaStatus::InvalidUtf8
    })
}

fn status_of<T>(result: Result<T, SpaqaStatus>) -> SpaqaStatus {
    match result {
        Ok(_) => {
            clear_error();
            SpaqaStatus::Ok
        }
        Err(status) => status,
    }
}

/// Parses a scene document into an opaque handle.
///
/// # Safety
/// `text` must be a valid NUL-terminated string and `out` a valid
/// pointer; the returned handle must be freed with [`spaqa_scene_free`].
#[no_mangle]
pub unsafe extern "C" fn spaqa_scene_parse(
    text: *const c_char,
    out: *mut *mut SpaqaScene,
) -> SpaqaStatus {
    status_of((|| {
        if out.is_null() {
            set_error("out is NULL");
            return Err(SpaqaStatus::InvalidArgument);
        }
        let text = cstr_arg(text, "text")?;
        match parse_scene(text) {
            Ok(scene) => {
                *out = Box::into_raw(Box::new(SpaqaScene(scene)));
                Ok(())
            }
            Err(e) => {
                set_error(e.to_string());
                Err(SpaqaStatus::ParseError)
            }
        }
    })())
}

/// # Safety
/// `scene` must come from [`spaqa_scene_parse`] (or be NULL).
#[no_mangle]
pub unsafe extern "C" fn spaqa_scene_free(scene: *mut SpaqaScene) {
    if !scene.is_null() {
        drop(Box::from_raw(scene));
    }
}

/// Builds the ground-truth M x M grid map of a scene and returns it as
/// a JSON string (`{"category": [[x, y], ...], ...}`).
///
/// # Safety
/// `scene` must be a live handle; `out_json` a valid pointer. Free the
/// returned string with [`spaqa_string_free`].
#[no_mangle]
pub unsafe extern "C" fn spaqa_scene_grid_map_json(
    scene: *const SpaqaScene,
    map_size: usize,
    out_json: *mut *mut c_char,
) -> SpaqaStatus {
    status_of((|| {
        if scene.is_null() || out_json.is_null() {
            set_error("scene or out_json is NULL");
            return Err(SpaqaStatus::InvalidArgument);
        }
        let scene = &(*scene).0;
        match build_grid_map(scene, map_size) {
            Ok(map) => {
                let json = serde_json::to_string(&map.cells).expect("map serializes");
                *out_json = CString::new(json).expect("no NUL in JSON").into_raw();
                Ok(())
            }
            Err(e) => {
                set_error(e.to_string());
                Err(SpaqaStatus::DomainError)
            }
        }
    })())
}

/// # Safety
/// `s` must have been returned by this library (or be NULL).
#[no_mangle]
pub unsafe extern "C" fn spaqa_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses one QA record (the JSONL line format) into an opaque handle.
///
/// # Safety
/// `text` must be a valid NUL-terminated string and `out` a valid
/// pointer; free the handle with [`spaqa_qa_free`].
#[no_mangle]
pub unsafe extern "C" fn spaqa_qa_from_json(
    text: *const c_char,
    out: *mut *mut SpaqaQa,
) -> SpaqaStatus {
    status_of((|| {
        if out.is_null() {
            set_error("out is NULL");
            return Err(SpaqaStatus::InvalidArgument);
        }
        let text = cstr_arg(text, "text")?;
        let pair: QAPair = serde_json::from_str(text).map_err(|e| {
            set_error(e.to_string());
            SpaqaStatus::ParseError
        })?;
        let errors = pair.validate();
        if !errors.is_empty() {
            set_error(errors.join("; "));
            return Err(SpaqaStatus::ParseError);
        }
        *out = Box::into_raw(Box::new(SpaqaQa(pair)));
        Ok(())
    })())
}

/// # Safety
/// `qa` must come from [`spaqa_qa_from_json`] (or be NULL).
#[no_mangle]
pub unsafe extern "C" fn spaqa_qa_free(qa: *mut SpaqaQa) {
    if !qa.is_null() {
        drop(Box::from_raw(qa));
    }
}

/// Default reward configuration. Free with
/// [`spaqa_reward_config_free`].
#[no_mangle]
pub extern "C" fn spaqa_reward_config_default() -> *mut SpaqaRewardConfig {
    clear_error();
    Box::into_raw(Box::new(SpaqaRewardConfig(RewardConfig::default())))
}

/// Reward configuration from an application config JSON document (the
/// same format the CLI accepts via `--config`; the `reward` section
/// applies).
///
/// # Safety
/// `text` must be a valid NUL-terminated string and `out` a valid
/// pointer; free the handle with [`spaqa_reward_config_free`].
#[no_mangle]
pub unsafe extern "C" fn spaqa_reward_config_from_json(
    text: *const c_char,
    out: *mut *mut SpaqaRewardConfig,
) -> SpaqaStatus {
    status_of((|| {
        if out.is_null() {
            set_error("out is NULL");
            return Err(SpaqaStatus::InvalidArgument);
        }
        let text = cstr_arg(text, "text")?;
        let cfg = AppConfig::from_json(text).map_err(|e| {
            set_error(e.to_string());
            SpaqaStatus::ParseError
        })?;
        if let Err(e) = cfg.reward.validate() {
            set_error(e);
            return Err(SpaqaStatus::DomainError);
        }
        *out = Box::into_raw(Box::new(SpaqaRewardConfig(cfg.reward)));
        Ok(())
    })())
}

/// # Safety
/// `cfg` must come from this library (or be NULL).
#[no_mangle]
pub unsafe extern "C" fn spaqa_reward_config_free(cfg: *mut SpaqaRewardConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Scores one raw tagged response against a QA record.
///
/// # Safety
/// All handles must be live; `response_text` NUL-terminated;
/// `out_breakdown` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn spaqa_score_response(
    qa: *const SpaqaQa,
    response_text: *const c_char,
    cfg: *const SpaqaRewardConfig,
    out_breakdown: *mut SpaqaRewardBreakdown,
) -> SpaqaStatus {
    status_of((|| {
        if qa.is_null() || cfg.is_null() || out_breakdown.is_null() {
            set_error("qa, cfg, or out_breakdown is NULL");
            return Err(SpaqaStatus::InvalidArgument);
        }
        let text = cstr_arg(response_text, "response_text")?;
        let cfg = &(*cfg).0;
        let resp = parse_response_sized(text, cfg.map_size);
        let b = score_response(&resp, &(*qa).0, cfg);
        *out_breakdown = SpaqaRewardBreakdown {
            r_format: b.r_format,
            r_task: b.r_task,
            r_map: b.r_map.unwrap_or(0.0),
            has_map: u8::from(b.r_map.is_some()),
            r_length: b.r_length,
            total: b.total,
        };
        Ok(())
    })())
}

/// Threshold-counted numeric reward for a prediction against a truth
/// value, under `cfg`'s confidence thresholds.
///
/// # Safety
/// `cfg` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn spaqa_reward_numerical(
    predicted: f64,
    truth: f64,
    cfg: *const SpaqaRewardConfig,
    out: *mut f64,
) -> SpaqaStatus {
    status_of((|| {
        if cfg.is_null() || out.is_null() {
            set_error("cfg or out is NULL");
            return Err(SpaqaStatus::InvalidArgument);
        }
        *out = reward_numerical(predicted, truth, &(*cfg).0);
        Ok(())
    })())
}

/// Map reward between two grid maps given as JSON cell dictionaries
/// over an `m` x `m` grid.
///
/// # Safety
/// `predicted_json` and `truth_json` must be valid NUL-terminated
/// strings and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn spaqa_reward_map(
    predicted_json: *const c_char,
    truth_json: *const c_char,
    m: usize,
    out: *mut f64,
) -> SpaqaStatus {
    status_of((|| {
        if out.is_null() {
            set_error("out is NULL");
            return Err(SpaqaStatus::InvalidArgument);
        }
        let predicted = cstr_arg(predicted_json, "predicted_json")?;
        let truth = cstr_arg(truth_json, "truth_json")?;
        let parse = |text: &str, name: &str| {
            spaqa_core::response::parse_map_text(text, m).map_err(|e| {
                set_error(format!("{name}: {e}"));
                SpaqaStatus::ParseError
            })
        };
        let predicted = parse(predicted, "predicted_json")?;
        let truth = parse(truth, "truth_json")?;
        *out = reward_map(&predicted, &truth, m);
        Ok(())
    })())
}
