//! C interface to the pbl-inspect engine.
//!
//! Every function returns a [`PblStatus`]; on anything other than
//! `PBL_STATUS_OK` a message is available from [`pbl_last_error`] on the
//! same thread. Strings handed out through `char **` parameters are owned by
//! the caller and must be released with [`pbl_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use pbl_inspect::artifact::{element_line_index, parse_plantuml_class_diagram, validate_text_artifact};
use pbl_inspect::diff::{compute_diff, render_unified};
use pbl_inspect::vcs::{text_to_lines, Snapshot};
use pbl_inspect::workflow::{
    advance, phase_merge_decision, ArtifactKind, InspectionPhase, InspectionVerdict, MergeDecision, MergeDenial,
    Round, WorkflowEvent,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PblStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    /// The engine refused the request (illegal transition, parse error, ...).
    Rejected = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PblPhaseKind {
    Drafting = 0,
    GroupReview = 1,
    InspectionRequested = 2,
    UnderInspection = 3,
    RevisionRequested = 4,
    Approved = 5,
    MergedToMaster = 6,
}

/// A workflow phase; `round` is 1 or 2 for the three round-carrying kinds
/// and 0 otherwise.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PblPhase {
    pub kind: PblPhaseKind,
    pub round: u8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PblEvent {
    OpenGroupReviewPr = 0,
    GroupApproved = 1,
    RequestInspection = 2,
    StaffReviewSubmitted = 3,
    InspectionApproved = 4,
    InspectionChangesRequested = 5,
    RevisionSubmitted = 6,
    MergeToMaster = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PblMergeDenial {
    None = 0,
    NoCompletedInspection = 1,
    InspectionOpen = 2,
    RevisionRequested = 3,
    AlreadyMerged = 4,
}

/// Handle on a project directory.
pub struct PblProject {
    dir: PathBuf,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

struct Fail(PblStatus, String);

impl Fail {
    fn null(what: &str) -> Self {
        Fail(PblStatus::NullArgument, format!("{what} is NULL"))
    }
}

/// Runs `f`, converting failures and panics into a status plus last error.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> PblStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PblStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            PblStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail::null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(PblStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

fn to_c(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).map_or(ptr::null_mut(), CString::into_raw)
}

unsafe fn put_string(out: *mut *mut c_char, s: String) {
    *out = to_c(s);
}

fn phase_from_c(p: PblPhase) -> Result<InspectionPhase, Fail> {
    let round = || {
        Round::new(p.round).ok_or_else(|| Fail(PblStatus::InvalidArgument, format!("round must be 1 or 2, got {}", p.round)))
    };
    Ok(match p.kind {
        PblPhaseKind::Drafting => InspectionPhase::Drafting,
        PblPhaseKind::GroupReview => InspectionPhase::GroupReview,
        PblPhaseKind::InspectionRequested => InspectionPhase::InspectionRequested(round()?),
        PblPhaseKind::UnderInspection => InspectionPhase::UnderInspection(round()?),
        PblPhaseKind::RevisionRequested => InspectionPhase::RevisionRequested(round()?),
        PblPhaseKind::Approved => InspectionPhase::Approved,
        PblPhaseKind::MergedToMaster => InspectionPhase::MergedToMaster,
    })
}

fn phase_to_c(p: InspectionPhase) -> PblPhase {
    let (kind, round) = match p {
        InspectionPhase::Drafting => (PblPhaseKind::Drafting, 0),
        InspectionPhase::GroupReview => (PblPhaseKind::GroupReview, 0),
        InspectionPhase::InspectionRequested(r) => (PblPhaseKind::InspectionRequested, r.get()),
        InspectionPhase::UnderInspection(r) => (PblPhaseKind::UnderInspection, r.get()),
        InspectionPhase::RevisionRequested(r) => (PblPhaseKind::RevisionRequested, r.get()),
        InspectionPhase::Approved => (PblPhaseKind::Approved, 0),
        InspectionPhase::MergedToMaster => (PblPhaseKind::MergedToMaster, 0),
    };
    PblPhase { kind, round }
}

fn event_from_c(e: PblEvent) -> WorkflowEvent {
    match e {
        PblEvent::OpenGroupReviewPr => WorkflowEvent::OpenGroupReviewPr,
        PblEvent::GroupApproved => WorkflowEvent::GroupApproved,
        PblEvent::RequestInspection => WorkflowEvent::RequestInspection,
        PblEvent::StaffReviewSubmitted => WorkflowEvent::StaffReviewSubmitted,
        PblEvent::InspectionApproved => WorkflowEvent::InspectionCompleted(InspectionVerdict::Approve),
        PblEvent::InspectionChangesRequested => WorkflowEvent::InspectionCompleted(InspectionVerdict::RequestChanges),
        PblEvent::RevisionSubmitted => WorkflowEvent::RevisionSubmitted,
        PblEvent::MergeToMaster => WorkflowEvent::MergeToMaster,
    }
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn pbl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread, or NULL. Valid until
/// the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn pbl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn pbl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Opens a handle on the project directory `dir` (which need not be
/// initialized yet).
///
/// # Safety
/// `dir` must be NULL or a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pbl_project_open(dir: *const c_char, out: *mut *mut PblProject) -> PblStatus {
    guard(|| {
        if out.is_null() {
            return Err(Fail::null("out"));
        }
        let dir = str_arg(dir, "dir")?;
        *out = Box::into_raw(Box::new(PblProject { dir: PathBuf::from(dir) }));
        Ok(())
    })
}

/// # Safety
/// `project` must be NULL or a handle from [`pbl_project_open`], freed once.
#[no_mangle]
pub unsafe extern "C" fn pbl_project_free(project: *mut PblProject) {
    if !project.is_null() {
        drop(Box::from_raw(project));
    }
}

/// Runs one command-line verb against the project as `actor`. `argv` holds
/// the verb and its arguments, without program name or global flags
/// (except `--json`). Output text and the exit code the binary would use
/// are returned through `out_stdout`, `out_stderr` and `out_exit`; any of
/// them may be NULL.
///
/// # Safety
/// `argv` must point to `argc` NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn pbl_project_execute(
    project: *const PblProject,
    actor: *const c_char,
    argc: c_int,
    argv: *const *const c_char,
    out_stdout: *mut *mut c_char,
    out_stderr: *mut *mut c_char,
    out_exit: *mut c_int,
) -> PblStatus {
    guard(|| {
        let project = project.as_ref().ok_or_else(|| Fail::null("project"))?;
        let actor = str_arg(actor, "actor")?;
        let argc = usize::try_from(argc).map_err(|_| Fail(PblStatus::InvalidArgument, "argc is negative".into()))?;
        if argc > 0 && argv.is_null() {
            return Err(Fail::null("argv"));
        }
        let mut args = Vec::with_capacity(argc);
        for i in 0..argc {
            args.push(str_arg(*argv.add(i), "argv element")?);
        }
        let outcome = pbl_inspect::cli::execute(&project.dir, actor, &args);
        if !out_stdout.is_null() {
            put_string(out_stdout, outcome.stdout);
        }
        if !out_stderr.is_null() {
            put_string(out_stderr, outcome.stderr);
        }
        if !out_exit.is_null() {
            *out_exit = outcome.exit_code;
        }
        Ok(())
    })
}

/// Successor of `(phase, rounds_used)` under `event`. Rejected transitions
/// return `PBL_STATUS_REJECTED` with the error code in the last error
/// (`illegal-transition`, `rounds-exhausted` or `invalid-state`).
///
/// # Safety
/// `out_phase` and `out_rounds` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pbl_workflow_advance(
    phase: PblPhase,
    rounds_used: u8,
    event: PblEvent,
    out_phase: *mut PblPhase,
    out_rounds: *mut u8,
) -> PblStatus {
    guard(|| {
        if out_phase.is_null() || out_rounds.is_null() {
            return Err(Fail::null("output pointer"));
        }
        let phase = phase_from_c(phase)?;
        match advance(phase, rounds_used, event_from_c(event)) {
            Ok((p, r)) => {
                *out_phase = phase_to_c(p);
                *out_rounds = r;
                Ok(())
            }
            Err(e) => Err(Fail(PblStatus::Rejected, format!("{}: {e}", e.code()))),
        }
    })
}

/// Whether an artifact in `phase` may be merged into master; the reason
/// for a refusal goes to `out_denial` (`PBL_MERGE_DENIAL_NONE` when allowed).
///
/// # Safety
/// `out_allowed` and `out_denial` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pbl_can_merge_to_master(
    phase: PblPhase,
    out_allowed: *mut bool,
    out_denial: *mut PblMergeDenial,
) -> PblStatus {
    guard(|| {
        if out_allowed.is_null() || out_denial.is_null() {
            return Err(Fail::null("output pointer"));
        }
        let (allowed, denial) = match phase_merge_decision(phase_from_c(phase)?) {
            MergeDecision::Allow => (true, PblMergeDenial::None),
            MergeDecision::Deny(d) => (
                false,
                match d {
                    MergeDenial::NoCompletedInspection => PblMergeDenial::NoCompletedInspection,
                    MergeDenial::InspectionOpen => PblMergeDenial::InspectionOpen,
                    MergeDenial::RevisionRequested => PblMergeDenial::RevisionRequested,
                    MergeDenial::AlreadyMerged => PblMergeDenial::AlreadyMerged,
                },
            ),
        };
        *out_allowed = allowed;
        *out_denial = denial;
        Ok(())
    })
}

/// Unified diff of one file. NULL `old_text` or `new_text` means the file
/// does not exist on that side.
///
/// # Safety
/// Strings must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pbl_diff_unified(
    path: *const c_char,
    old_text: *const c_char,
    new_text: *const c_char,
    out: *mut *mut c_char,
) -> PblStatus {
    guard(|| {
        if out.is_null() {
            return Err(Fail::null("out"));
        }
        let path = str_arg(path, "path")?;
        let side = |p: *const c_char, what: &str| -> Result<Snapshot, Fail> {
            let mut s = Snapshot::new();
            if !p.is_null() {
                s.insert(path.to_owned(), text_to_lines(str_arg(p, what)?));
            }
            Ok(s)
        };
        let old = side(old_text, "old_text")?;
        let new = side(new_text, "new_text")?;
        put_string(out, render_unified(&compute_diff(&old, &new)));
        Ok(())
    })
}

/// Parses a PlantUML class diagram into JSON `{"model", "warnings",
/// "index"}`. On a syntax error the status is `PBL_STATUS_REJECTED` and
/// `out_json` holds `{"line", "expected"}`.
///
/// # Safety
/// `text` must be NUL-terminated; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pbl_parse_plantuml_json(text: *const c_char, out_json: *mut *mut c_char) -> PblStatus {
    guard(|| {
        if out_json.is_null() {
            return Err(Fail::null("out_json"));
        }
        let text = str_arg(text, "text")?;
        match parse_plantuml_class_diagram(text) {
            Ok(parsed) => {
                let v = serde_json::json!({
                    "model": parsed.model,
                    "warnings": parsed.warnings,
                    "index": element_line_index(&parsed.model),
                });
                put_string(out_json, v.to_string());
                Ok(())
            }
            Err(e) => {
                put_string(out_json, serde_json::to_string(&e).unwrap_or_default());
                Err(Fail(PblStatus::Rejected, e.to_string()))
            }
        }
    })
}

/// Checks `len` bytes of `path` against the format `kind` requires
/// (`requirements-spec`, `class-diagram`, ...). The JSON report is written
/// whether or not the file is accepted; `out_accepted` tells which.
///
/// # Safety
/// `bytes` must point to `len` readable bytes (it may be NULL when `len`
/// is 0); output pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn pbl_validate_artifact_json(
    path: *const c_char,
    kind: *const c_char,
    bytes: *const u8,
    len: usize,
    out_accepted: *mut bool,
    out_json: *mut *mut c_char,
) -> PblStatus {
    guard(|| {
        if out_json.is_null() || out_accepted.is_null() {
            return Err(Fail::null("output pointer"));
        }
        let path = str_arg(path, "path")?;
        let kind: ArtifactKind = str_arg(kind, "kind")?
            .parse()
            .map_err(|e: String| Fail(PblStatus::InvalidArgument, e))?;
        let data = if len == 0 {
            &[][..]
        } else if bytes.is_null() {
            return Err(Fail::null("bytes"));
        } else {
            std::slice::from_raw_parts(bytes, len)
        };
        let report = validate_text_artifact(path, kind, data);
        *out_accepted = report.accepted();
        put_string(out_json, serde_json::to_string(&report).unwrap_or_default());
        Ok(())
    })
}
