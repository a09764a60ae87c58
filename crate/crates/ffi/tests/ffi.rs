use std::ffi::{c_char, c_int, CStr, CString};
use std::ptr;

use pbl_inspect::workflow::{advance, InspectionPhase, InspectionVerdict, WorkflowEvent, MAX_ROUNDS};
use pbl_inspect_ffi::*;

fn take(s: *mut c_char) -> String {
    assert!(!s.is_null());
    let out = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_owned();
    unsafe { pbl_string_free(s) };
    out
}

fn last_error() -> String {
    let p = pbl_last_error();
    assert!(!p.is_null(), "no error recorded");
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned()
}

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

const EVENTS: [(PblEvent, WorkflowEvent); 8] = [
    (PblEvent::OpenGroupReviewPr, WorkflowEvent::OpenGroupReviewPr),
    (PblEvent::GroupApproved, WorkflowEvent::GroupApproved),
    (PblEvent::RequestInspection, WorkflowEvent::RequestInspection),
    (PblEvent::StaffReviewSubmitted, WorkflowEvent::StaffReviewSubmitted),
    (PblEvent::InspectionApproved, WorkflowEvent::InspectionCompleted(InspectionVerdict::Approve)),
    (
        PblEvent::InspectionChangesRequested,
        WorkflowEvent::InspectionCompleted(InspectionVerdict::RequestChanges),
    ),
    (PblEvent::RevisionSubmitted, WorkflowEvent::RevisionSubmitted),
    (PblEvent::MergeToMaster, WorkflowEvent::MergeToMaster),
];

fn c_phase(p: InspectionPhase) -> PblPhase {
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

#[test]
fn advance_agrees_with_the_engine_on_every_input() {
    for phase in InspectionPhase::ALL {
        for rounds in 0..=MAX_ROUNDS + 1 {
            for (ce, e) in EVENTS {
                let mut out = PblPhase {
                    kind: PblPhaseKind::Drafting,
                    round: 0,
                };
                let mut out_rounds = 0u8;
                let status = unsafe { pbl_workflow_advance(c_phase(phase), rounds, ce, &mut out, &mut out_rounds) };
                match advance(phase, rounds, e) {
                    Ok((p, r)) => {
                        assert_eq!(status, PblStatus::Ok);
                        assert_eq!((out, out_rounds), (c_phase(p), r));
                    }
                    Err(err) => {
                        assert_eq!(status, PblStatus::Rejected);
                        assert!(last_error().starts_with(err.code()));
                    }
                }
            }
        }
    }
}

#[test]
fn merge_gate() {
    let mut allowed = false;
    let mut denial = PblMergeDenial::None;
    for phase in InspectionPhase::ALL {
        let status = unsafe { pbl_can_merge_to_master(c_phase(phase), &mut allowed, &mut denial) };
        assert_eq!(status, PblStatus::Ok);
        assert_eq!(allowed, phase == InspectionPhase::Approved);
        assert_eq!(allowed, denial == PblMergeDenial::None);
    }
    let bad = PblPhase {
        kind: PblPhaseKind::RevisionRequested,
        round: 7,
    };
    assert_eq!(
        unsafe { pbl_can_merge_to_master(bad, &mut allowed, &mut denial) },
        PblStatus::InvalidArgument
    );
    assert!(unsafe { pbl_can_merge_to_master(c_phase(InspectionPhase::Approved), ptr::null_mut(), &mut denial) }
        == PblStatus::NullArgument);
}

#[test]
fn unified_diff() {
    let path = c("docs/db.md");
    let old = c("a\nb\nc\n");
    let new = c("a\nB\nc\n");
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { pbl_diff_unified(path.as_ptr(), old.as_ptr(), new.as_ptr(), &mut out) }, PblStatus::Ok);
    assert_eq!(
        take(out),
        "--- a/docs/db.md\n+++ b/docs/db.md\n@@ -1,3 +1,3 @@\n a\n-b\n+B\n c\n"
    );
    assert_eq!(unsafe { pbl_diff_unified(path.as_ptr(), ptr::null(), new.as_ptr(), &mut out) }, PblStatus::Ok);
    assert!(take(out).starts_with("--- /dev/null\n+++ b/docs/db.md\n@@ -0,0 +1,3 @@\n"));
    assert_eq!(unsafe { pbl_diff_unified(path.as_ptr(), old.as_ptr(), old.as_ptr(), &mut out) }, PblStatus::Ok);
    assert_eq!(take(out), "");
}

#[test]
fn plantuml_parse_and_error() {
    let text = c("@startuml\nclass Teacher\nclass TA\nTeacher <|-- TA\n@enduml\n");
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { pbl_parse_plantuml_json(text.as_ptr(), &mut out) }, PblStatus::Ok);
    let v: serde_json::Value = serde_json::from_str(&take(out)).unwrap();
    assert_eq!(v["model"]["classes"].as_array().unwrap().len(), 2);
    assert_eq!(v["index"]["rel:Teacher<|--TA"], 4);

    let bad = c("@startuml\nclass Teacher {\n  name\n@enduml\n");
    assert_eq!(unsafe { pbl_parse_plantuml_json(bad.as_ptr(), &mut out) }, PblStatus::Rejected);
    let v: serde_json::Value = serde_json::from_str(&take(out)).unwrap();
    assert_eq!(v["line"], 4);
    assert!(last_error().contains("line 4"));
}

#[test]
fn validation_report() {
    let path = c("docs/req.md");
    let kind = c("requirements-spec");
    let body = b"# Requirements\n";
    let mut accepted = false;
    let mut out = ptr::null_mut();
    let st = unsafe { pbl_validate_artifact_json(path.as_ptr(), kind.as_ptr(), body.as_ptr(), body.len(), &mut accepted, &mut out) };
    assert_eq!(st, PblStatus::Ok);
    assert!(accepted);
    take(out);

    let body = b"just text\n";
    let st = unsafe { pbl_validate_artifact_json(path.as_ptr(), kind.as_ptr(), body.as_ptr(), body.len(), &mut accepted, &mut out) };
    assert_eq!(st, PblStatus::Ok);
    assert!(!accepted);
    let v: serde_json::Value = serde_json::from_str(&take(out)).unwrap();
    assert_eq!(v["violations"][0]["code"], "MissingHeading");

    let kind = c("poem");
    let st = unsafe { pbl_validate_artifact_json(path.as_ptr(), kind.as_ptr(), body.as_ptr(), body.len(), &mut accepted, &mut out) };
    assert_eq!(st, PblStatus::InvalidArgument);
    assert!(last_error().contains("unknown artifact kind"));
}

fn execute(project: *const PblProject, actor: &str, args: &[&str]) -> (c_int, String, String) {
    let actor = c(actor);
    let owned: Vec<CString> = args.iter().map(|a| c(a)).collect();
    let argv: Vec<*const c_char> = owned.iter().map(|a| a.as_ptr()).collect();
    let (mut out, mut err, mut code) = (ptr::null_mut(), ptr::null_mut(), -1);
    let st = unsafe {
        pbl_project_execute(project, actor.as_ptr(), argv.len() as c_int, argv.as_ptr(), &mut out, &mut err, &mut code)
    };
    assert_eq!(st, PblStatus::Ok);
    (code, take(out), take(err))
}

#[test]
fn project_commands_through_the_handle() {
    let dir = tempfile::tempdir().unwrap();
    let cdir = c(dir.path().to_str().unwrap());
    let mut project = ptr::null_mut();
    assert_eq!(unsafe { pbl_project_open(cdir.as_ptr(), &mut project) }, PblStatus::Ok);

    let (code, _, _) = execute(project, "prof", &["init", "--name", "Library", "--ta", "ta", "--group", "g1=a-san,b-san"]);
    assert_eq!(code, 0);
    let (code, _, _) = execute(project, "a-san", &["add-artifact", "db-design", "--kind", "db-design"]);
    assert_eq!(code, 0);
    let (code, out, _) = execute(project, "a-san", &["--json", "status"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["artifacts"][0]["phase"]["phase"], "Drafting");
    let (code, _, err) = execute(project, "a-san", &["complete-inspection", "1", "--verdict", "approve"]);
    assert_eq!(code, 3);
    assert!(err.contains("role-violation"));

    let st = unsafe { pbl_project_execute(project, ptr::null(), 0, ptr::null(), ptr::null_mut(), ptr::null_mut(), ptr::null_mut()) };
    assert_eq!(st, PblStatus::NullArgument);
    assert_eq!(last_error(), "actor is NULL");
    unsafe { pbl_project_free(project) };
}

#[test]
fn version_is_static() {
    let v = unsafe { CStr::from_ptr(pbl_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
