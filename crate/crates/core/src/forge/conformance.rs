//! Behavioural checks every [`ForgeBackend`] must pass.
//!
//! A hosted-forge adapter can call [`run`] from its own test suite with a
//! factory producing fresh, empty forges.

use super::*;
use crate::anchor::{AnchorStatus, DiffAnchor, Side, ThreadComment};

fn new_pr(source: &str, target: &str, purpose: PrPurpose) -> NewPullRequest {
    NewPullRequest {
        author: "a-san".into(),
        artifact: "db-design".into(),
        source: source.into(),
        target: target.into(),
        title: "Add DB design".into(),
        body: "First draft".into(),
        purpose,
        source_head: CommitId::from("c000002"),
    }
}

fn thread(line: usize) -> AnchoredThread {
    AnchoredThread {
        id: 0,
        anchor: DiffAnchor {
            path: "docs/db.md".into(),
            side: Side::New,
            line,
            status: AnchorStatus::Live,
        },
        comments: vec![ThreadComment {
            author: "ta".into(),
            body: "Primary key missing".into(),
        }],
        resolved: false,
    }
}

macro_rules! check {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn pull_requests<F: ForgeBackend>(f: &mut F) -> Result<(), String> {
    let a = f.create_pr(new_pr("create_db", "inspection/db", PrPurpose::GroupReview)).map_err(|e| e.to_string())?;
    let b = f
        .create_pr(new_pr("inspection/db", "master", PrPurpose::Inspection(Round::FIRST)))
        .map_err(|e| e.to_string())?;
    check!(a != b, "pull request ids must be distinct");
    let pr = f.pull_request(b).ok_or("created pull request not found")?;
    check!(pr.state == PrState::Open, "new pull request must be open");
    check!(pr.target == "master" && pr.source == "inspection/db", "branches not stored");
    check!(pr.anchored_head == CommitId::from("c000002"), "source head not stored");
    check!(f.pull_requests().len() == 2, "listing must return both pull requests");
    check!(
        matches!(f.create_pr(new_pr("x", "x", PrPurpose::GroupReview)), Err(ForgeError::SameBranch(_))),
        "source == target must be rejected"
    );
    check!(
        f.pull_request(PrId(999)).is_none() && matches!(f.add_label(PrId(999), "x"), Err(ForgeError::UnknownPr(_))),
        "unknown pull requests must be reported"
    );
    Ok(())
}

fn labels_and_reviewers<F: ForgeBackend>(f: &mut F) -> Result<(), String> {
    let id = f
        .create_pr(new_pr("inspection/db", "master", PrPurpose::Inspection(Round::FIRST)))
        .map_err(|e| e.to_string())?;
    f.add_label(id, INSPECTION_LABEL).map_err(|e| e.to_string())?;
    f.add_label(id, INSPECTION_LABEL).map_err(|e| e.to_string())?;
    f.request_reviewers(id, &["prof".into(), "ta".into()]).map_err(|e| e.to_string())?;
    f.request_reviewers(id, &["ta".into()]).map_err(|e| e.to_string())?;
    let pr = f.pull_request(id).ok_or("missing")?;
    check!(pr.labels.len() == 1 && pr.labels.contains(INSPECTION_LABEL), "labels are a set");
    check!(pr.requested_reviewers == ["prof", "ta"], "reviewers deduplicated in request order");
    check!(pr.pending_reviewers() == ["prof", "ta"], "nobody has reviewed yet");
    let s1 = f.submit_review(id, "ta", ReviewVerdict::Comment).map_err(|e| e.to_string())?;
    let s2 = f.submit_review(id, "prof", ReviewVerdict::RequestChanges).map_err(|e| e.to_string())?;
    check!(s2 > s1, "review sequence numbers must increase");
    let pr = f.pull_request(id).ok_or("missing")?;
    check!(pr.reviews.len() == 2 && pr.pending_reviewers().is_empty(), "reviews not recorded");
    Ok(())
}

fn threads<F: ForgeBackend>(f: &mut F) -> Result<(), String> {
    let id = f.create_pr(new_pr("w", "inspection/db", PrPurpose::GroupReview)).map_err(|e| e.to_string())?;
    let t1 = f.add_thread(id, thread(3)).map_err(|e| e.to_string())?;
    let t2 = f.add_thread(id, thread(5)).map_err(|e| e.to_string())?;
    check!(t1 != t2, "thread ids must be distinct");
    f.reply(id, t1, "a-san", "Added it").map_err(|e| e.to_string())?;
    check!(
        matches!(f.reply(id, t1, "a-san", " "), Err(ForgeError::Anchor(AnchorError::EmptyComment))),
        "empty replies must be rejected"
    );
    check!(
        matches!(f.reply(id, 4242, "a-san", "x"), Err(ForgeError::UnknownThread { .. })),
        "unknown threads must be reported"
    );
    f.set_resolved(id, t1, true).map_err(|e| e.to_string())?;
    let pr = f.pull_request(id).ok_or("missing")?;
    let t = pr.thread(t1).ok_or("thread missing")?;
    check!(t.comments.len() == 2 && t.resolved, "reply or resolution lost");
    check!(t.anchor.line == 3, "reply must not move the anchor");

    let mut moved = pr.comment_threads.clone();
    moved[1].anchor.line = 9;
    f.reanchor(id, moved, CommitId::from("c000009")).map_err(|e| e.to_string())?;
    let pr = f.pull_request(id).ok_or("missing")?;
    check!(pr.thread(t2).map(|t| t.anchor.line) == Some(9), "reanchor must replace threads");
    check!(pr.anchored_head == CommitId::from("c000009"), "reanchor must record the head");
    Ok(())
}

fn states<F: ForgeBackend>(f: &mut F) -> Result<(), String> {
    let id = f.create_pr(new_pr("w", "inspection/db", PrPurpose::GroupReview)).map_err(|e| e.to_string())?;
    f.set_state(id, PrState::Merged, Some(CommitId::from("c000010")), Some(CommitId::from("c000001"))).map_err(|e| e.to_string())?;
    let pr = f.pull_request(id).ok_or("missing")?;
    check!(pr.state == PrState::Merged && pr.merge_commit.is_some(), "merge not recorded");
    check!(
        matches!(f.submit_review(id, "b-san", ReviewVerdict::Approve), Err(ForgeError::PrNotOpen(_))),
        "closed pull requests take no reviews"
    );
    check!(
        matches!(f.set_state(id, PrState::Closed, None, None), Err(ForgeError::PrNotOpen(_))),
        "merged pull requests are final"
    );
    Ok(())
}

fn notifications<F: ForgeBackend>(f: &mut F) -> Result<(), String> {
    let id = f.create_pr(new_pr("inspection/db", "master", PrPurpose::Inspection(Round::FIRST))).map_err(|e| e.to_string())?;
    let n1 = f.notify("prof", "inspection-requested", id);
    let n2 = f.notify("ta", "inspection-requested", id);
    check!(n2 > n1, "notification sequence numbers must increase");
    let all = f.notifications();
    check!(all.len() == 2, "expected two notifications, got {}", all.len());
    check!(all[0].recipient == "prof" && all[1].subject_pr == id, "notification fields lost");
    Ok(())
}

/// Runs every check against fresh forges from `make`.
pub fn run<F: ForgeBackend, M: FnMut() -> F>(mut make: M) -> Result<(), String> {
    pull_requests(&mut make()).map_err(|e| format!("pull requests: {e}"))?;
    labels_and_reviewers(&mut make()).map_err(|e| format!("labels/reviewers: {e}"))?;
    threads(&mut make()).map_err(|e| format!("threads: {e}"))?;
    states(&mut make()).map_err(|e| format!("states: {e}"))?;
    notifications(&mut make()).map_err(|e| format!("notifications: {e}"))?;
    Ok(())
}
