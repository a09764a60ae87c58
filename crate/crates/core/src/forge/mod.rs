//! Pull requests, reviews, notifications and milestones.
//!
//! [`ForgeModel`] is the in-memory forge. It stores records and hands out
//! sequence numbers; the rules about who may review, merge or request an
//! inspection are enforced by [`crate::project::Project`], which drives the
//! forge through the [`ForgeBackend`] seam.

pub mod conformance;

use std::collections::BTreeSet;
use std::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::anchor::{AnchorError, AnchoredThread};
use crate::vcs::CommitId;
use crate::workflow::Round;

/// Label attached to every inspection pull request.
pub const INSPECTION_LABEL: &str = "inspection";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PrId(pub u64);

impl fmt::Display for PrId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

impl std::str::FromStr for PrId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.trim_start_matches('#')
            .parse()
            .map(PrId)
            .map_err(|_| format!("invalid pull request id `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PrState {
    Open,
    Merged,
    Closed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "round", rename_all = "kebab-case")]
pub enum PrPurpose {
    GroupReview,
    Inspection(Round),
}

impl fmt::Display for PrPurpose {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PrPurpose::GroupReview => f.write_str("group-review"),
            PrPurpose::Inspection(r) => write!(f, "inspection({r})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReviewVerdict {
    Approve,
    RequestChanges,
    Comment,
}

impl std::str::FromStr for ReviewVerdict {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "approve" => Ok(ReviewVerdict::Approve),
            "request-changes" => Ok(ReviewVerdict::RequestChanges),
            "comment" => Ok(ReviewVerdict::Comment),
            _ => Err(format!("unknown review verdict `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Review {
    pub author: String,
    pub verdict: ReviewVerdict,
    pub seq: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PullRequest {
    pub id: PrId,
    pub author: String,
    /// Slug of the artifact the pull request belongs to.
    pub artifact: String,
    pub source: String,
    pub target: String,
    pub title: String,
    pub body: String,
    pub labels: BTreeSet<String>,
    /// In request order, without duplicates.
    pub requested_reviewers: Vec<String>,
    pub reviews: Vec<Review>,
    pub comment_threads: Vec<AnchoredThread>,
    pub state: PrState,
    pub purpose: PrPurpose,
    /// Source head the comment threads are currently anchored against.
    pub anchored_head: CommitId,
    pub merge_commit: Option<CommitId>,
    /// Diff base recorded when the pull request stopped being open.
    pub final_base: Option<CommitId>,
    pub opened_seq: u64,
}

impl PullRequest {
    pub fn is_open(&self) -> bool {
        self.state == PrState::Open
    }

    pub fn is_inspection(&self) -> bool {
        matches!(self.purpose, PrPurpose::Inspection(_))
    }

    pub fn thread(&self, id: u64) -> Option<&AnchoredThread> {
        self.comment_threads.iter().find(|t| t.id == id)
    }

    /// Requested reviewers who have not submitted any review yet.
    pub fn pending_reviewers(&self) -> Vec<&str> {
        self.requested_reviewers
            .iter()
            .filter(|r| !self.reviews.iter().any(|rv| &rv.author == *r))
            .map(String::as_str)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Notification {
    pub recipient: String,
    pub event: String,
    pub subject_pr: PrId,
    pub seq: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "id", rename_all = "kebab-case")]
pub enum MilestoneItem {
    PullRequest(PrId),
    Issue(u64),
}

impl fmt::Display for MilestoneItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MilestoneItem::PullRequest(id) => write!(f, "PR {id}"),
            MilestoneItem::Issue(n) => write!(f, "issue #{n}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ItemState {
    Open,
    Closed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MilestoneEntry {
    pub item: MilestoneItem,
    pub state: ItemState,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Milestone {
    pub title: String,
    pub due: NaiveDate,
    pub attached: Vec<MilestoneEntry>,
}

impl Milestone {
    pub fn new(title: impl Into<String>, due: NaiveDate) -> Self {
        Milestone {
            title: title.into(),
            due,
            attached: Vec::new(),
        }
    }

    pub fn closed_count(&self) -> usize {
        self.attached
            .iter()
            .filter(|e| e.state == ItemState::Closed)
            .count()
    }
}

/// Share of attached items that are closed; an empty milestone reports 0.
pub fn milestone_progress(m: &Milestone) -> f64 {
    if m.attached.is_empty() {
        return 0.0;
    }
    m.closed_count() as f64 / m.attached.len() as f64
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ForgeError {
    #[error("pull request {0} does not exist")]
    UnknownPr(PrId),
    #[error("pull request {0} is not open")]
    PrNotOpen(PrId),
    #[error("source and target are both `{0}`")]
    SameBranch(String),
    #[error("thread {thread} does not exist on pull request {pr}")]
    UnknownThread { pr: PrId, thread: u64 },
    #[error("pull request {pr} is a {actual} pull request")]
    WrongPurpose { pr: PrId, actual: PrPurpose },
    #[error(transparent)]
    Anchor(#[from] AnchorError),
}

impl ForgeError {
    pub fn code(&self) -> &'static str {
        match self {
            ForgeError::UnknownPr(_) => "unknown-pr",
            ForgeError::PrNotOpen(_) => "pr-not-open",
            ForgeError::SameBranch(_) => "same-branch",
            ForgeError::UnknownThread { .. } => "unknown-thread",
            ForgeError::WrongPurpose { .. } => "wrong-purpose",
            ForgeError::Anchor(e) => e.code(),
        }
    }
}

/// True once a group member other than the author has approved.
pub fn group_review_complete(pr: &PullRequest, roster: &[String]) -> Result<bool, ForgeError> {
    if pr.purpose != PrPurpose::GroupReview {
        return Err(ForgeError::WrongPurpose {
            pr: pr.id,
            actual: pr.purpose,
        });
    }
    Ok(pr.reviews.iter().any(|r| {
        r.verdict == ReviewVerdict::Approve && r.author != pr.author && roster.contains(&r.author)
    }))
}

/// Fields supplied when opening a pull request.
#[derive(Debug, Clone)]
pub struct NewPullRequest {
    pub author: String,
    pub artifact: String,
    pub source: String,
    pub target: String,
    pub title: String,
    pub body: String,
    pub purpose: PrPurpose,
    pub source_head: CommitId,
}

/// Operations a forge (in-memory or hosted) must offer.
pub trait ForgeBackend {
    fn create_pr(&mut self, new: NewPullRequest) -> Result<PrId, ForgeError>;
    fn add_label(&mut self, pr: PrId, label: &str) -> Result<(), ForgeError>;
    fn request_reviewers(&mut self, pr: PrId, reviewers: &[String]) -> Result<(), ForgeError>;
    fn submit_review(&mut self, pr: PrId, author: &str, verdict: ReviewVerdict) -> Result<u64, ForgeError>;
    /// Stores a thread, assigning it a fresh id.
    fn add_thread(&mut self, pr: PrId, thread: AnchoredThread) -> Result<u64, ForgeError>;
    fn reply(&mut self, pr: PrId, thread: u64, author: &str, body: &str) -> Result<(), ForgeError>;
    fn set_resolved(&mut self, pr: PrId, thread: u64, resolved: bool) -> Result<(), ForgeError>;
    /// Replaces all threads after re-anchoring against `head`.
    fn reanchor(&mut self, pr: PrId, threads: Vec<AnchoredThread>, head: CommitId) -> Result<(), ForgeError>;
    /// Merges or closes an open pull request.
    fn set_state(
        &mut self,
        pr: PrId,
        state: PrState,
        merge_commit: Option<CommitId>,
        final_base: Option<CommitId>,
    ) -> Result<(), ForgeError>;
    fn notify(&mut self, recipient: &str, event: &str, pr: PrId) -> u64;
    fn pull_request(&self, pr: PrId) -> Option<PullRequest>;
    fn pull_requests(&self) -> Vec<PullRequest>;
    fn notifications(&self) -> Vec<Notification>;
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForgeModel {
    pub prs: Vec<PullRequest>,
    pub notifications: Vec<Notification>,
    next_seq: u64,
    next_thread: u64,
}

impl ForgeModel {
    pub fn new() -> Self {
        Self::default()
    }

    fn bump(&mut self) -> u64 {
        self.next_seq += 1;
        self.next_seq
    }

    pub fn get(&self, id: PrId) -> Result<&PullRequest, ForgeError> {
        self.prs
            .iter()
            .find(|p| p.id == id)
            .ok_or(ForgeError::UnknownPr(id))
    }

    fn get_mut(&mut self, id: PrId) -> Result<&mut PullRequest, ForgeError> {
        self.prs
            .iter_mut()
            .find(|p| p.id == id)
            .ok_or(ForgeError::UnknownPr(id))
    }

    fn open_mut(&mut self, id: PrId) -> Result<&mut PullRequest, ForgeError> {
        let pr = self.get_mut(id)?;
        if !pr.is_open() {
            return Err(ForgeError::PrNotOpen(id));
        }
        Ok(pr)
    }
}

impl ForgeBackend for ForgeModel {
    fn create_pr(&mut self, new: NewPullRequest) -> Result<PrId, ForgeError> {
        if new.source == new.target {
            return Err(ForgeError::SameBranch(new.source));
        }
        let id = PrId(self.prs.len() as u64 + 1);
        let opened_seq = self.bump();
        self.prs.push(PullRequest {
            id,
            author: new.author,
            artifact: new.artifact,
            source: new.source,
            target: new.target,
            title: new.title,
            body: new.body,
            labels: BTreeSet::new(),
            requested_reviewers: Vec::new(),
            reviews: Vec::new(),
            comment_threads: Vec::new(),
            state: PrState::Open,
            purpose: new.purpose,
            anchored_head: new.source_head,
            merge_commit: None,
            final_base: None,
            opened_seq,
        });
        Ok(id)
    }

    fn add_label(&mut self, pr: PrId, label: &str) -> Result<(), ForgeError> {
        self.open_mut(pr)?.labels.insert(label.to_owned());
        Ok(())
    }

    fn request_reviewers(&mut self, pr: PrId, reviewers: &[String]) -> Result<(), ForgeError> {
        let pr = self.open_mut(pr)?;
        for r in reviewers {
            if !pr.requested_reviewers.contains(r) {
                pr.requested_reviewers.push(r.clone());
            }
        }
        Ok(())
    }

    fn submit_review(&mut self, pr: PrId, author: &str, verdict: ReviewVerdict) -> Result<u64, ForgeError> {
        self.open_mut(pr)?;
        let seq = self.bump();
        self.open_mut(pr)?.reviews.push(Review {
            author: author.to_owned(),
            verdict,
            seq,
        });
        Ok(seq)
    }

    fn add_thread(&mut self, pr: PrId, mut thread: AnchoredThread) -> Result<u64, ForgeError> {
        self.open_mut(pr)?;
        self.next_thread += 1;
        thread.id = self.next_thread;
        self.open_mut(pr)?.comment_threads.push(thread);
        Ok(self.next_thread)
    }

    fn reply(&mut self, pr: PrId, thread: u64, author: &str, body: &str) -> Result<(), ForgeError> {
        let p = self.get_mut(pr)?;
        let t = p
            .comment_threads
            .iter_mut()
            .find(|t| t.id == thread)
            .ok_or(ForgeError::UnknownThread { pr, thread })?;
        t.reply(author, body)?;
        Ok(())
    }

    fn set_resolved(&mut self, pr: PrId, thread: u64, resolved: bool) -> Result<(), ForgeError> {
        let p = self.get_mut(pr)?;
        let t = p
            .comment_threads
            .iter_mut()
            .find(|t| t.id == thread)
            .ok_or(ForgeError::UnknownThread { pr, thread })?;
        t.resolved = resolved;
        Ok(())
    }

    fn reanchor(&mut self, pr: PrId, threads: Vec<AnchoredThread>, head: CommitId) -> Result<(), ForgeError> {
        let p = self.get_mut(pr)?;
        p.comment_threads = threads;
        p.anchored_head = head;
        Ok(())
    }

    fn set_state(
        &mut self,
        pr: PrId,
        state: PrState,
        merge_commit: Option<CommitId>,
        final_base: Option<CommitId>,
    ) -> Result<(), ForgeError> {
        let p = self.open_mut(pr)?;
        p.state = state;
        p.merge_commit = merge_commit;
        p.final_base = final_base;
        Ok(())
    }

    fn notify(&mut self, recipient: &str, event: &str, pr: PrId) -> u64 {
        let seq = self.bump();
        self.notifications.push(Notification {
            recipient: recipient.to_owned(),
            event: event.to_owned(),
            subject_pr: pr,
            seq,
        });
        seq
    }

    fn pull_request(&self, pr: PrId) -> Option<PullRequest> {
        self.get(pr).ok().cloned()
    }

    fn pull_requests(&self) -> Vec<PullRequest> {
        self.prs.clone()
    }

    fn notifications(&self) -> Vec<Notification> {
        self.notifications.clone()
    }
}
