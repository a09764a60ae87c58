//! The course project: members, groups, artifacts and their inspections.
//!
//! [`Project`] ties the workflow machine, branch topology, forge and history
//! store together. Every mutating operation is all-or-nothing: on error the
//! state and the history store are rolled back to where they were.

use std::collections::BTreeMap;
use std::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::anchor::{open_thread, remap_anchors, Side};
use crate::artifact::{lint_commit, CommitLintReport, LintPolicy};
use crate::diff::{compute_diff, FileDiff};
use crate::error::{Error, Result};
use crate::forge::{
    group_review_complete, ForgeBackend, ForgeError, ForgeModel, ItemState, Milestone, MilestoneEntry, MilestoneItem,
    NewPullRequest, Notification, PrId, PrPurpose, PrState, PullRequest, ReviewVerdict, INSPECTION_LABEL,
};
use crate::topology::{
    create_bare_work_branch, create_inspection_branch, create_work_branch, is_identifier, is_slug, merge_branch,
    BranchRole, NamingPolicy, TopologyError,
};
use crate::vcs::{CommitId, Snapshot, VcsBackend};
use crate::workflow::{
    advance, can_merge_to_master, phase_merge_decision, request_round, ArtifactKind, ArtifactRecord, InspectionPhase,
    InspectionVerdict, MergeDecision, Round, WorkflowEvent,
};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    Student,
    Ta,
    Instructor,
}

impl Role {
    pub fn is_staff(self) -> bool {
        self != Role::Student
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Student => "student",
            Role::Ta => "ta",
            Role::Instructor => "instructor",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Member {
    pub id: String,
    pub role: Role,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkBranch {
    pub name: String,
    pub owner: String,
    pub artifact: String,
    pub round: Round,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectState {
    pub schema_version: u32,
    pub project_name: String,
    pub members: Vec<Member>,
    pub groups: BTreeMap<String, Vec<String>>,
    pub artifacts: Vec<ArtifactRecord>,
    pub naming: NamingPolicy,
    #[serde(default)]
    pub lint: LintPolicy,
    pub milestones: Vec<Milestone>,
    pub forge: ForgeModel,
    pub work_branches: Vec<WorkBranch>,
}

impl ProjectState {
    pub fn member(&self, id: &str) -> Option<&Member> {
        self.members.iter().find(|m| m.id == id)
    }

    pub fn instructor(&self) -> &str {
        self.members
            .iter()
            .find(|m| m.role == Role::Instructor)
            .map(|m| m.id.as_str())
            .unwrap_or_default()
    }

    /// Instructor first, then TAs in registration order.
    pub fn staff(&self) -> Vec<String> {
        let mut staff: Vec<String> = vec![self.instructor().to_owned()];
        staff.extend(self.members.iter().filter(|m| m.role == Role::Ta).map(|m| m.id.clone()));
        staff
    }

    pub fn group_of(&self, member: &str) -> Option<&str> {
        self.groups
            .iter()
            .find(|(_, ms)| ms.iter().any(|m| m == member))
            .map(|(g, _)| g.as_str())
    }

    pub fn artifact(&self, slug: &str) -> Result<&ArtifactRecord> {
        self.artifacts
            .iter()
            .find(|a| a.slug == slug)
            .ok_or_else(|| Error::UnknownArtifact(slug.to_owned()))
    }

    pub fn roster(&self, group: &str) -> &[String] {
        self.groups.get(group).map(Vec::as_slice).unwrap_or_default()
    }

    pub fn pr(&self, id: PrId) -> Result<&PullRequest> {
        Ok(self.forge.get(id)?)
    }

    /// The open inspection pull request of `slug`, if any.
    pub fn open_inspection_pr(&self, slug: &str) -> Option<&PullRequest> {
        self.forge
            .prs
            .iter()
            .find(|p| p.artifact == slug && p.is_open() && p.is_inspection())
    }

    /// Checks the structural invariants a loaded or freshly built state must hold.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidProject(m));
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::SchemaVersion {
                found: self.schema_version,
                expected: SCHEMA_VERSION,
            });
        }
        let instructors = self.members.iter().filter(|m| m.role == Role::Instructor).count();
        if instructors != 1 {
            return bad(format!("expected exactly one instructor, found {instructors}"));
        }
        for (i, m) in self.members.iter().enumerate() {
            if !is_identifier(&m.id) {
                return bad(format!("invalid member id `{}`", m.id));
            }
            if self.members[..i].iter().any(|o| o.id == m.id) {
                return bad(format!("member `{}` registered twice", m.id));
            }
        }
        for (g, ms) in &self.groups {
            if !is_identifier(g) {
                return bad(format!("invalid group id `{g}`"));
            }
            for m in ms {
                match self.member(m) {
                    Some(Member { role: Role::Student, .. }) => {}
                    Some(_) => return bad(format!("staff member `{m}` cannot belong to group `{g}`")),
                    None => return bad(format!("group `{g}` lists unknown member `{m}`")),
                }
            }
        }
        for m in self.members.iter().filter(|m| m.role == Role::Student) {
            let n = self.groups.values().filter(|ms| ms.contains(&m.id)).count();
            if n != 1 {
                return bad(format!("student `{}` belongs to {n} groups (expected 1)", m.id));
            }
        }
        for (i, a) in self.artifacts.iter().enumerate() {
            if !a.is_consistent() {
                return bad(format!("artifact `{}` has inconsistent phase", a.slug));
            }
            if self.artifacts[..i].iter().any(|o| o.slug == a.slug) {
                return bad(format!("artifact `{}` registered twice", a.slug));
            }
            if !self.groups.contains_key(&a.group) {
                return bad(format!("artifact `{}` belongs to unknown group `{}`", a.slug, a.group));
            }
        }
        self.naming.validate()?;
        Ok(())
    }
}

/// Who takes part in a new project.
#[derive(Debug, Clone, Default)]
pub struct ProjectConfig {
    pub name: String,
    pub instructor: String,
    pub tas: Vec<String>,
    pub groups: BTreeMap<String, Vec<String>>,
    pub naming: NamingPolicy,
    pub lint: LintPolicy,
}

#[derive(Debug, Clone)]
pub struct FileChange {
    pub path: String,
    /// `None` deletes the file.
    pub content: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InspectionStatus {
    pub pr: PrId,
    pub round: Round,
    pub pending_reviewers: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArtifactStatus {
    pub slug: String,
    pub name: String,
    pub kind: ArtifactKind,
    pub group: String,
    pub phase: InspectionPhase,
    pub rounds_used: u8,
    pub open_inspection: Option<InspectionStatus>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MilestoneStatus {
    pub title: String,
    pub due: NaiveDate,
    pub closed: usize,
    pub attached: usize,
    pub progress: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatusReport {
    pub project: String,
    pub artifacts: Vec<ArtifactStatus>,
    pub milestones: Vec<MilestoneStatus>,
}

#[derive(Debug, Clone)]
pub struct Project<B: VcsBackend> {
    pub state: ProjectState,
    pub vcs: B,
}

impl<B: VcsBackend> Project<B> {
    /// Registers members and creates master with an initial commit (unless
    /// the history store already has one).
    pub fn init(mut vcs: B, config: ProjectConfig) -> Result<Self> {
        let mut members = vec![Member {
            id: config.instructor.clone(),
            role: Role::Instructor,
        }];
        members.extend(config.tas.iter().map(|t| Member {
            id: t.clone(),
            role: Role::Ta,
        }));
        for ms in config.groups.values() {
            members.extend(ms.iter().map(|s| Member {
                id: s.clone(),
                role: Role::Student,
            }));
        }
        let state = ProjectState {
            schema_version: SCHEMA_VERSION,
            project_name: config.name.clone(),
            members,
            groups: config.groups,
            artifacts: Vec::new(),
            naming: config.naming,
            lint: config.lint,
            milestones: Vec::new(),
            forge: ForgeModel::new(),
            work_branches: Vec::new(),
        };
        state.validate()?;
        let master = state.naming.master_name.clone();
        if vcs.resolve_branch(&master).is_none() {
            let readme: Snapshot = [("README.md".to_owned(), vec![format!("# {}", config.name)])].into();
            let root = vcs.commit(&[], readme, "Initialize project repository", &config.instructor)?;
            vcs.create_branch(&master, &root)?;
        }
        Ok(Project { state, vcs })
    }

    pub fn open(state: ProjectState, vcs: B) -> Result<Self> {
        state.validate()?;
        Ok(Project { state, vcs })
    }

    /// Runs `f`; on error restores state and history to their prior values.
    pub fn transact<T>(&mut self, f: impl FnOnce(&mut Self) -> Result<T>) -> Result<T> {
        let saved = self.state.clone();
        let checkpoint = self.vcs.checkpoint();
        match f(self) {
            Ok(v) => Ok(v),
            Err(e) => {
                self.state = saved;
                self.vcs.rollback(checkpoint);
                Err(e)
            }
        }
    }

    pub fn member(&self, actor: &str) -> Result<&Member> {
        self.state
            .member(actor)
            .ok_or_else(|| Error::UnknownMember(actor.to_owned()))
    }

    fn require_group_member(&self, actor: &str, slug: &str) -> Result<()> {
        let group = &self.state.artifact(slug)?.group;
        if self.state.roster(group).iter().any(|m| m == actor) {
            Ok(())
        } else {
            Err(Error::NotGroupMember {
                actor: actor.to_owned(),
                group: group.clone(),
            })
        }
    }

    fn require_participant(&self, actor: &str, slug: &str) -> Result<()> {
        if self.member(actor)?.role.is_staff() {
            return Ok(());
        }
        self.require_group_member(actor, slug)
    }

    fn fire(&mut self, slug: &str, event: WorkflowEvent) -> Result<()> {
        let a = self
            .state
            .artifacts
            .iter_mut()
            .find(|a| a.slug == slug)
            .ok_or_else(|| Error::UnknownArtifact(slug.to_owned()))?;
        a.apply(event)?;
        Ok(())
    }

    fn head(&self, branch: &str) -> Result<CommitId> {
        self.vcs
            .resolve_branch(branch)
            .ok_or_else(|| TopologyError::BranchMissing(branch.to_owned()).into())
    }

    /// Current round of `slug` for new work: 2 once the round-2 branch exists.
    pub fn current_round(&self, slug: &str) -> Round {
        let r2 = self.state.naming.inspection_branch(slug, Round::SECOND);
        if self.vcs.resolve_branch(&r2).is_some() {
            Round::SECOND
        } else {
            Round::FIRST
        }
    }

    pub fn add_artifact(
        &mut self,
        actor: &str,
        slug: &str,
        name: &str,
        kind: ArtifactKind,
        group: Option<&str>,
    ) -> Result<ArtifactRecord> {
        self.transact(|p| {
            if !is_slug(slug) {
                return Err(TopologyError::InvalidName(slug.to_owned()).into());
            }
            if p.state.artifact(slug).is_ok() {
                return Err(Error::DuplicateArtifact(slug.to_owned()));
            }
            let member = p.member(actor)?.clone();
            let group = match (member.role, group) {
                (Role::Student, g) => {
                    let own = p.state.group_of(actor).unwrap_or_default().to_owned();
                    if let Some(g) = g.filter(|g| *g != own) {
                        return Err(Error::NotGroupMember {
                            actor: actor.to_owned(),
                            group: g.to_owned(),
                        });
                    }
                    own
                }
                (_, Some(g)) => g.to_owned(),
                (_, None) => return Err(Error::Usage("staff must name the owning group with --group".into())),
            };
            if !p.state.groups.contains_key(&group) {
                return Err(Error::UnknownGroup(group));
            }
            let id = format!("A{}", p.state.artifacts.len() + 1);
            let record = ArtifactRecord::new(id, name, slug, kind, group);
            p.state.artifacts.push(record.clone());
            Ok(record)
        })
    }

    /// Forks the inspection branch of `slug` for `round` (default: the next
    /// round that has no branch yet).
    pub fn branch_inspection(&mut self, actor: &str, slug: &str, round: Option<Round>) -> Result<String> {
        self.transact(|p| {
            p.require_group_member(actor, slug)?;
            let rounds_used = p.state.artifact(slug)?.rounds_used;
            let round = round.unwrap_or(if rounds_used == 0 { Round::FIRST } else { Round::SECOND });
            if round == Round::SECOND && rounds_used == 0 {
                return Err(Error::RoundNotOpen {
                    slug: slug.to_owned(),
                    round,
                });
            }
            Ok(create_inspection_branch(&mut p.vcs, &p.state.naming, slug, round)?)
        })
    }

    /// Forks a work branch for `actor` from the current inspection branch.
    /// `bare_name` bypasses the naming pattern.
    pub fn branch_work(&mut self, actor: &str, slug: &str, task: &str, bare_name: Option<&str>) -> Result<String> {
        self.transact(|p| {
            p.require_group_member(actor, slug)?;
            let round = p.current_round(slug);
            let naming = p.state.naming.clone();
            let name = match bare_name {
                Some(n) => create_bare_work_branch(&mut p.vcs, &naming, n, slug, round)?,
                None => {
                    let owner = if naming.work_pattern.contains("<owner>") { actor } else { "" };
                    create_work_branch(&mut p.vcs, &naming, owner, task, slug, round)?
                }
            };
            p.state.work_branches.push(WorkBranch {
                name: name.clone(),
                owner: actor.to_owned(),
                artifact: slug.to_owned(),
                round,
            });
            Ok(name)
        })
    }

    fn branch_artifact(&self, branch: &str) -> Option<String> {
        if let Some(w) = self.state.work_branches.iter().find(|w| w.name == branch) {
            return Some(w.artifact.clone());
        }
        match self.state.naming.classify(branch) {
            BranchRole::Inspection { slug, .. } => Some(slug),
            _ => None,
        }
    }

    /// Records a commit on `branch` that applies `changes` to its head.
    pub fn commit(&mut self, actor: &str, branch: &str, message: &str, changes: &[FileChange]) -> Result<CommitId> {
        self.transact(|p| {
            if branch == p.state.naming.master_name {
                return Err(Error::ProtectedBranch(branch.to_owned()));
            }
            if message.trim().is_empty() {
                return Err(Error::Usage("commit message must not be empty".into()));
            }
            if let Some(slug) = p.branch_artifact(branch) {
                if p.state.artifact(&slug).is_ok() {
                    p.require_group_member(actor, &slug)?;
                }
            }
            let head = p.head(branch)?;
            let mut snap = p.vcs.snapshot(&head)?;
            for c in changes {
                match &c.content {
                    Some(lines) => {
                        snap.insert(c.path.clone(), lines.clone());
                    }
                    None => {
                        snap.remove(&c.path);
                    }
                }
            }
            let id = p.vcs.commit(&[head], snap, message, actor)?;
            p.vcs.set_branch(branch, &id)?;
            p.after_branch_moved(branch)?;
            Ok(id)
        })
    }

    /// Re-anchors threads of open pull requests whose source is `branch`, and
    /// records revisions on inspection pull requests.
    fn after_branch_moved(&mut self, branch: &str) -> Result<()> {
        let ids: Vec<PrId> = self
            .state
            .forge
            .prs
            .iter()
            .filter(|p| p.is_open() && p.source == branch)
            .map(|p| p.id)
            .collect();
        for id in ids {
            if self.refresh_pr(id)? && self.state.pr(id)?.is_inspection() {
                let slug = self.state.pr(id)?.artifact.clone();
                let phase = self.state.artifact(&slug)?.phase;
                if matches!(phase, InspectionPhase::RevisionRequested(_) | InspectionPhase::Approved) {
                    self.fire(&slug, WorkflowEvent::RevisionSubmitted)?;
                }
            }
        }
        Ok(())
    }

    /// Carries threads of `id` to the current source head. Returns whether
    /// the head had moved.
    fn refresh_pr(&mut self, id: PrId) -> Result<bool> {
        let pr = self.state.pr(id)?;
        let Some(head) = self.vcs.resolve_branch(&pr.source) else {
            return Ok(false);
        };
        if head == pr.anchored_head {
            return Ok(false);
        }
        let incremental = compute_diff(&self.vcs.snapshot(&pr.anchored_head)?, &self.vcs.snapshot(&head)?);
        let threads = remap_anchors(&pr.comment_threads, &incremental);
        self.state.forge.reanchor(id, threads, head)?;
        Ok(true)
    }

    /// Base commit of the pull request diff: the merge base of target and
    /// source heads while open, the recorded base afterwards.
    pub fn round_base(&self, id: PrId) -> Result<CommitId> {
        let pr = self.state.pr(id)?;
        if let Some(base) = &pr.final_base {
            return Ok(base.clone());
        }
        let source = self.head(&pr.source)?;
        let target = self.head(&pr.target)?;
        Ok(self.vcs.merge_base(&target, &source)?)
    }

    /// The diff a pull request shows: round base against the source head.
    pub fn pr_diff(&self, id: PrId) -> Result<(CommitId, CommitId, Vec<FileDiff>)> {
        let pr = self.state.pr(id)?;
        let base = self.round_base(id)?;
        let head = if pr.is_open() {
            self.head(&pr.source)?
        } else {
            pr.anchored_head.clone()
        };
        let diffs = compute_diff(&self.vcs.snapshot(&base)?, &self.vcs.snapshot(&head)?);
        Ok((base, head, diffs))
    }

    pub fn open_group_review_pr(
        &mut self,
        actor: &str,
        work: &str,
        inspection: Option<&str>,
        title: &str,
        body: &str,
    ) -> Result<PrId> {
        self.transact(|p| {
            let work_head = p.head(work)?;
            let target = match inspection {
                Some(t) => t.to_owned(),
                None => {
                    let w = p
                        .state
                        .work_branches
                        .iter()
                        .find(|w| w.name == work)
                        .ok_or_else(|| Error::Usage(format!("`{work}` is not a registered work branch; pass --into")))?;
                    p.state.naming.inspection_branch(&w.artifact, w.round)
                }
            };
            let target_head = p.head(&target)?;
            let BranchRole::Inspection { slug, .. } = p.state.naming.classify(&target) else {
                return Err(Error::NotInspectionBranch(target));
            };
            p.require_group_member(actor, &slug)?;
            if let Some(dup) = p
                .state
                .forge
                .prs
                .iter()
                .find(|x| x.is_open() && x.source == work && x.target == target)
            {
                return Err(Error::DuplicatePr(dup.id));
            }
            if p.vcs.is_ancestor(&work_head, &target_head)? {
                return Err(Error::NothingToReview {
                    work: work.to_owned(),
                    target,
                });
            }
            p.fire(&slug, WorkflowEvent::OpenGroupReviewPr)?;
            let id = p.state.forge.create_pr(NewPullRequest {
                author: actor.to_owned(),
                artifact: slug,
                source: work.to_owned(),
                target,
                title: title.to_owned(),
                body: body.to_owned(),
                purpose: PrPurpose::GroupReview,
                source_head: work_head,
            })?;
            Ok(id)
        })
    }

    pub fn review(&mut self, actor: &str, id: PrId, verdict: ReviewVerdict) -> Result<u64> {
        self.transact(|p| {
            let pr = p.state.pr(id)?.clone();
            if !pr.is_open() {
                return Err(ForgeError::PrNotOpen(id).into());
            }
            match pr.purpose {
                PrPurpose::GroupReview => {
                    p.require_group_member(actor, &pr.artifact)?;
                    let seq = p.state.forge.submit_review(id, actor, verdict)?;
                    let phase = p.state.artifact(&pr.artifact)?.phase;
                    if verdict == ReviewVerdict::Approve && actor != pr.author && phase == InspectionPhase::GroupReview {
                        p.fire(&pr.artifact, WorkflowEvent::GroupApproved)?;
                    }
                    Ok(seq)
                }
                PrPurpose::Inspection(round) => {
                    if !pr.requested_reviewers.iter().any(|r| r == actor) {
                        return Err(Error::NotRequestedReviewer {
                            actor: actor.to_owned(),
                            pr: id,
                        });
                    }
                    let seq = p.state.forge.submit_review(id, actor, verdict)?;
                    let phase = p.state.artifact(&pr.artifact)?.phase;
                    if matches!(phase, InspectionPhase::InspectionRequested(r) | InspectionPhase::UnderInspection(r) if r == round)
                    {
                        p.fire(&pr.artifact, WorkflowEvent::StaffReviewSubmitted)?;
                    }
                    Ok(seq)
                }
            }
        })
    }

    fn close_pr(&mut self, id: PrId, state: PrState, merge_commit: Option<CommitId>, base: CommitId) -> Result<()> {
        self.refresh_pr(id)?;
        self.state.forge.set_state(id, state, merge_commit, Some(base))?;
        for m in &mut self.state.milestones {
            for e in &mut m.attached {
                if e.item == MilestoneItem::PullRequest(id) {
                    e.state = ItemState::Closed;
                }
            }
        }
        Ok(())
    }

    /// Merges `id` into its target, closing it. Callers check the gates.
    fn merge_pr_unchecked(&mut self, actor: &str, id: PrId) -> Result<CommitId> {
        let pr = self.state.pr(id)?.clone();
        let base = self.round_base(id)?;
        let slug = pr.artifact.clone();
        let record = self.state.artifact(&slug)?.clone();
        let naming = self.state.naming.clone();
        let outcome = merge_branch(&mut self.vcs, &naming, &pr.source, &pr.target, actor, || {
            can_merge_to_master(&record)
        })?;
        self.close_pr(id, PrState::Merged, Some(outcome.commit.clone()), base)?;
        self.after_branch_moved(&pr.target)?;
        Ok(outcome.commit)
    }

    pub fn merge_pull_request(&mut self, actor: &str, id: PrId) -> Result<CommitId> {
        self.transact(|p| {
            let pr = p.state.pr(id)?.clone();
            if !pr.is_open() {
                return Err(ForgeError::PrNotOpen(id).into());
            }
            p.require_group_member(actor, &pr.artifact)?;
            match pr.purpose {
                PrPurpose::GroupReview => {
                    let roster = p.state.roster(&p.state.artifact(&pr.artifact)?.group).to_vec();
                    if !group_review_complete(&pr, &roster)? {
                        return Err(Error::GroupReviewIncomplete(vec![id]));
                    }
                    p.merge_pr_unchecked(actor, id)
                }
                PrPurpose::Inspection(_) => {
                    let phase = p.state.artifact(&pr.artifact)?.phase;
                    if let MergeDecision::Deny(d) = phase_merge_decision(phase) {
                        return Err(Error::MergeEmbargo(d));
                    }
                    let commit = p.merge_pr_unchecked(actor, id)?;
                    if pr.target == p.state.naming.master_name {
                        p.fire(&pr.artifact, WorkflowEvent::MergeToMaster)?;
                    }
                    Ok(commit)
                }
            }
        })
    }

    /// Opens the inspection pull request for the next round of `slug`.
    pub fn request_inspection(&mut self, actor: &str, slug: &str) -> Result<PrId> {
        self.transact(|p| {
            p.require_group_member(actor, slug)?;
            let record = p.state.artifact(slug)?.clone();
            advance(record.phase, record.rounds_used, WorkflowEvent::RequestInspection)?;
            let round = request_round(&record)?;
            let naming = p.state.naming.clone();
            let branch = naming.inspection_branch(slug, round);
            let head = p.head(&branch)?;

            let unmerged: Vec<PrId> = p
                .state
                .forge
                .prs
                .iter()
                .filter(|x| x.purpose == PrPurpose::GroupReview && x.is_open() && x.target == branch)
                .map(|x| x.id)
                .collect();
            if !unmerged.is_empty() {
                return Err(Error::GroupReviewIncomplete(unmerged));
            }

            let target = if round == Round::FIRST {
                naming.master_name.clone()
            } else {
                let roster = p.state.roster(&record.group).to_vec();
                let unanswered: Vec<u64> = p
                    .state
                    .forge
                    .prs
                    .iter()
                    .filter(|x| x.artifact == slug && x.purpose == PrPurpose::Inspection(Round::FIRST))
                    .flat_map(|x| &x.comment_threads)
                    .filter(|t| !t.replies().iter().any(|c| roster.contains(&c.author)))
                    .map(|t| t.id)
                    .collect();
                if !unanswered.is_empty() {
                    return Err(Error::UnansweredComments(unanswered));
                }
                naming.inspection_branch(slug, Round::FIRST)
            };
            let target_head = p.head(&target)?;
            if p.vcs.is_ancestor(&head, &target_head)? {
                return Err(Error::NothingToReview {
                    work: branch,
                    target,
                });
            }

            // One open inspection pull request per artifact: the round-1
            // request is superseded by round 2.
            if let Some(prev) = p.state.open_inspection_pr(slug).map(|x| x.id) {
                let base = p.round_base(prev)?;
                p.close_pr(prev, PrState::Closed, None, base)?;
            }

            let id = p.state.forge.create_pr(NewPullRequest {
                author: actor.to_owned(),
                artifact: slug.to_owned(),
                source: branch,
                target,
                title: format!("Inspection round {round}: {}", record.name),
                body: format!("Requesting inspection of {} ({}).", record.name, record.kind),
                purpose: PrPurpose::Inspection(round),
                source_head: head,
            })?;
            let staff = p.state.staff();
            p.state.forge.add_label(id, INSPECTION_LABEL)?;
            p.state.forge.request_reviewers(id, &staff)?;
            for s in &staff {
                p.state.forge.notify(s, "inspection-requested", id);
            }
            p.fire(slug, WorkflowEvent::RequestInspection)?;
            Ok(id)
        })
    }

    /// Opens a thread on a line of the pull request diff.
    pub fn comment(&mut self, actor: &str, id: PrId, path: &str, side: Side, line: usize, body: &str) -> Result<u64> {
        self.transact(|p| {
            let pr = p.state.pr(id)?.clone();
            p.require_participant(actor, &pr.artifact)?;
            if !pr.is_open() {
                return Err(ForgeError::PrNotOpen(id).into());
            }
            p.refresh_pr(id)?;
            let (_, _, diffs) = p.pr_diff(id)?;
            let thread = open_thread(0, &diffs, path, side, line, actor, body)?;
            Ok(p.state.forge.add_thread(id, thread)?)
        })
    }

    pub fn reply(&mut self, actor: &str, id: PrId, thread: u64, body: &str, resolve: bool) -> Result<()> {
        self.transact(|p| {
            let pr = p.state.pr(id)?.clone();
            p.require_participant(actor, &pr.artifact)?;
            p.state.forge.reply(id, thread, actor, body)?;
            if resolve {
                p.state.forge.set_resolved(id, thread, true)?;
            }
            Ok(())
        })
    }

    /// Consolidates the staff reviews of an inspection pull request and
    /// notifies the group.
    pub fn complete_inspection(&mut self, actor: &str, id: PrId, verdict: InspectionVerdict) -> Result<Vec<Notification>> {
        self.transact(|p| {
            if p.state.member(actor).map(|m| m.role) != Some(Role::Instructor) {
                return Err(Error::NotInstructor(actor.to_owned()));
            }
            let pr = p.state.pr(id)?.clone();
            if !pr.is_inspection() {
                return Err(ForgeError::WrongPurpose {
                    pr: id,
                    actual: pr.purpose,
                }
                .into());
            }
            if !pr.is_open() {
                return Err(ForgeError::PrNotOpen(id).into());
            }
            let pending: Vec<String> = pr.pending_reviewers().into_iter().map(String::from).collect();
            if !pending.is_empty() {
                return Err(Error::StaffReviewsPending(pending));
            }
            p.fire(&pr.artifact, WorkflowEvent::InspectionCompleted(verdict))?;
            let event = match verdict {
                InspectionVerdict::Approve => "inspection-approved",
                InspectionVerdict::RequestChanges => "inspection-changes-requested",
            };
            let group = p.state.artifact(&pr.artifact)?.group.clone();
            let roster = p.state.roster(&group).to_vec();
            let first = p.state.forge.notifications.len();
            for m in &roster {
                p.state.forge.notify(m, event, id);
            }
            Ok(p.state.forge.notifications[first..].to_vec())
        })
    }

    /// Merges an approved artifact into master, first folding an open
    /// round-2 pull request into the round-1 branch.
    pub fn merge_master(&mut self, actor: &str, slug: &str) -> Result<CommitId> {
        self.transact(|p| {
            p.require_group_member(actor, slug)?;
            let record = p.state.artifact(slug)?.clone();
            if let MergeDecision::Deny(d) = can_merge_to_master(&record) {
                return Err(Error::MergeEmbargo(d));
            }
            let master = p.state.naming.master_name.clone();
            let commit = match p.state.open_inspection_pr(slug).cloned() {
                Some(pr) if pr.target == master => p.merge_pr_unchecked(actor, pr.id)?,
                open => {
                    if let Some(pr) = open {
                        p.merge_pr_unchecked(actor, pr.id)?;
                    }
                    let r1 = p.state.naming.inspection_branch(slug, Round::FIRST);
                    let naming = p.state.naming.clone();
                    merge_branch(&mut p.vcs, &naming, &r1, &master, actor, || can_merge_to_master(&record))?.commit
                }
            };
            p.fire(slug, WorkflowEvent::MergeToMaster)?;
            Ok(commit)
        })
    }

    pub fn milestone_create(&mut self, title: &str, due: NaiveDate) -> Result<()> {
        self.transact(|p| {
            if title.trim().is_empty() {
                return Err(Error::Usage("milestone title must not be empty".into()));
            }
            if p.state.milestones.iter().any(|m| m.title == title) {
                return Err(Error::DuplicateMilestone(title.to_owned()));
            }
            p.state.milestones.push(Milestone::new(title, due));
            Ok(())
        })
    }

    pub fn milestone_attach(&mut self, title: &str, item: MilestoneItem) -> Result<()> {
        self.transact(|p| {
            let state = match item {
                MilestoneItem::PullRequest(id) => match p.state.pr(id)?.state {
                    PrState::Open => ItemState::Open,
                    _ => ItemState::Closed,
                },
                MilestoneItem::Issue(_) => ItemState::Open,
            };
            let m = p
                .state
                .milestones
                .iter_mut()
                .find(|m| m.title == title)
                .ok_or_else(|| Error::UnknownMilestone(title.to_owned()))?;
            if !m.attached.iter().any(|e| e.item == item) {
                m.attached.push(MilestoneEntry { item, state });
            }
            Ok(())
        })
    }

    /// Closes an issue item. Pull request items follow their pull request.
    pub fn milestone_close(&mut self, title: &str, issue: u64) -> Result<()> {
        self.transact(|p| {
            let m = p
                .state
                .milestones
                .iter_mut()
                .find(|m| m.title == title)
                .ok_or_else(|| Error::UnknownMilestone(title.to_owned()))?;
            let e = m
                .attached
                .iter_mut()
                .find(|e| e.item == MilestoneItem::Issue(issue))
                .ok_or_else(|| Error::Usage(format!("issue #{issue} is not attached to `{title}`")))?;
            e.state = ItemState::Closed;
            Ok(())
        })
    }

    pub fn status(&self) -> StatusReport {
        let mut artifacts: Vec<ArtifactStatus> = self
            .state
            .artifacts
            .iter()
            .map(|a| ArtifactStatus {
                slug: a.slug.clone(),
                name: a.name.clone(),
                kind: a.kind,
                group: a.group.clone(),
                phase: a.phase,
                rounds_used: a.rounds_used,
                open_inspection: self.state.open_inspection_pr(&a.slug).map(|pr| InspectionStatus {
                    pr: pr.id,
                    round: match pr.purpose {
                        PrPurpose::Inspection(r) => r,
                        PrPurpose::GroupReview => Round::FIRST,
                    },
                    pending_reviewers: pr.pending_reviewers().into_iter().map(String::from).collect(),
                }),
            })
            .collect();
        artifacts.sort_by(|a, b| a.slug.cmp(&b.slug));
        let milestones = self
            .state
            .milestones
            .iter()
            .map(|m| MilestoneStatus {
                title: m.title.clone(),
                due: m.due,
                closed: m.closed_count(),
                attached: m.attached.len(),
                progress: crate::forge::milestone_progress(m),
            })
            .collect();
        StatusReport {
            project: self.state.project_name.clone(),
            artifacts,
            milestones,
        }
    }

    /// Lints the commits on `branch` that master does not contain (all
    /// commits when `branch` is master), oldest first.
    pub fn lint_commits(&self, branch: &str) -> Result<Vec<CommitLintReport>> {
        let head = self.head(branch)?;
        let mut commits = self.vcs.ancestors(&head)?;
        if branch != self.state.naming.master_name {
            let master = self.head(&self.state.naming.master_name)?;
            for c in self.vcs.ancestors(&master)? {
                commits.remove(&c);
            }
        }
        let mut ordered = Vec::with_capacity(commits.len());
        for c in commits {
            ordered.push((self.vcs.generation(&c)?, c));
        }
        ordered.sort();
        ordered
            .into_iter()
            .map(|(_, c)| lint_commit(&self.vcs, &c, &self.state.lint).map_err(Error::from))
            .collect()
    }

    pub fn notifications_for(&self, member: &str) -> Vec<Notification> {
        self.state
            .forge
            .notifications
            .iter()
            .filter(|n| n.recipient == member)
            .cloned()
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::anchor::AnchorStatus;
    use crate::error::ErrorFamily;
    use crate::vcs::VcsModel;
    use crate::workflow::MergeDenial;

    fn lines(s: &[&str]) -> Vec<String> {
        s.iter().map(|x| x.to_string()).collect()
    }

    fn change(path: &str, content: &[&str]) -> FileChange {
        FileChange {
            path: path.into(),
            content: Some(lines(content)),
        }
    }

    fn project() -> Project<VcsModel> {
        let mut p = Project::init(
            VcsModel::new(),
            ProjectConfig {
                name: "Library system".into(),
                instructor: "prof".into(),
                tas: vec!["ta".into()],
                groups: [("g1".to_string(), vec!["a-san".to_string(), "b-san".to_string()])].into(),
                ..Default::default()
            },
        )
        .unwrap();
        p.add_artifact("a-san", "db-design", "DB design", ArtifactKind::DbDesign, None)
            .unwrap();
        p
    }

    const DOC: &str = "docs/db-design.md";

    /// Round-1 request with one merged, approved group PR. Returns the
    /// inspection pull request.
    fn requested(p: &mut Project<VcsModel>) -> PrId {
        p.branch_inspection("a-san", "db-design", None).unwrap();
        p.branch_work("a-san", "db-design", "", Some("create_db_design")).unwrap();
        p.commit(
            "a-san",
            "create_db_design",
            "Add first DB design draft",
            &[change(DOC, &["# DB design", "", "## Tables", "book(id, title)", "member(id, name)"])],
        )
        .unwrap();
        let gr = p
            .open_group_review_pr("a-san", "create_db_design", None, "DB design", "")
            .unwrap();
        p.review("b-san", gr, ReviewVerdict::Approve).unwrap();
        p.merge_pull_request("a-san", gr).unwrap();
        p.request_inspection("a-san", "db-design").unwrap()
    }

    fn phase(p: &Project<VcsModel>) -> InspectionPhase {
        p.state.artifact("db-design").unwrap().phase
    }

    #[test]
    fn state_invariants() {
        let p = project();
        assert_eq!(p.state.staff(), vec!["prof", "ta"]);
        let mut bad = p.state.clone();
        bad.members.push(Member {
            id: "prof2".into(),
            role: Role::Instructor,
        });
        assert!(matches!(bad.validate(), Err(Error::InvalidProject(_))));
        let mut orphan = p.state.clone();
        orphan.members.push(Member {
            id: "c-san".into(),
            role: Role::Student,
        });
        assert!(orphan.validate().is_err());
    }

    #[test]
    fn group_review_pr_preconditions() {
        let mut p = project();
        p.branch_inspection("a-san", "db-design", None).unwrap();
        p.branch_work("a-san", "db-design", "", Some("create_db_design")).unwrap();
        let err = p
            .open_group_review_pr("a-san", "create_db_design", None, "t", "")
            .unwrap_err();
        assert_eq!(err.code(), "nothing-to-review");
        let err = p.open_group_review_pr("a-san", "nope", None, "t", "").unwrap_err();
        assert_eq!(err.code(), "branch-missing");
        p.commit("a-san", "create_db_design", "Add table list", &[change(DOC, &["# DB"])])
            .unwrap();
        let id = p
            .open_group_review_pr("a-san", "create_db_design", None, "t", "")
            .unwrap();
        let pr = p.state.pr(id).unwrap();
        assert_eq!(pr.target, "inspection/db-design");
        assert!(pr.labels.is_empty() && pr.requested_reviewers.is_empty());
        assert_eq!(phase(&p), InspectionPhase::GroupReview);
    }

    #[test]
    fn group_review_gates_request_and_merge() {
        let mut p = project();
        p.branch_inspection("a-san", "db-design", None).unwrap();
        p.branch_work("a-san", "db-design", "tables", None).unwrap();
        p.commit("a-san", "a-san/tables", "Add table list", &[change(DOC, &["# DB"])])
            .unwrap();
        let id = p.open_group_review_pr("a-san", "a-san/tables", None, "t", "").unwrap();
        let err = p.request_inspection("a-san", "db-design").unwrap_err();
        assert!(matches!(err, Error::GroupReviewIncomplete(ref ids) if ids == &[id]));
        p.review("a-san", id, ReviewVerdict::Approve).unwrap();
        assert_eq!(
            p.merge_pull_request("a-san", id).unwrap_err().code(),
            "group-review-incomplete"
        );
        p.review("b-san", id, ReviewVerdict::Approve).unwrap();
        p.merge_pull_request("b-san", id).unwrap();
        assert!(p.request_inspection("a-san", "db-design").is_ok());
    }

    #[test]
    fn round_one_request() {
        let mut p = project();
        let id = requested(&mut p);
        let pr = p.state.pr(id).unwrap();
        assert_eq!((pr.source.as_str(), pr.target.as_str()), ("inspection/db-design", "master"));
        assert!(pr.labels.contains("inspection"));
        assert_eq!(pr.requested_reviewers, vec!["prof", "ta"]);
        let n = &p.state.forge.notifications;
        assert_eq!(n.len(), 2);
        assert!(n[0].seq < n[1].seq);
        assert_eq!(phase(&p), InspectionPhase::InspectionRequested(Round::FIRST));
    }

    #[test]
    fn completion_requires_all_reviews_and_instructor() {
        let mut p = project();
        let id = requested(&mut p);
        p.review("ta", id, ReviewVerdict::Comment).unwrap();
        let err = p
            .complete_inspection("prof", id, InspectionVerdict::RequestChanges)
            .unwrap_err();
        assert!(matches!(err, Error::StaffReviewsPending(ref who) if who == &["prof"]));
        p.review("prof", id, ReviewVerdict::RequestChanges).unwrap();
        let err = p
            .complete_inspection("ta", id, InspectionVerdict::RequestChanges)
            .unwrap_err();
        assert_eq!(err.family(), ErrorFamily::Role);
        let sent = p
            .complete_inspection("prof", id, InspectionVerdict::RequestChanges)
            .unwrap();
        assert_eq!(sent.len(), 2);
        assert_eq!(phase(&p), InspectionPhase::RevisionRequested(Round::FIRST));
        assert!(p.state.pr(id).unwrap().is_open());
    }

    #[test]
    fn embargo_until_approved() {
        let mut p = project();
        let id = requested(&mut p);
        let master = p.vcs.branch_head("master").unwrap();
        p.review("ta", id, ReviewVerdict::Comment).unwrap();
        let err = p.merge_pull_request("a-san", id).unwrap_err();
        assert!(matches!(err, Error::MergeEmbargo(MergeDenial::InspectionOpen)));
        assert_eq!(p.merge_master("a-san", "db-design").unwrap_err().exit_code(), 5);
        assert_eq!(p.vcs.branch_head("master").unwrap(), master);
        p.review("prof", id, ReviewVerdict::Approve).unwrap();
        p.complete_inspection("prof", id, InspectionVerdict::Approve).unwrap();
        p.merge_pull_request("a-san", id).unwrap();
        assert_ne!(p.vcs.branch_head("master").unwrap(), master);
        assert_eq!(phase(&p), InspectionPhase::MergedToMaster);
        assert_eq!(p.state.pr(id).unwrap().state, PrState::Merged);
    }

    #[test]
    fn two_rounds_with_replies_gate() {
        let mut p = project();
        let r1 = requested(&mut p);
        let t = p
            .comment("ta", r1, DOC, Side::New, 4, "book needs an ISBN column")
            .unwrap();
        p.review("ta", r1, ReviewVerdict::RequestChanges).unwrap();
        p.review("prof", r1, ReviewVerdict::Comment).unwrap();
        p.complete_inspection("prof", r1, InspectionVerdict::RequestChanges)
            .unwrap();
        p.branch_inspection("a-san", "db-design", None).unwrap();
        p.commit(
            "b-san",
            "inspection/db-design/round-2",
            "Add ISBN column to book table",
            &[change(DOC, &["# DB design", "", "## Tables", "book(id, isbn, title)", "member(id, name)"])],
        )
        .unwrap();
        let err = p.request_inspection("a-san", "db-design").unwrap_err();
        assert!(matches!(err, Error::UnansweredComments(ref ts) if ts == &[t]));
        p.reply("ta", r1, t, "also an index", false).unwrap();
        assert_eq!(p.request_inspection("a-san", "db-design").unwrap_err().code(), "unanswered-comments");
        p.reply("b-san", r1, t, "Added in round 2", false).unwrap();
        let r2 = p.request_inspection("a-san", "db-design").unwrap();
        let pr2 = p.state.pr(r2).unwrap();
        assert_eq!(pr2.target, "inspection/db-design");
        assert_eq!(p.state.pr(r1).unwrap().state, PrState::Closed);
        let (_, _, diffs) = p.pr_diff(r2).unwrap();
        let text = crate::diff::render_unified(&diffs);
        assert!(text.contains("-book(id, title)") && text.contains("+book(id, isbn, title)"));
        assert!(!text.contains("+member(id, name)"));

        p.review("prof", r2, ReviewVerdict::Approve).unwrap();
        p.review("ta", r2, ReviewVerdict::Approve).unwrap();
        p.complete_inspection("prof", r2, InspectionVerdict::Approve).unwrap();
        assert_eq!(
            p.merge_master("prof", "db-design").unwrap_err().family(),
            ErrorFamily::Role
        );
        p.merge_master("a-san", "db-design").unwrap();
        let master = p.vcs.branch_head("master").unwrap();
        assert_eq!(p.vcs.snapshot(&master).unwrap()[DOC][3], "book(id, isbn, title)");
        assert_eq!(phase(&p), InspectionPhase::MergedToMaster);
        assert_eq!(p.request_inspection("a-san", "db-design").unwrap_err().code(), "illegal-transition");
    }

    #[test]
    fn revisions_reanchor_and_outdate_threads() {
        let mut p = project();
        let id = requested(&mut p);
        let keep = p.comment("ta", id, DOC, Side::New, 5, "name is ambiguous").unwrap();
        let gone = p.comment("ta", id, DOC, Side::New, 4, "title length?").unwrap();
        p.review("ta", id, ReviewVerdict::RequestChanges).unwrap();
        p.review("prof", id, ReviewVerdict::Comment).unwrap();
        p.complete_inspection("prof", id, InspectionVerdict::RequestChanges).unwrap();
        p.commit(
            "a-san",
            "inspection/db-design",
            "Replace book table with item table",
            &[change(DOC, &["# DB design", "", "Revised.", "## Tables", "item(id, title)", "member(id, name)"])],
        )
        .unwrap();
        let pr = p.state.pr(id).unwrap();
        let keep = pr.thread(keep).unwrap();
        assert_eq!((keep.anchor.line, keep.anchor.status), (6, AnchorStatus::Live));
        assert_eq!(pr.thread(gone).unwrap().anchor.status, AnchorStatus::Outdated);
        // Revision recorded; the phase is unchanged.
        assert_eq!(phase(&p), InspectionPhase::RevisionRequested(Round::FIRST));
    }

    #[test]
    fn failed_operations_leave_no_trace() {
        let mut p = project();
        p.branch_inspection("a-san", "db-design", None).unwrap();
        let before = (p.state.clone(), p.vcs.clone());
        assert!(p.commit("a-san", "master", "Sneak a change in", &[change("x", &["y"])]).is_err());
        assert!(p.request_inspection("a-san", "db-design").is_err());
        assert!(p.branch_work("c-san", "db-design", "x", None).is_err());
        assert!(p.add_artifact("prof", "ui", "UI", ArtifactKind::UiDesign, Some("nope")).is_err());
        assert_eq!((p.state.clone(), p.vcs.clone()), before);
    }

    #[test]
    fn milestones_follow_pull_requests() {
        let mut p = project();
        let due = NaiveDate::from_ymd_opt(2019, 6, 1).unwrap();
        p.milestone_create("DB design", due).unwrap();
        assert_eq!(p.milestone_create("DB design", due).unwrap_err().code(), "duplicate-milestone");
        p.branch_inspection("a-san", "db-design", None).unwrap();
        p.branch_work("a-san", "db-design", "t", None).unwrap();
        p.commit("a-san", "a-san/t", "Add table list", &[change(DOC, &["# DB"])]).unwrap();
        let id = p.open_group_review_pr("a-san", "a-san/t", None, "t", "").unwrap();
        p.milestone_attach("DB design", MilestoneItem::PullRequest(id)).unwrap();
        p.milestone_attach("DB design", MilestoneItem::Issue(7)).unwrap();
        assert_eq!(p.status().milestones[0].progress, 0.0);
        p.review("b-san", id, ReviewVerdict::Approve).unwrap();
        p.merge_pull_request("a-san", id).unwrap();
        assert_eq!(p.status().milestones[0].progress, 0.5);
        p.milestone_close("DB design", 7).unwrap();
        assert_eq!(p.status().milestones[0].progress, 1.0);
    }

    #[test]
    fn lint_flags_empty_commit() {
        let mut p = project();
        p.branch_inspection("a-san", "db-design", None).unwrap();
        p.commit("a-san", "inspection/db-design", "Touch nothing at all", &[]).unwrap();
        let reports = p.lint_commits("inspection/db-design").unwrap();
        assert_eq!(reports.len(), 1);
        assert!(reports[0].has(crate::artifact::LintCode::EmptyChange));
    }
}
