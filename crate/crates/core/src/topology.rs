//! Branch naming and branch mechanics.
//!
//! Round 1 of an inspection happens on `inspection/<slug>`, forked from
//! master. Round 2 happens on `inspection/<slug>/round-2`, forked from the
//! round-1 branch so its pull request shows only what changed since the first
//! inspection. Members work on branches forked from the inspection branch,
//! named `<owner>/<task>` by default.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::vcs::{CommitId, Snapshot, VcsBackend, VcsError};
use crate::workflow::{MergeDecision, MergeDenial, Round};

const OWNER: &str = "<owner>";
const TASK: &str = "<task>";

/// Lowercase words joined by single hyphens: `db-design`.
pub fn is_slug(s: &str) -> bool {
    !s.is_empty()
        && s.split('-').all(|w| {
            !w.is_empty() && w.bytes().all(|b| b.is_ascii_lowercase() || b.is_ascii_digit())
        })
}

/// Member ids and task names: `a-san`, `create_db_design`.
pub fn is_identifier(s: &str) -> bool {
    let mut bytes = s.bytes();
    matches!(bytes.next(), Some(b) if b.is_ascii_lowercase() || b.is_ascii_digit())
        && bytes.all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'-' || b == b'_')
}

fn identifier_byte(b: u8) -> bool {
    b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'-' || b == b'_'
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NamingPolicy {
    pub master_name: String,
    pub inspection_prefix: String,
    pub round2_suffix: String,
    pub work_pattern: String,
}

impl Default for NamingPolicy {
    fn default() -> Self {
        NamingPolicy {
            master_name: "master".into(),
            inspection_prefix: "inspection/".into(),
            round2_suffix: "/round-2".into(),
            work_pattern: "<owner>/<task>".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "role", rename_all = "kebab-case")]
pub enum BranchRole {
    Master,
    Inspection { slug: String, round: Round },
    Work { owner: String, task: String },
    Unknown,
}

impl fmt::Display for BranchRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BranchRole::Master => f.write_str("master"),
            BranchRole::Inspection { slug, round } => write!(f, "inspection of {slug} (round {round})"),
            BranchRole::Work { owner, task } => write!(f, "work of {owner} on {task}"),
            BranchRole::Unknown => f.write_str("unknown"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Segment<'a> {
    Lit(&'a str),
    Owner,
    Task,
}

fn pattern_segments(pattern: &str) -> Vec<Segment<'_>> {
    let mut out = Vec::new();
    let mut rest = pattern;
    while !rest.is_empty() {
        let next = [(rest.find(OWNER), Segment::Owner), (rest.find(TASK), Segment::Task)]
            .into_iter()
            .filter_map(|(pos, seg)| pos.map(|p| (p, seg)))
            .min_by_key(|(p, _)| *p);
        match next {
            Some((p, seg)) => {
                if p > 0 {
                    out.push(Segment::Lit(&rest[..p]));
                }
                let len = if seg == Segment::Owner { OWNER.len() } else { TASK.len() };
                out.push(seg);
                rest = &rest[p + len..];
            }
            None => {
                out.push(Segment::Lit(rest));
                rest = "";
            }
        }
    }
    out
}

fn match_segments(segs: &[Segment<'_>], input: &str, owner: &mut String, task: &mut String) -> bool {
    let Some((first, rest)) = segs.split_first() else {
        return input.is_empty();
    };
    match first {
        Segment::Lit(l) => input
            .strip_prefix(l)
            .is_some_and(|tail| match_segments(rest, tail, owner, task)),
        Segment::Owner | Segment::Task => {
            for (i, _) in input.char_indices().skip(1).chain([(input.len(), ' ')]) {
                let (head, tail) = input.split_at(i);
                if !is_identifier(head) {
                    // Identifiers are prefix-closed: a longer prefix cannot recover.
                    break;
                }
                if match_segments(rest, tail, owner, task) {
                    let slot = if *first == Segment::Owner { owner } else { task };
                    *slot = head.to_owned();
                    return true;
                }
            }
            false
        }
    }
}

impl NamingPolicy {
    /// Rejects policies under which rendered names could collide or fail to
    /// classify back to their role.
    pub fn validate(&self) -> Result<(), TopologyError> {
        let bad = |why: &str| Err(TopologyError::InvalidPolicy(why.to_owned()));
        if self.master_name.is_empty() || self.master_name.contains(char::is_whitespace) {
            return bad("master name must be a non-empty name without spaces");
        }
        if self.inspection_prefix.is_empty() || !self.inspection_prefix.bytes().any(|b| !identifier_byte(b)) {
            return bad("inspection prefix must contain a separator such as `/`");
        }
        if self.master_name.starts_with(&self.inspection_prefix) {
            return bad("master name must not start with the inspection prefix");
        }
        if self.round2_suffix.is_empty() || !self.round2_suffix.bytes().any(|b| !identifier_byte(b)) {
            return bad("round-2 suffix must contain a separator such as `/`");
        }
        let segs = pattern_segments(&self.work_pattern);
        let owners = segs.iter().filter(|s| **s == Segment::Owner).count();
        let tasks = segs.iter().filter(|s| **s == Segment::Task).count();
        if owners > 1 || tasks != 1 {
            return bad("work pattern needs exactly one <task> and at most one <owner>");
        }
        for pair in segs.windows(2) {
            if matches!(pair[0], Segment::Owner | Segment::Task) {
                match pair[1] {
                    Segment::Lit(l) if l.bytes().any(|b| !identifier_byte(b)) => {}
                    Segment::Lit(_) | Segment::Owner | Segment::Task => {
                        return bad("placeholders in the work pattern must be separated by a non-identifier character");
                    }
                }
            }
        }
        Ok(())
    }

    pub fn inspection_branch(&self, slug: &str, round: Round) -> String {
        match round.get() {
            1 => format!("{}{slug}", self.inspection_prefix),
            _ => format!("{}{slug}{}", self.inspection_prefix, self.round2_suffix),
        }
    }

    /// Branch name for `role`; `Unknown` has none.
    pub fn render(&self, role: &BranchRole) -> Result<String, TopologyError> {
        match role {
            BranchRole::Master => Ok(self.master_name.clone()),
            BranchRole::Inspection { slug, round } => {
                if !is_slug(slug) {
                    return Err(TopologyError::InvalidName(slug.clone()));
                }
                Ok(self.inspection_branch(slug, *round))
            }
            BranchRole::Work { owner, task } => {
                let owner_ok = if self.work_pattern.contains(OWNER) {
                    is_identifier(owner)
                } else {
                    owner.is_empty()
                };
                if !owner_ok {
                    return Err(TopologyError::InvalidName(owner.clone()));
                }
                if !is_identifier(task) {
                    return Err(TopologyError::InvalidName(task.clone()));
                }
                let name = self.work_pattern.replace(OWNER, owner).replace(TASK, task);
                if name.contains(&self.inspection_prefix) || name == self.master_name {
                    return Err(TopologyError::InvalidName(name));
                }
                Ok(name)
            }
            BranchRole::Unknown => Err(TopologyError::InvalidName("<unknown role>".into())),
        }
    }

    /// Role of a branch name; total, unrecognized names are `Unknown`.
    pub fn classify(&self, name: &str) -> BranchRole {
        if name == self.master_name {
            return BranchRole::Master;
        }
        if let Some(rest) = name.strip_prefix(&self.inspection_prefix) {
            if let Some(slug) = rest.strip_suffix(&self.round2_suffix) {
                if is_slug(slug) {
                    return BranchRole::Inspection {
                        slug: slug.to_owned(),
                        round: Round::SECOND,
                    };
                }
            }
            if is_slug(rest) {
                return BranchRole::Inspection {
                    slug: rest.to_owned(),
                    round: Round::FIRST,
                };
            }
            return BranchRole::Unknown;
        }
        if name.contains(&self.inspection_prefix) {
            return BranchRole::Unknown;
        }
        let segs = pattern_segments(&self.work_pattern);
        let (mut owner, mut task) = (String::new(), String::new());
        if match_segments(&segs, name, &mut owner, &mut task) {
            return BranchRole::Work { owner, task };
        }
        BranchRole::Unknown
    }
}

pub fn classify_branch(policy: &NamingPolicy, name: &str) -> BranchRole {
    policy.classify(name)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TopologyError {
    #[error("branch `{0}` already exists")]
    BranchExists(String),
    #[error("base branch `{0}` does not exist")]
    MissingBaseBranch(String),
    #[error("branch `{0}` does not exist")]
    BranchMissing(String),
    #[error("merging into master is embargoed ({0})")]
    MergeEmbargo(MergeDenial),
    #[error("`{source_branch}` has nothing to merge into `{target}`")]
    NothingToMerge { source_branch: String, target: String },
    #[error("merge conflict in {}", .0.join(", "))]
    Conflict(Vec<String>),
    #[error("invalid name `{0}`")]
    InvalidName(String),
    #[error("invalid naming policy: {0}")]
    InvalidPolicy(String),
    #[error(transparent)]
    Vcs(#[from] VcsError),
}

impl TopologyError {
    pub fn code(&self) -> &'static str {
        match self {
            TopologyError::BranchExists(_) => "branch-exists",
            TopologyError::MissingBaseBranch(_) => "missing-base-branch",
            TopologyError::BranchMissing(_) => "branch-missing",
            TopologyError::MergeEmbargo(_) => "merge-embargo",
            TopologyError::NothingToMerge { .. } => "nothing-to-merge",
            TopologyError::Conflict(_) => "conflict",
            TopologyError::InvalidName(_) => "invalid-name",
            TopologyError::InvalidPolicy(_) => "invalid-policy",
            TopologyError::Vcs(e) => e.code(),
        }
    }
}

fn fork<B: VcsBackend>(vcs: &mut B, name: &str, base: &str) -> Result<(), TopologyError> {
    if vcs.resolve_branch(name).is_some() {
        return Err(TopologyError::BranchExists(name.to_owned()));
    }
    let head = vcs
        .resolve_branch(base)
        .ok_or_else(|| TopologyError::MissingBaseBranch(base.to_owned()))?;
    vcs.create_branch(name, &head)?;
    Ok(())
}

/// Forks the inspection branch for `slug`: round 1 from master, round 2 from
/// the round-1 branch.
pub fn create_inspection_branch<B: VcsBackend>(
    vcs: &mut B,
    policy: &NamingPolicy,
    slug: &str,
    round: Round,
) -> Result<String, TopologyError> {
    let name = policy.render(&BranchRole::Inspection {
        slug: slug.to_owned(),
        round,
    })?;
    let base = match round.get() {
        1 => policy.master_name.clone(),
        _ => policy.inspection_branch(slug, Round::FIRST),
    };
    fork(vcs, &name, &base)?;
    Ok(name)
}

/// Forks a member's work branch from the inspection branch of `slug`.
pub fn create_work_branch<B: VcsBackend>(
    vcs: &mut B,
    policy: &NamingPolicy,
    owner: &str,
    task: &str,
    slug: &str,
    round: Round,
) -> Result<String, TopologyError> {
    let name = policy.render(&BranchRole::Work {
        owner: owner.to_owned(),
        task: task.to_owned(),
    })?;
    fork(vcs, &name, &policy.inspection_branch(slug, round))?;
    Ok(name)
}

/// Forks a work branch under an explicit name such as `create_db_design`.
pub fn create_bare_work_branch<B: VcsBackend>(
    vcs: &mut B,
    policy: &NamingPolicy,
    name: &str,
    slug: &str,
    round: Round,
) -> Result<String, TopologyError> {
    if !is_identifier(name) || name == policy.master_name || name.contains(&policy.inspection_prefix) {
        return Err(TopologyError::InvalidName(name.to_owned()));
    }
    fork(vcs, name, &policy.inspection_branch(slug, round))?;
    Ok(name.to_owned())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MergeOutcome {
    pub commit: CommitId,
    pub fast_forward: bool,
}

/// File-level three-way merge; a path changed differently on both sides is
/// a conflict.
pub fn merge_snapshots(base: &Snapshot, ours: &Snapshot, theirs: &Snapshot) -> Result<Snapshot, Vec<String>> {
    let paths: BTreeSet<&String> = base.keys().chain(ours.keys()).chain(theirs.keys()).collect();
    let mut merged = Snapshot::new();
    let mut conflicts = Vec::new();
    for path in paths {
        let (b, o, t) = (base.get(path), ours.get(path), theirs.get(path));
        let pick = if o == t || t == b {
            o
        } else if o == b {
            t
        } else {
            conflicts.push(path.clone());
            continue;
        };
        if let Some(lines) = pick {
            merged.insert(path.clone(), lines.clone());
        }
    }
    if conflicts.is_empty() {
        Ok(merged)
    } else {
        Err(conflicts)
    }
}

/// Merges `source` into `target`. Merges into master consult `gate` first.
pub fn merge_branch<B, G>(
    vcs: &mut B,
    policy: &NamingPolicy,
    source: &str,
    target: &str,
    author: &str,
    gate: G,
) -> Result<MergeOutcome, TopologyError>
where
    B: VcsBackend,
    G: FnOnce() -> MergeDecision,
{
    let source_head = vcs
        .resolve_branch(source)
        .ok_or_else(|| TopologyError::BranchMissing(source.to_owned()))?;
    let target_head = vcs
        .resolve_branch(target)
        .ok_or_else(|| TopologyError::BranchMissing(target.to_owned()))?;
    if target == policy.master_name {
        if let MergeDecision::Deny(reason) = gate() {
            return Err(TopologyError::MergeEmbargo(reason));
        }
    }
    if vcs.is_ancestor(&source_head, &target_head)? {
        return Err(TopologyError::NothingToMerge {
            source_branch: source.to_owned(),
            target: target.to_owned(),
        });
    }
    if vcs.is_ancestor(&target_head, &source_head)? {
        vcs.set_branch(target, &source_head)?;
        return Ok(MergeOutcome {
            commit: source_head,
            fast_forward: true,
        });
    }
    let base = vcs.merge_base(&target_head, &source_head)?;
    let merged = merge_snapshots(
        &vcs.snapshot(&base)?,
        &vcs.snapshot(&target_head)?,
        &vcs.snapshot(&source_head)?,
    )
    .map_err(TopologyError::Conflict)?;
    let message = format!("Merge branch '{source}' into {target}");
    let commit = vcs.commit(&[target_head, source_head], merged, &message, author)?;
    vcs.set_branch(target, &commit)?;
    Ok(MergeOutcome {
        commit,
        fast_forward: false,
    })
}
