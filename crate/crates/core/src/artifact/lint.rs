use serde::{Deserialize, Serialize};

use crate::diff::compute_diff;
use crate::vcs::{CommitId, LineCounts, Snapshot, VcsBackend, VcsError};

/// Thresholds for commit linting. Stored in the project configuration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct LintPolicy {
    pub min_subject_chars: usize,
    pub max_subject_chars: usize,
    /// Subjects equal to one of these (ignoring case) say nothing.
    pub stop_list: Vec<String>,
    /// A body is required when more files than this change.
    pub body_required_over_files: usize,
}

impl Default for LintPolicy {
    fn default() -> Self {
        LintPolicy {
            min_subject_chars: 10,
            max_subject_chars: 72,
            stop_list: ["fix", "update", "wip", "change"].map(String::from).to_vec(),
            body_required_over_files: 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LintCode {
    EmptyChange,
    VagueSubject,
    OverlongSubject,
    MissingBody,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LintFinding {
    pub code: LintCode,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitLintReport {
    pub commit: CommitId,
    pub subject: String,
    pub counts: LineCounts,
    pub files_changed: usize,
    pub findings: Vec<LintFinding>,
}

impl CommitLintReport {
    pub fn has(&self, code: LintCode) -> bool {
        self.findings.iter().any(|f| f.code == code)
    }
}

/// Applies the rule set to a commit message and its change size.
pub fn lint_message(policy: &LintPolicy, message: &str, counts: LineCounts, files_changed: usize) -> Vec<LintFinding> {
    let mut findings = Vec::new();
    if counts.total() == 0 {
        findings.push(LintFinding {
            code: LintCode::EmptyChange,
            message: "commit changes no lines".into(),
        });
    }
    let subject = message.lines().next().unwrap_or("").trim();
    let len = subject.chars().count();
    let bare = subject.trim_end_matches(['.', '!']).to_lowercase();
    if len < policy.min_subject_chars || policy.stop_list.iter().any(|w| w.to_lowercase() == bare) {
        findings.push(LintFinding {
            code: LintCode::VagueSubject,
            message: format!("subject `{subject}` does not say what changed"),
        });
    }
    if len > policy.max_subject_chars {
        findings.push(LintFinding {
            code: LintCode::OverlongSubject,
            message: format!("subject is {len} characters (limit {})", policy.max_subject_chars),
        });
    }
    let has_body = message.lines().skip(1).any(|l| !l.trim().is_empty());
    if files_changed > policy.body_required_over_files && !has_body {
        findings.push(LintFinding {
            code: LintCode::MissingBody,
            message: format!("{files_changed} files changed but the message has no body"),
        });
    }
    findings
}

/// Lints `commit` against its first parent (or the empty tree for a root).
pub fn lint_commit<B: VcsBackend>(vcs: &B, commit: &CommitId, policy: &LintPolicy) -> Result<CommitLintReport, VcsError> {
    let meta = vcs.commit_meta(commit)?;
    let new = vcs.snapshot(commit)?;
    let old = match meta.parents.first() {
        Some(p) => vcs.snapshot(p)?,
        None => Snapshot::new(),
    };
    let diffs = compute_diff(&old, &new);
    let counts = crate::diff::line_counts(&diffs);
    Ok(CommitLintReport {
        commit: commit.clone(),
        subject: meta.message.lines().next().unwrap_or("").to_owned(),
        counts,
        files_changed: diffs.len(),
        findings: lint_message(policy, &meta.message, counts, diffs.len()),
    })
}
