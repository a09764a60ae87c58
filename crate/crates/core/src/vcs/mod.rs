//! Version-control substrate: a commit DAG with whole-file snapshots and a
//! branch map.
//!
//! [`VcsBackend`] is the seam between the workflow engine and whatever stores
//! the history. [`VcsModel`] keeps everything in memory and is what the test
//! suite and the default CLI backend use; [`git::GitBackend`] drives a real
//! repository through git plumbing. Merge bases and per-commit line counts are
//! provided methods computed from parents and snapshots, so every backend
//! shares the same answers.

pub mod conformance;
pub mod git;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diff;

/// File path to whole-file content, one entry per line (no terminators).
pub type Snapshot = BTreeMap<String, Vec<String>>;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CommitId(pub String);

impl CommitId {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Abbreviated form for console output.
    pub fn short(&self) -> &str {
        let end = self.0.char_indices().nth(10).map_or(self.0.len(), |(i, _)| i);
        &self.0[..end]
    }
}

impl fmt::Display for CommitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for CommitId {
    fn from(s: &str) -> Self {
        CommitId(s.to_owned())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LineCounts {
    pub additions: usize,
    pub deletions: usize,
}

impl LineCounts {
    pub fn total(self) -> usize {
        self.additions + self.deletions
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Commit {
    pub parents: Vec<CommitId>,
    pub snapshot: Snapshot,
    pub message: String,
    pub author: String,
    pub changed_line_counts: LineCounts,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommitMeta {
    pub parents: Vec<CommitId>,
    pub message: String,
    pub author: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VcsError {
    #[error("unknown commit {0}")]
    UnknownCommit(CommitId),
    #[error("unknown branch `{0}`")]
    UnknownBranch(String),
    #[error("branch `{0}` already exists")]
    BranchExists(String),
    #[error("commits {0} and {1} share no history")]
    NoCommonAncestor(CommitId, CommitId),
    #[error("invalid branch name `{0}`")]
    InvalidBranchName(String),
    #[error("backend failure: {0}")]
    Backend(String),
}

impl VcsError {
    pub fn code(&self) -> &'static str {
        match self {
            VcsError::UnknownCommit(_) => "unknown-commit",
            VcsError::UnknownBranch(_) => "branch-missing",
            VcsError::BranchExists(_) => "branch-exists",
            VcsError::NoCommonAncestor(..) => "no-common-ancestor",
            VcsError::InvalidBranchName(_) => "invalid-branch-name",
            VcsError::Backend(_) => "backend-failure",
        }
    }
}

/// Operations every history store must offer.
///
/// Implementations supply storage primitives; ancestry queries, merge bases
/// and line counts are derived here and must not be overridden with
/// different semantics.
pub trait VcsBackend {
    /// Opaque record of the mutable parts of the store, for rollback.
    type Checkpoint;

    fn resolve_branch(&self, name: &str) -> Option<CommitId>;
    fn branches(&self) -> Vec<(String, CommitId)>;
    /// Creates or moves `name` to point at `target`.
    fn set_branch(&mut self, name: &str, target: &CommitId) -> Result<(), VcsError>;
    fn commit(
        &mut self,
        parents: &[CommitId],
        snapshot: Snapshot,
        message: &str,
        author: &str,
    ) -> Result<CommitId, VcsError>;
    fn contains(&self, id: &CommitId) -> bool;
    fn commit_meta(&self, id: &CommitId) -> Result<CommitMeta, VcsError>;
    fn snapshot(&self, id: &CommitId) -> Result<Snapshot, VcsError>;

    fn checkpoint(&self) -> Self::Checkpoint;
    fn rollback(&mut self, checkpoint: Self::Checkpoint);

    fn parents(&self, id: &CommitId) -> Result<Vec<CommitId>, VcsError> {
        Ok(self.commit_meta(id)?.parents)
    }

    fn create_branch(&mut self, name: &str, target: &CommitId) -> Result<(), VcsError> {
        if self.resolve_branch(name).is_some() {
            return Err(VcsError::BranchExists(name.to_owned()));
        }
        if !self.contains(target) {
            return Err(VcsError::UnknownCommit(target.clone()));
        }
        self.set_branch(name, target)
    }

    fn branch_head(&self, name: &str) -> Result<CommitId, VcsError> {
        self.resolve_branch(name)
            .ok_or_else(|| VcsError::UnknownBranch(name.to_owned()))
    }

    /// All ancestors of `id`, inclusive.
    fn ancestors(&self, id: &CommitId) -> Result<BTreeSet<CommitId>, VcsError> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![id.clone()];
        while let Some(c) = stack.pop() {
            if !seen.insert(c.clone()) {
                continue;
            }
            stack.extend(self.parents(&c)?);
        }
        Ok(seen)
    }

    /// Whether `ancestor` is reachable from `descendant` (reflexive).
    fn is_ancestor(&self, ancestor: &CommitId, descendant: &CommitId) -> Result<bool, VcsError> {
        if !self.contains(ancestor) {
            return Err(VcsError::UnknownCommit(ancestor.clone()));
        }
        Ok(self.ancestors(descendant)?.contains(ancestor))
    }

    /// Length of the longest parent path from `id` down to a root commit.
    fn generation(&self, id: &CommitId) -> Result<usize, VcsError> {
        let mut memo: HashMap<CommitId, usize> = HashMap::new();
        generation_memo(self, id, &mut memo)
    }

    /// Deepest common ancestor of `a` and `b`; equal depths resolve to the
    /// smallest commit id.
    fn merge_base(&self, a: &CommitId, b: &CommitId) -> Result<CommitId, VcsError> {
        let ours = self.ancestors(a)?;
        let theirs = self.ancestors(b)?;
        let mut memo = HashMap::new();
        let mut best: Option<(usize, &CommitId)> = None;
        for c in ours.intersection(&theirs) {
            let g = generation_memo(self, c, &mut memo)?;
            // BTreeSet iterates ids ascending, so `>` keeps the smallest id on ties.
            if best.is_none_or(|(bg, _)| g > bg) {
                best = Some((g, c));
            }
        }
        best.map(|(_, c)| c.clone())
            .ok_or_else(|| VcsError::NoCommonAncestor(a.clone(), b.clone()))
    }

    /// Lines added and removed by `id` relative to its first parent (or the
    /// empty tree for a root commit).
    fn changed_line_counts(&self, id: &CommitId) -> Result<LineCounts, VcsError> {
        let new = self.snapshot(id)?;
        let old = match self.parents(id)?.first() {
            Some(p) => self.snapshot(p)?,
            None => Snapshot::new(),
        };
        Ok(diff::line_counts(&diff::compute_diff(&old, &new)))
    }
}

fn generation_memo<B: VcsBackend + ?Sized>(
    vcs: &B,
    id: &CommitId,
    memo: &mut HashMap<CommitId, usize>,
) -> Result<usize, VcsError> {
    // Iterative post-order so deep histories do not overflow the stack.
    let mut stack = vec![(id.clone(), false)];
    while let Some((c, expanded)) = stack.pop() {
        if memo.contains_key(&c) {
            continue;
        }
        let parents = vcs.parents(&c)?;
        if expanded {
            let g = parents
                .iter()
                .map(|p| memo[p] + 1)
                .max()
                .unwrap_or(0);
            memo.insert(c, g);
        } else {
            stack.push((c, true));
            for p in parents {
                if !memo.contains_key(&p) {
                    stack.push((p, false));
                }
            }
        }
    }
    Ok(memo[id])
}

/// In-memory history store.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VcsModel {
    pub commits: BTreeMap<CommitId, Commit>,
    pub branches: BTreeMap<String, CommitId>,
    next_id: u64,
}

impl VcsModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, id: &CommitId) -> Result<&Commit, VcsError> {
        self.commits
            .get(id)
            .ok_or_else(|| VcsError::UnknownCommit(id.clone()))
    }

    /// Checks acyclicity, dangling parents/branches and stored line counts.
    pub fn verify(&self) -> Result<(), String> {
        for (name, target) in &self.branches {
            if !self.commits.contains_key(target) {
                return Err(format!("branch {name} points at missing commit {target}"));
            }
        }
        for (id, commit) in &self.commits {
            for p in &commit.parents {
                if !self.commits.contains_key(p) {
                    return Err(format!("commit {id} has missing parent {p}"));
                }
                // Ids are allocated in creation order and parents must exist
                // first, so a parent always sorts before its child.
                if p >= id {
                    return Err(format!("commit {id} has non-topological parent {p}"));
                }
            }
            let old = commit
                .parents
                .first()
                .map(|p| self.commits[p].snapshot.clone())
                .unwrap_or_default();
            let counts = diff::line_counts(&diff::compute_diff(&old, &commit.snapshot));
            if counts != commit.changed_line_counts {
                return Err(format!("commit {id} stores wrong line counts"));
            }
        }
        Ok(())
    }
}

impl VcsBackend for VcsModel {
    type Checkpoint = VcsModel;

    fn resolve_branch(&self, name: &str) -> Option<CommitId> {
        self.branches.get(name).cloned()
    }

    fn branches(&self) -> Vec<(String, CommitId)> {
        self.branches
            .iter()
            .map(|(n, c)| (n.clone(), c.clone()))
            .collect()
    }

    fn set_branch(&mut self, name: &str, target: &CommitId) -> Result<(), VcsError> {
        if name.is_empty() || name.chars().any(char::is_whitespace) {
            return Err(VcsError::InvalidBranchName(name.to_owned()));
        }
        if !self.commits.contains_key(target) {
            return Err(VcsError::UnknownCommit(target.clone()));
        }
        self.branches.insert(name.to_owned(), target.clone());
        Ok(())
    }

    fn commit(
        &mut self,
        parents: &[CommitId],
        snapshot: Snapshot,
        message: &str,
        author: &str,
    ) -> Result<CommitId, VcsError> {
        for p in parents {
            if !self.commits.contains_key(p) {
                return Err(VcsError::UnknownCommit(p.clone()));
            }
        }
        let old = parents
            .first()
            .map(|p| &self.commits[p].snapshot)
            .cloned()
            .unwrap_or_default();
        let counts = diff::line_counts(&diff::compute_diff(&old, &snapshot));
        self.next_id += 1;
        let id = CommitId(format!("c{:06}", self.next_id));
        self.commits.insert(
            id.clone(),
            Commit {
                parents: parents.to_vec(),
                snapshot,
                message: message.to_owned(),
                author: author.to_owned(),
                changed_line_counts: counts,
            },
        );
        Ok(id)
    }

    fn contains(&self, id: &CommitId) -> bool {
        self.commits.contains_key(id)
    }

    fn commit_meta(&self, id: &CommitId) -> Result<CommitMeta, VcsError> {
        let c = self.get(id)?;
        Ok(CommitMeta {
            parents: c.parents.clone(),
            message: c.message.clone(),
            author: c.author.clone(),
        })
    }

    fn snapshot(&self, id: &CommitId) -> Result<Snapshot, VcsError> {
        Ok(self.get(id)?.snapshot.clone())
    }

    fn parents(&self, id: &CommitId) -> Result<Vec<CommitId>, VcsError> {
        Ok(self.get(id)?.parents.clone())
    }

    fn changed_line_counts(&self, id: &CommitId) -> Result<LineCounts, VcsError> {
        Ok(self.get(id)?.changed_line_counts)
    }

    fn checkpoint(&self) -> VcsModel {
        self.clone()
    }

    fn rollback(&mut self, checkpoint: VcsModel) {
        *self = checkpoint;
    }
}

/// Splits text into lines the way snapshots store them.
pub fn text_to_lines(text: &str) -> Vec<String> {
    text.lines().map(str::to_owned).collect()
}

/// Joins snapshot lines back into newline-terminated text.
pub fn lines_to_text(lines: &[String]) -> String {
    let mut out = String::with_capacity(lines.iter().map(|l| l.len() + 1).sum());
    for l in lines {
        out.push_str(l);
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn snap(files: &[(&str, &[&str])]) -> Snapshot {
        files
            .iter()
            .map(|(p, ls)| (p.to_string(), ls.iter().map(|s| s.to_string()).collect()))
            .collect()
    }

    /// Naive reference: ancestor sets by recursion, depth by recursion.
    fn oracle_merge_base(vcs: &VcsModel, a: &CommitId, b: &CommitId) -> Option<CommitId> {
        fn anc(vcs: &VcsModel, c: &CommitId, out: &mut Vec<CommitId>) {
            if out.contains(c) {
                return;
            }
            out.push(c.clone());
            for p in &vcs.commits[c].parents {
                anc(vcs, p, out);
            }
        }
        fn depth(vcs: &VcsModel, c: &CommitId) -> usize {
            vcs.commits[c]
                .parents
                .iter()
                .map(|p| depth(vcs, p) + 1)
                .max()
                .unwrap_or(0)
        }
        let (mut xa, mut xb) = (Vec::new(), Vec::new());
        anc(vcs, a, &mut xa);
        anc(vcs, b, &mut xb);
        let mut common: Vec<_> = xa.into_iter().filter(|c| xb.contains(c)).collect();
        common.sort_by(|x, y| depth(vcs, y).cmp(&depth(vcs, x)).then(x.cmp(y)));
        common.into_iter().next()
    }

    fn linear(n: usize) -> (VcsModel, Vec<CommitId>) {
        let mut vcs = VcsModel::new();
        let mut ids: Vec<CommitId> = Vec::new();
        for i in 0..n {
            let parents: Vec<_> = ids.last().cloned().into_iter().collect();
            let id = vcs
                .commit(&parents, snap(&[("f", &[&format!("v{i}")])]), "m", "u")
                .unwrap();
            ids.push(id);
        }
        (vcs, ids)
    }

    #[test]
    fn merge_base_identity_and_linear() {
        let (vcs, ids) = linear(4);
        assert_eq!(vcs.merge_base(&ids[2], &ids[2]).unwrap(), ids[2]);
        assert_eq!(vcs.merge_base(&ids[1], &ids[3]).unwrap(), ids[1]);
        assert_eq!(vcs.merge_base(&ids[3], &ids[1]).unwrap(), ids[1]);
    }

    #[test]
    fn merge_base_criss_cross_breaks_ties_by_id() {
        // root -> x, root -> y; m1 = merge(x, y); m2 = merge(y, x)
        let mut vcs = VcsModel::new();
        let root = vcs.commit(&[], snap(&[]), "root", "u").unwrap();
        let x = vcs.commit(&[root.clone()], snap(&[("x", &["1"])]), "x", "u").unwrap();
        let y = vcs.commit(&[root.clone()], snap(&[("y", &["1"])]), "y", "u").unwrap();
        let both = snap(&[("x", &["1"]), ("y", &["1"])]);
        let m1 = vcs.commit(&[x.clone(), y.clone()], both.clone(), "m1", "u").unwrap();
        let m2 = vcs.commit(&[y.clone(), x.clone()], both, "m2", "u").unwrap();
        let base = vcs.merge_base(&m1, &m2).unwrap();
        assert_eq!(Some(base.clone()), oracle_merge_base(&vcs, &m1, &m2));
        assert_eq!(base, x.min(y));
    }

    #[test]
    fn disjoint_histories_have_no_base() {
        let mut vcs = VcsModel::new();
        let a = vcs.commit(&[], snap(&[]), "a", "u").unwrap();
        let b = vcs.commit(&[], snap(&[]), "b", "u").unwrap();
        assert!(matches!(vcs.merge_base(&a, &b), Err(VcsError::NoCommonAncestor(..))));
    }

    #[test]
    fn random_dags_match_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for _ in 0..200 {
            let mut vcs = VcsModel::new();
            let mut ids: Vec<CommitId> = Vec::new();
            let n = rng.gen_range(1..14);
            for i in 0..n {
                let mut parents = Vec::new();
                if !ids.is_empty() && rng.gen_bool(0.9) {
                    parents.push(ids[rng.gen_range(0..ids.len())].clone());
                    if rng.gen_bool(0.4) {
                        let p = ids[rng.gen_range(0..ids.len())].clone();
                        if !parents.contains(&p) {
                            parents.push(p);
                        }
                    }
                }
                ids.push(vcs.commit(&parents, snap(&[("f", &[&i.to_string()])]), "m", "u").unwrap());
            }
            vcs.verify().unwrap();
            for a in &ids {
                for b in &ids {
                    assert_eq!(vcs.merge_base(a, b).ok(), oracle_merge_base(&vcs, a, b));
                }
            }
        }
    }

    #[test]
    fn stored_counts_match_diff() {
        let mut vcs = VcsModel::new();
        let a = vcs.commit(&[], snap(&[("f", &["a", "b", "c"])]), "a", "u").unwrap();
        let b = vcs.commit(&[a.clone()], snap(&[("f", &["a", "x", "c", "d"])]), "b", "u").unwrap();
        let c = vcs.commit(&[b.clone()], snap(&[("f", &["a", "x", "c", "d"])]), "c", "u").unwrap();
        assert_eq!(vcs.changed_line_counts(&a).unwrap(), LineCounts { additions: 3, deletions: 0 });
        assert_eq!(vcs.changed_line_counts(&b).unwrap(), LineCounts { additions: 2, deletions: 1 });
        assert_eq!(vcs.changed_line_counts(&c).unwrap().total(), 0);
        vcs.verify().unwrap();
    }

    #[test]
    fn create_branch_rejects_duplicates() {
        let (mut vcs, ids) = linear(1);
        vcs.create_branch("master", &ids[0]).unwrap();
        assert_eq!(
            vcs.create_branch("master", &ids[0]),
            Err(VcsError::BranchExists("master".into()))
        );
        assert!(vcs.create_branch("bad name", &ids[0]).is_err());
    }

    #[test]
    fn text_line_round_trip() {
        let lines = vec!["a".to_string(), String::new(), "b".to_string()];
        assert_eq!(text_to_lines(&lines_to_text(&lines)), lines);
        assert!(text_to_lines("").is_empty());
    }
}
