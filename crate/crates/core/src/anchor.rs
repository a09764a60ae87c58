//! Review comments anchored to diff lines.
//!
//! A thread is addressed by `(path, side, line)` where `side` picks the old
//! or new file of the pull request diff. Only lines that appear in some hunk
//! (changed lines or their context) can be commented on. When the source
//! branch moves, [`remap_anchors`] carries new-side anchors through the
//! incremental diff; anchors on lines that were deleted or rewritten become
//! outdated but keep their comments.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diff::{FileDiff, FileStatus, Origin};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    Old,
    New,
}

impl std::str::FromStr for Side {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "old" => Ok(Side::Old),
            "new" => Ok(Side::New),
            _ => Err(format!("unknown side `{s}` (expected old or new)")),
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Old => "old",
            Side::New => "new",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnchorStatus {
    Live,
    Outdated,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DiffAnchor {
    pub path: String,
    pub side: Side,
    pub line: usize,
    pub status: AnchorStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThreadComment {
    pub author: String,
    pub body: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnchoredThread {
    pub id: u64,
    pub anchor: DiffAnchor,
    pub comments: Vec<ThreadComment>,
    pub resolved: bool,
}

impl AnchoredThread {
    pub fn opener(&self) -> &str {
        &self.comments[0].author
    }

    pub fn replies(&self) -> &[ThreadComment] {
        &self.comments[1..]
    }

    pub fn reply(&mut self, author: &str, body: &str) -> Result<(), AnchorError> {
        if body.trim().is_empty() {
            return Err(AnchorError::EmptyComment);
        }
        self.comments.push(ThreadComment {
            author: author.to_owned(),
            body: body.to_owned(),
        });
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnchorError {
    #[error("{path}:{line} ({side}) is not part of the pull request diff")]
    AnchorOutsideDiff { path: String, side: Side, line: usize },
    #[error("comment body is empty")]
    EmptyComment,
}

impl AnchorError {
    pub fn code(&self) -> &'static str {
        match self {
            AnchorError::AnchorOutsideDiff { .. } => "anchor-outside-diff",
            AnchorError::EmptyComment => "empty-comment",
        }
    }
}

/// Whether `(path, side, line)` falls inside one of the hunks of `diffs`.
pub fn anchor_in_diff(diffs: &[FileDiff], path: &str, side: Side, line: usize) -> bool {
    diffs
        .iter()
        .filter(|f| f.path == path)
        .flat_map(|f| &f.hunks)
        .filter_map(|h| match side {
            Side::Old => h.old_range(),
            Side::New => h.new_range(),
        })
        .any(|(lo, hi)| (lo..=hi).contains(&line))
}

/// Opens a new thread on the given diff line.
pub fn open_thread(
    id: u64,
    diffs: &[FileDiff],
    path: &str,
    side: Side,
    line: usize,
    author: &str,
    body: &str,
) -> Result<AnchoredThread, AnchorError> {
    if !anchor_in_diff(diffs, path, side, line) {
        return Err(AnchorError::AnchorOutsideDiff {
            path: path.to_owned(),
            side,
            line,
        });
    }
    if body.trim().is_empty() {
        return Err(AnchorError::EmptyComment);
    }
    Ok(AnchoredThread {
        id,
        anchor: DiffAnchor {
            path: path.to_owned(),
            side,
            line,
            status: AnchorStatus::Live,
        },
        comments: vec![ThreadComment {
            author: author.to_owned(),
            body: body.to_owned(),
        }],
        resolved: false,
    })
}

/// Where line `line` of the pre-image ends up in the post-image of `file`,
/// or `None` when the line was deleted.
pub fn map_line(file: &FileDiff, line: usize) -> Option<usize> {
    if file.status == FileStatus::Deleted {
        return None;
    }
    let mut offset: isize = 0;
    for h in &file.hunks {
        if let Some((lo, hi)) = h.old_range() {
            if (lo..=hi).contains(&line) {
                return h
                    .numbered_lines()
                    .find(|l| l.old_line == Some(line))
                    .and_then(|l| match l.origin {
                        Origin::Context => l.new_line,
                        _ => None,
                    });
            }
            if hi >= line {
                break;
            }
        } else if h.old_start >= line {
            // Pure insertion after `old_start`: only lines below it shift.
            break;
        }
        offset += h.new_len as isize - h.old_len as isize;
    }
    Some((line as isize + offset) as usize)
}

/// Carries threads across an incremental diff of the pull request source.
pub fn remap_anchors(threads: &[AnchoredThread], incremental: &[FileDiff]) -> Vec<AnchoredThread> {
    threads
        .iter()
        .map(|t| {
            let mut t = t.clone();
            let a = &mut t.anchor;
            if a.status == AnchorStatus::Outdated || a.side == Side::Old {
                return t;
            }
            if let Some(file) = incremental.iter().find(|f| f.path == a.path) {
                match map_line(file, a.line) {
                    Some(line) => a.line = line,
                    None => a.status = AnchorStatus::Outdated,
                }
            }
            t
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diff::{compute_diff, compute_diff_with_context, diff_lines, Edit};
    use crate::vcs::Snapshot;
    use rand::{Rng, SeedableRng};

    fn snap(path: &str, lines: &[String]) -> Snapshot {
        [(path.to_owned(), lines.to_vec())].into_iter().collect()
    }

    fn numbered(n: usize) -> Vec<String> {
        (1..=n).map(|i| format!("line {i}")).collect()
    }

    fn thread(path: &str, side: Side, line: usize) -> AnchoredThread {
        AnchoredThread {
            id: 1,
            anchor: DiffAnchor {
                path: path.into(),
                side,
                line,
                status: AnchorStatus::Live,
            },
            comments: vec![ThreadComment {
                author: "ta".into(),
                body: "Multiplicity missing here".into(),
            }],
            resolved: false,
        }
    }

    #[test]
    fn comment_on_added_line_is_live() {
        let old = numbered(20);
        let mut new = old.clone();
        new.insert(10, "class Order".into());
        let d = compute_diff(&snap("class.puml", &old), &snap("class.puml", &new));
        let t = open_thread(1, &d, "class.puml", Side::New, 11, "ta", "name?").unwrap();
        assert_eq!(t.anchor.status, AnchorStatus::Live);
        assert!(!t.resolved);
        // Context lines are commentable, untouched lines beyond them are not.
        assert!(anchor_in_diff(&d, "class.puml", Side::New, 8));
        assert!(!anchor_in_diff(&d, "class.puml", Side::New, 7));
        assert_eq!(
            open_thread(2, &d, "class.puml", Side::New, 2, "ta", "x"),
            Err(AnchorError::AnchorOutsideDiff {
                path: "class.puml".into(),
                side: Side::New,
                line: 2
            })
        );
        assert!(!anchor_in_diff(&d, "other.md", Side::New, 11));
    }

    #[test]
    fn reply_keeps_anchor() {
        let mut t = thread("f", Side::New, 4);
        let anchor = t.anchor.clone();
        t.reply("a-san", "Fixed in the next commit").unwrap();
        assert_eq!(t.comments.len(), 2);
        assert_eq!(t.anchor, anchor);
        assert_eq!(t.replies()[0].author, "a-san");
        assert_eq!(t.reply("a-san", "  "), Err(AnchorError::EmptyComment));
    }

    #[test]
    fn unrelated_files_leave_anchors_alone() {
        let d = compute_diff(&snap("other.md", &numbered(3)), &snap("other.md", &numbered(5)));
        let threads = vec![thread("f", Side::New, 10)];
        assert_eq!(remap_anchors(&threads, &d), threads);
    }

    #[test]
    fn insertion_above_shifts_anchor() {
        let old = numbered(20);
        let mut new = old.clone();
        for i in 0..3 {
            new.insert(2, format!("inserted {i}"));
        }
        let d = compute_diff(&snap("f", &old), &snap("f", &new));
        let out = remap_anchors(&[thread("f", Side::New, 10)], &d);
        assert_eq!(out[0].anchor.line, 13);
        assert_eq!(new[12], old[9]);
        assert_eq!(out[0].anchor.status, AnchorStatus::Live);
    }

    #[test]
    fn deleted_line_becomes_outdated() {
        let old = numbered(12);
        let mut new = old.clone();
        new.remove(5);
        let d = compute_diff(&snap("f", &old), &snap("f", &new));
        let out = remap_anchors(&[thread("f", Side::New, 6), thread("f", Side::Old, 6)], &d);
        assert_eq!(out[0].anchor.status, AnchorStatus::Outdated);
        assert_eq!(out[0].comments[0].body, "Multiplicity missing here");
        assert_eq!(out[1].anchor, thread("f", Side::Old, 6).anchor);
    }

    #[test]
    fn deleted_file_outdates_everything() {
        let d = compute_diff(&snap("f", &numbered(4)), &Snapshot::new());
        let out = remap_anchors(&[thread("f", Side::New, 2)], &d);
        assert_eq!(out[0].anchor.status, AnchorStatus::Outdated);
    }

    /// Tracks each old line through the edit script one step at a time.
    fn walk_oracle(old: &[String], new: &[String]) -> Vec<Option<usize>> {
        let mut map = vec![None; old.len()];
        for e in diff_lines(old, new) {
            if let Edit::Equal { old, new } = e {
                map[old] = Some(new + 1);
            }
        }
        map
    }

    #[test]
    fn remap_matches_edit_walk_for_random_edits() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        for _ in 0..300 {
            let n = rng.gen_range(1..40);
            let old: Vec<String> = (0..n).map(|_| ["a", "b", "c"][rng.gen_range(0..3)].to_string()).collect();
            let mut new = old.clone();
            for _ in 0..rng.gen_range(1..6) {
                match rng.gen_range(0..3) {
                    0 if !new.is_empty() => {
                        let i = rng.gen_range(0..new.len());
                        new.remove(i);
                    }
                    1 if !new.is_empty() => {
                        let i = rng.gen_range(0..new.len());
                        new[i] = "z".into();
                    }
                    _ => {
                        let i = rng.gen_range(0..=new.len());
                        new.insert(i, "y".into());
                    }
                }
            }
            let oracle = walk_oracle(&old, &new);
            for ctx in [0, 3] {
                let d = compute_diff_with_context(&snap("f", &old), &snap("f", &new), ctx);
                for line in 1..=n {
                    let got = match d.first() {
                        Some(f) => map_line(f, line),
                        None => Some(line),
                    };
                    assert_eq!(got, oracle[line - 1], "line {line} ctx {ctx}");
                }
            }
        }
    }
}
