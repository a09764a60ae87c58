//! Line-based diffs between snapshots.
//!
//! The edit script is a shortest one (Myers' O(ND) greedy search). Within a
//! run of changes, deletions are always emitted before additions so the
//! output does not depend on search order. Hunks carry three lines of context
//! unless asked otherwise.

pub(crate) mod unified;

pub use unified::{parse_unified, render_unified, DiffParseError};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::vcs::{LineCounts, Snapshot};

pub const DEFAULT_CONTEXT: usize = 3;

/// One step of an edit script; indices are 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Edit {
    Equal { old: usize, new: usize },
    Delete { old: usize },
    Insert { new: usize },
}

impl Edit {
    pub fn is_change(self) -> bool {
        !matches!(self, Edit::Equal { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Origin {
    Context,
    Add,
    Delete,
}

impl Origin {
    pub fn marker(self) -> char {
        match self {
            Origin::Context => ' ',
            Origin::Add => '+',
            Origin::Delete => '-',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffLine {
    pub origin: Origin,
    pub text: String,
}

/// Contiguous region of a diff. Starts are 1-based; a side with zero length
/// carries the number of the line *before* the region, as in GNU diff.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hunk {
    pub old_start: usize,
    pub old_len: usize,
    pub new_start: usize,
    pub new_len: usize,
    pub lines: Vec<DiffLine>,
}

/// A hunk line with its position on each side it exists on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NumberedLine<'a> {
    pub origin: Origin,
    pub old_line: Option<usize>,
    pub new_line: Option<usize>,
    pub text: &'a str,
}

impl Hunk {
    fn first_line(start: usize, len: usize) -> usize {
        if len == 0 {
            start + 1
        } else {
            start
        }
    }

    pub fn numbered_lines(&self) -> impl Iterator<Item = NumberedLine<'_>> {
        let mut old = Self::first_line(self.old_start, self.old_len);
        let mut new = Self::first_line(self.new_start, self.new_len);
        self.lines.iter().map(move |l| {
            let (old_line, new_line) = match l.origin {
                Origin::Context => {
                    old += 1;
                    new += 1;
                    (Some(old - 1), Some(new - 1))
                }
                Origin::Delete => {
                    old += 1;
                    (Some(old - 1), None)
                }
                Origin::Add => {
                    new += 1;
                    (None, Some(new - 1))
                }
            };
            NumberedLine {
                origin: l.origin,
                old_line,
                new_line,
                text: &l.text,
            }
        })
    }

    /// Inclusive 1-based line range on the old side, if non-empty.
    pub fn old_range(&self) -> Option<(usize, usize)> {
        (self.old_len > 0).then(|| (self.old_start, self.old_start + self.old_len - 1))
    }

    pub fn new_range(&self) -> Option<(usize, usize)> {
        (self.new_len > 0).then(|| (self.new_start, self.new_start + self.new_len - 1))
    }

    /// Counts agree with the line origins.
    pub fn is_consistent(&self) -> bool {
        let old = self.lines.iter().filter(|l| l.origin != Origin::Add).count();
        let new = self.lines.iter().filter(|l| l.origin != Origin::Delete).count();
        old == self.old_len && new == self.new_len
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FileStatus {
    Added,
    Deleted,
    Modified,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDiff {
    pub path: String,
    pub status: FileStatus,
    pub hunks: Vec<Hunk>,
}

impl FileDiff {
    pub fn line_counts(&self) -> LineCounts {
        let mut counts = LineCounts::default();
        for l in self.hunks.iter().flat_map(|h| &h.lines) {
            match l.origin {
                Origin::Add => counts.additions += 1,
                Origin::Delete => counts.deletions += 1,
                Origin::Context => {}
            }
        }
        counts
    }
}

/// Shortest edit script turning `old` into `new`.
pub fn diff_lines<T: PartialEq>(old: &[T], new: &[T]) -> Vec<Edit> {
    let prefix = old.iter().zip(new).take_while(|(a, b)| a == b).count();
    let suffix = old[prefix..]
        .iter()
        .rev()
        .zip(new[prefix..].iter().rev())
        .take_while(|(a, b)| a == b)
        .count();
    let a = &old[prefix..old.len() - suffix];
    let b = &new[prefix..new.len() - suffix];

    let mut edits: Vec<Edit> = (0..prefix).map(|i| Edit::Equal { old: i, new: i }).collect();
    for e in myers(a, b) {
        edits.push(match e {
            Edit::Equal { old, new } => Edit::Equal {
                old: old + prefix,
                new: new + prefix,
            },
            Edit::Delete { old } => Edit::Delete { old: old + prefix },
            Edit::Insert { new } => Edit::Insert { new: new + prefix },
        });
    }
    let (os, ns) = (old.len() - suffix, new.len() - suffix);
    edits.extend((0..suffix).map(|i| Edit::Equal {
        old: os + i,
        new: ns + i,
    }));
    deletions_first(&mut edits);
    edits
}

fn myers<T: PartialEq>(a: &[T], b: &[T]) -> Vec<Edit> {
    let (n, m) = (a.len() as isize, b.len() as isize);
    if n == 0 && m == 0 {
        return Vec::new();
    }
    let max = n + m;
    let offset = max as usize;
    let idx = |k: isize| (k + max) as usize;
    let mut v = vec![0isize; 2 * offset + 2];
    let mut trace: Vec<Vec<isize>> = Vec::new();

    'search: for d in 0..=max {
        trace.push(v.clone());
        let mut k = -d;
        while k <= d {
            let mut x = if k == -d || (k != d && v[idx(k - 1)] < v[idx(k + 1)]) {
                v[idx(k + 1)]
            } else {
                v[idx(k - 1)] + 1
            };
            let mut y = x - k;
            while x < n && y < m && a[x as usize] == b[y as usize] {
                x += 1;
                y += 1;
            }
            v[idx(k)] = x;
            if x >= n && y >= m {
                break 'search;
            }
            k += 2;
        }
    }

    let mut edits = Vec::new();
    let (mut x, mut y) = (n, m);
    for (d, v) in trace.iter().enumerate().rev() {
        let d = d as isize;
        let k = x - y;
        let prev_k = if k == -d || (k != d && v[idx(k - 1)] < v[idx(k + 1)]) {
            k + 1
        } else {
            k - 1
        };
        let prev_x = v[idx(prev_k)];
        let prev_y = prev_x - prev_k;
        while x > prev_x && y > prev_y {
            x -= 1;
            y -= 1;
            edits.push(Edit::Equal {
                old: x as usize,
                new: y as usize,
            });
        }
        if d > 0 {
            if x == prev_x {
                edits.push(Edit::Insert { new: (y - 1) as usize });
            } else {
                edits.push(Edit::Delete { old: (x - 1) as usize });
            }
        }
        x = prev_x;
        y = prev_y;
    }
    edits.reverse();
    edits
}

/// Reorders every run of changes so its deletions precede its insertions.
fn deletions_first(edits: &mut [Edit]) {
    let mut i = 0;
    while i < edits.len() {
        if !edits[i].is_change() {
            i += 1;
            continue;
        }
        let start = i;
        while i < edits.len() && edits[i].is_change() {
            i += 1;
        }
        // Stable: relative order within deletions and within insertions kept.
        edits[start..i].sort_by_key(|e| matches!(e, Edit::Insert { .. }));
    }
}

/// Groups an edit script into hunks with `context` lines around each change.
pub fn hunks_from_edits(old: &[String], new: &[String], edits: &[Edit], context: usize) -> Vec<Hunk> {
    let changes: Vec<usize> = edits
        .iter()
        .enumerate()
        .filter(|(_, e)| e.is_change())
        .map(|(i, _)| i)
        .collect();
    if changes.is_empty() {
        return Vec::new();
    }

    // Merge change positions whose separating run of equal lines is short
    // enough that their context windows would touch.
    let mut groups: Vec<(usize, usize)> = Vec::new();
    for &c in &changes {
        match groups.last_mut() {
            Some((_, end)) if c - *end - 1 <= 2 * context => *end = c,
            _ => groups.push((c, c)),
        }
    }

    // Old/new line counters before each edit index.
    let mut before = Vec::with_capacity(edits.len() + 1);
    let (mut o, mut n) = (0usize, 0usize);
    for e in edits {
        before.push((o, n));
        match e {
            Edit::Equal { .. } => {
                o += 1;
                n += 1;
            }
            Edit::Delete { .. } => o += 1,
            Edit::Insert { .. } => n += 1,
        }
    }
    before.push((o, n));

    groups
        .into_iter()
        .map(|(first, last)| {
            let lo = first.saturating_sub(context);
            let hi = (last + context + 1).min(edits.len());
            let lines: Vec<DiffLine> = edits[lo..hi]
                .iter()
                .map(|e| match *e {
                    Edit::Equal { old: i, .. } => DiffLine {
                        origin: Origin::Context,
                        text: old[i].clone(),
                    },
                    Edit::Delete { old: i } => DiffLine {
                        origin: Origin::Delete,
                        text: old[i].clone(),
                    },
                    Edit::Insert { new: j } => DiffLine {
                        origin: Origin::Add,
                        text: new[j].clone(),
                    },
                })
                .collect();
            let (o0, n0) = before[lo];
            let (o1, n1) = before[hi];
            let (old_len, new_len) = (o1 - o0, n1 - n0);
            Hunk {
                old_start: if old_len == 0 { o0 } else { o0 + 1 },
                old_len,
                new_start: if new_len == 0 { n0 } else { n0 + 1 },
                new_len,
                lines,
            }
        })
        .collect()
}

pub fn diff_file(old: &[String], new: &[String], context: usize) -> Vec<Hunk> {
    hunks_from_edits(old, new, &diff_lines(old, new), context)
}

/// Per-file diffs between two snapshots, ordered by path, with the default
/// context.
pub fn compute_diff(old: &Snapshot, new: &Snapshot) -> Vec<FileDiff> {
    compute_diff_with_context(old, new, DEFAULT_CONTEXT)
}

pub fn compute_diff_with_context(old: &Snapshot, new: &Snapshot, context: usize) -> Vec<FileDiff> {
    let empty: Vec<String> = Vec::new();
    let mut paths: Vec<&String> = old.keys().chain(new.keys()).collect();
    paths.sort();
    paths.dedup();
    paths
        .into_iter()
        .filter_map(|path| {
            let (status, a, b) = match (old.get(path), new.get(path)) {
                (Some(a), Some(b)) if a == b => return None,
                (Some(a), Some(b)) => (FileStatus::Modified, a, b),
                (None, Some(b)) => (FileStatus::Added, &empty, b),
                (Some(a), None) => (FileStatus::Deleted, a, &empty),
                (None, None) => unreachable!(),
            };
            Some(FileDiff {
                path: path.clone(),
                status,
                hunks: diff_file(a, b, context),
            })
        })
        .collect()
}

pub fn line_counts(diffs: &[FileDiff]) -> LineCounts {
    diffs.iter().fold(LineCounts::default(), |acc, f| {
        let c = f.line_counts();
        LineCounts {
            additions: acc.additions + c.additions,
            deletions: acc.deletions + c.deletions,
        }
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PatchError {
    #[error("{path}: hunk at old line {line} does not match")]
    Mismatch { path: String, line: usize },
    #[error("{path}: hunks overlap or are out of order")]
    Disordered { path: String },
    #[error("{path}: file state does not match diff status")]
    WrongStatus { path: String },
}

/// Applies the hunks of one file to its old content.
pub fn apply_hunks(path: &str, old: &[String], hunks: &[Hunk]) -> Result<Vec<String>, PatchError> {
    let mut out = Vec::with_capacity(old.len());
    let mut pos = 0usize;
    for h in hunks {
        let start = if h.old_len == 0 { h.old_start } else { h.old_start - 1 };
        if start < pos || start > old.len() {
            return Err(PatchError::Disordered { path: path.to_owned() });
        }
        out.extend_from_slice(&old[pos..start]);
        let mut cursor = start;
        for l in &h.lines {
            match l.origin {
                Origin::Context | Origin::Delete => {
                    if old.get(cursor) != Some(&l.text) {
                        return Err(PatchError::Mismatch {
                            path: path.to_owned(),
                            line: cursor + 1,
                        });
                    }
                    if l.origin == Origin::Context {
                        out.push(l.text.clone());
                    }
                    cursor += 1;
                }
                Origin::Add => out.push(l.text.clone()),
            }
        }
        pos = cursor;
    }
    out.extend_from_slice(&old[pos..]);
    Ok(out)
}

/// Applies a whole diff to a snapshot.
pub fn apply_diff(old: &Snapshot, diffs: &[FileDiff]) -> Result<Snapshot, PatchError> {
    let mut out = old.clone();
    for d in diffs {
        let wrong = || PatchError::WrongStatus { path: d.path.clone() };
        match d.status {
            FileStatus::Added => {
                if out.contains_key(&d.path) {
                    return Err(wrong());
                }
                out.insert(d.path.clone(), apply_hunks(&d.path, &[], &d.hunks)?);
            }
            FileStatus::Deleted => {
                let base = out.remove(&d.path).ok_or_else(wrong)?;
                if !apply_hunks(&d.path, &base, &d.hunks)?.is_empty() {
                    return Err(wrong());
                }
            }
            FileStatus::Modified => {
                let base = out.get(&d.path).ok_or_else(wrong)?;
                let new = apply_hunks(&d.path, base, &d.hunks)?;
                out.insert(d.path.clone(), new);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lines(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_owned).collect()
    }

    fn snap(files: &[(&str, &str)]) -> Snapshot {
        files.iter().map(|(p, c)| (p.to_string(), lines(c))).collect()
    }

    /// Classic LCS table; edit distance = n + m - 2 * lcs.
    fn dp_edit_distance(a: &[String], b: &[String]) -> usize {
        let mut t = vec![vec![0usize; b.len() + 1]; a.len() + 1];
        for i in (0..a.len()).rev() {
            for j in (0..b.len()).rev() {
                t[i][j] = if a[i] == b[j] {
                    t[i + 1][j + 1] + 1
                } else {
                    t[i + 1][j].max(t[i][j + 1])
                };
            }
        }
        a.len() + b.len() - 2 * t[0][0]
    }

    #[test]
    fn identical_snapshots_have_no_diff() {
        let s = snap(&[("a.md", "x y z"), ("b.md", "q")]);
        assert!(compute_diff(&s, &s).is_empty());
    }

    #[test]
    fn single_line_replacement() {
        let old = snap(&[("f", "a b c d e")]);
        let new = snap(&[("f", "a b X d e")]);
        let d = compute_diff(&old, &new);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].hunks.len(), 1);
        let h = &d[0].hunks[0];
        let origins: Vec<_> = h.lines.iter().map(|l| l.origin).collect();
        use Origin::*;
        assert_eq!(origins, vec![Context, Context, Delete, Add, Context, Context]);
        assert_eq!((h.old_start, h.old_len, h.new_start, h.new_len), (1, 5, 1, 5));
        assert_eq!(dp_edit_distance(&old["f"], &new["f"]), 2);
    }

    #[test]
    fn new_file_is_one_pure_addition() {
        let old = Snapshot::new();
        let new = snap(&[("g.puml", "a b c d")]);
        let d = compute_diff(&old, &new);
        assert_eq!(d[0].status, FileStatus::Added);
        let h = &d[0].hunks[0];
        assert_eq!((h.old_start, h.old_len, h.new_start, h.new_len), (0, 0, 1, 4));
    }

    #[test]
    fn deleted_file_is_pure_deletion() {
        let d = compute_diff(&snap(&[("g", "a b")]), &Snapshot::new());
        assert_eq!(d[0].status, FileStatus::Deleted);
        assert_eq!(line_counts(&d), LineCounts { additions: 0, deletions: 2 });
    }

    #[test]
    fn distant_changes_split_into_hunks() {
        let old: Vec<String> = (0..30).map(|i| i.to_string()).collect();
        let mut new = old.clone();
        new[2] = "x".into();
        new[25] = "y".into();
        let hunks = diff_file(&old, &new, 3);
        assert_eq!(hunks.len(), 2);
        assert_eq!((hunks[0].old_start, hunks[0].old_len), (1, 6));
        assert_eq!((hunks[1].old_start, hunks[1].old_len), (23, 7));
        // Changes 7 equal lines apart would need 8 to split at context 3.
        let mut close = old.clone();
        close[2] = "x".into();
        close[9] = "y".into();
        assert_eq!(diff_file(&old, &close, 3).len(), 1);
        close[9] = old[9].clone();
        close[10] = "y".into();
        assert_eq!(diff_file(&old, &close, 3).len(), 2);
    }

    #[test]
    fn deletions_precede_additions_in_a_run() {
        let edits = diff_lines(&lines("a b c"), &lines("a x y c"));
        let kinds: Vec<_> = edits
            .iter()
            .map(|e| match e {
                Edit::Equal { .. } => '=',
                Edit::Delete { .. } => '-',
                Edit::Insert { .. } => '+',
            })
            .collect();
        assert_eq!(kinds, vec!['=', '-', '+', '+', '=']);
    }

    #[test]
    fn zero_context_insertion_header() {
        let hunks = diff_file(&lines("a b c"), &lines("a b N c"), 0);
        assert_eq!(hunks.len(), 1);
        let h = &hunks[0];
        assert_eq!((h.old_start, h.old_len, h.new_start, h.new_len), (2, 0, 3, 1));
        assert_eq!(apply_hunks("f", &lines("a b c"), &hunks).unwrap(), lines("a b N c"));
    }

    #[test]
    fn numbered_lines_track_both_sides() {
        let hunks = diff_file(&lines("a b c"), &lines("a x c"), 3);
        let n: Vec<_> = hunks[0]
            .numbered_lines()
            .map(|l| (l.origin, l.old_line, l.new_line))
            .collect();
        assert_eq!(
            n,
            vec![
                (Origin::Context, Some(1), Some(1)),
                (Origin::Delete, Some(2), None),
                (Origin::Add, None, Some(2)),
                (Origin::Context, Some(3), Some(3)),
            ]
        );
    }

    #[test]
    fn mismatched_patch_is_rejected() {
        let hunks = diff_file(&lines("a b c"), &lines("a x c"), 1);
        assert!(matches!(
            apply_hunks("f", &lines("a q c"), &hunks),
            Err(PatchError::Mismatch { .. })
        ));
    }

    fn file_strategy(max: usize) -> impl Strategy<Value = Vec<String>> {
        prop::collection::vec(prop::sample::select(vec!["A", "B", "C", "D", "E"]), 0..=max)
            .prop_map(|v| v.into_iter().map(str::to_owned).collect())
    }

    proptest! {
        #[test]
        fn patch_round_trip(
            old in prop::collection::btree_map("[a-c]\\.md", file_strategy(50), 0..3),
            new in prop::collection::btree_map("[a-c]\\.md", file_strategy(50), 0..3),
        ) {
            let diffs = compute_diff(&old, &new);
            prop_assert_eq!(apply_diff(&old, &diffs).unwrap(), new);
            for f in &diffs {
                let mut last_end = 0;
                for h in &f.hunks {
                    prop_assert!(h.is_consistent());
                    prop_assert!(h.old_start >= last_end);
                    last_end = h.old_start + h.old_len;
                }
            }
        }

        #[test]
        fn edit_script_is_minimal(a in file_strategy(20), b in file_strategy(20)) {
            let edits = diff_lines(&a, &b);
            let changes = edits.iter().filter(|e| e.is_change()).count();
            prop_assert_eq!(changes, dp_edit_distance(&a, &b));
        }
    }
}
