use std::fmt::Write as _;

use thiserror::Error;

use super::{DiffLine, FileDiff, FileStatus, Hunk, Origin};

/// Renders diffs in unified format.
///
/// Each file starts with `--- a/<path>` / `+++ b/<path>` (`/dev/null` on the
/// missing side of an added or deleted file). Hunk headers always carry both
/// lengths: `@@ -<old_start>,<old_len> +<new_start>,<new_len> @@`. Every line
/// ends with `\n`.
pub fn render_unified(diffs: &[FileDiff]) -> String {
    let mut out = String::new();
    for f in diffs {
        out.push_str(&file_header(f));
        for h in &f.hunks {
            out.push_str(&hunk_header(h));
            for l in &h.lines {
                out.push(l.origin.marker());
                out.push_str(&l.text);
                out.push('\n');
            }
        }
    }
    out
}

pub(crate) fn file_header(f: &FileDiff) -> String {
    let old = match f.status {
        FileStatus::Added => "/dev/null".to_owned(),
        _ => format!("a/{}", f.path),
    };
    let new = match f.status {
        FileStatus::Deleted => "/dev/null".to_owned(),
        _ => format!("b/{}", f.path),
    };
    format!("--- {old}\n+++ {new}\n")
}

pub(crate) fn hunk_header(h: &Hunk) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "@@ -{},{} +{},{} @@",
        h.old_start, h.old_len, h.new_start, h.new_len
    );
    s
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct DiffParseError {
    pub line: usize,
    pub message: String,
}

fn parse_range(s: &str, line: usize) -> Result<(usize, usize), DiffParseError> {
    let err = || DiffParseError {
        line,
        message: format!("malformed range `{s}`"),
    };
    let (start, len) = match s.split_once(',') {
        Some((a, b)) => (a, b),
        None => (s, "1"),
    };
    Ok((start.parse().map_err(|_| err())?, len.parse().map_err(|_| err())?))
}

/// Parses unified diff text as produced by [`render_unified`] (and by
/// `git diff` for text files without renames).
pub fn parse_unified(text: &str) -> Result<Vec<FileDiff>, DiffParseError> {
    let lines: Vec<&str> = text.lines().collect();
    let mut files = Vec::new();
    let mut i = 0;
    while i < lines.len() {
        let line_no = i + 1;
        let Some(old) = lines[i].strip_prefix("--- ") else {
            // Preamble such as `diff --git` or `index` lines.
            i += 1;
            continue;
        };
        let new = lines
            .get(i + 1)
            .and_then(|l| l.strip_prefix("+++ "))
            .ok_or_else(|| DiffParseError {
                line: line_no + 1,
                message: "expected `+++` header".into(),
            })?;
        let old = old.split('\t').next().unwrap_or(old);
        let new = new.split('\t').next().unwrap_or(new);
        let (status, path) = match (old, new) {
            ("/dev/null", n) => (FileStatus::Added, n),
            (o, "/dev/null") => (FileStatus::Deleted, o),
            (_, n) => (FileStatus::Modified, n),
        };
        let path = path
            .strip_prefix("a/")
            .or_else(|| path.strip_prefix("b/"))
            .unwrap_or(path)
            .to_owned();
        i += 2;

        let mut hunks = Vec::new();
        while i < lines.len() && lines[i].starts_with("@@") {
            let header_line = i + 1;
            let inner = lines[i]
                .strip_prefix("@@ ")
                .and_then(|r| r.split_once(" @@"))
                .map(|(r, _)| r)
                .ok_or_else(|| DiffParseError {
                    line: header_line,
                    message: "malformed hunk header".into(),
                })?;
            let mut parts = inner.split_whitespace();
            let (old_start, old_len) = parts
                .next()
                .and_then(|p| p.strip_prefix('-'))
                .ok_or_else(|| DiffParseError {
                    line: header_line,
                    message: "missing old range".into(),
                })
                .and_then(|r| parse_range(r, header_line))?;
            let (new_start, new_len) = parts
                .next()
                .and_then(|p| p.strip_prefix('+'))
                .ok_or_else(|| DiffParseError {
                    line: header_line,
                    message: "missing new range".into(),
                })
                .and_then(|r| parse_range(r, header_line))?;
            i += 1;

            let (mut seen_old, mut seen_new) = (0, 0);
            let mut body = Vec::new();
            while (seen_old < old_len || seen_new < new_len) && i < lines.len() {
                let l = lines[i];
                let (origin, rest) = match l.chars().next() {
                    Some(' ') => (Origin::Context, &l[1..]),
                    Some('-') => (Origin::Delete, &l[1..]),
                    Some('+') => (Origin::Add, &l[1..]),
                    Some('\\') => {
                        i += 1;
                        continue;
                    }
                    // Some tools strip the marker from blank context lines.
                    None => (Origin::Context, ""),
                    Some(_) => {
                        return Err(DiffParseError {
                            line: i + 1,
                            message: "unexpected line inside hunk".into(),
                        })
                    }
                };
                if origin != Origin::Add {
                    seen_old += 1;
                }
                if origin != Origin::Delete {
                    seen_new += 1;
                }
                body.push(DiffLine {
                    origin,
                    text: rest.to_owned(),
                });
                i += 1;
            }
            let hunk = Hunk {
                old_start,
                old_len,
                new_start,
                new_len,
                lines: body,
            };
            if !hunk.is_consistent() {
                return Err(DiffParseError {
                    line: header_line,
                    message: "hunk body does not match its header".into(),
                });
            }
            hunks.push(hunk);
        }
        files.push(FileDiff { path, status, hunks });
    }
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diff::compute_diff;
    use crate::vcs::Snapshot;

    fn snap(files: &[(&str, &[&str])]) -> Snapshot {
        files
            .iter()
            .map(|(p, ls)| (p.to_string(), ls.iter().map(|s| s.to_string()).collect()))
            .collect()
    }

    #[test]
    fn golden_render() {
        let old = snap(&[
            ("docs/req.md", &["# Req", "one", "two", "three"]),
            ("gone.txt", &["bye"]),
        ]);
        let new = snap(&[
            ("docs/req.md", &["# Req", "one", "2", "three", "four"]),
            ("uml/class.puml", &["@startuml", "@enduml"]),
        ]);
        let text = render_unified(&compute_diff(&old, &new));
        let expected = "\
--- a/docs/req.md
+++ b/docs/req.md
@@ -1,4 +1,5 @@
 # Req
 one
-two
+2
 three
+four
--- a/gone.txt
+++ /dev/null
@@ -1,1 +0,0 @@
-bye
--- /dev/null
+++ b/uml/class.puml
@@ -0,0 +1,2 @@
+@startuml
+@enduml
";
        assert_eq!(text, expected);
        assert_eq!(parse_unified(&text).unwrap(), compute_diff(&old, &new));
    }

    #[test]
    fn parses_git_style_preamble_and_short_ranges() {
        let text = "diff --git a/f b/f\nindex 1..2 100644\n--- a/f\n+++ b/f\n@@ -2 +2 @@ ctx\n-x\n+y\n";
        let d = parse_unified(text).unwrap();
        assert_eq!(d[0].hunks[0].old_len, 1);
        assert_eq!(d[0].hunks[0].lines.len(), 2);
    }

    #[test]
    fn rejects_count_mismatch() {
        let text = "--- a/f\n+++ b/f\n@@ -1,2 +1,2 @@\n-x\n+y\n";
        assert!(parse_unified(text).is_err());
    }
}
