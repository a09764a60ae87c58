//! Text rendering of project status and pull request diffs.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::anchor::{AnchorStatus, AnchoredThread, Side};
use crate::diff::unified::{file_header, hunk_header};
use crate::error::Result;
use crate::forge::{PrId, PrPurpose};
use crate::project::{Project, StatusReport};
use crate::vcs::VcsBackend;
use crate::workflow::{Round, MAX_ROUNDS};

pub fn render_status(r: &StatusReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "Project: {}", r.project);
    out.push_str("\nArtifacts:\n");
    if r.artifacts.is_empty() {
        out.push_str("  (none)\n");
    }
    for a in &r.artifacts {
        let _ = write!(out, "  {}: {}", a.slug, a.phase);
        if let Some(i) = &a.open_inspection {
            let pending = if i.pending_reviewers.is_empty() {
                "none".to_owned()
            } else {
                i.pending_reviewers.join(", ")
            };
            let _ = write!(out, ", reviewers pending: {pending} [{}]", i.pr);
        }
        let _ = writeln!(
            out,
            " (rounds used {}/{MAX_ROUNDS}, {}, group {})",
            a.rounds_used, a.kind, a.group
        );
    }
    out.push_str("\nMilestones:\n");
    if r.milestones.is_empty() {
        out.push_str("  (none)\n");
    }
    for m in &r.milestones {
        let _ = writeln!(
            out,
            "  {} (due {}): {:.0}% ({}/{} closed)",
            m.title,
            m.due,
            m.progress * 100.0,
            m.closed,
            m.attached
        );
    }
    out
}

fn render_thread(out: &mut String, t: &AnchoredThread, indent: &str) {
    let resolved = if t.resolved { " resolved" } else { "" };
    for (i, c) in t.comments.iter().enumerate() {
        if i == 0 {
            let _ = writeln!(out, "{indent}>> [#{}{resolved}] {}: {}", t.id, c.author, c.body);
        } else {
            let _ = writeln!(out, "{indent}>>   {}: {}", c.author, c.body);
        }
    }
}

fn location(t: &AnchoredThread) -> String {
    format!("{}:{} ({})", t.anchor.path, t.anchor.line, t.anchor.side)
}

/// The round-scoped diff of `id` with each live thread printed right below
/// its line. Outdated threads, and live ones the diff no longer shows, are
/// listed after the diff. A pull request without threads renders as a
/// plain unified diff.
pub fn render_pr_diff<B: VcsBackend>(project: &Project<B>, id: PrId) -> Result<String> {
    let pr = project.state.pr(id)?;
    let (_, _, diffs) = project.pr_diff(id)?;
    let threads = &pr.comment_threads;
    let mut placed = BTreeSet::new();
    let mut out = String::new();

    for f in &diffs {
        out.push_str(&file_header(f));
        for h in &f.hunks {
            out.push_str(&hunk_header(h));
            for l in h.numbered_lines() {
                out.push(l.origin.marker());
                out.push_str(l.text);
                out.push('\n');
                for t in threads {
                    let a = &t.anchor;
                    if a.status != AnchorStatus::Live || a.path != f.path || placed.contains(&t.id) {
                        continue;
                    }
                    let here = match a.side {
                        Side::New => l.new_line == Some(a.line),
                        Side::Old => l.old_line == Some(a.line),
                    };
                    if here {
                        placed.insert(t.id);
                        render_thread(&mut out, t, "    ");
                    }
                }
            }
        }
    }

    let outdated: Vec<&AnchoredThread> = threads
        .iter()
        .filter(|t| t.anchor.status == AnchorStatus::Outdated)
        .collect();
    if !outdated.is_empty() {
        out.push_str("\nOutdated threads:\n");
        for t in outdated {
            let _ = writeln!(out, "  {}", location(t));
            render_thread(&mut out, t, "    ");
        }
    }
    let stray: Vec<&AnchoredThread> = threads
        .iter()
        .filter(|t| t.anchor.status == AnchorStatus::Live && !placed.contains(&t.id))
        .collect();
    if !stray.is_empty() {
        out.push_str("\nThreads outside the current diff:\n");
        for t in stray {
            let _ = writeln!(out, "  {}", location(t));
            render_thread(&mut out, t, "    ");
        }
    }

    if pr.purpose == PrPurpose::Inspection(Round::SECOND) {
        let earlier = project
            .state
            .forge
            .prs
            .iter()
            .filter(|p| p.artifact == pr.artifact && p.purpose == PrPurpose::Inspection(Round::FIRST));
        for p in earlier {
            if p.comment_threads.is_empty() {
                continue;
            }
            let _ = writeln!(out, "\nRound 1 threads ({}):", p.id);
            for t in &p.comment_threads {
                let _ = writeln!(out, "  {}", location(t));
                render_thread(&mut out, t, "    ");
            }
        }
    }
    Ok(out)
}
