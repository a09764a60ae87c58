//! Behavioural checks every [`VcsBackend`] must pass. The in-memory model and
//! the git adapter both run this suite; a new adapter should too.

use super::{CommitId, LineCounts, Snapshot, VcsBackend, VcsError};

fn snap(files: &[(&str, &[&str])]) -> Snapshot {
    files
        .iter()
        .map(|(p, ls)| (p.to_string(), ls.iter().map(|s| s.to_string()).collect()))
        .collect()
}

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

/// Runs every check against fresh, empty stores produced by `make`.
pub fn run<B, F>(mut make: F) -> Result<(), String>
where
    B: VcsBackend,
    F: FnMut() -> B,
{
    snapshots_round_trip(&mut make())?;
    branches_create_and_move(&mut make())?;
    merge_base_semantics(&mut make())?;
    line_counts(&mut make())?;
    checkpoint_rollback(&mut make())?;
    Ok(())
}

fn snapshots_round_trip<B: VcsBackend>(vcs: &mut B) -> Result<(), String> {
    ensure!(vcs.resolve_branch("master").is_none(), "fresh store has a master branch");
    let content = snap(&[
        ("README.md", &["# Project", "", "text"]),
        ("docs/db-design.md", &["# DB", "| table | key |"]),
        ("empty.txt", &[]),
    ]);
    let root = vcs
        .commit(&[], content.clone(), "Initial commit", "alice")
        .map_err(|e| e.to_string())?;
    ensure!(vcs.contains(&root), "new commit not found");
    ensure!(vcs.snapshot(&root).map_err(|e| e.to_string())? == content, "snapshot differs after round trip");
    let meta = vcs.commit_meta(&root).map_err(|e| e.to_string())?;
    ensure!(meta.parents.is_empty(), "root commit has parents");
    ensure!(meta.message == "Initial commit", "message mismatch: {:?}", meta.message);
    ensure!(meta.author == "alice", "author mismatch: {:?}", meta.author);

    let child = vcs
        .commit(&[root.clone()], snap(&[("a", &["x"])]), "Subject\n\nBody line", "bob")
        .map_err(|e| e.to_string())?;
    let meta = vcs.commit_meta(&child).map_err(|e| e.to_string())?;
    ensure!(meta.parents == vec![root.clone()], "parent list mismatch");
    ensure!(meta.message == "Subject\n\nBody line", "multi-line message mismatch");

    let missing = CommitId("0000000000000000000000000000000000000000".into());
    ensure!(!vcs.contains(&missing), "phantom commit reported present");
    ensure!(
        matches!(vcs.snapshot(&missing), Err(VcsError::UnknownCommit(_))),
        "unknown commit snapshot did not fail with UnknownCommit"
    );
    ensure!(
        matches!(vcs.commit(&[missing], Snapshot::new(), "m", "u"), Err(VcsError::UnknownCommit(_))),
        "commit with unknown parent accepted"
    );
    Ok(())
}

fn branches_create_and_move<B: VcsBackend>(vcs: &mut B) -> Result<(), String> {
    let a = vcs.commit(&[], snap(&[("f", &["1"])]), "a", "u").map_err(|e| e.to_string())?;
    let b = vcs.commit(&[a.clone()], snap(&[("f", &["2"])]), "b", "u").map_err(|e| e.to_string())?;
    vcs.create_branch("master", &a).map_err(|e| e.to_string())?;
    vcs.create_branch("inspection/db-design", &a).map_err(|e| e.to_string())?;
    ensure!(vcs.resolve_branch("master") == Some(a.clone()), "master does not resolve");
    ensure!(
        matches!(vcs.create_branch("master", &b), Err(VcsError::BranchExists(_))),
        "duplicate branch accepted"
    );
    vcs.set_branch("master", &b).map_err(|e| e.to_string())?;
    ensure!(vcs.resolve_branch("master") == Some(b.clone()), "master did not move");
    let mut names: Vec<_> = vcs.branches().into_iter().map(|(n, _)| n).collect();
    names.sort();
    ensure!(
        names == ["inspection/db-design", "master"],
        "branch listing mismatch: {names:?}"
    );
    Ok(())
}

fn merge_base_semantics<B: VcsBackend>(vcs: &mut B) -> Result<(), String> {
    let e = |e: VcsError| e.to_string();
    let root = vcs.commit(&[], snap(&[("f", &["r"])]), "root", "u").map_err(e)?;
    let left = vcs.commit(&[root.clone()], snap(&[("f", &["r"]), ("l", &["1"])]), "left", "u").map_err(e)?;
    let right = vcs.commit(&[root.clone()], snap(&[("f", &["r"]), ("r", &["1"])]), "right", "u").map_err(e)?;
    let merged = vcs
        .commit(
            &[left.clone(), right.clone()],
            snap(&[("f", &["r"]), ("l", &["1"]), ("r", &["1"])]),
            "merge",
            "u",
        )
        .map_err(e)?;
    let other_root = vcs.commit(&[], snap(&[("g", &["1"])]), "unrelated", "u").map_err(e)?;

    ensure!(vcs.merge_base(&left, &right).map_err(e)? == root, "diamond merge base is not the fork");
    ensure!(vcs.merge_base(&merged, &left).map_err(e)? == left, "merge base with ancestor is not the ancestor");
    ensure!(vcs.merge_base(&root, &root).map_err(e)? == root, "merge base is not reflexive");
    ensure!(
        matches!(vcs.merge_base(&left, &other_root), Err(VcsError::NoCommonAncestor(..))),
        "disjoint histories reported a merge base"
    );
    ensure!(vcs.is_ancestor(&root, &merged).map_err(e)?, "root not an ancestor of merge");
    ensure!(!vcs.is_ancestor(&merged, &root).map_err(e)?, "merge reported as ancestor of root");
    ensure!(vcs.generation(&merged).map_err(e)? == 2, "merge generation is not 2");
    Ok(())
}

fn line_counts<B: VcsBackend>(vcs: &mut B) -> Result<(), String> {
    let e = |e: VcsError| e.to_string();
    let a = vcs.commit(&[], snap(&[("f", &["a", "b", "c"])]), "a", "u").map_err(e)?;
    let b = vcs
        .commit(&[a.clone()], snap(&[("f", &["a", "B", "c", "d"]), ("g", &["1", "2"])]), "b", "u")
        .map_err(e)?;
    let c = vcs.commit(&[b.clone()], snap(&[("g", &["1", "2"])]), "c", "u").map_err(e)?;
    let d = vcs.commit(&[c.clone()], snap(&[("g", &["1", "2"])]), "d", "u").map_err(e)?;
    let expect = [
        (&a, LineCounts { additions: 3, deletions: 0 }),
        (&b, LineCounts { additions: 4, deletions: 1 }),
        (&c, LineCounts { additions: 0, deletions: 4 }),
        (&d, LineCounts { additions: 0, deletions: 0 }),
    ];
    for (id, want) in expect {
        let got = vcs.changed_line_counts(id).map_err(e)?;
        ensure!(got == want, "line counts for {id}: got {got:?}, want {want:?}");
    }
    Ok(())
}

fn checkpoint_rollback<B: VcsBackend>(vcs: &mut B) -> Result<(), String> {
    let e = |e: VcsError| e.to_string();
    let a = vcs.commit(&[], snap(&[("f", &["1"])]), "a", "u").map_err(e)?;
    let b = vcs.commit(&[a.clone()], snap(&[("f", &["2"])]), "b", "u").map_err(e)?;
    vcs.create_branch("master", &a).map_err(e)?;
    let cp = vcs.checkpoint();
    vcs.set_branch("master", &b).map_err(e)?;
    vcs.create_branch("scratch", &b).map_err(e)?;
    vcs.rollback(cp);
    ensure!(vcs.resolve_branch("master") == Some(a), "rollback did not restore master");
    ensure!(vcs.resolve_branch("scratch").is_none(), "rollback kept a new branch");
    Ok(())
}
