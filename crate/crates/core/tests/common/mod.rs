#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pbl_inspect::persist::{ProjectDir, STATE_DIR, STATE_FILE};

pub const BIN: &str = env!("CARGO_BIN_EXE_pbl-inspect");

#[derive(Debug)]
pub struct Run {
    pub code: Option<i32>,
    pub stdout: String,
    pub stderr: String,
}

impl Run {
    fn from(o: Output) -> Self {
        Run {
            code: o.status.code(),
            stdout: String::from_utf8_lossy(&o.stdout).into_owned(),
            stderr: String::from_utf8_lossy(&o.stderr).into_owned(),
        }
    }
}

/// A scratch project directory driven through the real binary.
pub struct Session {
    pub dir: tempfile::TempDir,
    /// Commands that reached the project (for event log checks).
    pub executed: usize,
}

impl Session {
    pub fn new() -> Self {
        Session {
            dir: tempfile::tempdir().unwrap(),
            executed: 0,
        }
    }

    pub fn path(&self) -> &Path {
        self.dir.path()
    }

    pub fn project(&self) -> ProjectDir {
        ProjectDir::new(self.path())
    }

    pub fn command(&self, actor: &str, args: &[&str]) -> Command {
        let mut c = Command::new(BIN);
        c.env_remove("PBL_ACTOR")
            .env_remove("PBL_PROJECT")
            .env_remove("PBL_INSPECT_CRASH")
            .current_dir(self.path())
            .arg("--project")
            .arg(self.path())
            .arg("--actor")
            .arg(actor)
            .args(args);
        c
    }

    pub fn run(&mut self, actor: &str, args: &[&str]) -> Run {
        let r = Run::from(self.command(actor, args).output().unwrap());
        self.executed += 1;
        r
    }

    /// Runs and asserts exit 0, returning stdout.
    pub fn ok(&mut self, actor: &str, args: &[&str]) -> String {
        let r = self.run(actor, args);
        assert_eq!(r.code, Some(0), "{actor} {args:?} failed:\n{}{}", r.stdout, r.stderr);
        r.stdout
    }

    /// Runs and asserts the given exit code and error code.
    pub fn fails(&mut self, actor: &str, args: &[&str], exit: i32, code: &str) -> Run {
        let r = self.run(actor, args);
        assert_eq!(r.code, Some(exit), "{actor} {args:?}:\n{}{}", r.stdout, r.stderr);
        assert!(
            r.stderr.contains(&format!("error[{code}]")),
            "{actor} {args:?}: expected {code}, got {}",
            r.stderr
        );
        r
    }

    pub fn write(&self, name: &str, content: &str) -> PathBuf {
        let p = self.path().join(name);
        fs::write(&p, content).unwrap();
        p
    }

    pub fn state_bytes(&self) -> Vec<u8> {
        fs::read(self.path().join(STATE_DIR).join(STATE_FILE)).unwrap()
    }
}

pub struct Step {
    pub actor: &'static str,
    pub args: Vec<&'static str>,
}

fn step(actor: &'static str, args: &'static str) -> Step {
    Step {
        actor,
        args: split_args(args),
    }
}

/// Splits on spaces, keeping `'quoted parts'` together.
fn split_args(s: &'static str) -> Vec<&'static str> {
    let mut out = Vec::new();
    let mut rest = s.trim();
    while !rest.is_empty() {
        if let Some(r) = rest.strip_prefix('\'') {
            let end = r.find('\'').expect("unterminated quote");
            out.push(&r[..end]);
            rest = r[end + 1..].trim_start();
        } else {
            let end = rest.find(' ').unwrap_or(rest.len());
            out.push(&rest[..end]);
            rest = rest[end..].trim_start();
        }
    }
    out
}

pub const DB_V1: &str = "# Library database\n\nTables:\n- book\n- member\n";
pub const DB_V2: &str = "# Library database\n\nTables:\n- book (isbn primary key)\n- member (member_id primary key)\n";
pub const REL_V1: &str = "# Relations\n\nA member borrows books.\n";
pub const REL_V2: &str = "# Relations\n\nA member borrows books.\nOne member has zero or more loans.\n";

/// Source files the scenario commits, written into the session directory.
pub fn write_scenario_files(s: &Session) {
    s.write("db_v1.md", DB_V1);
    s.write("db_v2.md", DB_V2);
    s.write("rel_v1.md", REL_V1);
    s.write("rel_v2.md", REL_V2);
}

/// The whole course lifecycle for one artifact: two work branches, group
/// review, a first inspection that asks for changes, a second round on its
/// own branch, approval and the merge into master.
pub fn lifecycle_steps() -> Vec<Step> {
    vec![
        step("prof", "init --name Library --ta ta --group g1=a-san,b-san"),
        step("a-san", "add-artifact db-design --kind db-design --name 'Database design'"),
        step("prof", "milestone-create 'Design review' --due 2026-06-30"),
        step("a-san", "branch-inspection db-design"),
        step("a-san", "branch-work db-design tables"),
        step("b-san", "branch-work db-design relations"),
        step("a-san", "commit a-san/tables -m 'Draft the book and member tables' --file docs/db.md=db_v1.md"),
        step("b-san", "commit b-san/relations -m 'Describe how members borrow books' --file docs/relations.md=rel_v1.md"),
        step("a-san", "pr-open a-san/tables --title 'Draft tables'"),
        step("b-san", "pr-open b-san/relations --title 'Draft relations'"),
        step("b-san", "review 1 --verdict approve"),
        step("a-san", "review 2 --verdict approve"),
        step("a-san", "pr-merge 1"),
        step("b-san", "pr-merge 2"),
        step("a-san", "request-inspection db-design"),
        step("prof", "milestone-attach 'Design review' --pr 3"),
        step("ta", "comment 3 --path docs/db.md --line 4 --body 'Which column is the key?'"),
        step("prof", "comment 3 --path docs/relations.md --line 3 --body 'State the cardinality'"),
        step("ta", "review 3 --verdict request-changes"),
        step("prof", "review 3 --verdict request-changes"),
        step("prof", "complete-inspection 3 --verdict request-changes"),
        step("a-san", "branch-inspection db-design"),
        step("a-san", "branch-work db-design keys"),
        step("b-san", "branch-work db-design cardinality"),
        step("a-san", "commit a-san/keys -m 'Mark the primary key of each table' --file docs/db.md=db_v2.md"),
        step("b-san", "commit b-san/cardinality -m 'State the loan cardinality' --file docs/relations.md=rel_v2.md"),
        step("a-san", "pr-open a-san/keys"),
        step("b-san", "pr-open b-san/cardinality"),
        step("b-san", "review 4 --verdict approve"),
        step("a-san", "review 5 --verdict approve"),
        step("a-san", "pr-merge 4"),
        step("b-san", "pr-merge 5"),
        step("a-san", "reply 3 1 --body 'isbn and member_id are the keys now'"),
        step("b-san", "reply 3 2 --body 'Added: zero or more loans per member' --resolve"),
        step("a-san", "request-inspection db-design"),
        step("ta", "review 6 --verdict approve"),
        step("prof", "review 6 --verdict approve"),
        step("prof", "complete-inspection 6 --verdict approve"),
        step("a-san", "merge-master db-design"),
        step("a-san", "status"),
    ]
}
