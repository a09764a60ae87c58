//! Command-line front end.
//!
//! Each invocation loads the project, checks the actor's role, runs exactly
//! one operation, saves the state if the operation changed it, and appends
//! one line to the event log. Output is collected into an [`Outcome`] so the
//! same path serves the binary, the FFI layer and tests.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use crate::anchor::Side;
use crate::artifact::{element_line_index, LintPolicy, parse_plantuml_class_diagram, validate_text_artifact};
use crate::diff::{line_counts, render_unified};
use crate::error::{Error, Result};
use crate::forge::{MilestoneItem, PrId, ReviewVerdict};
use crate::persist::{BackendKind, ProjectDir, StateFile};
use crate::project::{FileChange, Project, ProjectConfig, Role, SCHEMA_VERSION};
use crate::report::{render_pr_diff, render_status};
use crate::topology::NamingPolicy;
use crate::vcs::git::GitBackend;
use crate::vcs::{text_to_lines, VcsBackend, VcsModel};
use crate::workflow::{ArtifactFormat, ArtifactKind, InspectionVerdict, Round};

#[derive(Debug, Parser)]
#[command(
    name = "pbl-inspect",
    version,
    about = "Run artifact inspections for team software projects over branches and pull requests"
)]
pub struct Cli {
    /// Project directory
    #[arg(long, global = true, default_value = ".", env = "PBL_PROJECT")]
    pub project: PathBuf,
    /// Member running the command
    #[arg(long, global = true, env = "PBL_ACTOR")]
    pub actor: Option<String>,
    /// History store; fixed when the project is created
    #[arg(long, global = true, value_enum)]
    pub backend: Option<BackendKind>,
    /// Machine-readable output
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Create a project; the actor becomes the instructor
    Init {
        #[arg(long)]
        name: String,
        /// Teaching assistant id (repeatable)
        #[arg(long = "ta")]
        tas: Vec<String>,
        /// Group as `<id>=<member>,<member>,...` (repeatable)
        #[arg(long = "group", value_parser = parse_group)]
        groups: Vec<(String, Vec<String>)>,
        /// Work branch pattern, e.g. `<owner>/<task>` or `work/<task>`
        #[arg(long)]
        work_pattern: Option<String>,
        /// JSON file with commit lint settings
        #[arg(long)]
        lint_policy: Option<PathBuf>,
    },
    /// Register an artifact
    AddArtifact {
        slug: String,
        /// requirements-spec, ui-design, class-diagram, db-design, sequence-diagram, state-chart or source-code
        #[arg(long)]
        kind: ArtifactKind,
        #[arg(long)]
        name: Option<String>,
        /// Owning group (staff only; students own their group's artifacts)
        #[arg(long)]
        group: Option<String>,
    },
    /// Fork the inspection branch of an artifact
    BranchInspection {
        slug: String,
        #[arg(long)]
        round: Option<u8>,
    },
    /// Fork a work branch from the current inspection branch
    BranchWork {
        slug: String,
        /// Task name used in the branch pattern
        task: Option<String>,
        /// Explicit branch name instead of the pattern
        #[arg(long)]
        name: Option<String>,
    },
    /// Commit local files to a branch
    Commit {
        branch: String,
        #[arg(short, long)]
        message: String,
        /// `<repo path>=<local file>` (repeatable)
        #[arg(long = "file", value_parser = parse_file_arg)]
        files: Vec<(String, PathBuf)>,
        /// Repository path to delete (repeatable)
        #[arg(long = "delete")]
        deletes: Vec<String>,
    },
    /// Open a group-review pull request from a work branch
    PrOpen {
        work: String,
        /// Target inspection branch (defaults to the one the work branch was forked from)
        #[arg(long)]
        into: Option<String>,
        #[arg(long)]
        title: Option<String>,
        #[arg(long, default_value = "")]
        body: String,
    },
    /// Review a pull request
    Review {
        pr: PrId,
        #[arg(long)]
        verdict: ReviewVerdict,
    },
    /// Merge a pull request
    PrMerge { pr: PrId },
    /// Request the next inspection round
    RequestInspection { slug: String },
    /// Comment on a line of a pull request diff
    Comment {
        pr: PrId,
        #[arg(long)]
        path: String,
        #[arg(long)]
        line: usize,
        #[arg(long, default_value = "new")]
        side: Side,
        #[arg(long)]
        body: String,
    },
    /// Reply to a comment thread
    Reply {
        pr: PrId,
        thread: u64,
        #[arg(long)]
        body: String,
        #[arg(long)]
        resolve: bool,
    },
    /// Consolidate staff reviews and notify the group (instructor)
    CompleteInspection {
        pr: PrId,
        #[arg(long)]
        verdict: InspectionVerdict,
    },
    /// Merge an approved artifact into master
    MergeMaster { slug: String },
    /// Create a milestone
    MilestoneCreate {
        title: String,
        #[arg(long)]
        due: NaiveDate,
    },
    /// Attach a pull request or issue to a milestone
    MilestoneAttach {
        title: String,
        #[arg(long, conflicts_with = "issue", required_unless_present = "issue")]
        pr: Option<PrId>,
        #[arg(long)]
        issue: Option<u64>,
    },
    /// Close an issue attached to a milestone
    MilestoneClose {
        title: String,
        #[arg(long)]
        issue: u64,
    },
    /// Artifact phases, open inspections and milestone progress
    Status,
    /// Round-scoped diff of a pull request with its comment threads
    ShowDiff { pr: PrId },
    /// Lint commit messages on a branch
    LintCommits {
        #[arg(default_value = "master")]
        branch: String,
        /// Exit with a validation error when any finding is reported
        #[arg(long)]
        strict: bool,
    },
    /// Check that a file has the format its artifact kind requires
    Validate {
        path: String,
        /// Artifact kind: requirements-spec, ui-design, class-diagram, db-design, sequence-diagram, state-chart or source-code
        #[arg(long)]
        kind: ArtifactKind,
        /// Read the file from this branch instead of the local disk
        #[arg(long)]
        branch: Option<String>,
    },
    /// Notifications received by a member
    Notifications {
        #[arg(long)]
        member: Option<String>,
    },
}

fn parse_group(s: &str) -> std::result::Result<(String, Vec<String>), String> {
    let (id, members) = s
        .split_once('=')
        .ok_or_else(|| format!("expected <group>=<member>,..., got `{s}`"))?;
    let members: Vec<String> = members
        .split(',')
        .map(str::trim)
        .filter(|m| !m.is_empty())
        .map(String::from)
        .collect();
    if members.is_empty() {
        return Err(format!("group `{id}` has no members"));
    }
    Ok((id.trim().to_owned(), members))
}

fn parse_file_arg(s: &str) -> std::result::Result<(String, PathBuf), String> {
    let (repo, local) = s
        .split_once('=')
        .ok_or_else(|| format!("expected <repo path>=<local file>, got `{s}`"))?;
    if repo.is_empty() {
        return Err("repository path is empty".into());
    }
    Ok((repo.to_owned(), PathBuf::from(local)))
}

impl Command {
    pub fn verb(&self) -> &'static str {
        match self {
            Command::Init { .. } => "init",
            Command::AddArtifact { .. } => "add-artifact",
            Command::BranchInspection { .. } => "branch-inspection",
            Command::BranchWork { .. } => "branch-work",
            Command::Commit { .. } => "commit",
            Command::PrOpen { .. } => "pr-open",
            Command::Review { .. } => "review",
            Command::PrMerge { .. } => "pr-merge",
            Command::RequestInspection { .. } => "request-inspection",
            Command::Comment { .. } => "comment",
            Command::Reply { .. } => "reply",
            Command::CompleteInspection { .. } => "complete-inspection",
            Command::MergeMaster { .. } => "merge-master",
            Command::MilestoneCreate { .. } => "milestone-create",
            Command::MilestoneAttach { .. } => "milestone-attach",
            Command::MilestoneClose { .. } => "milestone-close",
            Command::Status => "status",
            Command::ShowDiff { .. } => "show-diff",
            Command::LintCommits { .. } => "lint-commits",
            Command::Validate { .. } => "validate",
            Command::Notifications { .. } => "notifications",
        }
    }

    pub fn is_mutation(&self) -> bool {
        !matches!(
            self,
            Command::Status
                | Command::ShowDiff { .. }
                | Command::LintCommits { .. }
                | Command::Validate { .. }
                | Command::Notifications { .. }
        )
    }
}

/// Every verb, for help and table-driven checks.
pub const VERBS: [&str; 21] = [
    "init",
    "add-artifact",
    "branch-inspection",
    "branch-work",
    "commit",
    "pr-open",
    "review",
    "pr-merge",
    "request-inspection",
    "comment",
    "reply",
    "complete-inspection",
    "merge-master",
    "milestone-create",
    "milestone-attach",
    "milestone-close",
    "status",
    "show-diff",
    "lint-commits",
    "validate",
    "notifications",
];

/// Which roles may run `verb`. Finer checks (group membership, requested
/// reviewers) happen in the operations themselves.
pub fn role_allows(role: Role, verb: &str) -> bool {
    match verb {
        "branch-inspection" | "branch-work" | "commit" | "pr-open" | "pr-merge" | "request-inspection"
        | "merge-master" => role == Role::Student,
        "complete-inspection" => role == Role::Instructor,
        _ => true,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub exit_code: i32,
    pub stdout: String,
    pub stderr: String,
}

struct Reply {
    text: String,
    json: Value,
}

impl Reply {
    fn new(text: impl Into<String>, json: Value) -> Self {
        Reply {
            text: text.into(),
            json,
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_args<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli),
        Err(e) => {
            let text = e.render().to_string();
            if e.use_stderr() {
                Outcome {
                    exit_code: 2,
                    stdout: String::new(),
                    stderr: text,
                }
            } else {
                Outcome {
                    exit_code: 0,
                    stdout: text,
                    stderr: String::new(),
                }
            }
        }
    }
}

/// Runs `args` (without program name) against the project in `project` as
/// `actor`.
pub fn execute(project: &Path, actor: &str, args: &[&str]) -> Outcome {
    let mut argv: Vec<OsString> = vec!["pbl-inspect".into(), "--project".into(), project.into()];
    argv.push("--actor".into());
    argv.push(actor.into());
    argv.extend(args.iter().map(OsString::from));
    run_args(argv)
}

pub fn run(cli: Cli) -> Outcome {
    let dir = ProjectDir::new(&cli.project);
    let verb = cli.command.verb();
    let actor = cli.actor.clone().unwrap_or_default();

    let result = (|| {
        if verb != "init" && !dir.exists() {
            return Err(Error::NotInitialized(cli.project.clone()));
        }
        let _lock = dir.lock()?;
        let result = run_locked(&cli, &dir);
        if dir.exists() {
            let outcome = match &result {
                Ok(_) => "ok",
                Err(e) => e.code(),
            };
            dir.append_event(&actor, verb, outcome)?;
        }
        result
    })();

    match result {
        Ok(reply) => Outcome {
            exit_code: 0,
            stdout: if cli.json {
                format!("{}\n", serde_json::to_string_pretty(&reply.json).unwrap_or_default())
            } else {
                reply.text
            },
            stderr: String::new(),
        },
        Err(e) => {
            let mut stderr = format!("error[{}]: {e}\n", e.code());
            if let Some(h) = e.hint() {
                let _ = writeln!(stderr, "hint: {h}");
            }
            let stdout = if cli.json {
                let v = json!({"error": {"code": e.code(), "message": e.to_string(), "hint": e.hint(), "exit_code": e.exit_code()}});
                format!("{}\n", serde_json::to_string_pretty(&v).unwrap_or_default())
            } else {
                String::new()
            };
            Outcome {
                exit_code: e.exit_code(),
                stdout,
                stderr,
            }
        }
    }
}

fn require_actor(cli: &Cli) -> Result<String> {
    cli.actor
        .clone()
        .filter(|a| !a.is_empty())
        .ok_or_else(|| Error::Usage("no actor given; pass --actor or set PBL_ACTOR".into()))
}

fn run_locked(cli: &Cli, dir: &ProjectDir) -> Result<Reply> {
    let actor = require_actor(cli)?;
    if let Command::Init {
        name,
        tas,
        groups,
        work_pattern,
        lint_policy,
    } = &cli.command
    {
        if dir.exists() {
            return Err(Error::AlreadyInitialized(dir.root().to_owned()));
        }
        let mut naming = NamingPolicy::default();
        if let Some(p) = work_pattern {
            naming.work_pattern = p.clone();
        }
        let lint = match lint_policy {
            Some(path) => {
                let bytes =
                    std::fs::read(path).map_err(|e| Error::Usage(format!("cannot read {}: {e}", path.display())))?;
                serde_json::from_slice::<LintPolicy>(&bytes)
                    .map_err(|e| Error::Usage(format!("bad lint policy in {}: {e}", path.display())))?
            }
            None => LintPolicy::default(),
        };
        let config = ProjectConfig {
            name: name.clone(),
            instructor: actor.clone(),
            tas: tas.clone(),
            groups: groups.iter().cloned().collect(),
            naming,
            lint,
        };
        if groups.len() != config.groups.len() {
            return Err(Error::Usage("a group id was given twice".into()));
        }
        let backend = cli.backend.unwrap_or(BackendKind::Memory);
        let file = match backend {
            BackendKind::Memory => {
                let p = Project::init(VcsModel::new(), config)?;
                StateFile {
                    schema_version: SCHEMA_VERSION,
                    backend,
                    state: p.state,
                    vcs: Some(p.vcs),
                }
            }
            BackendKind::Git => {
                let p = Project::init(GitBackend::init(dir.root())?, config)?;
                StateFile {
                    schema_version: SCHEMA_VERSION,
                    backend,
                    state: p.state,
                    vcs: None,
                }
            }
        };
        dir.save(&file)?;
        let s = &file.state;
        let text = format!(
            "Initialized project `{}` ({} backend): instructor {}, {} TA(s), {} group(s)\n",
            s.project_name,
            backend,
            s.instructor(),
            s.staff().len() - 1,
            s.groups.len()
        );
        return Ok(Reply::new(text, json!({"project": s.project_name, "backend": backend})));
    }

    let file = dir.load()?;
    if let Some(b) = cli.backend {
        if b != file.backend {
            return Err(Error::BackendMismatch {
                stored: file.backend.to_string(),
                requested: b.to_string(),
            });
        }
    }
    let role = file
        .state
        .member(&actor)
        .ok_or_else(|| Error::UnknownMember(actor.clone()))?
        .role;
    let verb = cli.command.verb();
    if !role_allows(role, verb) {
        return Err(Error::RoleViolation {
            actor,
            role,
            command: verb.to_owned(),
        });
    }

    let backend = file.backend;
    match backend {
        BackendKind::Memory => {
            let vcs = file.vcs.clone().unwrap_or_default();
            let mut p = Project::open(file.state, vcs)?;
            let reply = dispatch(&mut p, &actor, &cli.command)?;
            if cli.command.is_mutation() {
                dir.save(&StateFile {
                    schema_version: SCHEMA_VERSION,
                    backend,
                    state: p.state,
                    vcs: Some(p.vcs),
                })?;
            }
            Ok(reply)
        }
        BackendKind::Git => {
            let mut p = Project::open(file.state, GitBackend::open(dir.root())?)?;
            let reply = dispatch(&mut p, &actor, &cli.command)?;
            if cli.command.is_mutation() {
                dir.save(&StateFile {
                    schema_version: SCHEMA_VERSION,
                    backend,
                    state: p.state,
                    vcs: None,
                })?;
            }
            Ok(reply)
        }
    }
}

fn read_local(path: &Path) -> Result<Vec<String>> {
    let bytes = std::fs::read(path).map_err(|e| Error::Usage(format!("cannot read {}: {e}", path.display())))?;
    let text = String::from_utf8(bytes)
        .map_err(|_| Error::Validation(format!("{} is not UTF-8 text", path.display())))?;
    Ok(text_to_lines(&text))
}

fn parse_round(n: Option<u8>) -> Result<Option<Round>> {
    n.map(|n| Round::new(n).ok_or_else(|| Error::Usage(format!("round must be 1 or 2, got {n}"))))
        .transpose()
}

fn dispatch<B: VcsBackend>(p: &mut Project<B>, actor: &str, cmd: &Command) -> Result<Reply> {
    match cmd {
        Command::Init { .. } => unreachable!("handled before loading"),
        Command::AddArtifact { slug, kind, name, group } => {
            let name = name.clone().unwrap_or_else(|| slug.clone());
            let a = p.add_artifact(actor, slug, &name, *kind, group.as_deref())?;
            Ok(Reply::new(
                format!("Registered artifact {} `{}` ({}, group {})\n", a.id, a.slug, a.kind, a.group),
                serde_json::to_value(&a)?,
            ))
        }
        Command::BranchInspection { slug, round } => {
            let name = p.branch_inspection(actor, slug, parse_round(*round)?)?;
            Ok(Reply::new(format!("Created branch {name}\n"), json!({"branch": name})))
        }
        Command::BranchWork { slug, task, name } => {
            if task.is_none() && name.is_none() {
                return Err(Error::Usage("give a task name or --name".into()));
            }
            let branch = p.branch_work(actor, slug, task.as_deref().unwrap_or_default(), name.as_deref())?;
            Ok(Reply::new(format!("Created branch {branch}\n"), json!({"branch": branch})))
        }
        Command::Commit {
            branch,
            message,
            files,
            deletes,
        } => {
            let mut changes = Vec::new();
            for (repo, local) in files {
                changes.push(FileChange {
                    path: repo.clone(),
                    content: Some(read_local(local)?),
                });
            }
            changes.extend(deletes.iter().map(|d| FileChange {
                path: d.clone(),
                content: None,
            }));
            let id = p.commit(actor, branch, message, &changes)?;
            let counts = p.vcs.changed_line_counts(&id)?;
            Ok(Reply::new(
                format!(
                    "Committed {} on {branch} (+{} -{})\n",
                    id.short(),
                    counts.additions,
                    counts.deletions
                ),
                json!({"commit": id, "branch": branch, "additions": counts.additions, "deletions": counts.deletions}),
            ))
        }
        Command::PrOpen {
            work,
            into,
            title,
            body,
        } => {
            let title = title.clone().unwrap_or_else(|| format!("Merge {work}"));
            let id = p.open_group_review_pr(actor, work, into.as_deref(), &title, body)?;
            let pr = p.state.pr(id)?;
            Ok(Reply::new(
                format!("Opened pull request {id}: {} -> {}\n", pr.source, pr.target),
                json!({"pr": id, "source": pr.source, "target": pr.target}),
            ))
        }
        Command::Review { pr, verdict } => {
            let seq = p.review(actor, *pr, *verdict)?;
            let phase = p.state.artifact(&p.state.pr(*pr)?.artifact)?.phase;
            Ok(Reply::new(
                format!("Recorded review on {pr}; artifact phase {phase}\n"),
                json!({"pr": pr, "seq": seq, "phase": phase}),
            ))
        }
        Command::PrMerge { pr } => {
            let commit = p.merge_pull_request(actor, *pr)?;
            Ok(Reply::new(
                format!("Merged {pr} ({})\n", commit.short()),
                json!({"pr": pr, "commit": commit}),
            ))
        }
        Command::RequestInspection { slug } => {
            let id = p.request_inspection(actor, slug)?;
            let pr = p.state.pr(id)?;
            Ok(Reply::new(
                format!(
                    "Opened inspection pull request {id}: {} -> {}\nLabel: inspection\nNotified: {}\n",
                    pr.source,
                    pr.target,
                    pr.requested_reviewers.join(", ")
                ),
                json!({"pr": id, "source": pr.source, "target": pr.target, "reviewers": pr.requested_reviewers}),
            ))
        }
        Command::Comment {
            pr,
            path,
            line,
            side,
            body,
        } => {
            let t = p.comment(actor, *pr, path, *side, *line, body)?;
            Ok(Reply::new(
                format!("Opened thread #{t} on {path}:{line} ({side})\n"),
                json!({"pr": pr, "thread": t}),
            ))
        }
        Command::Reply {
            pr,
            thread,
            body,
            resolve,
        } => {
            p.reply(actor, *pr, *thread, body, *resolve)?;
            Ok(Reply::new(
                format!("Replied to thread #{thread} on {pr}\n"),
                json!({"pr": pr, "thread": thread, "resolved": resolve}),
            ))
        }
        Command::CompleteInspection { pr, verdict } => {
            let sent = p.complete_inspection(actor, *pr, *verdict)?;
            let phase = p.state.artifact(&p.state.pr(*pr)?.artifact)?.phase;
            let who: Vec<&str> = sent.iter().map(|n| n.recipient.as_str()).collect();
            Ok(Reply::new(
                format!("Inspection {pr} completed; phase {phase}\nNotified: {}\n", who.join(", ")),
                json!({"pr": pr, "phase": phase, "notifications": sent}),
            ))
        }
        Command::MergeMaster { slug } => {
            let commit = p.merge_master(actor, slug)?;
            Ok(Reply::new(
                format!("Merged {slug} into master ({})\n", commit.short()),
                json!({"artifact": slug, "commit": commit}),
            ))
        }
        Command::MilestoneCreate { title, due } => {
            p.milestone_create(title, *due)?;
            Ok(Reply::new(
                format!("Created milestone `{title}` due {due}\n"),
                json!({"milestone": title, "due": due}),
            ))
        }
        Command::MilestoneAttach { title, pr, issue } => {
            let item = match (pr, issue) {
                (Some(id), _) => MilestoneItem::PullRequest(*id),
                (None, Some(n)) => MilestoneItem::Issue(*n),
                (None, None) => return Err(Error::Usage("give --pr or --issue".into())),
            };
            p.milestone_attach(title, item)?;
            Ok(Reply::new(
                format!("Attached {item} to `{title}`\n"),
                json!({"milestone": title, "item": item}),
            ))
        }
        Command::MilestoneClose { title, issue } => {
            p.milestone_close(title, *issue)?;
            Ok(Reply::new(
                format!("Closed issue #{issue} in `{title}`\n"),
                json!({"milestone": title, "issue": issue}),
            ))
        }
        Command::Status => {
            let r = p.status();
            Ok(Reply::new(render_status(&r), serde_json::to_value(&r)?))
        }
        Command::ShowDiff { pr } => {
            let text = render_pr_diff(p, *pr)?;
            let (base, head, diffs) = p.pr_diff(*pr)?;
            let counts = line_counts(&diffs);
            let threads = &p.state.pr(*pr)?.comment_threads;
            Ok(Reply::new(
                text,
                json!({"pr": pr, "base": base, "head": head, "additions": counts.additions,
                       "deletions": counts.deletions, "diff": render_unified(&diffs), "threads": threads}),
            ))
        }
        Command::LintCommits { branch, strict } => {
            let reports = p.lint_commits(branch)?;
            let mut text = String::new();
            for r in &reports {
                if r.findings.is_empty() {
                    let _ = writeln!(text, "{} {}: ok", r.commit.short(), r.subject);
                }
                for f in &r.findings {
                    let _ = writeln!(text, "{} {}: {:?} ({})", r.commit.short(), r.subject, f.code, f.message);
                }
            }
            let flagged = reports.iter().filter(|r| !r.findings.is_empty()).count();
            if *strict && flagged > 0 {
                return Err(Error::Validation(format!("{flagged} commit(s) with lint findings")));
            }
            Ok(Reply::new(text, serde_json::to_value(&reports)?))
        }
        Command::Validate { path, kind, branch } => {
            let bytes = match branch {
                Some(b) => {
                    let head = p
                        .vcs
                        .resolve_branch(b)
                        .ok_or_else(|| crate::topology::TopologyError::BranchMissing(b.clone()))?;
                    let snap = p.vcs.snapshot(&head)?;
                    let lines = snap
                        .get(path)
                        .ok_or_else(|| Error::Usage(format!("`{path}` does not exist on {b}")))?;
                    crate::vcs::lines_to_text(lines).into_bytes()
                }
                None => std::fs::read(path).map_err(|e| Error::Usage(format!("cannot read {path}: {e}")))?,
            };
            validate_command(path, *kind, &bytes)
        }
        Command::Notifications { member } => {
            let who = member.as_deref().unwrap_or(actor);
            let list = p.notifications_for(who);
            let mut text = String::new();
            for n in &list {
                let _ = writeln!(text, "[{}] {} {} ({})", n.seq, n.event, n.subject_pr, n.recipient);
            }
            Ok(Reply::new(text, serde_json::to_value(&list)?))
        }
    }
}

fn validate_command(path: &str, kind: ArtifactKind, bytes: &[u8]) -> Result<Reply> {
    let report = validate_text_artifact(path, kind, bytes);
    let mut text = String::new();
    for v in &report.violations {
        let _ = writeln!(text, "{path}:{}: {} ({})", v.line, v.code.as_str(), v.message);
    }
    if !report.accepted() {
        return Err(Error::Validation(format!("{path} is not a valid {kind} artifact\n{}", text.trim_end())));
    }
    let mut out = json!({"report": report});
    if kind == ArtifactKind::ClassDiagram && report.format == ArtifactFormat::PlantUml {
        let parsed = parse_plantuml_class_diagram(&String::from_utf8_lossy(bytes))?;
        for w in &parsed.warnings {
            let _ = writeln!(text, "{path}:{}: warning: {}", w.line, w.message);
        }
        let _ = writeln!(
            text,
            "{} classes, {} relations",
            parsed.model.classes.len(),
            parsed.model.relations.len()
        );
        out["model"] = serde_json::to_value(&parsed.model)?;
        out["warnings"] = serde_json::to_value(&parsed.warnings)?;
        out["index"] = serde_json::to_value(element_line_index(&parsed.model))?;
    }
    let _ = writeln!(text, "{path}: ok ({kind})");
    Ok(Reply::new(text, out))
}
