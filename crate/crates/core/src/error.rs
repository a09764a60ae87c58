use std::path::PathBuf;

use thiserror::Error;

use crate::anchor::AnchorError;
use crate::artifact::ParseError;
use crate::forge::{ForgeError, PrId};
use crate::project::Role;
use crate::topology::TopologyError;
use crate::vcs::VcsError;
use crate::workflow::{MergeDenial, Round, WorkflowError};

/// Coarse error families; each maps to one process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorFamily {
    Usage,
    Role,
    Workflow,
    Gate,
    NotFound,
    Conflict,
    Anchor,
    Validation,
    Persistence,
}

impl ErrorFamily {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorFamily::Usage => 2,
            ErrorFamily::Role => 3,
            ErrorFamily::Workflow => 4,
            ErrorFamily::Gate => 5,
            ErrorFamily::NotFound => 6,
            ErrorFamily::Conflict => 7,
            ErrorFamily::Anchor => 8,
            ErrorFamily::Validation => 9,
            ErrorFamily::Persistence => 10,
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Workflow(#[from] WorkflowError),
    #[error(transparent)]
    Topology(TopologyError),
    #[error(transparent)]
    Vcs(#[from] VcsError),
    #[error(transparent)]
    Forge(ForgeError),
    #[error(transparent)]
    Anchor(#[from] AnchorError),
    #[error("PlantUML {0}")]
    Parse(#[from] ParseError),
    #[error("merging into master is embargoed ({0})")]
    MergeEmbargo(MergeDenial),
    #[error("`{actor}` ({role}) may not run `{command}`")]
    RoleViolation { actor: String, role: Role, command: String },
    #[error("`{0}` is not a registered member")]
    UnknownMember(String),
    #[error("`{0}` is not the instructor")]
    NotInstructor(String),
    #[error("`{actor}` is not a member of group `{group}`")]
    NotGroupMember { actor: String, group: String },
    #[error("`{actor}` is not a requested reviewer of {pr}")]
    NotRequestedReviewer { actor: String, pr: PrId },
    #[error("artifact `{0}` does not exist")]
    UnknownArtifact(String),
    #[error("artifact `{0}` already exists")]
    DuplicateArtifact(String),
    #[error("group `{0}` does not exist")]
    UnknownGroup(String),
    #[error("group review is incomplete: {}", list(.0))]
    GroupReviewIncomplete(Vec<PrId>),
    #[error("round-1 threads without a group reply: {}", list(.0))]
    UnansweredComments(Vec<u64>),
    #[error("reviews pending from: {}", .0.join(", "))]
    StaffReviewsPending(Vec<String>),
    #[error("`{work}` has no changes relative to `{target}`")]
    NothingToReview { work: String, target: String },
    #[error("`{0}` is not an inspection branch")]
    NotInspectionBranch(String),
    #[error("an open pull request already exists for this branch pair ({0})")]
    DuplicatePr(PrId),
    #[error("`{0}` only changes through pull requests")]
    ProtectedBranch(String),
    #[error("round {round} of `{slug}` is not open yet")]
    RoundNotOpen { slug: String, round: Round },
    #[error("milestone `{0}` does not exist")]
    UnknownMilestone(String),
    #[error("milestone `{0}` already exists")]
    DuplicateMilestone(String),
    #[error("invalid project: {0}")]
    InvalidProject(String),
    #[error("{0}")]
    Validation(String),
    #[error("unknown command `{0}`")]
    UnknownCommand(String),
    #[error("{0}")]
    Usage(String),
    #[error("project is locked by another process ({})", .0.display())]
    LockHeld(PathBuf),
    #[error("no project found in {}", .0.display())]
    NotInitialized(PathBuf),
    #[error("a project already exists in {}", .0.display())]
    AlreadyInitialized(PathBuf),
    #[error("unsupported schema version {found} (expected {expected})")]
    SchemaVersion { found: u32, expected: u32 },
    #[error("project uses the {stored} backend, not {requested}")]
    BackendMismatch { stored: String, requested: String },
    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed state file: {0}")]
    Json(#[from] serde_json::Error),
}

fn list<T: std::fmt::Display>(items: &[T]) -> String {
    items.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(", ")
}

impl From<TopologyError> for Error {
    fn from(e: TopologyError) -> Self {
        match e {
            TopologyError::MergeEmbargo(d) => Error::MergeEmbargo(d),
            TopologyError::Vcs(v) => Error::Vcs(v),
            other => Error::Topology(other),
        }
    }
}

impl From<ForgeError> for Error {
    fn from(e: ForgeError) -> Self {
        match e {
            ForgeError::Anchor(a) => Error::Anchor(a),
            other => Error::Forge(other),
        }
    }
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            Error::Workflow(e) => e.code(),
            Error::Topology(e) => e.code(),
            Error::Vcs(e) => e.code(),
            Error::Forge(e) => e.code(),
            Error::Anchor(e) => e.code(),
            Error::Parse(_) => "parse-error",
            Error::MergeEmbargo(_) => "merge-embargo",
            Error::RoleViolation { .. } => "role-violation",
            Error::UnknownMember(_) => "unknown-member",
            Error::NotInstructor(_) => "not-instructor",
            Error::NotGroupMember { .. } => "not-group-member",
            Error::NotRequestedReviewer { .. } => "not-requested-reviewer",
            Error::UnknownArtifact(_) => "unknown-artifact",
            Error::DuplicateArtifact(_) => "duplicate-artifact",
            Error::UnknownGroup(_) => "unknown-group",
            Error::GroupReviewIncomplete(_) => "group-review-incomplete",
            Error::UnansweredComments(_) => "unanswered-comments",
            Error::StaffReviewsPending(_) => "staff-reviews-pending",
            Error::NothingToReview { .. } => "nothing-to-review",
            Error::NotInspectionBranch(_) => "not-inspection-branch",
            Error::DuplicatePr(_) => "duplicate-pr",
            Error::ProtectedBranch(_) => "protected-branch",
            Error::RoundNotOpen { .. } => "round-not-open",
            Error::UnknownMilestone(_) => "unknown-milestone",
            Error::DuplicateMilestone(_) => "duplicate-milestone",
            Error::InvalidProject(_) => "invalid-project",
            Error::Validation(_) => "validation-failed",
            Error::UnknownCommand(_) => "unknown-command",
            Error::Usage(_) => "usage",
            Error::LockHeld(_) => "lock-held",
            Error::NotInitialized(_) => "not-initialized",
            Error::AlreadyInitialized(_) => "already-initialized",
            Error::SchemaVersion { .. } => "schema-version",
            Error::BackendMismatch { .. } => "backend-mismatch",
            Error::Io { .. } => "io",
            Error::Json(_) => "malformed-state",
        }
    }

    pub fn family(&self) -> ErrorFamily {
        use ErrorFamily::*;
        match self {
            Error::Workflow(_)
            | Error::GroupReviewIncomplete(_)
            | Error::UnansweredComments(_)
            | Error::StaffReviewsPending(_)
            | Error::RoundNotOpen { .. } => Workflow,
            Error::Forge(ForgeError::WrongPurpose { .. }) => Workflow,
            Error::MergeEmbargo(_) => Gate,
            Error::RoleViolation { .. }
            | Error::UnknownMember(_)
            | Error::NotInstructor(_)
            | Error::NotGroupMember { .. }
            | Error::NotRequestedReviewer { .. } => Role,
            Error::UnknownArtifact(_)
            | Error::UnknownGroup(_)
            | Error::UnknownMilestone(_)
            | Error::Forge(ForgeError::UnknownPr(_) | ForgeError::UnknownThread { .. })
            | Error::Topology(TopologyError::BranchMissing(_) | TopologyError::MissingBaseBranch(_))
            | Error::Vcs(VcsError::UnknownCommit(_) | VcsError::UnknownBranch(_)) => NotFound,
            Error::Forge(_)
            | Error::Topology(TopologyError::BranchExists(_) | TopologyError::Conflict(_))
            | Error::Topology(TopologyError::NothingToMerge { .. })
            | Error::Vcs(VcsError::BranchExists(_))
            | Error::DuplicateArtifact(_)
            | Error::DuplicateMilestone(_)
            | Error::NothingToReview { .. }
            | Error::DuplicatePr(_)
            | Error::ProtectedBranch(_) => Conflict,
            Error::Anchor(_) => Anchor,
            Error::Parse(_)
            | Error::Topology(_)
            | Error::Vcs(VcsError::InvalidBranchName(_))
            | Error::NotInspectionBranch(_)
            | Error::InvalidProject(_)
            | Error::Validation(_) => Validation,
            Error::UnknownCommand(_) | Error::Usage(_) => Usage,
            Error::Vcs(_)
            | Error::LockHeld(_)
            | Error::NotInitialized(_)
            | Error::AlreadyInitialized(_)
            | Error::SchemaVersion { .. }
            | Error::BackendMismatch { .. }
            | Error::Io { .. }
            | Error::Json(_) => Persistence,
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.family().exit_code()
    }

    /// What the user can do about it.
    pub fn hint(&self) -> Option<&'static str> {
        Some(match self.code() {
            "illegal-transition" => "run `status` to see which step the artifact is at",
            "rounds-exhausted" => "both inspection rounds are used; the instructor must approve in the current round",
            "merge-embargo" => "master only accepts artifacts whose inspection was completed with approval",
            "role-violation" => "ask a member with the required role to run this command",
            "unknown-member" => "pass a registered member id with --actor or PBL_ACTOR",
            "not-instructor" => "only the instructor consolidates inspection results",
            "not-group-member" => "only members of the owning group can do this",
            "not-requested-reviewer" => "inspection reviews come from the requested staff reviewers",
            "group-review-incomplete" => "get a non-author approval on each open work pull request and merge it",
            "unanswered-comments" => "reply to every round-1 thread before requesting round 2",
            "staff-reviews-pending" => "wait until every requested reviewer has submitted a review",
            "nothing-to-review" => "commit changes to the work branch first",
            "nothing-to-merge" => "the source has no commits the target lacks",
            "branch-missing" | "missing-base-branch" => "create the branch with `branch-inspection` or `branch-work`",
            "branch-exists" => "choose another name or reuse the existing branch",
            "conflict" => "resolve the conflicting files on the source branch and retry",
            "anchor-outside-diff" => "comment on a changed line or its surrounding context in `show-diff`",
            "round-not-open" => "round 2 opens after round 1 has been requested",
            "protected-branch" => "commit to a work or inspection branch and open a pull request",
            "lock-held" => "another command is running on this project; retry when it finishes",
            "not-initialized" => "run `init` first or point --project at the project directory",
            "backend-mismatch" => "use the backend the project was created with",
            "pr-not-open" => "the pull request has already been merged or closed",
            "unknown-command" => "run with --help to list commands",
            _ => return None,
        })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
