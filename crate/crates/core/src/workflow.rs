//! Inspection lifecycle of a single artifact.
//!
//! Every artifact moves through a fixed set of phases, from drafting through
//! group review and at most two staff inspection rounds, until it is merged to
//! master. [`advance`] is the whole transition table: it is a pure function of
//! `(phase, rounds_used, event)` and owns no side effects. Branches, pull
//! requests and notifications are driven by the callers in
//! [`crate::project`].

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Maximum number of staff inspection rounds per artifact.
pub const MAX_ROUNDS: u8 = 2;

/// Inspection round number, always 1 or 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Round(u8);

impl Round {
    pub const FIRST: Round = Round(1);
    pub const SECOND: Round = Round(2);

    pub fn new(n: u8) -> Option<Round> {
        (1..=MAX_ROUNDS).contains(&n).then_some(Round(n))
    }

    pub fn get(self) -> u8 {
        self.0
    }
}

impl TryFrom<u8> for Round {
    type Error = String;

    fn try_from(n: u8) -> Result<Self, Self::Error> {
        Round::new(n).ok_or_else(|| format!("inspection round must be 1 or 2, got {n}"))
    }
}

impl From<Round> for u8 {
    fn from(r: Round) -> u8 {
        r.0
    }
}

impl fmt::Display for Round {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The artifacts a group produces over the course of a project.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArtifactKind {
    RequirementsSpec,
    UiDesign,
    ClassDiagram,
    DbDesign,
    SequenceDiagram,
    StateChart,
    SourceCode,
}

impl ArtifactKind {
    pub const ALL: [ArtifactKind; 7] = [
        ArtifactKind::RequirementsSpec,
        ArtifactKind::UiDesign,
        ArtifactKind::ClassDiagram,
        ArtifactKind::DbDesign,
        ArtifactKind::SequenceDiagram,
        ArtifactKind::StateChart,
        ArtifactKind::SourceCode,
    ];

    /// Documents are written in markdown, UML diagrams in PlantUML.
    pub fn expected_format(self) -> ArtifactFormat {
        match self {
            ArtifactKind::RequirementsSpec | ArtifactKind::UiDesign | ArtifactKind::DbDesign => {
                ArtifactFormat::Markdown
            }
            ArtifactKind::ClassDiagram | ArtifactKind::SequenceDiagram | ArtifactKind::StateChart => {
                ArtifactFormat::PlantUml
            }
            ArtifactKind::SourceCode => ArtifactFormat::PlainText,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ArtifactKind::RequirementsSpec => "requirements-spec",
            ArtifactKind::UiDesign => "ui-design",
            ArtifactKind::ClassDiagram => "class-diagram",
            ArtifactKind::DbDesign => "db-design",
            ArtifactKind::SequenceDiagram => "sequence-diagram",
            ArtifactKind::StateChart => "state-chart",
            ArtifactKind::SourceCode => "source-code",
        }
    }
}

impl std::str::FromStr for ArtifactKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ArtifactKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<_> = ArtifactKind::ALL.iter().map(|k| k.as_str()).collect();
                format!("unknown artifact kind `{s}` (expected one of {})", names.join(", "))
            })
    }
}

impl fmt::Display for ArtifactKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArtifactFormat {
    Markdown,
    PlantUml,
    PlainText,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "phase", content = "round")]
pub enum InspectionPhase {
    Drafting,
    GroupReview,
    InspectionRequested(Round),
    UnderInspection(Round),
    RevisionRequested(Round),
    Approved,
    MergedToMaster,
}

impl InspectionPhase {
    /// Every phase value, rounds expanded.
    pub const ALL: [InspectionPhase; 10] = [
        InspectionPhase::Drafting,
        InspectionPhase::GroupReview,
        InspectionPhase::InspectionRequested(Round::FIRST),
        InspectionPhase::InspectionRequested(Round::SECOND),
        InspectionPhase::UnderInspection(Round::FIRST),
        InspectionPhase::UnderInspection(Round::SECOND),
        InspectionPhase::RevisionRequested(Round::FIRST),
        InspectionPhase::RevisionRequested(Round::SECOND),
        InspectionPhase::Approved,
        InspectionPhase::MergedToMaster,
    ];

    pub fn round(self) -> Option<Round> {
        match self {
            InspectionPhase::InspectionRequested(r)
            | InspectionPhase::UnderInspection(r)
            | InspectionPhase::RevisionRequested(r) => Some(r),
            _ => None,
        }
    }

    /// Whether `rounds_used` is a count this phase can carry.
    pub fn admits_rounds(self, rounds_used: u8) -> bool {
        if rounds_used > MAX_ROUNDS {
            return false;
        }
        match self {
            InspectionPhase::Drafting => rounds_used == 0,
            InspectionPhase::GroupReview => rounds_used <= 1,
            InspectionPhase::InspectionRequested(r)
            | InspectionPhase::UnderInspection(r)
            | InspectionPhase::RevisionRequested(r) => rounds_used == r.get(),
            InspectionPhase::Approved | InspectionPhase::MergedToMaster => rounds_used >= 1,
        }
    }
}

impl fmt::Display for InspectionPhase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InspectionPhase::Drafting => f.write_str("Drafting"),
            InspectionPhase::GroupReview => f.write_str("GroupReview"),
            InspectionPhase::InspectionRequested(r) => write!(f, "InspectionRequested({r})"),
            InspectionPhase::UnderInspection(r) => write!(f, "UnderInspection({r})"),
            InspectionPhase::RevisionRequested(r) => write!(f, "RevisionRequested({r})"),
            InspectionPhase::Approved => f.write_str("Approved"),
            InspectionPhase::MergedToMaster => f.write_str("MergedToMaster"),
        }
    }
}

/// Outcome of a staff inspection, as consolidated by the instructor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InspectionVerdict {
    Approve,
    RequestChanges,
}

impl std::str::FromStr for InspectionVerdict {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "approve" => Ok(InspectionVerdict::Approve),
            "request-changes" => Ok(InspectionVerdict::RequestChanges),
            _ => Err(format!("unknown verdict `{s}` (expected approve or request-changes)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "event", content = "verdict", rename_all = "kebab-case")]
pub enum WorkflowEvent {
    OpenGroupReviewPr,
    GroupApproved,
    RequestInspection,
    StaffReviewSubmitted,
    InspectionCompleted(InspectionVerdict),
    RevisionSubmitted,
    MergeToMaster,
}

impl WorkflowEvent {
    pub const ALL: [WorkflowEvent; 8] = [
        WorkflowEvent::OpenGroupReviewPr,
        WorkflowEvent::GroupApproved,
        WorkflowEvent::RequestInspection,
        WorkflowEvent::StaffReviewSubmitted,
        WorkflowEvent::InspectionCompleted(InspectionVerdict::Approve),
        WorkflowEvent::InspectionCompleted(InspectionVerdict::RequestChanges),
        WorkflowEvent::RevisionSubmitted,
        WorkflowEvent::MergeToMaster,
    ];
}

impl fmt::Display for WorkflowEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WorkflowEvent::OpenGroupReviewPr => f.write_str("OpenGroupReviewPr"),
            WorkflowEvent::GroupApproved => f.write_str("GroupApproved"),
            WorkflowEvent::RequestInspection => f.write_str("RequestInspection"),
            WorkflowEvent::StaffReviewSubmitted => f.write_str("StaffReviewSubmitted"),
            WorkflowEvent::InspectionCompleted(InspectionVerdict::Approve) => {
                f.write_str("InspectionCompleted(approve)")
            }
            WorkflowEvent::InspectionCompleted(InspectionVerdict::RequestChanges) => {
                f.write_str("InspectionCompleted(request-changes)")
            }
            WorkflowEvent::RevisionSubmitted => f.write_str("RevisionSubmitted"),
            WorkflowEvent::MergeToMaster => f.write_str("MergeToMaster"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WorkflowError {
    #[error("event {event} is not valid in phase {phase}")]
    IllegalTransition {
        phase: InspectionPhase,
        event: WorkflowEvent,
    },
    #[error("inspection can be requested at most {MAX_ROUNDS} times")]
    RoundsExhausted,
    #[error("phase {phase} cannot carry {rounds_used} used rounds")]
    InvalidState {
        phase: InspectionPhase,
        rounds_used: u8,
    },
}

impl WorkflowError {
    pub fn code(&self) -> &'static str {
        match self {
            WorkflowError::IllegalTransition { .. } => "illegal-transition",
            WorkflowError::RoundsExhausted => "rounds-exhausted",
            WorkflowError::InvalidState { .. } => "invalid-state",
        }
    }
}

/// Computes the successor of `(phase, rounds_used)` under `event`.
///
/// | phase                  | event                                  | successor              |
/// |------------------------|----------------------------------------|------------------------|
/// | Drafting               | OpenGroupReviewPr                      | GroupReview            |
/// | GroupReview            | OpenGroupReviewPr, GroupApproved       | GroupReview            |
/// | GroupReview            | RequestInspection                      | InspectionRequested(n+1) |
/// | InspectionRequested(r) | StaffReviewSubmitted                   | UnderInspection(r)     |
/// | UnderInspection(r)     | StaffReviewSubmitted                   | UnderInspection(r)     |
/// | UnderInspection(r)     | InspectionCompleted(approve)           | Approved               |
/// | UnderInspection(r)     | InspectionCompleted(request-changes)   | RevisionRequested(r)   |
/// | RevisionRequested(r)   | RevisionSubmitted                      | RevisionRequested(r)   |
/// | RevisionRequested(r)   | InspectionCompleted(approve)           | Approved               |
/// | RevisionRequested(1)   | OpenGroupReviewPr                      | GroupReview            |
/// | RevisionRequested(1)   | RequestInspection                      | InspectionRequested(2) |
/// | Approved               | RevisionSubmitted                      | Approved               |
/// | Approved               | MergeToMaster                          | MergedToMaster         |
///
/// `RequestInspection` with both rounds used is `RoundsExhausted`; every
/// other pair is `IllegalTransition`. `MergedToMaster` has no successors.
pub fn advance(
    phase: InspectionPhase,
    rounds_used: u8,
    event: WorkflowEvent,
) -> Result<(InspectionPhase, u8), WorkflowError> {
    use InspectionPhase::*;
    use WorkflowEvent::*;

    if !phase.admits_rounds(rounds_used) {
        return Err(WorkflowError::InvalidState { phase, rounds_used });
    }
    let illegal = Err(WorkflowError::IllegalTransition { phase, event });

    match (phase, event) {
        (MergedToMaster, _) => illegal,

        (Drafting | GroupReview, OpenGroupReviewPr) => Ok((GroupReview, rounds_used)),
        (RevisionRequested(Round::FIRST), OpenGroupReviewPr) => Ok((GroupReview, rounds_used)),
        (GroupReview, GroupApproved) => Ok((GroupReview, rounds_used)),

        (GroupReview | RevisionRequested(_), RequestInspection) => {
            if rounds_used >= MAX_ROUNDS {
                return Err(WorkflowError::RoundsExhausted);
            }
            let next = rounds_used + 1;
            Ok((InspectionRequested(Round(next)), next))
        }

        (InspectionRequested(r) | UnderInspection(r), StaffReviewSubmitted) => {
            Ok((UnderInspection(r), rounds_used))
        }
        (UnderInspection(_) | RevisionRequested(_), InspectionCompleted(InspectionVerdict::Approve)) => {
            Ok((Approved, rounds_used))
        }
        (UnderInspection(r), InspectionCompleted(InspectionVerdict::RequestChanges)) => {
            Ok((RevisionRequested(r), rounds_used))
        }

        (RevisionRequested(_) | Approved, RevisionSubmitted) => Ok((phase, rounds_used)),
        (Approved, MergeToMaster) => Ok((MergedToMaster, rounds_used)),

        _ => illegal,
    }
}

/// One registered artifact and where it stands in the inspection lifecycle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactRecord {
    pub id: String,
    pub name: String,
    pub slug: String,
    pub kind: ArtifactKind,
    pub format: ArtifactFormat,
    /// Group that owns the artifact and receives inspection results.
    pub group: String,
    pub phase: InspectionPhase,
    pub rounds_used: u8,
}

impl ArtifactRecord {
    pub fn new(id: impl Into<String>, name: impl Into<String>, slug: impl Into<String>, kind: ArtifactKind, group: impl Into<String>) -> Self {
        ArtifactRecord {
            id: id.into(),
            name: name.into(),
            slug: slug.into(),
            kind,
            format: kind.expected_format(),
            group: group.into(),
            phase: InspectionPhase::Drafting,
            rounds_used: 0,
        }
    }

    pub fn is_consistent(&self) -> bool {
        self.phase.admits_rounds(self.rounds_used)
    }

    /// Applies `event` in place; on rejection the record is left untouched.
    pub fn apply(&mut self, event: WorkflowEvent) -> Result<(), WorkflowError> {
        let (phase, rounds_used) = advance(self.phase, self.rounds_used, event)?;
        self.phase = phase;
        self.rounds_used = rounds_used;
        Ok(())
    }
}

/// The round the next inspection request for `record` would open.
pub fn request_round(record: &ArtifactRecord) -> Result<Round, WorkflowError> {
    match record.rounds_used {
        0 => Ok(Round::FIRST),
        1 => Ok(Round::SECOND),
        _ => Err(WorkflowError::RoundsExhausted),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MergeDenial {
    NoCompletedInspection,
    InspectionOpen,
    RevisionRequested,
    AlreadyMerged,
}

impl MergeDenial {
    pub fn code(self) -> &'static str {
        match self {
            MergeDenial::NoCompletedInspection => "no-completed-inspection",
            MergeDenial::InspectionOpen => "inspection-open",
            MergeDenial::RevisionRequested => "revision-requested",
            MergeDenial::AlreadyMerged => "already-merged",
        }
    }
}

impl fmt::Display for MergeDenial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MergeDecision {
    Allow,
    Deny(MergeDenial),
}

impl MergeDecision {
    pub fn is_allowed(self) -> bool {
        matches!(self, MergeDecision::Allow)
    }
}

/// Master only accepts artifacts whose inspection has been completed with
/// approval.
pub fn can_merge_to_master(record: &ArtifactRecord) -> MergeDecision {
    phase_merge_decision(record.phase)
}

pub fn phase_merge_decision(phase: InspectionPhase) -> MergeDecision {
    match phase {
        InspectionPhase::Approved => MergeDecision::Allow,
        InspectionPhase::Drafting | InspectionPhase::GroupReview => {
            MergeDecision::Deny(MergeDenial::NoCompletedInspection)
        }
        InspectionPhase::InspectionRequested(_) | InspectionPhase::UnderInspection(_) => {
            MergeDecision::Deny(MergeDenial::InspectionOpen)
        }
        InspectionPhase::RevisionRequested(_) => MergeDecision::Deny(MergeDenial::RevisionRequested),
        InspectionPhase::MergedToMaster => MergeDecision::Deny(MergeDenial::AlreadyMerged),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    use InspectionPhase::*;
    use WorkflowEvent::*;

    const R1: Round = Round::FIRST;
    const R2: Round = Round::SECOND;

    fn record(phase: InspectionPhase, rounds_used: u8) -> ArtifactRecord {
        let mut r = ArtifactRecord::new("a1", "DB design", "db-design", ArtifactKind::DbDesign, "g1");
        r.phase = phase;
        r.rounds_used = rounds_used;
        r
    }

    #[test]
    fn opening_group_review_leaves_drafting() {
        assert_eq!(advance(Drafting, 0, OpenGroupReviewPr), Ok((GroupReview, 0)));
    }

    #[test]
    fn third_request_is_rejected() {
        assert_eq!(
            advance(RevisionRequested(R2), 2, RequestInspection),
            Err(WorkflowError::RoundsExhausted)
        );
    }

    #[test]
    fn approved_merges_to_master() {
        assert_eq!(advance(Approved, 1, MergeToMaster), Ok((MergedToMaster, 1)));
    }

    #[test]
    fn full_two_round_path() {
        let steps = [
            (OpenGroupReviewPr, GroupReview, 0),
            (GroupApproved, GroupReview, 0),
            (RequestInspection, InspectionRequested(R1), 1),
            (StaffReviewSubmitted, UnderInspection(R1), 1),
            (StaffReviewSubmitted, UnderInspection(R1), 1),
            (InspectionCompleted(InspectionVerdict::RequestChanges), RevisionRequested(R1), 1),
            (RevisionSubmitted, RevisionRequested(R1), 1),
            (OpenGroupReviewPr, GroupReview, 1),
            (RequestInspection, InspectionRequested(R2), 2),
            (StaffReviewSubmitted, UnderInspection(R2), 2),
            (InspectionCompleted(InspectionVerdict::Approve), Approved, 2),
            (RevisionSubmitted, Approved, 2),
            (MergeToMaster, MergedToMaster, 2),
        ];
        let (mut phase, mut rounds) = (Drafting, 0);
        for (event, want_phase, want_rounds) in steps {
            (phase, rounds) = advance(phase, rounds, event).unwrap();
            assert_eq!((phase, rounds), (want_phase, want_rounds), "after {event}");
        }
    }

    #[test]
    fn exhausted_second_round_only_resolves_by_approval() {
        let phase = RevisionRequested(R2);
        assert_eq!(
            advance(phase, 2, InspectionCompleted(InspectionVerdict::Approve)),
            Ok((Approved, 2))
        );
        assert!(matches!(
            advance(phase, 2, OpenGroupReviewPr),
            Err(WorkflowError::IllegalTransition { .. })
        ));
        assert!(matches!(
            advance(phase, 2, MergeToMaster),
            Err(WorkflowError::IllegalTransition { .. })
        ));
    }

    #[test]
    fn inconsistent_inputs_are_rejected() {
        assert!(matches!(
            advance(Drafting, 1, OpenGroupReviewPr),
            Err(WorkflowError::InvalidState { .. })
        ));
        assert!(matches!(
            advance(InspectionRequested(R2), 1, StaffReviewSubmitted),
            Err(WorkflowError::InvalidState { .. })
        ));
        assert!(matches!(advance(Approved, 0, MergeToMaster), Err(WorkflowError::InvalidState { .. })));
    }

    #[test]
    fn request_round_counts_up_to_two() {
        assert_eq!(request_round(&record(Drafting, 0)), Ok(R1));
        assert_eq!(request_round(&record(RevisionRequested(R1), 1)), Ok(R2));
        assert_eq!(
            request_round(&record(RevisionRequested(R2), 2)),
            Err(WorkflowError::RoundsExhausted)
        );
    }

    #[test]
    fn merge_gate_examples() {
        assert_eq!(can_merge_to_master(&record(Approved, 1)), MergeDecision::Allow);
        assert_eq!(
            can_merge_to_master(&record(UnderInspection(R1), 1)),
            MergeDecision::Deny(MergeDenial::InspectionOpen)
        );
        assert_eq!(
            can_merge_to_master(&record(Drafting, 0)),
            MergeDecision::Deny(MergeDenial::NoCompletedInspection)
        );
    }

    #[test]
    fn merge_gate_allows_only_approved() {
        for phase in InspectionPhase::ALL {
            let allowed = phase_merge_decision(phase).is_allowed();
            assert_eq!(allowed, phase == Approved, "{phase}");
        }
    }

    #[test]
    fn merged_is_absorbing() {
        for rounds in 1..=2 {
            for event in WorkflowEvent::ALL {
                assert!(advance(MergedToMaster, rounds, event).is_err());
            }
        }
    }

    #[test]
    fn round_rejects_out_of_range() {
        assert!(Round::new(0).is_none());
        assert!(Round::new(3).is_none());
        assert!(serde_json::from_str::<Round>("3").is_err());
        assert_eq!(serde_json::from_str::<Round>("2").unwrap(), R2);
    }

    fn event_strategy() -> impl Strategy<Value = WorkflowEvent> {
        prop::sample::select(WorkflowEvent::ALL.to_vec())
    }

    proptest! {
        #[test]
        fn reachable_states_respect_round_cap(events in prop::collection::vec(event_strategy(), 0..40)) {
            let (mut phase, mut rounds) = (Drafting, 0u8);
            for event in events {
                let before = rounds;
                match advance(phase, rounds, event) {
                    Ok((p, r)) => {
                        if event == RequestInspection {
                            prop_assert_eq!(r, before + 1);
                        } else {
                            prop_assert_eq!(r, before);
                        }
                        phase = p;
                        rounds = r;
                    }
                    Err(_) => {}
                }
                prop_assert!(rounds <= MAX_ROUNDS);
                prop_assert!(rounds >= before);
                prop_assert!(phase.admits_rounds(rounds));
            }
        }

        #[test]
        fn advance_is_deterministic(events in prop::collection::vec(event_strategy(), 0..30)) {
            let run = || {
                let mut state = (Drafting, 0u8);
                let mut trace = Vec::new();
                for &event in &events {
                    let out = advance(state.0, state.1, event);
                    if let Ok(next) = &out {
                        state = *next;
                    }
                    trace.push(out);
                }
                trace
            };
            prop_assert_eq!(run(), run());
        }
    }
}
