//! Checks on the text artifacts groups submit for inspection.

pub mod lint;
pub mod plantuml;
pub mod validate;

pub use lint::{lint_commit, lint_message, CommitLintReport, LintCode, LintFinding, LintPolicy};
pub use plantuml::{
    element_line_index, parse_plantuml_class_diagram, render_class_diagram, ClassDecl, ParseError, ParseOutput,
    ParseWarning, PlantUmlClassModel, Relation, RelationKind,
};
pub use validate::{validate_text_artifact, ValidationReport, Violation, ViolationCode};
