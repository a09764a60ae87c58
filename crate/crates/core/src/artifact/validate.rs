use serde::{Deserialize, Serialize};

use crate::workflow::{ArtifactFormat, ArtifactKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ViolationCode {
    NotText,
    MissingHeading,
    MissingStartUml,
    MissingEndUml,
    ContentOutsideBlock,
}

impl ViolationCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ViolationCode::NotText => "NotText",
            ViolationCode::MissingHeading => "MissingHeading",
            ViolationCode::MissingStartUml => "MissingStartUml",
            ViolationCode::MissingEndUml => "MissingEndUml",
            ViolationCode::ContentOutsideBlock => "ContentOutsideBlock",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub line: usize,
    pub code: ViolationCode,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub path: String,
    pub kind: ArtifactKind,
    pub format: ArtifactFormat,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn accepted(&self) -> bool {
        self.violations.is_empty()
    }
}

fn line_of(bytes: &[u8], offset: usize) -> usize {
    bytes[..offset].iter().filter(|b| **b == b'\n').count() + 1
}

/// Checks that `content` is UTF-8 text in the format `kind` calls for:
/// markdown with at least one heading, or a single `@startuml`/`@enduml`
/// block. Violations are returned as data; nothing here fails.
pub fn validate_text_artifact(path: &str, kind: ArtifactKind, content: &[u8]) -> ValidationReport {
    let format = kind.expected_format();
    let mut report = ValidationReport {
        path: path.to_owned(),
        kind,
        format,
        violations: Vec::new(),
    };
    let text = match std::str::from_utf8(content) {
        Ok(t) => t,
        Err(e) => {
            report.violations.push(Violation {
                line: line_of(content, e.valid_up_to()),
                code: ViolationCode::NotText,
                message: "content is not valid UTF-8; export the document as text".into(),
            });
            return report;
        }
    };
    if let Some(nul) = content.iter().position(|b| *b == 0) {
        report.violations.push(Violation {
            line: line_of(content, nul),
            code: ViolationCode::NotText,
            message: "content contains NUL bytes; binary files cannot be inspected line by line".into(),
        });
        return report;
    }

    let lines: Vec<&str> = text.lines().collect();
    match format {
        ArtifactFormat::Markdown => check_markdown(&lines, &mut report.violations),
        ArtifactFormat::PlantUml => check_plantuml(&lines, &mut report.violations),
        ArtifactFormat::PlainText => {}
    }
    report
}

fn is_atx_heading(line: &str) -> bool {
    let t = line.trim_start_matches(' ');
    if line.len() - t.len() > 3 {
        return false;
    }
    let hashes = t.chars().take_while(|c| *c == '#').count();
    (1..=6).contains(&hashes) && t[hashes..].chars().next().is_none_or(|c| c == ' ' || c == '\t')
}

fn is_setext_underline(line: &str) -> bool {
    let t = line.trim();
    !t.is_empty() && (t.chars().all(|c| c == '=') || t.chars().all(|c| c == '-'))
}

fn check_markdown(lines: &[&str], out: &mut Vec<Violation>) {
    let heading = lines.iter().enumerate().any(|(i, l)| {
        is_atx_heading(l) || (i > 0 && !lines[i - 1].trim().is_empty() && is_setext_underline(l))
    });
    if !heading {
        out.push(Violation {
            line: 1,
            code: ViolationCode::MissingHeading,
            message: "markdown document has no heading".into(),
        });
    }
}

fn check_plantuml(lines: &[&str], out: &mut Vec<Violation>) {
    let eof = lines.len().max(1);
    let nonblank: Vec<(usize, &str)> = lines
        .iter()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
        .collect();
    match nonblank.first() {
        Some((_, l)) if l.starts_with("@startuml") => {}
        first => out.push(Violation {
            line: first.map_or(1, |(n, _)| *n),
            code: ViolationCode::MissingStartUml,
            message: "diagram must begin with @startuml".into(),
        }),
    }
    match nonblank.iter().position(|(_, l)| l.starts_with("@enduml")) {
        None => out.push(Violation {
            line: eof,
            code: ViolationCode::MissingEndUml,
            message: "diagram is not closed with @enduml".into(),
        }),
        Some(i) => {
            if let Some((n, _)) = nonblank.get(i + 1) {
                out.push(Violation {
                    line: *n,
                    code: ViolationCode::ContentOutsideBlock,
                    message: "content after @enduml".into(),
                });
            }
        }
    }
}
