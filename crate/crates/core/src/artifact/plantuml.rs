//! Parser for the PlantUML class-diagram subset used in inspections.
//!
//! ```text
//! diagram  = [ "@startuml" ] { line } [ "@enduml" ]
//! line     = class | relation | comment | directive | blank
//! class    = "class" NAME [ "{" members "}" | "{}" ]
//! members  = { MEMBER }             (* one per line; contains "(" => method *)
//! relation = NAME ARROW NAME [ ":" LABEL ]
//! ARROW    = "<|--" | "--" | "o--" | "*--" | "..>"
//! comment  = "'" { any }
//! NAME     = letter_or_underscore { letter | digit | "_" }
//! ```
//!
//! Anything else that starts with a known keyword (`skinparam`, `note`,
//! `package`, ...) or a non-name character is skipped with a warning;
//! braced blocks and `note`/`legend` blocks are skipped whole.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RelationKind {
    Inheritance,
    Association,
    Aggregation,
    Composition,
    Dependency,
}

impl RelationKind {
    pub const ALL: [RelationKind; 5] = [
        RelationKind::Inheritance,
        RelationKind::Association,
        RelationKind::Aggregation,
        RelationKind::Composition,
        RelationKind::Dependency,
    ];

    pub fn arrow(self) -> &'static str {
        match self {
            RelationKind::Inheritance => "<|--",
            RelationKind::Association => "--",
            RelationKind::Aggregation => "o--",
            RelationKind::Composition => "*--",
            RelationKind::Dependency => "..>",
        }
    }
}

// Longest first so `<|--` is not read as something shorter.
const ARROWS: [RelationKind; 5] = [
    RelationKind::Inheritance,
    RelationKind::Aggregation,
    RelationKind::Composition,
    RelationKind::Dependency,
    RelationKind::Association,
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassDecl {
    pub name: String,
    pub attributes: Vec<String>,
    pub methods: Vec<String>,
    pub decl_line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Relation {
    pub kind: RelationKind,
    pub left: String,
    pub right: String,
    pub label: Option<String>,
    pub decl_line: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlantUmlClassModel {
    pub classes: Vec<ClassDecl>,
    pub relations: Vec<Relation>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseWarning {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseOutput {
    pub model: PlantUmlClassModel,
    pub warnings: Vec<ParseWarning>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[error("line {line}: expected {expected}")]
pub struct ParseError {
    pub line: usize,
    pub expected: String,
}

fn err<T>(line: usize, expected: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError {
        line,
        expected: expected.into(),
    })
}

const DIRECTIVES: &[&str] = &[
    "skinparam", "hide", "show", "title", "note", "package", "namespace", "abstract", "interface", "enum",
    "annotation", "entity", "object", "left", "top", "set", "legend", "header", "footer", "caption",
    "together", "scale", "allowmixing", "remove", "newpage", "center", "right",
];

/// Splits a leading NAME off `s`.
fn take_name(s: &str) -> Option<(&str, &str)> {
    let mut chars = s.char_indices();
    match chars.next() {
        Some((_, c)) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return None,
    }
    let end = chars
        .find(|(_, c)| !(c.is_ascii_alphanumeric() || *c == '_'))
        .map_or(s.len(), |(i, _)| i);
    Some((&s[..end], &s[end..]))
}

enum Skip {
    None,
    Braces(usize),
    Until(&'static str),
}

fn brace_delta(line: &str) -> isize {
    line.chars().fold(0, |d, c| match c {
        '{' => d + 1,
        '}' => d - 1,
        _ => d,
    })
}

pub fn parse_plantuml_class_diagram(content: &str) -> Result<ParseOutput, ParseError> {
    let mut model = PlantUmlClassModel::default();
    let mut warnings = Vec::new();
    let mut body: Option<usize> = None;
    let mut skip = Skip::None;
    let mut last_line = 0;

    for (i, raw) in content.lines().enumerate() {
        let n = i + 1;
        last_line = n;
        let line = raw.trim();

        if let Some(ci) = body {
            if line == "}" {
                body = None;
            } else if line.starts_with("@enduml") {
                return err(n, format!("`}}` closing class {}", model.classes[ci].name));
            } else if line.contains('{') || line.contains('}') {
                return err(n, "class member or `}`");
            } else if !line.is_empty() && !line.starts_with('\'') {
                let class = &mut model.classes[ci];
                if line.contains('(') {
                    class.methods.push(line.to_owned());
                } else {
                    class.attributes.push(line.to_owned());
                }
            }
            continue;
        }
        match skip {
            Skip::Braces(depth) => {
                let d = depth as isize + brace_delta(line);
                skip = if d <= 0 { Skip::None } else { Skip::Braces(d as usize) };
                continue;
            }
            Skip::Until(end) => {
                if line.starts_with(end) {
                    skip = Skip::None;
                }
                continue;
            }
            Skip::None => {}
        }

        if line.is_empty() || line.starts_with('\'') || line.starts_with("@startuml") {
            continue;
        }
        if line.starts_with("@enduml") {
            break;
        }

        let first = line.split_whitespace().next().unwrap_or("");
        if first == "class" {
            let rest = line["class".len()..].trim_start();
            let Some((name, rest)) = take_name(rest) else {
                return err(n, "class name");
            };
            if !line["class".len()..].starts_with(char::is_whitespace) {
                return err(n, "class name");
            }
            model.classes.push(ClassDecl {
                name: name.to_owned(),
                attributes: Vec::new(),
                methods: Vec::new(),
                decl_line: n,
            });
            match rest.split_whitespace().collect::<String>().as_str() {
                "" | "{}" => {}
                "{" => body = Some(model.classes.len() - 1),
                _ => return err(n, "`{` or end of line after class name"),
            }
            continue;
        }

        let directive = DIRECTIVES.contains(&first) || take_name(line).is_none();
        if directive {
            warnings.push(ParseWarning {
                line: n,
                message: format!("skipped unsupported statement `{first}`"),
            });
            let d = brace_delta(line);
            if d > 0 {
                skip = Skip::Braces(d as usize);
            } else if first == "note" && !line.contains(':') && !line.contains('"') {
                skip = Skip::Until("end note");
            } else if first == "legend" {
                skip = Skip::Until("endlegend");
            }
            continue;
        }

        let (left, rest) = take_name(line).expect("checked above");
        let rest = rest.trim_start();
        let Some(kind) = ARROWS.into_iter().find(|k| rest.starts_with(k.arrow())) else {
            return err(n, "relation arrow (<|--, --, o--, *--, ..>)");
        };
        let rest = rest[kind.arrow().len()..].trim_start();
        let Some((right, rest)) = take_name(rest) else {
            return err(n, "class name after arrow");
        };
        let rest = rest.trim();
        let label = if rest.is_empty() {
            None
        } else if let Some(l) = rest.strip_prefix(':') {
            let l = l.trim();
            if l.is_empty() {
                return err(n, "label after `:`");
            }
            Some(l.to_owned())
        } else {
            return err(n, "`:` label or end of line");
        };
        model.relations.push(Relation {
            kind,
            left: left.to_owned(),
            right: right.to_owned(),
            label,
            decl_line: n,
        });
    }

    if let Some(ci) = body {
        return err(last_line.max(1), format!("`}}` closing class {}", model.classes[ci].name));
    }

    let mut implicit = Vec::new();
    for r in &model.relations {
        for name in [&r.left, &r.right] {
            let known = model.classes.iter().chain(&implicit).any(|c: &ClassDecl| &c.name == name);
            if !known {
                warnings.push(ParseWarning {
                    line: r.decl_line,
                    message: format!("class {name} used in a relation but never declared"),
                });
                implicit.push(ClassDecl {
                    name: name.clone(),
                    attributes: Vec::new(),
                    methods: Vec::new(),
                    decl_line: r.decl_line,
                });
            }
        }
    }
    model.classes.extend(implicit);
    Ok(ParseOutput { model, warnings })
}

/// Canonical text for `model`: classes first, then relations.
pub fn render_class_diagram(model: &PlantUmlClassModel) -> String {
    let mut out = String::from("@startuml\n");
    for c in &model.classes {
        if c.attributes.is_empty() && c.methods.is_empty() {
            out.push_str(&format!("class {}\n", c.name));
        } else {
            out.push_str(&format!("class {} {{\n", c.name));
            for m in c.attributes.iter().chain(&c.methods) {
                out.push_str(&format!("  {m}\n"));
            }
            out.push_str("}\n");
        }
    }
    for r in &model.relations {
        out.push_str(&format!("{} {} {}", r.left, r.kind.arrow(), r.right));
        if let Some(l) = &r.label {
            out.push_str(&format!(" : {l}"));
        }
        out.push('\n');
    }
    out.push_str("@enduml\n");
    out
}

impl fmt::Display for PlantUmlClassModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_class_diagram(self))
    }
}

fn keyed(seen: &mut HashMap<String, usize>, base: String) -> String {
    let n = seen.entry(base.clone()).or_insert(0);
    *n += 1;
    if *n == 1 {
        base
    } else {
        format!("{base}#{n}")
    }
}

/// Maps `class:<Name>` and `rel:<Left><arrow><Right>` to declaration lines.
/// Repeated keys get an occurrence suffix (`class:Student#2`).
pub fn element_line_index(model: &PlantUmlClassModel) -> BTreeMap<String, usize> {
    let mut seen = HashMap::new();
    let mut index = BTreeMap::new();
    for c in &model.classes {
        index.insert(keyed(&mut seen, format!("class:{}", c.name)), c.decl_line);
    }
    for r in &model.relations {
        let key = format!("rel:{}{}{}", r.left, r.kind.arrow(), r.right);
        index.insert(keyed(&mut seen, key), r.decl_line);
    }
    index
}
