use std::fmt;

use thiserror::Error;

use super::{
    strip_role_suffix, AttributeAnnotation, Document, EventAnnotation, EventArgument, Fragment,
    Span, StandoffError,
};

/// A parse failure tied to the 1-based `.ann` line that caused it.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {error}")]
pub struct ParseError {
    pub line: usize,
    #[source]
    pub error: StandoffError,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseWarning {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ParseWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, Clone)]
pub struct Parsed {
    pub document: Document,
    pub warnings: Vec<ParseWarning>,
}

struct RawTextBound<'a> {
    line: usize,
    id: &'a str,
    label: &'a str,
    span: Span,
    text: Option<&'a str>,
}

struct RawEvent {
    line: usize,
    event: EventAnnotation,
}

struct RawAttribute {
    line: usize,
    attr: AttributeAnnotation,
}

fn at(line: usize) -> impl Fn(StandoffError) -> ParseError {
    move |error| ParseError { line, error }
}

fn malformed(kind: &'static str, reason: impl Into<String>) -> StandoffError {
    StandoffError::Malformed {
        kind,
        reason: reason.into(),
    }
}

/// Parses one `.ann` file against the note text its offsets index into.
///
/// Lines are resolved in two passes (text-bounds, then events, then
/// attributes), so line order does not matter. In lenient mode, relation,
/// normalization and comment lines are skipped with a warning, and a covered
/// text that disagrees with the note is replaced by the note's text with a
/// warning; strict mode turns both into errors.
pub fn parse_document(
    ann_text: &str,
    doc_text: &str,
    doc_id: &str,
    strict: bool,
) -> Result<Parsed, ParseError> {
    let mut warnings = Vec::new();
    let mut text_bounds = Vec::new();
    let mut events = Vec::new();
    let mut attributes = Vec::new();

    for (idx, raw_line) in ann_text.split('\n').enumerate() {
        let line = idx + 1;
        let content = raw_line.strip_suffix('\r').unwrap_or(raw_line);
        if content.trim().is_empty() {
            continue;
        }
        match content.as_bytes()[0] {
            b'T' => text_bounds.push(parse_text_bound(content).map_err(at(line)).map(
                |(id, label, span, text)| RawTextBound {
                    line,
                    id,
                    label,
                    span,
                    text,
                },
            )?),
            b'E' => events.push(RawEvent {
                line,
                event: parse_event(content).map_err(at(line))?,
            }),
            b'A' => attributes.push(RawAttribute {
                line,
                attr: parse_attribute(content).map_err(at(line))?,
            }),
            _ => {
                let kind: String = content.chars().take_while(|c| !c.is_whitespace()).collect();
                if strict {
                    return Err(ParseError {
                        line,
                        error: StandoffError::UnsupportedLine(kind),
                    });
                }
                warnings.push(ParseWarning {
                    line,
                    message: format!("ignored unsupported annotation {kind}"),
                });
            }
        }
    }

    let mut doc = Document::new(doc_id, doc_text);
    for tb in text_bounds {
        let expected = doc.span_text(&tb.span).map_err(at(tb.line))?;
        match tb.text {
            Some(found) if same_surface(found, &expected) => {}
            found => {
                let err = StandoffError::CoveredTextMismatch {
                    id: tb.id.to_string(),
                    found: found.unwrap_or_default().to_string(),
                    expected,
                };
                if strict {
                    return Err(ParseError {
                        line: tb.line,
                        error: err,
                    });
                }
                warnings.push(ParseWarning {
                    line: tb.line,
                    message: err.to_string(),
                });
            }
        }
        doc.add_text_bound(tb.id, tb.label, tb.span)
            .map_err(at(tb.line))?;
    }
    for ev in events {
        doc.add_event(ev.event).map_err(at(ev.line))?;
    }
    for a in attributes {
        doc.add_attribute(a.attr).map_err(at(a.line))?;
    }
    Ok(Parsed {
        document: doc,
        warnings,
    })
}

/// Line breaks and tabs cannot appear inside an `.ann` text field, so they
/// compare equal to a space.
fn same_surface(found: &str, expected: &str) -> bool {
    found.chars().count() == expected.chars().count()
        && found
            .chars()
            .zip(expected.chars())
            .all(|(a, b)| a == b || (a == ' ' && matches!(b, '\n' | '\r' | '\t')))
}

fn parse_text_bound(line: &str) -> Result<(&str, &str, Span, Option<&str>), StandoffError> {
    let mut fields = line.splitn(3, '\t');
    let id = fields.next().unwrap_or_default();
    let body = fields
        .next()
        .ok_or_else(|| malformed("text-bound", "missing type and offsets field"))?;
    let text = fields.next();
    let (label, offsets) = body
        .split_once(' ')
        .ok_or_else(|| malformed("text-bound", "missing offsets"))?;
    if label.is_empty() {
        return Err(malformed("text-bound", "empty type"));
    }
    let mut fragments = Vec::new();
    for part in offsets.split(';') {
        let mut nums = part.split_whitespace();
        let (Some(s), Some(e), None) = (nums.next(), nums.next(), nums.next()) else {
            return Err(malformed(
                "text-bound",
                format!("fragment {part:?} is not a start/end pair"),
            ));
        };
        let start = s
            .parse()
            .map_err(|_| malformed("text-bound", format!("bad offset {s:?}")))?;
        let end = e
            .parse()
            .map_err(|_| malformed("text-bound", format!("bad offset {e:?}")))?;
        fragments.push(Fragment::new(start, end));
    }
    Ok((id, label, Span::new(fragments)?, text))
}

fn parse_event(line: &str) -> Result<EventAnnotation, StandoffError> {
    let (id, body) = line
        .split_once('\t')
        .ok_or_else(|| malformed("event", "missing tab after id"))?;
    let body = body.split('\t').next().unwrap_or_default();
    let mut tokens = body.split_whitespace();
    let head = tokens
        .next()
        .ok_or_else(|| StandoffError::MissingTrigger(id.to_string()))?;
    let (event_type, trigger) = head
        .split_once(':')
        .ok_or_else(|| StandoffError::MissingTrigger(id.to_string()))?;
    if event_type.is_empty() || trigger.is_empty() {
        return Err(StandoffError::MissingTrigger(id.to_string()));
    }
    let mut arguments = Vec::new();
    for tok in tokens {
        match tok.split_once(':') {
            Some((role, target)) if !role.is_empty() && !target.is_empty() => {
                arguments.push(EventArgument {
                    role: strip_role_suffix(role).to_string(),
                    target: target.to_string(),
                })
            }
            _ => {
                return Err(malformed(
                    "event",
                    format!("argument {tok:?} is not Role:Id"),
                ))
            }
        }
    }
    Ok(EventAnnotation {
        id: id.to_string(),
        event_type: event_type.to_string(),
        trigger: trigger.to_string(),
        arguments,
    })
}

fn parse_attribute(line: &str) -> Result<AttributeAnnotation, StandoffError> {
    let (id, body) = line
        .split_once('\t')
        .ok_or_else(|| malformed("attribute", "missing tab after id"))?;
    let mut tokens = body.split_whitespace();
    let (Some(name), Some(target)) = (tokens.next(), tokens.next()) else {
        return Err(malformed("attribute", "expected name and target"));
    };
    let value = tokens.next().map(str::to_string);
    if tokens.next().is_some() {
        return Err(malformed("attribute", "too many fields"));
    }
    Ok(AttributeAnnotation {
        id: id.to_string(),
        name: name.to_string(),
        target: target.to_string(),
        value,
    })
}
