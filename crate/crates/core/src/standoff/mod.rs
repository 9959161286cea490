//! BRAT standoff document model.
//!
//! A [`Document`] pairs the raw note text with the text-bound (`T`), event
//! (`E`) and attribute (`A`) annotations of its `.ann` file. Offsets are
//! counted in Unicode scalar values, not bytes.

mod corpus;
mod parse;
mod serialize;

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use corpus::{
    load_corpus, load_documents, parse_manifest, save_corpus, Corpus, CorpusError, LoadOptions, ManifestEntry,
    MetadataRules,
};
pub use parse::{parse_document, ParseError, ParseWarning, Parsed};
pub use serialize::serialize_document;

/// Errors raised while building or resolving annotations.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StandoffError {
    #[error("malformed {kind} line: {reason}")]
    Malformed { kind: &'static str, reason: String },
    #[error("unsupported annotation line kind {0:?}")]
    UnsupportedLine(String),
    #[error("invalid span: {0}")]
    InvalidSpan(String),
    #[error("offset {offset} out of bounds (text has {len} characters)")]
    OffsetOutOfBounds { offset: usize, len: usize },
    #[error("covered text mismatch for {id}: annotation has {found:?}, note text has {expected:?}")]
    CoveredTextMismatch {
        id: String,
        found: String,
        expected: String,
    },
    #[error("{id} references unknown annotation {target}")]
    DanglingReference { id: String, target: String },
    #[error("{id}: event arguments must reference text-bound annotations, found {target}")]
    NonTextBoundArgument { id: String, target: String },
    #[error("duplicate annotation id {0}")]
    DuplicateId(String),
    #[error("annotation id {id} does not carry the {expected} prefix")]
    BadIdPrefix { id: String, expected: char },
    #[error("event {0} must have exactly one trigger")]
    MissingTrigger(String),
    #[error("trigger {trigger} of event {id} is labeled {label}, expected {event_type}")]
    TriggerTypeMismatch {
        id: String,
        trigger: String,
        label: String,
        event_type: String,
    },
    #[error("duplicate attribute {name} on {target}")]
    DuplicateAttribute { name: String, target: String },
}

/// Half-open character range `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Fragment {
    pub start: usize,
    pub end: usize,
}

impl Fragment {
    pub fn new(start: usize, end: usize) -> Self {
        Fragment { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }
}

/// One or more sorted, non-overlapping fragments.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Fragment>", into = "Vec<Fragment>")]
pub struct Span(Vec<Fragment>);

impl Span {
    pub fn new(fragments: Vec<Fragment>) -> Result<Self, StandoffError> {
        if fragments.is_empty() {
            return Err(StandoffError::InvalidSpan("no fragments".into()));
        }
        for f in &fragments {
            if f.is_empty() {
                return Err(StandoffError::InvalidSpan(format!(
                    "fragment {}..{} is empty",
                    f.start, f.end
                )));
            }
        }
        for w in fragments.windows(2) {
            if w[1].start < w[0].end {
                return Err(StandoffError::InvalidSpan(format!(
                    "fragments {}..{} and {}..{} overlap or are out of order",
                    w[0].start, w[0].end, w[1].start, w[1].end
                )));
            }
        }
        Ok(Span(fragments))
    }

    pub fn single(start: usize, end: usize) -> Result<Self, StandoffError> {
        Span::new(vec![Fragment::new(start, end)])
    }

    pub fn fragments(&self) -> &[Fragment] {
        &self.0
    }

    pub fn start(&self) -> usize {
        self.0[0].start
    }

    pub fn end(&self) -> usize {
        self.0[self.0.len() - 1].end
    }

    pub fn is_discontinuous(&self) -> bool {
        self.0.len() > 1
    }

    /// True iff some fragment of `self` shares at least one character with
    /// some fragment of `other`.
    pub fn overlaps(&self, other: &Span) -> bool {
        // both fragment lists are sorted; merge-walk them
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            let a = self.0[i];
            let b = other.0[j];
            if a.start < b.end && b.start < a.end {
                return true;
            }
            if a.end <= b.end {
                i += 1;
            } else {
                j += 1;
            }
        }
        false
    }
}

impl TryFrom<Vec<Fragment>> for Span {
    type Error = StandoffError;

    fn try_from(v: Vec<Fragment>) -> Result<Self, Self::Error> {
        Span::new(v)
    }
}

impl From<Span> for Vec<Fragment> {
    fn from(s: Span) -> Self {
        s.0
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, frag) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(";")?;
            }
            write!(f, "{} {}", frag.start, frag.end)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TextBound {
    pub id: String,
    pub label: String,
    pub span: Span,
    pub covered_text: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventArgument {
    /// Role name with any numeric disambiguation suffix removed.
    pub role: String,
    pub target: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventAnnotation {
    pub id: String,
    pub event_type: String,
    pub trigger: String,
    pub arguments: Vec<EventArgument>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributeAnnotation {
    pub id: String,
    pub name: String,
    pub target: String,
    pub value: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Mimic,
    Uw,
    #[default]
    Other,
}

impl Source {
    pub fn as_str(&self) -> &'static str {
        match self {
            Source::Mimic => "mimic",
            Source::Uw => "uw",
            Source::Other => "other",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mimic" => Some(Source::Mimic),
            "uw" => Some(Source::Uw),
            "other" => Some(Source::Other),
            _ => None,
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
    #[default]
    Unknown,
}

impl Split {
    pub fn as_str(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
            Split::Unknown => "unknown",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "train" => Some(Split::Train),
            "dev" | "devel" | "development" => Some(Split::Dev),
            "test" => Some(Split::Test),
            "unknown" => Some(Split::Unknown),
            _ => None,
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Metadata {
    pub source: Source,
    pub split: Split,
}

/// Orders annotation ids by prefix, then numerically (`T2` < `T10`).
pub fn cmp_ids(a: &str, b: &str) -> Ordering {
    fn key(id: &str) -> (&str, Option<u64>, &str) {
        let digits = id.find(|c: char| c.is_ascii_digit()).unwrap_or(id.len());
        let (prefix, rest) = id.split_at(digits);
        (prefix, rest.parse().ok(), id)
    }
    let (pa, na, ra) = key(a);
    let (pb, nb, rb) = key(b);
    pa.cmp(pb)
        .then_with(|| match (na, nb) {
            (Some(x), Some(y)) => x.cmp(&y),
            (Some(_), None) => Ordering::Less,
            (None, Some(_)) => Ordering::Greater,
            (None, None) => Ordering::Equal,
        })
        .then_with(|| ra.cmp(rb))
}

/// One note: its text and the annotations attached to it.
///
/// Mutation goes through the `add_*` methods, each of which enforces the
/// reference and offset invariants, so a `Document` is always consistent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    doc_id: String,
    text: String,
    metadata: Metadata,
    text_bounds: BTreeMap<String, TextBound>,
    events: BTreeMap<String, EventAnnotation>,
    attributes: BTreeMap<String, AttributeAnnotation>,
    // byte offset of every char boundary, including the end of the text
    boundaries: Vec<usize>,
}

impl Document {
    pub fn new(doc_id: impl Into<String>, text: impl Into<String>) -> Self {
        let text = text.into();
        let mut boundaries: Vec<usize> = text.char_indices().map(|(i, _)| i).collect();
        boundaries.push(text.len());
        Document {
            doc_id: doc_id.into(),
            text,
            metadata: Metadata::default(),
            text_bounds: BTreeMap::new(),
            events: BTreeMap::new(),
            attributes: BTreeMap::new(),
            boundaries,
        }
    }

    /// An annotation-free copy sharing id, text and metadata.
    pub fn empty_like(&self) -> Self {
        Document {
            doc_id: self.doc_id.clone(),
            text: self.text.clone(),
            metadata: self.metadata,
            text_bounds: BTreeMap::new(),
            events: BTreeMap::new(),
            attributes: BTreeMap::new(),
            boundaries: self.boundaries.clone(),
        }
    }

    pub fn with_metadata(mut self, metadata: Metadata) -> Self {
        self.metadata = metadata;
        self
    }

    pub fn set_metadata(&mut self, metadata: Metadata) {
        self.metadata = metadata;
    }

    pub fn doc_id(&self) -> &str {
        &self.doc_id
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn metadata(&self) -> Metadata {
        self.metadata
    }

    /// Length of the text in characters.
    pub fn char_len(&self) -> usize {
        self.boundaries.len() - 1
    }

    pub fn text_bounds(&self) -> impl Iterator<Item = &TextBound> {
        self.text_bounds.values()
    }

    pub fn events(&self) -> impl Iterator<Item = &EventAnnotation> {
        self.events.values()
    }

    pub fn attributes(&self) -> impl Iterator<Item = &AttributeAnnotation> {
        self.attributes.values()
    }

    pub fn text_bound(&self, id: &str) -> Option<&TextBound> {
        self.text_bounds.get(id)
    }

    pub fn event(&self, id: &str) -> Option<&EventAnnotation> {
        self.events.get(id)
    }

    pub fn attribute(&self, id: &str) -> Option<&AttributeAnnotation> {
        self.attributes.get(id)
    }

    pub fn event_count(&self) -> usize {
        self.events.len()
    }

    pub fn is_unannotated(&self) -> bool {
        self.text_bounds.is_empty() && self.events.is_empty() && self.attributes.is_empty()
    }

    /// Value of the attribute `name` attached to `target`, if any.
    pub fn attribute_value(&self, target: &str, name: &str) -> Option<&AttributeAnnotation> {
        self.attributes
            .values()
            .find(|a| a.target == target && a.name == name)
    }

    /// The text under `span`, fragments joined by a single space.
    pub fn span_text(&self, span: &Span) -> Result<String, StandoffError> {
        let len = self.char_len();
        let mut out = String::new();
        for (i, f) in span.fragments().iter().enumerate() {
            if f.end > len {
                return Err(StandoffError::OffsetOutOfBounds { offset: f.end, len });
            }
            if i > 0 {
                out.push(' ');
            }
            out.push_str(&self.text[self.boundaries[f.start]..self.boundaries[f.end]]);
        }
        Ok(out)
    }

    /// Smallest unused numeric id for `prefix` (`T`, `E` or `A`).
    pub fn next_id(&self, prefix: char) -> String {
        let max = match prefix {
            'T' => max_numeric(self.text_bounds.keys()),
            'E' => max_numeric(self.events.keys()),
            _ => max_numeric(self.attributes.keys()),
        };
        format!("{}{}", prefix, max + 1)
    }

    fn id_in_use(&self, id: &str) -> bool {
        self.text_bounds.contains_key(id)
            || self.events.contains_key(id)
            || self.attributes.contains_key(id)
    }

    /// Adds a text-bound annotation; the covered text is taken from the note.
    pub fn add_text_bound(
        &mut self,
        id: impl Into<String>,
        label: impl Into<String>,
        span: Span,
    ) -> Result<&TextBound, StandoffError> {
        let id = id.into();
        check_prefix(&id, 'T')?;
        if self.id_in_use(&id) {
            return Err(StandoffError::DuplicateId(id));
        }
        let covered_text = self.span_text(&span)?;
        let tb = TextBound {
            id: id.clone(),
            label: label.into(),
            span,
            covered_text,
        };
        Ok(self.text_bounds.entry(id).or_insert(tb))
    }

    pub fn add_event(&mut self, event: EventAnnotation) -> Result<(), StandoffError> {
        check_prefix(&event.id, 'E')?;
        if self.id_in_use(&event.id) {
            return Err(StandoffError::DuplicateId(event.id));
        }
        if event.trigger.is_empty() {
            return Err(StandoffError::MissingTrigger(event.id));
        }
        let trigger = self.resolve_text_bound(&event.id, &event.trigger)?;
        if trigger.label != event.event_type {
            return Err(StandoffError::TriggerTypeMismatch {
                id: event.id.clone(),
                trigger: event.trigger.clone(),
                label: trigger.label.clone(),
                event_type: event.event_type.clone(),
            });
        }
        for arg in &event.arguments {
            self.resolve_text_bound(&event.id, &arg.target)?;
        }
        self.events.insert(event.id.clone(), event);
        Ok(())
    }

    pub fn add_attribute(&mut self, attr: AttributeAnnotation) -> Result<(), StandoffError> {
        check_prefix(&attr.id, 'A')?;
        if self.id_in_use(&attr.id) {
            return Err(StandoffError::DuplicateId(attr.id));
        }
        if !self.text_bounds.contains_key(&attr.target) && !self.events.contains_key(&attr.target)
        {
            return Err(StandoffError::DanglingReference {
                id: attr.id,
                target: attr.target,
            });
        }
        if self.attribute_value(&attr.target, &attr.name).is_some() {
            return Err(StandoffError::DuplicateAttribute {
                name: attr.name,
                target: attr.target,
            });
        }
        self.attributes.insert(attr.id.clone(), attr);
        Ok(())
    }

    fn resolve_text_bound(&self, id: &str, target: &str) -> Result<&TextBound, StandoffError> {
        if let Some(tb) = self.text_bounds.get(target) {
            return Ok(tb);
        }
        if self.events.contains_key(target) || self.attributes.contains_key(target) {
            return Err(StandoffError::NonTextBoundArgument {
                id: id.to_string(),
                target: target.to_string(),
            });
        }
        Err(StandoffError::DanglingReference {
            id: id.to_string(),
            target: target.to_string(),
        })
    }
}

fn check_prefix(id: &str, expected: char) -> Result<(), StandoffError> {
    if id.len() > 1 && id.starts_with(expected) {
        Ok(())
    } else {
        Err(StandoffError::BadIdPrefix {
            id: id.to_string(),
            expected,
        })
    }
}

fn max_numeric<'a>(ids: impl Iterator<Item = &'a String>) -> u64 {
    ids.filter_map(|id| id[1..].parse::<u64>().ok())
        .max()
        .unwrap_or(0)
}

/// Removes a trailing run of ASCII digits (`Status2` -> `Status`), keeping at
/// least one character.
pub fn strip_role_suffix(role: &str) -> &str {
    let trimmed = role.trim_end_matches(|c: char| c.is_ascii_digit());
    if trimmed.is_empty() {
        role
    } else {
        trimmed
    }
}
