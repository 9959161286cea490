//! Event annotation schemes.
//!
//! A scheme declares the event types, the arguments each event type takes,
//! which arguments are span-only and which carry a subtype label, and which
//! are required. Schemes are loaded from TOML; the SHAC scheme is built in.
//!
//! ```toml
//! version = "my-scheme-1"
//! subtype_attachment = "argument"   # or "event"
//!
//! [[event]]
//! type = "Drug"                     # spaces are stripped: "Living Status" -> LivingStatus
//! display = "Drug"                  # optional, defaults to the name as written
//!
//! [[event.argument]]
//! type = "StatusTime"
//! role = "Status"                   # one role per argument type
//! kind = "labeled"                  # or "span_only"
//! attribute = "StatusTimeVal"       # labeled only: attribute holding the subtype
//! subtypes = ["none", "current", "past"]   # labeled only
//! required = true                   # optional, default false
//! ```

mod validate;

use std::collections::BTreeSet;

use serde::Deserialize;
use thiserror::Error;

use crate::standoff::{Document, EventAnnotation};

pub use validate::{parse_failure_violation, validate_document, Rule, Violation};

/// The SHAC configuration shipped with the crate.
pub const SHAC_CONFIG: &str = include_str!("shac.toml");

#[derive(Debug, Error)]
pub enum SchemaError {
    #[error("schema syntax: {0}")]
    Syntax(#[from] toml::de::Error),
    #[error("{context}: unknown argument kind {kind:?} (expected \"span_only\" or \"labeled\")")]
    UnknownKind { context: String, kind: String },
    #[error("unknown subtype attachment {0:?} (expected \"argument\" or \"event\")")]
    UnknownAttachment(String),
    #[error("duplicate event type {0}")]
    DuplicateEventType(String),
    #[error("{event}: duplicate argument type {argument}")]
    DuplicateArgumentType { event: String, argument: String },
    #[error("{event}: role {role} is used by more than one argument type")]
    DuplicateRole { event: String, role: String },
    #[error("{context}: labeled argument needs a non-empty subtype list")]
    MissingSubtypes { context: String },
    #[error("{context}: labeled argument needs an attribute name")]
    MissingAttribute { context: String },
    #[error("{context}: span-only argument cannot declare {field}")]
    SpanOnlyField {
        context: String,
        field: &'static str,
    },
    #[error("{context}: duplicate subtype {subtype}")]
    DuplicateSubtype { context: String, subtype: String },
    #[error("{context}: invalid name {name:?}")]
    InvalidName { context: String, name: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SubtypeAttachment {
    /// The subtype attribute targets the argument's text-bound annotation.
    #[default]
    Argument,
    /// The subtype attribute targets the event.
    Event,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ArgumentKind {
    SpanOnly,
    Labeled {
        subtypes: Vec<String>,
        attribute: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArgumentSpec {
    pub argument_type: String,
    pub display_name: String,
    pub role: String,
    pub kind: ArgumentKind,
    pub required: bool,
}

impl ArgumentSpec {
    pub fn is_labeled(&self) -> bool {
        matches!(self.kind, ArgumentKind::Labeled { .. })
    }

    pub fn subtypes(&self) -> &[String] {
        match &self.kind {
            ArgumentKind::Labeled { subtypes, .. } => subtypes,
            ArgumentKind::SpanOnly => &[],
        }
    }

    pub fn attribute_name(&self) -> Option<&str> {
        match &self.kind {
            ArgumentKind::Labeled { attribute, .. } => Some(attribute),
            ArgumentKind::SpanOnly => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventSpec {
    pub event_type: String,
    pub display_name: String,
    pub arguments: Vec<ArgumentSpec>,
}

impl EventSpec {
    pub fn argument_by_role(&self, role: &str) -> Option<&ArgumentSpec> {
        self.arguments.iter().find(|a| a.role == role)
    }

    pub fn argument_by_type(&self, argument_type: &str) -> Option<&ArgumentSpec> {
        self.arguments
            .iter()
            .find(|a| a.argument_type == argument_type)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotationSchema {
    pub version: String,
    pub attachment: SubtypeAttachment,
    pub events: Vec<EventSpec>,
}

impl AnnotationSchema {
    pub fn shac() -> Self {
        load_schema(SHAC_CONFIG).expect("built-in SHAC schema is valid")
    }

    pub fn event(&self, event_type: &str) -> Option<&EventSpec> {
        self.events.iter().find(|e| e.event_type == event_type)
    }

    pub fn event_types(&self) -> impl Iterator<Item = &str> {
        self.events.iter().map(|e| e.event_type.as_str())
    }

    pub fn argument(&self, event_type: &str, argument_type: &str) -> Option<&ArgumentSpec> {
        self.event(event_type)?.argument_by_type(argument_type)
    }

    /// Display name for an event type, falling back to the canonical name.
    pub fn event_display<'a>(&'a self, event_type: &'a str) -> &'a str {
        self.event(event_type)
            .map(|e| e.display_name.as_str())
            .unwrap_or(event_type)
    }

    /// Display name for an argument type within an event type.
    pub fn argument_display<'a>(&'a self, event_type: &'a str, argument_type: &'a str) -> &'a str {
        self.argument(event_type, argument_type)
            .map(|a| a.display_name.as_str())
            .unwrap_or(argument_type)
    }

    /// The subtype label of a labeled argument of `event` whose text-bound is
    /// `target`, following the scheme's attachment convention.
    pub fn subtype_of<'d>(
        &self,
        doc: &'d Document,
        event: &EventAnnotation,
        target: &str,
        spec: &ArgumentSpec,
    ) -> Option<&'d str> {
        let name = spec.attribute_name()?;
        let holder = match self.attachment {
            SubtypeAttachment::Argument => target,
            SubtypeAttachment::Event => event.id.as_str(),
        };
        doc.attribute_value(holder, name)?.value.as_deref()
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSchema {
    version: String,
    #[serde(default)]
    subtype_attachment: Option<String>,
    #[serde(default, rename = "event")]
    events: Vec<RawEvent>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEvent {
    #[serde(rename = "type")]
    event_type: String,
    display: Option<String>,
    #[serde(default, rename = "argument")]
    arguments: Vec<RawArgument>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawArgument {
    #[serde(rename = "type")]
    argument_type: String,
    display: Option<String>,
    role: String,
    kind: String,
    attribute: Option<String>,
    subtypes: Option<Vec<String>>,
    #[serde(default)]
    required: bool,
}

/// Strips spaces and rejects names that cannot appear in a standoff line.
fn canonical(name: &str, context: &str) -> Result<String, SchemaError> {
    let out: String = name.chars().filter(|c| *c != ' ').collect();
    if out.is_empty() || out.chars().any(|c| c.is_whitespace() || c == ':') {
        return Err(SchemaError::InvalidName {
            context: context.to_string(),
            name: name.to_string(),
        });
    }
    Ok(out)
}

/// Parses and validates a scheme configuration.
pub fn load_schema(config: &str) -> Result<AnnotationSchema, SchemaError> {
    let raw: RawSchema = toml::from_str(config)?;
    let attachment = match raw.subtype_attachment.as_deref() {
        None | Some("argument") => SubtypeAttachment::Argument,
        Some("event") => SubtypeAttachment::Event,
        Some(other) => return Err(SchemaError::UnknownAttachment(other.to_string())),
    };

    let mut events = Vec::new();
    let mut event_names = BTreeSet::new();
    for ev in raw.events {
        let event_type = canonical(&ev.event_type, "event type")?;
        if !event_names.insert(event_type.clone()) {
            return Err(SchemaError::DuplicateEventType(event_type));
        }
        let mut arguments = Vec::new();
        let mut arg_names = BTreeSet::new();
        let mut roles = BTreeSet::new();
        for a in ev.arguments {
            let context = format!("{}/{}", event_type, a.argument_type);
            let argument_type = canonical(&a.argument_type, &context)?;
            let role = canonical(&a.role, &context)?;
            if !arg_names.insert(argument_type.clone()) {
                return Err(SchemaError::DuplicateArgumentType {
                    event: event_type.clone(),
                    argument: argument_type,
                });
            }
            if !roles.insert(role.clone()) {
                return Err(SchemaError::DuplicateRole {
                    event: event_type.clone(),
                    role,
                });
            }
            let kind = match a.kind.as_str() {
                "span_only" => {
                    if a.subtypes.is_some() {
                        return Err(SchemaError::SpanOnlyField {
                            context,
                            field: "subtypes",
                        });
                    }
                    if a.attribute.is_some() {
                        return Err(SchemaError::SpanOnlyField {
                            context,
                            field: "attribute",
                        });
                    }
                    ArgumentKind::SpanOnly
                }
                "labeled" => {
                    let subtypes = a.subtypes.unwrap_or_default();
                    if subtypes.is_empty() {
                        return Err(SchemaError::MissingSubtypes { context });
                    }
                    let mut seen = BTreeSet::new();
                    for s in &subtypes {
                        if s.is_empty() || s.chars().any(char::is_whitespace) {
                            return Err(SchemaError::InvalidName {
                                context,
                                name: s.clone(),
                            });
                        }
                        if !seen.insert(s) {
                            return Err(SchemaError::DuplicateSubtype {
                                context,
                                subtype: s.clone(),
                            });
                        }
                    }
                    let attribute = match a.attribute {
                        Some(name) => canonical(&name, &context)?,
                        None => return Err(SchemaError::MissingAttribute { context }),
                    };
                    ArgumentKind::Labeled {
                        subtypes,
                        attribute,
                    }
                }
                other => {
                    return Err(SchemaError::UnknownKind {
                        context,
                        kind: other.to_string(),
                    })
                }
            };
            arguments.push(ArgumentSpec {
                display_name: a.display.unwrap_or_else(|| a.argument_type.clone()),
                argument_type,
                role,
                kind,
                required: a.required,
            });
        }
        events.push(EventSpec {
            display_name: ev.display.unwrap_or_else(|| ev.event_type.clone()),
            event_type,
            arguments,
        });
    }
    Ok(AnnotationSchema {
        version: raw.version,
        attachment,
        events,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shac_event_types() {
        let schema = AnnotationSchema::shac();
        let types: BTreeSet<_> = schema.event_types().collect();
        assert_eq!(
            types,
            ["Alcohol", "Drug", "Tobacco", "Employment", "LivingStatus"]
                .into_iter()
                .collect()
        );
        assert_eq!(schema.event_display("LivingStatus"), "Living Status");
        assert_eq!(schema.argument_display("Drug", "StatusTime"), "Status Time");
    }

    #[test]
    fn shac_vocabularies() {
        let schema = AnnotationSchema::shac();
        for ev in ["Alcohol", "Drug", "Tobacco"] {
            let st = schema.argument(ev, "StatusTime").unwrap();
            assert!(st.required);
            assert_eq!(st.role, "Status");
            for s in ["none", "current", "past"] {
                assert!(st.subtypes().iter().any(|x| x == s));
            }
        }
        let emp = schema.argument("Employment", "StatusEmploy").unwrap();
        for s in [
            "employed",
            "unemployed",
            "retired",
            "on_disability",
            "student",
            "homemaker",
        ] {
            assert!(emp.subtypes().iter().any(|x| x == s), "{s}");
        }
        let living = schema.argument("LivingStatus", "TypeLiving").unwrap();
        assert!(living.subtypes().iter().any(|x| x == "homeless"));
        assert!(schema.argument("LivingStatus", "StatusLiving").is_some());
        assert!(!schema.argument("Drug", "Duration").unwrap().is_labeled());
        assert!(!schema.argument("Employment", "Type").unwrap().is_labeled());
    }

    #[test]
    fn names_are_canonicalized() {
        let s = load_schema(
            r#"
            version = "t"
            [[event]]
            type = "Living Status"
            [[event.argument]]
            type = "Type Living"
            role = "Type"
            kind = "labeled"
            attribute = "Type Living Val"
            subtypes = ["alone"]
            "#,
        )
        .unwrap();
        assert_eq!(s.events[0].event_type, "LivingStatus");
        assert_eq!(s.events[0].display_name, "Living Status");
        let arg = &s.events[0].arguments[0];
        assert_eq!(arg.argument_type, "TypeLiving");
        assert_eq!(arg.display_name, "Type Living");
        assert_eq!(arg.attribute_name(), Some("TypeLivingVal"));
    }

    fn one_arg(body: &str) -> Result<AnnotationSchema, SchemaError> {
        load_schema(&format!(
            "version = \"t\"\n[[event]]\ntype = \"Drug\"\n[[event.argument]]\n{body}\n"
        ))
    }

    #[test]
    fn config_errors() {
        assert!(matches!(
            one_arg("type = \"X\"\nrole = \"X\"\nkind = \"fuzzy\""),
            Err(SchemaError::UnknownKind { .. })
        ));
        assert!(matches!(
            one_arg("type = \"X\"\nrole = \"X\"\nkind = \"labeled\"\nattribute = \"XVal\""),
            Err(SchemaError::MissingSubtypes { .. })
        ));
        assert!(matches!(
            one_arg("type = \"X\"\nrole = \"X\"\nkind = \"labeled\"\nsubtypes = [\"a\"]"),
            Err(SchemaError::MissingAttribute { .. })
        ));
        assert!(matches!(
            one_arg("type = \"X\"\nrole = \"X\"\nkind = \"span_only\"\nsubtypes = [\"a\"]"),
            Err(SchemaError::SpanOnlyField { .. })
        ));
        assert!(matches!(
            one_arg(
                "type = \"X\"\nrole = \"R\"\nkind = \"span_only\"\n[[event.argument]]\ntype = \"Y\"\nrole = \"R\"\nkind = \"span_only\""
            ),
            Err(SchemaError::DuplicateRole { .. })
        ));
        assert!(matches!(
            one_arg(
                "type = \"X\"\nrole = \"R\"\nkind = \"span_only\"\n[[event.argument]]\ntype = \"X\"\nrole = \"S\"\nkind = \"span_only\""
            ),
            Err(SchemaError::DuplicateArgumentType { .. })
        ));
        assert!(matches!(
            load_schema("version = \"t\"\n[[event]]\ntype = \"A\"\n[[event]]\ntype = \"A\"\n"),
            Err(SchemaError::DuplicateEventType(_))
        ));
        assert!(matches!(
            load_schema("version = \"t\"\nsubtype_attachment = \"doc\"\n"),
            Err(SchemaError::UnknownAttachment(_))
        ));
        assert!(matches!(
            load_schema("version = 3"),
            Err(SchemaError::Syntax(_))
        ));
    }
}
