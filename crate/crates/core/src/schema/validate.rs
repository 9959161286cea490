use std::fmt;

use serde::Serialize;

use super::{AnnotationSchema, SubtypeAttachment};
use crate::standoff::{cmp_ids, Document, ParseError, StandoffError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    ExactlyOneTrigger,
    MalformedAnnotation,
    UnknownEventType,
    UnknownRole,
    ArgumentTypeMismatch,
    MissingRequiredArgument,
    MissingSubtype,
    SubtypeOutOfVocabulary,
    UnexpectedAttribute,
}

impl Rule {
    pub fn id(&self) -> &'static str {
        match self {
            Rule::ExactlyOneTrigger => "exactly-one-trigger",
            Rule::MalformedAnnotation => "malformed-annotation",
            Rule::UnknownEventType => "unknown-event-type",
            Rule::UnknownRole => "unknown-role",
            Rule::ArgumentTypeMismatch => "argument-type-mismatch",
            Rule::MissingRequiredArgument => "missing-required-argument",
            Rule::MissingSubtype => "missing-subtype",
            Rule::SubtypeOutOfVocabulary => "subtype-out-of-vocabulary",
            Rule::UnexpectedAttribute => "unexpected-attribute",
        }
    }

    pub fn description(&self) -> &'static str {
        match self {
            Rule::ExactlyOneTrigger => "each event has exactly one trigger",
            Rule::MalformedAnnotation => "annotation file could not be parsed",
            Rule::UnknownEventType => "event type not declared in the schema",
            Rule::UnknownRole => "argument role not declared for the event type",
            Rule::ArgumentTypeMismatch => "argument label differs from the role's argument type",
            Rule::MissingRequiredArgument => "missing required argument",
            Rule::MissingSubtype => "labeled argument has no subtype attribute",
            Rule::SubtypeOutOfVocabulary => "subtype outside vocabulary",
            Rule::UnexpectedAttribute => "attribute on a target that takes none",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub doc_id: String,
    pub annotation_id: String,
    pub rule: Rule,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}\t{}\t{}\t{}",
            self.doc_id, self.annotation_id, self.rule, self.message
        )
    }
}

/// Reports a document that failed to parse as a violation.
pub fn parse_failure_violation(doc_id: &str, err: &ParseError) -> Violation {
    let (rule, annotation_id) = match &err.error {
        StandoffError::MissingTrigger(id) => (Rule::ExactlyOneTrigger, id.clone()),
        _ => (Rule::MalformedAnnotation, String::new()),
    };
    let message = match rule {
        Rule::ExactlyOneTrigger => format!("line {}: {}: {}", err.line, rule.description(), err.error),
        _ => err.to_string(),
    };
    Violation {
        doc_id: doc_id.to_string(),
        annotation_id,
        rule,
        message,
    }
}

/// Checks a parsed document against the scheme. Violations are ordered by
/// annotation id, then rule.
pub fn validate_document(doc: &Document, schema: &AnnotationSchema) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |annotation_id: &str, rule: Rule, message: String| {
        out.push(Violation {
            doc_id: doc.doc_id().to_string(),
            annotation_id: annotation_id.to_string(),
            rule,
            message,
        })
    };

    for ev in doc.events() {
        let Some(spec) = schema.event(&ev.event_type) else {
            push(
                &ev.id,
                Rule::UnknownEventType,
                format!("event type {} is not declared", ev.event_type),
            );
            continue;
        };
        for arg in &ev.arguments {
            let Some(arg_spec) = spec.argument_by_role(&arg.role) else {
                push(
                    &ev.id,
                    Rule::UnknownRole,
                    format!("role {} is not declared for {}", arg.role, ev.event_type),
                );
                continue;
            };
            // add_event guarantees the target resolves
            let Some(tb) = doc.text_bound(&arg.target) else {
                continue;
            };
            if tb.label != arg_spec.argument_type {
                push(
                    &tb.id,
                    Rule::ArgumentTypeMismatch,
                    format!(
                        "{} fills role {} of {} but is labeled {}, expected {}",
                        tb.id, arg.role, ev.id, tb.label, arg_spec.argument_type
                    ),
                );
                continue;
            }
            if arg_spec.is_labeled() {
                let holder = match schema.attachment {
                    SubtypeAttachment::Argument => tb.id.as_str(),
                    SubtypeAttachment::Event => ev.id.as_str(),
                };
                let name = arg_spec.attribute_name().unwrap_or_default();
                match doc.attribute_value(holder, name) {
                    Some(attr) => match &attr.value {
                        Some(v) if arg_spec.subtypes().contains(v) => {}
                        Some(v) => push(
                            &attr.id,
                            Rule::SubtypeOutOfVocabulary,
                            format!(
                                "{} value {:?} is not one of {:?}",
                                name,
                                v,
                                arg_spec.subtypes()
                            ),
                        ),
                        None => push(
                            &attr.id,
                            Rule::MissingSubtype,
                            format!("{name} on {holder} has no value"),
                        ),
                    },
                    None => push(
                        holder,
                        Rule::MissingSubtype,
                        format!("{} of {} has no {} attribute", tb.id, ev.id, name),
                    ),
                }
            }
        }
        for req in spec.arguments.iter().filter(|a| a.required) {
            let present = ev.arguments.iter().any(|a| {
                a.role == req.role
                    && doc
                        .text_bound(&a.target)
                        .is_some_and(|tb| tb.label == req.argument_type)
            });
            if !present {
                push(
                    &ev.id,
                    Rule::MissingRequiredArgument,
                    format!(
                        "{}: {} event {} has no {}",
                        Rule::MissingRequiredArgument.description(),
                        ev.event_type,
                        ev.id,
                        req.argument_type
                    ),
                );
            }
        }
    }

    for attr in doc.attributes() {
        let meaningful = doc.events().any(|ev| {
            let Some(spec) = schema.event(&ev.event_type) else {
                return false;
            };
            ev.arguments.iter().any(|arg| {
                let Some(arg_spec) = spec.argument_by_role(&arg.role) else {
                    return false;
                };
                if arg_spec.attribute_name() != Some(attr.name.as_str()) {
                    return false;
                }
                match schema.attachment {
                    SubtypeAttachment::Argument => arg.target == attr.target,
                    SubtypeAttachment::Event => ev.id == attr.target,
                }
            })
        });
        if !meaningful {
            push(
                &attr.id,
                Rule::UnexpectedAttribute,
                format!("{} on {} is not a subtype of any labeled argument", attr.name, attr.target),
            );
        }
    }

    out.sort_by(|a, b| {
        cmp_ids(&a.annotation_id, &b.annotation_id)
            .then(a.rule.cmp(&b.rule))
            .then_with(|| a.message.cmp(&b.message))
    });
    out.dedup();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::standoff::parse_document;

    //                   0         1         2         3
    //                   0123456789012345678901234567890123456
    const TEXT: &str = "Drug use: cocaine, past. Now sober.";

    fn doc(ann: &str) -> Document {
        parse_document(ann, TEXT, "n1", true).unwrap().document
    }

    fn rules(v: &[Violation]) -> Vec<Rule> {
        v.iter().map(|x| x.rule).collect()
    }

    #[test]
    fn well_formed_event_is_clean() {
        let d = doc("T1\tDrug 0 4\tDrug\n\
                     T2\tType 10 17\tcocaine\n\
                     T3\tStatusTime 19 23\tpast\n\
                     E1\tDrug:T1 Type:T2 Status:T3\n\
                     A1\tStatusTimeVal T3 past\n");
        assert!(validate_document(&d, &AnnotationSchema::shac()).is_empty());
    }

    #[test]
    fn trigger_only_event_misses_status() {
        let d = doc("T1\tDrug 0 4\tDrug\nE1\tDrug:T1\n");
        let v = validate_document(&d, &AnnotationSchema::shac());
        assert_eq!(rules(&v), vec![Rule::MissingRequiredArgument]);
        assert_eq!(v[0].annotation_id, "E1");
        assert!(v[0].message.contains("StatusTime"));
    }

    #[test]
    fn out_of_vocabulary_subtype() {
        let d = doc("T1\tDrug 0 4\tDrug\n\
                     T3\tStatusTime 19 23\tpast\n\
                     E1\tDrug:T1 Status:T3\n\
                     A1\tStatusTimeVal T3 sometimes\n");
        let v = validate_document(&d, &AnnotationSchema::shac());
        assert_eq!(rules(&v), vec![Rule::SubtypeOutOfVocabulary]);
        assert_eq!(v[0].annotation_id, "A1");
    }

    #[test]
    fn structural_rules() {
        let d = doc("T1\tDrug 0 4\tDrug\n\
                     T2\tType 10 17\tcocaine\n\
                     T3\tStatusTime 19 23\tpast\n\
                     T4\tGambling 25 28\tNow\n\
                     E1\tDrug:T1 Status:T2 Dose:T3\n\
                     E2\tGambling:T4\n\
                     A1\tStatusTimeVal T3 past\n\
                     A2\tNegated T1\n");
        let v = validate_document(&d, &AnnotationSchema::shac());
        let got: Vec<_> = v
            .iter()
            .map(|x| (x.annotation_id.as_str(), x.rule))
            .collect();
        assert_eq!(
            got,
            vec![
                ("A1", Rule::UnexpectedAttribute),
                ("A2", Rule::UnexpectedAttribute),
                ("E1", Rule::UnknownRole),
                ("E1", Rule::MissingRequiredArgument),
                ("E2", Rule::UnknownEventType),
                ("T2", Rule::ArgumentTypeMismatch),
            ]
        );
    }

    #[test]
    fn missing_subtype_attribute() {
        let d = doc("T1\tDrug 0 4\tDrug\nT3\tStatusTime 19 23\tpast\nE1\tDrug:T1 Status:T3\n");
        let v = validate_document(&d, &AnnotationSchema::shac());
        assert_eq!(rules(&v), vec![Rule::MissingSubtype]);
        assert_eq!(v[0].annotation_id, "T3");
    }

    #[test]
    fn event_attachment() {
        let mut schema = AnnotationSchema::shac();
        schema.attachment = SubtypeAttachment::Event;
        let d = doc("T1\tDrug 0 4\tDrug\n\
                     T3\tStatusTime 19 23\tpast\n\
                     E1\tDrug:T1 Status:T3\n\
                     A1\tStatusTimeVal E1 past\n");
        assert!(validate_document(&d, &schema).is_empty());
        assert_eq!(
            rules(&validate_document(&d, &AnnotationSchema::shac())),
            vec![Rule::UnexpectedAttribute, Rule::MissingSubtype]
        );
    }

    #[test]
    fn trigger_less_event_maps_to_rule() {
        let err = parse_document("E1\t\n", TEXT, "n1", false).unwrap_err();
        let v = parse_failure_violation("n1", &err);
        assert_eq!(v.rule, Rule::ExactlyOneTrigger);
        assert_eq!(v.annotation_id, "E1");
        assert!(v.message.contains("exactly one trigger"));
    }
}
