use std::collections::HashMap;
use std::fmt::Write;

use super::{cmp_ids, Document};

/// Renders a document as `.ann` text: text-bounds, then events, then
/// attributes, each in natural id order. Repeated roles within an event get
/// BRAT's numeric suffixes (`Status`, `Status2`, ...).
pub fn serialize_document(doc: &Document) -> String {
    let mut out = String::new();

    let mut tbs: Vec<_> = doc.text_bounds().collect();
    tbs.sort_by(|a, b| cmp_ids(&a.id, &b.id));
    for tb in tbs {
        let text: String = tb
            .covered_text
            .chars()
            .map(|c| if matches!(c, '\n' | '\r' | '\t') { ' ' } else { c })
            .collect();
        let _ = writeln!(out, "{}\t{} {}\t{}", tb.id, tb.label, tb.span, text);
    }

    let mut events: Vec<_> = doc.events().collect();
    events.sort_by(|a, b| cmp_ids(&a.id, &b.id));
    for ev in events {
        let _ = write!(out, "{}\t{}:{}", ev.id, ev.event_type, ev.trigger);
        let mut seen: HashMap<&str, usize> = HashMap::new();
        for arg in &ev.arguments {
            let n = seen.entry(arg.role.as_str()).or_insert(0);
            *n += 1;
            if *n == 1 {
                let _ = write!(out, " {}:{}", arg.role, arg.target);
            } else {
                let _ = write!(out, " {}{}:{}", arg.role, n, arg.target);
            }
        }
        out.push('\n');
    }

    let mut attrs: Vec<_> = doc.attributes().collect();
    attrs.sort_by(|a, b| cmp_ids(&a.id, &b.id));
    for a in attrs {
        let _ = write!(out, "{}\t{} {}", a.id, a.name, a.target);
        if let Some(v) = &a.value {
            let _ = write!(out, " {v}");
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::standoff::{parse_document, EventAnnotation, EventArgument, Span};

    #[test]
    fn empty_document() {
        assert_eq!(serialize_document(&Document::new("d", "text")), "");
    }

    #[test]
    fn single_text_bound_line() {
        let mut doc = Document::new("d", "Denies any cocaine.");
        doc.add_text_bound("T1", "Drug", Span::single(11, 18).unwrap())
            .unwrap();
        assert_eq!(serialize_document(&doc), "T1\tDrug 11 18\tcocaine\n");
    }

    #[test]
    fn repeated_roles_round_trip() {
        let mut doc = Document::new("d", "smokes now and then\nquit");
        doc.add_text_bound("T1", "Tobacco", Span::single(0, 6).unwrap())
            .unwrap();
        doc.add_text_bound("T2", "StatusTime", Span::single(7, 10).unwrap())
            .unwrap();
        // crosses the line break
        doc.add_text_bound("T3", "StatusTime", Span::single(15, 24).unwrap())
            .unwrap();
        doc.add_event(EventAnnotation {
            id: "E1".into(),
            event_type: "Tobacco".into(),
            trigger: "T1".into(),
            arguments: vec![
                EventArgument {
                    role: "Status".into(),
                    target: "T2".into(),
                },
                EventArgument {
                    role: "Status".into(),
                    target: "T3".into(),
                },
            ],
        })
        .unwrap();
        let ann = serialize_document(&doc);
        assert!(ann.contains("E1\tTobacco:T1 Status:T2 Status2:T3\n"));
        assert!(ann.contains("T3\tStatusTime 15 24\tthen quit\n"));
        let back = parse_document(&ann, doc.text(), "d", true).unwrap().document;
        assert_eq!(back, doc);
    }
}
