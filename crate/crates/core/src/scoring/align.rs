use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::Serialize;

use crate::standoff::{cmp_ids, Document, EventAnnotation, Span};

/// Any-overlap trigger equivalence: same event type and at least one shared
/// character.
pub fn triggers_equivalent(
    gold_type: &str,
    gold_span: &Span,
    pred_type: &str,
    pred_span: &Span,
) -> bool {
    gold_type == pred_type && gold_span.overlaps(pred_span)
}

/// One-to-one pairing of gold and predicted events within a document.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct EventAlignment {
    /// `(gold event id, predicted event id)`, grouped by event type.
    pub matched: Vec<(String, String)>,
    pub unmatched_gold: Vec<String>,
    pub unmatched_pred: Vec<String>,
}

impl EventAlignment {
    pub fn matched_count(&self) -> usize {
        self.matched.len()
    }
}

pub(crate) fn trigger_span<'d>(doc: &'d Document, ev: &EventAnnotation) -> &'d Span {
    &doc.text_bound(&ev.trigger)
        .expect("document invariant: event triggers resolve")
        .span
}

/// Document order of events: trigger start, then trigger end, then id.
pub(crate) fn document_order(doc: &Document, a: &EventAnnotation, b: &EventAnnotation) -> Ordering {
    let sa = trigger_span(doc, a);
    let sb = trigger_span(doc, b);
    sa.start()
        .cmp(&sb.start())
        .then(sa.end().cmp(&sb.end()))
        .then_with(|| cmp_ids(&a.id, &b.id))
}

fn by_type(doc: &Document) -> BTreeMap<&str, Vec<&EventAnnotation>> {
    let mut groups: BTreeMap<&str, Vec<&EventAnnotation>> = BTreeMap::new();
    for ev in doc.events() {
        groups.entry(ev.event_type.as_str()).or_default().push(ev);
    }
    for evs in groups.values_mut() {
        evs.sort_by(|a, b| document_order(doc, a, b));
    }
    groups
}

/// Greedy alignment per event type: gold events are visited in document
/// order and each takes the first still-unmatched equivalent predicted event
/// in document order.
pub fn align_events(gold: &Document, pred: &Document) -> EventAlignment {
    let gold_groups = by_type(gold);
    let mut pred_groups = by_type(pred);
    let mut out = EventAlignment::default();

    for (event_type, gold_events) in &gold_groups {
        let preds = pred_groups.remove(event_type).unwrap_or_default();
        let mut used = vec![false; preds.len()];
        for g in gold_events {
            let gs = trigger_span(gold, g);
            let hit = preds.iter().enumerate().position(|(i, p)| {
                !used[i] && triggers_equivalent(&g.event_type, gs, &p.event_type, trigger_span(pred, p))
            });
            match hit {
                Some(i) => {
                    used[i] = true;
                    out.matched.push((g.id.clone(), preds[i].id.clone()));
                }
                None => out.unmatched_gold.push(g.id.clone()),
            }
        }
        out.unmatched_pred.extend(
            preds
                .iter()
                .zip(&used)
                .filter(|(_, u)| !**u)
                .map(|(p, _)| p.id.clone()),
        );
    }
    for preds in pred_groups.into_values() {
        out.unmatched_pred.extend(preds.into_iter().map(|p| p.id.clone()));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::standoff::EventAnnotation;

    fn doc_with(triggers: &[(&str, usize, usize)]) -> Document {
        let mut d = Document::new("d", "x".repeat(40));
        for (i, (ty, s, e)) in triggers.iter().enumerate() {
            let t = format!("T{}", i + 1);
            d.add_text_bound(&t, *ty, Span::single(*s, *e).unwrap())
                .unwrap();
            d.add_event(EventAnnotation {
                id: format!("E{}", i + 1),
                event_type: ty.to_string(),
                trigger: t,
                arguments: vec![],
            })
            .unwrap();
        }
        d
    }

    #[test]
    fn equivalence_examples() {
        let a = Span::single(10, 17).unwrap();
        assert!(triggers_equivalent("Drug", &a, "Drug", &Span::single(10, 21).unwrap()));
        assert!(!triggers_equivalent("Drug", &a, "Alcohol", &a));
        assert!(!triggers_equivalent("Drug", &a, "Drug", &Span::single(17, 21).unwrap()));
    }

    #[test]
    fn identical_documents_fully_matched() {
        let d = doc_with(&[("Drug", 0, 5), ("Drug", 10, 15), ("Alcohol", 20, 25)]);
        let a = align_events(&d, &d);
        assert_eq!(a.matched_count(), 3);
        assert!(a.matched.iter().all(|(g, p)| g == p));
        assert!(a.unmatched_gold.is_empty() && a.unmatched_pred.is_empty());
    }

    #[test]
    fn only_one_overlap() {
        let gold = doc_with(&[("Drug", 0, 5), ("Drug", 20, 25)]);
        let pred = doc_with(&[("Drug", 3, 8)]);
        let a = align_events(&gold, &pred);
        assert_eq!(a.matched, vec![("E1".to_string(), "E1".to_string())]);
        assert_eq!(a.unmatched_gold, vec!["E2".to_string()]);
    }

    #[test]
    fn first_pred_in_order_wins() {
        let gold = doc_with(&[("Drug", 0, 10)]);
        // E1 listed second in document order
        let pred = doc_with(&[("Drug", 5, 9), ("Drug", 0, 4)]);
        let a = align_events(&gold, &pred);
        assert_eq!(a.matched, vec![("E1".to_string(), "E2".to_string())]);
        assert_eq!(a.unmatched_pred, vec!["E1".to_string()]);
    }

    #[test]
    fn types_never_cross() {
        let gold = doc_with(&[("Drug", 0, 10)]);
        let pred = doc_with(&[("Alcohol", 0, 10)]);
        let a = align_events(&gold, &pred);
        assert!(a.matched.is_empty());
        assert_eq!(a.unmatched_gold.len(), 1);
        assert_eq!(a.unmatched_pred.len(), 1);
    }
}
