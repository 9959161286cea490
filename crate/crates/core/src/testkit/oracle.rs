use std::collections::BTreeMap;

use thiserror::Error;

use crate::standoff::{Document, Fragment};

/// Largest number of events of one type, on either side of a note, the
/// oracle accepts.
pub const ORACLE_MAX_EVENTS: usize = 12;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("{doc_id}: {gold} gold / {pred} predicted {event_type} events exceed the oracle cap")]
    TooLarge {
        doc_id: String,
        event_type: String,
        gold: usize,
        pred: usize,
    },
}

/// A maximum-cardinality matching of gold to predicted events.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OracleMatching {
    pub pairs: Vec<(String, String)>,
}

impl OracleMatching {
    pub fn cardinality(&self) -> usize {
        self.pairs.len()
    }
}

// Deliberately independent of `Span::overlaps`.
fn share_a_character(a: &[Fragment], b: &[Fragment]) -> bool {
    a.iter()
        .any(|x| b.iter().any(|y| x.start.max(y.start) < x.end.min(y.end)))
}

fn augment(u: usize, adj: &[Vec<usize>], seen: &mut [bool], owner: &mut [Option<usize>]) -> bool {
    for &v in &adj[u] {
        if seen[v] {
            continue;
        }
        seen[v] = true;
        if owner[v].is_none_or(|w| augment(w, adj, seen, owner)) {
            owner[v] = Some(u);
            return true;
        }
    }
    false
}

type Side<'d> = Vec<(&'d str, &'d [Fragment])>;

/// Maximum matching on the trigger-equivalence graph (same event type, at
/// least one shared character), by augmenting paths.
pub fn oracle_align(gold: &Document, pred: &Document) -> Result<OracleMatching, OracleError> {
    let mut groups: BTreeMap<&str, (Side<'_>, Side<'_>)> = BTreeMap::new();
    for ev in gold.events() {
        let tb = gold.text_bound(&ev.trigger).expect("trigger resolves");
        groups
            .entry(&ev.event_type)
            .or_default()
            .0
            .push((&ev.id, tb.span.fragments()));
    }
    for ev in pred.events() {
        let tb = pred.text_bound(&ev.trigger).expect("trigger resolves");
        groups
            .entry(&ev.event_type)
            .or_default()
            .1
            .push((&ev.id, tb.span.fragments()));
    }

    let mut out = OracleMatching::default();
    for (event_type, (g, p)) in groups {
        if g.len() > ORACLE_MAX_EVENTS || p.len() > ORACLE_MAX_EVENTS {
            return Err(OracleError::TooLarge {
                doc_id: gold.doc_id().to_string(),
                event_type: event_type.to_string(),
                gold: g.len(),
                pred: p.len(),
            });
        }
        let adj: Vec<Vec<usize>> = g
            .iter()
            .map(|(_, gf)| {
                (0..p.len())
                    .filter(|&j| share_a_character(gf, p[j].1))
                    .collect()
            })
            .collect();
        let mut owner = vec![None; p.len()];
        for u in 0..g.len() {
            let mut seen = vec![false; p.len()];
            augment(u, &adj, &mut seen, &mut owner);
        }
        for (j, o) in owner.iter().enumerate() {
            if let Some(i) = o {
                out.pairs.push((g[*i].0.to_string(), p[j].0.to_string()));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scoring::align_events;
    use crate::standoff::{EventAnnotation, Span};

    fn doc_with(triggers: &[(usize, usize)]) -> Document {
        let mut d = Document::new("d", "x".repeat(40));
        for (i, (s, e)) in triggers.iter().enumerate() {
            let t = format!("T{}", i + 1);
            d.add_text_bound(&t, "Drug", Span::single(*s, *e).unwrap())
                .unwrap();
            d.add_event(EventAnnotation {
                id: format!("E{}", i + 1),
                event_type: "Drug".into(),
                trigger: t,
                arguments: vec![],
            })
            .unwrap();
        }
        d
    }

    #[test]
    fn two_preds_on_one_gold() {
        let m = oracle_align(&doc_with(&[(0, 10)]), &doc_with(&[(0, 4), (5, 9)])).unwrap();
        assert_eq!(m.cardinality(), 1);
    }

    #[test]
    fn beats_greedy_when_greedy_is_suboptimal() {
        let gold = doc_with(&[(0, 10), (8, 12)]);
        let pred = doc_with(&[(0, 9), (1, 3)]);
        assert_eq!(align_events(&gold, &pred).matched_count(), 1);
        assert_eq!(oracle_align(&gold, &pred).unwrap().cardinality(), 2);
    }

    #[test]
    fn cap() {
        let many: Vec<(usize, usize)> = (0..13).map(|i| (i * 3, i * 3 + 2)).collect();
        assert!(matches!(
            oracle_align(&doc_with(&many), &doc_with(&[])),
            Err(OracleError::TooLarge { gold: 13, .. })
        ));
    }
}
