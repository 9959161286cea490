//! Slot-filling scoring of predicted events against gold events.
//!
//! Events are aligned per note by trigger equivalence (same type, any
//! character overlap). Within an aligned pair, span-only arguments must
//! match their gold counterpart's span exactly, while labeled arguments are
//! compared on argument type and subtype only. Arguments of unaligned events
//! count as misses (gold) or false alarms (predicted).

mod align;
mod metrics;

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::schema::AnnotationSchema;
use crate::standoff::{Corpus, Document, EventAnnotation, Span};

pub use align::{align_events, triggers_equivalent, EventAlignment};
pub(crate) use metrics::round6;
pub use metrics::{MetricReport, Metrics, ReportRow, Section};

/// Rendering of the sentinel subtype used for labeled arguments that carry
/// no subtype attribute.
pub const MISSING_SUBTYPE: &str = "<missing>";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScoringError {
    #[error("document id mismatch: gold {gold}, predicted {pred}")]
    DocIdMismatch { gold: String, pred: String },
    #[error("predicted document {0} has no gold counterpart")]
    UnknownPredictedDocument(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PhenomenonKind {
    Trigger,
    LabeledArg,
    SpanOnlyArg,
}

impl PhenomenonKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            PhenomenonKind::Trigger => "trigger",
            PhenomenonKind::LabeledArg => "labeled_arg",
            PhenomenonKind::SpanOnlyArg => "span_only_arg",
        }
    }
}

impl fmt::Display for PhenomenonKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Subtype of a labeled argument. `Missing` never equals a real label.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Subtype {
    Label(String),
    Missing,
}

impl Subtype {
    pub fn label(s: impl Into<String>) -> Self {
        Subtype::Label(s.into())
    }
}

impl fmt::Display for Subtype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Subtype::Label(s) => f.write_str(s),
            Subtype::Missing => f.write_str(MISSING_SUBTYPE),
        }
    }
}

/// What a tally is counted under: a trigger of an event type, a span-only
/// argument type of an event type, or one subtype of a labeled argument.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PhenomenonKey {
    event_type: String,
    kind: PhenomenonKind,
    argument_type: Option<String>,
    subtype: Option<Subtype>,
}

impl PhenomenonKey {
    pub fn trigger(event_type: impl Into<String>) -> Self {
        PhenomenonKey {
            event_type: event_type.into(),
            kind: PhenomenonKind::Trigger,
            argument_type: None,
            subtype: None,
        }
    }

    pub fn span_only(event_type: impl Into<String>, argument_type: impl Into<String>) -> Self {
        PhenomenonKey {
            event_type: event_type.into(),
            kind: PhenomenonKind::SpanOnlyArg,
            argument_type: Some(argument_type.into()),
            subtype: None,
        }
    }

    pub fn labeled(
        event_type: impl Into<String>,
        argument_type: impl Into<String>,
        subtype: Subtype,
    ) -> Self {
        PhenomenonKey {
            event_type: event_type.into(),
            kind: PhenomenonKind::LabeledArg,
            argument_type: Some(argument_type.into()),
            subtype: Some(subtype),
        }
    }

    pub fn kind(&self) -> PhenomenonKind {
        self.kind
    }

    pub fn event_type(&self) -> &str {
        &self.event_type
    }

    pub fn argument_type(&self) -> Option<&str> {
        self.argument_type.as_deref()
    }

    pub fn subtype(&self) -> Option<&Subtype> {
        self.subtype.as_ref()
    }
}

impl fmt::Display for PhenomenonKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.kind, self.event_type)?;
        if let Some(a) = &self.argument_type {
            write!(f, "/{a}")?;
        }
        if let Some(s) = &self.subtype {
            write!(f, "/{s}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize)]
pub struct Counts {
    pub tp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub fp: u64,
}

impl Counts {
    pub const fn new(tp: u64, fn_: u64, fp: u64) -> Self {
        Counts { tp, fn_, fp }
    }

    pub fn is_zero(&self) -> bool {
        self.tp == 0 && self.fn_ == 0 && self.fp == 0
    }

    /// Gold occurrences: `tp + fn`.
    pub fn gold(&self) -> u64 {
        self.tp + self.fn_
    }

    /// Predicted occurrences: `tp + fp`.
    pub fn predicted(&self) -> u64 {
        self.tp + self.fp
    }

    /// Micro-averaged F1 of these counts, 0 when undefined.
    pub fn f1(&self) -> f64 {
        Metrics::from_counts(*self).f1
    }
}

impl Add for Counts {
    type Output = Counts;

    fn add(self, o: Counts) -> Counts {
        Counts::new(self.tp + o.tp, self.fn_ + o.fn_, self.fp + o.fp)
    }
}

impl AddAssign for Counts {
    fn add_assign(&mut self, o: Counts) {
        *self = *self + o;
    }
}

/// Tallies keyed by phenomenon. Zero tallies are never stored, so two
/// `ScoreCounts` compare equal iff every key has the same counts.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ScoreCounts(BTreeMap<PhenomenonKey, Counts>);

impl ScoreCounts {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, key: PhenomenonKey, c: Counts) {
        if !c.is_zero() {
            *self.0.entry(key).or_default() += c;
        }
    }

    pub fn get(&self, key: &PhenomenonKey) -> Counts {
        self.0.get(key).copied().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&PhenomenonKey, &Counts)> {
        self.0.iter()
    }

    pub fn keys(&self) -> impl Iterator<Item = &PhenomenonKey> {
        self.0.keys()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Sum over all keys: triggers and arguments together.
    pub fn total(&self) -> Counts {
        self.0.values().fold(Counts::default(), |a, b| a + *b)
    }

    pub fn restrict(&self, mut keep: impl FnMut(&PhenomenonKey) -> bool) -> ScoreCounts {
        ScoreCounts(
            self.0
                .iter()
                .filter(|(k, _)| keep(k))
                .map(|(k, c)| (k.clone(), *c))
                .collect(),
        )
    }

    pub fn merge(&mut self, other: &ScoreCounts) {
        for (k, c) in &other.0 {
            self.add(k.clone(), *c);
        }
    }

    pub fn report(&self) -> MetricReport {
        MetricReport::from_counts(self)
    }
}

impl AddAssign<&ScoreCounts> for ScoreCounts {
    fn add_assign(&mut self, other: &ScoreCounts) {
        self.merge(other);
    }
}

impl FromIterator<(PhenomenonKey, Counts)> for ScoreCounts {
    fn from_iter<I: IntoIterator<Item = (PhenomenonKey, Counts)>>(iter: I) -> Self {
        let mut out = ScoreCounts::new();
        for (k, c) in iter {
            out.add(k, c);
        }
        out
    }
}

/// A gold event and the predicted event aligned to it.
#[derive(Debug, Clone, Copy)]
pub struct EventPair<'a> {
    pub gold_doc: &'a Document,
    pub gold: &'a EventAnnotation,
    pub pred_doc: &'a Document,
    pub pred: &'a EventAnnotation,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum SlotValue {
    Span(Span),
    Subtype(Subtype),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct Slot {
    argument_type: String,
    value: SlotValue,
}

impl Slot {
    fn key(&self, event_type: &str) -> PhenomenonKey {
        match &self.value {
            SlotValue::Span(_) => PhenomenonKey::span_only(event_type, &self.argument_type),
            SlotValue::Subtype(s) => {
                PhenomenonKey::labeled(event_type, &self.argument_type, s.clone())
            }
        }
    }
}

/// Argument slots of an event. Argument types the schema does not declare
/// as labeled are scored as span-only.
fn event_slots(doc: &Document, ev: &EventAnnotation, schema: &AnnotationSchema) -> Vec<Slot> {
    ev.arguments
        .iter()
        .filter_map(|arg| {
            let tb = doc.text_bound(&arg.target)?;
            let value = match schema.argument(&ev.event_type, &tb.label) {
                Some(spec) if spec.is_labeled() => SlotValue::Subtype(
                    schema
                        .subtype_of(doc, ev, &tb.id, spec)
                        .map(Subtype::label)
                        .unwrap_or_else(|| {
                            log::debug!(
                                "{}: {} of {} has no subtype",
                                doc.doc_id(),
                                tb.id,
                                ev.id
                            );
                            Subtype::Missing
                        }),
                ),
                _ => SlotValue::Span(tb.span.clone()),
            };
            Some(Slot {
                argument_type: tb.label.clone(),
                value,
            })
        })
        .collect()
}

/// Multiset matching of gold against predicted slots.
fn match_slots(event_type: &str, gold: Vec<Slot>, pred: Vec<Slot>) -> ScoreCounts {
    let mut tally: BTreeMap<Slot, (u64, u64)> = BTreeMap::new();
    for s in gold {
        tally.entry(s).or_default().0 += 1;
    }
    for s in pred {
        tally.entry(s).or_default().1 += 1;
    }
    tally
        .into_iter()
        .map(|(slot, (g, p))| {
            let tp = g.min(p);
            (slot.key(event_type), Counts::new(tp, g - tp, p - tp))
        })
        .collect()
}

fn pair_slots(
    pair: &EventPair<'_>,
    schema: &AnnotationSchema,
    labeled: bool,
) -> (Vec<Slot>, Vec<Slot>) {
    let keep = |s: &Slot| matches!(s.value, SlotValue::Subtype(_)) == labeled;
    let gold = event_slots(pair.gold_doc, pair.gold, schema)
        .into_iter()
        .filter(keep)
        .collect();
    let pred = event_slots(pair.pred_doc, pair.pred, schema)
        .into_iter()
        .filter(keep)
        .collect();
    (gold, pred)
}

/// Exact-match scoring of span-only arguments: argument type plus the full
/// fragment list must agree.
pub fn score_span_only_args(pair: &EventPair<'_>, schema: &AnnotationSchema) -> ScoreCounts {
    let (g, p) = pair_slots(pair, schema, false);
    match_slots(&pair.gold.event_type, g, p)
}

/// Span-agnostic scoring of labeled arguments: argument type plus subtype.
pub fn score_labeled_args(pair: &EventPair<'_>, schema: &AnnotationSchema) -> ScoreCounts {
    let (g, p) = pair_slots(pair, schema, true);
    match_slots(&pair.gold.event_type, g, p)
}

/// Every slot of an unaligned event, counted as `fn` (gold) or `fp` (pred).
fn unaligned_counts(
    doc: &Document,
    ev: &EventAnnotation,
    schema: &AnnotationSchema,
    gold_side: bool,
) -> ScoreCounts {
    let one = if gold_side {
        Counts::new(0, 1, 0)
    } else {
        Counts::new(0, 0, 1)
    };
    let mut out = ScoreCounts::new();
    out.add(PhenomenonKey::trigger(&ev.event_type), one);
    for slot in event_slots(doc, ev, schema) {
        out.add(slot.key(&ev.event_type), one);
    }
    out
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DocumentScore {
    pub counts: ScoreCounts,
    pub alignment: EventAlignment,
}

pub fn score_document(
    gold: &Document,
    pred: &Document,
    schema: &AnnotationSchema,
) -> Result<DocumentScore, ScoringError> {
    if gold.doc_id() != pred.doc_id() {
        return Err(ScoringError::DocIdMismatch {
            gold: gold.doc_id().to_string(),
            pred: pred.doc_id().to_string(),
        });
    }
    let alignment = align_events(gold, pred);
    let mut counts = ScoreCounts::new();
    for (g, p) in &alignment.matched {
        let pair = EventPair {
            gold_doc: gold,
            gold: gold.event(g).expect("aligned gold event"),
            pred_doc: pred,
            pred: pred.event(p).expect("aligned predicted event"),
        };
        counts.add(
            PhenomenonKey::trigger(&pair.gold.event_type),
            Counts::new(1, 0, 0),
        );
        counts += &score_span_only_args(&pair, schema);
        counts += &score_labeled_args(&pair, schema);
    }
    for g in &alignment.unmatched_gold {
        counts += &unaligned_counts(gold, gold.event(g).expect("gold event"), schema, true);
    }
    for p in &alignment.unmatched_pred {
        counts += &unaligned_counts(pred, pred.event(p).expect("predicted event"), schema, false);
    }
    Ok(DocumentScore { counts, alignment })
}

/// Per-note results plus their sum.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CorpusScore {
    pub documents: BTreeMap<String, DocumentScore>,
    pub totals: ScoreCounts,
}

impl CorpusScore {
    pub fn report(&self) -> MetricReport {
        self.totals.report()
    }
}

/// Scores every gold note; notes without a prediction are scored against an
/// empty prediction.
pub fn score_corpus(
    gold: &Corpus,
    pred: &Corpus,
    schema: &AnnotationSchema,
) -> Result<CorpusScore, ScoringError> {
    if let Some(id) = pred.doc_ids().find(|id| gold.get(id).is_none()) {
        return Err(ScoringError::UnknownPredictedDocument(id.to_string()));
    }
    let golds: Vec<&Document> = gold.documents().collect();
    let per_doc: Vec<(String, DocumentScore)> = golds
        .into_par_iter()
        .map(|g| {
            let score = match pred.get(g.doc_id()) {
                Some(p) => score_document(g, p, schema)?,
                None => score_document(g, &g.empty_like(), schema)?,
            };
            Ok((g.doc_id().to_string(), score))
        })
        .collect::<Result<_, ScoringError>>()?;
    let mut totals = ScoreCounts::new();
    for (_, s) in &per_doc {
        totals += &s.counts;
    }
    Ok(CorpusScore {
        documents: per_doc.into_iter().collect(),
        totals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::standoff::parse_document;

    //                   0         1         2         3         4
    //                   01234567890123456789012345678901234567890123456
    const TEXT: &str = "Hx IVDU, quit. Recent cocaine use for 2 weeks.";

    fn doc(ann: &str) -> Document {
        parse_document(ann, TEXT, "n1", true).unwrap().document
    }

    fn schema() -> AnnotationSchema {
        AnnotationSchema::shac()
    }

    fn pair_counts(gold: &Document, pred: &Document) -> (ScoreCounts, ScoreCounts) {
        let g = gold.event("E1").unwrap();
        let p = pred.event("E1").unwrap();
        let pair = EventPair {
            gold_doc: gold,
            gold: g,
            pred_doc: pred,
            pred: p,
        };
        (
            score_span_only_args(&pair, &schema()),
            score_labeled_args(&pair, &schema()),
        )
    }

    const BASE: &str = "T1\tDrug 22 29\tcocaine\n\
                        T2\tType 22 29\tcocaine\n\
                        T3\tStatusTime 15 21\tRecent\n\
                        T4\tDuration 34 45\tfor 2 weeks\n\
                        E1\tDrug:T1 Type:T2 Status:T3 Duration:T4\n\
                        A1\tStatusTimeVal T3 current\n";

    #[test]
    fn span_only_exact_and_off_by_one() {
        let gold = doc(BASE);
        let (span, _) = pair_counts(&gold, &gold);
        assert_eq!(span.get(&PhenomenonKey::span_only("Drug", "Type")), Counts::new(1, 0, 0));

        let pred = doc(&BASE.replace("T2\tType 22 29\tcocaine", "T2\tType 22 30\tcocaine "));
        let (span, labeled) = pair_counts(&gold, &pred);
        assert_eq!(span.get(&PhenomenonKey::span_only("Drug", "Type")), Counts::new(0, 1, 1));
        assert_eq!(span.get(&PhenomenonKey::span_only("Drug", "Duration")), Counts::new(1, 0, 0));
        assert_eq!(labeled.total(), Counts::new(1, 0, 0));
    }

    #[test]
    fn span_only_multiset() {
        let gold = doc("T1\tDrug 22 29\tcocaine\n\
                        T4\tDuration 34 45\tfor 2 weeks\n\
                        T5\tDuration 38 45\t2 weeks\n\
                        E1\tDrug:T1 Duration:T4 Duration2:T5\n");
        let pred = doc("T1\tDrug 22 29\tcocaine\nT4\tDuration 34 45\tfor 2 weeks\nE1\tDrug:T1 Duration:T4\n");
        let (span, _) = pair_counts(&gold, &pred);
        assert_eq!(span.get(&PhenomenonKey::span_only("Drug", "Duration")), Counts::new(1, 1, 0));
    }

    #[test]
    fn labeled_ignores_span() {
        let gold = doc(&BASE.replace("T3\tStatusTime 15 21\tRecent", "T3\tStatusTime 30 33\tuse"));
        let pred = doc(BASE);
        let (_, labeled) = pair_counts(&gold, &pred);
        let key = PhenomenonKey::labeled("Drug", "StatusTime", Subtype::label("current"));
        assert_eq!(labeled.get(&key), Counts::new(1, 0, 0));
        assert_eq!(labeled.len(), 1);
    }

    #[test]
    fn labeled_subtype_mismatch() {
        let gold = doc(&BASE.replace("T3 current", "T3 past"));
        let pred = doc(BASE);
        let (_, labeled) = pair_counts(&gold, &pred);
        assert_eq!(
            labeled.get(&PhenomenonKey::labeled("Drug", "StatusTime", Subtype::label("past"))),
            Counts::new(0, 1, 0)
        );
        assert_eq!(
            labeled.get(&PhenomenonKey::labeled("Drug", "StatusTime", Subtype::label("current"))),
            Counts::new(0, 0, 1)
        );
    }

    #[test]
    fn missing_subtype_never_matches() {
        let gold = doc(BASE);
        let pred = doc(&BASE.replace("A1\tStatusTimeVal T3 current\n", ""));
        let (_, labeled) = pair_counts(&gold, &pred);
        assert_eq!(
            labeled.get(&PhenomenonKey::labeled("Drug", "StatusTime", Subtype::Missing)),
            Counts::new(0, 0, 1)
        );
        assert_eq!(
            labeled.get(&PhenomenonKey::labeled("Drug", "StatusTime", Subtype::label("current"))),
            Counts::new(0, 1, 0)
        );
    }

    #[test]
    fn extra_living_status_label_is_fp() {
        let text = "Homeless, living in shelter.";
        let gold = parse_document(
            "T1\tLivingStatus 10 16\tliving\nE1\tLivingStatus:T1\n",
            text,
            "n",
            true,
        )
        .unwrap()
        .document;
        let pred = parse_document(
            "T1\tLivingStatus 10 16\tliving\nT2\tTypeLiving 0 8\tHomeless\nE1\tLivingStatus:T1 Type:T2\nA1\tTypeLivingVal T2 homeless\n",
            text,
            "n",
            true,
        )
        .unwrap()
        .document;
        let (_, labeled) = pair_counts(&gold, &pred);
        assert_eq!(
            labeled.get(&PhenomenonKey::labeled("LivingStatus", "TypeLiving", Subtype::label("homeless"))),
            Counts::new(0, 0, 1)
        );
    }

    #[test]
    fn document_scoring_identity_and_empty() {
        let gold = doc(BASE);
        let s = score_document(&gold, &gold, &schema()).unwrap();
        assert!(s.counts.iter().all(|(_, c)| c.fn_ == 0 && c.fp == 0));
        assert_eq!(s.counts.total(), Counts::new(4, 0, 0));

        let s = score_document(&gold, &gold.empty_like(), &schema()).unwrap();
        assert_eq!(s.counts.total(), Counts::new(0, 4, 0));

        let other = Document::new("n2", TEXT);
        assert!(matches!(
            score_document(&gold, &other, &schema()),
            Err(ScoringError::DocIdMismatch { .. })
        ));
    }

    #[test]
    fn corpus_rejects_unknown_predictions() {
        let gold: Corpus = [doc(BASE)].into_iter().collect();
        let pred: Corpus = [Document::new("zz", TEXT)].into_iter().collect();
        assert_eq!(
            score_corpus(&gold, &pred, &schema()).unwrap_err(),
            ScoringError::UnknownPredictedDocument("zz".into())
        );
    }
}
