//! Corpus statistics and error-analysis views over a scored corpus.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Serialize, Serializer};

use crate::schema::AnnotationSchema;
use crate::scoring::{
    round6, score_corpus, CorpusScore, Counts, Metrics, PhenomenonKind, ScoreCounts, ScoringError,
    Subtype,
};
use crate::standoff::{Corpus, Document, Source, Split};

fn avg(total: u64, notes: usize) -> f64 {
    if notes == 0 {
        0.0
    } else {
        total as f64 / notes as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartitionCount {
    pub source: Source,
    pub split: Split,
    pub notes: usize,
    pub events: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventTypeStats {
    pub event_type: String,
    pub events: u64,
    /// Notes with at least one event of this type.
    pub notes_with_events: usize,
    pub avg_per_note: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SubtypeFrequency {
    pub event_type: String,
    pub argument_type: String,
    pub subtype: String,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusStats {
    pub notes: usize,
    pub events: u64,
    pub partitions: Vec<PartitionCount>,
    pub event_types: Vec<EventTypeStats>,
    pub subtypes: Vec<SubtypeFrequency>,
}

/// Labeled-argument subtypes carried by a document's events.
fn gold_subtypes(doc: &Document, schema: &AnnotationSchema) -> Vec<(String, String, Subtype)> {
    let mut out = Vec::new();
    for ev in doc.events() {
        for arg in &ev.arguments {
            let Some(tb) = doc.text_bound(&arg.target) else {
                continue;
            };
            let Some(spec) = schema.argument(&ev.event_type, &tb.label) else {
                continue;
            };
            if spec.is_labeled() {
                let st = schema
                    .subtype_of(doc, ev, &tb.id, spec)
                    .map(Subtype::label)
                    .unwrap_or(Subtype::Missing);
                out.push((ev.event_type.clone(), tb.label.clone(), st));
            }
        }
    }
    out
}

/// Note, event and subtype counts. Every event type the schema declares is
/// listed, with zeros when absent.
pub fn corpus_stats(corpus: &Corpus, schema: &AnnotationSchema) -> CorpusStats {
    let mut partitions: BTreeMap<(Source, Split), (usize, u64)> = BTreeMap::new();
    let mut events: BTreeMap<String, (u64, usize)> = schema
        .event_types()
        .map(|t| (t.to_string(), (0, 0)))
        .collect();
    let mut subtypes: BTreeMap<(String, String, Subtype), u64> = BTreeMap::new();
    let mut total_events = 0;

    for doc in corpus.documents() {
        let meta = doc.metadata();
        let p = partitions.entry((meta.source, meta.split)).or_default();
        p.0 += 1;
        p.1 += doc.event_count() as u64;
        total_events += doc.event_count() as u64;

        let mut per_type: BTreeMap<&str, u64> = BTreeMap::new();
        for ev in doc.events() {
            *per_type.entry(&ev.event_type).or_default() += 1;
        }
        for (t, n) in per_type {
            let e = events.entry(t.to_string()).or_default();
            e.0 += n;
            e.1 += 1;
        }
        for key in gold_subtypes(doc, schema) {
            *subtypes.entry(key).or_default() += 1;
        }
    }

    let notes = corpus.len();
    CorpusStats {
        notes,
        events: total_events,
        partitions: partitions
            .into_iter()
            .map(|((source, split), (n, e))| PartitionCount {
                source,
                split,
                notes: n,
                events: e,
            })
            .collect(),
        event_types: events
            .into_iter()
            .map(|(event_type, (n, with))| EventTypeStats {
                event_type,
                events: n,
                notes_with_events: with,
                avg_per_note: avg(n, notes),
            })
            .collect(),
        subtypes: subtypes
            .into_iter()
            .map(|((event_type, argument_type, st), count)| SubtypeFrequency {
                event_type,
                argument_type,
                subtype: st.to_string(),
                count,
            })
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubtypeRow {
    pub event_type: String,
    pub argument_type: String,
    pub subtype: String,
    #[serde(flatten)]
    pub metrics: Metrics,
    /// Gold occurrences of this subtype (`tp + fn`).
    pub gold: u64,
    #[serde(serialize_with = "round6")]
    pub avg_gold_per_note: f64,
}

/// Labeled-argument rows of a scored corpus, ordered by event type, argument
/// type and subtype. Subtypes seen in neither gold nor predictions have no
/// row.
pub fn subtype_rows(score: &CorpusScore) -> Vec<SubtypeRow> {
    let notes = score.documents.len();
    score
        .totals
        .iter()
        .filter(|(k, _)| k.kind() == PhenomenonKind::LabeledArg)
        .map(|(k, c)| SubtypeRow {
            event_type: k.event_type().to_string(),
            argument_type: k.argument_type().unwrap_or_default().to_string(),
            subtype: k.subtype().map(|s| s.to_string()).unwrap_or_default(),
            metrics: Metrics::from_counts(*c),
            gold: c.gold(),
            avg_gold_per_note: avg(c.gold(), notes),
        })
        .collect()
}

pub fn subtype_breakdown(
    gold: &Corpus,
    pred: &Corpus,
    schema: &AnnotationSchema,
) -> Result<Vec<SubtypeRow>, ScoringError> {
    Ok(subtype_rows(&score_corpus(gold, pred, schema)?))
}

/// Number of gold events of one type in one note. `Zero` holds predictions
/// made on notes without gold events of the type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DensityBucket {
    Zero,
    One,
    Two,
    ThreeOrMore,
}

impl DensityBucket {
    pub fn from_count(n: usize) -> Self {
        match n {
            0 => DensityBucket::Zero,
            1 => DensityBucket::One,
            2 => DensityBucket::Two,
            _ => DensityBucket::ThreeOrMore,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            DensityBucket::Zero => "0",
            DensityBucket::One => "1",
            DensityBucket::Two => "2",
            DensityBucket::ThreeOrMore => "3+",
        }
    }
}

impl fmt::Display for DensityBucket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl Serialize for DensityBucket {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityRow {
    pub event_type: String,
    pub bucket: DensityBucket,
    /// `None` is the row over all phenomenon kinds.
    pub kind: Option<PhenomenonKind>,
    pub notes: usize,
    pub gold_events: u64,
    #[serde(flatten)]
    pub metrics: Metrics,
}

#[derive(Default)]
struct BucketAcc {
    notes: usize,
    gold_events: u64,
    counts: ScoreCounts,
}

/// Per event type, notes are bucketed by their gold event count of that
/// type and the note's counts for that type are summed per bucket.
///
/// Uses the alignment already computed in `score`; `gold` only supplies the
/// per-note event counts.
pub fn density_rows(score: &CorpusScore, gold: &Corpus) -> Vec<DensityRow> {
    let mut acc: BTreeMap<(String, DensityBucket), BucketAcc> = BTreeMap::new();
    for (doc_id, doc_score) in &score.documents {
        let mut gold_per_type: BTreeMap<&str, usize> = BTreeMap::new();
        if let Some(doc) = gold.get(doc_id) {
            for ev in doc.events() {
                *gold_per_type.entry(&ev.event_type).or_default() += 1;
            }
        }
        let mut types: Vec<&str> = gold_per_type.keys().copied().collect();
        types.extend(doc_score.counts.keys().map(|k| k.event_type()));
        types.sort_unstable();
        types.dedup();
        for t in types {
            let n = gold_per_type.get(t).copied().unwrap_or(0);
            let a = acc
                .entry((t.to_string(), DensityBucket::from_count(n)))
                .or_default();
            a.notes += 1;
            a.gold_events += n as u64;
            a.counts += &doc_score.counts.restrict(|k| k.event_type() == t);
        }
    }

    let mut rows = Vec::new();
    for ((event_type, bucket), a) in acc {
        rows.push(DensityRow {
            event_type: event_type.clone(),
            bucket,
            kind: None,
            notes: a.notes,
            gold_events: a.gold_events,
            metrics: Metrics::from_counts(a.counts.total()),
        });
        for kind in [
            PhenomenonKind::Trigger,
            PhenomenonKind::LabeledArg,
            PhenomenonKind::SpanOnlyArg,
        ] {
            let c: Counts = a.counts.restrict(|k| k.kind() == kind).total();
            if c.is_zero() {
                continue;
            }
            rows.push(DensityRow {
                event_type: event_type.clone(),
                bucket,
                kind: Some(kind),
                notes: a.notes,
                gold_events: a.gold_events,
                metrics: Metrics::from_counts(c),
            });
        }
    }
    rows
}

pub fn density_breakdown(
    gold: &Corpus,
    pred: &Corpus,
    schema: &AnnotationSchema,
) -> Result<Vec<DensityRow>, ScoringError> {
    Ok(density_rows(&score_corpus(gold, pred, schema)?, gold))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bucket_boundaries() {
        let labels: Vec<_> = (0..6).map(|n| DensityBucket::from_count(n).label()).collect();
        assert_eq!(labels, vec!["0", "1", "2", "3+", "3+", "3+"]);
    }

    #[test]
    fn empty_corpus_stats() {
        let s = corpus_stats(&Corpus::new(), &AnnotationSchema::shac());
        assert_eq!(s.notes, 0);
        assert_eq!(s.events, 0);
        assert!(s.partitions.is_empty());
        assert_eq!(s.event_types.len(), 5);
        assert!(s
            .event_types
            .iter()
            .all(|e| e.events == 0 && e.avg_per_note == 0.0));
        assert!(s.subtypes.is_empty());
    }
}
