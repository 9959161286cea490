use std::collections::BTreeMap;
use std::fmt;

use serde::{Serialize, Serializer};

use super::{Counts, PhenomenonKind, ScoreCounts};

pub(crate) fn round6<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64((x * 1e6).round() / 1e6)
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Precision, recall and F1 with every 0/0 quotient defined as 0.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Metrics {
    #[serde(flatten)]
    pub counts: Counts,
    #[serde(serialize_with = "round6")]
    pub precision: f64,
    #[serde(serialize_with = "round6")]
    pub recall: f64,
    #[serde(serialize_with = "round6")]
    pub f1: f64,
}

impl Metrics {
    pub fn from_counts(counts: Counts) -> Self {
        let precision = ratio(counts.tp, counts.tp + counts.fp);
        let recall = ratio(counts.tp, counts.tp + counts.fn_);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Metrics {
            counts,
            precision,
            recall,
            f1,
        }
    }
}

/// Which table a report row belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Section {
    /// One row per phenomenon key.
    Key,
    /// All phenomena of one event type.
    EventType,
    /// One phenomenon kind within one event type.
    EventKind,
    /// One phenomenon kind across event types.
    Kind,
    /// One argument type within one event type, all subtypes.
    ArgumentType,
    /// One argument subtype across event types.
    Subtype,
    Overall,
}

impl Section {
    pub fn as_str(&self) -> &'static str {
        match self {
            Section::Key => "key",
            Section::EventType => "event_type",
            Section::EventKind => "event_kind",
            Section::Kind => "kind",
            Section::ArgumentType => "argument_type",
            Section::Subtype => "subtype",
            Section::Overall => "overall",
        }
    }
}

impl fmt::Display for Section {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub section: Section,
    pub kind: Option<PhenomenonKind>,
    pub event_type: Option<String>,
    pub argument_type: Option<String>,
    pub subtype: Option<String>,
    #[serde(flatten)]
    pub metrics: Metrics,
}

/// Per-key metrics, rollups and the overall micro average, as one flat
/// table in a fixed order: keys, then rollups, then the overall row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    pub rows: Vec<ReportRow>,
}

type RollupKey = (
    Option<PhenomenonKind>,
    Option<String>,
    Option<String>,
    Option<String>,
);

impl MetricReport {
    pub fn from_counts(counts: &ScoreCounts) -> Self {
        let mut rollups: BTreeMap<Section, BTreeMap<RollupKey, Counts>> = BTreeMap::new();
        let mut rows = Vec::new();
        let mut bump = |section: Section, key: RollupKey, c: Counts| {
            *rollups.entry(section).or_default().entry(key).or_default() += c;
        };

        for (key, c) in counts.iter() {
            let et = Some(key.event_type().to_string());
            let at = key.argument_type().map(str::to_string);
            let st = key.subtype().map(|s| s.to_string());
            rows.push(ReportRow {
                section: Section::Key,
                kind: Some(key.kind()),
                event_type: et.clone(),
                argument_type: at.clone(),
                subtype: st.clone(),
                metrics: Metrics::from_counts(*c),
            });
            bump(Section::EventType, (None, et.clone(), None, None), *c);
            bump(Section::EventKind, (Some(key.kind()), et.clone(), None, None), *c);
            bump(Section::Kind, (Some(key.kind()), None, None, None), *c);
            if at.is_some() {
                bump(Section::ArgumentType, (Some(key.kind()), et, at.clone(), None), *c);
            }
            if st.is_some() {
                bump(Section::Subtype, (Some(key.kind()), None, at, st), *c);
            }
        }
        for (section, table) in rollups {
            for ((kind, event_type, argument_type, subtype), c) in table {
                rows.push(ReportRow {
                    section,
                    kind,
                    event_type,
                    argument_type,
                    subtype,
                    metrics: Metrics::from_counts(c),
                });
            }
        }
        rows.push(ReportRow {
            section: Section::Overall,
            kind: None,
            event_type: None,
            argument_type: None,
            subtype: None,
            metrics: Metrics::from_counts(counts.total()),
        });
        MetricReport { rows }
    }

    pub fn overall(&self) -> Metrics {
        self.rows
            .iter()
            .rev()
            .find(|r| r.section == Section::Overall)
            .map(|r| r.metrics)
            .unwrap_or_default()
    }

    pub fn section(&self, section: Section) -> impl Iterator<Item = &ReportRow> {
        self.rows.iter().filter(move |r| r.section == section)
    }
}
