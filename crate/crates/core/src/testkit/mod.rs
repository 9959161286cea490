//! Deterministic synthetic corpora, a perturber with a ground-truth edit log,
//! and a brute-force alignment oracle.
//!
//! Generated notes are a sequence of clauses. An event clause reads
//! `<trigger> <argument>... noted.`; a spare clause has the same shape but
//! carries no annotation and is where the perturber inserts events. Clauses
//! never share characters, so edits stay local to one event.

mod oracle;
mod perturb;

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::schema::{AnnotationSchema, ArgumentSpec, SubtypeAttachment};
use crate::standoff::{
    save_corpus, AttributeAnnotation, Corpus, CorpusError, Document, EventAnnotation,
    EventArgument, Fragment, Metadata, Source, Span, Split,
};

pub use oracle::{oracle_align, OracleError, OracleMatching, ORACLE_MAX_EVENTS};
pub use perturb::{perturb, EditLog, EventEdit, EventFate, InsertedEvent, NoteEdits, SlotEdit};

/// Word closing every clause; the perturber moves displaced triggers here.
pub const PAD_WORD: &str = "noted";

const DEFAULT_DENSITY: [f64; 4] = [0.4, 0.35, 0.15, 0.1];

#[derive(Debug, Error, PartialEq)]
pub enum GeneratorError {
    #[error("{name} = {value} is not a probability")]
    Rate { name: String, value: f64 },
    #[error("{name}: weights must be non-negative and sum to 1 (sum {sum})")]
    Distribution { name: String, sum: f64 },
    #[error("density given for undeclared event type {0}")]
    UnknownEventType(String),
    #[error("subtype weights given for {argument_type}, which has no subtype {subtype}")]
    UnknownSubtype {
        argument_type: String,
        subtype: String,
    },
    #[error("{event_type}/{argument_type} is labeled but declares no subtypes")]
    NoSubtypes {
        event_type: String,
        argument_type: String,
    },
    #[error("no partitions to draw notes from")]
    NoPartitions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionWeight {
    pub source: Source,
    pub split: Split,
    pub weight: f64,
}

/// Per-event and per-argument edit probabilities.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerturbRates {
    /// Move a trigger one character right, keeping overlap with gold.
    pub trigger_shift: f64,
    /// Move a trigger onto its clause's pad word, losing overlap.
    pub trigger_displace: f64,
    /// Extend an argument's last fragment by one character.
    pub span_widen: f64,
    /// Trim an argument's last fragment by one character.
    pub span_shrink: f64,
    /// Replace a labeled argument's subtype.
    pub subtype_flip: f64,
    pub event_drop: f64,
    /// Per spare clause: annotate a new event there.
    pub event_insert: f64,
}

impl PerturbRates {
    fn named(&self) -> [(&'static str, f64); 7] {
        [
            ("trigger_shift", self.trigger_shift),
            ("trigger_displace", self.trigger_displace),
            ("span_widen", self.span_widen),
            ("span_shrink", self.span_shrink),
            ("subtype_flip", self.subtype_flip),
            ("event_drop", self.event_drop),
            ("event_insert", self.event_insert),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub seed: u64,
    pub note_count: usize,
    pub partitions: Vec<PartitionWeight>,
    /// Per event type, the probability of `i` events in a note at index `i`.
    /// Types not listed use 0.4 / 0.35 / 0.15 / 0.1 for 0 to 3 events.
    pub density: BTreeMap<String, Vec<f64>>,
    /// Per argument type, subtype weights. Unlisted types are uniform.
    pub subtype_weights: BTreeMap<String, BTreeMap<String, f64>>,
    /// Chance that each non-required argument is present.
    pub optional_argument_rate: f64,
    /// Chance that a span-only argument covers two separate words.
    pub discontinuous_rate: f64,
    /// Unannotated clauses per note.
    pub spare_clauses: usize,
    pub perturb: PerturbRates,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            seed: 1,
            note_count: 20,
            partitions: vec![PartitionWeight {
                source: Source::Other,
                split: Split::Unknown,
                weight: 1.0,
            }],
            density: BTreeMap::new(),
            subtype_weights: BTreeMap::new(),
            optional_argument_rate: 0.5,
            discontinuous_rate: 0.1,
            spare_clauses: 2,
            perturb: PerturbRates::default(),
        }
    }
}

fn check_rate(name: &str, value: f64) -> Result<(), GeneratorError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(GeneratorError::Rate {
            name: name.to_string(),
            value,
        })
    }
}

fn check_distribution<'a>(
    name: &str,
    weights: impl IntoIterator<Item = &'a f64>,
) -> Result<(), GeneratorError> {
    let mut sum = 0.0;
    let mut ok = true;
    for w in weights {
        ok &= w.is_finite() && *w >= 0.0;
        sum += w;
    }
    if ok && (sum - 1.0).abs() <= 1e-9 {
        Ok(())
    } else {
        Err(GeneratorError::Distribution {
            name: name.to_string(),
            sum,
        })
    }
}

impl GeneratorConfig {
    pub fn validate(&self, schema: &AnnotationSchema) -> Result<(), GeneratorError> {
        check_rate("optional_argument_rate", self.optional_argument_rate)?;
        check_rate("discontinuous_rate", self.discontinuous_rate)?;
        for (name, r) in self.perturb.named() {
            check_rate(name, r)?;
        }
        if self.partitions.is_empty() {
            return Err(GeneratorError::NoPartitions);
        }
        check_distribution("partitions", self.partitions.iter().map(|p| &p.weight))?;
        for (et, dist) in &self.density {
            if schema.event(et).is_none() {
                return Err(GeneratorError::UnknownEventType(et.clone()));
            }
            check_distribution(&format!("density.{et}"), dist)?;
        }
        for ev in &schema.events {
            for arg in ev.arguments.iter().filter(|a| a.is_labeled()) {
                if arg.subtypes().is_empty() {
                    return Err(GeneratorError::NoSubtypes {
                        event_type: ev.event_type.clone(),
                        argument_type: arg.argument_type.clone(),
                    });
                }
                if let Some(w) = self.subtype_weights.get(&arg.argument_type) {
                    if let Some(bad) = w.keys().find(|s| !arg.subtypes().contains(s)) {
                        return Err(GeneratorError::UnknownSubtype {
                            argument_type: arg.argument_type.clone(),
                            subtype: bad.clone(),
                        });
                    }
                }
            }
        }
        for (at, w) in &self.subtype_weights {
            check_distribution(&format!("subtype_weights.{at}"), w.values())?;
        }
        Ok(())
    }

    pub fn density_of(&self, event_type: &str) -> &[f64] {
        self.density
            .get(event_type)
            .map(Vec::as_slice)
            .unwrap_or(&DEFAULT_DENSITY)
    }
}

/// Index drawn from non-negative weights (the last index absorbs rounding).
pub(crate) fn pick(rng: &mut impl Rng, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut x = rng.gen::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if x < *w {
            return i;
        }
        x -= w;
    }
    weights.len().saturating_sub(1)
}

pub(crate) fn pick_subtype(
    rng: &mut impl Rng,
    cfg: &GeneratorConfig,
    spec: &ArgumentSpec,
) -> String {
    let vocab = spec.subtypes();
    let weights: Vec<f64> = match cfg.subtype_weights.get(&spec.argument_type) {
        Some(w) => vocab
            .iter()
            .map(|s| w.get(s).copied().unwrap_or(0.0))
            .collect(),
        None => vec![1.0; vocab.len()],
    };
    vocab[pick(rng, &weights)].clone()
}

fn trigger_words(event_type: &str) -> &'static [&'static str] {
    match event_type {
        "Alcohol" => &["etoh", "alcohol", "drinks", "beer", "wine"],
        "Drug" => &["cocaine", "heroin", "marijuana", "ivdu", "opioids"],
        "Tobacco" => &["smoker", "cigarettes", "tobacco", "cigars", "vapes"],
        "Employment" => &["works", "employed", "retired", "job", "occupation"],
        "LivingStatus" => &["lives", "living", "resides", "housing", "stays"],
        _ => &["event", "episode", "report", "finding"],
    }
}

fn argument_words(argument_type: &str) -> &'static [&'static str] {
    match argument_type {
        "StatusTime" => &["current", "former", "denies", "quit", "active", "prior"],
        "Duration" => &["years", "decades", "months", "weeks", "años"],
        "Type" => &["liquor", "crack", "pipe", "résumé", "shelter", "spirits"],
        "StatusEmploy" => &["fulltime", "parttime", "jobless", "pension", "school"],
        "TypeLiving" | "StatusLiving" => &["homeless", "alone", "family", "facility"],
        _ => &["daily", "heavy", "remote", "often", "since", "some"],
    }
}

fn filler_words() -> &'static [&'static str] {
    &["patient", "reports", "history", "social", "unclear", "per", "café", "chart"]
}

/// Builds note text clause by clause while tracking character offsets.
struct TextBuilder {
    text: String,
    chars: usize,
}

impl TextBuilder {
    fn word(&mut self, w: &str) -> Fragment {
        if !self.text.is_empty() {
            self.text.push(' ');
            self.chars += 1;
        }
        let start = self.chars;
        self.text.push_str(w);
        self.chars += w.chars().count();
        Fragment::new(start, self.chars)
    }

    fn close_clause(&mut self) {
        self.word(PAD_WORD);
        self.text.push('.');
        self.chars += 1;
    }
}

enum Clause<'s> {
    Event(&'s str),
    Spare,
}

pub(crate) struct ArgDraft {
    pub spec_role: String,
    pub label: String,
    pub span: Span,
    pub subtype: Option<String>,
}

/// Adds one event (trigger, arguments, subtype attributes) to `doc` with
/// fresh ids.
pub(crate) fn add_event(
    doc: &mut Document,
    schema: &AnnotationSchema,
    event_type: &str,
    trigger: Span,
    args: Vec<ArgDraft>,
) -> String {
    let tid = doc.next_id('T');
    doc.add_text_bound(&tid, event_type, trigger)
        .expect("generated trigger span is in bounds");
    let eid = doc.next_id('E');
    let mut arguments = Vec::new();
    let mut attrs = Vec::new();
    for a in args {
        let atid = doc.next_id('T');
        doc.add_text_bound(&atid, &a.label, a.span)
            .expect("generated argument span is in bounds");
        if let (Some(st), Some(spec)) = (a.subtype, schema.argument(event_type, &a.label)) {
            let holder = match schema.attachment {
                SubtypeAttachment::Argument => atid.clone(),
                SubtypeAttachment::Event => eid.clone(),
            };
            attrs.push((spec.attribute_name().unwrap_or_default().to_string(), holder, st));
        }
        arguments.push(EventArgument {
            role: a.spec_role,
            target: atid,
        });
    }
    doc.add_event(EventAnnotation {
        id: eid.clone(),
        event_type: event_type.to_string(),
        trigger: tid,
        arguments,
    })
    .expect("generated event resolves");
    for (name, target, value) in attrs {
        let id = doc.next_id('A');
        doc.add_attribute(AttributeAnnotation {
            id,
            name,
            target,
            value: Some(value),
        })
        .expect("generated attribute resolves");
    }
    eid
}

fn doc_id_for(i: usize, meta: Metadata) -> String {
    if meta.source == Source::Other && meta.split == Split::Unknown {
        format!("note-{i:04}")
    } else {
        format!("{}/{}/note-{i:04}", meta.source, meta.split)
    }
}

fn choose<'a>(rng: &mut impl Rng, words: &[&'a str]) -> &'a str {
    words[rng.gen_range(0..words.len())]
}

/// Generates a schema-valid gold corpus. The same config always yields the
/// same corpus.
pub fn generate_gold(
    cfg: &GeneratorConfig,
    schema: &AnnotationSchema,
) -> Result<Corpus, GeneratorError> {
    cfg.validate(schema)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let partition_weights: Vec<f64> = cfg.partitions.iter().map(|p| p.weight).collect();
    let max_args = schema
        .events
        .iter()
        .map(|e| e.arguments.len())
        .max()
        .unwrap_or(0);

    let mut corpus = Corpus::new();
    for i in 0..cfg.note_count {
        let p = &cfg.partitions[pick(&mut rng, &partition_weights)];
        let meta = Metadata {
            source: p.source,
            split: p.split,
        };

        let mut clauses = Vec::new();
        for ev in &schema.events {
            let n = pick(&mut rng, cfg.density_of(&ev.event_type));
            clauses.extend((0..n).map(|_| Clause::Event(&ev.event_type)));
        }
        clauses.extend((0..cfg.spare_clauses).map(|_| Clause::Spare));
        clauses.shuffle(&mut rng);

        let mut tb = TextBuilder {
            text: String::new(),
            chars: 0,
        };
        let mut pending = Vec::new();
        for clause in clauses {
            match clause {
                Clause::Spare => {
                    for _ in 0..=max_args {
                        tb.word(choose(&mut rng, filler_words()));
                    }
                }
                Clause::Event(et) => {
                    let spec = schema.event(et).expect("event type from schema");
                    let trigger = tb.word(choose(&mut rng, trigger_words(et)));
                    let mut args = Vec::new();
                    for a in &spec.arguments {
                        if !a.required && !rng.gen_bool(cfg.optional_argument_rate) {
                            continue;
                        }
                        let words = argument_words(&a.argument_type);
                        let mut frags = vec![tb.word(choose(&mut rng, words))];
                        if !a.is_labeled() && rng.gen_bool(cfg.discontinuous_rate) {
                            frags.push(tb.word(choose(&mut rng, words)));
                        }
                        let subtype = a.is_labeled().then(|| pick_subtype(&mut rng, cfg, a));
                        args.push(ArgDraft {
                            spec_role: a.role.clone(),
                            label: a.argument_type.clone(),
                            span: Span::new(frags).expect("words are disjoint and ordered"),
                            subtype,
                        });
                    }
                    pending.push((et, Span::new(vec![trigger]).expect("one fragment"), args));
                }
            }
            tb.close_clause();
        }
        tb.text.push('\n');

        let mut doc = Document::new(doc_id_for(i, meta), tb.text).with_metadata(meta);
        for (et, trigger, args) in pending {
            add_event(&mut doc, schema, et, trigger, args);
        }
        corpus
            .insert(doc)
            .expect("generated doc ids are unique");
    }
    Ok(corpus)
}

/// Writes `<doc_id>.txt` / `<doc_id>.ann` pairs through the serializer.
pub fn write_corpus(corpus: &Corpus, dir: &Path) -> Result<(), CorpusError> {
    save_corpus(corpus, dir)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::validate_document;

    fn cfg(seed: u64) -> GeneratorConfig {
        GeneratorConfig {
            seed,
            note_count: 30,
            ..Default::default()
        }
    }

    #[test]
    fn generated_gold_is_valid_and_reproducible() {
        let schema = AnnotationSchema::shac();
        let a = generate_gold(&cfg(5), &schema).unwrap();
        let b = generate_gold(&cfg(5), &schema).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 30);
        for doc in a.documents() {
            assert_eq!(validate_document(doc, &schema), vec![]);
        }
        assert_ne!(a, generate_gold(&cfg(6), &schema).unwrap());
    }

    #[test]
    fn forced_density() {
        let schema = AnnotationSchema::shac();
        let mut c = cfg(1);
        c.density.insert("Drug".into(), vec![0.0, 0.0, 0.0, 1.0]);
        let corpus = generate_gold(&c, &schema).unwrap();
        for doc in corpus.documents() {
            assert_eq!(doc.events().filter(|e| e.event_type == "Drug").count(), 3);
        }
    }

    #[test]
    fn config_errors() {
        let schema = AnnotationSchema::shac();
        let mut c = cfg(1);
        c.perturb.event_drop = 1.5;
        assert!(matches!(c.validate(&schema), Err(GeneratorError::Rate { .. })));
        let mut c = cfg(1);
        c.density.insert("Drug".into(), vec![0.5, 0.2]);
        assert!(matches!(c.validate(&schema), Err(GeneratorError::Distribution { .. })));
        let mut c = cfg(1);
        c.density.insert("Gambling".into(), vec![1.0]);
        assert!(matches!(c.validate(&schema), Err(GeneratorError::UnknownEventType(_))));
        let mut c = cfg(1);
        c.subtype_weights
            .insert("StatusTime".into(), [("future".to_string(), 1.0)].into());
        assert!(matches!(c.validate(&schema), Err(GeneratorError::UnknownSubtype { .. })));
    }

    #[test]
    fn config_from_toml() {
        let c: GeneratorConfig = toml::from_str(
            "seed = 9\nnote_count = 3\n[perturb]\nevent_drop = 0.2\n\
             [[partitions]]\nsource = \"uw\"\nsplit = \"test\"\nweight = 1.0\n",
        )
        .unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.perturb.event_drop, 0.2);
        let corpus = generate_gold(&c, &AnnotationSchema::shac()).unwrap();
        assert!(corpus.doc_ids().all(|id| id.starts_with("uw/test/note-")));
    }
}
