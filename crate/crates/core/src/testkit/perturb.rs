use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{add_event, pick_subtype, ArgDraft, GeneratorConfig, PAD_WORD};
use crate::schema::{AnnotationSchema, SubtypeAttachment};
use crate::scoring::{Counts, PhenomenonKey, ScoreCounts, Subtype};
use crate::standoff::{
    AttributeAnnotation, Corpus, Document, EventAnnotation, Fragment, Span, TextBound,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EventFate {
    /// Trigger untouched or shifted within overlap: the event still aligns.
    Kept { trigger_shifted: bool },
    /// Trigger moved off its gold span: gold and prediction both unaligned.
    Displaced,
    Dropped,
}

/// One argument of a gold event and what became of it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SlotEdit {
    pub gold_key: String,
    #[serde(skip)]
    pub gold: PhenomenonKey,
    /// Key of the predicted argument; unchanged unless the subtype flipped.
    #[serde(skip)]
    pub pred: PhenomenonKey,
    pub span_changed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EventEdit {
    pub gold_event: String,
    pub event_type: String,
    pub fate: EventFate,
    pub slots: Vec<SlotEdit>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InsertedEvent {
    pub pred_event: String,
    pub event_type: String,
    #[serde(skip)]
    pub slots: Vec<PhenomenonKey>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct NoteEdits {
    pub events: Vec<EventEdit>,
    pub inserted: Vec<InsertedEvent>,
}

/// Everything the perturber did, per note.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct EditLog {
    pub notes: BTreeMap<String, NoteEdits>,
}

impl NoteEdits {
    /// Counts implied by the edits alone: a kept event's trigger is a hit,
    /// a span-only argument hits iff its span is untouched, a labeled
    /// argument hits iff its subtype is unchanged; everything attached to a
    /// dropped, displaced or inserted event is a miss or false alarm.
    pub fn expected_counts(&self) -> ScoreCounts {
        let hit = Counts::new(1, 0, 0);
        let miss = Counts::new(0, 1, 0);
        let alarm = Counts::new(0, 0, 1);
        let mut out = ScoreCounts::new();
        for ev in &self.events {
            let trigger = PhenomenonKey::trigger(&ev.event_type);
            match ev.fate {
                EventFate::Kept { .. } => {
                    out.add(trigger, hit);
                    for s in &ev.slots {
                        let same = match s.gold.subtype() {
                            None => !s.span_changed,
                            Some(_) => s.gold == s.pred,
                        };
                        if same {
                            out.add(s.gold.clone(), hit);
                        } else {
                            out.add(s.gold.clone(), miss);
                            out.add(s.pred.clone(), alarm);
                        }
                    }
                }
                EventFate::Displaced => {
                    out.add(trigger.clone(), miss);
                    out.add(trigger, alarm);
                    for s in &ev.slots {
                        out.add(s.gold.clone(), miss);
                        out.add(s.pred.clone(), alarm);
                    }
                }
                EventFate::Dropped => {
                    out.add(trigger, miss);
                    for s in &ev.slots {
                        out.add(s.gold.clone(), miss);
                    }
                }
            }
        }
        for ins in &self.inserted {
            out.add(PhenomenonKey::trigger(&ins.event_type), alarm);
            for k in &ins.slots {
                out.add(k.clone(), alarm);
            }
        }
        out
    }
}

impl EditLog {
    pub fn expected_document(&self, doc_id: &str) -> ScoreCounts {
        self.notes
            .get(doc_id)
            .map(NoteEdits::expected_counts)
            .unwrap_or_default()
    }

    /// Corpus-level counts implied by the edit log.
    pub fn expected_counts(&self) -> ScoreCounts {
        let mut out = ScoreCounts::new();
        for n in self.notes.values() {
            out += &n.expected_counts();
        }
        out
    }
}

/// Whitespace-separated words of generated text, grouped into clauses that
/// end with the pad word. The pad fragment excludes the closing period.
fn clauses(text: &str) -> Vec<Vec<Fragment>> {
    let mut out = Vec::new();
    let mut current = Vec::new();
    let mut start = None;
    let mut word = String::new();
    let chars: Vec<char> = text.chars().collect();
    for i in 0..=chars.len() {
        let c = chars.get(i).copied();
        match c {
            Some(ch) if !ch.is_whitespace() => {
                start.get_or_insert(i);
                word.push(ch);
            }
            _ => {
                if let Some(s) = start.take() {
                    let is_pad = word == format!("{PAD_WORD}.");
                    let end = if is_pad { i - 1 } else { i };
                    current.push(Fragment::new(s, end));
                    if is_pad {
                        out.push(std::mem::take(&mut current));
                    }
                    word.clear();
                }
            }
        }
    }
    out
}

fn slot_key(
    doc: &Document,
    schema: &AnnotationSchema,
    ev: &EventAnnotation,
    tb: &TextBound,
) -> PhenomenonKey {
    match schema.argument(&ev.event_type, &tb.label) {
        Some(spec) if spec.is_labeled() => PhenomenonKey::labeled(
            &ev.event_type,
            &tb.label,
            schema
                .subtype_of(doc, ev, &tb.id, spec)
                .map(Subtype::label)
                .unwrap_or(Subtype::Missing),
        ),
        _ => PhenomenonKey::span_only(&ev.event_type, &tb.label),
    }
}

fn widen(span: &Span, len: usize) -> Option<Span> {
    let mut f = span.fragments().to_vec();
    let last = f.last_mut()?;
    if last.end >= len {
        return None;
    }
    last.end += 1;
    Span::new(f).ok()
}

fn shrink(span: &Span) -> Option<Span> {
    let mut f = span.fragments().to_vec();
    let last = f.last_mut()?;
    if last.end - last.start < 2 {
        return None;
    }
    last.end -= 1;
    Span::new(f).ok()
}

/// Rebuilds a document from (possibly edited) annotation lists, keeping ids.
fn rebuild(
    template: &Document,
    tbs: &BTreeMap<String, (String, Span)>,
    events: &[EventAnnotation],
    attrs: &[AttributeAnnotation],
) -> Document {
    let mut doc = template.empty_like();
    for (id, (label, span)) in tbs {
        doc.add_text_bound(id, label, span.clone())
            .expect("perturbed span stays in bounds");
    }
    for ev in events {
        doc.add_event(ev.clone()).expect("perturbed event resolves");
    }
    for a in attrs {
        doc.add_attribute(a.clone())
            .expect("perturbed attribute resolves");
    }
    doc
}

fn perturb_document(
    gold: &Document,
    cfg: &GeneratorConfig,
    schema: &AnnotationSchema,
    rng: &mut ChaCha8Rng,
) -> (Document, NoteEdits) {
    let rates = &cfg.perturb;
    let len = gold.char_len();
    let mut tbs: BTreeMap<String, (String, Span)> = gold
        .text_bounds()
        .map(|t| (t.id.clone(), (t.label.clone(), t.span.clone())))
        .collect();
    let mut attrs: Vec<AttributeAnnotation> = gold.attributes().cloned().collect();
    let mut events: Vec<EventAnnotation> = Vec::new();
    let mut uses: BTreeMap<&str, usize> = BTreeMap::new();
    for ev in gold.events() {
        *uses.entry(&ev.trigger).or_default() += 1;
        for a in &ev.arguments {
            *uses.entry(&a.target).or_default() += 1;
        }
    }
    let exclusive = |id: &str| uses.get(id).copied() == Some(1);
    let clause_list = clauses(gold.text());
    let mut removed: BTreeSet<String> = BTreeSet::new();
    let mut edits = NoteEdits::default();

    for ev in gold.events() {
        let trigger_span = &gold.text_bound(&ev.trigger).expect("trigger").span;
        let mut fate = EventFate::Kept {
            trigger_shifted: false,
        };
        if rng.gen_bool(rates.event_drop) {
            fate = EventFate::Dropped;
        } else if rng.gen_bool(rates.trigger_displace) {
            let pad = clause_list
                .iter()
                .find(|c| c.first().is_some_and(|w| w.start <= trigger_span.start() && trigger_span.end() <= c.last().unwrap().end))
                .and_then(|c| c.last().copied())
                .filter(|p| p.start >= trigger_span.end());
            if let (Some(p), true) = (pad, exclusive(&ev.trigger)) {
                tbs.get_mut(&ev.trigger).unwrap().1 = Span::new(vec![p]).expect("one fragment");
                fate = EventFate::Displaced;
            }
        } else if rng.gen_bool(rates.trigger_shift) {
            let f = trigger_span.fragments();
            if exclusive(&ev.trigger)
                && f.len() == 1
                && f[0].end - f[0].start >= 2
                && f[0].end < len
            {
                tbs.get_mut(&ev.trigger).unwrap().1 =
                    Span::single(f[0].start + 1, f[0].end + 1).expect("in order");
                fate = EventFate::Kept {
                    trigger_shifted: true,
                };
            }
        }

        let mut slots = Vec::new();
        for arg in &ev.arguments {
            let tb = gold.text_bound(&arg.target).expect("argument");
            let gold_key = slot_key(gold, schema, ev, tb);
            let mut pred_key = gold_key.clone();
            let mut span_changed = false;
            if exclusive(&tb.id) && fate != EventFate::Dropped {
                let edited = if rng.gen_bool(rates.span_widen) {
                    widen(&tb.span, len)
                } else if rng.gen_bool(rates.span_shrink) {
                    shrink(&tb.span)
                } else {
                    None
                };
                if let Some(s) = edited {
                    tbs.get_mut(&tb.id).unwrap().1 = s;
                    span_changed = true;
                }
                let spec = schema
                    .argument(&ev.event_type, &tb.label)
                    .filter(|s| s.is_labeled());
                if let Some(spec) = spec {
                    if rng.gen_bool(rates.subtype_flip) {
                        let current = gold_key.subtype().cloned();
                        let holder = match schema.attachment {
                            SubtypeAttachment::Argument => tb.id.clone(),
                            SubtypeAttachment::Event => ev.id.clone(),
                        };
                        let name = spec.attribute_name().unwrap_or_default();
                        let others: Vec<&String> = spec
                            .subtypes()
                            .iter()
                            .filter(|s| current.as_ref() != Some(&Subtype::label(s.as_str())))
                            .collect();
                        let pos = attrs
                            .iter()
                            .position(|a| a.target == holder && a.name == name);
                        let new = if others.is_empty() {
                            if let Some(i) = pos {
                                attrs.remove(i);
                            }
                            Subtype::Missing
                        } else {
                            let v = others[rng.gen_range(0..others.len())].clone();
                            match pos {
                                Some(i) => attrs[i].value = Some(v.clone()),
                                None => attrs.push(AttributeAnnotation {
                                    id: next_attr_id(&attrs, gold),
                                    name: name.to_string(),
                                    target: holder,
                                    value: Some(v.clone()),
                                }),
                            }
                            Subtype::Label(v)
                        };
                        pred_key = PhenomenonKey::labeled(&ev.event_type, &tb.label, new);
                    }
                }
            }
            slots.push(SlotEdit {
                gold_key: gold_key.to_string(),
                gold: gold_key,
                pred: pred_key,
                span_changed,
            });
        }

        if fate == EventFate::Dropped {
            removed.insert(ev.id.clone());
            for id in std::iter::once(&ev.trigger).chain(ev.arguments.iter().map(|a| &a.target)) {
                if exclusive(id) {
                    removed.insert(id.clone());
                }
            }
        } else {
            events.push(ev.clone());
        }
        edits.events.push(EventEdit {
            gold_event: ev.id.clone(),
            event_type: ev.event_type.clone(),
            fate,
            slots,
        });
    }

    tbs.retain(|id, _| !removed.contains(id));
    attrs.retain(|a| !removed.contains(&a.target));
    let mut doc = rebuild(gold, &tbs, &events, &attrs);

    let annotated: Vec<&Span> = gold.text_bounds().map(|t| &t.span).collect();
    let spare = clause_list.iter().filter(|c| {
        !annotated
            .iter()
            .any(|s| s.start() < c.last().unwrap().end && c[0].start < s.end())
    });
    for clause in spare {
        if schema.events.is_empty() || !rng.gen_bool(rates.event_insert) {
            continue;
        }
        let spec = &schema.events[rng.gen_range(0..schema.events.len())];
        let words = &clause[..clause.len() - 1];
        let Some((first, rest)) = words.split_first() else {
            continue;
        };
        let mut rest = rest.iter();
        let mut drafts = Vec::new();
        let mut keys = Vec::new();
        for a in &spec.arguments {
            if !a.required && !rng.gen_bool(cfg.optional_argument_rate) {
                continue;
            }
            let Some(w) = rest.next() else { break };
            let subtype = a.is_labeled().then(|| pick_subtype(rng, cfg, a));
            keys.push(match &subtype {
                Some(s) => PhenomenonKey::labeled(
                    &spec.event_type,
                    &a.argument_type,
                    Subtype::label(s.as_str()),
                ),
                None => PhenomenonKey::span_only(&spec.event_type, &a.argument_type),
            });
            drafts.push(ArgDraft {
                spec_role: a.role.clone(),
                label: a.argument_type.clone(),
                span: Span::new(vec![*w]).expect("one fragment"),
                subtype,
            });
        }
        let id = add_event(
            &mut doc,
            schema,
            &spec.event_type,
            Span::new(vec![*first]).expect("one fragment"),
            drafts,
        );
        edits.inserted.push(InsertedEvent {
            pred_event: id,
            event_type: spec.event_type.clone(),
            slots: keys,
        });
    }
    (doc, edits)
}

fn next_attr_id(attrs: &[AttributeAnnotation], gold: &Document) -> String {
    let max = attrs
        .iter()
        .map(|a| a.id.as_str())
        .chain(gold.attributes().map(|a| a.id.as_str()))
        .filter_map(|id| id[1..].parse::<u64>().ok())
        .max()
        .unwrap_or(0);
    format!("A{}", max + 1)
}

/// Applies independent random edits to every gold note at the configured
/// rates. Returns the predictions and the log of what was changed.
pub fn perturb(
    gold: &Corpus,
    cfg: &GeneratorConfig,
    schema: &AnnotationSchema,
) -> (Corpus, EditLog) {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let mut pred = Corpus::new();
    let mut log = EditLog::default();
    for doc in gold.documents() {
        let (p, edits) = perturb_document(doc, cfg, schema, &mut rng);
        pred.insert(p).expect("ids copied from a corpus");
        log.notes.insert(doc.doc_id().to_string(), edits);
    }
    (pred, log)
}
