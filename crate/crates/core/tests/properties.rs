use std::collections::BTreeSet;

use proptest::prelude::*;

use brat_eval::schema::AnnotationSchema;
use brat_eval::scoring::{score_corpus, score_document, triggers_equivalent, Counts, Metrics};
use brat_eval::significance::{bootstrap_from_counts, resample_indices, BootstrapConfig};
use brat_eval::standoff::{
    parse_document, serialize_document, AttributeAnnotation, Corpus, Document, EventAnnotation,
    EventArgument, Fragment, Span,
};
use brat_eval::testkit::{generate_gold, perturb, GeneratorConfig, PerturbRates};

fn span_strategy(len: usize) -> impl Strategy<Value = Span> {
    // up to three fragments: sorted, non-overlapping cut points
    prop::collection::btree_set(0..=len, 2..=6).prop_filter_map("need an even cut count", |cuts| {
        let cuts: Vec<usize> = cuts.into_iter().collect();
        let frags: Vec<Fragment> = cuts
            .chunks_exact(2)
            .map(|c| Fragment::new(c[0], c[1]))
            .collect();
        Span::new(frags).ok()
    })
}

/// Random note text (including non-ASCII characters and line breaks) with
/// random text-bounds, events and attributes.
fn document_strategy() -> impl Strategy<Value = Document> {
    let text = prop::collection::vec(
        prop::sample::select(vec!['a', 'b', 'z', ' ', 'é', '中', '\n', '.', '\t', 'ß']),
        4..60,
    )
    .prop_map(|c| c.into_iter().collect::<String>());
    text.prop_flat_map(|text| {
        let len = text.chars().count();
        let labels = prop::sample::select(vec!["Drug", "Alcohol", "StatusTime", "Type", "Duration"]);
        (
            Just(text),
            prop::collection::vec((labels, span_strategy(len)), 1..8),
            prop::collection::vec((any::<prop::sample::Index>(), prop::collection::vec(any::<prop::sample::Index>(), 0..4)), 0..5),
            prop::collection::vec((any::<prop::sample::Index>(), prop::option::of(prop::sample::select(vec!["current", "past"]))), 0..4),
        )
    })
    .prop_map(|(text, tbs, events, attrs)| {
        let mut d = Document::new("p", text);
        for (i, (label, span)) in tbs.iter().enumerate() {
            d.add_text_bound(format!("T{}", i + 1), *label, span.clone())
                .unwrap();
        }
        for (i, (trig, args)) in events.iter().enumerate() {
            let ti = trig.index(tbs.len());
            let (t, tid) = (&tbs[ti], format!("T{}", ti + 1));
            let arguments = args
                .iter()
                .map(|a| {
                    let idx = a.index(tbs.len());
                    EventArgument {
                        role: tbs[idx].0.to_string(),
                        target: format!("T{}", idx + 1),
                    }
                })
                .collect();
            d.add_event(EventAnnotation {
                id: format!("E{}", i + 1),
                event_type: t.0.to_string(),
                trigger: tid,
                arguments,
            })
            .unwrap();
        }
        for (i, (target, value)) in attrs.iter().enumerate() {
            let target = format!("T{}", target.index(tbs.len()) + 1);
            let _ = d.add_attribute(AttributeAnnotation {
                id: format!("A{}", i + 1),
                name: "StatusTimeVal".into(),
                target,
                value: value.map(str::to_string),
            });
        }
        d
    })
}

fn generated(seed: u64, notes: usize, rates: PerturbRates) -> (Corpus, Corpus) {
    let schema = AnnotationSchema::shac();
    let cfg = GeneratorConfig {
        seed,
        note_count: notes,
        discontinuous_rate: 0.2,
        perturb: rates,
        ..Default::default()
    };
    let gold = generate_gold(&cfg, &schema).unwrap();
    let (pred, _) = perturb(&gold, &cfg, &schema);
    (gold, pred)
}

fn rates_strategy() -> impl Strategy<Value = PerturbRates> {
    let r = || 0.0..=0.6f64;
    (r(), r(), r(), r(), r(), r(), r()).prop_map(|(a, b, c, d, e, f, g)| PerturbRates {
        trigger_shift: a,
        trigger_displace: b,
        span_widen: c,
        span_shrink: d,
        subtype_flip: e,
        event_drop: f,
        event_insert: g,
    })
}

fn chars_of(s: &Span) -> BTreeSet<usize> {
    s.fragments().iter().flat_map(|f| f.start..f.end).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn serialize_parse_round_trip(d in document_strategy()) {
        let ann = serialize_document(&d);
        let back = parse_document(&ann, d.text(), "p", true).unwrap().document;
        prop_assert_eq!(back, d);
    }

    #[test]
    fn line_order_does_not_matter(d in document_strategy(), seed in any::<u64>()) {
        let ann = serialize_document(&d);
        let mut lines: Vec<&str> = ann.lines().collect();
        // deterministic shuffle keyed by seed
        let n = lines.len();
        for i in (1..n).rev() {
            let j = (seed.wrapping_mul(6364136223846793005).wrapping_add(i as u64) >> 33) as usize % (i + 1);
            lines.swap(i, j);
        }
        let shuffled = lines.join("\n");
        let back = parse_document(&shuffled, d.text(), "p", false).unwrap().document;
        prop_assert_eq!(back, d);
    }

    #[test]
    fn strict_success_implies_lenient_agreement(ann in "[TEA][0-9]{1,2}\t[A-Za-z]{1,6}( [0-9]{1,2} [0-9]{1,2})?(\t[a-z ]{0,6})?\n{0,2}", text in "[a-z ]{0,40}") {
        if let Ok(strict) = parse_document(&ann, &text, "p", true) {
            let lenient = parse_document(&ann, &text, "p", false).unwrap();
            prop_assert_eq!(strict.document, lenient.document);
            prop_assert!(lenient.warnings.is_empty());
        }
    }

    #[test]
    fn parser_never_panics(ann in ".{0,200}", text in ".{0,80}", strict in any::<bool>()) {
        let _ = parse_document(&ann, &text, "p", strict);
    }

    #[test]
    fn overlap_is_symmetric_and_matches_character_sets(a in span_strategy(30), b in span_strategy(30)) {
        let ab = triggers_equivalent("Drug", &a, "Drug", &b);
        prop_assert_eq!(ab, triggers_equivalent("Drug", &b, "Drug", &a));
        prop_assert_eq!(ab, !chars_of(&a).is_disjoint(&chars_of(&b)));
        prop_assert!(!triggers_equivalent("Drug", &a, "Alcohol", &b));
    }

    #[test]
    fn metrics_are_bounded(tp in 0u64..1000, fn_ in 0u64..1000, fp in 0u64..1000) {
        let m = Metrics::from_counts(Counts::new(tp, fn_, fp));
        for x in [m.precision, m.recall, m.f1] {
            prop_assert!((0.0..=1.0).contains(&x));
        }
        if tp == 0 {
            prop_assert_eq!(m.f1, 0.0);
        }
        prop_assert!(m.f1 <= m.precision.max(m.recall) + 1e-12);
        prop_assert!(m.f1 + 1e-12 >= m.precision.min(m.recall));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn identity(seed in any::<u64>()) {
        let (gold, _) = generated(seed, 8, PerturbRates::default());
        let s = score_corpus(&gold, &gold, &AnnotationSchema::shac()).unwrap();
        prop_assert!(s.totals.iter().all(|(_, c)| c.fn_ == 0 && c.fp == 0));
    }

    #[test]
    fn additivity(seed in any::<u64>(), rates in rates_strategy(), cut in 0usize..10) {
        let schema = AnnotationSchema::shac();
        let (gold, pred) = generated(seed, 10, rates);
        let ids: Vec<String> = gold.doc_ids().map(str::to_string).collect();
        let left: BTreeSet<&str> = ids[..cut].iter().map(String::as_str).collect();
        let part = |c: &Corpus, l: bool| c.filter(|d| left.contains(d.doc_id()) == l);
        let whole = score_corpus(&gold, &pred, &schema).unwrap().totals;
        let mut sum = score_corpus(&part(&gold, true), &part(&pred, true), &schema).unwrap().totals;
        sum += &score_corpus(&part(&gold, false), &part(&pred, false), &schema).unwrap().totals;
        prop_assert_eq!(whole, sum);
    }

    #[test]
    fn swapping_exchanges_fn_and_fp(seed in any::<u64>(), rates in rates_strategy()) {
        let schema = AnnotationSchema::shac();
        let (gold, pred) = generated(seed, 8, rates);
        let fwd = score_corpus(&gold, &pred, &schema).unwrap().totals;
        let back = score_corpus(&pred, &gold, &schema).unwrap().totals;
        for (k, c) in fwd.iter() {
            prop_assert_eq!(back.get(k), Counts::new(c.tp, c.fp, c.fn_));
        }
        prop_assert_eq!(fwd.len(), back.len());
    }

    #[test]
    fn deleting_predictions_is_monotone(seed in any::<u64>(), rates in rates_strategy(), drop in 0.1..=1.0f64) {
        let schema = AnnotationSchema::shac();
        let (gold, pred) = generated(seed, 8, rates);
        let cfg = GeneratorConfig {
            seed: seed ^ 0x5eed,
            perturb: PerturbRates { event_drop: drop, ..Default::default() },
            ..Default::default()
        };
        let (fewer, _) = perturb(&pred, &cfg, &schema);
        let before = score_corpus(&gold, &pred, &schema).unwrap().totals.total();
        let after = score_corpus(&gold, &fewer, &schema).unwrap().totals.total();
        prop_assert!(after.fp <= before.fp);
        prop_assert!(after.fn_ >= before.fn_);
        prop_assert!(after.tp <= before.tp);
    }

    #[test]
    fn cached_bootstrap_equals_rescoring(seed in any::<u64>(), rates in rates_strategy(), bseed in any::<u64>()) {
        let schema = AnnotationSchema::shac();
        let (gold, a) = generated(seed, 6, rates.clone());
        let (_, b) = generated(seed, 6, PerturbRates { event_drop: 0.3, ..rates });
        let sa = score_corpus(&gold, &a, &schema).unwrap();
        let sb = score_corpus(&gold, &b, &schema).unwrap();
        let notes: Vec<(Counts, Counts)> = gold
            .doc_ids()
            .map(|id| (sa.documents[id].counts.total(), sb.documents[id].counts.total()))
            .collect();
        let cfg = BootstrapConfig { repetitions: 16, seed: bseed, alpha: 0.05 };
        let out = bootstrap_from_counts(&notes, &cfg).unwrap();
        let docs: Vec<&Document> = gold.documents().collect();
        for (rep, delta) in out.deltas.iter().enumerate() {
            let mut ca = Counts::default();
            let mut cb = Counts::default();
            for i in resample_indices(bseed, rep, docs.len()) {
                let g = docs[i];
                ca += score_document(g, a.get(g.doc_id()).unwrap(), &schema).unwrap().counts.total();
                cb += score_document(g, b.get(g.doc_id()).unwrap(), &schema).unwrap().counts.total();
            }
            prop_assert_eq!(*delta, ca.f1() - cb.f1());
        }
    }

    #[test]
    fn edit_log_predicts_scores(seed in any::<u64>(), rates in rates_strategy()) {
        let schema = AnnotationSchema::shac();
        let cfg = GeneratorConfig {
            seed,
            note_count: 8,
            discontinuous_rate: 0.3,
            perturb: rates,
            ..Default::default()
        };
        let gold = generate_gold(&cfg, &schema).unwrap();
        let (pred, log) = perturb(&gold, &cfg, &schema);
        let s = score_corpus(&gold, &pred, &schema).unwrap();
        for (id, d) in &s.documents {
            prop_assert_eq!(&d.counts, &log.expected_document(id));
        }
    }
}
