//! Delimited (tab-separated) and structured (JSON) renderings of every
//! report. Column order is fixed per table; ratios carry 6 decimals.

use std::fmt::Write as _;

use serde::Serialize;

use crate::analytics::{CorpusStats, DensityRow, SubtypeRow};
use crate::schema::Violation;
use crate::scoring::{MetricReport, Metrics};
use crate::significance::BootstrapResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    /// Tab-separated text with a header line.
    #[default]
    Delimited,
    /// Pretty-printed JSON.
    Structured,
}

pub const METRIC_COLUMNS: [&str; 11] = [
    "section",
    "kind",
    "event_type",
    "argument_type",
    "subtype",
    "tp",
    "fn",
    "fp",
    "precision",
    "recall",
    "f1",
];

fn f6(x: f64) -> String {
    format!("{x:.6}")
}

fn metric_cells(m: &Metrics) -> [String; 6] {
    [
        m.counts.tp.to_string(),
        m.counts.fn_.to_string(),
        m.counts.fp.to_string(),
        f6(m.precision),
        f6(m.recall),
        f6(m.f1),
    ]
}

fn table(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = header.join("\t");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join("\t"));
        out.push('\n');
    }
    out
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

fn opt(s: &Option<String>) -> String {
    s.clone().unwrap_or_default()
}

pub fn metric_report_tsv(report: &MetricReport) -> String {
    table(
        &METRIC_COLUMNS,
        report.rows.iter().map(|r| {
            let mut row = vec![
                r.section.to_string(),
                r.kind.map(|k| k.to_string()).unwrap_or_default(),
                opt(&r.event_type),
                opt(&r.argument_type),
                opt(&r.subtype),
            ];
            row.extend(metric_cells(&r.metrics));
            row
        }),
    )
}

pub fn metric_report(report: &MetricReport, format: Format) -> String {
    match format {
        Format::Delimited => metric_report_tsv(report),
        Format::Structured => to_json(report),
    }
}

/// One-line human summary of a metrics row.
pub fn overall_line(m: &Metrics) -> String {
    format!(
        "overall\tP={}\tR={}\tF1={}\ttp={}\tfn={}\tfp={}",
        f6(m.precision),
        f6(m.recall),
        f6(m.f1),
        m.counts.tp,
        m.counts.fn_,
        m.counts.fp
    )
}

pub fn stats_tsv(stats: &CorpusStats) -> String {
    let mut out = String::new();
    out.push_str(&table(
        &["table", "source", "split", "notes", "events"],
        stats
            .partitions
            .iter()
            .map(|p| {
                vec![
                    "partition".into(),
                    p.source.to_string(),
                    p.split.to_string(),
                    p.notes.to_string(),
                    p.events.to_string(),
                ]
            })
            .chain(std::iter::once(vec![
                "partition".into(),
                "all".into(),
                "all".into(),
                stats.notes.to_string(),
                stats.events.to_string(),
            ])),
    ));
    out.push('\n');
    out.push_str(&table(
        &["table", "event_type", "events", "notes_with_events", "avg_per_note"],
        stats.event_types.iter().map(|e| {
            vec![
                "event_type".into(),
                e.event_type.clone(),
                e.events.to_string(),
                e.notes_with_events.to_string(),
                f6(e.avg_per_note),
            ]
        }),
    ));
    out.push('\n');
    out.push_str(&table(
        &["table", "event_type", "argument_type", "subtype", "count"],
        stats.subtypes.iter().map(|s| {
            vec![
                "subtype".into(),
                s.event_type.clone(),
                s.argument_type.clone(),
                s.subtype.clone(),
                s.count.to_string(),
            ]
        }),
    ));
    out
}

pub fn stats(stats: &CorpusStats, format: Format) -> String {
    match format {
        Format::Delimited => stats_tsv(stats),
        Format::Structured => to_json(stats),
    }
}

/// Human table of corpus statistics with averages to 2 decimals.
pub fn stats_human(stats: &CorpusStats) -> String {
    let mut out = String::new();
    writeln!(out, "notes: {}  events: {}", stats.notes, stats.events).unwrap();
    for p in &stats.partitions {
        writeln!(out, "  {:<6} {:<8} notes={:<6} events={}", p.source, p.split, p.notes, p.events)
            .unwrap();
    }
    for e in &stats.event_types {
        writeln!(
            out,
            "  {:<14} events={:<6} avg/note={:.2}",
            e.event_type, e.events, e.avg_per_note
        )
        .unwrap();
    }
    out
}

pub fn density_tsv(rows: &[DensityRow]) -> String {
    table(
        &[
            "event_type",
            "bucket",
            "kind",
            "notes",
            "gold_events",
            "tp",
            "fn",
            "fp",
            "precision",
            "recall",
            "f1",
        ],
        rows.iter().map(|r| {
            let mut row = vec![
                r.event_type.clone(),
                r.bucket.to_string(),
                r.kind.map(|k| k.to_string()).unwrap_or_else(|| "all".into()),
                r.notes.to_string(),
                r.gold_events.to_string(),
            ];
            row.extend(metric_cells(&r.metrics));
            row
        }),
    )
}

pub fn subtype_tsv(rows: &[SubtypeRow]) -> String {
    table(
        &[
            "event_type",
            "argument_type",
            "subtype",
            "tp",
            "fn",
            "fp",
            "precision",
            "recall",
            "f1",
            "gold",
            "avg_gold_per_note",
        ],
        rows.iter().map(|r| {
            let mut row = vec![r.event_type.clone(), r.argument_type.clone(), r.subtype.clone()];
            row.extend(metric_cells(&r.metrics));
            row.push(r.gold.to_string());
            row.push(f6(r.avg_gold_per_note));
            row
        }),
    )
}

pub fn bootstrap_tsv(r: &BootstrapResult) -> String {
    table(
        &[
            "notes",
            "repetitions",
            "seed",
            "alpha",
            "f1_a",
            "f1_b",
            "delta",
            "p_value",
            "p_numerator",
            "p_denominator",
            "verdict",
        ],
        [vec![
            r.notes.to_string(),
            r.repetitions.to_string(),
            r.seed.to_string(),
            r.alpha.to_string(),
            f6(r.f1_a),
            f6(r.f1_b),
            f6(r.observed_delta),
            r.p_value.to_string(),
            r.p_numerator.to_string(),
            r.p_denominator.to_string(),
            r.verdict().to_string(),
        ]],
    )
}

pub fn bootstrap(r: &BootstrapResult, format: Format) -> String {
    #[derive(Serialize)]
    struct WithVerdict<'a> {
        #[serde(flatten)]
        result: &'a BootstrapResult,
        verdict: &'static str,
    }
    match format {
        Format::Delimited => bootstrap_tsv(r),
        Format::Structured => to_json(&WithVerdict {
            result: r,
            verdict: r.verdict(),
        }),
    }
}

pub fn violations_tsv(violations: &[Violation]) -> String {
    table(
        &["doc_id", "annotation_id", "rule", "message"],
        violations.iter().map(|v| {
            vec![
                v.doc_id.clone(),
                v.annotation_id.clone(),
                v.rule.to_string(),
                v.message.replace(['\t', '\n'], " "),
            ]
        }),
    )
}

pub fn violations(violations: &[Violation], format: Format) -> String {
    match format {
        Format::Delimited => violations_tsv(violations),
        Format::Structured => to_json(violations),
    }
}

/// One x/y series per plotted view, for external plotting.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlotSeries {
    pub figure: String,
    pub name: String,
    pub x: Vec<String>,
    pub y: Vec<f64>,
}

/// Series for the subtype and density views: F1 and average gold events
/// per note per subtype; F1 per density bucket per event type.
pub fn plot_series(subtypes: &[SubtypeRow], density: &[DensityRow]) -> Vec<PlotSeries> {
    let mut out = Vec::new();
    let x: Vec<String> = subtypes
        .iter()
        .map(|r| format!("{}/{}/{}", r.event_type, r.argument_type, r.subtype))
        .collect();
    out.push(PlotSeries {
        figure: "subtype".into(),
        name: "f1".into(),
        x: x.clone(),
        y: subtypes.iter().map(|r| r.metrics.f1).collect(),
    });
    out.push(PlotSeries {
        figure: "subtype".into(),
        name: "avg_gold_per_note".into(),
        x,
        y: subtypes.iter().map(|r| r.avg_gold_per_note).collect(),
    });
    let mut types: Vec<&str> = density.iter().map(|r| r.event_type.as_str()).collect();
    types.dedup();
    for t in types {
        let rows: Vec<&DensityRow> = density
            .iter()
            .filter(|r| r.event_type == t && r.kind.is_none())
            .collect();
        out.push(PlotSeries {
            figure: "density".into(),
            name: t.to_string(),
            x: rows.iter().map(|r| r.bucket.to_string()).collect(),
            y: rows.iter().map(|r| r.metrics.f1).collect(),
        });
    }
    out
}
