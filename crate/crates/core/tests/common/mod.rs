#![allow(dead_code)]

use brat_eval::standoff::{parse_document, Corpus, Document};

/// Character offset range of the `nth` occurrence of `needle` in `text`.
pub fn find(text: &str, needle: &str, nth: usize) -> (usize, usize) {
    let byte = text
        .match_indices(needle)
        .nth(nth)
        .unwrap_or_else(|| panic!("{needle:?} #{nth} not in {text:?}"))
        .0;
    let start = text[..byte].chars().count();
    (start, start + needle.chars().count())
}

/// Builds a document from `.ann` lines whose `{word}` / `{word#n}`
/// placeholders are replaced by the character offsets of that word.
pub fn doc(doc_id: &str, text: &str, ann: &str) -> Document {
    let mut out = String::new();
    let mut rest = ann;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let close = rest[open..].find('}').unwrap() + open;
        let spec = &rest[open + 1..close];
        let (word, nth) = match spec.split_once('#') {
            Some((w, n)) => (w, n.parse().unwrap()),
            None => (spec, 0),
        };
        let (s, e) = find(text, word, nth);
        out.push_str(&format!("{s} {e}"));
        rest = &rest[close + 1..];
    }
    out.push_str(rest);
    parse_document(&out, text, doc_id, true)
        .unwrap_or_else(|e| panic!("{doc_id}: {e}\n{out}"))
        .document
}

pub fn corpus(docs: impl IntoIterator<Item = Document>) -> Corpus {
    docs.into_iter().collect()
}
