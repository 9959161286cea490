use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;
use walkdir::WalkDir;

use super::{parse_document, serialize_document, Document, Metadata, ParseError, Source, Split};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{}: {source}", path.display())]
    Parse {
        path: PathBuf,
        #[source]
        source: ParseError,
    },
    #[error("{doc_id}: {} has no matching .txt file", path.display())]
    MissingText { doc_id: String, path: PathBuf },
    #[error("duplicate document id {0}")]
    DuplicateDocId(String),
    #[error("manifest line {line}: {reason}")]
    Manifest { line: usize, reason: String },
    #[error("{} is not a directory", .0.display())]
    NotADirectory(PathBuf),
}

/// A set of documents keyed by `doc_id`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    documents: BTreeMap<String, Document>,
}

impl Corpus {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, doc: Document) -> Result<(), CorpusError> {
        if self.documents.contains_key(doc.doc_id()) {
            return Err(CorpusError::DuplicateDocId(doc.doc_id().to_string()));
        }
        self.documents.insert(doc.doc_id().to_string(), doc);
        Ok(())
    }

    /// Adds every document of `other`; fails on the first shared id.
    pub fn merge(&mut self, other: Corpus) -> Result<(), CorpusError> {
        if let Some(id) = other
            .documents
            .keys()
            .find(|k| self.documents.contains_key(*k))
        {
            return Err(CorpusError::DuplicateDocId(id.clone()));
        }
        self.documents.extend(other.documents);
        Ok(())
    }

    pub fn get(&self, doc_id: &str) -> Option<&Document> {
        self.documents.get(doc_id)
    }

    pub fn documents(&self) -> impl Iterator<Item = &Document> {
        self.documents.values()
    }

    pub fn doc_ids(&self) -> impl Iterator<Item = &str> {
        self.documents.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    /// The documents whose ids satisfy `keep`.
    pub fn filter(&self, mut keep: impl FnMut(&Document) -> bool) -> Corpus {
        Corpus {
            documents: self
                .documents
                .iter()
                .filter(|(_, d)| keep(d))
                .map(|(k, d)| (k.clone(), d.clone()))
                .collect(),
        }
    }
}

impl FromIterator<Document> for Corpus {
    /// Later documents replace earlier ones with the same id.
    fn from_iter<I: IntoIterator<Item = Document>>(iter: I) -> Self {
        Corpus {
            documents: iter
                .into_iter()
                .map(|d| (d.doc_id().to_string(), d))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    /// A document id or id prefix such as `uw/train`.
    pub pattern: String,
    pub metadata: Metadata,
}

/// How partition metadata is assigned to loaded documents.
///
/// Manifest entries win (exact id first, then the longest matching prefix);
/// otherwise path components named `mimic`/`uw` and `train`/`dev`/`test`
/// are used when inference is enabled.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetadataRules {
    entries: Vec<ManifestEntry>,
    infer_from_path: bool,
}

impl Default for MetadataRules {
    fn default() -> Self {
        MetadataRules {
            entries: Vec::new(),
            infer_from_path: true,
        }
    }
}

impl MetadataRules {
    pub fn new(entries: Vec<ManifestEntry>, infer_from_path: bool) -> Self {
        MetadataRules {
            entries,
            infer_from_path,
        }
    }

    pub fn from_manifest(text: &str) -> Result<Self, CorpusError> {
        Ok(MetadataRules::new(parse_manifest(text)?, true))
    }

    pub fn resolve(&self, doc_id: &str) -> Metadata {
        if let Some(e) = self.entries.iter().find(|e| e.pattern == doc_id) {
            return e.metadata;
        }
        if let Some(e) = self
            .entries
            .iter()
            .filter(|e| doc_id.starts_with(&e.pattern))
            .max_by_key(|e| e.pattern.len())
        {
            return e.metadata;
        }
        let mut meta = Metadata::default();
        if self.infer_from_path {
            for part in doc_id.split('/') {
                match Source::parse(part) {
                    Some(s) if s != Source::Other => meta.source = s,
                    _ => {}
                }
                match Split::parse(part) {
                    Some(s) if s != Split::Unknown => meta.split = s,
                    _ => {}
                }
            }
        }
        meta
    }
}

/// Parses a manifest: one `pattern<sep>source<sep>split` record per line,
/// separated by tabs or commas. Blank lines, `#` comments and a leading
/// `doc_id,source,split` header are skipped.
pub fn parse_manifest(text: &str) -> Result<Vec<ManifestEntry>, CorpusError> {
    let mut entries = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.trim();
        if content.is_empty() || content.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = content
            .split(|c| c == '\t' || c == ',')
            .map(str::trim)
            .collect();
        if fields.len() != 3 {
            return Err(CorpusError::Manifest {
                line,
                reason: format!("expected 3 fields, found {}", fields.len()),
            });
        }
        if entries.is_empty() && matches!(fields[0], "doc_id" | "id" | "pattern") {
            continue;
        }
        if fields[0].is_empty() {
            return Err(CorpusError::Manifest {
                line,
                reason: "empty document pattern".into(),
            });
        }
        let source = Source::parse(fields[1]).ok_or_else(|| CorpusError::Manifest {
            line,
            reason: format!("unknown source {:?}", fields[1]),
        })?;
        let split = Split::parse(fields[2]).ok_or_else(|| CorpusError::Manifest {
            line,
            reason: format!("unknown split {:?}", fields[2]),
        })?;
        entries.push(ManifestEntry {
            pattern: fields[0].to_string(),
            metadata: Metadata { source, split },
        });
    }
    Ok(entries)
}

#[derive(Debug, Clone, Default)]
pub struct LoadOptions<'a> {
    pub strict: bool,
    pub rules: MetadataRules,
    /// Supplies note text for `.ann` files that have no `.txt` beside them,
    /// as is common for system prediction directories.
    pub text_fallback: Option<&'a Corpus>,
}

#[derive(Default)]
struct Pair {
    txt: Option<PathBuf>,
    ann: Option<PathBuf>,
}

fn doc_id_for(root: &Path, path: &Path) -> String {
    let rel = path.strip_prefix(root).unwrap_or(path).with_extension("");
    rel.components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/")
}

fn read(path: &Path) -> Result<String, CorpusError> {
    fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Loads every `<id>.txt`/`<id>.ann` pair under `dir`, reporting failures
/// per document instead of stopping at the first one.
///
/// Document ids are paths relative to `dir` without extension, so a flat
/// directory yields plain file stems.
pub fn load_documents(
    dir: &Path,
    opts: &LoadOptions<'_>,
) -> Result<Vec<(String, Result<Document, CorpusError>)>, CorpusError> {
    if !dir.is_dir() {
        return Err(CorpusError::NotADirectory(dir.to_path_buf()));
    }
    let mut pairs: BTreeMap<String, Pair> = BTreeMap::new();
    for entry in WalkDir::new(dir).sort_by_file_name() {
        let entry = entry.map_err(|e| CorpusError::Io {
            path: e.path().unwrap_or(dir).to_path_buf(),
            source: e.into(),
        })?;
        if !entry.file_type().is_file() {
            continue;
        }
        let path = entry.path();
        let is_txt = match path.extension().and_then(|e| e.to_str()) {
            Some("txt") => true,
            Some("ann") => false,
            _ => continue,
        };
        let pair = pairs.entry(doc_id_for(dir, path)).or_default();
        if is_txt {
            pair.txt = Some(path.to_path_buf());
        } else {
            pair.ann = Some(path.to_path_buf());
        }
    }

    let pairs: Vec<(String, Pair)> = pairs.into_iter().collect();
    Ok(pairs
        .into_par_iter()
        .map(|(doc_id, pair)| {
            let doc = load_pair(&doc_id, &pair, opts);
            (doc_id, doc)
        })
        .collect())
}

fn load_pair(doc_id: &str, pair: &Pair, opts: &LoadOptions<'_>) -> Result<Document, CorpusError> {
    let text = match (&pair.txt, &pair.ann) {
        (Some(txt), _) => read(txt)?,
        (None, Some(ann)) => match opts.text_fallback.and_then(|c| c.get(doc_id)) {
            Some(d) => d.text().to_string(),
            None => {
                return Err(CorpusError::MissingText {
                    doc_id: doc_id.to_string(),
                    path: ann.clone(),
                })
            }
        },
        (None, None) => unreachable!("pair without files"),
    };
    let metadata = opts.rules.resolve(doc_id);
    let Some(ann_path) = &pair.ann else {
        return Ok(Document::new(doc_id, text).with_metadata(metadata));
    };
    let ann = read(ann_path)?;
    let parsed =
        parse_document(&ann, &text, doc_id, opts.strict).map_err(|source| CorpusError::Parse {
            path: ann_path.clone(),
            source,
        })?;
    for w in &parsed.warnings {
        log::warn!("{}: {}", ann_path.display(), w);
    }
    Ok(parsed.document.with_metadata(metadata))
}

/// Loads a directory of paired files into a [`Corpus`], failing on the
/// first (in id order) document that cannot be loaded.
pub fn load_corpus(dir: &Path, opts: &LoadOptions<'_>) -> Result<Corpus, CorpusError> {
    let mut corpus = Corpus::new();
    for (_, doc) in load_documents(dir, opts)? {
        corpus.insert(doc?)?;
    }
    Ok(corpus)
}

/// Writes `<dir>/<doc_id>.txt` and `<dir>/<doc_id>.ann` for every document.
pub fn save_corpus(corpus: &Corpus, dir: &Path) -> Result<(), CorpusError> {
    for doc in corpus.documents() {
        let base = dir.join(doc.doc_id());
        if let Some(parent) = base.parent() {
            fs::create_dir_all(parent).map_err(|source| CorpusError::Io {
                path: parent.to_path_buf(),
                source,
            })?;
        }
        for (ext, content) in [("txt", doc.text().to_string()), ("ann", serialize_document(doc))] {
            let path = base.with_extension(ext);
            fs::write(&path, content).map_err(|source| CorpusError::Io { path, source })?;
        }
    }
    Ok(())
}
