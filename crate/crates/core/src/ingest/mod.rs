//! Streaming loaders for the three JSON-Lines inputs.
//!
//! Each loader reads one record per line. A bad record is rejected with a
//! line-numbered [`RecordError`]; in lenient mode the error is collected and
//! loading continues, in strict mode the first one aborts the load. Lines
//! are parsed in parallel and validated sequentially in file order, so
//! "first record wins" rules stay deterministic.

mod sentences;

use std::collections::BTreeMap;
use std::io::BufRead;

use rayon::prelude::*;
use serde::Deserialize;
use thiserror::Error;

use crate::model::{
    DateValue, EntityCatalog, EntityId, EntityRecord, ModelError, ObjectValue, PageText,
    QuantityValue, Subproperty, Triple,
};

pub use sentences::split_sentences;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("read error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Record(#[from] RecordError),
}

/// A rejected input record.
#[derive(Debug, Error)]
#[error("line {line}{}: {kind}", id.as_ref().map(|i| format!(" (id `{i}`)")).unwrap_or_default())]
pub struct RecordError {
    pub line: usize,
    pub id: Option<String>,
    pub kind: RecordErrorKind,
}

#[derive(Debug, Error)]
pub enum RecordErrorKind {
    #[error("malformed record: {0}")]
    Json(#[from] serde_json::Error),
    #[error("duplicate entity id")]
    DuplicateId,
    #[error("duplicate page for subject")]
    DuplicatePage,
    #[error("unknown subject id `{0}`")]
    UnknownSubject(String),
    #[error("unknown object entity id `{0}`")]
    UnknownObject(String),
    #[error("unknown unit entity id `{0}`")]
    UnknownUnit(String),
    #[error("invalid date: {0}")]
    InvalidDate(ModelError),
    #[error(transparent)]
    Invalid(ModelError),
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    /// Abort on the first rejected record instead of skipping it.
    pub strict: bool,
    /// Insert a missing canonical name into an entity's alias set.
    pub repair: bool,
}

/// Result of a lenient load: the accepted items plus every rejection.
#[derive(Debug)]
pub struct Loaded<T> {
    pub items: T,
    pub rejected: Vec<RecordError>,
}

/// Reads non-blank lines with 1-based line numbers.
fn read_lines<R: BufRead>(reader: R) -> Result<Vec<(usize, String)>, IngestError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push((i + 1, line));
        }
    }
    Ok(out)
}

fn parse_all<T>(lines: &[(usize, String)]) -> Vec<(usize, Result<T, serde_json::Error>)>
where
    T: for<'de> Deserialize<'de> + Send,
{
    lines
        .par_iter()
        .map(|(n, line)| (*n, serde_json::from_str::<T>(line)))
        .collect()
}

struct Rejections {
    strict: bool,
    errors: Vec<RecordError>,
}

impl Rejections {
    fn new(strict: bool) -> Self {
        Rejections {
            strict,
            errors: Vec::new(),
        }
    }

    fn push(&mut self, line: usize, id: Option<&str>, kind: RecordErrorKind) -> Result<(), IngestError> {
        let err = RecordError {
            line,
            id: id.map(str::to_owned),
            kind,
        };
        if self.strict {
            return Err(err.into());
        }
        self.errors.push(err);
        Ok(())
    }
}

#[derive(Deserialize)]
struct EntityLine {
    id: String,
    name: String,
    #[serde(default)]
    aliases: Vec<String>,
    #[serde(default)]
    has_wiki_page: bool,
}

/// Loads `entities.jsonl` into a validated catalog.
pub fn validate_catalog<R: BufRead>(
    reader: R,
    opts: LoadOptions,
) -> Result<Loaded<EntityCatalog>, IngestError> {
    let lines = read_lines(reader)?;
    let mut catalog = EntityCatalog::new();
    let mut rejected = Rejections::new(opts.strict);
    for (line, parsed) in parse_all::<EntityLine>(&lines) {
        let rec = match parsed {
            Ok(r) => r,
            Err(e) => {
                rejected.push(line, None, e.into())?;
                continue;
            }
        };
        let built = if opts.repair {
            EntityRecord::new_repaired(rec.id.as_str(), rec.name, rec.aliases, rec.has_wiki_page)
        } else {
            EntityRecord::new(rec.id.as_str(), rec.name, rec.aliases, rec.has_wiki_page)
        };
        match built {
            Ok(entity) => {
                if catalog.insert(entity).is_err() {
                    rejected.push(line, Some(&rec.id), RecordErrorKind::DuplicateId)?;
                }
            }
            Err(e) => rejected.push(line, Some(&rec.id), RecordErrorKind::Invalid(e))?,
        }
    }
    Ok(Loaded {
        items: catalog,
        rejected: rejected.errors,
    })
}

#[derive(Deserialize)]
#[serde(rename_all = "snake_case")]
enum ObjectLine {
    Entity(String),
    Quantity {
        amount: String,
        #[serde(default)]
        unit: Option<String>,
    },
    Date {
        #[serde(default)]
        day: i64,
        #[serde(default)]
        month: i64,
        #[serde(default)]
        year: i64,
    },
}

#[derive(Deserialize)]
struct SubpropertyLine {
    name: String,
    value: ObjectLine,
}

#[derive(Deserialize)]
struct TripleLine {
    subject: String,
    relation: String,
    object: ObjectLine,
    #[serde(default)]
    subproperties: Vec<SubpropertyLine>,
}

fn resolve_object(obj: ObjectLine, catalog: &EntityCatalog) -> Result<ObjectValue, RecordErrorKind> {
    match obj {
        ObjectLine::Entity(id) => {
            let id = EntityId::new(id);
            if !catalog.contains(&id) {
                return Err(RecordErrorKind::UnknownObject(id.to_string()));
            }
            Ok(ObjectValue::Entity(id))
        }
        ObjectLine::Quantity { amount, unit } => {
            let unit = unit.map(EntityId::new);
            if let Some(u) = &unit {
                if !catalog.contains(u) {
                    return Err(RecordErrorKind::UnknownUnit(u.to_string()));
                }
            }
            QuantityValue::new(amount, unit)
                .map(ObjectValue::Quantity)
                .map_err(RecordErrorKind::Invalid)
        }
        ObjectLine::Date { day, month, year } => DateValue::from_parts(day, month, year)
            .map(ObjectValue::Date)
            .map_err(RecordErrorKind::InvalidDate),
    }
}

fn resolve_triple(line: TripleLine, catalog: &EntityCatalog) -> Result<Triple, RecordErrorKind> {
    let subject = EntityId::new(line.subject);
    if !catalog.contains(&subject) {
        return Err(RecordErrorKind::UnknownSubject(subject.to_string()));
    }
    let object = resolve_object(line.object, catalog)?;
    let mut triple = Triple::new(subject, line.relation, object).map_err(RecordErrorKind::Invalid)?;
    for sub in line.subproperties {
        let value = resolve_object(sub.value, catalog)?;
        triple.subproperties.push(Subproperty {
            name: sub.name,
            value,
        });
    }
    Ok(triple)
}

/// Loads `triples.jsonl`, resolving every id against `catalog`.
pub fn load_triples<R: BufRead>(
    reader: R,
    catalog: &EntityCatalog,
    opts: LoadOptions,
) -> Result<Loaded<Vec<Triple>>, IngestError> {
    let lines = read_lines(reader)?;
    let resolved: Vec<(usize, Result<Triple, RecordErrorKind>)> = lines
        .par_iter()
        .map(|(n, line)| {
            let r = serde_json::from_str::<TripleLine>(line)
                .map_err(RecordErrorKind::from)
                .and_then(|t| resolve_triple(t, catalog));
            (*n, r)
        })
        .collect();
    let mut triples = Vec::with_capacity(resolved.len());
    let mut rejected = Rejections::new(opts.strict);
    for (line, r) in resolved {
        match r {
            Ok(t) => triples.push(t),
            Err(kind) => rejected.push(line, None, kind)?,
        }
    }
    Ok(Loaded {
        items: triples,
        rejected: rejected.errors,
    })
}

#[derive(Deserialize)]
struct PageLine {
    subject: String,
    root_section: String,
    #[serde(default)]
    sentences: Option<Vec<String>>,
}

/// Loads `pages.jsonl`. Pages that carry their own `sentences` bypass the
/// built-in splitter.
pub fn load_pages<R: BufRead>(
    reader: R,
    catalog: &EntityCatalog,
    opts: LoadOptions,
) -> Result<Loaded<Vec<PageText>>, IngestError> {
    let lines = read_lines(reader)?;
    let parsed: Vec<(usize, Result<PageText, RecordErrorKind>)> = lines
        .par_iter()
        .map(|(n, line)| {
            let r = serde_json::from_str::<PageLine>(line)
                .map_err(RecordErrorKind::from)
                .map(|p| {
                    let sentences = p
                        .sentences
                        .unwrap_or_else(|| split_sentences(&p.root_section));
                    PageText {
                        subject: EntityId::new(p.subject),
                        root_section: p.root_section,
                        sentences,
                    }
                });
            (*n, r)
        })
        .collect();

    let mut seen = std::collections::HashSet::new();
    let mut pages = Vec::with_capacity(parsed.len());
    let mut rejected = Rejections::new(opts.strict);
    for (line, r) in parsed {
        match r {
            Ok(page) => {
                let id = page.subject.to_string();
                if !catalog.contains(&page.subject) {
                    rejected.push(line, Some(&id), RecordErrorKind::UnknownSubject(id.clone()))?;
                } else if !seen.insert(page.subject.clone()) {
                    rejected.push(line, Some(&id), RecordErrorKind::DuplicatePage)?;
                } else {
                    pages.push(page);
                }
            }
            Err(kind) => rejected.push(line, None, kind)?,
        }
    }
    Ok(Loaded {
        items: pages,
        rejected: rejected.errors,
    })
}

/// Everything the aligner needs, indexed by subject.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CorpusBundle {
    catalog: EntityCatalog,
    triples: BTreeMap<EntityId, Vec<Triple>>,
    pages: BTreeMap<EntityId, PageText>,
}

#[derive(Debug, Error)]
pub enum BundleError {
    #[error("unknown subject id `{0}`")]
    UnknownSubject(EntityId),
    #[error("unknown entity `{0}` referenced by a triple of `{1}`")]
    UnknownObject(EntityId, EntityId),
    #[error("duplicate page for subject `{0}`")]
    DuplicatePage(EntityId),
}

fn object_refs(o: &ObjectValue) -> Option<&EntityId> {
    match o {
        ObjectValue::Entity(id) => Some(id),
        ObjectValue::Quantity(q) => q.unit(),
        ObjectValue::Date(_) => None,
    }
}

impl CorpusBundle {
    /// Builds a bundle, checking that every referenced id resolves. Triples
    /// keep their relative input order within each subject.
    pub fn new(
        catalog: EntityCatalog,
        triples: impl IntoIterator<Item = Triple>,
        pages: impl IntoIterator<Item = PageText>,
    ) -> Result<Self, BundleError> {
        let mut by_subject: BTreeMap<EntityId, Vec<Triple>> = BTreeMap::new();
        for t in triples {
            if !catalog.contains(&t.subject) {
                return Err(BundleError::UnknownSubject(t.subject));
            }
            let refs = std::iter::once(&t.object).chain(t.subproperties.iter().map(|s| &s.value));
            for id in refs.filter_map(object_refs) {
                if !catalog.contains(id) {
                    return Err(BundleError::UnknownObject(id.clone(), t.subject.clone()));
                }
            }
            by_subject.entry(t.subject.clone()).or_default().push(t);
        }
        let mut page_map = BTreeMap::new();
        for p in pages {
            if !catalog.contains(&p.subject) {
                return Err(BundleError::UnknownSubject(p.subject));
            }
            if page_map.contains_key(&p.subject) {
                return Err(BundleError::DuplicatePage(p.subject));
            }
            page_map.insert(p.subject.clone(), p);
        }
        Ok(CorpusBundle {
            catalog,
            triples: by_subject,
            pages: page_map,
        })
    }

    pub fn catalog(&self) -> &EntityCatalog {
        &self.catalog
    }

    /// Subjects with at least one triple, in id order.
    pub fn triples(&self) -> &BTreeMap<EntityId, Vec<Triple>> {
        &self.triples
    }

    pub fn triples_of(&self, subject: &EntityId) -> &[Triple] {
        self.triples.get(subject).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn pages(&self) -> &BTreeMap<EntityId, PageText> {
        &self.pages
    }

    pub fn triple_count(&self) -> usize {
        self.triples.values().map(Vec::len).sum()
    }
}
