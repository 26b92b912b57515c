//! Text renderings consumed by the external generator and emitted as
//! corpora: object and group linearization, training pairs, and retrieval
//! documents.

use std::collections::BTreeMap;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aligner::AlignmentExample;
use crate::grouper::TripleGroup;
use crate::matchers::MONTHS;
use crate::model::{DateValue, EntityCatalog, EntityId, FlatTriple, ObjectValue};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SerializeError {
    #[error("unknown entity `{0}`")]
    UnresolvedEntity(EntityId),
    #[error("cannot serialize an empty group")]
    EmptyGroup,
}

/// `DD Month YYYY`; unknown day renders as `00`, unknown month is omitted.
pub fn render_date(d: &DateValue) -> String {
    match d.month() {
        0 => format!("{:02} {}", d.day(), d.year()),
        m => format!("{:02} {} {}", d.day(), MONTHS[m as usize - 1], d.year()),
    }
}

/// Surface text of an object as it appears in generator inputs.
pub fn render_object(o: &ObjectValue, catalog: &EntityCatalog) -> Result<String, SerializeError> {
    let name = |id: &EntityId| {
        catalog
            .get(id)
            .map(|e| e.canonical_name().to_owned())
            .ok_or_else(|| SerializeError::UnresolvedEntity(id.clone()))
    };
    match o {
        ObjectValue::Entity(id) => name(id),
        ObjectValue::Quantity(q) => match q.unit() {
            Some(u) => Ok(format!("{} {}", q.amount(), name(u)?)),
            None => Ok(q.amount().to_owned()),
        },
        ObjectValue::Date(d) => Ok(render_date(d)),
    }
}

/// Replaces control characters (tabs and newlines included) with spaces and
/// collapses whitespace runs, so a field is safe inside TSV and line formats.
pub fn sanitize(text: &str) -> String {
    text.split(|c: char| c.is_whitespace() || c.is_control())
        .filter(|w| !w.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}

/// `<subject> <rel_1> <obj_1>, <rel_2> <obj_2>, ...`
pub fn serialize_triples(
    subject: &EntityId,
    triples: &[FlatTriple],
    catalog: &EntityCatalog,
) -> Result<String, SerializeError> {
    if triples.is_empty() {
        return Err(SerializeError::EmptyGroup);
    }
    let subject = catalog
        .get(subject)
        .ok_or_else(|| SerializeError::UnresolvedEntity(subject.clone()))?;
    let mut items = Vec::with_capacity(triples.len());
    for t in triples {
        items.push(format!("{} {}", t.relation_phrase, render_object(&t.object, catalog)?));
    }
    Ok(sanitize(&format!("{} {}", subject.canonical_name(), items.join(", "))))
}

pub fn serialize_group(g: &TripleGroup, catalog: &EntityCatalog) -> Result<String, SerializeError> {
    serialize_triples(&g.subject, &g.chain, catalog)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingPair {
    pub input: String,
    pub target: String,
}

/// One `(input, target)` pair per example, in example order.
pub fn emit_training_pairs<'a>(
    examples: impl IntoIterator<Item = &'a AlignmentExample> + 'a,
    catalog: &'a EntityCatalog,
) -> impl Iterator<Item = Result<TrainingPair, SerializeError>> + 'a {
    examples.into_iter().map(move |ex| {
        Ok(TrainingPair {
            input: serialize_triples(&ex.subject, &ex.triples, catalog)?,
            target: sanitize(&ex.sentence),
        })
    })
}

/// Writes `input \t target \n` lines.
pub fn write_training_tsv<W: Write>(
    mut out: W,
    pairs: impl IntoIterator<Item = TrainingPair>,
) -> io::Result<()> {
    for p in pairs {
        writeln!(out, "{}\t{}", sanitize(&p.input), sanitize(&p.target))?;
    }
    Ok(())
}

/// Generated sentences merged per subject, as a retrieval document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusDocument {
    pub subject: EntityId,
    #[serde(skip)]
    pub sentences: Vec<String>,
    pub text: String,
    pub n_sentences: usize,
}

/// Groups sentences by subject. Documents come out in subject-id order and
/// keep the input order of sentences within a subject.
pub fn package_documents<I, S>(sentences: I) -> Vec<CorpusDocument>
where
    I: IntoIterator<Item = (EntityId, S)>,
    S: Into<String>,
{
    let mut by_subject: BTreeMap<EntityId, Vec<String>> = BTreeMap::new();
    for (subject, text) in sentences {
        by_subject.entry(subject).or_default().push(sanitize(&text.into()));
    }
    by_subject
        .into_iter()
        .map(|(subject, sentences)| CorpusDocument {
            subject,
            text: sentences.join("\n"),
            n_sentences: sentences.len(),
            sentences,
        })
        .collect()
}
