//! Distant-supervision alignment of a subject's triples to the sentences of
//! its own page.
//!
//! For every sentence of the page root section, every (flattened) triple of
//! the page's subject is tested against the sentence; matching only looks at
//! the object, never the relation. A sentence with at least one match
//! becomes one [`AlignmentExample`] carrying all of its matches. If the
//! sentence does not name the subject, its first animate third-person
//! singular pronoun is replaced by the subject's canonical name.

use std::borrow::Cow;
use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::CorpusBundle;
use crate::matchers::{quantity_surface_forms, AliasIndex, MatchError, ObjectProbe, SentenceView};
use crate::model::{EntityCatalog, EntityId, FlatTriple, ObjectValue, PageText, Triple};
use crate::report::AlignmentStats;
use crate::serializer::render_object;

/// One training sentence and the triples aligned to it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignmentExample {
    pub subject: EntityId,
    pub sentence: String,
    pub original_sentence: String,
    pub pronoun_replaced: bool,
    pub triples: Vec<FlatTriple>,
    pub page: EntityId,
    pub sentence_index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FlattenError {
    #[error("qualifier `{name}` on a {kind} object of `{relation}` has no object name to attach to; dropped")]
    UnnamedObject {
        relation: String,
        name: String,
        kind: &'static str,
    },
    #[error("qualifier `{name}` of `{relation}`: object `{object}` is not in the catalog; dropped")]
    UnresolvedObject {
        relation: String,
        name: String,
        object: EntityId,
    },
}

/// Separator between a relation and a qualifier name in statistics keys.
pub const QUALIFIER_SEPARATOR: char = '/';

/// Splits a triple into its main fact plus one fact per qualifier.
///
/// A qualifier `(name, value)` on `(s, r, o)` becomes
/// `(s, "<name of o> <name>", value)`. Qualifiers only make sense on entity
/// objects; on quantities and dates they are dropped with a diagnostic.
pub fn flatten_subproperties(
    t: &Triple,
    catalog: &EntityCatalog,
) -> (Vec<FlatTriple>, Vec<FlattenError>) {
    let mut flat = vec![FlatTriple::main(t)];
    let mut errors = Vec::new();
    if t.subproperties.is_empty() {
        return (flat, errors);
    }
    let object_name = match &t.object {
        ObjectValue::Entity(id) => match render_object(&t.object, catalog) {
            Ok(name) => Ok(name),
            Err(_) => Err(id.clone()),
        },
        ObjectValue::Quantity(_) | ObjectValue::Date(_) => {
            let kind = if matches!(t.object, ObjectValue::Date(_)) { "date" } else { "quantity" };
            for sub in &t.subproperties {
                errors.push(FlattenError::UnnamedObject {
                    relation: t.relation.clone(),
                    name: sub.name.clone(),
                    kind,
                });
            }
            return (flat, errors);
        }
    };
    for sub in &t.subproperties {
        match &object_name {
            Ok(name) => flat.push(FlatTriple {
                subject: t.subject.clone(),
                relation: format!("{}{QUALIFIER_SEPARATOR}{}", t.relation, sub.name),
                relation_phrase: format!("{name} {}", sub.name),
                object: sub.value.clone(),
            }),
            Err(object) => errors.push(FlattenError::UnresolvedObject {
                relation: t.relation.clone(),
                name: sub.name.clone(),
                object: object.clone(),
            }),
        }
    }
    (flat, errors)
}

/// Flattens a list of triples, discarding diagnostics.
pub fn flatten_all<'a>(
    triples: impl IntoIterator<Item = &'a Triple>,
    catalog: &EntityCatalog,
) -> Vec<FlatTriple> {
    triples
        .into_iter()
        .flat_map(|t| flatten_subproperties(t, catalog).0)
        .collect()
}

const PERSONAL: &[&str] = &["he", "she", "him"];
const POSSESSIVE: &[&str] = &["his", "hers"];

// Words that follow an object "her" ("told her that", "saw her in") rather
// than a possessive one ("her career").
const AFTER_OBJECT_HER: &[&str] = &[
    "a", "about", "after", "again", "all", "also", "an", "and", "are", "as", "at", "away", "back",
    "be", "because", "been", "before", "being", "but", "by", "could", "did", "do", "does", "down",
    "during", "for", "from", "had", "has", "have", "her", "herself", "him", "his", "if", "in",
    "into", "is", "it", "later", "may", "might", "more", "must", "not", "of", "off", "on", "once",
    "onto", "or", "out", "over", "shall", "should", "so", "than", "that", "the", "their", "them",
    "then", "there", "these", "they", "this", "those", "through", "to", "too", "until", "up",
    "upon", "was", "were", "when", "where", "which", "while", "who", "whom", "will", "with",
    "would", "yet",
];

/// Byte ranges of alphanumeric runs (apostrophes kept inside words).
fn words(s: &str) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for (i, c) in s.char_indices() {
        let in_word = c.is_alphanumeric() || (c == '\'' && start.is_some());
        match (in_word, start) {
            (true, None) => start = Some(i),
            (false, Some(st)) => {
                out.push((st, i));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(st) = start {
        out.push((st, s.len()));
    }
    out
}

/// Replaces the first of `he/she/him/her/his/hers` with the subject name.
///
/// Possessive forms get `'s` appended. `her` counts as possessive when the
/// next token is a word outside a small stoplist of function words and
/// auxiliaries; otherwise it is the object pronoun.
pub fn replace_pronoun(sentence: &str, subject_name: &str) -> (String, bool) {
    let tokens = words(sentence);
    for (k, &(start, end)) in tokens.iter().enumerate() {
        let lower = sentence[start..end].to_lowercase();
        let possessive = if PERSONAL.contains(&lower.as_str()) {
            false
        } else if POSSESSIVE.contains(&lower.as_str()) {
            true
        } else if lower == "her" {
            tokens.get(k + 1).is_some_and(|&(ns, ne)| {
                // the next word must directly follow, separated only by spaces
                sentence[end..ns].chars().all(char::is_whitespace)
                    && !AFTER_OBJECT_HER.contains(&sentence[ns..ne].to_lowercase().as_str())
            })
        } else {
            continue;
        };
        let mut out = String::with_capacity(sentence.len() + subject_name.len() + 2);
        out.push_str(&sentence[..start]);
        out.push_str(subject_name);
        if possessive {
            out.push_str("'s");
        }
        out.push_str(&sentence[end..]);
        return (out, true);
    }
    (sentence.to_owned(), false)
}

/// Shared read-only matching state for a whole corpus.
pub struct Aligner<'a> {
    catalog: &'a EntityCatalog,
    index: Cow<'a, AliasIndex>,
}

impl<'a> Aligner<'a> {
    /// Indexes every alias in the catalog plus every quantity surface form
    /// that occurs in `triples`.
    pub fn new<'t>(
        catalog: &'a EntityCatalog,
        triples: impl IntoIterator<Item = &'t Triple>,
    ) -> Result<Self, MatchError> {
        let mut patterns: BTreeSet<String> = BTreeSet::new();
        for t in triples {
            let objects = std::iter::once(&t.object).chain(t.subproperties.iter().map(|s| &s.value));
            for o in objects {
                if let ObjectValue::Quantity(q) = o {
                    if let Ok(forms) = quantity_surface_forms(q, catalog) {
                        patterns.extend(forms);
                    }
                }
            }
        }
        let aliases = catalog.iter().flat_map(|e| e.aliases().iter());
        let index = AliasIndex::new(aliases.chain(patterns.iter()))?;
        Ok(Aligner {
            catalog,
            index: Cow::Owned(index),
        })
    }

    pub fn for_bundle(bundle: &'a CorpusBundle) -> Result<Self, MatchError> {
        Self::new(bundle.catalog(), bundle.triples().values().flatten())
    }

    pub fn index(&self) -> &AliasIndex {
        &self.index
    }

    /// Aligns one page. Triples whose subject is not the page subject are
    /// ignored.
    pub fn align_page(&self, page: &PageText, subject_triples: &[Triple]) -> Vec<AlignmentExample> {
        let flat: Vec<FlatTriple> = flatten_all(
            subject_triples.iter().filter(|t| t.subject == page.subject),
            self.catalog,
        );
        if flat.is_empty() {
            return Vec::new();
        }
        let probes: Vec<ObjectProbe> = flat
            .iter()
            .map(|t| ObjectProbe::compile(&t.object, self.catalog, Some(self.index.as_ref())))
            .collect();
        let subject = self.catalog.get(&page.subject);
        let subject_probe = subject.map(|e| {
            let aliases: Vec<&String> = e.aliases().iter().collect();
            ObjectProbe::surface(&aliases, Some(self.index.as_ref()))
        });

        let mut out = Vec::new();
        for (idx, sentence) in page.sentences.iter().enumerate() {
            let view = SentenceView::new(sentence, Some(self.index.as_ref()));
            let matched: Vec<FlatTriple> = flat
                .iter()
                .zip(&probes)
                .filter(|(_, p)| p.matches(&view))
                .map(|(t, _)| t.clone())
                .collect();
            if matched.is_empty() {
                continue;
            }
            let names_subject = subject_probe.as_ref().is_some_and(|p| p.matches(&view));
            let (text, replaced) = match subject {
                Some(e) if !names_subject => replace_pronoun(sentence, e.canonical_name()),
                _ => (sentence.clone(), false),
            };
            out.push(AlignmentExample {
                subject: page.subject.clone(),
                sentence: text,
                original_sentence: sentence.clone(),
                pronoun_replaced: replaced,
                triples: matched,
                page: page.subject.clone(),
                sentence_index: idx,
            });
        }
        out
    }
}

/// Free-function form of [`Aligner::align_page`].
pub fn align_page(
    page: &PageText,
    subject_triples: &[Triple],
    catalog: &EntityCatalog,
    alias_index: &AliasIndex,
) -> Vec<AlignmentExample> {
    // Reuse the supplied index; entity aliases missing from it are scanned
    // directly by the probes.
    let aligner = Aligner {
        catalog,
        index: Cow::Borrowed(alias_index),
    };
    aligner.align_page(page, subject_triples)
}

/// Aligns every page of the bundle, in subject-id then sentence order.
///
/// Runs on the current rayon pool; output does not depend on its size.
pub fn align_corpus(bundle: &CorpusBundle) -> Result<(Vec<AlignmentExample>, AlignmentStats), MatchError> {
    let aligner = Aligner::for_bundle(bundle)?;
    let pages: Vec<&PageText> = bundle.pages().values().collect();
    let examples: Vec<AlignmentExample> = pages
        .par_iter()
        .map(|page| aligner.align_page(page, bundle.triples_of(&page.subject)))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    let stats = alignment_stats(bundle, &examples);
    Ok((examples, stats))
}

/// Counts over a bundle and its alignment output. Triples are counted after
/// qualifier flattening; a triple aligned to several sentences counts once.
pub fn alignment_stats(bundle: &CorpusBundle, examples: &[AlignmentExample]) -> AlignmentStats {
    let mut total_triples = 0u64;
    let mut relations: BTreeSet<String> = BTreeSet::new();
    let mut aligned_relations: BTreeSet<&str> = BTreeSet::new();
    let mut aligned_triples = 0u64;
    let mut by_page: BTreeMap<&EntityId, Vec<&AlignmentExample>> =
        BTreeMap::new();
    for ex in examples {
        by_page.entry(&ex.page).or_default().push(ex);
    }
    for (subject, triples) in bundle.triples() {
        let flat = flatten_all(triples, bundle.catalog());
        total_triples += flat.len() as u64;
        let page_examples = by_page.get(subject).map(Vec::as_slice).unwrap_or(&[]);
        // Exact duplicates in the input all count as aligned when one does.
        let mut remaining: HashMap<&FlatTriple, usize> = HashMap::new();
        for t in &flat {
            relations.insert(t.relation.clone());
            *remaining.entry(t).or_default() += 1;
        }
        let aligned: BTreeSet<&FlatTriple> = page_examples.iter().flat_map(|e| e.triples.iter()).collect();
        for t in aligned {
            if let Some(n) = remaining.get(t) {
                aligned_triples += *n as u64;
                aligned_relations.insert(t.relation.as_str());
            }
        }
    }
    AlignmentStats {
        total_triples,
        triples_aligned: aligned_triples,
        sentences_selected: examples.len() as u64,
        total_relations: relations.len() as u64,
        relations_aligned: aligned_relations.len() as u64,
    }
}
