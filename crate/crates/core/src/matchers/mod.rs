//! Object matchers: alias containment, dates, quantity surface forms, and
//! the per-triple dispatch used by the aligner and the heuristic scorer.

mod alias;
mod dates;

use std::collections::BTreeSet;
use std::sync::OnceLock;

use thiserror::Error;

use crate::model::{EntityCatalog, EntityId, FlatTriple, ObjectValue, QuantityValue};

pub use alias::{contains_alias, AliasHits, AliasIndex, PatternId};
pub use dates::{date_matches, extract_dates, parse_date, ExtractedDate, MONTHS};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatchError {
    #[error("unknown unit entity `{0}`")]
    UnresolvedUnit(EntityId),
    #[error("unknown entity `{0}`")]
    UnresolvedEntity(EntityId),
    #[error("too many alias patterns for one index")]
    TooManyPatterns,
    #[error("failed to build alias automaton: {0}")]
    Automaton(String),
}

/// Textual forms of an amount: the exact source text, plus the bare digits
/// when the amount is integral and carries an explicit `+`.
fn amount_forms(q: &QuantityValue) -> Vec<&str> {
    let exact = q.amount();
    let mut forms = vec![exact];
    if q.is_integral() {
        if let Some(unsigned) = exact.strip_prefix('+') {
            forms.push(unsigned);
        }
    }
    forms
}

/// All strings under which a quantity may appear in text: each amount form
/// joined with each unit alias, or the amount forms alone when unitless.
pub fn quantity_surface_forms(
    q: &QuantityValue,
    catalog: &EntityCatalog,
) -> Result<BTreeSet<String>, MatchError> {
    let amounts = amount_forms(q);
    let Some(unit_id) = q.unit() else {
        return Ok(amounts.into_iter().map(str::to_owned).collect());
    };
    let unit = catalog
        .get(unit_id)
        .ok_or_else(|| MatchError::UnresolvedUnit(unit_id.clone()))?;
    let mut forms = BTreeSet::new();
    for a in &amounts {
        for alias in unit.aliases() {
            forms.insert(format!("{a} {alias}"));
        }
    }
    Ok(forms)
}

/// A sentence prepared for matching many triples against it.
pub struct SentenceView<'a> {
    text: &'a str,
    hits: Option<AliasHits>,
    folded: OnceLock<String>,
    dates: OnceLock<Vec<ExtractedDate>>,
}

impl<'a> SentenceView<'a> {
    /// Scans `text` once against `index` when one is given; without an
    /// index every alias check is a direct scan.
    pub fn new(text: &'a str, index: Option<&AliasIndex>) -> Self {
        let folded = OnceLock::new();
        let hits = index.map(|idx| {
            let f = alias::fold(text);
            let hits = idx.find_folded(&f);
            let _ = folded.set(f);
            hits
        });
        SentenceView {
            text,
            hits,
            folded,
            dates: OnceLock::new(),
        }
    }

    pub fn text(&self) -> &'a str {
        self.text
    }

    fn folded(&self) -> &str {
        self.folded.get_or_init(|| alias::fold(self.text))
    }

    pub fn dates(&self) -> &[ExtractedDate] {
        self.dates.get_or_init(|| extract_dates(self.text))
    }
}

/// A triple's object compiled down to what must be found in a sentence.
#[derive(Debug, Clone)]
pub enum ObjectProbe {
    /// Any of these folded surface strings, word-bounded. Forms known to the
    /// alias index also carry their pattern id.
    Surface(Vec<(Option<PatternId>, String)>),
    Date(crate::model::DateValue),
    /// Unresolvable object; never matches.
    Never,
}

impl ObjectProbe {
    pub fn surface<S: AsRef<str>>(forms: &[S], index: Option<&AliasIndex>) -> Self {
        ObjectProbe::Surface(
            forms
                .iter()
                .map(|f| {
                    let f = f.as_ref();
                    (index.and_then(|idx| idx.pattern_id(f)), alias::fold(f))
                })
                .collect(),
        )
    }

    pub fn compile(object: &ObjectValue, catalog: &EntityCatalog, index: Option<&AliasIndex>) -> Self {
        match object {
            ObjectValue::Entity(id) => match catalog.get(id) {
                Some(e) => {
                    let aliases: Vec<&String> = e.aliases().iter().collect();
                    Self::surface(&aliases, index)
                }
                None => ObjectProbe::Never,
            },
            ObjectValue::Quantity(q) => match quantity_surface_forms(q, catalog) {
                Ok(forms) => Self::surface(&forms.into_iter().collect::<Vec<_>>(), index),
                Err(_) => ObjectProbe::Never,
            },
            ObjectValue::Date(d) => ObjectProbe::Date(*d),
        }
    }

    pub fn matches(&self, view: &SentenceView) -> bool {
        match self {
            ObjectProbe::Surface(forms) => forms.iter().any(|(id, folded)| match (id, &view.hits) {
                (Some(id), Some(hits)) => hits.contains(*id),
                _ => alias::contains_folded(view.folded(), folded),
            }),
            ObjectProbe::Date(d) => date_matches(d, view.dates()),
            ObjectProbe::Never => false,
        }
    }
}

/// Does `sentence` express the object of `triple`? Entities match on any
/// alias, quantities on any surface form, dates by the component rule.
/// Unresolvable ids never match.
pub fn match_triple(
    sentence: &str,
    triple: &FlatTriple,
    catalog: &EntityCatalog,
    alias_index: Option<&AliasIndex>,
) -> bool {
    let probe = ObjectProbe::compile(&triple.object, catalog, alias_index);
    probe.matches(&SentenceView::new(sentence, alias_index))
}
