//! Shared domain types: entities, typed object values, triples and pages.
//!
//! Everything here is immutable once constructed. Constructors validate
//! their invariants, and the serde impls route through the same checks so
//! a value read back from disk is as trustworthy as one built in memory.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("canonical name is empty")]
    EmptyCanonicalName,
    #[error("alias set contains an empty alias")]
    EmptyAlias,
    #[error("aliases do not contain the canonical name `{0}`")]
    MissingCanonicalAlias(String),
    #[error("date has no year")]
    MissingYear,
    #[error("day {0} out of range 0..=31")]
    DayOutOfRange(i64),
    #[error("month {0} out of range 0..=12")]
    MonthOutOfRange(i64),
    #[error("year {0} out of range")]
    YearOutOfRange(i64),
    #[error("day given without a month")]
    DayWithoutMonth,
    #[error("amount `{0}` is not a signed decimal number")]
    InvalidAmount(String),
    #[error("relation name is empty")]
    EmptyRelation,
}

/// Opaque entity identifier, e.g. a Wikidata QID.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EntityId(String);

impl EntityId {
    pub fn new(id: impl Into<String>) -> Self {
        EntityId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for EntityId {
    fn from(s: &str) -> Self {
        EntityId(s.to_owned())
    }
}

impl From<String> for EntityId {
    fn from(s: String) -> Self {
        EntityId(s)
    }
}

/// A KG entity and every surface form it may take in text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "EntityWire", into = "EntityWire")]
pub struct EntityRecord {
    id: EntityId,
    canonical_name: String,
    aliases: BTreeSet<String>,
    has_wiki_page: bool,
}

impl EntityRecord {
    pub fn new<I, S>(
        id: impl Into<EntityId>,
        canonical_name: impl Into<String>,
        aliases: I,
        has_wiki_page: bool,
    ) -> Result<Self, ModelError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let canonical_name = canonical_name.into();
        if canonical_name.trim().is_empty() {
            return Err(ModelError::EmptyCanonicalName);
        }
        let aliases: BTreeSet<String> = aliases.into_iter().map(Into::into).collect();
        if aliases.iter().any(|a| a.trim().is_empty()) {
            return Err(ModelError::EmptyAlias);
        }
        if !aliases.contains(&canonical_name) {
            return Err(ModelError::MissingCanonicalAlias(canonical_name));
        }
        Ok(EntityRecord {
            id: id.into(),
            canonical_name,
            aliases,
            has_wiki_page,
        })
    }

    /// Like [`EntityRecord::new`], but inserts the canonical name into the
    /// alias set instead of rejecting the record when it is missing.
    pub fn new_repaired<I, S>(
        id: impl Into<EntityId>,
        canonical_name: impl Into<String>,
        aliases: I,
        has_wiki_page: bool,
    ) -> Result<Self, ModelError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let canonical_name = canonical_name.into();
        let mut aliases: Vec<String> = aliases.into_iter().map(Into::into).collect();
        aliases.push(canonical_name.clone());
        Self::new(id, canonical_name, aliases, has_wiki_page)
    }

    pub fn id(&self) -> &EntityId {
        &self.id
    }

    pub fn canonical_name(&self) -> &str {
        &self.canonical_name
    }

    pub fn aliases(&self) -> &BTreeSet<String> {
        &self.aliases
    }

    pub fn has_wiki_page(&self) -> bool {
        self.has_wiki_page
    }
}

/// Wire form of an entity line in `entities.jsonl`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) struct EntityWire {
    pub id: String,
    pub name: String,
    #[serde(default)]
    pub aliases: Vec<String>,
    #[serde(default)]
    pub has_wiki_page: bool,
}

impl TryFrom<EntityWire> for EntityRecord {
    type Error = ModelError;

    fn try_from(w: EntityWire) -> Result<Self, Self::Error> {
        EntityRecord::new(w.id, w.name, w.aliases, w.has_wiki_page)
    }
}

impl From<EntityRecord> for EntityWire {
    fn from(e: EntityRecord) -> Self {
        EntityWire {
            id: e.id.0,
            name: e.canonical_name,
            aliases: e.aliases.into_iter().collect(),
            has_wiki_page: e.has_wiki_page,
        }
    }
}

/// Validated, id-indexed set of entities.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EntityCatalog {
    entities: BTreeMap<EntityId, EntityRecord>,
}

impl EntityCatalog {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts a record, handing it back if the id is already taken.
    pub fn insert(&mut self, record: EntityRecord) -> Result<(), EntityRecord> {
        if self.entities.contains_key(&record.id) {
            return Err(record);
        }
        self.entities.insert(record.id.clone(), record);
        Ok(())
    }

    pub fn get(&self, id: &EntityId) -> Option<&EntityRecord> {
        self.entities.get(id)
    }

    pub fn contains(&self, id: &EntityId) -> bool {
        self.entities.contains_key(id)
    }

    pub fn len(&self) -> usize {
        self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }

    /// Iterates records in id order.
    pub fn iter(&self) -> impl Iterator<Item = &EntityRecord> {
        self.entities.values()
    }
}

impl FromIterator<EntityRecord> for EntityCatalog {
    /// Later duplicates are dropped; use the ingest loader for diagnostics.
    fn from_iter<T: IntoIterator<Item = EntityRecord>>(iter: T) -> Self {
        let mut catalog = EntityCatalog::new();
        for record in iter {
            let _ = catalog.insert(record);
        }
        catalog
    }
}

/// A calendar date where day and month may be unknown (stored as 0).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "DateWire")]
pub struct DateValue {
    day: u8,
    month: u8,
    year: i32,
}

#[derive(Deserialize)]
struct DateWire {
    #[serde(default)]
    day: i64,
    #[serde(default)]
    month: i64,
    year: i64,
}

impl TryFrom<DateWire> for DateValue {
    type Error = ModelError;

    fn try_from(w: DateWire) -> Result<Self, Self::Error> {
        DateValue::from_parts(w.day, w.month, w.year)
    }
}

impl DateValue {
    pub fn new(day: u8, month: u8, year: i32) -> Result<Self, ModelError> {
        Self::from_parts(day.into(), month.into(), year.into())
    }

    /// Validates raw integer components as they come off the wire.
    pub fn from_parts(day: i64, month: i64, year: i64) -> Result<Self, ModelError> {
        if year == 0 {
            return Err(ModelError::MissingYear);
        }
        if !(0..=31).contains(&day) {
            return Err(ModelError::DayOutOfRange(day));
        }
        if !(0..=12).contains(&month) {
            return Err(ModelError::MonthOutOfRange(month));
        }
        let year = i32::try_from(year).map_err(|_| ModelError::YearOutOfRange(year))?;
        if day > 0 && month == 0 {
            return Err(ModelError::DayWithoutMonth);
        }
        Ok(DateValue {
            day: day as u8,
            month: month as u8,
            year,
        })
    }

    pub fn year_only(year: i32) -> Result<Self, ModelError> {
        Self::new(0, 0, year)
    }

    /// Day of month, 0 when unspecified.
    pub fn day(&self) -> u8 {
        self.day
    }

    /// Month 1..=12, 0 when unspecified.
    pub fn month(&self) -> u8 {
        self.month
    }

    pub fn year(&self) -> i32 {
        self.year
    }
}

/// An amount kept as its exact source text, with an optional unit entity.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "QuantityWire")]
pub struct QuantityValue {
    amount: String,
    unit: Option<EntityId>,
}

#[derive(Deserialize)]
struct QuantityWire {
    amount: String,
    #[serde(default)]
    unit: Option<EntityId>,
}

impl TryFrom<QuantityWire> for QuantityValue {
    type Error = ModelError;

    fn try_from(w: QuantityWire) -> Result<Self, Self::Error> {
        QuantityValue::new(w.amount, w.unit)
    }
}

impl QuantityValue {
    pub fn new(amount: impl Into<String>, unit: Option<EntityId>) -> Result<Self, ModelError> {
        let amount = amount.into();
        if !is_signed_decimal(&amount) {
            return Err(ModelError::InvalidAmount(amount));
        }
        Ok(QuantityValue { amount, unit })
    }

    pub fn amount(&self) -> &str {
        &self.amount
    }

    pub fn unit(&self) -> Option<&EntityId> {
        self.unit.as_ref()
    }

    /// True when the amount has no fractional part in its source text.
    pub fn is_integral(&self) -> bool {
        !self.amount.contains('.')
    }
}

/// `[+-]? digits ( '.' digits )?`
fn is_signed_decimal(s: &str) -> bool {
    let body = s.strip_prefix(['+', '-']).unwrap_or(s);
    let (int, frac) = match body.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (body, None),
    };
    let digits = |p: &str| !p.is_empty() && p.bytes().all(|b| b.is_ascii_digit());
    digits(int) && frac.is_none_or(digits)
}

/// Object of a triple. Serializes as `{"entity": ..}`, `{"quantity": ..}`
/// or `{"date": ..}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectValue {
    Entity(EntityId),
    Quantity(QuantityValue),
    Date(DateValue),
}

impl ObjectValue {
    pub fn as_entity(&self) -> Option<&EntityId> {
        match self {
            ObjectValue::Entity(id) => Some(id),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Subproperty {
    pub name: String,
    pub value: ObjectValue,
}

/// A `(subject, relation, object)` fact with optional qualifiers.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Triple {
    pub subject: EntityId,
    pub relation: String,
    pub object: ObjectValue,
    #[serde(default)]
    pub subproperties: Vec<Subproperty>,
}

impl Triple {
    pub fn new(
        subject: impl Into<EntityId>,
        relation: impl Into<String>,
        object: ObjectValue,
    ) -> Result<Self, ModelError> {
        let relation = relation.into();
        if relation.trim().is_empty() {
            return Err(ModelError::EmptyRelation);
        }
        Ok(Triple {
            subject: subject.into(),
            relation,
            object,
            subproperties: Vec::new(),
        })
    }

    pub fn with_subproperty(mut self, name: impl Into<String>, value: ObjectValue) -> Self {
        self.subproperties.push(Subproperty {
            name: name.into(),
            value,
        });
        self
    }
}

/// A triple after qualifier flattening.
///
/// `relation` is the statistics key used for co-occurrence counting: the KG
/// relation for a main triple, `"<relation>/<qualifier>"` for a flattened
/// qualifier. `relation_phrase` is what gets verbalized; for qualifiers it
/// carries the main object's name, e.g. `"Michelle place of marriage"`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FlatTriple {
    pub subject: EntityId,
    pub relation: String,
    pub relation_phrase: String,
    pub object: ObjectValue,
}

impl FlatTriple {
    /// Identity passthrough of a triple's main fact.
    pub fn main(t: &Triple) -> Self {
        FlatTriple {
            subject: t.subject.clone(),
            relation: t.relation.clone(),
            relation_phrase: t.relation.clone(),
            object: t.object.clone(),
        }
    }
}

/// Root-section text of an entity's page, with its sentence segmentation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageText {
    pub subject: EntityId,
    pub root_section: String,
    pub sentences: Vec<String>,
}
