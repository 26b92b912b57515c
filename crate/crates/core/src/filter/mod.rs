//! Semantic-quality scoring of generated sentences, the bottom-percentile
//! filter, and scorer evaluation.

mod correlation;

use std::io::{self, BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grouper::TripleGroup;
use crate::matchers::{ObjectProbe, SentenceView};
use crate::model::{EntityCatalog, EntityId};

pub use correlation::{
    average_ranks, eval_scorer, kendall_tau, pearson, spearman, CorrelationError, CorrelationReport,
};

pub const DEFAULT_FRACTION: f64 = 0.01;

#[derive(Debug, Error)]
pub enum FilterError {
    #[error("score {0} is outside [0, 1]")]
    ScoreOutOfRange(f64),
    #[error("fraction {0} is outside [0, 1)")]
    FractionOutOfRange(f64),
    #[error("cannot score against an empty group")]
    EmptyGroup,
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// A generated sentence with its quality score. Field order is the
/// kept/removed JSONL key order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredSentence {
    pub id: String,
    pub score: f64,
    pub text: String,
    pub subject: EntityId,
}

impl ScoredSentence {
    pub fn new(
        id: impl Into<String>,
        subject: impl Into<EntityId>,
        text: impl Into<String>,
        score: f64,
    ) -> Result<Self, FilterError> {
        check_score(score)?;
        Ok(ScoredSentence {
            id: id.into(),
            score,
            text: text.into(),
            subject: subject.into(),
        })
    }
}

fn check_score(score: f64) -> Result<f64, FilterError> {
    if (0.0..=1.0).contains(&score) {
        Ok(score)
    } else {
        Err(FilterError::ScoreOutOfRange(score))
    }
}

/// Fraction of the group's triples whose object is expressed in `text`.
pub fn heuristic_score(text: &str, group: &TripleGroup, catalog: &EntityCatalog) -> Result<f64, FilterError> {
    if group.chain.is_empty() {
        return Err(FilterError::EmptyGroup);
    }
    let view = SentenceView::new(text, None);
    let covered = group
        .chain
        .iter()
        .filter(|t| ObjectProbe::compile(&t.object, catalog, None).matches(&view))
        .count();
    Ok(covered as f64 / group.chain.len() as f64)
}

pub trait SentenceScorer {
    fn score(&self, text: &str, group: &TripleGroup) -> Result<f64, FilterError>;
}

pub struct HeuristicScorer<'a> {
    pub catalog: &'a EntityCatalog,
}

impl SentenceScorer for HeuristicScorer<'_> {
    fn score(&self, text: &str, group: &TripleGroup) -> Result<f64, FilterError> {
        heuristic_score(text, group, self.catalog)
    }
}

/// A generator output paired with the group it was generated from.
#[derive(Debug, Clone, Copy)]
pub struct Generated<'a> {
    pub id: &'a str,
    pub text: &'a str,
    pub group: &'a TripleGroup,
}

/// Scores every sentence in parallel; output order is input order.
pub fn score_all<S: SentenceScorer + Sync>(
    scorer: &S,
    items: &[Generated<'_>],
) -> Result<Vec<ScoredSentence>, FilterError> {
    items
        .par_iter()
        .map(|g| {
            let score = check_score(scorer.score(g.text, g.group)?)?;
            Ok(ScoredSentence {
                id: g.id.to_owned(),
                score,
                text: g.text.to_owned(),
                subject: g.group.subject.clone(),
            })
        })
        .collect()
}

/// `floor(fraction * n)`, treating products within float noise of an
/// integer as that integer (0.29 * 100 is 28.999999999999996).
pub fn removal_count(fraction: f64, n: usize) -> usize {
    let x = fraction * n as f64;
    let r = x.round();
    let k = if (x - r).abs() <= 1e-9 * r.max(1.0) { r } else { x.floor() };
    (k as usize).min(n)
}

/// Removes the `floor(fraction * N)` lowest-scored items. Among equal
/// scores earlier items go first. Both halves keep input order.
pub fn percentile_filter(
    items: Vec<ScoredSentence>,
    fraction: f64,
) -> Result<(Vec<ScoredSentence>, Vec<ScoredSentence>), FilterError> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(FilterError::FractionOutOfRange(fraction));
    }
    for it in &items {
        check_score(it.score)?;
    }
    let k = removal_count(fraction, items.len());
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.sort_by(|&a, &b| items[a].score.total_cmp(&items[b].score).then(a.cmp(&b)));
    let mut drop = vec![false; items.len()];
    for &i in &order[..k] {
        drop[i] = true;
    }
    let (mut kept, mut removed) = (Vec::with_capacity(items.len() - k), Vec::with_capacity(k));
    for (item, d) in items.into_iter().zip(drop) {
        if d {
            removed.push(item);
        } else {
            kept.push(item);
        }
    }
    Ok((kept, removed))
}

fn read_id_values<R: BufRead>(
    reader: R,
    check: impl Fn(f64) -> Result<(), String>,
) -> Result<Vec<(String, f64)>, FilterError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |msg: String| FilterError::Malformed { line: i + 1, msg };
        let (id, value) = line
            .split_once('\t')
            .ok_or_else(|| malformed("expected `id<TAB>score`".into()))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| malformed("score is not a number".into()))?;
        check(value).map_err(malformed)?;
        out.push((id.to_owned(), value));
    }
    Ok(out)
}

/// Reads `sentence_id \t value` lines with any finite value, such as human
/// ratings on a 1-5 scale. Blank lines are skipped.
pub fn read_ratings<R: BufRead>(reader: R) -> Result<Vec<(String, f64)>, FilterError> {
    read_id_values(reader, |v| {
        if v.is_finite() {
            Ok(())
        } else {
            Err("score is not finite".into())
        }
    })
}

/// Reads scores.tsv; every score must lie in [0, 1].
pub fn read_scores<R: BufRead>(reader: R) -> Result<Vec<(String, f64)>, FilterError> {
    read_id_values(reader, |v| check_score(v).map(drop).map_err(|e| e.to_string()))
}

pub fn write_scores<'a, W: Write>(
    mut out: W,
    scores: impl IntoIterator<Item = &'a ScoredSentence>,
) -> io::Result<()> {
    for s in scores {
        writeln!(out, "{}\t{}", s.id, s.score)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{EntityRecord, FlatTriple, ObjectValue, QuantityValue};
    use proptest::prelude::*;

    fn items(scores: &[f64]) -> Vec<ScoredSentence> {
        scores
            .iter()
            .enumerate()
            .map(|(i, &s)| ScoredSentence::new(i.to_string(), "s", "t", s).unwrap())
            .collect()
    }

    fn ids(v: &[ScoredSentence]) -> Vec<&str> {
        v.iter().map(|s| s.id.as_str()).collect()
    }

    #[test]
    fn removal_counts() {
        assert_eq!(removal_count(0.01, 200), 2);
        assert_eq!(removal_count(0.01, 50), 0);
        assert_eq!(removal_count(0.01, 99), 0);
        assert_eq!(removal_count(0.01, 100), 1);
        assert_eq!(removal_count(0.01, 10007), 100);
        assert_eq!(removal_count(0.29, 100), 29);
        assert_eq!(removal_count(0.0, 100), 0);
        assert_eq!(removal_count(0.999, 1), 0);
    }

    #[test]
    fn removes_lowest() {
        let scores: Vec<f64> = (0..200).map(|i| ((i * 37) % 200) as f64 / 200.0).collect();
        let (kept, removed) = percentile_filter(items(&scores), 0.01).unwrap();
        assert_eq!(kept.len(), 198);
        let mut rs: Vec<f64> = removed.iter().map(|s| s.score).collect();
        rs.sort_by(f64::total_cmp);
        assert_eq!(rs, vec![0.0, 0.005]);
    }

    #[test]
    fn ties_break_by_input_order() {
        let (kept, removed) = percentile_filter(items(&[0.5; 10]), 0.2).unwrap();
        assert_eq!(ids(&removed), vec!["0", "1"]);
        assert_eq!(kept.len(), 8);
        let (_, removed) = percentile_filter(items(&[0.9, 0.1, 0.5, 0.1, 0.1]), 0.4).unwrap();
        assert_eq!(ids(&removed), vec!["1", "3"]);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(percentile_filter(items(&[0.5]), 1.0), Err(FilterError::FractionOutOfRange(_))));
        assert!(matches!(percentile_filter(items(&[0.5]), -0.1), Err(FilterError::FractionOutOfRange(_))));
        assert!(matches!(ScoredSentence::new("a", "s", "t", 1.5), Err(FilterError::ScoreOutOfRange(_))));
        assert!(ScoredSentence::new("a", "s", "t", f64::NAN).is_err());
        let (k, r) = percentile_filter(vec![], 0.5).unwrap();
        assert!(k.is_empty() && r.is_empty());
    }

    fn catalog() -> EntityCatalog {
        [
            EntityRecord::new("michelle", "Michelle Obama", ["Michelle Obama"], true).unwrap(),
            EntityRecord::new("inch", "inch", ["inch", "inches"], true).unwrap(),
            EntityRecord::new("chicago", "Chicago", ["Chicago"], true).unwrap(),
            EntityRecord::new("lawyer", "lawyer", ["lawyer", "attorney"], false).unwrap(),
        ]
        .into_iter()
        .collect()
    }

    fn group(objects: Vec<ObjectValue>) -> TripleGroup {
        TripleGroup {
            subject: "michelle".into(),
            chain: objects
                .into_iter()
                .map(|object| FlatTriple {
                    subject: "michelle".into(),
                    relation: "r".into(),
                    relation_phrase: "r".into(),
                    object,
                })
                .collect(),
        }
    }

    #[test]
    fn heuristic_coverage() {
        let c = catalog();
        let height = ObjectValue::Quantity(QuantityValue::new("+71", Some("inch".into())).unwrap());
        let g = group(vec![height.clone()]);
        assert_eq!(heuristic_score("Michelle Obama is 71 inches tall.", &g, &c).unwrap(), 1.0);
        let g = group(vec![
            height,
            ObjectValue::Entity("chicago".into()),
            ObjectValue::Entity("lawyer".into()),
        ]);
        assert_eq!(heuristic_score("Born in Chicago, she is 71 inches tall and an attorney.", &g, &c).unwrap(), 1.0);
        assert_eq!(heuristic_score("She enjoys gardening.", &g, &c).unwrap(), 0.0);
        assert!((heuristic_score("She lived in Chicago.", &g, &c).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!(matches!(heuristic_score("x", &group(vec![]), &c), Err(FilterError::EmptyGroup)));
    }

    #[test]
    fn scores_tsv_roundtrip() {
        let its = items(&[0.25, 1.0, 0.0]);
        let mut buf = Vec::new();
        write_scores(&mut buf, &its).unwrap();
        let back = read_scores(buf.as_slice()).unwrap();
        assert_eq!(back, vec![("0".into(), 0.25), ("1".into(), 1.0), ("2".into(), 0.0)]);
        assert!(matches!(read_scores("a\t2.0\n".as_bytes()), Err(FilterError::Malformed { line: 1, .. })));
        assert!(matches!(read_scores("\nnotab\n".as_bytes()), Err(FilterError::Malformed { line: 2, .. })));
        assert_eq!(read_ratings("a\t5\nb\t1\n".as_bytes()).unwrap(), vec![("a".into(), 5.0), ("b".into(), 1.0)]);
        assert!(read_ratings("a\tinf\n".as_bytes()).is_err());
    }

    #[test]
    fn kept_removed_jsonl_shape() {
        let s = ScoredSentence::new("7", "Q1", "hello", 0.5).unwrap();
        assert_eq!(
            serde_json::to_string(&s).unwrap(),
            r#"{"id":"7","score":0.5,"text":"hello","subject":"Q1"}"#
        );
    }

    proptest! {
        #[test]
        fn partition_and_count(scores in prop::collection::vec((0u8..=10).prop_map(|v| v as f64 / 10.0), 0..300), fraction in 0.0f64..0.999) {
            let input = items(&scores);
            let (kept, removed) = percentile_filter(input.clone(), fraction).unwrap();
            prop_assert_eq!(removed.len(), (fraction * scores.len() as f64).floor() as usize);
            let mut all: Vec<ScoredSentence> = kept.iter().chain(&removed).cloned().collect();
            all.sort_by_key(|s| s.id.parse::<usize>().unwrap());
            prop_assert_eq!(&all, &input);
            if let (Some(mx), Some(mn)) = (
                removed.iter().map(|s| s.score).reduce(f64::max),
                kept.iter().map(|s| s.score).reduce(f64::min),
            ) {
                prop_assert!(mx <= mn);
            }
        }

        #[test]
        fn heuristic_is_monotone(extra in prop::sample::select(vec!["Chicago", "71 inches", "attorney", "lawyer"]), base in "[a-z ]{0,20}") {
            let c = catalog();
            let g = group(vec![
                ObjectValue::Quantity(QuantityValue::new("+71", Some("inch".into())).unwrap()),
                ObjectValue::Entity("chicago".into()),
                ObjectValue::Entity("lawyer".into()),
            ]);
            let before = heuristic_score(&base, &g, &c).unwrap();
            let after = heuristic_score(&format!("{base} {extra}."), &g, &c).unwrap();
            prop_assert!(after >= before);
            prop_assert!(after > 0.0);
        }
    }
}
