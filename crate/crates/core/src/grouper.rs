//! Relation co-occurrence counting and greedy chain aggregation of a
//! subject's triples into generation groups.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::io::{self, BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aligner::AlignmentExample;
use crate::model::{EntityId, FlatTriple};

/// Symmetric counts of relations aligned to the same sentence.
///
/// `count(a, b)` for `a != b` is the number of examples holding at least one
/// triple of each relation; `count(a, a)` is the number of examples holding
/// at least two triples of relation `a`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CooccurrenceStats {
    // outer key <= inner key
    counts: HashMap<String, HashMap<String, u64>>,
}

fn ordered<'a>(a: &'a str, b: &'a str) -> (&'a str, &'a str) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

impl CooccurrenceStats {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn count(&self, a: &str, b: &str) -> u64 {
        let (x, y) = ordered(a, b);
        self.counts
            .get(x)
            .and_then(|row| row.get(y))
            .copied()
            .unwrap_or(0)
    }

    pub fn add(&mut self, a: &str, b: &str, n: u64) {
        let (x, y) = ordered(a, b);
        *self
            .counts
            .entry(x.to_owned())
            .or_default()
            .entry(y.to_owned())
            .or_default() += n;
    }

    /// Adds one example's relations.
    pub fn observe<'a>(&mut self, relations: impl IntoIterator<Item = &'a str>) {
        let mut per_rel: BTreeMap<&str, usize> = BTreeMap::new();
        for r in relations {
            *per_rel.entry(r).or_default() += 1;
        }
        let rels: Vec<(&str, usize)> = per_rel.into_iter().collect();
        for (i, &(a, n)) in rels.iter().enumerate() {
            if n >= 2 {
                self.add(a, a, 1);
            }
            for &(b, _) in &rels[i + 1..] {
                self.add(a, b, 1);
            }
        }
    }

    pub fn merge(&mut self, other: CooccurrenceStats) {
        for (a, row) in other.counts {
            let mine = self.counts.entry(a).or_default();
            for (b, n) in row {
                *mine.entry(b).or_default() += n;
            }
        }
    }

    /// Nonzero pairs as `(a, b, count)` with `a <= b`, sorted.
    pub fn pairs(&self) -> Vec<(&str, &str, u64)> {
        let mut out: Vec<(&str, &str, u64)> = self
            .counts
            .iter()
            .flat_map(|(a, row)| row.iter().map(move |(b, &n)| (a.as_str(), b.as_str(), n)))
            .filter(|&(_, _, n)| n > 0)
            .collect();
        out.sort_unstable();
        out
    }

    pub fn is_empty(&self) -> bool {
        self.counts.values().flat_map(|row| row.values()).all(|&n| n == 0)
    }

    /// Writes `rel_a \t rel_b \t count` lines, `rel_a <= rel_b`.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> io::Result<()> {
        for (a, b, n) in self.pairs() {
            writeln!(out, "{a}\t{b}\t{n}")?;
        }
        Ok(())
    }

    pub fn read_tsv<R: BufRead>(reader: R) -> Result<Self, CoocParseError> {
        let mut stats = CooccurrenceStats::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let bad = || CoocParseError::Malformed { line: i + 1 };
            let mut parts = line.split('\t');
            let (Some(a), Some(b), Some(n), None) = (parts.next(), parts.next(), parts.next(), parts.next()) else {
                return Err(bad());
            };
            let n: u64 = n.trim().parse().map_err(|_| bad())?;
            stats.add(a, b, n);
        }
        Ok(stats)
    }
}

#[derive(Debug, Error)]
pub enum CoocParseError {
    #[error("read error: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: expected `rel_a<TAB>rel_b<TAB>count`")]
    Malformed { line: usize },
}

/// Single pass over aligned examples.
pub fn count_cooccurrence<'a>(examples: impl IntoIterator<Item = &'a AlignmentExample>) -> CooccurrenceStats {
    let mut stats = CooccurrenceStats::new();
    for ex in examples {
        stats.observe(ex.triples.iter().map(|t| t.relation.as_str()));
    }
    stats
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupingConfig {
    /// Longest chain.
    pub max_depth: usize,
    /// Minimum co-occurrence between consecutive chain members. `u64::MAX`
    /// disables chaining.
    pub cutoff: u64,
}

impl Default for GroupingConfig {
    fn default() -> Self {
        GroupingConfig {
            max_depth: 5,
            cutoff: 5,
        }
    }
}

/// A chain of same-subject triples verbalized together.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TripleGroup {
    pub subject: EntityId,
    #[serde(rename = "triples")]
    pub chain: Vec<FlatTriple>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GroupError {
    #[error("triples of `{0}` and `{1}` passed as one subject")]
    MixedSubjects(EntityId, EntityId),
    #[error("max_depth must be at least 1")]
    ZeroDepth,
}

/// Total order used for every tie: relation key, then the verbalized
/// phrase, then the object. Identical triples fall back to input order.
fn tie_order(a: &FlatTriple, b: &FlatTriple) -> Ordering {
    a.relation
        .cmp(&b.relation)
        .then_with(|| a.relation_phrase.cmp(&b.relation_phrase))
        .then_with(|| a.object.cmp(&b.object))
}

/// Greedily chains one subject's triples.
///
/// The seed is the remaining triple with the largest co-occurrence mass
/// against the other remaining triples. Each extension takes the remaining
/// triple whose relation co-occurs most with the previous chain member,
/// provided that count reaches `cfg.cutoff`. Ties go to the smaller
/// relation name. Chains stop at `cfg.max_depth` or when nothing clears
/// the cutoff; unchained triples end up as singleton groups.
pub fn group_triples(
    subject_triples: &[FlatTriple],
    stats: &CooccurrenceStats,
    cfg: &GroupingConfig,
) -> Result<Vec<TripleGroup>, GroupError> {
    if cfg.max_depth == 0 {
        return Err(GroupError::ZeroDepth);
    }
    let Some(first) = subject_triples.first() else {
        return Ok(Vec::new());
    };
    if let Some(other) = subject_triples.iter().find(|t| t.subject != first.subject) {
        return Err(GroupError::MixedSubjects(first.subject.clone(), other.subject.clone()));
    }
    let n = subject_triples.len();

    // relation-level count matrix; relations are few per subject
    let mut rel_ids: BTreeMap<&str, usize> = BTreeMap::new();
    for t in subject_triples {
        let next = rel_ids.len();
        rel_ids.entry(t.relation.as_str()).or_insert(next);
    }
    let rels: Vec<&str> = {
        let mut v = vec![""; rel_ids.len()];
        for (r, &i) in &rel_ids {
            v[i] = r;
        }
        v
    };
    let k = rels.len();
    let mut matrix = vec![0u64; k * k];
    for i in 0..k {
        for j in i..k {
            let c = stats.count(rels[i], rels[j]);
            matrix[i * k + j] = c;
            matrix[j * k + i] = c;
        }
    }
    let rel_of: Vec<usize> = subject_triples.iter().map(|t| rel_ids[t.relation.as_str()]).collect();
    let count = |a: usize, b: usize| matrix[rel_of[a] * k + rel_of[b]];

    // mass[i] = sum over other remaining triples j of count(i, j)
    let mut mass: Vec<u128> = (0..n)
        .map(|i| (0..n).filter(|&j| j != i).map(|j| count(i, j) as u128).sum())
        .collect();
    let mut remaining = vec![true; n];
    let mut left = n;
    let take = |i: usize, remaining: &mut Vec<bool>, mass: &mut Vec<u128>| {
        remaining[i] = false;
        for j in 0..n {
            if remaining[j] {
                mass[j] -= count(i, j) as u128;
            }
        }
    };

    // better(a, b): is candidate a preferred over b at equal score?
    let prefer = |a: usize, b: usize| match tie_order(&subject_triples[a], &subject_triples[b]) {
        Ordering::Equal => a < b,
        o => o == Ordering::Less,
    };

    let mut groups = Vec::new();
    while left > 0 {
        let mut seed = usize::MAX;
        for i in (0..n).filter(|&i| remaining[i]) {
            if seed == usize::MAX || mass[i] > mass[seed] || (mass[i] == mass[seed] && prefer(i, seed)) {
                seed = i;
            }
        }
        take(seed, &mut remaining, &mut mass);
        left -= 1;
        let mut chain = vec![seed];
        while chain.len() < cfg.max_depth && left > 0 {
            let prev = *chain.last().expect("chain starts with its seed");
            let mut best: Option<(usize, u64)> = None;
            for j in (0..n).filter(|&j| remaining[j]) {
                let c = count(prev, j);
                if c < cfg.cutoff {
                    continue;
                }
                best = match best {
                    Some((b, bc)) if bc > c || (bc == c && !prefer(j, b)) => Some((b, bc)),
                    _ => Some((j, c)),
                };
            }
            let Some((next, _)) = best else { break };
            take(next, &mut remaining, &mut mass);
            left -= 1;
            chain.push(next);
        }
        groups.push(TripleGroup {
            subject: first.subject.clone(),
            chain: chain.into_iter().map(|i| subject_triples[i].clone()).collect(),
        });
    }
    Ok(groups)
}

/// Partitions triples by subject and groups each subject independently on
/// the current rayon pool. Output is in subject-id order.
pub fn group_corpus(
    all_triples: &[FlatTriple],
    stats: &CooccurrenceStats,
    cfg: &GroupingConfig,
) -> Result<Vec<TripleGroup>, GroupError> {
    let mut by_subject: BTreeMap<&EntityId, Vec<FlatTriple>> = BTreeMap::new();
    for t in all_triples {
        by_subject.entry(&t.subject).or_default().push(t.clone());
    }
    let per_subject: Vec<Vec<FlatTriple>> = by_subject.into_values().collect();
    let grouped: Result<Vec<Vec<TripleGroup>>, GroupError> = per_subject
        .par_iter()
        .map(|ts| group_triples(ts, stats, cfg))
        .collect();
    Ok(grouped?.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DateValue, ObjectValue};

    fn t(rel: &str, n: i32) -> FlatTriple {
        FlatTriple {
            subject: "s".into(),
            relation: rel.into(),
            relation_phrase: rel.into(),
            object: ObjectValue::Date(DateValue::year_only(1000 + n).unwrap()),
        }
    }

    fn example(rels: &[&str]) -> AlignmentExample {
        AlignmentExample {
            subject: "s".into(),
            sentence: String::new(),
            original_sentence: String::new(),
            pronoun_replaced: false,
            triples: rels.iter().enumerate().map(|(i, r)| t(r, i as i32)).collect(),
            page: "s".into(),
            sentence_index: 0,
        }
    }

    fn rels(g: &TripleGroup) -> Vec<&str> {
        g.chain.iter().map(|t| t.relation.as_str()).collect()
    }

    #[test]
    fn counts_pairs_once_per_example() {
        let stats = count_cooccurrence(&[example(&["date of birth", "date of death", "occupation"])]);
        assert_eq!(stats.count("date of birth", "date of death"), 1);
        assert_eq!(stats.count("date of death", "date of birth"), 1);
        assert_eq!(stats.count("date of birth", "occupation"), 1);
        assert_eq!(stats.count("date of death", "occupation"), 1);
        assert_eq!(stats.count("occupation", "occupation"), 0);
        assert_eq!(stats.pairs().len(), 3);
    }

    #[test]
    fn self_pairs_and_empty() {
        let stats = count_cooccurrence(&[example(&["country", "country"])]);
        assert_eq!(stats.count("country", "country"), 1);
        let stats = count_cooccurrence(&[example(&["country", "country", "country", "x"])]);
        assert_eq!(stats.count("country", "country"), 1);
        assert_eq!(stats.count("country", "x"), 1);
        assert!(count_cooccurrence(&[]).is_empty());
    }

    #[test]
    fn tsv_round_trip() {
        let mut s = CooccurrenceStats::new();
        s.add("b", "a", 3);
        s.add("c", "c", 1);
        let mut buf = Vec::new();
        s.write_tsv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "a\tb\t3\nc\tc\t1\n");
        assert_eq!(CooccurrenceStats::read_tsv(buf.as_slice()).unwrap(), s);
        assert!(CooccurrenceStats::read_tsv("a\tb\n".as_bytes()).is_err());
    }

    #[test]
    fn single_triple_is_singleton() {
        let g = group_triples(&[t("r", 0)], &CooccurrenceStats::new(), &GroupingConfig::default()).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g[0].chain.len(), 1);
    }

    #[test]
    fn hand_traced_three_relations() {
        let mut s = CooccurrenceStats::new();
        s.add("r1", "r2", 10);
        s.add("r2", "r3", 7);
        s.add("r1", "r3", 2);
        let g = group_triples(&[t("r1", 1), t("r2", 2), t("r3", 3)], &s, &GroupingConfig::default()).unwrap();
        let got: Vec<Vec<&str>> = g.iter().map(rels).collect();
        assert_eq!(got, vec![vec!["r2", "r1"], vec!["r3"]]);
    }

    #[test]
    fn depth_cap_splits_chains() {
        let names = ["a", "b", "c", "d", "e", "f", "g"];
        let mut s = CooccurrenceStats::new();
        for (i, x) in names.iter().enumerate() {
            for y in &names[i + 1..] {
                s.add(x, y, 100);
            }
        }
        let triples: Vec<FlatTriple> = names.iter().enumerate().map(|(i, r)| t(r, i as i32)).collect();
        let g = group_triples(&triples, &s, &GroupingConfig::default()).unwrap();
        let sizes: Vec<usize> = g.iter().map(|g| g.chain.len()).collect();
        assert_eq!(sizes, vec![5, 2]);
        // all masses tie at 600, so the lexicographically first relation seeds
        assert_eq!(rels(&g[0]), vec!["a", "b", "c", "d", "e"]);
        assert_eq!(rels(&g[1]), vec!["f", "g"]);
    }

    #[test]
    fn self_pairs_chain_multivalued_relations() {
        let mut s = CooccurrenceStats::new();
        s.add("country", "country", 9);
        let g = group_triples(&[t("country", 1), t("country", 2), t("country", 3)], &s, &GroupingConfig::default()).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g[0].chain.len(), 3);
    }

    #[test]
    fn errors() {
        let mut other = t("r", 1);
        other.subject = "z".into();
        assert!(matches!(
            group_triples(&[t("r", 0), other], &CooccurrenceStats::new(), &GroupingConfig::default()),
            Err(GroupError::MixedSubjects(..))
        ));
        let cfg = GroupingConfig { max_depth: 0, cutoff: 5 };
        assert_eq!(
            group_triples(&[t("r", 0)], &CooccurrenceStats::new(), &cfg).unwrap_err(),
            GroupError::ZeroDepth
        );
    }

    #[test]
    fn corpus_of_singletons() {
        let triples: Vec<FlatTriple> = (0..4)
            .map(|i| {
                let mut x = t("r", i);
                x.subject = format!("s{i}").into();
                x
            })
            .collect();
        let g = group_corpus(&triples, &CooccurrenceStats::new(), &GroupingConfig::default()).unwrap();
        assert_eq!(g.len(), 4);
        assert!(g.iter().all(|g| g.chain.len() == 1));
    }
}
