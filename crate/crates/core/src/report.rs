//! Corpus-level counts and their text/JSON renderings.

use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::grouper::TripleGroup;

/// Alignment counts; the JSON form is stats.json.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignmentStats {
    pub total_triples: u64,
    pub triples_aligned: u64,
    #[serde(rename = "total_sentences_selected")]
    pub sentences_selected: u64,
    pub total_relations: u64,
    pub relations_aligned: u64,
}

impl AlignmentStats {
    pub fn is_consistent(&self) -> bool {
        self.triples_aligned <= self.total_triples && self.relations_aligned <= self.total_relations
    }

    pub fn rows(&self) -> [(&'static str, u64); 5] {
        [
            ("Total triples", self.total_triples),
            ("Triples aligned", self.triples_aligned),
            ("Total sentences selected", self.sentences_selected),
            ("Total relations", self.total_relations),
            ("Relations aligned", self.relations_aligned),
        ]
    }
}

/// `1234567` -> `1,234,567`.
pub fn thousands(n: u64) -> String {
    let digits = n.to_string();
    let mut out = String::with_capacity(digits.len() + digits.len() / 3);
    for (i, c) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i) % 3 == 0 {
            out.push(',');
        }
        out.push(c);
    }
    out
}

fn table(rows: &[(String, String)]) -> String {
    let lw = rows.iter().map(|r| r.0.len()).max().unwrap_or(0);
    let rw = rows.iter().map(|r| r.1.len()).max().unwrap_or(0);
    let mut out = String::new();
    for (label, value) in rows {
        let _ = writeln!(out, "{label:<lw$}  {value:>rw$}");
    }
    out
}

pub fn report_alignment(stats: &AlignmentStats) -> String {
    let rows: Vec<(String, String)> = stats
        .rows()
        .iter()
        .map(|(l, v)| (l.to_string(), thousands(*v)))
        .collect();
    table(&rows)
}

/// Chain-length histogram over a set of groups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupingReport {
    /// Length -> number of groups, for every length 1..=max_depth plus any
    /// longer lengths observed.
    pub histogram: BTreeMap<usize, u64>,
    pub groups: u64,
    pub triples: u64,
    /// Triples per group; absent when there are no groups.
    pub ratio: Option<f64>,
}

pub fn report_grouping(groups: &[TripleGroup], max_depth: usize) -> GroupingReport {
    let mut histogram: BTreeMap<usize, u64> = (1..=max_depth).map(|l| (l, 0)).collect();
    let mut triples = 0u64;
    for g in groups {
        *histogram.entry(g.chain.len()).or_default() += 1;
        triples += g.chain.len() as u64;
    }
    let n = groups.len() as u64;
    GroupingReport {
        histogram,
        groups: n,
        triples,
        ratio: (n > 0).then(|| triples as f64 / n as f64),
    }
}

impl GroupingReport {
    pub fn to_text(&self) -> String {
        let mut rows: Vec<(String, String)> = self
            .histogram
            .iter()
            .map(|(len, count)| (format!("Groups of length {len}"), thousands(*count)))
            .collect();
        rows.push(("Total groups".into(), thousands(self.groups)));
        rows.push(("Total triples".into(), thousands(self.triples)));
        rows.push((
            "Triples per group".into(),
            self.ratio.map_or_else(|| "n/a".into(), |r| format!("{r:.2}")),
        ));
        table(&rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{FlatTriple, ObjectValue};

    #[test]
    fn separators() {
        assert_eq!(thousands(0), "0");
        assert_eq!(thousands(663), "663");
        assert_eq!(thousands(1522), "1,522");
        assert_eq!(thousands(45_578_261), "45,578,261");
        assert_eq!(thousands(100_000), "100,000");
        assert_eq!(thousands(u64::MAX), "18,446,744,073,709,551,615");
    }

    #[test]
    fn full_scale_table() {
        let s = AlignmentStats {
            total_triples: 45_578_261,
            triples_aligned: 16_090_457,
            sentences_selected: 7_978_814,
            total_relations: 1_522,
            relations_aligned: 663,
        };
        assert!(s.is_consistent());
        assert_eq!(
            report_alignment(&s),
            "Total triples             45,578,261\n\
             Triples aligned           16,090,457\n\
             Total sentences selected   7,978,814\n\
             Total relations                1,522\n\
             Relations aligned                663\n"
        );
        let json = serde_json::to_value(s).unwrap();
        assert_eq!(json["total_sentences_selected"], 7_978_814);
        assert_eq!(serde_json::from_value::<AlignmentStats>(json).unwrap(), s);
    }

    #[test]
    fn zeros() {
        let text = report_alignment(&AlignmentStats::default());
        assert_eq!(text.lines().count(), 5);
        assert!(text.lines().all(|l| l.ends_with(" 0")));
    }

    fn group(len: usize) -> TripleGroup {
        let t = FlatTriple {
            subject: "s".into(),
            relation: "r".into(),
            relation_phrase: "r".into(),
            object: ObjectValue::Entity("o".into()),
        };
        TripleGroup {
            subject: "s".into(),
            chain: vec![t; len],
        }
    }

    #[test]
    fn grouping_histogram() {
        let r = report_grouping(&[group(5), group(2)], 5);
        assert_eq!(r.histogram, BTreeMap::from([(1, 0), (2, 1), (3, 0), (4, 0), (5, 1)]));
        assert_eq!(r.ratio, Some(3.5));
        let r = report_grouping(&[group(1), group(1), group(1)], 5);
        assert_eq!(r.ratio, Some(1.0));
        assert_eq!(r.histogram.values().sum::<u64>(), r.groups);
        let r = report_grouping(&[], 5);
        assert_eq!(r.ratio, None);
        assert!(r.to_text().contains("n/a"));
    }
}
