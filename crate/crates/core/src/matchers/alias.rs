use std::collections::HashMap;

use aho_corasick::{AhoCorasick, AhoCorasickBuilder, MatchKind};

use super::MatchError;

/// Case folding shared by every alias comparison.
pub(crate) fn fold(s: &str) -> String {
    s.to_lowercase()
}

fn is_boundary(c: Option<char>) -> bool {
    c.is_none_or(|c| !c.is_alphanumeric())
}

/// True if `haystack[start..end]` is flanked by word boundaries.
pub(crate) fn bounded(haystack: &str, start: usize, end: usize) -> bool {
    is_boundary(haystack[..start].chars().next_back()) && is_boundary(haystack[end..].chars().next())
}

/// True iff some alias occurs in `sentence`, case-insensitively, with a
/// word boundary (text edge or non-alphanumeric char) on both sides.
pub fn contains_alias<S: AsRef<str>>(sentence: &str, aliases: &[S]) -> bool {
    let hay = fold(sentence);
    aliases.iter().any(|a| contains_folded(&hay, &fold(a.as_ref())))
}

pub(crate) fn contains_folded(hay: &str, needle: &str) -> bool {
    if needle.is_empty() {
        return false;
    }
    // match_indices skips overlapping occurrences, which can hide the only
    // bounded one ("x x" in "ax x x"), so restart after each hit's first char.
    let mut from = 0;
    while let Some(pos) = hay[from..].find(needle) {
        let start = from + pos;
        if bounded(hay, start, start + needle.len()) {
            return true;
        }
        from = start + hay[start..].chars().next().map_or(1, char::len_utf8);
    }
    false
}

/// Dense id of a pattern inside an [`AliasIndex`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PatternId(u32);

/// Sorted, de-duplicated pattern ids found in one sentence.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AliasHits(Vec<PatternId>);

impl AliasHits {
    pub fn contains(&self, id: PatternId) -> bool {
        self.0.binary_search(&id).is_ok()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = PatternId> + '_ {
        self.0.iter().copied()
    }
}

/// A compiled multi-pattern automaton over a set of alias strings.
///
/// One scan of a sentence reports every alias that occurs with word
/// boundaries on both ends; scan cost depends on sentence length and the
/// number of raw occurrences, not on how many aliases are indexed.
#[derive(Debug, Clone)]
pub struct AliasIndex {
    automaton: AhoCorasick,
    patterns: Vec<String>,
    ids: HashMap<String, PatternId>,
}

impl AliasIndex {
    pub fn new<I, S>(aliases: I) -> Result<Self, MatchError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut patterns = Vec::new();
        let mut ids = HashMap::new();
        for alias in aliases {
            let folded = fold(alias.as_ref());
            if folded.is_empty() || ids.contains_key(&folded) {
                continue;
            }
            let id = PatternId(u32::try_from(patterns.len()).map_err(|_| MatchError::TooManyPatterns)?);
            ids.insert(folded.clone(), id);
            patterns.push(folded);
        }
        // Standard semantics are required for overlapping iteration.
        let automaton = AhoCorasickBuilder::new()
            .match_kind(MatchKind::Standard)
            .build(&patterns)
            .map_err(|e| MatchError::Automaton(e.to_string()))?;
        Ok(AliasIndex {
            automaton,
            patterns,
            ids,
        })
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    /// Id of an alias (compared case-insensitively), if it was indexed.
    pub fn pattern_id(&self, alias: &str) -> Option<PatternId> {
        self.ids.get(&fold(alias)).copied()
    }

    pub fn pattern(&self, id: PatternId) -> &str {
        &self.patterns[id.0 as usize]
    }

    /// Every indexed alias occurring in `sentence` with word boundaries.
    pub fn find(&self, sentence: &str) -> AliasHits {
        let hay = fold(sentence);
        self.find_folded(&hay)
    }

    pub(crate) fn find_folded(&self, hay: &str) -> AliasHits {
        let mut found: Vec<PatternId> = self
            .automaton
            .find_overlapping_iter(hay)
            .filter(|m| bounded(hay, m.start(), m.end()))
            .map(|m| PatternId(m.pattern().as_u32()))
            .collect();
        found.sort_unstable();
        found.dedup();
        AliasHits(found)
    }

    /// [`contains_alias`] answered through the automaton. Aliases that were
    /// never indexed fall back to a direct scan.
    pub fn contains_any<S: AsRef<str>>(&self, sentence: &str, aliases: &[S]) -> bool {
        let hay = fold(sentence);
        let hits = self.find_folded(&hay);
        aliases.iter().any(|a| match self.pattern_id(a.as_ref()) {
            Some(id) => hits.contains(id),
            None => contains_folded(&hay, &fold(a.as_ref())),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn word_bounded_containment() {
        let s = "The blue whale (Balaenoptera musculus) is a marine mammal belonging to the baleen whale suborder Mysticeti.";
        assert!(contains_alias(s, &["Balaenoptera"]));
        assert!(contains_alias(s, &["balaenoptera musculus"]));
        assert!(!contains_alias("", &["x"]));
        assert!(!contains_alias("Obamacare passed", &["Obama"]));
        assert!(contains_alias("Obama's care", &["Obama"]));
        assert!(contains_alias("ax x x", &["x x"]));
        assert!(contains_alias("speed of 16 km/h.", &["16 km/h"]));
    }

    #[test]
    fn index_reports_bounded_hits_only() {
        let idx = AliasIndex::new(["Obama", "Barack Obama", "care", "United States"]).unwrap();
        let hits = idx.find("Barack Obama visited the United States; Obamacare passed.");
        let found: Vec<&str> = hits.iter().map(|id| idx.pattern(id)).collect();
        assert_eq!(found, vec!["obama", "barack obama", "united states"]);
        assert!(idx.contains_any("obama", &["OBAMA"]));
        assert!(idx.contains_any("some unseen alias here", &["unseen alias"]));
        assert!(!idx.contains_any("nothing", &["Obama"]));
    }

    #[test]
    fn duplicate_aliases_share_an_id() {
        let idx = AliasIndex::new(["Germany", "germany", "GERMANY", ""]).unwrap();
        assert_eq!(idx.len(), 1);
    }

    fn words() -> impl Strategy<Value = String> {
        prop::sample::select(vec!["ab", "a", "b", "abc", "ba", "x-y", "é", "Éa", "1", "a1"])
            .prop_map(str::to_owned)
    }

    proptest! {
        #[test]
        fn index_agrees_with_direct_scan(
            sentence in prop::collection::vec(words(), 0..12),
            seps in prop::collection::vec(prop::sample::select(vec![" ", "", "-", ", "]), 12),
            aliases in prop::collection::vec(prop::collection::vec(words(), 1..3), 1..8),
        ) {
            let mut text = String::new();
            for (w, s) in sentence.iter().zip(&seps) {
                text.push_str(w);
                text.push_str(s);
            }
            let aliases: Vec<String> = aliases.iter().map(|a| a.join(" ")).collect();
            let idx = AliasIndex::new(&aliases).unwrap();
            prop_assert_eq!(idx.contains_any(&text, &aliases), contains_alias(&text, &aliases));
            for a in &aliases {
                let id = idx.pattern_id(a).unwrap();
                prop_assert_eq!(idx.find(&text).contains(id), contains_alias(&text, &[a]));
            }
        }
    }
}
