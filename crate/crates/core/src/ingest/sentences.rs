//! Rule-based sentence splitting for root-section prose.
//!
//! A boundary is placed after a run of `.`, `!` or `?` (plus any closing
//! quotes) when the next non-space character is an uppercase letter, or at
//! end of text. Periods inside parentheses never split, and a period that
//! closes a known abbreviation or a single-letter initial is not a boundary.

/// Tokens that end in a period without ending a sentence. Matched exactly
/// against the word preceding the period, with the period removed.
const ABBREVIATIONS: &[&str] = &[
    "Mr", "Mrs", "Ms", "Dr", "Prof", "St", "Mt", "Ft", "Jr", "Sr", "Sen", "Rep", "Gov", "Gen",
    "Col", "Lt", "Capt", "Sgt", "Cpl", "Adm", "Rev", "Hon", "Fr", "Pres", "Inc", "Ltd", "Co",
    "Corp", "Bros", "vs", "etc", "e.g", "i.e", "cf", "ca", "c", "approx", "est", "No", "Nos",
    "Vol", "pp", "Jan", "Feb", "Mar", "Apr", "Jun", "Jul", "Aug", "Sep", "Sept", "Oct", "Nov",
    "Dec", "U.S", "U.K", "U.N", "U.S.A", "U.S.S.R", "E.U", "D.C", "B.C", "A.D", "Ph.D", "a.m",
    "p.m",
];

const CLOSERS: &[char] = &['"', '\'', '\u{201d}', '\u{2019}'];

fn is_abbreviation(word: &str) -> bool {
    if ABBREVIATIONS.contains(&word) {
        return true;
    }
    // initials such as the "J" in "J. Smith"
    let mut chars = word.chars();
    matches!((chars.next(), chars.next()), (Some(c), None) if c.is_uppercase())
}

/// The token immediately before byte offset `end`, stripped of leading
/// quotes and brackets.
fn word_before(text: &str, end: usize) -> &str {
    let head = &text[..end];
    let start = head
        .char_indices()
        .rev()
        .find(|(_, c)| c.is_whitespace())
        .map(|(i, c)| i + c.len_utf8())
        .unwrap_or(0);
    head[start..].trim_start_matches(|c: char| matches!(c, '(' | '[' | '"' | '\'' | '\u{201c}'))
}

/// Splits `root_section` into trimmed, non-empty sentences in order.
pub fn split_sentences(root_section: &str) -> Vec<String> {
    let mut sentences = Vec::new();
    let mut start = 0;
    let mut depth = 0usize;
    let mut iter = root_section.char_indices().peekable();

    while let Some((i, c)) = iter.next() {
        match c {
            '(' | '[' => depth += 1,
            ')' | ']' => depth = depth.saturating_sub(1),
            '.' | '!' | '?' if depth == 0 => {
                let first_terminal = i;
                let mut end = i + c.len_utf8();
                while let Some(&(j, n)) = iter.peek() {
                    if matches!(n, '.' | '!' | '?') || CLOSERS.contains(&n) {
                        end = j + n.len_utf8();
                        iter.next();
                    } else {
                        break;
                    }
                }
                let rest = &root_section[end..];
                let next_visible = rest.trim_start().chars().next();
                let boundary = match next_visible {
                    None => true,
                    Some(n) => {
                        rest.starts_with(char::is_whitespace) && n.is_uppercase()
                    }
                };
                let abbreviation =
                    c == '.' && is_abbreviation(word_before(root_section, first_terminal));
                if boundary && !(abbreviation && next_visible.is_some()) {
                    let sentence = root_section[start..end].trim();
                    if !sentence.is_empty() {
                        sentences.push(sentence.to_owned());
                    }
                    start = end;
                }
            }
            _ => {}
        }
    }
    let tail = root_section[start..].trim();
    if !tail.is_empty() {
        sentences.push(tail.to_owned());
    }
    sentences
}
