//! Date extraction from running text.
//!
//! Recognized surface forms, tried longest first at each candidate start:
//!
//! * `Month D, YYYY`  (`May 1, 1924`)
//! * `D Month YYYY`   (`1 May 1924`)
//! * `YYYY-MM-DD`     (`1924-05-01`)
//! * `Month YYYY`     (`May 1924`)
//! * `YYYY`           a bare year in 1000..=2999 with no digit on either side
//!
//! Month names are full English names, case-insensitive.

use std::ops::Range;

use crate::model::DateValue;

pub const MONTHS: [&str; 12] = [
    "January",
    "February",
    "March",
    "April",
    "May",
    "June",
    "July",
    "August",
    "September",
    "October",
    "November",
    "December",
];

/// A date found in a sentence; `span` is a byte range into that sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtractedDate {
    pub value: DateValue,
    pub span: Range<usize>,
}

struct Cursor<'a> {
    s: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn rest(&self) -> &'a str {
        &self.s[self.pos..]
    }

    /// Exactly `min..=max` ASCII digits not followed by another digit.
    fn digits(&mut self, min: usize, max: usize) -> Option<u32> {
        let n = self.rest().bytes().take_while(u8::is_ascii_digit).count();
        if n < min || n > max {
            return None;
        }
        let v = self.rest()[..n].parse().ok()?;
        self.pos += n;
        Some(v)
    }

    fn spaces(&mut self) -> bool {
        let n: usize = self
            .rest()
            .chars()
            .take_while(|c| c.is_whitespace())
            .map(char::len_utf8)
            .sum();
        self.pos += n;
        n > 0
    }

    fn byte(&mut self, b: u8) -> bool {
        if self.rest().as_bytes().first() == Some(&b) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    /// A full month name not followed by a letter; returns 1..=12.
    fn month(&mut self) -> Option<u8> {
        let rest = self.rest();
        for (i, name) in MONTHS.iter().enumerate() {
            let Some(head) = rest.get(..name.len()) else {
                continue;
            };
            if head.eq_ignore_ascii_case(name)
                && !rest[name.len()..].starts_with(|c: char| c.is_alphabetic())
            {
                self.pos += name.len();
                return Some(i as u8 + 1);
            }
        }
        None
    }
}

fn prev_char(s: &str, at: usize) -> Option<char> {
    s[..at].chars().next_back()
}

fn year4(c: &mut Cursor) -> Option<i32> {
    c.digits(4, 4).map(|y| y as i32)
}

fn month_first(s: &str, at: usize) -> Vec<(usize, DateValue)> {
    let mut out = Vec::new();
    let mut c = Cursor { s, pos: at };
    let Some(month) = c.month() else {
        return out;
    };
    if !c.spaces() {
        return out;
    }
    let after_month = c.pos;
    // Month D, YYYY
    if let Some(day) = c.digits(1, 2) {
        if c.byte(b',') {
            c.spaces();
            if let Some(year) = year4(&mut c) {
                if let Ok(v) = DateValue::from_parts(day.into(), month.into(), year.into()) {
                    if day > 0 {
                        out.push((c.pos, v));
                    }
                }
            }
        }
    }
    // Month YYYY
    let mut c = Cursor { s, pos: after_month };
    if let Some(year) = year4(&mut c) {
        if let Ok(v) = DateValue::from_parts(0, month.into(), year.into()) {
            out.push((c.pos, v));
        }
    }
    out
}

fn day_first(s: &str, at: usize) -> Option<(usize, DateValue)> {
    let mut c = Cursor { s, pos: at };
    let day = c.digits(1, 2)?;
    if day == 0 || !c.spaces() {
        return None;
    }
    let month = c.month()?;
    if !c.spaces() {
        return None;
    }
    let year = year4(&mut c)?;
    let v = DateValue::from_parts(day.into(), month.into(), year.into()).ok()?;
    Some((c.pos, v))
}

fn iso(s: &str, at: usize) -> Option<(usize, DateValue)> {
    let mut c = Cursor { s, pos: at };
    let year = c.digits(4, 4)?;
    if !c.byte(b'-') {
        return None;
    }
    let month = c.digits(2, 2)?;
    if !c.byte(b'-') {
        return None;
    }
    let day = c.digits(2, 2)?;
    if month == 0 || day == 0 {
        return None;
    }
    let v = DateValue::from_parts(day.into(), month.into(), year.into()).ok()?;
    Some((c.pos, v))
}

fn bare_year(s: &str, at: usize) -> Option<(usize, DateValue)> {
    let mut c = Cursor { s, pos: at };
    let year = c.digits(4, 4)?;
    if !(1000..=2999).contains(&year) {
        return None;
    }
    Some((c.pos, DateValue::year_only(year as i32).ok()?))
}

/// Longest date starting exactly at byte `at`.
fn longest_at(s: &str, at: usize) -> Option<(usize, DateValue)> {
    let prev = prev_char(s, at);
    let next = s[at..].chars().next()?;
    let mut candidates: Vec<(usize, DateValue)> = Vec::new();
    if next.is_alphabetic() && !prev.is_some_and(char::is_alphanumeric) {
        candidates.extend(month_first(s, at));
    }
    if next.is_ascii_digit() && !prev.is_some_and(|p| p.is_ascii_digit()) {
        if !prev.is_some_and(char::is_alphanumeric) {
            candidates.extend(day_first(s, at));
        }
        candidates.extend(iso(s, at));
        candidates.extend(bare_year(s, at));
    }
    // max_by_key keeps the last maximum; candidates are never equal length
    // from different formats except in impossible cases, so order is moot.
    candidates.into_iter().max_by_key(|(end, _)| *end)
}

/// Finds all non-overlapping dates in `sentence`, scanning left to right and
/// taking the longest form at each start.
pub fn extract_dates(sentence: &str) -> Vec<ExtractedDate> {
    let mut out = Vec::new();
    let mut at = 0;
    while at < sentence.len() {
        if let Some((end, value)) = longest_at(sentence, at) {
            out.push(ExtractedDate {
                value,
                span: at..end,
            });
            at = end;
        } else {
            at += sentence[at..].chars().next().map_or(1, char::len_utf8);
        }
    }
    out
}

/// Parses a string that is exactly one date surface form.
pub fn parse_date(s: &str) -> Option<DateValue> {
    longest_at(s, 0).and_then(|(end, v)| (end == s.len()).then_some(v))
}

/// True iff some extracted date agrees with `triple_date` on the year and on
/// every other component specified on both sides.
pub fn date_matches(triple_date: &DateValue, sentence_dates: &[ExtractedDate]) -> bool {
    sentence_dates.iter().any(|d| dates_agree(triple_date, &d.value))
}

pub(crate) fn dates_agree(a: &DateValue, b: &DateValue) -> bool {
    let agree = |x: u8, y: u8| x == 0 || y == 0 || x == y;
    a.year() == b.year() && agree(a.month(), b.month()) && agree(a.day(), b.day())
}
