//! Parsers for verifier and generator completions.
//!
//! Completions carry their chain of thought inside `<think>` tags and
//! their actual output after them. This module splits the two, extracts
//! rating pairs from verifier output and boxed answers from generator
//! output, and decides answer equivalence with a simplified numeric
//! checker behind a pluggable oracle seam.
//!
//! Every function here is total over arbitrary input text: bad input
//! degrades to a parse status or `None`, never a panic.

pub mod expr;

use alloc::string::String;

use crate::math;
use crate::types::{ParseStatus, VerifierJudgment};

/// A completion split into think-span reasoning and the remaining text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedCompletion {
    /// Concatenated content of every `<think>…</think>` span.
    pub reasoning: String,
    /// Everything outside the think spans, in order.
    pub final_answer_region: String,
    /// Character count of the original text.
    pub source_len: usize,
}

const THINK_OPEN: &str = "<think>";
const THINK_CLOSE: &str = "</think>";

/// Splits a completion into reasoning and the final-answer region.
///
/// An unclosed `<think>` swallows the rest of the text as reasoning,
/// which is what a completion truncated at the sequence limit looks
/// like.
pub fn strip_think(text: &str) -> ParsedCompletion {
    let mut reasoning = String::new();
    let mut region = String::new();
    let mut rest = text;
    loop {
        match rest.find(THINK_OPEN) {
            None => {
                region.push_str(rest);
                break;
            }
            Some(start) => {
                region.push_str(&rest[..start]);
                let inner = &rest[start + THINK_OPEN.len()..];
                match inner.find(THINK_CLOSE) {
                    None => {
                        reasoning.push_str(inner);
                        break;
                    }
                    Some(end) => {
                        reasoning.push_str(&inner[..end]);
                        rest = &inner[end + THINK_CLOSE.len()..];
                    }
                }
            }
        }
    }
    ParsedCompletion {
        reasoning,
        final_answer_region: region,
        source_len: text.chars().count(),
    }
}

/// Returns the content of the last `\boxed{…}` in `text`, matching
/// braces and skipping escaped ones. `None` if there is no box or its
/// braces never balance.
pub fn extract_boxed(text: &str) -> Option<&str> {
    const MARK: &str = "\\boxed{";
    let start = text.rfind(MARK)?;
    let body = &text[start + MARK.len()..];
    let mut depth = 1usize;
    let mut escaped = false;
    for (i, c) in body.char_indices() {
        if escaped {
            escaped = false;
            continue;
        }
        match c {
            '\\' => escaped = true,
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(&body[..i]);
                }
            }
            _ => {}
        }
    }
    None
}

/// Extracts a rating pair from the post-think region of a verifier
/// completion.
///
/// Three rules are tried in order; the first that produces two numbers
/// wins:
/// 1. a boxed pair: `\boxed{x, y}` or `\boxed{x; y}`;
/// 2. labeled lines: `Response A: <num>` / `Response B: <num>`
///    (case-insensitive; `Rating` and `Score` also accepted);
/// 3. the last two bare numbers in the region.
///
/// Ratings outside [0, 10] are preserved with status `out_of_range`.
/// Fewer than two numbers is `missing_ratings`; an empty region is
/// `malformed`. The returned judgment has empty reasoning; use
/// [`judge_completion`] to parse a whole completion.
pub fn parse_ratings(region: &str) -> VerifierJudgment {
    let blank = |status| VerifierJudgment {
        reasoning: String::new(),
        rating_a: None,
        rating_b: None,
        parse_status: status,
    };
    if region.trim().is_empty() {
        return blank(ParseStatus::Malformed);
    }
    let pair = boxed_rating_pair(region)
        .or_else(|| labeled_rating_pair(region))
        .or_else(|| trailing_number_pair(region));
    match pair {
        Some((a, b)) => {
            let in_range = |v: f64| (0.0..=10.0).contains(&v);
            let parse_status = if in_range(a) && in_range(b) {
                ParseStatus::Ok
            } else {
                ParseStatus::OutOfRange
            };
            VerifierJudgment {
                reasoning: String::new(),
                rating_a: Some(a),
                rating_b: Some(b),
                parse_status,
            }
        }
        None => blank(ParseStatus::MissingRatings),
    }
}

/// Parses a raw verifier completion: strips think spans, extracts the
/// rating pair, and carries the reasoning over.
pub fn judge_completion(text: &str) -> VerifierJudgment {
    let parsed = strip_think(text);
    let mut judgment = parse_ratings(&parsed.final_answer_region);
    judgment.reasoning = parsed.reasoning;
    judgment
}

fn boxed_rating_pair(region: &str) -> Option<(f64, f64)> {
    let content = extract_boxed(region)?;
    let mut parts = content.split([',', ';']);
    let a = parse_full_number(parts.next()?)?;
    let b = parse_full_number(parts.next()?)?;
    if parts.next().is_some() {
        return None;
    }
    Some((a, b))
}

fn parse_full_number(s: &str) -> Option<f64> {
    let v: f64 = s.trim().parse().ok()?;
    v.is_finite().then_some(v)
}

fn labeled_rating_pair(region: &str) -> Option<(f64, f64)> {
    let mut rating_a = None;
    let mut rating_b = None;
    for line in region.lines() {
        if let Some((slot, value)) = labeled_rating(line) {
            let target = if slot == 0 { &mut rating_a } else { &mut rating_b };
            if target.is_none() {
                *target = Some(value);
            }
        }
    }
    Some((rating_a?, rating_b?))
}

/// Matches one labeled-rating line, e.g. `Response A: 8.5` or
/// `**Score B** = 3`.
fn labeled_rating(line: &str) -> Option<(u8, f64)> {
    let cleaned: String = line
        .chars()
        .filter(|c| !matches!(c, '*' | '`' | '#' | '_'))
        .collect();
    let lower = cleaned.to_lowercase();
    for keyword in ["response", "rating", "score"] {
        for (pos, _) in lower.match_indices(keyword) {
            if lower[..pos]
                .chars()
                .next_back()
                .is_some_and(|c| c.is_alphanumeric())
            {
                continue;
            }
            let rest = lower[pos + keyword.len()..].trim_start();
            let slot = match rest.chars().next() {
                Some('a') => 0u8,
                Some('b') => 1u8,
                _ => continue,
            };
            let mut after = &rest[1..];
            if after.chars().next().is_some_and(|c| c.is_alphanumeric()) {
                continue;
            }
            after = after.trim_start();
            while let Some(stripped) = after.strip_prefix([')', '.']) {
                after = stripped.trim_start();
            }
            let Some(sep_stripped) = after.strip_prefix([':', '=']) else {
                continue;
            };
            after = sep_stripped.trim_start();
            let (negative, number_text) = match after.strip_prefix('-') {
                Some(stripped) => (true, stripped.trim_start()),
                None => (false, after),
            };
            if let Some((value, _)) = scan_unsigned_number(number_text) {
                return Some((slot, if negative { -value } else { value }));
            }
        }
    }
    None
}

fn trailing_number_pair(region: &str) -> Option<(f64, f64)> {
    let mut last_two: [Option<f64>; 2] = [None, None];
    let mut boundary = true;
    let mut skip_until = 0usize;
    for (i, c) in region.char_indices() {
        if i < skip_until {
            continue;
        }
        if c.is_ascii_digit() && boundary {
            if let Some((value, len)) = scan_unsigned_number(&region[i..]) {
                let followed_ok = region[i + len..]
                    .chars()
                    .next()
                    .is_none_or(|next| !next.is_alphanumeric());
                if followed_ok {
                    last_two = [last_two[1], Some(value)];
                    skip_until = i + len;
                    boundary = false;
                    continue;
                }
            }
        }
        boundary = !c.is_alphanumeric();
    }
    Some((last_two[0]?, last_two[1]?))
}

/// Scans an unsigned decimal at the start of `s`; returns the value and
/// its byte length.
fn scan_unsigned_number(s: &str) -> Option<(f64, usize)> {
    let bytes = s.as_bytes();
    let mut i = 0;
    while i < bytes.len() && bytes[i].is_ascii_digit() {
        i += 1;
    }
    if i == 0 {
        return None;
    }
    if i + 1 < bytes.len() && bytes[i] == b'.' && bytes[i + 1].is_ascii_digit() {
        i += 1;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
    }
    s[..i].parse().ok().map(|v| (v, i))
}

/// Decides whether two answer strings are equivalent.
///
/// The seam lets richer checkers (full symbolic equivalence, sandboxed
/// test execution for code answers) slot in behind the same call sites.
pub trait AnswerOracle {
    fn equivalent(&self, a: &str, b: &str) -> bool;
}

/// The built-in checker: normalized string match, falling back to
/// numeric evaluation within relative tolerance 1e-9.
#[derive(Debug, Clone, Copy, Default)]
pub struct BuiltinEquivalence;

impl AnswerOracle for BuiltinEquivalence {
    fn equivalent(&self, a: &str, b: &str) -> bool {
        let na = normalize_answer(a);
        let nb = normalize_answer(b);
        if na == nb {
            return true;
        }
        match (expr::evaluate(&na), expr::evaluate(&nb)) {
            (Ok(x), Ok(y)) => math::approx_eq(x, y, 1e-9),
            _ => false,
        }
    }
}

/// Equivalence under the built-in checker.
pub fn answers_equivalent(a: &str, b: &str) -> bool {
    BuiltinEquivalence.equivalent(a, b)
}

/// Strips math-mode wrappers and whitespace from an answer string.
pub fn normalize_answer(s: &str) -> String {
    let mut t = s.trim();
    loop {
        let before = t;
        t = strip_wrapper(t, "$$", "$$");
        t = strip_wrapper(t, "$", "$");
        t = strip_wrapper(t, "\\(", "\\)");
        t = strip_wrapper(t, "\\[", "\\]");
        if let Some(inner) = whole_boxed(t) {
            t = inner;
        }
        t = t.trim();
        if t == before {
            break;
        }
    }
    t.replace("\\left", " ")
        .replace("\\right", " ")
        .split_whitespace()
        .collect()
}

fn strip_wrapper<'a>(t: &'a str, prefix: &str, suffix: &str) -> &'a str {
    if t.len() >= prefix.len() + suffix.len() {
        if let Some(inner) = t
            .strip_prefix(prefix)
            .and_then(|inner| inner.strip_suffix(suffix))
        {
            return inner;
        }
    }
    t
}

/// If the entire string is one `\boxed{…}`, returns its content.
fn whole_boxed(t: &str) -> Option<&str> {
    const MARK: &str = "\\boxed{";
    let body = t.strip_prefix(MARK)?;
    let content = extract_boxed(t)?;
    // balanced box must close at the very end of the string
    (content.len() + 1 == body.len() && t.rfind(MARK) == Some(0)).then_some(content)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;
    use alloc::string::ToString;
    use proptest::prelude::*;

    #[test]
    fn strip_think_splits_reasoning_from_region() {
        let p = strip_think("<think>steps</think>Rating A: 8");
        assert_eq!(p.reasoning, "steps");
        assert_eq!(p.final_answer_region, "Rating A: 8");
        assert_eq!(p.source_len, "<think>steps</think>Rating A: 8".chars().count());
    }

    #[test]
    fn strip_think_without_tags_is_identity() {
        let p = strip_think("no tags at all");
        assert_eq!(p.reasoning, "");
        assert_eq!(p.final_answer_region, "no tags at all");
    }

    #[test]
    fn unclosed_think_swallows_the_rest() {
        let p = strip_think("<think>cut off");
        assert_eq!(p.reasoning, "cut off");
        assert_eq!(p.final_answer_region, "");
    }

    #[test]
    fn multiple_spans_concatenate() {
        let p = strip_think("a<think>x</think>b<think>y</think>c");
        assert_eq!(p.reasoning, "xy");
        assert_eq!(p.final_answer_region, "abc");
    }

    #[test]
    fn parse_ratings_labeled_lines() {
        let j = parse_ratings("Response A: 8.5\nResponse B: 2");
        assert_eq!(j.parse_status, ParseStatus::Ok);
        assert_eq!((j.rating_a, j.rating_b), (Some(8.5), Some(2.0)));
    }

    #[test]
    fn parse_ratings_boxed_pair() {
        let j = parse_ratings("\\boxed{10, 0}");
        assert_eq!(j.parse_status, ParseStatus::Ok);
        assert_eq!((j.rating_a, j.rating_b), (Some(10.0), Some(0.0)));

        let j = parse_ratings("final: \\boxed{7; 3.5}");
        assert_eq!(j.parse_status, ParseStatus::Ok);
        assert_eq!((j.rating_a, j.rating_b), (Some(7.0), Some(3.5)));
    }

    #[test]
    fn parse_ratings_out_of_range_preserves_raw_values() {
        let j = parse_ratings("Response A: 12\nResponse B: 3");
        assert_eq!(j.parse_status, ParseStatus::OutOfRange);
        assert_eq!((j.rating_a, j.rating_b), (Some(12.0), Some(3.0)));

        let j = parse_ratings("Rating A: -1\nRating B: 4");
        assert_eq!(j.parse_status, ParseStatus::OutOfRange);
        assert_eq!(j.rating_a, Some(-1.0));
    }

    #[test]
    fn parse_ratings_labeled_variants() {
        for region in [
            "Rating A: 8\nRating B: 2",
            "score a = 8\nscore b = 2",
            "**Response A**: 8\n**Response B**: 2",
            "rating for response a: 8\nrating for response b: 2",
        ] {
            let j = parse_ratings(region);
            assert_eq!(j.parse_status, ParseStatus::Ok, "{region}");
            assert_eq!((j.rating_a, j.rating_b), (Some(8.0), Some(2.0)), "{region}");
        }
    }

    #[test]
    fn parse_ratings_falls_back_to_trailing_numbers() {
        let j = parse_ratings("I would give these 7 and 4 respectively.");
        assert_eq!(j.parse_status, ParseStatus::Ok);
        assert_eq!((j.rating_a, j.rating_b), (Some(7.0), Some(4.0)));
    }

    #[test]
    fn parse_ratings_failure_modes() {
        assert_eq!(parse_ratings("").parse_status, ParseStatus::Malformed);
        assert_eq!(parse_ratings("   \n ").parse_status, ParseStatus::Malformed);
        assert_eq!(
            parse_ratings("no numbers here").parse_status,
            ParseStatus::MissingRatings
        );
        assert_eq!(
            parse_ratings("only one: 7").parse_status,
            ParseStatus::MissingRatings
        );
    }

    #[test]
    fn bare_number_scan_respects_word_boundaries() {
        // "v2" and "x2" are not ratings
        let j = parse_ratings("see v2 spec, rate 6 then 3");
        assert_eq!((j.rating_a, j.rating_b), (Some(6.0), Some(3.0)));
    }

    #[test]
    fn judge_completion_carries_reasoning() {
        let j = judge_completion("<think>compare both</think>\\boxed{9, 1}");
        assert_eq!(j.reasoning, "compare both");
        assert_eq!(j.parse_status, ParseStatus::Ok);

        let truncated = judge_completion("<think>ran out of tok");
        assert_eq!(truncated.parse_status, ParseStatus::Malformed);
        assert_eq!(truncated.reasoning, "ran out of tok");
    }

    #[test]
    fn extract_boxed_examples() {
        assert_eq!(extract_boxed("so the answer is \\boxed{42}"), Some("42"));
        assert_eq!(extract_boxed("\\boxed{\\frac{1}{2}}"), Some("\\frac{1}{2}"));
        assert_eq!(extract_boxed("no box here"), None);
        assert_eq!(extract_boxed("\\boxed{unbalanced"), None);
        // last box wins
        assert_eq!(
            extract_boxed("first \\boxed{1} then \\boxed{2}"),
            Some("2")
        );
    }

    #[test]
    fn answers_equivalent_examples() {
        assert!(answers_equivalent("0.5", "1/2"));
        assert!(answers_equivalent("\\frac{3}{4}", "0.75"));
        assert!(answers_equivalent("7", "7 "));
        assert!(!answers_equivalent("6", "4"));
        assert!(answers_equivalent("$\\frac{1}{2}$", "0.5"));
        assert!(answers_equivalent("\\boxed{42}", "42"));
        assert!(answers_equivalent("-9", "-(3^2)"));
        // non-numeric answers fall back to normalized string match
        assert!(answers_equivalent("x+1", "x + 1"));
        assert!(!answers_equivalent("x+1", "x+2"));
    }

    #[test]
    fn normalize_strips_wrappers() {
        assert_eq!(normalize_answer(" $ \\frac{1}{2} $ "), "\\frac{1}{2}");
        assert_eq!(normalize_answer("\\(0.5\\)"), "0.5");
        assert_eq!(normalize_answer("\\boxed{6}"), "6");
        assert_eq!(normalize_answer("\\left(3\\right)"), "(3)");
        // a box that is not the whole string stays put
        assert_eq!(normalize_answer("a\\boxed{6}"), "a\\boxed{6}");
    }

    proptest! {
        #[test]
        fn strip_think_is_idempotent_on_region(text in ".{0,200}") {
            let once = strip_think(&text);
            let twice = strip_think(&once.final_answer_region);
            prop_assert_eq!(&twice.final_answer_region, &once.final_answer_region);
            prop_assert_eq!(twice.reasoning, "");
        }

        #[test]
        fn strip_think_accounts_for_every_char(text in ".{0,200}") {
            let p = strip_think(&text);
            let chars = p.reasoning.chars().count() + p.final_answer_region.chars().count();
            let markers = p.source_len - chars;
            // whatever is missing must be whole tag markers
            prop_assert!(markers <= text.matches(THINK_OPEN).count() * THINK_OPEN.chars().count()
                + text.matches(THINK_CLOSE).count() * THINK_CLOSE.chars().count());
        }

        #[test]
        fn parsers_never_panic(text in proptest::string::string_regex(".{0,300}").unwrap()) {
            let _ = parse_ratings(&text);
            let _ = strip_think(&text);
            let _ = extract_boxed(&text);
            let _ = judge_completion(&text);
        }

        #[test]
        fn parsers_never_panic_on_lossy_bytes(bytes in proptest::collection::vec(any::<u8>(), 0..300)) {
            let text = String::from_utf8_lossy(&bytes);
            let _ = parse_ratings(&text);
            let _ = strip_think(&text);
            let _ = extract_boxed(&text);
        }

        #[test]
        fn boxed_extraction_ignores_prefixes(prefix in "[^\\\\]{0,40}", inner in "[0-9]{1,6}") {
            let text = format!("\\boxed{{{inner}}}");
            let prefixed = format!("{prefix}{text}");
            prop_assert_eq!(extract_boxed(&text), extract_boxed(&prefixed));
        }

        #[test]
        fn equivalence_is_reflexive_and_symmetric(a in "[-0-9/.{}\\\\a-z]{1,20}", b in "[-0-9/.{}\\\\a-z]{1,20}") {
            prop_assert!(answers_equivalent(&a, &a));
            prop_assert_eq!(answers_equivalent(&a, &b), answers_equivalent(&b, &a));
        }

        #[test]
        fn ok_status_implies_in_range(text in ".{0,200}") {
            let j = parse_ratings(&text);
            prop_assert!(j.validate().is_ok());
        }
    }

    #[test]
    fn equivalence_transitive_on_numeric_fixtures() {
        let forms = ["1/2", "0.5", "\\frac{1}{2}", "\\frac{2}{4}", "2/4"];
        for a in forms {
            for b in forms {
                assert!(answers_equivalent(a, b), "{a} vs {b}");
            }
        }
        assert!(answers_equivalent("0.1", 0.1f64.to_string().as_str()));
    }
}
