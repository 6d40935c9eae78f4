//! Token counting behind a pluggable interface.
//!
//! The training pipeline's token budgets are model-specific; the default
//! here is a cheap approximation (alphanumeric runs plus individual
//! punctuation marks) that callers can swap for an exact tokenizer.

/// Counts tokens in a piece of text.
pub trait Tokenizer {
    fn count_tokens(&self, text: &str) -> usize;
}

/// Whitespace-plus-punctuation approximate tokenizer.
///
/// Each maximal alphanumeric run counts as one token and every other
/// non-whitespace character counts on its own: `"Hello, world!"` is four
/// tokens.
#[derive(Debug, Clone, Copy, Default)]
pub struct ApproxTokenizer;

impl Tokenizer for ApproxTokenizer {
    fn count_tokens(&self, text: &str) -> usize {
        let mut count = 0;
        let mut in_word = false;
        for c in text.chars() {
            if c.is_whitespace() {
                in_word = false;
            } else if c.is_alphanumeric() || c == '_' {
                if !in_word {
                    count += 1;
                    in_word = true;
                }
            } else {
                count += 1;
                in_word = false;
            }
        }
        count
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_words_and_punctuation() {
        let t = ApproxTokenizer;
        assert_eq!(t.count_tokens(""), 0);
        assert_eq!(t.count_tokens("   "), 0);
        assert_eq!(t.count_tokens("Hello, world!"), 4);
        assert_eq!(t.count_tokens("x = 1/2"), 5);
        assert_eq!(t.count_tokens("\\boxed{42}"), 5);
    }

    #[test]
    fn token_count_is_additive_over_whitespace_joins() {
        let t = ApproxTokenizer;
        let a = "solve for x";
        let b = "\\frac{1}{2}";
        assert_eq!(
            t.count_tokens(a) + t.count_tokens(b),
            t.count_tokens(&alloc::format!("{a} {b}"))
        );
    }
}
