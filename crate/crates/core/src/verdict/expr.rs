//! Recursive-descent evaluator for the numeric answer grammar.
//!
//! Accepts integers, decimals, fractions `a/b` and `\frac{a}{b}`, the
//! four arithmetic operators (including `\cdot`, `\times`, `\div`),
//! right-associative `^`, unary minus, and parentheses or braces for
//! grouping. Anything with a free symbol, an unsupported command, or
//! more than one value is an error.

use alloc::string::String;
use alloc::vec::Vec;
use thiserror::Error;

use crate::math;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExprError {
    #[error("malformed expression")]
    Malformed,
    #[error("free symbol or unsupported function: {0}")]
    FreeSymbol(String),
    #[error("expression does not evaluate to a single value")]
    NonSingleValue,
    #[error("expression does not evaluate to a finite number")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Token {
    Number(f64),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    Open,
    Close,
    Frac,
    ListSep,
}

fn lex(input: &str) -> Result<Vec<Token>, ExprError> {
    let mut tokens = Vec::new();
    let mut chars = input.char_indices().peekable();
    while let Some(&(i, c)) = chars.peek() {
        match c {
            _ if c.is_whitespace() => {
                chars.next();
            }
            '0'..='9' | '.' => {
                let (value, len) = scan_number(&input[i..]).ok_or(ExprError::Malformed)?;
                tokens.push(Token::Number(value));
                for _ in 0..input[i..i + len].chars().count() {
                    chars.next();
                }
            }
            '+' => {
                tokens.push(Token::Plus);
                chars.next();
            }
            '-' | '\u{2212}' => {
                tokens.push(Token::Minus);
                chars.next();
            }
            '*' | '\u{00d7}' | '\u{22c5}' | '\u{00b7}' => {
                tokens.push(Token::Star);
                chars.next();
            }
            '/' | '\u{00f7}' => {
                tokens.push(Token::Slash);
                chars.next();
            }
            '^' => {
                tokens.push(Token::Caret);
                chars.next();
            }
            '(' | '{' => {
                tokens.push(Token::Open);
                chars.next();
            }
            ')' | '}' => {
                tokens.push(Token::Close);
                chars.next();
            }
            ',' | ';' => {
                tokens.push(Token::ListSep);
                chars.next();
            }
            '\\' => {
                chars.next();
                let mut word = String::new();
                while let Some(&(_, c)) = chars.peek() {
                    if c.is_ascii_alphabetic() {
                        word.push(c);
                        chars.next();
                    } else {
                        break;
                    }
                }
                match word.as_str() {
                    "frac" | "dfrac" | "tfrac" => tokens.push(Token::Frac),
                    "cdot" | "times" => tokens.push(Token::Star),
                    "div" => tokens.push(Token::Slash),
                    "left" | "right" => {}
                    "" => match chars.peek() {
                        // escaped delimiters group like their plain forms
                        Some(&(_, '(')) | Some(&(_, '{')) | Some(&(_, '[')) => {
                            tokens.push(Token::Open);
                            chars.next();
                        }
                        Some(&(_, ')')) | Some(&(_, '}')) | Some(&(_, ']')) => {
                            tokens.push(Token::Close);
                            chars.next();
                        }
                        _ => return Err(ExprError::Malformed),
                    },
                    other => return Err(ExprError::FreeSymbol(String::from(other))),
                }
            }
            _ if c.is_alphabetic() => {
                let mut word = String::new();
                while let Some(&(_, c)) = chars.peek() {
                    if c.is_alphanumeric() {
                        word.push(c);
                        chars.next();
                    } else {
                        break;
                    }
                }
                return Err(ExprError::FreeSymbol(word));
            }
            _ => return Err(ExprError::Malformed),
        }
    }
    Ok(tokens)
}

/// Scans a decimal literal (with optional exponent) at the start of `s`;
/// returns the value and its byte length.
fn scan_number(s: &str) -> Option<(f64, usize)> {
    let bytes = s.as_bytes();
    let mut i = 0;
    while i < bytes.len() && bytes[i].is_ascii_digit() {
        i += 1;
    }
    let int_digits = i;
    if i < bytes.len() && bytes[i] == b'.' {
        let mut j = i + 1;
        while j < bytes.len() && bytes[j].is_ascii_digit() {
            j += 1;
        }
        if j > i + 1 || int_digits > 0 {
            i = j.max(i + usize::from(j > i + 1));
        }
    }
    if i == 0 {
        return None;
    }
    // exponent only when digits follow, so "2e" stays a symbol error
    if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
        let mut j = i + 1;
        if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
            j += 1;
        }
        let exp_start = j;
        while j < bytes.len() && bytes[j].is_ascii_digit() {
            j += 1;
        }
        if j > exp_start {
            i = j;
        }
    }
    s[..i].parse().ok().map(|v| (v, i))
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<Token> {
        self.tokens.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.peek();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, t: Token) -> Result<(), ExprError> {
        if self.bump() == Some(t) {
            Ok(())
        } else {
            Err(ExprError::Malformed)
        }
    }

    fn expr(&mut self) -> Result<f64, ExprError> {
        let mut value = self.term()?;
        loop {
            match self.peek() {
                Some(Token::Plus) => {
                    self.pos += 1;
                    value += self.term()?;
                }
                Some(Token::Minus) => {
                    self.pos += 1;
                    value -= self.term()?;
                }
                _ => return Ok(value),
            }
        }
    }

    fn term(&mut self) -> Result<f64, ExprError> {
        let mut value = self.unary()?;
        loop {
            match self.peek() {
                Some(Token::Star) => {
                    self.pos += 1;
                    value *= self.unary()?;
                }
                Some(Token::Slash) => {
                    self.pos += 1;
                    value /= self.unary()?;
                }
                _ => return Ok(value),
            }
        }
    }

    // `^` binds tighter than unary minus: -3^2 is -(3^2)
    fn unary(&mut self) -> Result<f64, ExprError> {
        if self.peek() == Some(Token::Minus) {
            self.pos += 1;
            return Ok(-self.unary()?);
        }
        self.power()
    }

    fn power(&mut self) -> Result<f64, ExprError> {
        let base = self.atom()?;
        if self.peek() == Some(Token::Caret) {
            self.pos += 1;
            let exponent = self.unary()?;
            return Ok(math::pow(base, exponent));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<f64, ExprError> {
        match self.bump() {
            Some(Token::Number(v)) => Ok(v),
            Some(Token::Open) => {
                let value = self.expr()?;
                if self.peek() == Some(Token::ListSep) {
                    return Err(ExprError::NonSingleValue);
                }
                self.expect(Token::Close)?;
                Ok(value)
            }
            Some(Token::Frac) => {
                let numerator = self.frac_operand()?;
                let denominator = self.frac_operand()?;
                Ok(numerator / denominator)
            }
            _ => Err(ExprError::Malformed),
        }
    }

    fn frac_operand(&mut self) -> Result<f64, ExprError> {
        match self.peek() {
            Some(Token::Open) => self.atom(),
            Some(Token::Number(v)) => {
                self.pos += 1;
                Ok(v)
            }
            Some(Token::Minus) => self.unary(),
            _ => Err(ExprError::Malformed),
        }
    }
}

/// Evaluates a single numeric expression.
pub fn evaluate(input: &str) -> Result<f64, ExprError> {
    let tokens = lex(input)?;
    if tokens.is_empty() {
        return Err(ExprError::Malformed);
    }
    let mut parser = Parser {
        tokens: &tokens,
        pos: 0,
    };
    let value = parser.expr()?;
    match parser.peek() {
        None => {}
        Some(Token::ListSep) => return Err(ExprError::NonSingleValue),
        // a second value with no operator, e.g. "3 5" or "(1)(2)"
        Some(Token::Number(_)) | Some(Token::Open) | Some(Token::Frac) => {
            return Err(ExprError::NonSingleValue)
        }
        Some(_) => return Err(ExprError::Malformed),
    }
    if !value.is_finite() {
        return Err(ExprError::NonFinite);
    }
    Ok(value)
}
