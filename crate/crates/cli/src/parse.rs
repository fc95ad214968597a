//! Polynomial text: `term (('+'|'-') term)*` with `term = [c['*']]u['^'k] | c`.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    /// 1-based column in the input.
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "column {}: {}", self.column, self.message)
    }
}

impl std::error::Error for ParseError {}

struct Cursor<'a> {
    chars: Vec<(usize, char)>,
    pos: usize,
    text: &'a str,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str) -> Self {
        let chars = text
            .char_indices()
            .filter(|(_, c)| !c.is_whitespace())
            .collect();
        Self {
            chars,
            pos: 0,
            text,
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).map(|&(_, c)| c)
    }

    fn column(&self) -> usize {
        match self.chars.get(self.pos) {
            Some(&(byte, _)) => self.text[..byte].chars().count() + 1,
            None => self.text.chars().count() + 1,
        }
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError {
            column: self.column(),
            message: message.into(),
        }
    }

    fn bump(&mut self) {
        self.pos += 1;
    }

    fn digits(&mut self) -> Option<String> {
        let mut out = String::new();
        while let Some(c) = self.peek().filter(char::is_ascii_digit) {
            out.push(c);
            self.bump();
        }
        (!out.is_empty()).then_some(out)
    }
}

/// Dense coefficients, constant term first, trailing zeros removed.
pub fn parse_poly(text: &str) -> Result<Vec<BigInt>, ParseError> {
    let mut cur = Cursor::new(text);
    if cur.peek().is_none() {
        return Err(cur.error("empty polynomial"));
    }
    let mut dense: Vec<BigInt> = Vec::new();
    let mut seen: Vec<usize> = Vec::new();
    let mut first = true;
    while cur.peek().is_some() {
        let mut sign = BigInt::one();
        match cur.peek() {
            Some('+') => cur.bump(),
            Some('-') => {
                sign = -sign;
                cur.bump();
            }
            _ if first => {}
            Some(c) => return Err(cur.error(format!("expected '+' or '-', found '{c}'"))),
            None => unreachable!(),
        }
        first = false;
        let start = cur.column();
        let coeff = cur
            .digits()
            .map(|d| d.parse::<BigInt>().expect("digits parse"));
        let has_u = match cur.peek() {
            Some('*') if coeff.is_some() => {
                cur.bump();
                if cur.peek() != Some('u') {
                    return Err(cur.error("expected 'u' after '*'"));
                }
                true
            }
            Some('u') => true,
            _ => false,
        };
        let k = if has_u {
            cur.bump();
            if cur.peek() == Some('^') {
                cur.bump();
                let d = cur
                    .digits()
                    .ok_or_else(|| cur.error("expected an exponent after '^'"))?;
                d.parse::<usize>()
                    .map_err(|_| cur.error("exponent too large"))?
            } else {
                1
            }
        } else {
            match coeff {
                Some(_) => 0,
                None => {
                    return Err(match cur.peek() {
                        Some(c) => cur.error(format!("expected a term, found '{c}'")),
                        None => cur.error("expected a term after the sign"),
                    })
                }
            }
        };
        if seen.contains(&k) {
            return Err(ParseError {
                column: start,
                message: format!("exponent {k} appears more than once"),
            });
        }
        seen.push(k);
        if dense.len() <= k {
            dense.resize(k + 1, BigInt::zero());
        }
        dense[k] = sign * coeff.unwrap_or_else(BigInt::one);
    }
    while dense.len() > 1 && dense.last().is_some_and(Zero::is_zero) {
        dense.pop();
    }
    Ok(dense)
}
