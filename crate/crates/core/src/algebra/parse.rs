//! Parser for the polynomial input grammar.
//!
//! ```text
//! poly   := term (('+'|'-') term)*
//! term   := coeff ('*' factor)* | factor ('*' factor)*
//! factor := 'z' ['^' int] | 'u' ['^' nonneg-int]
//! coeff  := int ['/' positive-int]
//! ```
//!
//! Whitespace between tokens is ignored. A leading sign on the first term
//! (or directly after an operator) is accepted.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use super::{BiLaurent, Monomial, Rational};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    UnexpectedEnd,
    UnexpectedChar(char),
    NegativeUExponent,
    NonIntegerExponent,
    ZeroDenominator,
    ExponentOverflow,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("parse error at byte {position}: {kind}")]
pub struct ParseError {
    pub position: usize,
    pub kind: ParseErrorKind,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::UnexpectedEnd => f.write_str("unexpected end of input"),
            ParseErrorKind::UnexpectedChar(c) => write!(f, "unexpected character {c:?}"),
            ParseErrorKind::NegativeUExponent => f.write_str("negative exponent of u"),
            ParseErrorKind::NonIntegerExponent => f.write_str("exponent is not an integer"),
            ParseErrorKind::ZeroDenominator => f.write_str("zero denominator"),
            ParseErrorKind::ExponentOverflow => f.write_str("exponent out of range"),
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn err(&self, kind: ParseErrorKind) -> ParseError {
        ParseError {
            position: self.pos,
            kind,
        }
    }

    fn unexpected(&self) -> ParseError {
        match std::str::from_utf8(&self.src[self.pos..])
            .ok()
            .and_then(|s| s.chars().next())
        {
            Some(c) => self.err(ParseErrorKind::UnexpectedChar(c)),
            None if self.pos < self.src.len() => {
                self.err(ParseErrorKind::UnexpectedChar(char::REPLACEMENT_CHARACTER))
            }
            None => self.err(ParseErrorKind::UnexpectedEnd),
        }
    }

    fn expect_more(&mut self) -> Result<u8, ParseError> {
        self.peek()
            .ok_or_else(|| self.err(ParseErrorKind::UnexpectedEnd))
    }

    fn digits(&mut self) -> Option<&'a str> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        (self.pos > start).then(|| std::str::from_utf8(&self.src[start..self.pos]).unwrap())
    }

    fn poly(&mut self) -> Result<BiLaurent, ParseError> {
        let mut out = BiLaurent::zero();
        let mut negate = false;
        loop {
            let (coeff, mono) = self.term()?;
            out.add_term(mono, if negate { -coeff } else { coeff });
            match self.peek() {
                None => return Ok(out),
                Some(b'+') => negate = false,
                Some(b'-') => negate = true,
                Some(_) => return Err(self.unexpected()),
            }
            self.pos += 1;
        }
    }

    fn term(&mut self) -> Result<(Rational, Monomial), ParseError> {
        let mut sign = 1;
        while let Some(c @ (b'+' | b'-')) = self.peek() {
            if c == b'-' {
                sign = -sign;
            }
            self.pos += 1;
        }
        let mut coeff = Rational::one();
        let mut mono = Monomial::ONE;
        match self.expect_more()? {
            b'0'..=b'9' => coeff = self.coeff()?,
            b'z' | b'u' => mono = self.factor(mono)?,
            _ => return Err(self.unexpected()),
        }
        while self.peek() == Some(b'*') {
            self.pos += 1;
            match self.expect_more()? {
                b'z' | b'u' => mono = self.factor(mono)?,
                _ => return Err(self.unexpected()),
            }
        }
        if sign < 0 {
            coeff = -coeff;
        }
        Ok((coeff, mono))
    }

    fn coeff(&mut self) -> Result<Rational, ParseError> {
        let num: BigInt = self
            .digits()
            .ok_or_else(|| self.unexpected())?
            .parse()
            .unwrap();
        if self.peek() != Some(b'/') {
            return Ok(Rational::from_integer(num));
        }
        self.pos += 1;
        let den_pos = {
            self.skip_ws();
            self.pos
        };
        let den: BigInt = self
            .digits()
            .ok_or_else(|| self.unexpected())?
            .parse()
            .unwrap();
        if den.is_zero() {
            return Err(ParseError {
                position: den_pos,
                kind: ParseErrorKind::ZeroDenominator,
            });
        }
        Ok(Rational::new(num, den))
    }

    fn factor(&mut self, acc: Monomial) -> Result<Monomial, ParseError> {
        let var = self.src[self.pos];
        self.pos += 1;
        let exp = if self.peek() == Some(b'^') {
            self.pos += 1;
            self.exponent()?
        } else {
            1
        };
        let overflow = || self.err(ParseErrorKind::ExponentOverflow);
        if var == b'z' {
            let zexp = acc.zexp.checked_add(exp).ok_or_else(overflow)?;
            Ok(Monomial { zexp, ..acc })
        } else {
            if exp < 0 {
                return Err(self.err(ParseErrorKind::NegativeUExponent));
            }
            let udeg = u32::try_from(exp)
                .ok()
                .and_then(|e| acc.udeg.checked_add(e))
                .ok_or_else(overflow)?;
            Ok(Monomial { udeg, ..acc })
        }
    }

    fn exponent(&mut self) -> Result<i64, ParseError> {
        let negative = match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                true
            }
            Some(b'+') => {
                self.pos += 1;
                false
            }
            _ => false,
        };
        let start = self.pos;
        let Some(text) = self.digits() else {
            return Err(self.err(ParseErrorKind::NonIntegerExponent));
        };
        if matches!(self.src.get(self.pos), Some(b'.') | Some(b'e') | Some(b'E')) {
            return Err(self.err(ParseErrorKind::NonIntegerExponent));
        }
        let value: i64 = text.parse().map_err(|_| ParseError {
            position: start,
            kind: ParseErrorKind::ExponentOverflow,
        })?;
        Ok(if negative { -value } else { value })
    }
}

/// Parses a polynomial in `z` (integer exponents) and `u` (non-negative
/// exponents) with exact rational coefficients.
pub fn parse_polynomial(text: &str) -> Result<BiLaurent, ParseError> {
    let mut parser = Parser {
        src: text.as_bytes(),
        pos: 0,
    };
    if parser.peek().is_none() {
        return Err(parser.err(ParseErrorKind::UnexpectedEnd));
    }
    parser.poly()
}

pub(crate) fn write_term(
    f: &mut fmt::Formatter<'_>,
    first: bool,
    c: &Rational,
    factors: &[String],
) -> fmt::Result {
    let negative = c.is_negative();
    match (first, negative) {
        (true, true) => f.write_str("-")?,
        (true, false) => {}
        (false, true) => f.write_str(" - ")?,
        (false, false) => f.write_str(" + ")?,
    }
    let magnitude = c.abs();
    if factors.is_empty() {
        return write!(f, "{magnitude}");
    }
    if !magnitude.is_one() {
        write!(f, "{magnitude}*")?;
    }
    f.write_str(&factors.join("*"))
}
