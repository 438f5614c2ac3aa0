//! Recursive-descent parser for the polynomial input language.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor ('*' factor)*
//! factor := ('+' | '-') factor | power
//! power  := atom ('^' UINT)*
//! atom   := NUMBER | 'X' UINT | '(' expr ')' | 'adj' '(' expr ')'
//! ```
//!
//! Variable names and `adj` are case-insensitive. Multiplication must be
//! written explicitly.

use thiserror::Error;

use super::{Letter, NcPolynomial, Word};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind} at position {position}")]
pub struct ParseError {
    /// Byte offset into the input.
    pub position: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("unexpected character {0:?}")]
    UnexpectedChar(char),
    #[error("expected {expected}, found {found}")]
    Unexpected {
        expected: &'static str,
        found: String,
    },
    #[error("invalid number literal {0:?}")]
    InvalidNumber(String),
    #[error("generator index {0} is out of range (indices start at 1)")]
    GeneratorIndex(String),
    #[error("exponent must be a nonnegative integer, found {0:?}")]
    NonIntegerExponent(String),
    #[error("negative exponent")]
    NegativeExponent,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(String),
    Var(String),
    Adj,
    Plus,
    Minus,
    Star,
    Caret,
    LParen,
    RParen,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(s) => format!("number {s}"),
            Tok::Var(s) => format!("variable X{s}"),
            Tok::Adj => "'adj'".into(),
            Tok::Plus => "'+'".into(),
            Tok::Minus => "'-'".into(),
            Tok::Star => "'*'".into(),
            Tok::Caret => "'^'".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::End => "end of input".into(),
        }
    }
}

fn err(position: usize, kind: ParseErrorKind) -> ParseError {
    ParseError { position, kind }
}

fn tokenize(src: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => out.push((start, Tok::Plus)),
            b'-' => out.push((start, Tok::Minus)),
            b'*' => out.push((start, Tok::Star)),
            b'^' => out.push((start, Tok::Caret)),
            b'(' => out.push((start, Tok::LParen)),
            b')' => out.push((start, Tok::RParen)),
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                // optional exponent part: e[+-]digits
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                out.push((start, Tok::Num(src[start..i].to_string())));
                continue;
            }
            b'x' | b'X' => {
                i += 1;
                let digits = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if digits == i {
                    let found = src[start..]
                        .chars()
                        .nth(1)
                        .map_or("end of input".into(), |c| format!("{c:?}"));
                    return Err(err(
                        digits,
                        ParseErrorKind::Unexpected {
                            expected: "generator index after 'X'",
                            found,
                        },
                    ));
                }
                out.push((start, Tok::Var(src[digits..i].to_string())));
                continue;
            }
            b'a' | b'A' if src[i..].len() >= 3 && src[i..i + 3].eq_ignore_ascii_case("adj") => {
                i += 3;
                out.push((start, Tok::Adj));
                continue;
            }
            _ => {
                let ch = src[i..].chars().next().unwrap_or('\u{fffd}');
                return Err(err(start, ParseErrorKind::UnexpectedChar(ch)));
            }
        }
        i += 1;
    }
    out.push((src.len(), Tok::End));
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].1
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].0
    }

    fn bump(&mut self) -> (usize, Tok) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok, expected: &'static str) -> Result<(), ParseError> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err(err(
                self.offset(),
                ParseErrorKind::Unexpected {
                    expected,
                    found: self.peek().describe(),
                },
            ))
        }
    }

    fn expr(&mut self) -> Result<NcPolynomial, ParseError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    acc = &acc + &self.term()?;
                }
                Tok::Minus => {
                    self.bump();
                    acc = &acc - &self.term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<NcPolynomial, ParseError> {
        let mut acc = self.factor()?;
        while *self.peek() == Tok::Star {
            self.bump();
            acc = acc.multiply(&self.factor()?);
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<NcPolynomial, ParseError> {
        match self.peek() {
            Tok::Minus => {
                self.bump();
                Ok(-&self.factor()?)
            }
            Tok::Plus => {
                self.bump();
                self.factor()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<NcPolynomial, ParseError> {
        let base = self.atom()?;
        let mut acc = base;
        while *self.peek() == Tok::Caret {
            self.bump();
            let exp = self.exponent()?;
            let mut out = NcPolynomial::one().with_dim(acc.dim());
            for _ in 0..exp {
                out = out.multiply(&acc);
            }
            acc = out;
        }
        Ok(acc)
    }

    fn exponent(&mut self) -> Result<u32, ParseError> {
        let at = self.offset();
        match self.bump().1 {
            Tok::Num(s) => {
                if !s.bytes().all(|b| b.is_ascii_digit()) {
                    return Err(err(at, ParseErrorKind::NonIntegerExponent(s)));
                }
                s.parse::<u32>()
                    .map_err(|_| err(at, ParseErrorKind::NonIntegerExponent(s)))
            }
            Tok::Minus => Err(err(at, ParseErrorKind::NegativeExponent)),
            other => Err(err(
                at,
                ParseErrorKind::Unexpected {
                    expected: "nonnegative integer exponent",
                    found: other.describe(),
                },
            )),
        }
    }

    fn atom(&mut self) -> Result<NcPolynomial, ParseError> {
        let at = self.offset();
        match self.bump().1 {
            Tok::Num(s) => {
                let v: f64 = s
                    .parse()
                    .map_err(|_| err(at, ParseErrorKind::InvalidNumber(s.clone())))?;
                if !v.is_finite() {
                    return Err(err(at, ParseErrorKind::InvalidNumber(s)));
                }
                Ok(NcPolynomial::constant(v))
            }
            Tok::Var(digits) => {
                let idx: Letter = digits
                    .parse()
                    .map_err(|_| err(at + 1, ParseErrorKind::GeneratorIndex(digits.clone())))?;
                if idx == 0 {
                    return Err(err(at + 1, ParseErrorKind::GeneratorIndex(digits)));
                }
                Ok(NcPolynomial::monomial(Word(vec![idx]), 1.0))
            }
            Tok::LParen => {
                let inner = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(inner)
            }
            Tok::Adj => {
                self.expect(Tok::LParen, "'(' after adj")?;
                let inner = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(inner.adjoint())
            }
            other => Err(err(
                at,
                ParseErrorKind::Unexpected {
                    expected: "number, variable, '(' or adj(",
                    found: other.describe(),
                },
            )),
        }
    }
}

/// Parses a polynomial into canonical expanded form.
pub fn parse(text: &str) -> Result<NcPolynomial, ParseError> {
    let toks = tokenize(text)?;
    let mut p = Parser { toks, pos: 0 };
    let out = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(err(
            p.offset(),
            ParseErrorKind::Unexpected {
                expected: "operator or end of input",
                found: p.peek().describe(),
            },
        ));
    }
    Ok(out)
}
