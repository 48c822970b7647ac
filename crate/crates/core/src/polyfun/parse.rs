//! Text format: a sum of terms `c * x1^a1 * ... * xn^an`.
//!
//! Coefficients are integers, decimals or fractions `p/q` and are kept
//! exact. `**` is accepted as a power alias; `x`, `y`, `z` alias `x1`,
//! `x2`, `x3`. Repeated factors multiply (`x1*x1` is `x1^2`).

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::Polynomial;

/// Parse failure with the 1-based character column where it was detected.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("parse error at column {column}: {message}")]
pub struct ParseError {
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(BigRational),
    Var(usize),
    Plus,
    Minus,
    Star,
    Slash,
    Pow,
    End,
}

struct Lexer {
    chars: Vec<(usize, char)>,
    pos: usize,
}

impl Lexer {
    fn new(src: &str) -> Self {
        Lexer { chars: src.chars().enumerate().collect(), pos: 0 }
    }

    fn err(column: usize, message: impl Into<String>) -> ParseError {
        ParseError { column, message: message.into() }
    }

    fn peek_char(&self) -> Option<char> {
        self.chars.get(self.pos).map(|&(_, c)| c)
    }

    fn tokens(mut self) -> Result<Vec<(usize, Tok)>, ParseError> {
        let mut out = Vec::new();
        loop {
            while matches!(self.peek_char(), Some(c) if c.is_whitespace()) {
                self.pos += 1;
            }
            let col = self.pos + 1;
            let Some(c) = self.peek_char() else {
                out.push((col, Tok::End));
                return Ok(out);
            };
            let tok = match c {
                '+' => {
                    self.pos += 1;
                    Tok::Plus
                }
                '-' => {
                    self.pos += 1;
                    Tok::Minus
                }
                '/' => {
                    self.pos += 1;
                    Tok::Slash
                }
                '^' => {
                    self.pos += 1;
                    Tok::Pow
                }
                '*' => {
                    self.pos += 1;
                    if self.peek_char() == Some('*') {
                        self.pos += 1;
                        Tok::Pow
                    } else {
                        Tok::Star
                    }
                }
                '0'..='9' | '.' => self.number(col)?,
                'x' | 'y' | 'z' => self.variable(col)?,
                other => return Err(Self::err(col, format!("unexpected character `{other}`"))),
            };
            out.push((col, tok));
        }
    }

    fn number(&mut self, col: usize) -> Result<Tok, ParseError> {
        let start = self.pos;
        while matches!(self.peek_char(), Some(c) if c.is_ascii_digit() || c == '.') {
            self.pos += 1;
        }
        let text: String = self.chars[start..self.pos].iter().map(|&(_, c)| c).collect();
        let (int_part, frac_part) = match text.split_once('.') {
            Some((a, b)) => {
                if b.contains('.') {
                    return Err(Self::err(col, format!("malformed number `{text}`")));
                }
                (a, b)
            }
            None => (text.as_str(), ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(Self::err(col, "expected digits"));
        }
        let digits = format!("{int_part}{frac_part}");
        let numer: BigInt = digits
            .parse()
            .map_err(|_| Self::err(col, format!("malformed number `{text}`")))?;
        let denom = num_traits::pow(BigInt::from(10), frac_part.len());
        Ok(Tok::Num(BigRational::new(numer, denom)))
    }

    fn variable(&mut self, col: usize) -> Result<Tok, ParseError> {
        let c = self.peek_char().unwrap();
        self.pos += 1;
        let start = self.pos;
        while matches!(self.peek_char(), Some(d) if d.is_ascii_digit()) {
            self.pos += 1;
        }
        let digits: String = self.chars[start..self.pos].iter().map(|&(_, c)| c).collect();
        if let Some(next) = self.peek_char() {
            if next.is_alphabetic() || next == '_' {
                return Err(Self::err(self.pos + 1, format!("unexpected character `{next}`")));
            }
        }
        let index = match (c, digits.is_empty()) {
            ('x', true) => 1,
            ('y', true) => 2,
            ('z', true) => 3,
            ('x', false) => digits
                .parse::<usize>()
                .map_err(|_| Self::err(col, "variable index out of range"))?,
            _ => return Err(Self::err(col, format!("unknown variable `{c}{digits}`"))),
        };
        if index == 0 {
            return Err(Self::err(col, "variables are numbered from x1"));
        }
        Ok(Tok::Var(index - 1))
    }
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
}

type Term = (BigRational, Vec<(usize, u32)>);

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].1
    }

    fn col(&self) -> usize {
        self.toks[self.pos].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].1.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err(&self, message: impl Into<String>) -> ParseError {
        ParseError { column: self.col(), message: message.into() }
    }

    fn expression(&mut self) -> Result<Vec<Term>, ParseError> {
        let mut terms = Vec::new();
        let mut sign = BigRational::one();
        match self.peek() {
            Tok::Minus => {
                self.bump();
                sign = -sign;
            }
            Tok::Plus => {
                self.bump();
            }
            _ => {}
        }
        loop {
            let (c, vars) = self.term()?;
            terms.push((c * &sign, vars));
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    sign = BigRational::one();
                }
                Tok::Minus => {
                    self.bump();
                    sign = -BigRational::one();
                }
                Tok::End => return Ok(terms),
                other => return Err(self.err(format!("expected `+`, `-` or end, found {}", describe(other)))),
            }
        }
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        let mut coeff = BigRational::one();
        let mut vars = Vec::new();
        self.factor(&mut coeff, &mut vars)?;
        while *self.peek() == Tok::Star {
            self.bump();
            self.factor(&mut coeff, &mut vars)?;
        }
        Ok((coeff, vars))
    }

    fn factor(&mut self, coeff: &mut BigRational, vars: &mut Vec<(usize, u32)>) -> Result<(), ParseError> {
        match self.bump() {
            Tok::Num(q) => {
                let mut q = q;
                if *self.peek() == Tok::Slash {
                    self.bump();
                    match self.bump() {
                        Tok::Num(d) if !d.is_zero() => q /= d,
                        Tok::Num(_) => return Err(self.err_prev("division by zero")),
                        other => return Err(self.err_prev(format!("expected a number after `/`, found {}", describe(&other)))),
                    }
                }
                *coeff *= q;
                Ok(())
            }
            Tok::Var(i) => {
                let mut e = 1u32;
                if *self.peek() == Tok::Pow {
                    self.bump();
                    match self.bump() {
                        Tok::Num(q) if q.is_integer() => {
                            e = q
                                .to_integer()
                                .try_into()
                                .map_err(|_| self.err_prev("exponent out of range"))?;
                        }
                        other => {
                            return Err(self.err_prev(format!(
                                "expected a non-negative integer exponent, found {}",
                                describe(&other)
                            )))
                        }
                    }
                }
                vars.push((i, e));
                Ok(())
            }
            other => {
                // report at the offending token
                self.pos = self.pos.saturating_sub(usize::from(other != Tok::End));
                Err(self.err(format!("expected a number or variable, found {}", describe(&other))))
            }
        }
    }

    fn err_prev(&self, message: impl Into<String>) -> ParseError {
        let idx = self.pos.saturating_sub(1);
        ParseError { column: self.toks[idx].0, message: message.into() }
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Num(q) => format!("number `{q}`"),
        Tok::Var(i) => format!("variable `x{}`", i + 1),
        Tok::Plus => "`+`".into(),
        Tok::Minus => "`-`".into(),
        Tok::Star => "`*`".into(),
        Tok::Slash => "`/`".into(),
        Tok::Pow => "`^`".into(),
        Tok::End => "end of input".into(),
    }
}

pub(super) fn parse(text: &str, dim: Option<usize>) -> Result<Polynomial, ParseError> {
    let toks = Lexer::new(text).tokens()?;
    let mut parser = Parser { toks, pos: 0 };
    let terms = parser.expression()?;
    let used = terms
        .iter()
        .flat_map(|(_, v)| v.iter().map(|&(i, _)| i + 1))
        .max()
        .unwrap_or(1);
    let n = match dim {
        Some(n) if used > n => {
            return Err(ParseError {
                column: 1,
                message: format!("variable x{used} exceeds dimension {n}"),
            })
        }
        Some(n) => n,
        None => used,
    };
    let terms = terms.into_iter().map(|(c, vars)| {
        let mut exps = vec![0u32; n];
        for (i, e) in vars {
            exps[i] += e;
        }
        (exps, c)
    });
    Ok(Polynomial::from_terms(n, terms))
}
