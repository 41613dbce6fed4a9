//! Recursive-descent parser for the polynomial grammar:
//!
//! ```text
//! expr   := ['+' | '-'] term (('+' | '-') term)*
//! term   := factor ('*' factor)*
//! factor := base ('^' uint)?
//! base   := uint ['/' uint] | ident | '(' expr ')'
//! ```
//!
//! Whitespace is ignored between tokens. Arithmetic is exact.

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};

use super::{Exponent, PolyError, Polynomial, Rational, VariableTable};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Int(BigInt),
    Ident(String),
    Plus,
    Minus,
    Star,
    Caret,
    Slash,
    LParen,
    RParen,
    End,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn next(&mut self) -> Result<(Tok, usize), PolyError> {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        let Some(&c) = self.src.get(self.pos) else {
            return Ok((Tok::End, start));
        };
        let single = |t| Ok((t, start));
        match c {
            b'+' => {
                self.pos += 1;
                single(Tok::Plus)
            }
            b'-' => {
                self.pos += 1;
                single(Tok::Minus)
            }
            b'*' => {
                self.pos += 1;
                single(Tok::Star)
            }
            b'^' => {
                self.pos += 1;
                single(Tok::Caret)
            }
            b'/' => {
                self.pos += 1;
                single(Tok::Slash)
            }
            b'(' => {
                self.pos += 1;
                single(Tok::LParen)
            }
            b')' => {
                self.pos += 1;
                single(Tok::RParen)
            }
            b'0'..=b'9' => {
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                if self.pos < self.src.len() && (self.src[self.pos] == b'.' || self.src[self.pos].is_ascii_alphabetic()) {
                    return Err(PolyError::Syntax {
                        offset: self.pos,
                        message: "malformed number literal".into(),
                    });
                }
                let digits = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
                Ok((Tok::Int(digits.parse().expect("digits parse")), start))
            }
            c if c.is_ascii_alphabetic() => {
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                let s = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii ident");
                Ok((Tok::Ident(s.to_string()), start))
            }
            _ => Err(PolyError::Syntax {
                offset: start,
                message: format!("unexpected character `{}`", char::from(c)),
            }),
        }
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    tok: Tok,
    offset: usize,
    vars: &'a VariableTable,
}

impl<'a> Parser<'a> {
    fn bump(&mut self) -> Result<(), PolyError> {
        let (t, o) = self.lexer.next()?;
        self.tok = t;
        self.offset = o;
        Ok(())
    }

    fn syntax<T>(&self, message: &str) -> Result<T, PolyError> {
        Err(PolyError::Syntax { offset: self.offset, message: message.into() })
    }

    fn expr(&mut self) -> Result<Polynomial, PolyError> {
        let n = self.vars.len();
        let negate = match self.tok {
            Tok::Minus => {
                self.bump()?;
                true
            }
            Tok::Plus => {
                self.bump()?;
                false
            }
            _ => false,
        };
        let first = self.term()?;
        let mut acc = if negate { -&first } else { first };
        loop {
            match self.tok {
                Tok::Plus => {
                    self.bump()?;
                    acc = &acc + &self.term()?;
                }
                Tok::Minus => {
                    self.bump()?;
                    acc = &acc - &self.term()?;
                }
                _ => break,
            }
        }
        debug_assert_eq!(acc.nvars(), n);
        Ok(acc)
    }

    fn term(&mut self) -> Result<Polynomial, PolyError> {
        let mut acc = self.factor()?;
        while self.tok == Tok::Star {
            self.bump()?;
            acc = &acc * &self.factor()?;
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<Polynomial, PolyError> {
        let base = self.base()?;
        if self.tok != Tok::Caret {
            return Ok(base);
        }
        self.bump()?;
        let k = match &self.tok {
            Tok::Int(k) => k.to_u32().ok_or(PolyError::BadExponent { offset: self.offset })?,
            _ => return Err(PolyError::BadExponent { offset: self.offset }),
        };
        self.bump()?;
        Ok(base.pow(k))
    }

    fn base(&mut self) -> Result<Polynomial, PolyError> {
        let n = self.vars.len();
        match std::mem::replace(&mut self.tok, Tok::End) {
            Tok::Int(num) => {
                self.bump()?;
                let mut den = BigInt::from(1);
                if self.tok == Tok::Slash {
                    self.bump()?;
                    match &self.tok {
                        Tok::Int(d) if !d.is_zero() => den = d.clone(),
                        Tok::Int(_) => return self.syntax("zero denominator"),
                        _ => return self.syntax("expected integer denominator"),
                    }
                    self.bump()?;
                }
                Ok(Polynomial::constant(Rational::new(num, den), n))
            }
            Tok::Ident(name) => {
                let offset = self.offset;
                let i = self
                    .vars
                    .index_of(&name)
                    .ok_or(PolyError::UnknownVariable { name, offset })?;
                self.bump()?;
                Ok(Polynomial::monomial(Rational::from_integer(1.into()), Exponent::var(i, n)))
            }
            Tok::LParen => {
                self.bump()?;
                let inner = self.expr()?;
                if self.tok != Tok::RParen {
                    return self.syntax("expected `)`");
                }
                self.bump()?;
                Ok(inner)
            }
            Tok::End => self.syntax("unexpected end of input"),
            other => {
                self.tok = other;
                self.syntax("expected a number, variable or `(`")
            }
        }
    }
}

/// Parses `src` into canonical form over `vars`.
pub fn parse_polynomial(src: &str, vars: &VariableTable) -> Result<Polynomial, PolyError> {
    let mut p = Parser {
        lexer: Lexer { src: src.as_bytes(), pos: 0 },
        tok: Tok::End,
        offset: 0,
        vars,
    };
    p.bump()?;
    let f = p.expr()?;
    if p.tok != Tok::End {
        return p.syntax("trailing input");
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyalg::{rat, Term};

    fn vars() -> VariableTable {
        VariableTable::split(&["x0"], &["y1", "y2", "y3"]).unwrap()
    }

    #[test]
    fn direct_construction() {
        let f = parse_polynomial("y1*y2 - y3^2", &vars()).unwrap();
        let expected = Polynomial::from_terms(
            4,
            vec![
                Term { coeff: rat(1, 1), exponent: Exponent::new(vec![0, 1, 1, 0]) },
                Term { coeff: rat(-1, 1), exponent: Exponent::new(vec![0, 0, 0, 2]) },
            ],
        );
        assert_eq!(f, expected);
    }

    #[test]
    fn zero_is_empty() {
        assert!(parse_polynomial("0", &vars()).unwrap().terms().is_empty());
        assert!(parse_polynomial("  0 * y1 ", &vars()).unwrap().is_zero());
    }

    #[test]
    fn rationals_and_signs() {
        let f = parse_polynomial("-3/2*x0^2 + (1/2)*x0*x0*2", &vars()).unwrap();
        assert_eq!(f, parse_polynomial("-1/2*x0^2", &vars()).unwrap());
        assert_eq!(
            parse_polynomial("6/4", &vars()).unwrap(),
            Polynomial::constant(rat(3, 2), 4)
        );
    }

    #[test]
    fn errors_carry_offsets() {
        assert_eq!(
            parse_polynomial("y1 + z", &vars()),
            Err(PolyError::UnknownVariable { name: "z".into(), offset: 5 })
        );
        assert_eq!(parse_polynomial("y1^-1", &vars()), Err(PolyError::BadExponent { offset: 3 }));
        assert_eq!(parse_polynomial("y1^y2", &vars()), Err(PolyError::BadExponent { offset: 3 }));
        assert!(matches!(parse_polynomial("y1 +", &vars()), Err(PolyError::Syntax { offset: 4, .. })));
        assert!(matches!(parse_polynomial("(y1", &vars()), Err(PolyError::Syntax { offset: 3, .. })));
        assert!(matches!(parse_polynomial("y1 y2", &vars()), Err(PolyError::Syntax { offset: 3, .. })));
        assert!(matches!(parse_polynomial("1/0", &vars()), Err(PolyError::Syntax { .. })));
        assert!(matches!(parse_polynomial("1.5", &vars()), Err(PolyError::Syntax { offset: 1, .. })));
        assert!(matches!(parse_polynomial("y1 # 2", &vars()), Err(PolyError::Syntax { offset: 3, .. })));
        assert!(matches!(parse_polynomial("", &vars()), Err(PolyError::Syntax { offset: 0, .. })));
    }
}
