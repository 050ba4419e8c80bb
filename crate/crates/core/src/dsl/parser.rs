//! Recursive-descent parser for the expression language.
//!
//! ```text
//! expr     := term (('+' | '-') term)*
//! term     := unary (('*' | '/') unary)*
//! unary    := ('-' | '+') unary | power
//! power    := atom ('^' exponent)?
//! exponent := ('-' | '+') exponent | power
//! atom     := NUMBER | IDENT | IDENT '(' expr ')' | '(' expr ')'
//! ```
//!
//! Unary minus binds looser than `^`, so `-x^2` is `-(x^2)`, and `^` is
//! right-associative with an optionally signed exponent (`z^-2`).

use super::expr::{BinOp, Expr};
use crate::error::{Error, Result};
use crate::jet::Elementary;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    End,
}

struct Lexer<'a> {
    src: &'a str,
    toks: Vec<(Tok, usize)>,
}

impl<'a> Lexer<'a> {
    fn run(src: &'a str) -> Result<Vec<(Tok, usize)>> {
        let mut lx = Lexer {
            src,
            toks: Vec::new(),
        };
        let bytes = src.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            let c = bytes[i];
            if c.is_ascii_whitespace() {
                i += 1;
            } else if c.is_ascii_digit() || (c == b'.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit)) {
                i = lx.number(i)?;
            } else if c.is_ascii_alphabetic() || c == b'_' {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                lx.toks.push((Tok::Ident(src[start..i].to_string()), start));
            } else if b"+-*/^()".contains(&c) {
                lx.toks.push((Tok::Op(c as char), i));
                i += 1;
            } else {
                let ch = src[i..].chars().next().unwrap_or('?');
                return Err(Error::Syntax {
                    offset: i,
                    message: format!("unexpected character `{ch}`"),
                });
            }
        }
        lx.toks.push((Tok::End, src.len()));
        Ok(lx.toks)
    }

    fn number(&mut self, start: usize) -> Result<usize> {
        let bytes = self.src.as_bytes();
        let digits = |mut i: usize| {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            i
        };
        let mut i = digits(start);
        if i < bytes.len() && bytes[i] == b'.' {
            i = digits(i + 1);
        }
        if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
            let mut j = i + 1;
            if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                j += 1;
            }
            if j < bytes.len() && bytes[j].is_ascii_digit() {
                i = digits(j);
            }
        }
        let text = &self.src[start..i];
        let v: f64 = text.parse().map_err(|_| Error::Syntax {
            offset: start,
            message: format!("malformed number `{text}`"),
        })?;
        self.toks.push((Tok::Num(v), start));
        Ok(i)
    }
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, op: char) -> bool {
        if *self.peek() == Tok::Op(op) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn unexpected(&self) -> Error {
        let message = match self.peek() {
            Tok::End => "unexpected end of input".to_string(),
            Tok::Num(v) => format!("unexpected number {v}"),
            Tok::Ident(n) => format!("unexpected identifier `{n}`"),
            Tok::Op(c) => format!("unexpected `{c}`"),
        };
        Error::Syntax {
            offset: self.offset(),
            message,
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat('+') {
                BinOp::Add
            } else if self.eat('-') {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            lhs = Expr::bin(op, lhs, self.term()?);
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat('*') {
                BinOp::Mul
            } else if self.eat('/') {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            lhs = Expr::bin(op, lhs, self.unary()?);
        }
    }

    fn signed(&mut self, inner: fn(&mut Parser) -> Result<Expr>) -> Result<Expr> {
        if self.eat('-') {
            Ok(negate(self.signed(inner)?))
        } else if self.eat('+') {
            self.signed(inner)
        } else {
            inner(self)
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        self.signed(Parser::power)
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.eat('^') {
            let exponent = self.signed(Parser::power)?;
            Ok(Expr::bin(BinOp::Pow, base, exponent))
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(Expr::Num(v))
            }
            Tok::Ident(name) => {
                let (_, at) = self.bump();
                if *self.peek() != Tok::Op('(') {
                    return Ok(Expr::Var(name));
                }
                let f = Elementary::from_name(&name).ok_or(Error::UnknownFunction {
                    name: name.clone(),
                    offset: at,
                })?;
                self.bump();
                let arg = self.expr()?;
                if !self.eat(')') {
                    return Err(self.unexpected());
                }
                Ok(Expr::call(f, arg))
            }
            Tok::Op('(') => {
                self.bump();
                let e = self.expr()?;
                if !self.eat(')') {
                    return Err(self.unexpected());
                }
                Ok(e)
            }
            _ => Err(self.unexpected()),
        }
    }
}

fn negate(e: Expr) -> Expr {
    match e {
        Expr::Num(v) => Expr::Num(-v),
        other => Expr::Neg(Box::new(other)),
    }
}

/// Parses one expression; the whole input must be consumed.
pub fn parse_expr(text: &str) -> Result<Expr> {
    let mut p = Parser {
        toks: Lexer::run(text)?,
        pos: 0,
    };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(p.unexpected());
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn num(v: f64) -> Expr {
        Expr::Num(v)
    }

    #[test]
    fn inverse_square() {
        assert_eq!(
            parse_expr("1/z^2").unwrap(),
            Expr::bin(
                BinOp::Div,
                num(1.0),
                Expr::bin(BinOp::Pow, Expr::var("z"), num(2.0))
            )
        );
    }

    #[test]
    fn one_soliton_potential() {
        let e = parse_expr("-4*cosh(x-4*z)^(-2)").unwrap();
        let arg = Expr::bin(
            BinOp::Sub,
            Expr::var("x"),
            Expr::bin(BinOp::Mul, num(4.0), Expr::var("z")),
        );
        let expected = Expr::bin(
            BinOp::Mul,
            num(-4.0),
            Expr::bin(BinOp::Pow, Expr::call(Elementary::Cosh, arg), num(-2.0)),
        );
        assert_eq!(e, expected);
    }

    #[test]
    fn dangling_operator_reports_offset() {
        match parse_expr("x +") {
            Err(Error::Syntax { offset, .. }) => assert_eq!(offset, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_function_rejected() {
        assert!(matches!(
            parse_expr("2*arccos(x)"),
            Err(Error::UnknownFunction { offset: 2, .. })
        ));
    }

    #[test]
    fn precedence_and_associativity() {
        let neg_sq = parse_expr("-x^2").unwrap();
        assert_eq!(
            neg_sq,
            Expr::Neg(Box::new(Expr::bin(BinOp::Pow, Expr::var("x"), num(2.0))))
        );
        let tower = parse_expr("2^3^2").unwrap();
        assert_eq!(
            tower,
            Expr::bin(BinOp::Pow, num(2.0), Expr::bin(BinOp::Pow, num(3.0), num(2.0)))
        );
        let left = parse_expr("a-b-c").unwrap();
        assert_eq!(
            left,
            Expr::bin(
                BinOp::Sub,
                Expr::bin(BinOp::Sub, Expr::var("a"), Expr::var("b")),
                Expr::var("c")
            )
        );
        assert_eq!(parse_expr("6/2*3").unwrap().to_string(), "((6.0 / 2.0) * 3.0)");
    }

    #[test]
    fn numbers_and_aliases() {
        assert_eq!(parse_expr("1.5e-3").unwrap(), num(1.5e-3));
        assert_eq!(parse_expr(".25").unwrap(), num(0.25));
        assert_eq!(
            parse_expr("csgn(y)").unwrap(),
            Expr::call(Elementary::Sign, Expr::var("y"))
        );
    }

    #[test]
    fn trailing_garbage_and_bad_characters() {
        assert!(matches!(parse_expr("x y"), Err(Error::Syntax { offset: 2, .. })));
        assert!(matches!(parse_expr("x # 1"), Err(Error::Syntax { offset: 2, .. })));
        assert!(matches!(parse_expr("(x"), Err(Error::Syntax { offset: 2, .. })));
        assert!(matches!(parse_expr(""), Err(Error::Syntax { offset: 0, .. })));
    }
}
