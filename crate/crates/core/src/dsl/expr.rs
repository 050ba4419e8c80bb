use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::jet::{Elementary, Jet};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

/// Expression tree over named coordinates and parameters.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(String),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Elementary, Box<Expr>),
}

/// Name bindings for evaluation: coordinate jets first, then scalar parameters.
#[derive(Clone, Copy)]
pub struct Env<'a> {
    pub coords: &'a [String],
    pub jets: &'a [Jet],
    pub params: &'a BTreeMap<String, f64>,
}

impl<'a> Env<'a> {
    pub fn new(coords: &'a [String], jets: &'a [Jet], params: &'a BTreeMap<String, f64>) -> Self {
        assert_eq!(coords.len(), jets.len());
        assert!(!jets.is_empty(), "evaluation needs at least one coordinate jet");
        Env {
            coords,
            jets,
            params,
        }
    }

    fn lookup(&self, name: &str) -> Result<Jet> {
        if let Some(i) = self.coords.iter().position(|c| c == name) {
            return Ok(self.jets[i].clone());
        }
        if let Some(&v) = self.params.get(name) {
            let j = &self.jets[0];
            return Ok(Jet::constant(v, j.nvars(), j.order()));
        }
        Err(Error::UnboundIdentifier(name.to_string()))
    }
}

impl Expr {
    pub fn num(v: f64) -> Expr {
        Expr::Num(v)
    }

    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_string())
    }

    pub fn bin(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::Bin(op, Box::new(a), Box::new(b))
    }

    pub fn call(f: Elementary, a: Expr) -> Expr {
        Expr::Call(f, Box::new(a))
    }

    /// Evaluates the expression as a jet; all partials are exact to the jets' order.
    pub fn eval(&self, env: &Env) -> Result<Jet> {
        match self {
            Expr::Num(v) => {
                let j = &env.jets[0];
                Ok(Jet::constant(*v, j.nvars(), j.order()))
            }
            Expr::Var(name) => env.lookup(name),
            Expr::Neg(a) => Ok(-a.eval(env)?),
            Expr::Bin(op, a, b) => {
                let a = a.eval(env)?;
                let b = b.eval(env)?;
                match op {
                    BinOp::Add => Ok(a + b),
                    BinOp::Sub => Ok(a - b),
                    BinOp::Mul => Ok(a * b),
                    BinOp::Div => a.checked_div(&b),
                    BinOp::Pow => a.pow(&b),
                }
            }
            Expr::Call(f, a) => a.eval(env)?.apply(*f),
        }
    }

    /// Plain floating-point evaluation with the same domain rules as [`Expr::eval`].
    pub fn eval_f64(&self, coords: &[String], point: &[f64], params: &BTreeMap<String, f64>) -> Result<f64> {
        match self {
            Expr::Num(v) => Ok(*v),
            Expr::Var(name) => {
                if let Some(i) = coords.iter().position(|c| c == name) {
                    Ok(point[i])
                } else {
                    params
                        .get(name)
                        .copied()
                        .ok_or_else(|| Error::UnboundIdentifier(name.clone()))
                }
            }
            Expr::Neg(a) => Ok(-a.eval_f64(coords, point, params)?),
            Expr::Bin(op, a, b) => {
                let a = a.eval_f64(coords, point, params)?;
                let b = b.eval_f64(coords, point, params)?;
                match op {
                    BinOp::Add => Ok(a + b),
                    BinOp::Sub => Ok(a - b),
                    BinOp::Mul => Ok(a * b),
                    BinOp::Div => {
                        if b == 0.0 {
                            Err(Error::DivisionByZero)
                        } else {
                            Ok(a / b)
                        }
                    }
                    BinOp::Pow => {
                        if b.fract() == 0.0 && b.abs() < 1e9 {
                            if a == 0.0 && b < 0.0 {
                                return Err(Error::DivisionByZero);
                            }
                            Ok(a.powi(b as i32))
                        } else if a <= 0.0 {
                            Err(Error::Domain {
                                function: "pow",
                                value: a,
                            })
                        } else {
                            Ok(a.powf(b))
                        }
                    }
                }
            }
            Expr::Call(f, a) => f.apply_f64(a.eval_f64(coords, point, params)?),
        }
    }

    /// Every identifier the expression mentions.
    pub fn identifiers(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_identifiers(&mut out);
        out
    }

    fn collect_identifiers(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Num(_) => {}
            Expr::Var(n) => {
                out.insert(n.clone());
            }
            Expr::Neg(a) | Expr::Call(_, a) => a.collect_identifiers(out),
            Expr::Bin(_, a, b) => {
                a.collect_identifiers(out);
                b.collect_identifiers(out);
            }
        }
    }

    /// Replaces identifiers found in `defs` by their definitions.
    pub fn substitute(&self, defs: &BTreeMap<String, Expr>) -> Expr {
        match self {
            Expr::Num(_) => self.clone(),
            Expr::Var(n) => defs.get(n).cloned().unwrap_or_else(|| self.clone()),
            Expr::Neg(a) => Expr::Neg(Box::new(a.substitute(defs))),
            Expr::Call(f, a) => Expr::Call(*f, Box::new(a.substitute(defs))),
            Expr::Bin(op, a, b) => Expr::bin(*op, a.substitute(defs), b.substitute(defs)),
        }
    }

    /// Renames identifiers according to `map`.
    pub fn rename(&self, map: &BTreeMap<String, String>) -> Expr {
        let defs = map
            .iter()
            .map(|(k, v)| (k.clone(), Expr::Var(v.clone())))
            .collect();
        self.substitute(&defs)
    }
}

impl fmt::Display for Expr {
    /// Fully parenthesized; numbers keep every bit so that re-parsing is exact.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => {
                if v.is_sign_negative() {
                    write!(f, "(-{:?})", -v)
                } else {
                    write!(f, "{v:?}")
                }
            }
            Expr::Var(n) => f.write_str(n),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Bin(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}
