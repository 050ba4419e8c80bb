//! Truncated multivariate Taylor arithmetic.
//!
//! A [`Jet`] holds the Taylor coefficients `∂^α f / α!` of a function at a
//! fixed expansion point, for every multi-index `|α| ≤ order`. Coefficients
//! are stored densely in graded-lex order: all degree-0 entries, then degree 1,
//! and so on. Because of that ordering the layout of a lower-order jet is a
//! prefix of the higher-order layout, so truncation is a slice and a single
//! product table per variable count serves every order.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Largest number of independent variables a jet may carry.
pub const MAX_VARS: usize = 6;
/// Largest truncation order.
pub const MAX_ORDER: usize = 4;

/// Exponent vector of a partial derivative, one entry per variable.
pub type MultiIndex = [u8; MAX_VARS];

struct Layout {
    indices: Vec<MultiIndex>,
    /// `degree_end[d]` = number of multi-indices with total degree ≤ d.
    degree_end: [usize; MAX_ORDER + 1],
    /// `(i, j, k)` with `indices[i] + indices[j] = indices[k]`, sorted by the degree of `k`.
    products: Vec<(u16, u16, u16)>,
    /// `products_end[d]` = number of product triples whose output has degree ≤ d.
    products_end: [usize; MAX_ORDER + 1],
    /// `shift[v][i]` = position of `indices[i] + e_v`, if it still fits in the table.
    shift: Vec<Vec<Option<u16>>>,
}

fn degree(alpha: &MultiIndex) -> usize {
    alpha.iter().map(|&a| a as usize).sum()
}

impl Layout {
    fn build(nvars: usize) -> Layout {
        let mut indices = Vec::new();
        let mut degree_end = [0; MAX_ORDER + 1];
        for d in 0..=MAX_ORDER {
            let mut current = [0u8; MAX_VARS];
            push_graded(nvars, 0, d, &mut current, &mut indices);
            degree_end[d] = indices.len();
        }

        let position = |alpha: &MultiIndex| indices.iter().position(|b| b == alpha);

        let mut products = Vec::new();
        let mut products_end = [0; MAX_ORDER + 1];
        for d in 0..=MAX_ORDER {
            let lo = if d == 0 { 0 } else { degree_end[d - 1] };
            for k in lo..degree_end[d] {
                for i in 0..=k {
                    let mut rest = indices[k];
                    let fits = (0..MAX_VARS).all(|v| indices[i][v] <= rest[v]);
                    if !fits {
                        continue;
                    }
                    for v in 0..MAX_VARS {
                        rest[v] -= indices[i][v];
                    }
                    let j = position(&rest).expect("complement is in the table");
                    products.push((i as u16, j as u16, k as u16));
                }
            }
            products_end[d] = products.len();
        }

        let shift = (0..nvars)
            .map(|v| {
                indices
                    .iter()
                    .map(|alpha| {
                        let mut next = *alpha;
                        next[v] += 1;
                        if degree(&next) > MAX_ORDER {
                            None
                        } else {
                            position(&next).map(|p| p as u16)
                        }
                    })
                    .collect()
            })
            .collect();

        Layout {
            indices,
            degree_end,
            products,
            products_end,
            shift,
        }
    }

    fn len(&self, order: usize) -> usize {
        self.degree_end[order]
    }

    fn position(&self, alpha: &MultiIndex) -> Option<usize> {
        let d = degree(alpha);
        if d > MAX_ORDER {
            return None;
        }
        let lo = if d == 0 { 0 } else { self.degree_end[d - 1] };
        (lo..self.degree_end[d]).find(|&i| &self.indices[i] == alpha)
    }
}

/// Multi-indices of total degree `remaining` over variables `var..nvars`, lex-descending.
fn push_graded(
    nvars: usize,
    var: usize,
    remaining: usize,
    current: &mut MultiIndex,
    out: &mut Vec<MultiIndex>,
) {
    if var + 1 >= nvars {
        if nvars == 0 {
            return;
        }
        current[var] = remaining as u8;
        out.push(*current);
        current[var] = 0;
        return;
    }
    for take in (0..=remaining).rev() {
        current[var] = take as u8;
        push_graded(nvars, var + 1, remaining - take, current, out);
    }
    current[var] = 0;
}

fn layout(nvars: usize) -> &'static Layout {
    static LAYOUTS: [OnceLock<Layout>; MAX_VARS] = [const { OnceLock::new() }; MAX_VARS];
    LAYOUTS[nvars - 1].get_or_init(|| Layout::build(nvars))
}

/// Number of coefficients of a jet in `nvars` variables truncated at `order`.
pub fn coefficient_count(nvars: usize, order: usize) -> usize {
    layout(nvars).len(order)
}

/// Elementary functions with a jet extension.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Elementary {
    Exp,
    Ln,
    Sqrt,
    Sin,
    Cos,
    Tan,
    Atan,
    Sinh,
    Cosh,
    Tanh,
    /// Locally constant sign; undefined at zero.
    Sign,
}

impl Elementary {
    pub const ALL: [Elementary; 11] = [
        Elementary::Exp,
        Elementary::Ln,
        Elementary::Sqrt,
        Elementary::Sin,
        Elementary::Cos,
        Elementary::Tan,
        Elementary::Atan,
        Elementary::Sinh,
        Elementary::Cosh,
        Elementary::Tanh,
        Elementary::Sign,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Elementary::Exp => "exp",
            Elementary::Ln => "ln",
            Elementary::Sqrt => "sqrt",
            Elementary::Sin => "sin",
            Elementary::Cos => "cos",
            Elementary::Tan => "tan",
            Elementary::Atan => "atan",
            Elementary::Sinh => "sinh",
            Elementary::Cosh => "cosh",
            Elementary::Tanh => "tanh",
            Elementary::Sign => "sign",
        }
    }

    /// Looks up a function by its DSL name. `csgn` is accepted for `sign`.
    pub fn from_name(name: &str) -> Option<Elementary> {
        if name == "csgn" {
            return Some(Elementary::Sign);
        }
        Elementary::ALL.iter().copied().find(|f| f.name() == name)
    }

    /// Plain `f64` evaluation with the same domain rules as the jet version.
    pub fn apply_f64(self, t: f64) -> Result<f64> {
        let domain = |ok: bool| {
            if ok {
                Ok(())
            } else {
                Err(Error::Domain {
                    function: self.name(),
                    value: t,
                })
            }
        };
        Ok(match self {
            Elementary::Exp => t.exp(),
            Elementary::Ln => {
                domain(t > 0.0)?;
                t.ln()
            }
            Elementary::Sqrt => {
                domain(t >= 0.0)?;
                t.sqrt()
            }
            Elementary::Sin => t.sin(),
            Elementary::Cos => t.cos(),
            Elementary::Tan => {
                domain(t.cos() != 0.0)?;
                t.tan()
            }
            Elementary::Atan => t.atan(),
            Elementary::Sinh => t.sinh(),
            Elementary::Cosh => t.cosh(),
            Elementary::Tanh => t.tanh(),
            Elementary::Sign => {
                domain(t != 0.0)?;
                t.signum()
            }
        })
    }

    /// Univariate Taylor coefficients of the function about `a0`, up to `order`.
    fn series(self, a0: f64, order: usize) -> Result<Vec<f64>> {
        let domain = |ok: bool| {
            if ok {
                Ok(())
            } else {
                Err(Error::Domain {
                    function: self.name(),
                    value: a0,
                })
            }
        };
        let n = order + 1;
        let mut c = vec![0.0; n];
        match self {
            Elementary::Exp => {
                let e = a0.exp();
                let mut fact = 1.0;
                for (k, ck) in c.iter_mut().enumerate() {
                    if k > 0 {
                        fact *= k as f64;
                    }
                    *ck = e / fact;
                }
            }
            Elementary::Ln => {
                domain(a0 > 0.0)?;
                c[0] = a0.ln();
                for (k, ck) in c.iter_mut().enumerate().skip(1) {
                    let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                    *ck = sign / (k as f64 * a0.powi(k as i32));
                }
            }
            Elementary::Sqrt => {
                domain(a0 > 0.0)?;
                return Ok(power_series(a0, 0.5, order));
            }
            Elementary::Sin | Elementary::Cos => {
                let (s, co) = a0.sin_cos();
                // derivative cycle starting at the function itself
                let cycle = if self == Elementary::Sin {
                    [s, co, -s, -co]
                } else {
                    [co, -s, -co, s]
                };
                let mut fact = 1.0;
                for (k, ck) in c.iter_mut().enumerate() {
                    if k > 0 {
                        fact *= k as f64;
                    }
                    *ck = cycle[k % 4] / fact;
                }
            }
            Elementary::Sinh | Elementary::Cosh => {
                let (s, co) = (a0.sinh(), a0.cosh());
                let cycle = if self == Elementary::Sinh {
                    [s, co]
                } else {
                    [co, s]
                };
                let mut fact = 1.0;
                for (k, ck) in c.iter_mut().enumerate() {
                    if k > 0 {
                        fact *= k as f64;
                    }
                    *ck = cycle[k % 2] / fact;
                }
            }
            Elementary::Tan => {
                domain(a0.cos() != 0.0)?;
                let s = Elementary::Sin.series(a0, order)?;
                let co = Elementary::Cos.series(a0, order)?;
                c = series_div(&s, &co);
            }
            Elementary::Tanh => {
                let s = Elementary::Sinh.series(a0, order)?;
                let co = Elementary::Cosh.series(a0, order)?;
                c = series_div(&s, &co);
            }
            Elementary::Atan => {
                // d/dt atan = 1 / (1 + t^2)
                let mut q = vec![0.0; n];
                q[0] = 1.0 + a0 * a0;
                if n > 1 {
                    q[1] = 2.0 * a0;
                }
                if n > 2 {
                    q[2] = 1.0;
                }
                let mut one = vec![0.0; n];
                one[0] = 1.0;
                let r = series_div(&one, &q);
                c[0] = a0.atan();
                for k in 1..n {
                    c[k] = r[k - 1] / k as f64;
                }
            }
            Elementary::Sign => {
                domain(a0 != 0.0)?;
                c[0] = a0.signum();
            }
        }
        Ok(c)
    }
}

impl fmt::Display for Elementary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn power_series(a0: f64, p: f64, order: usize) -> Vec<f64> {
    // binom(p, k) a0^(p-k)
    let mut c = Vec::with_capacity(order + 1);
    let mut binom = 1.0;
    for k in 0..=order {
        if k > 0 {
            binom *= (p - (k as f64 - 1.0)) / k as f64;
        }
        c.push(binom * a0.powf(p - k as f64));
    }
    c
}

fn series_div(num: &[f64], den: &[f64]) -> Vec<f64> {
    let n = num.len();
    let mut q = vec![0.0; n];
    for k in 0..n {
        let mut acc = num[k];
        for j in 0..k {
            acc -= q[j] * den[k - j];
        }
        q[k] = acc / den[0];
    }
    q
}

/// A truncated multivariate Taylor expansion.
#[derive(Clone, PartialEq)]
pub struct Jet {
    nvars: u8,
    order: u8,
    coeffs: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet")
            .field("nvars", &self.nvars)
            .field("order", &self.order)
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

impl Jet {
    fn check_shape(nvars: usize, order: usize) {
        assert!(
            (1..=MAX_VARS).contains(&nvars),
            "jets support 1..={MAX_VARS} variables, got {nvars}"
        );
        assert!(order <= MAX_ORDER, "jets support order ≤ {MAX_ORDER}, got {order}");
    }

    pub fn constant(value: f64, nvars: usize, order: usize) -> Jet {
        Jet::check_shape(nvars, order);
        let mut coeffs = vec![0.0; coefficient_count(nvars, order)];
        coeffs[0] = value;
        Jet {
            nvars: nvars as u8,
            order: order as u8,
            coeffs,
        }
    }

    /// The coordinate function `x_{var_index}` expanded about `point_value`.
    pub fn variable(point_value: f64, var_index: usize, nvars: usize, order: usize) -> Result<Jet> {
        if var_index >= nvars {
            return Err(Error::VariableIndex {
                index: var_index,
                nvars,
            });
        }
        let mut jet = Jet::constant(point_value, nvars, order);
        if order >= 1 {
            let mut alpha = [0u8; MAX_VARS];
            alpha[var_index] = 1;
            let pos = layout(nvars).position(&alpha).expect("first-order index");
            jet.coeffs[pos] = 1.0;
        }
        Ok(jet)
    }

    /// Builds a jet from raw Taylor coefficients in graded-lex order.
    pub fn from_coeffs(nvars: usize, order: usize, coeffs: Vec<f64>) -> Jet {
        Jet::check_shape(nvars, order);
        assert_eq!(coeffs.len(), coefficient_count(nvars, order));
        Jet {
            nvars: nvars as u8,
            order: order as u8,
            coeffs,
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars as usize
    }

    pub fn order(&self) -> usize {
        self.order as usize
    }

    /// Taylor coefficients in graded-lex order.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Multi-indices matching [`Jet::coeffs`] position by position.
    pub fn multi_indices(&self) -> &'static [MultiIndex] {
        &layout(self.nvars()).indices[..self.coeffs.len()]
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs[1..].iter().all(|&c| c == 0.0)
    }

    /// The Taylor coefficient for `alpha`, i.e. `∂^α f / α!`.
    pub fn coeff(&self, alpha: &[u8]) -> Result<f64> {
        let idx = self.index_of(alpha)?;
        Ok(self.coeffs[idx])
    }

    fn index_of(&self, alpha: &[u8]) -> Result<usize> {
        let mut full = [0u8; MAX_VARS];
        for (v, &a) in alpha.iter().enumerate() {
            if a != 0 && v >= self.nvars() {
                return Err(Error::VariableIndex {
                    index: v,
                    nvars: self.nvars(),
                });
            }
            if v < MAX_VARS {
                full[v] = a;
            }
        }
        let requested = degree(&full);
        if requested > self.order() {
            return Err(Error::OrderExceeded {
                requested,
                order: self.order(),
            });
        }
        Ok(layout(self.nvars())
            .position(&full)
            .expect("every index up to the order is stored"))
    }

    /// The partial derivative `∂^α f` at the expansion point.
    pub fn extract(&self, alpha: &[u8]) -> Result<f64> {
        let c = self.coeff(alpha)?;
        let factorial: f64 = alpha
            .iter()
            .map(|&a| (1..=a as u32).product::<u32>() as f64)
            .product();
        Ok(c * factorial)
    }

    /// The first partial along `var`, as a jet one order lower.
    pub fn derivative(&self, var: usize) -> Jet {
        assert!(var < self.nvars(), "derivative variable out of range");
        assert!(self.order() >= 1, "cannot differentiate an order-0 jet");
        let lay = layout(self.nvars());
        let out_order = self.order() - 1;
        let n = lay.len(out_order);
        let coeffs = (0..n)
            .map(|i| {
                let next = lay.shift[var][i].expect("shifted index fits") as usize;
                (lay.indices[i][var] as f64 + 1.0) * self.coeffs[next]
            })
            .collect();
        Jet {
            nvars: self.nvars,
            order: out_order as u8,
            coeffs,
        }
    }

    /// Drops every coefficient above `order`.
    pub fn truncate(&self, order: usize) -> Jet {
        assert!(order <= self.order());
        Jet {
            nvars: self.nvars,
            order: order as u8,
            coeffs: self.coeffs[..coefficient_count(self.nvars(), order)].to_vec(),
        }
    }

    /// Re-expresses the jet in `nvars` variables (≥ current); the new variables are absent.
    pub fn embed(&self, nvars: usize) -> Jet {
        assert!(nvars >= self.nvars());
        if nvars == self.nvars() {
            return self.clone();
        }
        let src = layout(self.nvars());
        let dst = layout(nvars);
        let mut out = Jet::constant(0.0, nvars, self.order());
        for (i, alpha) in src.indices[..self.coeffs.len()].iter().enumerate() {
            let pos = dst.position(alpha).expect("embedded index exists");
            out.coeffs[pos] = self.coeffs[i];
        }
        out
    }

    fn assert_same_shape(&self, other: &Jet) {
        assert!(
            self.nvars == other.nvars && self.order == other.order,
            "jet shape mismatch: ({}, {}) vs ({}, {})",
            self.nvars,
            self.order,
            other.nvars,
            other.order
        );
    }

    /// Product truncated at `order` (which may be below the operands' order).
    pub fn mul_truncated(&self, other: &Jet, order: usize) -> Jet {
        assert_eq!(self.nvars, other.nvars, "jet variable count mismatch");
        assert!(order <= self.order() && order <= other.order());
        let lay = layout(self.nvars());
        let mut coeffs = vec![0.0; lay.len(order)];
        for &(i, j, k) in &lay.products[..lay.products_end[order]] {
            coeffs[k as usize] += self.coeffs[i as usize] * other.coeffs[j as usize];
        }
        Jet {
            nvars: self.nvars,
            order: order as u8,
            coeffs,
        }
    }

    pub fn scale(&self, s: f64) -> Jet {
        Jet {
            nvars: self.nvars,
            order: self.order,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn add_scalar(&self, s: f64) -> Jet {
        let mut out = self.clone();
        out.coeffs[0] += s;
        out
    }

    /// `self += factor * other`, in place.
    pub fn add_scaled(&mut self, other: &Jet, factor: f64) {
        self.assert_same_shape(other);
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += factor * b;
        }
    }

    /// Composes a univariate series `Σ c_k t^k` (about the constant term) with this jet.
    fn compose(&self, series: &[f64]) -> Jet {
        let mut h = self.clone();
        h.coeffs[0] = 0.0;
        let mut acc = Jet::constant(series[self.order()], self.nvars(), self.order());
        for k in (0..self.order()).rev() {
            acc = &acc * &h;
            acc.coeffs[0] += series[k];
        }
        acc
    }

    /// Applies an elementary function through its Taylor series.
    pub fn apply(&self, f: Elementary) -> Result<Jet> {
        if self.is_constant() {
            let v = f.apply_f64(self.value())?;
            return Ok(Jet::constant(v, self.nvars(), self.order()));
        }
        let series = f.series(self.value(), self.order())?;
        Ok(self.compose(&series))
    }

    pub fn recip(&self) -> Result<Jet> {
        let a0 = self.value();
        if a0 == 0.0 {
            return Err(Error::DivisionByZero);
        }
        let series: Vec<f64> = (0..=self.order())
            .map(|k| {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                sign / a0.powi(k as i32 + 1)
            })
            .collect();
        Ok(self.compose(&series))
    }

    pub fn checked_div(&self, other: &Jet) -> Result<Jet> {
        self.assert_same_shape(other);
        Ok(self * &other.recip()?)
    }

    /// Integer power by repeated squaring; negative exponents go through the reciprocal.
    pub fn powi(&self, n: i64) -> Result<Jet> {
        let mut base = if n < 0 { self.recip()? } else { self.clone() };
        let mut e = n.unsigned_abs();
        let mut acc = Jet::constant(1.0, self.nvars(), self.order());
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        Ok(acc)
    }

    /// `self^exponent`: integral constant exponents use [`Jet::powi`], anything else
    /// `exp(exponent · ln self)` and therefore needs a positive base.
    pub fn pow(&self, exponent: &Jet) -> Result<Jet> {
        self.assert_same_shape(exponent);
        let e = exponent.value();
        if exponent.is_constant() && e.fract() == 0.0 && e.abs() < 1e9 {
            return self.powi(e as i64);
        }
        if self.is_constant() && exponent.is_constant() {
            let v = self.value().powf(e);
            if !v.is_finite() {
                return Err(Error::Domain {
                    function: "pow",
                    value: self.value(),
                });
            }
            return Ok(Jet::constant(v, self.nvars(), self.order()));
        }
        if self.value() <= 0.0 {
            return Err(Error::Domain {
                function: "pow",
                value: self.value(),
            });
        }
        if exponent.is_constant() {
            let series = power_series(self.value(), e, self.order());
            return Ok(self.compose(&series));
        }
        (exponent * &self.apply(Elementary::Ln)?).apply(Elementary::Exp)
    }
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        self.assert_same_shape(rhs);
        Jet {
            nvars: self.nvars,
            order: self.order,
            coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        self.assert_same_shape(rhs);
        Jet {
            nvars: self.nvars,
            order: self.order,
            coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        self.assert_same_shape(rhs);
        self.mul_truncated(rhs, self.order())
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

macro_rules! forward_owned {
    ($($tr:ident $method:ident),*) => {$(
        impl $tr for Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                (&self).$method(&rhs)
            }
        }
        impl $tr<&Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                (&self).$method(rhs)
            }
        }
    )*};
}
forward_owned!(Add add, Sub sub, Mul mul);

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        (&self).neg()
    }
}
