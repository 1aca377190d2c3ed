//! Hylleraas basis enumeration and exact algebra on `s^a t^b u^c e^{-ds}`
//! expressions.
//!
//! Coordinates are s = r1 + r2, t = r2 - r1, u = r12, all in scaled units
//! (k = 1). A basis function is `s^l t^{2m} u^n e^{-s}`.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BasisTerm {
    pub l: u32,
    /// Half the power of t.
    pub m: u32,
    pub n: u32,
}

impl BasisTerm {
    pub const fn new(l: u32, m: u32, n: u32) -> Self {
        BasisTerm { l, m, n }
    }

    /// Total polynomial degree l + 2m + n.
    pub fn grade(&self) -> u32 {
        self.l + 2 * self.m + self.n
    }

    pub fn expression(&self) -> SteuExpression {
        SteuExpression::monomial(self.l as i32, 2 * self.m as i32, self.n as i32, 1, BigRational::one())
    }
}

impl fmt::Display for BasisTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.l, self.m, self.n)
    }
}

/// `s^l t^{2m} u^n e^{-s}`.
pub fn basis_expression(term: BasisTerm) -> SteuExpression {
    term.expression()
}

/// Tie-break inside a grade l + 2m + n.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BasisOrdering {
    /// Ties ordered by (l, m, n) ascending: 1, u, s, u^2, t^2, s u, s^2, ...
    #[default]
    Lex,
    /// Ties ordered by (n, 2m, l) ascending: 1, s, u, s^2, t^2, s u, u^2, ...
    UFirst,
}

impl fmt::Display for BasisOrdering {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BasisOrdering::Lex => "lex",
            BasisOrdering::UFirst => "u-first",
        })
    }
}

impl FromStr for BasisOrdering {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "lex" => Ok(BasisOrdering::Lex),
            "u-first" => Ok(BasisOrdering::UFirst),
            other => Err(Error::Usage(format!("unknown basis ordering `{other}` (lex|u-first)"))),
        }
    }
}

impl BasisOrdering {
    fn key(self, t: &BasisTerm) -> (u32, u32, u32, u32) {
        match self {
            BasisOrdering::Lex => (t.grade(), t.l, t.m, t.n),
            BasisOrdering::UFirst => (t.grade(), t.n, t.m, t.l),
        }
    }
}

/// First `n` terms of the graded basis under the default ordering.
pub fn enumerate_basis(n: usize) -> Result<Vec<BasisTerm>> {
    enumerate_basis_with(n, BasisOrdering::default())
}

pub fn enumerate_basis_with(n: usize, ordering: BasisOrdering) -> Result<Vec<BasisTerm>> {
    if n == 0 {
        return Err(Error::validation("basis", "N must be >= 1"));
    }
    let mut terms = Vec::with_capacity(n);
    let mut grade = 0u32;
    while terms.len() < n {
        let mut shell = Vec::new();
        for l in 0..=grade {
            for m in 0..=(grade - l) / 2 {
                shell.push(BasisTerm::new(l, m, grade - l - 2 * m));
            }
        }
        shell.sort_by_key(|t| ordering.key(t));
        terms.extend(shell);
        grade += 1;
    }
    terms.truncate(n);
    Ok(terms)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    S,
    T,
    U,
}

/// Sum of `coef * s^a t^b u^c` times an implicit `e^{-d s}`, with d the
/// exponential degree. Exponents may be negative.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SteuExpression {
    terms: BTreeMap<(i32, i32, i32), BigRational>,
    exp_degree: u32,
}

impl SteuExpression {
    pub fn zero(exp_degree: u32) -> Self {
        SteuExpression { terms: BTreeMap::new(), exp_degree }
    }

    pub fn monomial(a: i32, b: i32, c: i32, exp_degree: u32, coef: BigRational) -> Self {
        let mut e = SteuExpression::zero(exp_degree);
        e.add_term((a, b, c), coef);
        e
    }

    /// A polynomial (no exponential) from integer-coefficient terms.
    pub fn poly(terms: &[((i32, i32, i32), i64)]) -> Self {
        let mut e = SteuExpression::zero(0);
        for &(key, c) in terms {
            e.add_term(key, BigRational::from_integer(BigInt::from(c)));
        }
        e
    }

    pub fn exp_degree(&self) -> u32 {
        self.exp_degree
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(i32, i32, i32), &BigRational)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, a: i32, b: i32, c: i32) -> BigRational {
        self.terms.get(&(a, b, c)).cloned().unwrap_or_else(BigRational::zero)
    }

    fn add_term(&mut self, key: (i32, i32, i32), coef: BigRational) {
        if coef.is_zero() {
            return;
        }
        match self.terms.get_mut(&key) {
            Some(v) => {
                *v += coef;
                if v.is_zero() {
                    self.terms.remove(&key);
                }
            }
            None => {
                self.terms.insert(key, coef);
            }
        }
    }

    fn join_degree(&self, other: &Self) -> u32 {
        if self.is_zero() {
            other.exp_degree
        } else if other.is_zero() {
            self.exp_degree
        } else {
            assert_eq!(
                self.exp_degree, other.exp_degree,
                "adding expressions with different exponential factors"
            );
            self.exp_degree
        }
    }

    pub fn scale(&self, k: &BigRational) -> Self {
        let mut out = SteuExpression::zero(self.exp_degree);
        if k.is_zero() {
            return out;
        }
        for (key, v) in &self.terms {
            out.terms.insert(*key, v * k);
        }
        out
    }

    pub fn scale_int(&self, k: i64) -> Self {
        self.scale(&BigRational::from_integer(BigInt::from(k)))
    }

    /// Exact partial derivative; for s this includes the `-d` from `e^{-ds}`.
    pub fn differentiate(&self, var: Var) -> Self {
        let mut out = SteuExpression::zero(self.exp_degree);
        for (&(a, b, c), v) in &self.terms {
            let (p, key) = match var {
                Var::S => (a, (a - 1, b, c)),
                Var::T => (b, (a, b - 1, c)),
                Var::U => (c, (a, b, c - 1)),
            };
            if p != 0 {
                out.add_term(key, v * BigInt::from(p));
            }
            if var == Var::S && self.exp_degree != 0 {
                out.add_term((a, b, c), -(v * BigInt::from(self.exp_degree)));
            }
        }
        out
    }

    /// Exact product; exponential degrees add.
    pub fn multiply(&self, other: &Self) -> Self {
        let mut out = SteuExpression::zero(self.exp_degree + other.exp_degree);
        for (&(a, b, c), v) in &self.terms {
            for (&(d, e, f), w) in &other.terms {
                out.add_term((a + d, b + e, c + f), v * w);
            }
        }
        out
    }

    /// Same polynomial part with a different exponential tag.
    pub fn with_exp_degree(mut self, d: u32) -> Self {
        self.exp_degree = d;
        self
    }

    /// Drops terms odd in t, which vanish over the symmetric t range.
    pub fn even_in_t(&self) -> Self {
        let mut out = SteuExpression::zero(self.exp_degree);
        for (key, v) in &self.terms {
            if key.1.rem_euclid(2) == 0 {
                out.terms.insert(*key, v.clone());
            }
        }
        out
    }

    /// Polynomial part at (s, t, u), without the exponential.
    pub fn eval_poly_f64(&self, s: f64, t: f64, u: f64) -> f64 {
        self.terms
            .iter()
            .map(|(&(a, b, c), v)| v.to_f64().unwrap_or(f64::NAN) * s.powi(a) * t.powi(b) * u.powi(c))
            .sum()
    }

    pub fn eval_f64(&self, s: f64, t: f64, u: f64) -> f64 {
        self.eval_poly_f64(s, t, u) * (-(self.exp_degree as f64) * s).exp()
    }

    pub fn eval_poly_real(&self, s: &Real, t: &Real, u: &Real) -> Real {
        let bits = s.precision();
        let mut acc = Real::zero(bits);
        for (&(a, b, c), v) in &self.terms {
            let term = Real::from_ratio(v, bits) * s.powi(a) * t.powi(b) * u.powi(c);
            acc += term;
        }
        acc
    }

    pub fn eval_real(&self, s: &Real, t: &Real, u: &Real) -> Real {
        let e = (-(s * Real::from_u64(self.exp_degree as u64, s.precision()))).exp();
        self.eval_poly_real(s, t, u) * e
    }

    /// Largest a + b + c over stored terms.
    pub fn max_degree(&self) -> i32 {
        self.terms.keys().map(|&(a, b, c)| a + b + c).max().unwrap_or(0)
    }
}

impl fmt::Display for SteuExpression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        let mut first = true;
        for (&(a, b, c), v) in &self.terms {
            let neg = v.is_negative();
            let mag = v.abs();
            if first {
                if neg {
                    f.write_str("-")?;
                }
            } else {
                f.write_str(if neg { " - " } else { " + " })?;
            }
            first = false;
            let mut factors: Vec<String> = Vec::new();
            if !mag.is_one() || (a, b, c) == (0, 0, 0) {
                factors.push(mag.to_string());
            }
            for (name, p) in [("s", a), ("t", b), ("u", c)] {
                match p {
                    0 => {}
                    1 => factors.push(name.to_string()),
                    p => factors.push(format!("{name}^{p}")),
                }
            }
            f.write_str(&factors.join("*"))?;
        }
        match self.exp_degree {
            0 => Ok(()),
            1 => f.write_str(" [e^-s]"),
            d => write!(f, " [e^-{d}s]"),
        }
    }
}

impl Add for &SteuExpression {
    type Output = SteuExpression;
    fn add(self, rhs: &SteuExpression) -> SteuExpression {
        let mut out = self.clone();
        out.exp_degree = self.join_degree(rhs);
        for (key, v) in &rhs.terms {
            out.add_term(*key, v.clone());
        }
        out
    }
}

impl Sub for &SteuExpression {
    type Output = SteuExpression;
    fn sub(self, rhs: &SteuExpression) -> SteuExpression {
        let mut out = self.clone();
        out.exp_degree = self.join_degree(rhs);
        for (key, v) in &rhs.terms {
            out.add_term(*key, -v.clone());
        }
        out
    }
}

impl Mul for &SteuExpression {
    type Output = SteuExpression;
    fn mul(self, rhs: &SteuExpression) -> SteuExpression {
        self.multiply(rhs)
    }
}

impl Neg for &SteuExpression {
    type Output = SteuExpression;
    fn neg(self) -> SteuExpression {
        self.scale_int(-1)
    }
}

macro_rules! owned_ops {
    ($($tr:ident $m:ident),*) => {$(
        impl $tr for SteuExpression {
            type Output = SteuExpression;
            fn $m(self, rhs: SteuExpression) -> SteuExpression { (&self).$m(&rhs) }
        }
        impl $tr<&SteuExpression> for SteuExpression {
            type Output = SteuExpression;
            fn $m(self, rhs: &SteuExpression) -> SteuExpression { (&self).$m(rhs) }
        }
    )*};
}
owned_ops!(Add add, Sub sub, Mul mul);

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(n: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(n))
    }

    #[test]
    fn small_bases() {
        assert_eq!(enumerate_basis(1).unwrap(), vec![BasisTerm::new(0, 0, 0)]);
        assert_eq!(
            enumerate_basis(3).unwrap(),
            vec![BasisTerm::new(0, 0, 0), BasisTerm::new(0, 0, 1), BasisTerm::new(1, 0, 0)]
        );
        assert!(enumerate_basis(0).is_err());
    }

    #[test]
    fn grade_counts() {
        let b = enumerate_basis(50).unwrap();
        assert!(b.iter().all(|t| t.grade() <= 6));
        let mut counts = [0usize; 7];
        for t in &b {
            counts[t.grade() as usize] += 1;
        }
        assert_eq!(counts, [1, 2, 4, 6, 9, 12, 16]);
        let alt = enumerate_basis_with(50, BasisOrdering::UFirst).unwrap();
        let mut a: Vec<_> = alt.clone();
        let mut c: Vec<_> = b.clone();
        a.sort();
        c.sort();
        assert_eq!(a, c);
        assert_eq!(alt[1], BasisTerm::new(1, 0, 0));
    }

    #[test]
    fn expressions() {
        assert_eq!(basis_expression(BasisTerm::new(0, 0, 0)).to_string(), "1 [e^-s]");
        assert_eq!(basis_expression(BasisTerm::new(1, 1, 0)).to_string(), "s*t^2 [e^-s]");
        assert_eq!(basis_expression(BasisTerm::new(0, 0, 2)).to_string(), "u^2 [e^-s]");
    }

    #[test]
    fn derivatives() {
        let s = BasisTerm::new(1, 0, 0).expression();
        assert_eq!(s.differentiate(Var::S).to_string(), "1 - s [e^-s]");
        let t2 = BasisTerm::new(0, 1, 0).expression();
        assert_eq!(t2.differentiate(Var::T), SteuExpression::monomial(0, 1, 0, 1, r(2)));
        assert!(BasisTerm::new(0, 0, 0).expression().differentiate(Var::U).is_zero());
    }

    #[test]
    fn products() {
        let s = BasisTerm::new(1, 0, 0).expression();
        let u = BasisTerm::new(0, 0, 1).expression();
        assert_eq!(s.multiply(&u), SteuExpression::monomial(1, 0, 1, 2, r(1)));
        assert!(s.multiply(&SteuExpression::zero(1)).is_zero());
        let d = s.differentiate(Var::S);
        let sq = d.multiply(&d);
        assert_eq!(sq.exp_degree(), 2);
        assert_eq!(sq.coefficient(0, 0, 0), r(1));
        assert_eq!(sq.coefficient(1, 0, 0), r(-2));
        assert_eq!(sq.coefficient(2, 0, 0), r(1));
        assert_eq!(sq.len(), 3);
    }

    fn arb_expr() -> impl Strategy<Value = SteuExpression> {
        prop::collection::vec(((0i32..4, 0i32..4, 0i32..4), -20i64..20), 0..6).prop_map(|ts| {
            let mut e = SteuExpression::zero(1);
            for (k, c) in ts {
                e = &e + &SteuExpression::monomial(k.0, k.1, k.2, 1, r(c));
            }
            e
        })
    }

    proptest! {
        #[test]
        fn derivative_is_linear(a in arb_expr(), b in arb_expr()) {
            for v in [Var::S, Var::T, Var::U] {
                let lhs = (&a + &b).differentiate(v);
                let rhs = &a.differentiate(v) + &b.differentiate(v);
                prop_assert_eq!(lhs, rhs);
            }
        }

        #[test]
        fn mixed_partials_commute(a in arb_expr()) {
            prop_assert_eq!(a.differentiate(Var::S).differentiate(Var::T), a.differentiate(Var::T).differentiate(Var::S));
            prop_assert_eq!(a.differentiate(Var::S).differentiate(Var::U), a.differentiate(Var::U).differentiate(Var::S));
            prop_assert_eq!(a.differentiate(Var::T).differentiate(Var::U), a.differentiate(Var::U).differentiate(Var::T));
        }

        #[test]
        fn nested_prefix(n in 1usize..80) {
            let small = enumerate_basis(n).unwrap();
            let big = enumerate_basis(n + 1).unwrap();
            prop_assert_eq!(&big[..n], &small[..]);
        }

        #[test]
        fn basis_eval_matches_formula(l in 0u32..5, m in 0u32..3, n in 0u32..5,
                                      s in 0.1f64..8.0, x in 0.0f64..1.0, y in 0.0f64..1.0) {
            let u = s * y;
            let t = u * x;
            let direct = s.powi(l as i32) * t.powi(2 * m as i32) * u.powi(n as i32) * (-s).exp();
            let got = BasisTerm::new(l, m, n).expression().eval_f64(s, t, u);
            prop_assert!((got - direct).abs() <= 1e-14 * direct.abs().max(1e-300));
        }
    }
}
