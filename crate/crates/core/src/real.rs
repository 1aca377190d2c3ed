//! Arbitrary-precision real numbers.
//!
//! [`Real`] wraps an `astro_float::BigFloat` and carries its own mantissa
//! width. Binary operations run at the wider of the two operand precisions,
//! so a computation started at `bits_for_digits(50)` stays there without any
//! global context.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use astro_float::{BigFloat, Consts, Exponent, Radix, RoundingMode, Sign, Word};
use num_bigint::BigInt;
use num_rational::BigRational;

const RM: RoundingMode = RoundingMode::ToEven;
const WORD_BITS: usize = Word::BITS as usize;

thread_local! {
    static CONSTS: RefCell<Consts> = RefCell::new(Consts::new().expect("astro-float constant cache"));
    static GAMMA: RefCell<HashMap<usize, BigFloat>> = RefCell::new(HashMap::new());
}

fn with_consts<R>(f: impl FnOnce(&mut Consts) -> R) -> R {
    CONSTS.with(|cc| f(&mut cc.borrow_mut()))
}

/// Mantissa width in bits for `digits` significant decimal digits, plus a
/// guard word.
pub fn bits_for_digits(digits: u32) -> usize {
    let raw = (digits as f64 * std::f64::consts::LOG2_10).ceil() as usize;
    (raw / WORD_BITS + 2) * WORD_BITS
}

/// A real number with a per-value binary precision.
#[derive(Clone)]
pub struct Real(BigFloat);

impl Real {
    fn wrap(v: BigFloat) -> Self {
        debug_assert!(!v.is_nan(), "NaN produced in Real arithmetic: {:?}", v.err());
        Real(v)
    }

    pub fn zero(bits: usize) -> Self {
        Real(BigFloat::from_word(0, bits))
    }

    pub fn one(bits: usize) -> Self {
        Real(BigFloat::from_word(1, bits))
    }

    pub fn from_i64(v: i64, bits: usize) -> Self {
        Real(BigFloat::from_i64(v, bits))
    }

    pub fn from_u64(v: u64, bits: usize) -> Self {
        Real(BigFloat::from_u64(v, bits))
    }

    /// Exact conversion of an `f64` (every double is a dyadic rational).
    pub fn from_f64(v: f64, bits: usize) -> Self {
        Real(BigFloat::from_f64(v, bits.max(64)))
    }

    /// Parses a decimal literal such as `"7294.299508"` at `bits` precision.
    pub fn parse(s: &str, bits: usize) -> Option<Self> {
        let v = with_consts(|cc| BigFloat::parse(s.trim(), Radix::Dec, bits, RM, cc));
        if v.is_nan() {
            None
        } else {
            Some(Real(v))
        }
    }

    pub fn from_bigint(v: &BigInt, bits: usize) -> Self {
        let (sign, words) = v.to_u64_digits();
        if words.is_empty() {
            return Real::zero(bits);
        }
        let s = match sign {
            num_bigint::Sign::Minus => Sign::Neg,
            _ => Sign::Pos,
        };
        let e = (words.len() * WORD_BITS) as Exponent;
        let mut f = BigFloat::from_words(&words, s, e);
        f.set_precision(bits, RM).expect("precision change");
        Real(f)
    }

    pub fn from_ratio(v: &BigRational, bits: usize) -> Self {
        let n = Real::from_bigint(v.numer(), bits);
        if v.denom() == &BigInt::from(1) {
            return n;
        }
        let d = Real::from_bigint(v.denom(), bits);
        &n / &d
    }

    /// Mantissa width in bits.
    pub fn precision(&self) -> usize {
        self.0.mantissa_max_bit_len().unwrap_or(WORD_BITS)
    }

    /// Copy rounded (or zero-extended) to `bits`.
    pub fn with_precision(&self, bits: usize) -> Self {
        let mut v = self.0.clone();
        v.set_precision(bits, RM).expect("precision change");
        Real(v)
    }

    pub fn to_f64(&self) -> f64 {
        match self.0.as_raw_parts() {
            Some((words, _, sign, exp, _)) => {
                let top = match words.iter().rposition(|&w| w != 0) {
                    Some(i) => i,
                    None => return 0.0,
                };
                let hi = words[top] as f64 / 2f64.powi(64);
                let lo = if top > 0 { words[top - 1] as f64 / 2f64.powi(128) } else { 0.0 };
                let mag = ldexp_f64(hi + lo, exp - 64 * (words.len() as i32 - 1 - top as i32));
                if sign == Sign::Neg {
                    -mag
                } else {
                    mag
                }
            }
            None => {
                if self.0.is_inf_pos() {
                    f64::INFINITY
                } else if self.0.is_inf_neg() {
                    f64::NEG_INFINITY
                } else {
                    f64::NAN
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        !self.0.is_zero() && self.0.is_negative()
    }

    pub fn is_positive(&self) -> bool {
        !self.0.is_zero() && self.0.is_positive()
    }

    pub fn is_finite(&self) -> bool {
        !self.0.is_nan() && !self.0.is_inf()
    }

    pub fn abs(&self) -> Self {
        Real(self.0.abs())
    }

    pub fn sqrt(&self) -> Self {
        Real::wrap(self.0.sqrt(self.precision(), RM))
    }

    pub fn ln(&self) -> Self {
        let p = self.precision();
        Real::wrap(with_consts(|cc| self.0.ln(p, RM, cc)))
    }

    pub fn exp(&self) -> Self {
        let p = self.precision();
        Real::wrap(with_consts(|cc| self.0.exp(p, RM, cc)))
    }

    pub fn powi(&self, n: i32) -> Self {
        let p = self.precision();
        let pos = Real(self.0.powi(n.unsigned_abs() as usize, p, RM));
        if n < 0 {
            pos.recip()
        } else {
            pos
        }
    }

    pub fn recip(&self) -> Self {
        Real::wrap(self.0.reciprocal(self.precision(), RM))
    }

    pub fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    pub fn pi(bits: usize) -> Self {
        Real(with_consts(|cc| cc.pi(bits, RM)))
    }

    pub fn ln2(bits: usize) -> Self {
        Real(with_consts(|cc| cc.ln_2(bits, RM)))
    }

    /// Euler's constant at `bits` precision (Brent–McMillan, cached).
    pub fn euler_gamma(bits: usize) -> Self {
        if let Some(v) = GAMMA.with(|g| g.borrow().get(&bits).cloned()) {
            return Real(v);
        }
        let v = brent_mcmillan(bits);
        GAMMA.with(|g| g.borrow_mut().insert(bits, v.0.clone()));
        v
    }

    /// Decimal rendering with `digits` significant digits in scientific form.
    pub fn to_sci_string(&self, digits: usize) -> String {
        let bits = bits_for_digits(digits as u32).min(self.precision().max(64));
        let mut v = self.0.clone();
        let _ = v.set_precision(bits, RM);
        let raw = with_consts(|cc| v.format(Radix::Dec, RM, cc)).unwrap_or_else(|_| "NaN".into());
        round_sci(&raw, digits.max(1)).unwrap_or(raw)
    }
}

/// Rounds a `[-]d.ddd…e±x` string to `digits` significant digits.
fn round_sci(raw: &str, digits: usize) -> Option<String> {
    let (sign, rest) = raw.strip_prefix('-').map_or(("", raw), |r| ("-", r));
    let (mantissa, exp) = rest.split_once('e')?;
    let mut exp: i64 = exp.parse().ok()?;
    let mut d: Vec<u8> = mantissa.bytes().filter(u8::is_ascii_digit).map(|b| b - b'0').collect();
    if d.is_empty() || mantissa.find('.').map_or(mantissa.len(), |i| i) != 1 {
        return None;
    }
    if d.len() > digits {
        let up = d[digits] >= 5;
        d.truncate(digits);
        if up {
            let mut i = digits;
            loop {
                if i == 0 {
                    d.insert(0, 1);
                    d.truncate(digits);
                    exp += 1;
                    break;
                }
                i -= 1;
                if d[i] == 9 {
                    d[i] = 0;
                } else {
                    d[i] += 1;
                    break;
                }
            }
        }
    }
    while d.len() > 1 && d.last() == Some(&0) {
        d.pop();
    }
    let digits: String = d.iter().map(|x| char::from(b'0' + x)).collect();
    let (head, tail) = digits.split_at(1);
    let sep = if tail.is_empty() { "" } else { "." };
    Some(format!("{sign}{head}{sep}{tail}e{}{}", if exp < 0 { "-" } else { "+" }, exp.abs()))
}

fn ldexp_f64(mut m: f64, mut e: i32) -> f64 {
    while e > 1000 {
        m *= 2f64.powi(1000);
        e -= 1000;
    }
    while e < -1000 {
        m *= 2f64.powi(-1000);
        e += 1000;
    }
    m * 2f64.powi(e)
}

fn brent_mcmillan(bits: usize) -> Real {
    // Error is O(exp(-4n)); the loop runs until the B-series underflows.
    let work = bits + 64;
    let n = ((bits as f64) * std::f64::consts::LN_2 / 4.0).ceil() as u64 + 2;
    let n_r = Real::from_u64(n, work);
    let n2 = &n_r * &n_r;
    let mut a = -n_r.ln();
    let mut b = Real::one(work);
    let mut u = a.clone();
    let mut v = b.clone();
    let eps = Real::one(work).ldexp(-(work as i32));
    let mut k = 1u64;
    loop {
        let kr = Real::from_u64(k, work);
        b = &(&b * &n2) / &(&kr * &kr);
        a = &(&(&(&a * &n2) / &kr) + &b) / &kr;
        u += &a;
        v += &b;
        if k > n && a.abs() < (&eps * &u.abs()) && b < (&eps * &v) {
            break;
        }
        k += 1;
    }
    (&u / &v).with_precision(bits)
}

impl Real {
    /// `self * 2^e`.
    pub fn ldexp(&self, e: i32) -> Self {
        let mut v = self.0.clone();
        if let Some(ex) = v.exponent() {
            if !v.is_zero() {
                v.set_exponent(ex + e);
            }
        }
        Real(v)
    }
}

impl fmt::Debug for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Real({})", self.to_sci_string(25))
    }
}

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = f.precision().unwrap_or(20);
        f.write_str(&self.to_sci_string(digits))
    }
}

impl PartialEq for Real {
    fn eq(&self, other: &Self) -> bool {
        self.0.cmp(&other.0) == Some(0)
    }
}

impl PartialOrd for Real {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.0.cmp(&other.0).map(|c| c.cmp(&0))
    }
}

macro_rules! binop {
    ($tr:ident, $method:ident, $inner:ident) => {
        impl $tr<&Real> for &Real {
            type Output = Real;
            fn $method(self, rhs: &Real) -> Real {
                let p = self.precision().max(rhs.precision());
                Real::wrap(self.0.$inner(&rhs.0, p, RM))
            }
        }
        impl $tr<Real> for Real {
            type Output = Real;
            fn $method(self, rhs: Real) -> Real {
                (&self).$method(&rhs)
            }
        }
        impl $tr<&Real> for Real {
            type Output = Real;
            fn $method(self, rhs: &Real) -> Real {
                (&self).$method(rhs)
            }
        }
        impl $tr<Real> for &Real {
            type Output = Real;
            fn $method(self, rhs: Real) -> Real {
                self.$method(&rhs)
            }
        }
    };
}

binop!(Add, add, add);
binop!(Sub, sub, sub);
binop!(Mul, mul, mul);
binop!(Div, div, div);

impl AddAssign<&Real> for Real {
    fn add_assign(&mut self, rhs: &Real) {
        *self = &*self + rhs;
    }
}

impl AddAssign<Real> for Real {
    fn add_assign(&mut self, rhs: Real) {
        *self = &*self + &rhs;
    }
}

impl SubAssign<&Real> for Real {
    fn sub_assign(&mut self, rhs: &Real) {
        *self = &*self - rhs;
    }
}

impl SubAssign<Real> for Real {
    fn sub_assign(&mut self, rhs: Real) {
        *self = &*self - &rhs;
    }
}

impl MulAssign<&Real> for Real {
    fn mul_assign(&mut self, rhs: &Real) {
        *self = &*self * rhs;
    }
}

impl Neg for Real {
    type Output = Real;
    fn neg(self) -> Real {
        Real(BigFloat::neg(&self.0))
    }
}

impl Neg for &Real {
    type Output = Real;
    fn neg(self) -> Real {
        Real(BigFloat::neg(&self.0))
    }
}

#[cfg(test)]
mod tests {
    #[test]
    fn sci_rounding() {
        assert_eq!(round_sci("-2.8476999e+0", 4).unwrap(), "-2.848e+0");
        assert_eq!(round_sci("9.9996e-3", 4).unwrap(), "1e-2");
        assert_eq!(round_sci("1.5e+2", 10).unwrap(), "1.5e+2");
        let third = Real::one(256) / Real::from_i64(3, 256);
        assert_eq!(third.to_sci_string(5), "3.3333e-1");
    }

    use super::*;

    const P: usize = 256;

    #[test]
    fn integer_and_ratio_conversion() {
        let three = Real::from_bigint(&BigInt::from(3), P);
        assert_eq!(three.to_f64(), 3.0);
        let big = BigInt::from(1u64 << 63) * BigInt::from(1u64 << 40) + 7;
        let r = Real::from_bigint(&big, P);
        assert_eq!(r, Real::parse(&big.to_string(), P).unwrap());
        let q = BigRational::new(BigInt::from(-35), BigInt::from(32));
        assert_eq!(Real::from_ratio(&q, P).to_f64(), -35.0 / 32.0);
    }

    #[test]
    fn f64_round_trip() {
        for v in [0.0, 1.0, -2.5, 1e-300, 7294.299508, -3.375e12] {
            assert_eq!(Real::from_f64(v, P).to_f64(), v);
        }
    }

    #[test]
    fn euler_gamma_digits() {
        let g = Real::euler_gamma(P);
        let reference =
            Real::parse("0.57721566490153286060651209008240243104215933593992359880576723", P)
                .unwrap();
        let err = (&g - &reference).abs().to_f64();
        assert!(err < 1e-60, "gamma error {err:e}");
    }

    #[test]
    fn transcendental_identities() {
        let two = Real::from_i64(2, P);
        let err = (&two.ln() - &Real::ln2(P)).abs().to_f64();
        assert!(err < 1e-70);
        let x = Real::parse("1.25", P).unwrap();
        let err = (&x.ln().exp() - &x).abs().to_f64();
        assert!(err < 1e-70);
        let err = (&(&two.sqrt() * &two.sqrt()) - &two).abs().to_f64();
        assert!(err < 1e-70);
    }

    #[test]
    fn ordering_and_precision() {
        let a = Real::from_i64(-1, 128);
        let b = Real::from_i64(1, P);
        assert!(a < b);
        assert!((&a + &b).precision() >= P);
        assert!(Real::zero(P).is_zero());
        assert_eq!(Real::from_i64(5, P).ldexp(-1).to_f64(), 2.5);
    }
}
