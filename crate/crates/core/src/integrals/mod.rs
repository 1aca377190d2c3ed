//! Integrals over the Hylleraas domain with weight e^{-2s}.
//!
//! Three families of raw moments (no volume element) have closed forms:
//!
//! * plain `∫ s^a t^b u^c`,
//! * logarithmic `∫ s^a t^b u^c ln u`,
//! * corner `∫ s^a t^b u^c / (s - t)`.
//!
//! Values are exact elements of Q + Q ln 2 + Q γ + Q π², represented by
//! [`ClosedForm`]. Matrix assembly works with full-range (-u <= t <= u)
//! moments, on which odd powers of t vanish. The folded base integrals with
//! the volume element u(s² - t²) are exposed as [`base_integral`] and
//! [`log_integral`].

pub mod quadrature;

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::RwLock;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::basis::SteuExpression;
use crate::error::{Error, Result};
use crate::real::Real;

pub use quadrature::{quad_integral, GaussProduct, QuadEstimate, QuadNum, QuadPoint, TRange};

/// Bumped whenever a closed form changes; stale on-disk caches are ignored.
pub const ENGINE_VERSION: &str = "hyhe-integrals-1";

/// `r + a ln 2 + b γ + c π²` with exact rational coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ClosedForm {
    pub rational: BigRational,
    pub ln2: BigRational,
    pub euler_gamma: BigRational,
    pub pi_squared: BigRational,
}

impl ClosedForm {
    pub fn zero() -> Self {
        ClosedForm {
            rational: BigRational::zero(),
            ln2: BigRational::zero(),
            euler_gamma: BigRational::zero(),
            pi_squared: BigRational::zero(),
        }
    }

    pub fn rational(r: BigRational) -> Self {
        ClosedForm { rational: r, ..ClosedForm::zero() }
    }

    pub fn is_rational(&self) -> bool {
        self.ln2.is_zero() && self.euler_gamma.is_zero() && self.pi_squared.is_zero()
    }

    pub fn add_scaled(&mut self, other: &ClosedForm, k: &BigRational) {
        self.rational += &other.rational * k;
        self.ln2 += &other.ln2 * k;
        self.euler_gamma += &other.euler_gamma * k;
        self.pi_squared += &other.pi_squared * k;
    }

    pub fn scale(&self, k: &BigRational) -> ClosedForm {
        let mut out = ClosedForm::zero();
        out.add_scaled(self, k);
        out
    }

    pub fn evaluate(&self, bits: usize) -> Real {
        let mut v = Real::from_ratio(&self.rational, bits);
        if !self.ln2.is_zero() {
            v += Real::from_ratio(&self.ln2, bits) * Real::ln2(bits);
        }
        if !self.euler_gamma.is_zero() {
            v += Real::from_ratio(&self.euler_gamma, bits) * Real::euler_gamma(bits);
        }
        if !self.pi_squared.is_zero() {
            let pi = Real::pi(bits);
            v += Real::from_ratio(&self.pi_squared, bits) * (&pi * &pi);
        }
        v
    }

    pub fn to_f64(&self) -> f64 {
        self.evaluate(128).to_f64()
    }
}

fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn factorial(n: u32) -> BigInt {
    (1..=n as u64).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

/// `n! / 2^{n+1}` = ∫ s^n e^{-2s} ds.
pub fn gamma_moment(n: u32) -> BigRational {
    BigRational::new(factorial(n), BigInt::one() << (n as usize + 1))
}

fn harmonic(n: u32) -> BigRational {
    (1..=n as i64).fold(BigRational::zero(), |acc, k| acc + ratio(1, k))
}

fn unsupported(a: i32, b: i32, c: i32, reason: &'static str) -> Error {
    Error::UnsupportedIntegral { a, b, c, reason }
}

fn check_moment(a: i32, b: i32, c: i32) -> Result<u32> {
    if b < 0 {
        return Err(unsupported(a, b, c, "negative power of t"));
    }
    if b + c + 2 <= 0 {
        return Err(unsupported(a, b, c, "u integral diverges at u = 0"));
    }
    let n = a + b + c + 2;
    if n < 0 {
        return Err(unsupported(a, b, c, "s integral diverges at s = 0"));
    }
    Ok(n as u32)
}

/// `∫_{0<=t<=u<=s} e^{-2s} s^a t^b u^c`.
pub fn folded_moment(a: i32, b: i32, c: i32) -> Result<BigRational> {
    let n = check_moment(a, b, c)?;
    Ok(gamma_moment(n) / int(((b + 1) * (b + c + 2)) as i64))
}

/// `∫_{0<=t<=u<=s} e^{-2s} s^a t^b u^c ln u`.
pub fn folded_log_moment(a: i32, b: i32, c: i32) -> Result<ClosedForm> {
    let n = check_moment(a, b, c)?;
    let d = int(((b + 1) * (b + c + 2)) as i64);
    let g = gamma_moment(n) / &d;
    let p = int((b + c + 2) as i64);
    Ok(ClosedForm {
        rational: &g * (harmonic(n) - BigRational::one() / p),
        ln2: -g.clone(),
        euler_gamma: -g,
        pi_squared: BigRational::zero(),
    })
}

fn alternating_ln2(n: i32) -> (BigRational, i64) {
    // L(0) = ln 2, L(n) = 1/n - L(n-1); returned as (rational part, ln 2 sign)
    let mut r = BigRational::zero();
    let mut sign = 1i64;
    for k in 1..=n as i64 {
        r = ratio(1, k) - r;
        sign = -sign;
    }
    (r, sign)
}

/// `∫_{-u<=t<=u<=s} e^{-2s} s^a t^b u^c / (s - t)` for a, b >= 0, c >= -1.
pub fn corner_moment(a: i32, b: i32, c: i32) -> Result<ClosedForm> {
    if a < 0 || b < 0 {
        return Err(unsupported(a, b, c, "corner family needs a, b >= 0"));
    }
    if c < -1 {
        return Err(unsupported(a, b, c, "corner family needs c >= -1"));
    }
    let g = gamma_moment((a + b + c + 1) as u32);
    let mut out = ClosedForm::zero();
    let parity = if b % 2 == 0 { 1 } else { -1 };
    if c >= 0 {
        let cp1 = int((c + 1) as i64);
        let x1 = (0..=c).fold(BigRational::zero(), |acc, j| acc + ratio(1, (b + j + 1) as i64)) / &cp1;
        let (r_lo, s_lo) = alternating_ln2(b);
        let (r_hi, s_hi) = alternating_ln2(b + c + 1);
        let x2_rat = (r_lo - r_hi) / &cp1;
        let x2_ln2 = int(s_lo - s_hi) / &cp1;
        out.rational = &g * (x1 + int(parity) * x2_rat);
        out.ln2 = &g * int(parity) * x2_ln2;
    } else {
        let inv_sq = (1..=b as i64).fold(BigRational::zero(), |acc, k| acc + ratio(1, k * k));
        let alt_sq = (1..=b as i64).fold(BigRational::zero(), |acc, k| {
            let term = ratio(1, k * k);
            if k % 2 == 1 {
                acc + term
            } else {
                acc - term
            }
        });
        // X1 + (-1)^b X2 = π²/6 - Σ1/k² + π²/12 - Σ(-1)^{k+1}/k²
        out.rational = -(&g * (inv_sq + alt_sq));
        out.pi_squared = &g * ratio(1, 4);
    }
    Ok(out)
}

/// Folded base integral with the volume element:
/// `∫_{0<=t<=u<=s} e^{-2s} s^a t^b u^c · u(s² - t²)`.
pub fn base_integral(a: i32, b: i32, c: i32) -> Result<BigRational> {
    if a < 0 || b < 0 || c < 0 {
        return Err(unsupported(a, b, c, "negative exponent; use quadrature"));
    }
    Ok(folded_moment(a + 2, b, c + 1)? - folded_moment(a, b + 2, c + 1)?)
}

/// [`base_integral`] with an extra ln u factor.
pub fn log_integral(a: i32, b: i32, c: i32) -> Result<ClosedForm> {
    if a < 0 || b < 0 || c < 0 {
        return Err(unsupported(a, b, c, "negative exponent; use quadrature"));
    }
    let mut v = folded_log_moment(a + 2, b, c + 1)?;
    v.add_scaled(&folded_log_moment(a, b + 2, c + 1)?, &int(-1));
    Ok(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntegralKind {
    Plain,
    Log,
    Corner,
}

/// A full-range raw moment `∫_{-u<=t<=u<=s} e^{-2s} s^a t^b u^c w`, with
/// w = 1, ln u or 1/(s - t) by kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IntegralKey {
    pub kind: IntegralKind,
    pub a: i32,
    pub b: i32,
    pub c: i32,
}

impl IntegralKey {
    pub fn new(kind: IntegralKind, a: i32, b: i32, c: i32) -> Self {
        IntegralKey { kind, a, b, c }
    }

    /// p such that replacing e^{-2s} by e^{-2ks} multiplies the value by k^{-p}.
    /// Log keys additionally pick up `-ln k` times the plain value.
    pub fn scaling_exponent(&self) -> i32 {
        match self.kind {
            IntegralKind::Plain | IntegralKind::Log => self.a + self.b + self.c + 3,
            IntegralKind::Corner => self.a + self.b + self.c + 2,
        }
    }

    fn evaluate_exact(&self) -> Result<ClosedForm> {
        let (a, b, c) = (self.a, self.b, self.c);
        match self.kind {
            IntegralKind::Plain => {
                if b % 2 != 0 {
                    check_moment(a, b, c)?;
                    return Ok(ClosedForm::zero());
                }
                Ok(ClosedForm::rational(folded_moment(a, b, c)? * int(2)))
            }
            IntegralKind::Log => {
                if b % 2 != 0 {
                    check_moment(a, b, c)?;
                    return Ok(ClosedForm::zero());
                }
                Ok(folded_log_moment(a, b, c)?.scale(&int(2)))
            }
            IntegralKind::Corner => corner_moment(a, b, c),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CacheStats {
    pub entries: usize,
    pub hits: u64,
    pub misses: u64,
    pub loaded_from_disk: bool,
}

/// Thread-safe memo of exact moment values.
#[derive(Debug, Default)]
pub struct IntegralTable {
    memo: RwLock<HashMap<IntegralKey, ClosedForm>>,
    hits: AtomicU64,
    misses: AtomicU64,
    loaded: bool,
}

#[derive(Serialize, Deserialize)]
struct CacheEntry {
    kind: IntegralKind,
    a: i32,
    b: i32,
    c: i32,
    rational: String,
    ln2: String,
    euler_gamma: String,
    pi_squared: String,
}

#[derive(Serialize, Deserialize)]
struct CacheFile {
    engine: String,
    max_grade: u32,
    entries: Vec<CacheEntry>,
}

fn parse_ratio(s: &str) -> Option<BigRational> {
    s.parse().ok()
}

impl IntegralTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, key: IntegralKey) -> Result<ClosedForm> {
        if let Some(v) = self.memo.read().expect("integral memo poisoned").get(&key) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return Ok(v.clone());
        }
        self.misses.fetch_add(1, Ordering::Relaxed);
        let v = key.evaluate_exact()?;
        self.memo.write().expect("integral memo poisoned").insert(key, v.clone());
        Ok(v)
    }

    pub fn plain(&self, a: i32, b: i32, c: i32) -> Result<BigRational> {
        Ok(self.get(IntegralKey::new(IntegralKind::Plain, a, b, c))?.rational)
    }

    pub fn log(&self, a: i32, b: i32, c: i32) -> Result<ClosedForm> {
        self.get(IntegralKey::new(IntegralKind::Log, a, b, c))
    }

    pub fn corner(&self, a: i32, b: i32, c: i32) -> Result<ClosedForm> {
        self.get(IntegralKey::new(IntegralKind::Corner, a, b, c))
    }

    /// Sum over the monomials of `expr` of the chosen moment family. The
    /// exponential tag must be 2.
    pub fn integrate(&self, expr: &SteuExpression, kind: IntegralKind) -> Result<ClosedForm> {
        if !expr.is_zero() && expr.exp_degree() != 2 {
            return Err(Error::validation(
                "integrand",
                format!("expected an e^-2s factor, found degree {}", expr.exp_degree()),
            ));
        }
        let mut acc = ClosedForm::zero();
        for (&(a, b, c), coef) in expr.terms() {
            acc.add_scaled(&self.get(IntegralKey::new(kind, a, b, c))?, coef);
        }
        Ok(acc)
    }

    /// Plain-family [`IntegralTable::integrate`], exact rational.
    pub fn integrate_plain(&self, expr: &SteuExpression) -> Result<BigRational> {
        Ok(self.integrate(expr, IntegralKind::Plain)?.rational)
    }

    /// Value of `key` with e^{-2ks} in place of e^{-2s}.
    pub fn value_at_k(&self, key: IntegralKey, k: &Real) -> Result<Real> {
        let bits = k.precision();
        let p = key.scaling_exponent();
        let base = self.get(key)?.evaluate(bits);
        let scaled = match key.kind {
            IntegralKind::Log => {
                let plain = self.get(IntegralKey::new(IntegralKind::Plain, key.a, key.b, key.c))?.evaluate(bits);
                base - plain * k.ln()
            }
            _ => base,
        };
        Ok(scaled * k.powi(-p))
    }

    pub fn stats(&self) -> CacheStats {
        CacheStats {
            entries: self.memo.read().expect("integral memo poisoned").len(),
            hits: self.hits.load(Ordering::Relaxed),
            misses: self.misses.load(Ordering::Relaxed),
            loaded_from_disk: self.loaded,
        }
    }

    /// Cache file for a table that covers bases up to `max_grade`.
    pub fn cache_path(dir: &Path, max_grade: u32) -> PathBuf {
        dir.join(format!("integrals-{ENGINE_VERSION}-g{max_grade}.json"))
    }

    pub fn save(&self, path: &Path, max_grade: u32) -> Result<()> {
        let memo = self.memo.read().expect("integral memo poisoned");
        let mut entries: Vec<CacheEntry> = memo
            .iter()
            .map(|(k, v)| CacheEntry {
                kind: k.kind,
                a: k.a,
                b: k.b,
                c: k.c,
                rational: v.rational.to_string(),
                ln2: v.ln2.to_string(),
                euler_gamma: v.euler_gamma.to_string(),
                pi_squared: v.pi_squared.to_string(),
            })
            .collect();
        entries.sort_by_key(|e| (e.kind as u8, e.a, e.b, e.c));
        let file = CacheFile { engine: ENGINE_VERSION.to_string(), max_grade, entries };
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        let tmp = path.with_extension("json.tmp");
        fs::write(&tmp, serde_json::to_vec(&file)?)?;
        fs::rename(&tmp, path)?;
        Ok(())
    }

    /// Loads a cache file. A missing file, another engine version or an
    /// unreadable entry all yield `Ok(None)`: the cache is an accelerator,
    /// never a source of truth.
    pub fn load(path: &Path, max_grade: u32) -> Result<Option<Self>> {
        let bytes = match fs::read(path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        let file: CacheFile = match serde_json::from_slice(&bytes) {
            Ok(f) => f,
            Err(_) => return Ok(None),
        };
        if file.engine != ENGINE_VERSION || file.max_grade != max_grade {
            return Ok(None);
        }
        let mut memo = HashMap::with_capacity(file.entries.len());
        for e in file.entries {
            let v = match (parse_ratio(&e.rational), parse_ratio(&e.ln2), parse_ratio(&e.euler_gamma), parse_ratio(&e.pi_squared)) {
                (Some(r), Some(l), Some(g), Some(p)) => ClosedForm { rational: r, ln2: l, euler_gamma: g, pi_squared: p },
                _ => return Ok(None),
            };
            memo.insert(IntegralKey::new(e.kind, e.a, e.b, e.c), v);
        }
        Ok(Some(IntegralTable { memo: RwLock::new(memo), loaded: true, ..Default::default() }))
    }
}

/// Extra factor multiplying the integrand in [`integral_for`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtraWeight {
    None,
    LnU,
}

/// Folded integral `∫_{0<=t<=u<=s} expr · w · u(s² - t²)` of an expression
/// carrying e^{-2s}. Monomials in the closed-form family are summed exactly
/// and converted once; any other monomial goes to quadrature at `target`.
pub fn integral_for(expr: &SteuExpression, weight: ExtraWeight, bits: usize, target: f64) -> Result<Real> {
    if expr.is_zero() {
        return Ok(Real::zero(bits));
    }
    if expr.exp_degree() != 2 {
        return Err(Error::validation(
            "integrand",
            format!("expected an e^-2s factor, found degree {}", expr.exp_degree()),
        ));
    }
    let mut exact = ClosedForm::zero();
    let mut numeric = Real::zero(bits);
    for (&(a, b, c), coef) in expr.terms() {
        let value = match weight {
            ExtraWeight::None => base_integral(a, b, c).map(ClosedForm::rational),
            ExtraWeight::LnU => log_integral(a, b, c),
        };
        match value {
            Ok(v) => exact.add_scaled(&v, coef),
            Err(Error::UnsupportedIntegral { .. }) => {
                let q = quad_integral(
                    |p: &QuadPoint<Real>| {
                        let mono = p.s.powi(a) * p.t.powi(b) * p.u.powi(c);
                        let vol = &p.u * &(&(&p.s * &p.s) - &(&p.t * &p.t));
                        match weight {
                            ExtraWeight::None => mono * vol,
                            ExtraWeight::LnU => mono * vol * &p.ln_u,
                        }
                    },
                    target,
                    bits,
                )?;
                numeric += Real::from_ratio(coef, bits) * q.value;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(exact.evaluate(bits) + numeric)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::real::bits_for_digits;

    #[test]
    fn base_values() {
        assert_eq!(base_integral(0, 0, 0).unwrap(), ratio(1, 2));
        assert_eq!(base_integral(1, 0, 0).unwrap(), ratio(3, 2));
        assert_eq!(base_integral(0, 0, 1).unwrap(), ratio(35, 32));
        assert!(matches!(base_integral(-1, 0, 0), Err(Error::UnsupportedIntegral { .. })));
    }

    #[test]
    fn base_increases_in_a() {
        for b in 0..3 {
            for c in 0..3 {
                for a in 0..6 {
                    assert!(base_integral(a + 1, b, c).unwrap() > base_integral(a, b, c).unwrap());
                }
            }
        }
    }

    #[test]
    fn dispatcher() {
        let bits = bits_for_digits(40);
        let one = SteuExpression::monomial(0, 0, 0, 2, BigRational::one());
        let v = integral_for(&one, ExtraWeight::None, bits, 1e-14).unwrap();
        assert_eq!(v, Real::from_f64(0.5, bits));
        assert!(integral_for(&SteuExpression::zero(2), ExtraWeight::None, bits, 1e-14).unwrap().is_zero());
        let su = &SteuExpression::monomial(1, 0, 0, 2, BigRational::one())
            + &SteuExpression::monomial(0, 0, 1, 2, BigRational::one());
        let v = integral_for(&su, ExtraWeight::None, bits, 1e-14).unwrap();
        assert_eq!(v, Real::from_ratio(&(ratio(3, 2) + ratio(35, 32)), bits));
    }

    #[test]
    fn log_scaling_law() {
        let bits = bits_for_digits(40);
        let table = IntegralTable::new();
        let key = IntegralKey::new(IntegralKind::Log, 2, 0, 1);
        let two = Real::from_u64(2, bits);
        let at2 = table.value_at_k(key, &two).unwrap();
        let j1 = table.get(key).unwrap().evaluate(bits);
        let i1 = Real::from_ratio(&table.plain(2, 0, 1).unwrap(), bits);
        let expect = (j1 - i1 * Real::ln2(bits)) * two.powi(-6);
        assert!((at2 - expect).abs().to_f64() < 1e-38);
    }

    #[test]
    fn odd_t_moments_vanish() {
        let table = IntegralTable::new();
        assert!(table.plain(1, 3, 2).unwrap().is_zero());
        assert!(table.log(0, 1, 0).unwrap() == ClosedForm::zero());
        assert!(!table.corner(0, 1, 0).unwrap().rational.is_zero());
    }

    #[test]
    fn memo_is_transparent() {
        let table = IntegralTable::new();
        let cold = table.corner(3, 2, -1).unwrap();
        let warm = table.corner(3, 2, -1).unwrap();
        assert_eq!(cold, warm);
        assert_eq!(table.stats().hits, 1);
        assert_eq!(table.stats().misses, 1);
    }

    #[test]
    fn cache_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let table = IntegralTable::new();
        table.corner(1, 2, 0).unwrap();
        table.log(0, 2, -2).unwrap();
        table.plain(4, 0, 3).unwrap();
        let path = IntegralTable::cache_path(dir.path(), 6);
        table.save(&path, 6).unwrap();
        let back = IntegralTable::load(&path, 6).unwrap().unwrap();
        assert_eq!(back.stats().entries, 3);
        assert_eq!(back.corner(1, 2, 0).unwrap(), table.corner(1, 2, 0).unwrap());
        assert!(IntegralTable::load(&path, 7).unwrap().is_none());
        fs::write(&path, b"{\"engine\":\"old\",\"max_grade\":6,\"entries\":[]}").unwrap();
        assert!(IntegralTable::load(&path, 6).unwrap().is_none());
    }
}
