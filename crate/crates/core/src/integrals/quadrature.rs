//! Numerical integration over the Hylleraas domain 0 <= |t| <= u <= s with
//! weight e^{-2s}.
//!
//! The domain is mapped to the unit cube by s = -ln(z)/2, u = s*y, t = u*x
//! (folded) or t = u*(2x - 1) (full range). Two rules are provided:
//! nested tanh-sinh for integrands with endpoint singularities, and a Gauss
//! product rule that is exact for polynomial integrands of bounded degree.
//! Both are generic over `f64` and [`Real`].

use crate::error::{Error, Result};
use crate::real::Real;

/// Arithmetic needed by the quadrature rules.
pub trait QuadNum: Clone {
    fn from_f64(v: f64, bits: usize) -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Self;
    fn ln(&self) -> Self;
    /// ln(1 + self), accurate for small arguments.
    fn ln_1p(&self) -> Self;
    fn exp(&self) -> Self;
    fn to_f64(&self) -> f64;
    fn pi(bits: usize) -> Self;
    /// Weights below this are dropped from the tanh-sinh rule.
    fn weight_cutoff(bits: usize) -> f64;
}

impl QuadNum for f64 {
    fn from_f64(v: f64, _: usize) -> Self {
        v
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn ln(&self) -> Self {
        f64::ln(*self)
    }
    fn ln_1p(&self) -> Self {
        f64::ln_1p(*self)
    }
    fn exp(&self) -> Self {
        f64::exp(*self)
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn pi(_: usize) -> Self {
        std::f64::consts::PI
    }
    fn weight_cutoff(_: usize) -> f64 {
        1e-32
    }
}

impl QuadNum for Real {
    fn from_f64(v: f64, bits: usize) -> Self {
        Real::from_f64(v, bits)
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn ln(&self) -> Self {
        Real::ln(self)
    }
    fn ln_1p(&self) -> Self {
        let bits = self.precision();
        if self.is_zero() {
            return self.clone();
        }
        if self.abs().to_f64() < 1.0 / 65536.0 {
            // x - x²/2 + x³/3 - ...
            let eps = Real::one(bits).ldexp(-(bits as i32) - 8);
            let mut pow = self.clone();
            let mut sum = self.clone();
            for k in 2u64.. {
                pow = -(&pow * self);
                let term = &pow / &Real::from_u64(k, bits);
                sum += &term;
                if term.abs() < &eps * &sum.abs() {
                    break;
                }
            }
            return sum;
        }
        let wide = self.with_precision(bits + 128);
        (Real::one(bits + 128) + wide).ln().with_precision(bits)
    }
    fn exp(&self) -> Self {
        Real::exp(self)
    }
    fn to_f64(&self) -> f64 {
        Real::to_f64(self)
    }
    fn pi(bits: usize) -> Self {
        Real::pi(bits)
    }
    fn weight_cutoff(bits: usize) -> f64 {
        2f64.powi(-(2 * bits as i32).min(1000))
    }
}

/// A point of the Hylleraas domain handed to integrands. `s_minus_t` and
/// `ln_u` are computed from the cube coordinates directly so that they keep
/// full relative accuracy near the singular edges.
#[derive(Debug, Clone)]
pub struct QuadPoint<T> {
    pub s: T,
    pub t: T,
    pub u: T,
    pub ln_u: T,
    pub s_minus_t: T,
}

/// Which part of the t range is integrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TRange {
    /// 0 <= t <= u.
    Folded,
    /// -u <= t <= u.
    Full,
}

#[derive(Debug, Clone)]
pub struct QuadEstimate<T> {
    pub value: T,
    /// Difference between the last two refinement levels.
    pub bound: f64,
    pub level: u32,
}

/// One abscissa on (0, 1) with its complement 1 - x.
#[derive(Debug, Clone)]
struct Node<T> {
    x: T,
    xc: T,
    w: T,
}

fn tanh_sinh_nodes<T: QuadNum>(level: u32, bits: usize) -> Vec<Node<T>> {
    let h = 2f64.powi(-(level as i32));
    let hr = T::from_f64(h, bits);
    let one = T::from_f64(1.0, bits);
    let half = T::from_f64(0.5, bits);
    let pi = T::pi(bits);
    let cutoff = T::weight_cutoff(bits);
    let mut nodes = vec![Node { x: half.clone(), xc: half, w: hr.mul(&pi).mul(&T::from_f64(0.25, bits)) }];
    for k in 1.. {
        let t = T::from_f64(k as f64 * h, bits);
        let et = t.exp();
        let emt = one.div(&et);
        let sinh = et.sub(&emt).mul(&T::from_f64(0.5, bits));
        let cosh = et.add(&emt).mul(&T::from_f64(0.5, bits));
        // q = exp(-pi sinh t); x = 1/(1+q), 1-x = q/(1+q)
        let q = T::from_f64(0.0, bits).sub(&pi.mul(&sinh)).exp();
        let denom = one.add(&q);
        let x = one.div(&denom);
        let xc = q.div(&denom);
        let w = hr.mul(&pi).mul(&cosh).mul(&x).mul(&xc);
        let wf = w.to_f64();
        if wf < cutoff || xc.to_f64() == 0.0 {
            break;
        }
        nodes.push(Node { x: x.clone(), xc: xc.clone(), w: w.clone() });
        nodes.push(Node { x: xc, xc: x, w });
    }
    nodes
}

fn integrate_cube<T, F>(f: &F, range: TRange, sz: &[Node<T>], sy: &[Node<T>], sx: &[Node<T>], bits: usize) -> T
where
    T: QuadNum,
    F: Fn(&QuadPoint<T>) -> T,
{
    let zero = T::from_f64(0.0, bits);
    let half = T::from_f64(0.5, bits);
    let two = T::from_f64(2.0, bits);
    let mut total = zero.clone();
    for nz in sz {
        // s = -ln(z)/2 with z = 1 - zc when z is close to 1
        let s = if nz.x.to_f64() > 0.5 {
            zero.sub(&zero.sub(&nz.xc).ln_1p()).mul(&half)
        } else {
            zero.sub(&nz.x.ln()).mul(&half)
        };
        let ln_s = s.ln();
        let mut acc_y = zero.clone();
        for ny in sy {
            let u = s.mul(&ny.x);
            let ln_u = ln_s.add(&ny.x.ln());
            let mut acc_x = zero.clone();
            for nx in sx {
                let (t, s_minus_t, jac) = match range {
                    TRange::Folded => {
                        let t = u.mul(&nx.x);
                        let smt = s.mul(&ny.xc.add(&ny.x.mul(&nx.xc)));
                        (t, smt, u.clone())
                    }
                    TRange::Full => {
                        let t = u.mul(&nx.x.sub(&nx.xc));
                        let smt = s.mul(&ny.xc.add(&two.mul(&ny.x).mul(&nx.xc)));
                        (t, smt, two.mul(&u))
                    }
                };
                let p = QuadPoint { s: s.clone(), t, u: u.clone(), ln_u: ln_u.clone(), s_minus_t };
                acc_x = acc_x.add(&nx.w.mul(&jac).mul(&f(&p)));
            }
            acc_y = acc_y.add(&ny.w.mul(&s).mul(&acc_x));
        }
        total = total.add(&nz.w.mul(&half).mul(&acc_y));
    }
    total
}

/// Nested tanh-sinh estimate of `∫ e^{-2s} f ds du dt`, refined level by
/// level until two successive levels agree to `target`.
pub fn tanh_sinh<T, F>(f: F, range: TRange, target: f64, bits: usize, max_level: u32) -> Result<QuadEstimate<T>>
where
    T: QuadNum,
    F: Fn(&QuadPoint<T>) -> T,
{
    let mut prev: Option<T> = None;
    let mut bound = f64::INFINITY;
    for level in 1..=max_level {
        let nodes = tanh_sinh_nodes::<T>(level, bits);
        let value = integrate_cube(&f, range, &nodes, &nodes, &nodes, bits);
        if let Some(p) = &prev {
            bound = value.sub(p).to_f64().abs();
            if bound <= target {
                return Ok(QuadEstimate { value, bound, level });
            }
        }
        prev = Some(value);
    }
    Err(Error::Quadrature { estimate: prev.map(|v| v.to_f64()).unwrap_or(f64::NAN), bound, target })
}

/// Default-precision quadrature with the engine's level budget.
pub fn quad_integral<F>(f: F, target: f64, bits: usize) -> Result<QuadEstimate<Real>>
where
    F: Fn(&QuadPoint<Real>) -> Real,
{
    tanh_sinh(f, TRange::Folded, target, bits, 6)
}

/// Gauss-Legendre nodes and weights on (0, 1).
pub fn gauss_legendre(n: usize, bits: usize) -> Vec<(Real, Real)> {
    let work = bits + 64;
    let one = Real::one(work);
    let mut out = Vec::with_capacity(n);
    let tol = Real::one(work).ldexp(-(bits as i32) - 16);
    for i in 0..n {
        let guess = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut x = Real::from_f64(guess, work);
        let mut dp = one.clone();
        for _ in 0..100 {
            let (p, pm1) = legendre_pair(n, &x);
            let nr = Real::from_u64(n as u64, work);
            dp = &nr * &(&(&x * &p) - &pm1) / &(&(&x * &x) - &one);
            let dx = &p / &dp;
            x = &x - &dx;
            if dx.abs() < tol {
                break;
            }
        }
        let (p, pm1) = legendre_pair(n, &x);
        let nr = Real::from_u64(n as u64, work);
        dp = if p.is_finite() { &nr * &(&(&x * &p) - &pm1) / &(&(&x * &x) - &one) } else { dp };
        let w = Real::from_u64(2, work) / (&(&one - &(&x * &x)) * &(&dp * &dp));
        let x01 = (&x + &one).ldexp(-1);
        out.push((x01.with_precision(bits), w.ldexp(-1).with_precision(bits)));
    }
    out
}

fn legendre_pair(n: usize, x: &Real) -> (Real, Real) {
    let bits = x.precision();
    let mut p0 = Real::one(bits);
    let mut p1 = x.clone();
    if n == 0 {
        return (p0, Real::zero(bits));
    }
    for k in 1..n {
        let kr = Real::from_u64(k as u64, bits);
        let a = Real::from_u64(2 * k as u64 + 1, bits);
        let p2 = (&(&a * &(x * &p1)) - &(&kr * &p0)) / Real::from_u64(k as u64 + 1, bits);
        p0 = p1;
        p1 = p2;
    }
    (p1, p0)
}

/// Gauss-Laguerre nodes and weights for weight e^{-z} on (0, inf).
pub fn gauss_laguerre(n: usize, bits: usize) -> Vec<(Real, Real)> {
    let work = bits + 64;
    let tol = Real::one(work).ldexp(-(bits as i32) - 16);
    let mut guesses: Vec<f64> = Vec::with_capacity(n);
    for i in 0..n {
        let z = match i {
            0 => 3.0 / (1.0 + 2.4 * n as f64),
            1 => guesses[0] + 15.0 / (1.0 + 2.5 * n as f64),
            _ => {
                let ai = (i - 1) as f64;
                guesses[i - 1] + (1.0 + 2.55 * ai) / (1.9 * ai) * (guesses[i - 1] - guesses[i - 2])
            }
        };
        // polish in f64 so the guesses used for later roots are good
        let mut z = z;
        for _ in 0..100 {
            let (l, lm1) = laguerre_pair_f64(n, z);
            let d = n as f64 * (l - lm1) / z;
            let dz = l / d;
            z -= dz;
            if dz.abs() <= 1e-15 * z.abs() {
                break;
            }
        }
        guesses.push(z);
    }
    let mut out = Vec::with_capacity(n);
    for g in guesses {
        let mut z = Real::from_f64(g, work);
        for _ in 0..100 {
            let (l, lm1) = laguerre_pair(n, &z);
            let d = Real::from_u64(n as u64, work) * (&l - &lm1) / &z;
            let dz = &l / &d;
            z = &z - &dz;
            if dz.abs() < &tol * &z.abs() {
                break;
            }
        }
        let (lnp1, _) = laguerre_pair(n + 1, &z);
        let np1 = Real::from_u64(n as u64 + 1, work);
        let w = &z / &(&(&np1 * &np1) * &(&lnp1 * &lnp1));
        out.push((z.with_precision(bits), w.with_precision(bits)));
    }
    out
}

fn laguerre_pair_f64(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, 1.0 - z);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0 - z) * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    (p1, p0)
}

fn laguerre_pair(n: usize, z: &Real) -> (Real, Real) {
    let bits = z.precision();
    let one = Real::one(bits);
    let mut p0 = one.clone();
    let mut p1 = &one - z;
    if n == 0 {
        return (one, Real::zero(bits));
    }
    for k in 1..n {
        let kr = Real::from_u64(k as u64, bits);
        let a = Real::from_u64(2 * k as u64 + 1, bits) - z;
        let p2 = (&(&a * &p1) - &(&kr * &p0)) / Real::from_u64(k as u64 + 1, bits);
        p0 = p1;
        p1 = p2;
    }
    (p1, p0)
}

/// Gauss product rule with `n` points per axis. Exact when the integrand is
/// a polynomial whose degree in each mapped axis is below 2n.
pub struct GaussProduct {
    s_nodes: Vec<(Real, Real)>,
    unit: Vec<(Real, Real)>,
    bits: usize,
}

impl GaussProduct {
    pub fn new(n: usize, bits: usize) -> Self {
        GaussProduct { s_nodes: gauss_laguerre(n, bits), unit: gauss_legendre(n, bits), bits }
    }

    pub fn integrate<F>(&self, f: F, range: TRange) -> Real
    where
        F: Fn(&QuadPoint<Real>) -> Real,
    {
        let bits = self.bits;
        let one = Real::one(bits);
        let two = Real::from_u64(2, bits);
        let mut total = Real::zero(bits);
        for (z, wz) in &self.s_nodes {
            // e^{-2s} ds = e^{-z} dz / 2
            let s = z.ldexp(-1);
            let ln_s = s.ln();
            let mut acc_y = Real::zero(bits);
            for (y, wy) in &self.unit {
                let u = &s * y;
                let ln_u = &ln_s + &y.ln();
                let yc = &one - y;
                let mut acc_x = Real::zero(bits);
                for (x, wx) in &self.unit {
                    let xc = &one - x;
                    let (t, s_minus_t, jac) = match range {
                        TRange::Folded => (&u * x, &s * &(&yc + &(y * &xc)), u.clone()),
                        TRange::Full => (&u * &(x - &xc), &s * &(&yc + &(&two * &(y * &xc))), &two * &u),
                    };
                    let p = QuadPoint { s: s.clone(), t, u: u.clone(), ln_u: ln_u.clone(), s_minus_t };
                    acc_x += &(wx * &(&jac * &f(&p)));
                }
                acc_y += &(wy * &(&s * &acc_x));
            }
            total += &(wz * &acc_y);
        }
        total.ldexp(-1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::real::bits_for_digits;

    #[test]
    fn gauss_rules_integrate_moments() {
        let bits = bits_for_digits(40);
        let leg = gauss_legendre(8, bits);
        // ∫0^1 x^7 = 1/8
        let m: Real = leg.iter().fold(Real::zero(bits), |acc, (x, w)| acc + w * &x.powi(7));
        assert!((m - Real::from_f64(0.125, bits)).abs().to_f64() < 1e-38);
        let lag = gauss_laguerre(8, bits);
        // ∫ z^10 e^{-z} = 10!
        let m: Real = lag.iter().fold(Real::zero(bits), |acc, (z, w)| acc + w * &z.powi(10));
        assert!((m.to_f64() - 3628800.0).abs() < 1e-6);
    }

    #[test]
    fn tanh_sinh_volume_moments_f64() {
        // known folded values: u(s^2-t^2) -> 1/2, 4su -> 1, s^2-t^2 -> 5/16
        let vol = tanh_sinh(|p: &QuadPoint<f64>| p.u * (p.s * p.s - p.t * p.t), TRange::Folded, 1e-13, 0, 6).unwrap();
        assert!((vol.value - 0.5).abs() < 1e-13, "{}", vol.value);
        let att = tanh_sinh(|p: &QuadPoint<f64>| 4.0 * p.s * p.u, TRange::Folded, 1e-13, 0, 6).unwrap();
        assert!((att.value - 1.0).abs() < 1e-13);
        let rep = tanh_sinh(|p: &QuadPoint<f64>| p.s * p.s - p.t * p.t, TRange::Folded, 1e-13, 0, 6).unwrap();
        assert!((rep.value - 5.0 / 16.0).abs() < 1e-13);
    }

    #[test]
    fn full_range_kills_odd_t() {
        let odd = tanh_sinh(|p: &QuadPoint<f64>| p.t * p.u, TRange::Full, 1e-13, 0, 6).unwrap();
        assert!(odd.value.abs() < 1e-13);
    }

    #[test]
    fn nonconvergence_reports_bound() {
        match tanh_sinh(|p: &QuadPoint<f64>| 1.0 / p.s_minus_t, TRange::Folded, 1e-30, 0, 2) {
            Err(Error::Quadrature { bound, target, .. }) => {
                assert!(bound > target);
            }
            other => panic!("expected failure, got {other:?}"),
        }
    }
}
