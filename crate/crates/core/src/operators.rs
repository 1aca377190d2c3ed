//! Matrix elements over the Hylleraas basis and ground-state expectation
//! values.
//!
//! Every matrix except the delta functions is stored as the full-range
//! integral `∫_{-u<=t<=u<=s} ... ds du dt` at k = 1; the physical matrix
//! element is π² times the stored value (the factor from the three
//! Euler angles and the volume element π² u (s² - t²)).
//!
//! Reductions used, with r1 = (s - t)/2, r2 = (s + t)/2 and n̂ = r12/u:
//!
//! ```text
//! r̂1·r̂2 = (s² + t² - 2u²) / (s² - t²)
//! r̂1·n̂  = (u² - s t) / (u (s - t))
//! r̂2·n̂  = -(u² + s t) / (u (s + t))
//! ∇1 φ   = (φ_s - φ_t) r̂1 + φ_u n̂
//! ∇2 φ   = (φ_s + φ_t) r̂2 - φ_u n̂
//! ```

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::basis::{BasisTerm, SteuExpression, Var};
use crate::error::{Error, Result};
use crate::integrals::{gamma_moment, ClosedForm, IntegralKind, IntegralTable};
use crate::linalg::{Matrix, RealMatrix};
use crate::real::Real;

fn poly(terms: &[((i32, i32, i32), i64)]) -> SteuExpression {
    SteuExpression::poly(terms)
}

/// The reduced volume element u (s² - t²).
pub fn volume() -> SteuExpression {
    poly(&[((2, 0, 1), 1), ((0, 2, 1), -1)])
}

/// A basis function and its first partial derivatives.
#[derive(Debug, Clone)]
pub struct Derivatives {
    pub phi: SteuExpression,
    pub s: SteuExpression,
    pub t: SteuExpression,
    pub u: SteuExpression,
}

impl Derivatives {
    pub fn of(phi: SteuExpression) -> Self {
        Derivatives { s: phi.differentiate(Var::S), t: phi.differentiate(Var::T), u: phi.differentiate(Var::U), phi }
    }

    pub fn for_term(term: BasisTerm) -> Self {
        Derivatives::of(term.expression())
    }
}

/// `½ (∇1φi·∇1φj + ∇2φi·∇2φj) × u(s² - t²)`.
pub fn kinetic_integrand(a: &Derivatives, b: &Derivatives) -> SteuExpression {
    let diag = &(&(&a.s * &b.s) + &(&a.t * &b.t)) + &(&a.u * &b.u);
    let su = &(&a.s * &b.u) + &(&a.u * &b.s);
    let tu = &(&a.t * &b.u) + &(&a.u * &b.t);
    let w_su = poly(&[((1, 0, 2), 1), ((1, 2, 0), -1)]); // s(u² - t²)
    let w_tu = poly(&[((2, 1, 0), 1), ((0, 1, 2), -1)]); // t(s² - u²)
    &(&(&diag * &volume()) + &(&su * &w_su)) + &(&tu * &w_tu)
}

/// `φi φj (-Z(1/r1 + 1/r2) + 1/r12) × u(s² - t²)`.
pub fn potential_integrand(a: &SteuExpression, b: &SteuExpression, z: u32) -> SteuExpression {
    let w = poly(&[((1, 0, 1), -4 * z as i64), ((2, 0, 0), 1), ((0, 2, 0), -1)]);
    &(a * b) * &w
}

/// `∇1φi·∇2φj × u(s² - t²)`.
pub fn mass_polarization_integrand(a: &Derivatives, b: &Derivatives) -> SteuExpression {
    let a1 = &a.s - &a.t;
    let b2 = &b.s + &b.t;
    let r1r2 = poly(&[((2, 0, 1), 1), ((0, 2, 1), 1), ((0, 0, 3), -2)]); // u(s²+t²-2u²)
    let r1n = poly(&[((1, 0, 2), 1), ((0, 1, 2), 1), ((2, 1, 0), -1), ((1, 2, 0), -1)]); // (u²-st)(s+t)
    let r2n = poly(&[((1, 0, 2), 1), ((0, 1, 2), -1), ((2, 1, 0), 1), ((1, 2, 0), -1)]); // (u²+st)(s-t)
    let t1 = &(&a1 * &b2) * &r1r2;
    let t2 = &(&a1 * &b.u) * &r1n;
    let t3 = &(&a.u * &b2) * &r2n;
    let t4 = &(&a.u * &b.u) * &volume();
    &(&(&t1 - &t2) - &t3) - &t4
}

/// Numerator G of `Δ1 φ = G / (u (s - t))`.
pub fn laplacian_numerator(d: &Derivatives) -> SteuExpression {
    let ss = d.s.differentiate(Var::S);
    let st = d.s.differentiate(Var::T);
    let su = d.s.differentiate(Var::U);
    let tt = d.t.differentiate(Var::T);
    let tu = d.t.differentiate(Var::U);
    let uu = d.u.differentiate(Var::U);
    let second = &(&(&ss + &tt) + &uu) - &st.scale_int(2);
    let g1 = &second * &poly(&[((1, 0, 1), 1), ((0, 1, 1), -1)]); // u(s-t)
    let g2 = &(&su - &tu).scale_int(2) * &poly(&[((0, 0, 2), 1), ((1, 1, 0), -1)]); // u² - st
    let g3 = &(&d.s - &d.t).scale_int(4) * &poly(&[((0, 0, 1), 1)]);
    let g4 = &d.u.scale_int(2) * &poly(&[((1, 0, 0), 1), ((0, 1, 0), -1)]);
    &(&(&g1 + &g2) + &g3) + &g4
}

/// `n̂·∇_{r12} φ × u(s² - t²)` with ∇_{r12} = (∇1 - ∇2)/2.
pub fn relative_gradient_integrand(d: &Derivatives) -> SteuExpression {
    let su = poly(&[((1, 0, 2), 1), ((1, 2, 0), -1)]); // s(u² - t²)
    let tu = poly(&[((2, 1, 0), 1), ((0, 1, 2), -1)]); // t(s² - u²)
    &(&(&d.u * &volume()) + &(&d.s * &su)) + &(&d.t * &tu)
}

/// `(Δ1φi)(Δ1φj) × u(s² - t²)` written as a corner-family integrand,
/// `Gi Gj (s + t) u⁻¹`, to be divided by (s - t).
pub fn p4_integrand(gi: &SteuExpression, gj: &SteuExpression) -> SteuExpression {
    &(gi * gj) * &poly(&[((1, 0, -1), 1), ((0, 1, -1), 1)])
}

/// `φi n̂·∇_{r12} φj / u² × u(s² - t²)`; the (ln u + γ) weight is applied by
/// the integral family.
pub fn log_momentum_integrand(phi_i: &SteuExpression, dj: &Derivatives) -> SteuExpression {
    &(phi_i * &relative_gradient_integrand(dj)) * &poly(&[((0, 0, -2), 1)])
}

fn upper_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect()
}

fn build_symmetric<T, F>(n: usize, f: F) -> Result<Matrix<T>>
where
    T: Clone + Send,
    F: Fn(usize, usize) -> Result<T> + Sync,
{
    let values: Result<Vec<T>> = upper_pairs(n).into_par_iter().map(|(i, j)| f(i, j)).collect();
    Ok(Matrix::from_upper(n, values?))
}

fn derivs(basis: &[BasisTerm]) -> Vec<Derivatives> {
    basis.iter().map(|t| Derivatives::for_term(*t)).collect()
}

pub fn overlap_matrix(basis: &[BasisTerm], table: &IntegralTable) -> Result<Matrix<BigRational>> {
    let phis: Vec<_> = basis.iter().map(|t| t.expression()).collect();
    build_symmetric(basis.len(), |i, j| table.integrate_plain(&(&(&phis[i] * &phis[j]) * &volume())))
}

pub fn kinetic_matrix(basis: &[BasisTerm], table: &IntegralTable) -> Result<Matrix<BigRational>> {
    let d = derivs(basis);
    build_symmetric(basis.len(), |i, j| table.integrate_plain(&kinetic_integrand(&d[i], &d[j])))
}

pub fn potential_matrix(basis: &[BasisTerm], z: u32, table: &IntegralTable) -> Result<Matrix<BigRational>> {
    let phis: Vec<_> = basis.iter().map(|t| t.expression()).collect();
    build_symmetric(basis.len(), |i, j| table.integrate_plain(&potential_integrand(&phis[i], &phis[j], z)))
}

/// Symmetrized `∫ ∇1φi·∇2φj`, i.e. the matrix of p1·p2.
pub fn mass_polarization_matrix(basis: &[BasisTerm], table: &IntegralTable) -> Result<Matrix<BigRational>> {
    let d = derivs(basis);
    build_symmetric(basis.len(), |i, j| {
        let a = table.integrate_plain(&mass_polarization_integrand(&d[i], &d[j]))?;
        let b = table.integrate_plain(&mass_polarization_integrand(&d[j], &d[i]))?;
        Ok((a + b) / BigRational::from_integer(BigInt::from(2)))
    })
}

/// Exact k = 1 matrices of the nonrelativistic Hamiltonians.
#[derive(Debug, Clone)]
pub struct OperatorMatrices {
    pub basis: Vec<BasisTerm>,
    pub z: u32,
    /// W; scales as k⁻⁶ (absorbed into the coefficient normalization).
    pub overlap: Matrix<BigRational>,
    /// (p1² + p2²)/2; scales as k².
    pub kinetic: Matrix<BigRational>,
    /// -Z/r1 - Z/r2 + 1/r12; scales as k.
    pub potential: Matrix<BigRational>,
    /// p1·p2; scales as k².
    pub mass_polarization: Matrix<BigRational>,
}

impl OperatorMatrices {
    pub fn assemble(basis: &[BasisTerm], z: u32, table: &IntegralTable) -> Result<Self> {
        let ops = OperatorMatrices {
            basis: basis.to_vec(),
            z,
            overlap: overlap_matrix(basis, table)?,
            kinetic: kinetic_matrix(basis, table)?,
            potential: potential_matrix(basis, z, table)?,
            mass_polarization: mass_polarization_matrix(basis, table)?,
        };
        ops.sanity()?;
        Ok(ops)
    }

    fn sanity(&self) -> Result<()> {
        for i in 0..self.basis.len() {
            if *self.overlap.get(i, i) <= BigRational::zero() {
                return Err(Error::Assembly(format!("overlap diagonal {i} is not positive")));
            }
            if *self.kinetic.get(i, i) <= BigRational::zero() {
                return Err(Error::Assembly(format!("kinetic diagonal {i} is not positive")));
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.basis.len()
    }

    /// Leading `m × m` blocks, equal to the matrices of the first `m` terms.
    pub fn leading(&self, m: usize) -> Self {
        OperatorMatrices {
            basis: self.basis[..m].to_vec(),
            z: self.z,
            overlap: self.overlap.leading(m),
            kinetic: self.kinetic.leading(m),
            potential: self.potential.leading(m),
            mass_polarization: self.mass_polarization.leading(m),
        }
    }

    /// Kinetic operator of the chosen Hamiltonian at k = 1: T, or
    /// (1 + 1/M) T + p1·p2 / M with nuclear motion.
    pub fn kinetic_total(&self, mass_ratio: Option<&Real>, bits: usize) -> RealMatrix {
        let t = to_real(&self.kinetic, bits);
        match mass_ratio {
            None => t,
            Some(m) => {
                let inv = Real::one(bits) / m;
                let a = Real::one(bits) + &inv;
                t.combine(&a, &to_real(&self.mass_polarization, bits), &inv)
            }
        }
    }
}

pub fn to_real(m: &Matrix<BigRational>, bits: usize) -> RealMatrix {
    m.map(|x| Real::from_ratio(x, bits))
}

pub fn closed_to_real(m: &Matrix<ClosedForm>, bits: usize) -> RealMatrix {
    m.map(|x| x.evaluate(bits))
}

/// Matrices of the operators entering the relativistic and radiative
/// corrections.
#[derive(Debug, Clone)]
pub struct CorrectionOperators {
    /// ∫ φi φj δ(r1) dτ / (4π); scales as k³ relative to W.
    pub delta_r1: Matrix<BigRational>,
    /// ∫ φi φj δ(r12) dτ / (4π).
    pub delta_r12: Matrix<BigRational>,
    /// ∫ Δ1φi Δ1φj (full range, divide-by-π² convention); scales as k⁴.
    pub p4: Matrix<ClosedForm>,
    /// Symmetrized ln u part of ⟨(ln u + γ)/u² n̂·∇_{r12}⟩; scales as k³.
    pub log_momentum: Matrix<ClosedForm>,
    /// Symmetrized matrix multiplying (γ - ln k) in the same operator.
    pub log_momentum_plain: Matrix<BigRational>,
}

impl CorrectionOperators {
    pub fn assemble(basis: &[BasisTerm], table: &IntegralTable) -> Result<Self> {
        let n = basis.len();
        let d = derivs(basis);
        let g: Vec<_> = d.iter().map(laplacian_numerator).collect();
        let delta_r1 = build_symmetric(n, |i, j| Ok(gamma_moment(basis[i].grade() + basis[j].grade() + 2)))?;
        let delta_r12 = build_symmetric(n, |i, j| {
            let (a, b) = (basis[i], basis[j]);
            if a.m == 0 && a.n == 0 && b.m == 0 && b.n == 0 {
                // ∫ r² (2r)^L e^{-4r} dr
                let l = a.l + b.l;
                let num = (BigInt::one() << l as usize) * (1..=(l as u64 + 2)).fold(BigInt::one(), |acc, k| acc * k);
                let den = BigInt::one() << (2 * (l as usize + 3));
                Ok(BigRational::new(num, den))
            } else {
                Ok(BigRational::zero())
            }
        })?;
        let p4 = build_symmetric(n, |i, j| table.integrate(&p4_integrand(&g[i], &g[j]), IntegralKind::Corner))?;
        let half = BigRational::new(BigInt::one(), BigInt::from(2));
        let log_pair = |i: usize, j: usize| -> Result<(ClosedForm, BigRational)> {
            let ij = log_momentum_integrand(&d[i].phi, &d[j]);
            let ji = log_momentum_integrand(&d[j].phi, &d[i]);
            let mut lg = table.integrate(&ij, IntegralKind::Log)?;
            lg.add_scaled(&table.integrate(&ji, IntegralKind::Log)?, &BigRational::one());
            let pl = table.integrate_plain(&ij)? + table.integrate_plain(&ji)?;
            Ok((lg.scale(&half), pl * &half))
        };
        let pairs = build_symmetric(n, log_pair)?;
        Ok(CorrectionOperators {
            delta_r1,
            delta_r12,
            p4,
            log_momentum: pairs.map(|(l, _)| l.clone()),
            log_momentum_plain: pairs.map(|(_, p)| p.clone()),
        })
    }
}

/// Ground-state expectation values feeding the corrections.
#[derive(Debug, Clone)]
pub struct ExpectationSet {
    pub delta_r1: Real,
    pub delta_r12: Real,
    /// ⟨p1⁴⟩ = ⟨p2⁴⟩.
    pub p4: Real,
    /// ⟨(ln r12 + γ)/r12² · i n̂·p⟩ with p = -i ∇_{r12}.
    pub log_momentum: Real,
}

/// Checks `π² cᵀ W c = 1`.
pub fn check_normalized(ops: &OperatorMatrices, coeffs: &[Real]) -> Result<()> {
    let bits = coeffs[0].precision();
    let pi = Real::pi(bits);
    let norm = to_real(&ops.overlap, bits).quadratic_form(coeffs) * (&pi * &pi);
    let dev = (&norm - &Real::one(bits)).abs().to_f64();
    if !(dev <= 1e-20) {
        return Err(Error::NotNormalized { norm: norm.to_f64() });
    }
    Ok(())
}

/// ⟨δ(r1)⟩ and ⟨δ(r12)⟩ at scale k for coefficients normalized as
/// `π² cᵀ W c = 1`.
pub fn delta_expectations(
    ops: &OperatorMatrices,
    corr: &CorrectionOperators,
    coeffs: &[Real],
    k: &Real,
) -> Result<(Real, Real)> {
    check_normalized(ops, coeffs)?;
    let bits = k.precision();
    let factor = Real::pi(bits).ldexp(2) * k.powi(3);
    let d1 = to_real(&corr.delta_r1, bits).quadratic_form(coeffs) * &factor;
    let d12 = to_real(&corr.delta_r12, bits).quadratic_form(coeffs) * &factor;
    Ok((d1, d12))
}

pub fn p4_expectation(ops: &OperatorMatrices, corr: &CorrectionOperators, coeffs: &[Real], k: &Real) -> Result<Real> {
    check_normalized(ops, coeffs)?;
    let bits = k.precision();
    let pi = Real::pi(bits);
    Ok(closed_to_real(&corr.p4, bits).quadratic_form(coeffs) * (&pi * &pi) * k.powi(4))
}

/// `gamma` is the constant inside the operator; the closed forms carry
/// their own exact Euler constant.
pub fn log_momentum_expectation(
    ops: &OperatorMatrices,
    corr: &CorrectionOperators,
    coeffs: &[Real],
    k: &Real,
    gamma: &Real,
) -> Result<Real> {
    check_normalized(ops, coeffs)?;
    let bits = k.precision();
    let pi = Real::pi(bits);
    let lg = closed_to_real(&corr.log_momentum, bits).quadratic_form(coeffs);
    let pl = to_real(&corr.log_momentum_plain, bits).quadratic_form(coeffs);
    Ok((lg + pl * (gamma - &k.ln())) * (&pi * &pi) * k.powi(3))
}

pub fn expectation_set(
    ops: &OperatorMatrices,
    corr: &CorrectionOperators,
    coeffs: &[Real],
    k: &Real,
    gamma: &Real,
) -> Result<ExpectationSet> {
    let (delta_r1, delta_r12) = delta_expectations(ops, corr, coeffs, k)?;
    Ok(ExpectationSet {
        delta_r1,
        delta_r12,
        p4: p4_expectation(ops, corr, coeffs, k)?,
        log_momentum: log_momentum_expectation(ops, corr, coeffs, k, gamma)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::enumerate_basis;
    use crate::real::bits_for_digits;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn single_term_matrices() {
        let table = IntegralTable::new();
        let b = enumerate_basis(1).unwrap();
        let ops = OperatorMatrices::assemble(&b, 2, &table).unwrap();
        // W = π² · 1, ⟨T⟩ = k², ⟨V⟩ = -27/8 k, no p1·p2 for a product state
        assert_eq!(*ops.overlap.get(0, 0), r(1, 1));
        assert_eq!(*ops.kinetic.get(0, 0), r(1, 1));
        assert_eq!(*ops.potential.get(0, 0), r(-27, 8));
        assert!(ops.mass_polarization.get(0, 0).is_zero());
        let ops1 = OperatorMatrices::assemble(&b, 1, &table).unwrap();
        assert_eq!(*ops1.potential.get(0, 0), r(-11, 8));
    }

    #[test]
    fn repulsion_alone_is_five_eighths() {
        let table = IntegralTable::new();
        let phi = BasisTerm::new(0, 0, 0).expression();
        let rep = &(&phi * &phi) * &poly(&[((2, 0, 0), 1), ((0, 2, 0), -1)]);
        assert_eq!(table.integrate_plain(&rep).unwrap(), r(5, 8));
    }

    #[test]
    fn symmetric_and_nested() {
        let table = IntegralTable::new();
        let b = enumerate_basis(13).unwrap();
        let ops = OperatorMatrices::assemble(&b, 2, &table).unwrap();
        assert!(ops.overlap.is_symmetric());
        assert!(ops.kinetic.is_symmetric());
        assert!(ops.potential.is_symmetric());
        assert!(ops.mass_polarization.is_symmetric());
        let small = OperatorMatrices::assemble(&b[..7], 2, &table).unwrap();
        assert_eq!(ops.leading(7).overlap, small.overlap);
        assert_eq!(ops.leading(7).mass_polarization, small.mass_polarization);
    }

    #[test]
    fn hydrogenic_expectations() {
        let bits = bits_for_digits(40);
        let table = IntegralTable::new();
        let b = enumerate_basis(1).unwrap();
        let ops = OperatorMatrices::assemble(&b, 2, &table).unwrap();
        let corr = CorrectionOperators::assemble(&b, &table).unwrap();
        let c = vec![Real::one(bits) / Real::pi(bits)];
        let k = Real::from_f64(1.6875, bits);
        let set = expectation_set(&ops, &corr, &c, &k, &Real::euler_gamma(bits)).unwrap();
        let pi = std::f64::consts::PI;
        let k3 = 1.6875f64.powi(3);
        assert!((set.delta_r1.to_f64() - k3 / pi).abs() < 1e-14);
        assert!((set.delta_r12.to_f64() - k3 / (8.0 * pi)).abs() < 1e-14);
        assert!((set.p4.to_f64() - 5.0 * 1.6875f64.powi(4)).abs() < 1e-12);
        let unnorm = vec![Real::one(bits)];
        assert!(matches!(p4_expectation(&ops, &corr, &unnorm, &k), Err(Error::NotNormalized { .. })));
    }
}
