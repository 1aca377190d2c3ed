//! Breit α² and radiative α³ corrections to the nonrelativistic energy.

use crate::config::PhysicalConstants;
use crate::operators::ExpectationSet;
use crate::real::Real;

/// Order-α² terms. E2 (retardation) and E3 (spin-orbit) are identically
/// zero for this state and kept for reporting.
#[derive(Debug, Clone)]
pub struct BreitTerms {
    pub e1: Real,
    pub e2: Real,
    pub e3: Real,
    pub e4: Real,
    pub e5: Real,
    pub delta_e2: Real,
}

#[derive(Debug, Clone)]
pub struct RadiativeTerms {
    pub r3_nuclear: Real,
    pub r3_contact: Real,
    pub r3_logmom: Real,
    pub delta_e3: Real,
}

#[derive(Debug, Clone)]
pub struct CorrectionBreakdown {
    pub breit: BreitTerms,
    pub radiative: RadiativeTerms,
    pub e0: Real,
    pub e_total: Real,
    /// Half the α³ correction.
    pub uncertainty: Real,
    pub delta_vs_experiment: Real,
}

impl CorrectionBreakdown {
    pub fn delta_e2(&self) -> &Real {
        &self.breit.delta_e2
    }

    pub fn delta_e3(&self) -> &Real {
        &self.radiative.delta_e3
    }
}

fn int(v: i64, bits: usize) -> Real {
    Real::from_i64(v, bits)
}

fn frac(n: i64, d: i64, bits: usize) -> Real {
    int(n, bits) / int(d, bits)
}

/// E1 = -(α²/8)(⟨p1⁴⟩ + ⟨p2⁴⟩), E4 = πα²(Z⟨δ(r1)⟩ - ⟨δ(r12)⟩),
/// E5 = 2πα²⟨δ(r12)⟩.
pub fn breit_correction(exp: &ExpectationSet, constants: &PhysicalConstants, bits: usize) -> BreitTerms {
    let zero = Real::zero(bits);
    let alpha = constants.alpha_real(bits);
    let a2 = &alpha * &alpha;
    let pi = Real::pi(bits);
    let z = int(constants.z as i64, bits);
    let e1 = -(&a2.ldexp(-3) * &exp.p4.ldexp(1));
    let e4 = &(&pi * &a2) * &(&(&z * &exp.delta_r1) - &exp.delta_r12);
    let e5 = &(&pi * &a2).ldexp(1) * &exp.delta_r12;
    let delta_e2 = &(&(&(&e1 + &zero) + &zero) + &e4) + &e5;
    BreitTerms { e1, e2: zero.clone(), e3: zero, e4, e5, delta_e2 }
}

/// The three α³ terms: nuclear contact with the Bethe logarithm, the
/// electron-electron contact, and the (ln r12 + γ)/r12² momentum term.
pub fn radiative_correction(exp: &ExpectationSet, constants: &PhysicalConstants, bits: usize) -> RadiativeTerms {
    let zero = Real::zero(bits);
    if constants.alpha == 0.0 {
        return RadiativeTerms { r3_nuclear: zero.clone(), r3_contact: zero.clone(), r3_logmom: zero.clone(), delta_e3: zero };
    }
    let alpha = constants.alpha_real(bits);
    let a3 = &alpha * &(&alpha * &alpha);
    let ln_a = alpha.ln();
    let beta = constants.bethe_beta_real(bits);
    let z = int(constants.z as i64, bits);
    let pi = Real::pi(bits);
    let nuclear_coef = &(&z * &frac(4, 3, bits)) * &(&(&(-ln_a.ldexp(1)) - &beta) + &frac(19, 30, bits));
    let r3_nuclear = &(&a3 * &nuclear_coef) * &exp.delta_r1.ldexp(1);
    let contact_coef = &(&frac(14, 3, bits) * &ln_a) + &frac(164, 15, bits);
    let r3_contact = &(&a3 * &contact_coef) * &exp.delta_r12;
    let r3_logmom = &(&a3 * &(int(7, bits) / (int(3, bits) * &pi))) * &exp.log_momentum;
    let delta_e3 = &(&r3_nuclear + &r3_contact) + &r3_logmom;
    RadiativeTerms { r3_nuclear, r3_contact, r3_logmom, delta_e3 }
}

/// E = E0 + δE⁽²⁾ + δE⁽³⁾ with uncertainty |δE⁽³⁾|/2.
pub fn total_energy(e0: &Real, breit: BreitTerms, radiative: RadiativeTerms, constants: &PhysicalConstants) -> CorrectionBreakdown {
    let bits = e0.precision();
    let e_total = &(e0 + &breit.delta_e2) + &radiative.delta_e3;
    let uncertainty = radiative.delta_e3.abs().ldexp(-1);
    let e_exp = crate::config::decimal_real(constants.e_exp, bits);
    let delta_vs_experiment = &e_total - &e_exp;
    CorrectionBreakdown { breit, radiative, e0: e0.clone(), e_total, uncertainty, delta_vs_experiment }
}

pub fn corrections(e0: &Real, exp: &ExpectationSet, constants: &PhysicalConstants) -> CorrectionBreakdown {
    let bits = e0.precision();
    total_energy(e0, breit_correction(exp, constants, bits), radiative_correction(exp, constants, bits), constants)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::default_constants;
    use crate::real::bits_for_digits;

    fn sample(bits: usize) -> ExpectationSet {
        ExpectationSet {
            delta_r1: Real::from_f64(1.8097, bits),
            delta_r12: Real::from_f64(0.10649, bits),
            p4: Real::from_f64(54.0577, bits),
            log_momentum: Real::from_f64(-0.4912, bits),
        }
    }

    #[test]
    fn invariants() {
        let bits = bits_for_digits(50);
        let c = default_constants();
        let e0 = Real::from_f64(-2.9033, bits);
        let b = corrections(&e0, &sample(bits), &c);
        assert!(b.breit.e2.is_zero() && b.breit.e3.is_zero());
        let sum = &(&(&(&b.breit.e1 + &b.breit.e2) + &b.breit.e3) + &b.breit.e4) + &b.breit.e5;
        assert_eq!(sum, b.breit.delta_e2);
        assert_eq!(b.uncertainty, b.radiative.delta_e3.abs().ldexp(-1));
        assert!(b.breit.e1.is_negative() && b.breit.e4.is_positive() && b.breit.e5.is_positive());
        assert!(b.breit.delta_e2.is_negative() && b.radiative.delta_e3.is_positive());
    }

    #[test]
    fn zero_alpha() {
        let bits = bits_for_digits(40);
        let mut c = default_constants();
        c.alpha = 0.0;
        let b = corrections(&Real::from_f64(-2.9, bits), &sample(bits), &c);
        assert!(b.breit.delta_e2.is_zero());
        assert!(b.radiative.delta_e3.is_zero());
    }

    #[test]
    fn contact_term_is_linear() {
        let bits = bits_for_digits(40);
        let c = default_constants();
        let mut s = sample(bits);
        let e5 = breit_correction(&s, &c, bits).e5;
        s.delta_r12 = s.delta_r12.ldexp(1);
        assert_eq!(breit_correction(&s, &c, bits).e5, e5.ldexp(1));
    }
}
