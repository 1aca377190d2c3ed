//! Linear variational problem at fixed k and the optimization of k.
//!
//! With the coefficients fixed, E(k) = K k² + P k where K and P are the
//! Rayleigh ratios of the kinetic and potential matrices at k = 1, so the
//! best k for those coefficients is -P/(2K). The optimal k is the fixed
//! point of k -> -P(c(k))/(2K(c(k))).

use serde::{Deserialize, Serialize};

use crate::basis::enumerate_basis_with;
use crate::config::{decimal_real, KUpdate, PhysicalConstants, RunConfig};
use crate::error::{Error, Result};
use crate::integrals::IntegralTable;
use crate::linalg::{residual, Eigenpair, RealMatrix, ReducedBasis};
use crate::operators::{to_real, OperatorMatrices};
use crate::real::Real;

/// Lowest variational state at the optimized scaling parameter.
#[derive(Debug, Clone)]
pub struct VariationalResult {
    pub energy: Real,
    pub k_opt: Real,
    /// Normalized so that the scaled wave function has unit norm,
    /// `π² cᵀ W c = 1`.
    pub coeffs: Vec<Real>,
    pub n_basis: usize,
    pub nuclear_motion: bool,
    /// Number of eigen-solves.
    pub iterations: usize,
    /// `max |(H - E W) c| / ‖H‖_F` at the final solve.
    pub residual: f64,
    /// Distance from the ground to the first excited eigenvalue.
    pub spectral_gap: Option<f64>,
    /// Kinetic and potential Rayleigh ratios at k = 1.
    pub kinetic_ratio: Real,
    pub potential_ratio: Real,
    pub trace: Vec<TracePoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub k: f64,
    pub energy: f64,
    /// -P/(2K) - k for the coefficients at this k.
    pub step: f64,
}

impl VariationalResult {
    /// Rayleigh quotient of the stored coefficients at another k.
    pub fn energy_at(&self, k: &Real) -> Real {
        &(&self.kinetic_ratio * &(k * k)) + &(&self.potential_ratio * k)
    }
}

/// A Hamiltonian with its overlap Cholesky factor and both reduced
/// matrices precomputed, so each solve at a new k costs one
/// tridiagonalization.
pub struct ScaledProblem {
    basis: ReducedBasis,
    reduced_kinetic: RealMatrix,
    reduced_potential: RealMatrix,
    kinetic: RealMatrix,
    potential: RealMatrix,
    overlap: RealMatrix,
    digits: u32,
    bits: usize,
    nuclear_motion: bool,
}

struct Solve {
    energy: Real,
    coeffs: Vec<Real>,
    kinetic: Real,
    potential: Real,
    residual: f64,
    gap: Option<f64>,
}

impl ScaledProblem {
    /// `mass_ratio = None` gives the infinite-mass Hamiltonian.
    pub fn new(ops: &OperatorMatrices, mass_ratio: Option<&Real>, digits: u32, bits: usize) -> Result<Self> {
        let overlap = to_real(&ops.overlap, bits);
        let kinetic = ops.kinetic_total(mass_ratio, bits);
        let potential = to_real(&ops.potential, bits);
        let basis = ReducedBasis::new(&overlap, digits)?;
        Ok(ScaledProblem {
            reduced_kinetic: basis.reduce(&kinetic),
            reduced_potential: basis.reduce(&potential),
            basis,
            kinetic,
            potential,
            overlap,
            digits,
            bits,
            nuclear_motion: mass_ratio.is_some(),
        })
    }

    fn solve(&self, k: &Real) -> Result<Solve> {
        let k2 = k * k;
        let c = self.reduced_kinetic.combine(&k2, &self.reduced_potential, k);
        let Eigenpair { value, vector, gap } = self.basis.lowest(&c);
        let h = self.kinetic.combine(&k2, &self.potential, k);
        let res = residual(&h, &self.overlap, &value, &vector) / h.frobenius_norm();
        let res = res.to_f64();
        let threshold = 10f64.powi(-(self.digits as i32 - 10));
        if !(res <= threshold) {
            return Err(Error::Residual { value: res, threshold });
        }
        let gap = gap.map(|g| g.to_f64());
        if let Some(g) = gap {
            if g < 1e-20 {
                return Err(Error::Assembly(format!("lowest eigenvalue is degenerate (gap {g:e})")));
            }
        }
        let kinetic = self.kinetic.quadratic_form(&vector);
        let potential = self.potential.quadratic_form(&vector);
        Ok(Solve { energy: value, coeffs: vector, kinetic, potential, residual: res, gap })
    }

    /// Lowest eigenpair at fixed k; coefficients satisfy `π² cᵀ W c = 1`.
    pub fn solve_fixed_k(&self, k: &Real) -> Result<(Real, Vec<Real>)> {
        let s = self.solve(k)?;
        let pi = Real::pi(self.bits);
        Ok((s.energy, s.coeffs.iter().map(|c| c / &pi).collect()))
    }

    pub fn optimize_k(&self, config: &RunConfig) -> Result<VariationalResult> {
        let bits = self.bits;
        let tol = config.k_tol;
        let mut trace = Vec::new();
        let step_of = |s: &Solve, k: &Real| -> Result<Real> {
            if !s.kinetic.is_positive() {
                return Err(Error::Assembly(format!("kinetic Rayleigh ratio {} is not positive", s.kinetic.to_f64())));
            }
            Ok(-(&s.potential / &s.kinetic.ldexp(1)) - k)
        };
        let mut k = decimal_real(config.k_init, bits);
        let mut prev: Option<(Real, Real)> = None;
        for iteration in 1..=config.max_outer_iters {
            let s = self.solve(&k)?;
            let g = step_of(&s, &k)?;
            trace.push(TracePoint { k: k.to_f64(), energy: s.energy.to_f64(), step: g.to_f64() });
            if g.abs().to_f64() <= tol {
                let pi = Real::pi(bits);
                return Ok(VariationalResult {
                    energy: s.energy,
                    k_opt: k,
                    coeffs: s.coeffs.iter().map(|c| c / &pi).collect(),
                    n_basis: self.overlap.n(),
                    nuclear_motion: self.nuclear_motion,
                    iterations: iteration,
                    residual: s.residual,
                    spectral_gap: s.gap,
                    kinetic_ratio: s.kinetic,
                    potential_ratio: s.potential,
                    trace,
                });
            }
            let next = match (config.k_update, &prev) {
                (KUpdate::Secant, Some((k0, g0))) if g0 != &g => &k - &(&g * &(&k - k0) / &(&g - g0)),
                (KUpdate::Secant, _) => &k + &g,
                (KUpdate::FixedPoint { damping }, _) => &k + &(&g * &Real::from_f64(damping, bits)),
            };
            let next = if next.is_positive() { next } else { k.ldexp(-1) };
            prev = Some((k, g));
            k = next;
        }
        let last = trace.last().copied().unwrap_or(TracePoint { k: f64::NAN, energy: f64::NAN, step: f64::NAN });
        Err(Error::Convergence {
            iterations: config.max_outer_iters,
            last_k: last.k,
            last_step: last.step.abs(),
            trace: trace.iter().map(|p| (p.k, p.energy)).collect(),
        })
    }
}

/// Lowest eigenpair of `[k² T_tot + k V] c = E W c`.
pub fn solve_fixed_k(
    ops: &OperatorMatrices,
    k: &Real,
    nuclear_motion: bool,
    constants: &PhysicalConstants,
    digits: u32,
) -> Result<(Real, Vec<Real>)> {
    let bits = k.precision();
    let m = constants.mass_ratio_real(bits);
    ScaledProblem::new(ops, nuclear_motion.then_some(&m), digits, bits)?.solve_fixed_k(k)
}

pub fn optimize_k(
    ops: &OperatorMatrices,
    config: &RunConfig,
    constants: &PhysicalConstants,
    nuclear_motion: bool,
) -> Result<VariationalResult> {
    let bits = config.bits();
    let m = constants.mass_ratio_real(bits);
    ScaledProblem::new(ops, nuclear_motion.then_some(&m), config.precision_digits, bits)?.optimize_k(config)
}

/// (E∞ result, E0 result) for `config.n_basis`, each with its own k.
pub fn ground_state_pair(config: &RunConfig, constants: &PhysicalConstants) -> Result<(VariationalResult, VariationalResult)> {
    config.validate()?;
    constants.validate()?;
    let basis = enumerate_basis_with(config.n_basis, config.ordering)?;
    let table = IntegralTable::new();
    let ops = OperatorMatrices::assemble(&basis, constants.z, &table)?;
    ground_state_pair_with(&ops, config, constants)
}

pub fn ground_state_pair_with(
    ops: &OperatorMatrices,
    config: &RunConfig,
    constants: &PhysicalConstants,
) -> Result<(VariationalResult, VariationalResult)> {
    let inf = optimize_k(ops, config, constants, false)?;
    let fin = optimize_k(ops, config, constants, true)?;
    Ok((inf, fin))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::enumerate_basis;
    use crate::config::default_constants;

    fn ops(n: usize) -> OperatorMatrices {
        OperatorMatrices::assemble(&enumerate_basis(n).unwrap(), 2, &IntegralTable::new()).unwrap()
    }

    #[test]
    fn single_term_fixed_k() {
        let cfg = RunConfig::default();
        let bits = cfg.bits();
        let c = default_constants();
        let (e, _) = solve_fixed_k(&ops(1), &Real::from_f64(1.6875, bits), false, &c, 50).unwrap();
        assert_eq!(e, Real::from_f64(-2.84765625, bits));
        let (e, _) = solve_fixed_k(&ops(1), &Real::one(bits), false, &c, 50).unwrap();
        assert_eq!(e, Real::from_f64(-2.375, bits));
    }

    #[test]
    fn single_term_optimum() {
        let cfg = RunConfig::default();
        let r = optimize_k(&ops(1), &cfg, &default_constants(), false).unwrap();
        assert!((r.k_opt.to_f64() - 1.6875).abs() < 1e-12);
        assert!((r.energy.to_f64() + 2.84765625).abs() < 1e-14);
        // E(k*) = -K k*²
        let virial = -(&r.kinetic_ratio * &(&r.k_opt * &r.k_opt));
        assert!((virial - &r.energy).abs().to_f64() < 1e-20);
    }

    #[test]
    fn secant_and_fixed_point_agree() {
        let o = ops(7);
        let c = default_constants();
        let sec = optimize_k(&o, &RunConfig::default(), &c, false).unwrap();
        let mut fp = RunConfig::default();
        fp.k_update = KUpdate::FixedPoint { damping: 1.0 };
        fp.k_tol = 1e-9;
        fp.max_outer_iters = 20_000;
        let plain = optimize_k(&o, &fp, &c, false).unwrap();
        assert!((sec.k_opt.to_f64() - plain.k_opt.to_f64()).abs() < 1e-6);
        assert!(sec.iterations < plain.iterations);
    }

    #[test]
    fn nonconvergence_carries_trace() {
        let mut cfg = RunConfig::default();
        cfg.max_outer_iters = 2;
        cfg.k_update = KUpdate::FixedPoint { damping: 0.01 };
        match optimize_k(&ops(3), &cfg, &default_constants(), false) {
            Err(Error::Convergence { iterations, trace, .. }) => {
                assert_eq!(iterations, 2);
                assert_eq!(trace.len(), 2);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
