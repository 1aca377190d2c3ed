//! Checks that do not go through the integral engine: basis functions
//! evaluated at explicit electron positions, finite-difference
//! derivatives, and the single-term screened-hydrogen closed forms.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;

use crate::basis::BasisTerm;
use crate::error::{Error, Result};
use crate::operators::{
    kinetic_integrand, laplacian_numerator, mass_polarization_integrand, potential_integrand,
    relative_gradient_integrand, volume, Derivatives,
};

type Vec3 = [f64; 3];

fn norm(v: Vec3) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn axpy(a: Vec3, h: f64, d: Vec3) -> Vec3 {
    [a[0] + h * d[0], a[1] + h * d[1], a[2] + h * d[2]]
}

fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

const AXES: [Vec3; 3] = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElectronConfiguration {
    pub r1: Vec3,
    pub r2: Vec3,
}

impl ElectronConfiguration {
    pub fn new(r1: Vec3, r2: Vec3) -> Result<Self> {
        let c = ElectronConfiguration { r1, r2 };
        if !r1.iter().chain(&r2).all(|x| x.is_finite()) {
            return Err(Error::validation("electron configuration", "non-finite component"));
        }
        if c.r1_len() <= 0.0 || c.r2_len() <= 0.0 || c.r12_len() <= 0.0 {
            return Err(Error::validation("electron configuration", "coincident particles"));
        }
        Ok(c)
    }

    pub fn r1_len(&self) -> f64 {
        norm(self.r1)
    }

    pub fn r2_len(&self) -> f64 {
        norm(self.r2)
    }

    pub fn r12_len(&self) -> f64 {
        norm(sub(self.r1, self.r2))
    }

    /// (s, t, u) = (r1 + r2, r2 - r1, r12).
    pub fn hylleraas(&self) -> (f64, f64, f64) {
        let (a, b) = (self.r1_len(), self.r2_len());
        (a + b, b - a, self.r12_len())
    }

    /// Unit vector along r1 - r2.
    pub fn n_hat(&self) -> Vec3 {
        let d = sub(self.r1, self.r2);
        let u = norm(d);
        [d[0] / u, d[1] / u, d[2] / u]
    }

    /// Reproducible points in a box of half-width `extent`, keeping every
    /// interparticle distance at least `min_distance`.
    pub fn sample(count: usize, seed: u64, extent: f64, min_distance: f64) -> Vec<Self> {
        let mut rng = StdRng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(count);
        while out.len() < count {
            let mut v = || [0; 3].map(|_: i32| rng.gen_range(-extent..extent));
            let c = ElectronConfiguration { r1: v(), r2: v() };
            if c.r1_len() >= min_distance && c.r2_len() >= min_distance && c.r12_len() >= min_distance {
                out.push(c);
            }
        }
        out
    }
}

/// `s^l t^{2m} u^n e^{-k s}` evaluated from Cartesian positions.
pub fn phi_cartesian(term: BasisTerm, r1: Vec3, r2: Vec3, k: f64) -> f64 {
    let (a, b) = (norm(r1), norm(r2));
    let (s, t, u) = (a + b, b - a, norm(sub(r1, r2)));
    s.powi(term.l as i32) * t.powi(2 * term.m as i32) * u.powi(term.n as i32) * (-k * s).exp()
}

/// Central difference with one Richardson step, error O(h⁴).
fn richardson_first<F: Fn(f64) -> f64>(f: F, h: f64) -> f64 {
    let d = |h: f64| (f(h) - f(-h)) / (2.0 * h);
    (4.0 * d(h / 2.0) - d(h)) / 3.0
}

fn richardson_second<F: Fn(f64) -> f64>(f: F, h: f64) -> f64 {
    let f0 = f(0.0);
    let d = |h: f64| (f(h) - 2.0 * f0 + f(-h)) / (h * h);
    (4.0 * d(h / 2.0) - d(h)) / 3.0
}

const GRAD_STEP: f64 = 1e-3;
const LAPLACIAN_STEP: f64 = 1e-2;

/// Gradients of φ with respect to r1 and r2 by finite differences.
pub fn gradients_fd(term: BasisTerm, c: &ElectronConfiguration) -> (Vec3, Vec3) {
    let g1 = AXES.map(|e| richardson_first(|h| phi_cartesian(term, axpy(c.r1, h, e), c.r2, 1.0), GRAD_STEP));
    let g2 = AXES.map(|e| richardson_first(|h| phi_cartesian(term, c.r1, axpy(c.r2, h, e), 1.0), GRAD_STEP));
    (g1, g2)
}

/// Δ1 φ from the 7-point stencil, Richardson-extrapolated.
pub fn laplacian_fd(term: BasisTerm, c: &ElectronConfiguration) -> f64 {
    AXES.iter()
        .map(|&e| richardson_second(|h| phi_cartesian(term, axpy(c.r1, h, e), c.r2, 1.0), LAPLACIAN_STEP))
        .sum()
}

/// n̂·∇_{r12} φ with ∇_{r12} = (∇1 - ∇2)/2: the derivative along a move
/// that stretches r12 without moving the centre of the pair.
pub fn relative_gradient_fd(term: BasisTerm, c: &ElectronConfiguration) -> f64 {
    let n = c.n_hat();
    richardson_first(|h| phi_cartesian(term, axpy(c.r1, h / 2.0, n), axpy(c.r2, -h / 2.0, n), 1.0), GRAD_STEP)
}

/// An (s,t,u) integrand paired with the Cartesian quantity it claims to
/// represent. Pair integrands carry the reduced volume element, which is
/// 4 r1 r2 r12 in Cartesian terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Probe {
    Overlap(BasisTerm, BasisTerm),
    Potential(BasisTerm, BasisTerm, u32),
    Kinetic(BasisTerm, BasisTerm),
    MassPolarization(BasisTerm, BasisTerm),
    Laplacian(BasisTerm),
    RelativeGradient(BasisTerm),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeValue {
    pub reduced: f64,
    pub cartesian: f64,
}

impl ProbeValue {
    pub fn relative_deviation(&self) -> f64 {
        let scale = self.reduced.abs().max(self.cartesian.abs());
        if scale == 0.0 {
            0.0
        } else {
            (self.reduced - self.cartesian).abs() / scale
        }
    }
}

fn probe_one(probe: Probe, c: &ElectronConfiguration) -> ProbeValue {
    let (s, t, u) = c.hylleraas();
    let (a, b, r12) = (c.r1_len(), c.r2_len(), c.r12_len());
    let weight = 4.0 * a * b * r12;
    let phi = |x: BasisTerm| phi_cartesian(x, c.r1, c.r2, 1.0);
    match probe {
        Probe::Overlap(i, j) => ProbeValue {
            reduced: (&(&i.expression() * &j.expression()) * &volume()).eval_f64(s, t, u),
            cartesian: phi(i) * phi(j) * weight,
        },
        Probe::Potential(i, j, z) => {
            let z = z as f64;
            ProbeValue {
                reduced: potential_integrand(&i.expression(), &j.expression(), z as u32).eval_f64(s, t, u),
                cartesian: phi(i) * phi(j) * (-z / a - z / b + 1.0 / r12) * weight,
            }
        }
        Probe::Kinetic(i, j) => {
            let (gi1, gi2) = gradients_fd(i, c);
            let (gj1, gj2) = gradients_fd(j, c);
            ProbeValue {
                reduced: kinetic_integrand(&Derivatives::for_term(i), &Derivatives::for_term(j)).eval_f64(s, t, u),
                cartesian: 0.5 * (dot(gi1, gj1) + dot(gi2, gj2)) * weight,
            }
        }
        Probe::MassPolarization(i, j) => {
            let (gi1, _) = gradients_fd(i, c);
            let (_, gj2) = gradients_fd(j, c);
            ProbeValue {
                reduced: mass_polarization_integrand(&Derivatives::for_term(i), &Derivatives::for_term(j))
                    .eval_f64(s, t, u),
                cartesian: dot(gi1, gj2) * weight,
            }
        }
        Probe::Laplacian(i) => ProbeValue {
            reduced: laplacian_numerator(&Derivatives::for_term(i)).eval_f64(s, t, u) / (u * (s - t)),
            cartesian: laplacian_fd(i, c),
        },
        Probe::RelativeGradient(i) => ProbeValue {
            reduced: relative_gradient_integrand(&Derivatives::for_term(i)).eval_f64(s, t, u) / (u * (s * s - t * t)),
            cartesian: relative_gradient_fd(i, c),
        },
    }
}

pub fn cartesian_probe(probe: Probe, points: &[ElectronConfiguration]) -> Vec<ProbeValue> {
    points.par_iter().map(|c| probe_one(probe, c)).collect()
}

/// Closed forms for the normalized product state `e^{-k(r1 + r2)}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HydrogenicReference {
    pub k: f64,
    pub z: u32,
    /// E(k) = k² - (2Z - 5/8) k.
    pub energy: f64,
    /// k* = Z - 5/16.
    pub k_star: f64,
    pub energy_at_k_star: f64,
    pub delta_r1: f64,
    pub delta_r12: f64,
    pub p4: f64,
}

pub fn hydrogenic_reference(k: f64, z: u32) -> HydrogenicReference {
    let zf = z as f64;
    let pi = std::f64::consts::PI;
    let k_star = zf - 5.0 / 16.0;
    HydrogenicReference {
        k,
        z,
        energy: k * k - (2.0 * zf - 5.0 / 8.0) * k,
        k_star,
        energy_at_k_star: -k_star * k_star,
        delta_r1: k.powi(3) / pi,
        delta_r12: k.powi(3) / (8.0 * pi),
        p4: 5.0 * k.powi(4),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn screening_values() {
        let r = hydrogenic_reference(27.0 / 16.0, 2);
        assert_eq!(r.energy, -2.84765625);
        assert_eq!(r.k_star, 1.6875);
        assert_eq!(hydrogenic_reference(1.0, 3).p4, 5.0);
        assert!((hydrogenic_reference(2.0, 2).delta_r1 - 8.0 / std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn coordinates() {
        let c = ElectronConfiguration::new([1.0, 0.0, 0.0], [0.0, 2.0, 0.0]).unwrap();
        let (s, t, u) = c.hylleraas();
        assert_eq!((s, t), (3.0, 1.0));
        assert!((u - 5f64.sqrt()).abs() < 1e-15);
        assert!(ElectronConfiguration::new([0.0; 3], [1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn sampling_is_reproducible() {
        let a = ElectronConfiguration::sample(5, 7, 2.0, 0.3);
        assert_eq!(a, ElectronConfiguration::sample(5, 7, 2.0, 0.3));
        assert!(a.iter().all(|c| c.r12_len() >= 0.3));
    }

    #[test]
    fn radial_laplacian_of_exponential() {
        // Δ e^{-r} = (1 - 2/r) e^{-r}; the r2 factor is a constant here.
        let c = ElectronConfiguration::new([0.6, -0.3, 0.2], [1.0, 1.0, -0.5]).unwrap();
        let r1 = c.r1_len();
        let expected = (1.0 - 2.0 / r1) * (-(r1 + c.r2_len())).exp();
        let got = laplacian_fd(BasisTerm { l: 0, m: 0, n: 0 }, &c);
        assert!((got - expected).abs() < 1e-8 * expected.abs());
    }
}
