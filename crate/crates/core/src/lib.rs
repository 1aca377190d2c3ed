//! Helium ground state from a Hylleraas variational basis.
//!
//! Basis functions `s^l t^{2m} u^n e^{-ks}` in the coordinates
//! `s = r1 + r2`, `t = r2 - r1`, `u = r12`. Matrix elements are exact
//! rationals (or closed forms in `ln 2`, `γ`, `π²`) at k = 1; the
//! generalized eigenproblem is solved at arbitrary precision with k tuned
//! to its variational optimum, for both an infinite and a finite nuclear
//! mass. Order-α² Breit and α³ radiative corrections are then added to
//! the finite-mass energy.
//!
//! ```
//! use hylleraas::config::{default_constants, RunConfig};
//! use hylleraas::solver::ground_state_pair;
//!
//! let config = RunConfig { n_basis: 3, precision_digits: 40, ..RunConfig::default() };
//! let (e_inf, e0) = ground_state_pair(&config, &default_constants())?;
//! assert!(e_inf.energy.to_f64() < e0.energy.to_f64());
//! # Ok::<(), hylleraas::error::Error>(())
//! ```
//!
//! The guide in `book/` walks through each stage; its code blocks run as
//! doc-tests of this crate.

pub mod basis;
pub mod config;
pub mod corrections;
pub mod error;
pub mod integrals;
pub mod linalg;
pub mod operators;
pub mod oracles;
pub mod real;
pub mod report;
pub mod solver;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/coordinates.md")]
    mod coordinates {}
    #[doc = include_str!("../../../book/src/integrals.md")]
    mod integrals {}
    #[doc = include_str!("../../../book/src/eigenproblem.md")]
    mod eigenproblem {}
    #[doc = include_str!("../../../book/src/corrections.md")]
    mod corrections {}
    #[doc = include_str!("../../../book/src/verification.md")]
    mod verification {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
